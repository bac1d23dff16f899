//! Frontier `Γ(D)` and rate surface `R(D, E)` by multistart alternating
//! optimization: optimal-decoder update, then a projected-gradient step on
//! the channel rows over `{rows in the simplex, linear distortion <= D}`.
//!
//! For a fixed decoder the equivocation is concave and the rate convex in
//! the channel, so each inner problem is convex; the multistarts search over
//! decoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::eval::{Eval, Metrics, Scratch};
use super::problem::{BoundType, PrivacyProblem, RegionPoint, SolverConfig};
use crate::error::{Error, Result};
use crate::prob::Channel;

const FEAS_TOL: f64 = 1e-12;
const IMPROVE_TOL: f64 = 1e-10;
const MAX_DECODER_ROUNDS: usize = 20;

/// Channel rows are shared by groups of encoder inputs: every `x` in the
/// unrestricted search, every `x` with the same public part in the
/// Markov-restricted search.
#[derive(Debug, Clone)]
struct Param {
    group: Vec<usize>,
    ng: usize,
    weight: Vec<f64>,
    nu: usize,
}

impl Param {
    fn full(ev: &Eval) -> Self {
        Param {
            group: (0..ev.nx).collect(),
            ng: ev.nx,
            weight: ev.px.clone(),
            nu: ev.nu,
        }
    }

    fn markov(ev: &Eval) -> Self {
        let mut weight = vec![0.0; ev.nr];
        for x in 0..ev.nx {
            weight[ev.r_of[x]] += ev.px[x];
        }
        Param {
            group: ev.r_of.clone(),
            ng: ev.nr,
            weight,
            nu: ev.nu,
        }
    }

    fn expand(&self, m: &[f64], c: &mut [f64]) {
        let nu = self.nu;
        for (x, &g) in self.group.iter().enumerate() {
            c[x * nu..(x + 1) * nu].copy_from_slice(&m[g * nu..(g + 1) * nu]);
        }
    }

    fn reduce(&self, gc: &[f64], gm: &mut [f64]) {
        let nu = self.nu;
        gm.iter_mut().for_each(|v| *v = 0.0);
        for (x, &g) in self.group.iter().enumerate() {
            for u in 0..nu {
                gm[g * nu + u] += gc[x * nu + u];
            }
        }
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(y: &[f64], out: &mut [f64], buf: &mut Vec<f64>) {
    buf.clear();
    buf.extend_from_slice(y);
    buf.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &v) in buf.iter().enumerate() {
        cum += v;
        let t = (cum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    for (o, &v) in out.iter_mut().zip(y) {
        *o = (v - theta).max(0.0);
    }
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
}

#[derive(Debug, Clone, Copy)]
enum Objective {
    /// Minimize `-E`.
    NegEquivocation,
    /// Minimize `R + w (E_t - E)_+^2`.
    Penalized { e_target: f64, weight: f64 },
}

#[derive(Debug, Clone)]
struct Candidate {
    m: Vec<f64>,
    metrics: Metrics,
}

struct Solver<'a> {
    ev: &'a Eval,
    param: Param,
    d: f64,
    s: Scratch,
    c: Vec<f64>,
    gc: Vec<f64>,
    ge: Vec<f64>,
    ac: Vec<f64>,
    buf: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(ev: &'a Eval, param: Param, d: f64) -> Self {
        let n = ev.nx * ev.nu;
        Solver {
            ev,
            param,
            d,
            s: ev.scratch(),
            c: vec![0.0; n],
            gc: vec![0.0; n],
            ge: vec![0.0; n],
            ac: vec![0.0; n],
            buf: Vec::new(),
        }
    }

    fn metrics(&mut self, m: &[f64]) -> Metrics {
        self.param.expand(m, &mut self.c);
        self.ev.metrics(&self.c, &mut self.s)
    }

    fn d_ok(&mut self, m: &[f64]) -> bool {
        self.metrics(m).distortion <= self.d + FEAS_TOL
    }

    /// Objective value; with `grad`, also its gradient in parameter space and
    /// the distortion coefficients of the optimal decoder at `m`.
    fn objective(
        &mut self,
        obj: Objective,
        m: &[f64],
        grad: Option<(&mut [f64], &mut [f64])>,
    ) -> f64 {
        self.param.expand(m, &mut self.c);
        self.ev.accumulate(&self.c, &mut self.s);
        let e = self.ev.equivocation(&self.s);
        let (val, scale_e) = match obj {
            Objective::NegEquivocation => (-e, -1.0),
            Objective::Penalized { e_target, weight } => {
                let viol = (e_target - e).max(0.0);
                let r = self.ev.rate(&self.c, &self.s);
                (r + weight * viol * viol, -2.0 * weight * viol)
            }
        };
        if let Some((gm, am)) = grad {
            self.gc.iter_mut().for_each(|v| *v = 0.0);
            if let Objective::Penalized { .. } = obj {
                self.ev.grad_rate(&self.c, &self.s, &mut self.gc);
            }
            if scale_e != 0.0 {
                self.ev.grad_equivocation(&self.s, &mut self.ge);
                for (g, e) in self.gc.iter_mut().zip(&self.ge) {
                    *g += scale_e * e;
                }
            }
            self.param.reduce(&self.gc, gm);
            self.ev.decode(&mut self.s);
            self.ev.distortion_coeffs(&self.s.dec, &mut self.ac);
            self.param.reduce(&self.ac, am);
        }
        val
    }

    /// `out = argmin sum_g w_g |m_g - y_g|^2` over simplex rows with `a . m <= d`,
    /// via bisection on the multiplier of the distortion constraint.
    fn project(&mut self, y: &[f64], a: &[f64], out: &mut [f64]) -> bool {
        let nu = self.param.nu;
        let weight = &self.param.weight;
        let buf = &mut self.buf;
        let mut row = vec![0.0; nu];
        let mut apply = |nu_mult: f64, out: &mut [f64]| -> f64 {
            let mut total = 0.0;
            for g in 0..self.param.ng {
                let yr = &y[g * nu..(g + 1) * nu];
                let ar = &a[g * nu..(g + 1) * nu];
                if weight[g] > 0.0 {
                    for u in 0..nu {
                        row[u] = yr[u] - nu_mult * ar[u] / weight[g];
                    }
                } else {
                    row.copy_from_slice(yr);
                }
                let o = &mut out[g * nu..(g + 1) * nu];
                project_simplex(&row, o, buf);
                total += o.iter().zip(ar).map(|(p, a)| p * a).sum::<f64>();
            }
            total
        };
        if apply(0.0, out) <= self.d {
            return true;
        }
        let mut hi = 1.0;
        while apply(hi, out) > self.d {
            hi *= 2.0;
            if hi > 1e15 {
                return false;
            }
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if apply(mid, out) > self.d {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        apply(hi, out) <= self.d
    }

    /// Projected-gradient descent with Armijo backtracking, re-solving the
    /// decoder at every iterate.
    fn descend(&mut self, obj: Objective, m: &mut Vec<f64>, cfg: &SolverConfig) {
        let n = m.len();
        let nu = self.param.nu;
        let mut gm = vec![0.0; n];
        let mut am = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut t: f64 = 1.0;
        let mut stall = 0;
        for _ in 0..cfg.max_iters {
            let val = self.objective(obj, m, Some((&mut gm, &mut am)));
            let mut accepted = None;
            for _ in 0..60 {
                for g in 0..self.param.ng {
                    let w = self.param.weight[g];
                    for u in 0..nu {
                        let k = g * nu + u;
                        y[k] = if w > 0.0 { m[k] - t * gm[k] / w } else { m[k] };
                    }
                }
                if self.project(&y, &am, &mut next) {
                    let lin: f64 = gm
                        .iter()
                        .zip(next.iter().zip(m.iter()))
                        .map(|(g, (a, b))| g * (a - b))
                        .sum();
                    let new_val = self.objective(obj, &next, None);
                    if new_val <= val + 1e-4 * lin.min(0.0) && new_val <= val {
                        accepted = Some(new_val);
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-20 {
                    break;
                }
            }
            let Some(new_val) = accepted else { break };
            std::mem::swap(m, &mut next);
            t = (t * 2.0).min(1e6);
            if val - new_val <= cfg.inner_tolerance * (1.0 + val.abs()) {
                stall += 1;
                if stall >= 3 {
                    break;
                }
            } else {
                stall = 0;
            }
        }
    }

    fn one_hot_rows(&self, pick: impl Fn(usize) -> usize) -> Vec<f64> {
        let nu = self.param.nu;
        let mut m = vec![0.0; self.param.ng * nu];
        for g in 0..self.param.ng {
            m[g * nu + pick(g).min(nu - 1)] = 1.0;
        }
        m
    }

    /// Public part of the first encoder input in each group.
    fn group_public(&self) -> Vec<usize> {
        let mut r = vec![0; self.param.ng];
        for x in (0..self.ev.nx).rev() {
            r[self.param.group[x]] = self.ev.r_of[x];
        }
        r
    }

    fn mix(a: &[f64], b: &[f64], theta: f64) -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (1.0 - theta) * x + theta * y)
            .collect()
    }

    /// Largest-`theta` point on the segment from a feasible `from` toward `to`
    /// found by bisection against `ok`.
    fn push_toward(
        &mut self,
        from: &[f64],
        to: &[f64],
        mut ok: impl FnMut(&mut Self, &[f64]) -> bool,
    ) -> Vec<f64> {
        let end = to.to_vec();
        if ok(self, &end) {
            return end;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if ok(self, &Self::mix(from, to, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self::mix(from, to, lo)
    }

    fn random_rows(&self, rng: &mut ChaCha8Rng, markov: bool) -> Vec<f64> {
        let nu = self.param.nu;
        let mut by_public: Vec<Vec<f64>> = Vec::new();
        if markov {
            for _ in 0..self.ev.nr {
                by_public.push(dirichlet(rng, nu));
            }
        }
        let pubs = self.group_public();
        let mut m = Vec::with_capacity(self.param.ng * nu);
        for g in 0..self.param.ng {
            if markov {
                m.extend_from_slice(&by_public[pubs[g]]);
            } else {
                m.extend(dirichlet(rng, nu));
            }
        }
        m
    }

    fn candidate(&mut self, m: Vec<f64>) -> Candidate {
        let metrics = self.metrics(&m);
        Candidate { m, metrics }
    }

    fn gamma(&mut self, cfg: &SolverConfig, warm: &[Vec<f64>]) -> Result<Candidate> {
        let d = self.d;
        let constant = self.one_hot_rows(|_| 0);
        let cst = self.candidate(constant.clone());
        if cst.metrics.distortion <= d + FEAS_TOL {
            return Ok(cst);
        }
        let min_d = self.ev.min_distortion();
        if d < min_d - FEAS_TOL {
            return Err(Error::Infeasible {
                reason: format!("distortion {d} is below the minimum achievable {min_d}"),
                gamma_estimate: None,
            });
        }
        let pubs = self.group_public();
        let reveal = self.one_hot_rows(|g| pubs[g]);
        if !self.d_ok(&reveal) {
            return Err(Error::Infeasible {
                reason: format!(
                    "no channel with |U| = {} reaches distortion {d}",
                    self.param.nu
                ),
                gamma_estimate: None,
            });
        }
        // smallest reveal weight that meets the constraint
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.d_ok(&Self::mix(&constant, &reveal, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let anchor = Self::mix(&constant, &reveal, hi);

        let mut starts = vec![anchor.clone()];
        for w in warm {
            if w.len() == anchor.len() && self.d_ok(w) {
                starts.push(w.clone());
            }
        }
        for i in 1..cfg.multistarts {
            let st = self.start_point(i, cfg, &anchor);
            starts.push(st);
        }

        let mut best: Option<Candidate> = None;
        for start in starts {
            let Some(cand) = self.gamma_from(start, cfg) else {
                continue;
            };
            if best
                .as_ref()
                .map_or(true, |b| cand.metrics.equivocation > b.metrics.equivocation)
            {
                best = Some(cand);
            }
        }
        let mut best = best.expect("the anchor is feasible");
        // single-cell decoder moves from the best point
        'rounds: for _ in 0..MAX_DECODER_ROUNDS {
            for nb in self.decoder_neighbours(&best.m) {
                if let Some(cand) = self.gamma_from(nb, cfg) {
                    if cand.metrics.equivocation > best.metrics.equivocation + IMPROVE_TOL {
                        best = cand;
                        continue 'rounds;
                    }
                }
            }
            break;
        }
        Ok(best)
    }

    /// Ascend from a feasible start; falls back to the start if the end point
    /// is infeasible.
    fn gamma_from(&mut self, start: Vec<f64>, cfg: &SolverConfig) -> Option<Candidate> {
        let mut m = start.clone();
        self.descend(Objective::NegEquivocation, &mut m, cfg);
        let cand = self.candidate(m);
        if cand.metrics.distortion <= self.d + FEAS_TOL {
            return Some(cand);
        }
        let cand = self.candidate(start);
        (cand.metrics.distortion <= self.d + FEAS_TOL).then_some(cand)
    }

    /// Distortion coefficients of `dec` in parameter space.
    fn coeffs_for(&mut self, dec: &[usize]) -> Vec<f64> {
        self.ev.distortion_coeffs(dec, &mut self.ac);
        let mut am = vec![0.0; self.param.ng * self.param.nu];
        self.param.reduce(&self.ac, &mut am);
        am
    }

    /// Start `i` of a multistart: random rows (shared across inputs with the
    /// same public part for odd `i`), made feasible either by projecting onto
    /// the constraint of a random decoder or by mixing toward `base`.
    fn start_point(&mut self, i: usize, cfg: &SolverConfig, base: &[f64]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(i as u64));
        let r = self.random_rows(&mut rng, i % 2 == 1);
        if i % 4 >= 2 {
            let dec: Vec<usize> = (0..self.ev.nu * self.ev.nz)
                .map(|_| rng.random_range(0..self.ev.nxh))
                .collect();
            let am = self.coeffs_for(&dec);
            let mut out = vec![0.0; r.len()];
            if self.project(&r, &am, &mut out) && self.d_ok(&out) {
                return out;
            }
        }
        self.push_toward(base, &r, |s, m| s.d_ok(m))
    }

    /// Feasible points obtained by changing the decoder at `m` in one cell
    /// and projecting `m` onto that decoder's distortion constraint.
    fn decoder_neighbours(&mut self, m: &[f64]) -> Vec<Vec<f64>> {
        self.param.expand(m, &mut self.c);
        self.ev.accumulate(&self.c, &mut self.s);
        self.ev.decode(&mut self.s);
        let dec = self.s.dec.clone();
        let mut out = Vec::new();
        for k in 0..dec.len() {
            for xh in 0..self.ev.nxh {
                if xh == dec[k] {
                    continue;
                }
                let mut g = dec.clone();
                g[k] = xh;
                let am = self.coeffs_for(&g);
                let mut p = vec![0.0; m.len()];
                if self.project(m, &am, &mut p) && self.d_ok(&p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn de_ok(&mut self, m: &[f64], e_target: f64) -> bool {
        let mt = self.metrics(m);
        mt.distortion <= self.d + FEAS_TOL && mt.equivocation >= e_target - FEAS_TOL
    }

    /// Minimum rate at equivocation `>= e_target`, given a feasible frontier channel.
    fn rate(
        &mut self,
        e_target: f64,
        gamma_m: &[f64],
        cfg: &SolverConfig,
        warm: &[Vec<f64>],
    ) -> Candidate {
        let mut best = self.candidate(gamma_m.to_vec());
        let mut starts = vec![gamma_m.to_vec()];
        for w in warm {
            if w.len() == gamma_m.len() && self.de_ok(w, e_target) {
                let c = self.candidate(w.clone());
                if c.metrics.rate < best.metrics.rate {
                    best = c;
                }
                starts.push(w.clone());
            }
        }
        for i in 1..cfg.multistarts {
            let st = self.start_point(i, cfg, gamma_m);
            starts.push(st);
        }
        for start in starts {
            if let Some(c) = self.rate_from(start, e_target, gamma_m, cfg) {
                if c.metrics.rate < best.metrics.rate {
                    best = c;
                }
            }
        }
        'rounds: for _ in 0..MAX_DECODER_ROUNDS {
            for nb in self.decoder_neighbours(&best.m) {
                if let Some(c) = self.rate_from(nb, e_target, gamma_m, cfg) {
                    if c.metrics.rate < best.metrics.rate - IMPROVE_TOL {
                        best = c;
                        continue 'rounds;
                    }
                }
            }
            break;
        }
        best
    }

    /// Anneal the penalty from a distortion-feasible start, then walk toward
    /// the frontier channel until both constraints hold.
    fn rate_from(
        &mut self,
        start: Vec<f64>,
        e_target: f64,
        gamma_m: &[f64],
        cfg: &SolverConfig,
    ) -> Option<Candidate> {
        let mut m = start;
        for &weight in &cfg.penalty_weight_schedule {
            self.descend(Objective::Penalized { e_target, weight }, &mut m, cfg);
        }
        if !self.de_ok(&m, e_target) {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if self.de_ok(&Self::mix(&m, gamma_m, mid), e_target) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            m = Self::mix(&m, gamma_m, hi);
            if !self.de_ok(&m, e_target) {
                return None;
            }
        }
        Some(self.candidate(m))
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn to_point(prob: &PrivacyProblem, ev: &Eval, c: Vec<f64>) -> Result<RegionPoint> {
    let channel = Channel::normalized(prob.encoder_inputs(), prob.u_axis(), c)?;
    let mut s = ev.scratch();
    let m = ev.metrics(channel.matrix(), &mut s);
    Ok(RegionPoint {
        rate: m.rate,
        distortion: m.distortion,
        equivocation: m.equivocation,
        bound_type: BoundType::Achievable,
        channel,
        decoder: s.dec,
    })
}

fn expand_full(ev: &Eval, param: &Param, m: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; ev.nx * ev.nu];
    param.expand(m, &mut c);
    c
}

fn check_d(d: f64) -> Result<()> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::OutOfRange {
            what: "distortion",
            value: d,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

fn eval_for(prob: &PrivacyProblem, c: &Channel) -> Result<(Eval, Scratch)> {
    prob.check_channel(c)?;
    let ev = Eval::new(prob)?;
    let mut s = ev.scratch();
    ev.accumulate(c.matrix(), &mut s);
    Ok((ev, s))
}

/// `H(X_h | U, Z)` of the joint law extended by `c`.
pub fn equivocation(prob: &PrivacyProblem, c: &Channel) -> Result<f64> {
    let (ev, s) = eval_for(prob, c)?;
    Ok(ev.equivocation(&s))
}

/// `I(X_h X_r; U) - I(Z; U)`.
pub fn rate_objective(prob: &PrivacyProblem, c: &Channel) -> Result<f64> {
    let (ev, s) = eval_for(prob, c)?;
    Ok(ev.rate(c.matrix(), &s))
}

/// Bayes decoder `g(u, z)`, flattened as `decoder[u * n_z + z]`.
pub fn optimal_decoder(prob: &PrivacyProblem, c: &Channel) -> Result<Vec<usize>> {
    let (ev, mut s) = eval_for(prob, c)?;
    ev.decode(&mut s);
    Ok(s.dec)
}

/// Rate, distortion under the optimal decoder, and equivocation of `c`.
pub fn evaluate(prob: &PrivacyProblem, c: &Channel) -> Result<RegionPoint> {
    prob.check_channel(c)?;
    let ev = Eval::new(prob)?;
    to_point(prob, &ev, c.matrix().to_vec())
}

fn gamma_with(
    ev: &Eval,
    param: Param,
    d: f64,
    cfg: &SolverConfig,
    warm: &[Vec<f64>],
) -> Result<Vec<f64>> {
    Ok(Solver::new(ev, param, d).gamma(cfg, warm)?.m)
}

/// Maximal equivocation over channels whose optimal-decoder distortion is at most `d`.
///
/// The returned point is achievable, so its equivocation is a lower bound on `Γ(d)`.
pub fn gamma_of_d(prob: &PrivacyProblem, d: f64, cfg: &SolverConfig) -> Result<RegionPoint> {
    cfg.validate()?;
    check_d(d)?;
    let ev = Eval::new(prob)?;
    let m = gamma_with(&ev, Param::full(&ev), d, cfg, &[])?;
    to_point(prob, &ev, m)
}

/// `Γ(d)` over channels that see only the public attributes.
pub fn markov_gamma_of_d(prob: &PrivacyProblem, d: f64, cfg: &SolverConfig) -> Result<RegionPoint> {
    cfg.validate()?;
    check_d(d)?;
    let ev = Eval::new(prob)?;
    let param = Param::markov(&ev);
    let m = gamma_with(&ev, param.clone(), d, cfg, &[])?;
    to_point(prob, &ev, expand_full(&ev, &param, &m))
}

fn check_e(prob: &PrivacyProblem, e: f64) -> Result<()> {
    let hi = prob.private_entropy();
    if !(e >= 0.0 && e <= hi + FEAS_TOL) {
        return Err(Error::OutOfRange {
            what: "equivocation",
            value: e,
            lo: 0.0,
            hi,
        });
    }
    Ok(())
}

/// Rate search at one `(d, e)` for one parametrization.
struct RateJob<'a> {
    ev: &'a Eval,
    param: Param,
    d: f64,
    e_eff: f64,
    gamma_m: &'a [f64],
}

impl RateJob<'_> {
    fn run(&self, cfg: &SolverConfig, warm: &[Vec<f64>]) -> Vec<f64> {
        let mut solver = Solver::new(self.ev, self.param.clone(), self.d);
        solver.rate(self.e_eff, self.gamma_m, cfg, warm).m
    }
}

fn effective_target(prob: &PrivacyProblem, e: f64, gamma_e: f64) -> f64 {
    e.max(prob.min_equivocation()).min(gamma_e)
}

fn infeasible(e: f64, gamma_e: f64) -> Error {
    Error::Infeasible {
        reason: format!("equivocation {e} exceeds the frontier estimate {gamma_e}"),
        gamma_estimate: Some(gamma_e),
    }
}

/// Minimum rate with distortion at most `d` and equivocation at least `e`.
///
/// The search runs over all encoders `p(u | x_r, x_h)` and also considers the
/// best public-only encoder, so the result never exceeds
/// [`markov_restricted_solver`]. Equivocation targets below `H(X_h | X_r, Z)`
/// are raised to that level.
pub fn r_of_de(prob: &PrivacyProblem, d: f64, e: f64, cfg: &SolverConfig) -> Result<RegionPoint> {
    cfg.validate()?;
    check_d(d)?;
    check_e(prob, e)?;
    let ev = Eval::new(prob)?;
    let full = Param::full(&ev);
    let g = gamma_with(&ev, full.clone(), d, cfg, &[])?;
    let g_e = Solver::new(&ev, full.clone(), d).metrics(&g).equivocation;
    if e > g_e + FEAS_TOL {
        return Err(infeasible(e, g_e));
    }
    let e_eff = effective_target(prob, e, g_e);
    let mut extra = Vec::new();
    if let Ok(mk) = markov_rate(prob, &ev, d, e, cfg, &[], &[]) {
        extra.push(mk.1);
    }
    let job = RateJob {
        ev: &ev,
        param: full,
        d,
        e_eff,
        gamma_m: &g,
    };
    to_point(prob, &ev, job.run(cfg, &extra))
}

/// Markov rate search; returns `(markov params, expanded channel)`.
fn markov_rate(
    prob: &PrivacyProblem,
    ev: &Eval,
    d: f64,
    e: f64,
    cfg: &SolverConfig,
    gamma_warm: &[Vec<f64>],
    warm: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let param = Param::markov(ev);
    let g = gamma_with(ev, param.clone(), d, cfg, gamma_warm)?;
    let g_e = Solver::new(ev, param.clone(), d).metrics(&g).equivocation;
    if e > g_e + FEAS_TOL {
        return Err(infeasible(e, g_e));
    }
    let e_eff = effective_target(prob, e, g_e);
    let job = RateJob {
        ev,
        param: param.clone(),
        d,
        e_eff,
        gamma_m: &g,
    };
    let m = job.run(cfg, warm);
    let c = expand_full(ev, &param, &m);
    Ok((m, c, g))
}

/// [`r_of_de`] restricted to encoders `p(u | x_r)`, which make
/// `X_h - X_r - U` a Markov chain.
pub fn markov_restricted_solver(
    prob: &PrivacyProblem,
    d: f64,
    e: f64,
    cfg: &SolverConfig,
) -> Result<RegionPoint> {
    cfg.validate()?;
    check_d(d)?;
    check_e(prob, e)?;
    let ev = Eval::new(prob)?;
    let (_, c, _) = markov_rate(prob, &ev, d, e, cfg, &[], &[])?;
    to_point(prob, &ev, c)
}

/// One grid evaluation: the point, or the error that prevented it.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSample {
    pub distortion_target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivocation_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<RegionPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Frontier `Γ(D)` on the distortion grid plus the rate surface on `D x E`.
/// Surface points with `E` above the frontier estimate are reported as errors.
#[derive(Debug, Clone, Serialize)]
pub struct RegionCurve {
    pub boundary: Vec<RegionSample>,
    pub surface: Vec<RegionSample>,
}

fn check_sorted(what: &str, grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{what} grid must be finite and sorted"
        )));
    }
    Ok(())
}

/// Sweep the region on a `D x E` grid.
///
/// Each frontier solve is warm-started from the previous distortion and each
/// rate solve from its neighbours at smaller `D` and larger `E`, so the
/// reported `Γ` is non-decreasing in `D` and the reported rate is
/// non-increasing in `D` and non-decreasing in `E`.
pub fn region_curve(
    prob: &PrivacyProblem,
    d_grid: &[f64],
    e_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<RegionCurve> {
    cfg.validate()?;
    check_sorted("distortion", d_grid)?;
    check_sorted("equivocation", e_grid)?;
    let ev = Eval::new(prob)?;
    let full = Param::full(&ev);
    let ne = e_grid.len();
    let mut boundary = Vec::with_capacity(d_grid.len());
    let mut surface = Vec::with_capacity(d_grid.len() * ne);
    let mut prev_gamma: Option<Vec<f64>> = None;
    let mut prev_mgamma: Option<Vec<f64>> = None;
    let mut prev_row: Vec<Option<Vec<f64>>> = vec![None; ne];
    let mut prev_mrow: Vec<Option<Vec<f64>>> = vec![None; ne];

    let sample = |d: f64, e: Option<f64>, r: Result<RegionPoint>| match r {
        Ok(p) => RegionSample {
            distortion_target: d,
            equivocation_target: e,
            point: Some(p),
            error: None,
        },
        Err(err) => RegionSample {
            distortion_target: d,
            equivocation_target: e,
            point: None,
            error: Some(err.to_string()),
        },
    };

    for &d in d_grid {
        let warm: Vec<Vec<f64>> = prev_gamma.iter().cloned().collect();
        let g = check_d(d).and_then(|_| gamma_with(&ev, full.clone(), d, cfg, &warm));
        let g = match g {
            Ok(g) => g,
            Err(err) => {
                let msg = err.to_string();
                boundary.push(sample(d, None, Err(err)));
                for &e in e_grid {
                    surface.push(RegionSample {
                        distortion_target: d,
                        equivocation_target: Some(e),
                        point: None,
                        error: Some(msg.clone()),
                    });
                }
                continue;
            }
        };
        let g_e = Solver::new(&ev, full.clone(), d).metrics(&g).equivocation;
        boundary.push(sample(d, None, to_point(prob, &ev, g.clone())));

        let mwarm: Vec<Vec<f64>> = prev_mgamma.iter().cloned().collect();
        let mparam = Param::markov(&ev);
        let mg = gamma_with(&ev, mparam.clone(), d, cfg, &mwarm).ok();

        let mut row: Vec<Option<Vec<f64>>> = vec![None; ne];
        let mut mrow: Vec<Option<Vec<f64>>> = vec![None; ne];
        let mut samples: Vec<RegionSample> = Vec::with_capacity(ne);
        for j in (0..ne).rev() {
            let e = e_grid[j];
            if let Err(err) = check_e(prob, e) {
                samples.push(sample(d, Some(e), Err(err)));
                continue;
            }
            if e > g_e + FEAS_TOL {
                samples.push(sample(d, Some(e), Err(infeasible(e, g_e))));
                continue;
            }
            let e_eff = effective_target(prob, e, g_e);
            let mut extra: Vec<Vec<f64>> = Vec::new();
            if let Some(mg) = &mg {
                let mg_e = Solver::new(&ev, mparam.clone(), d).metrics(mg).equivocation;
                if e <= mg_e + FEAS_TOL {
                    let mwarm: Vec<Vec<f64>> =
                        [prev_mrow[j].clone(), mrow.get(j + 1).cloned().flatten()]
                            .into_iter()
                            .flatten()
                            .collect();
                    let job = RateJob {
                        ev: &ev,
                        param: mparam.clone(),
                        d,
                        e_eff: effective_target(prob, e, mg_e),
                        gamma_m: mg,
                    };
                    let m = job.run(cfg, &mwarm);
                    extra.push(expand_full(&ev, &mparam, &m));
                    mrow[j] = Some(m);
                }
            }
            extra.extend(prev_row[j].iter().cloned());
            if let Some(Some(next)) = row.get(j + 1) {
                extra.push(next.clone());
            }
            let job = RateJob {
                ev: &ev,
                param: full.clone(),
                d,
                e_eff,
                gamma_m: &g,
            };
            let m = job.run(cfg, &extra);
            samples.push(sample(d, Some(e), to_point(prob, &ev, m.clone())));
            row[j] = Some(m);
        }
        samples.reverse();
        surface.extend(samples);
        prev_gamma = Some(g);
        if mg.is_some() {
            prev_mgamma = mg;
        }
        prev_row = row;
        prev_mrow = mrow;
    }
    Ok(RegionCurve { boundary, surface })
}
