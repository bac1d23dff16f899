//! Exhaustive search over quantized channels on tiny alphabets.
//!
//! Every channel whose entries are multiples of `q` is evaluated exactly.
//! The quantized optimum is itself achievable, so it bounds the true optimum
//! from one side; rounding the true optimizer to the grid moves each row by
//! at most `q * floor(|U| / 2)` in total variation, which together with
//! continuity bounds for entropy gives the other side of the bracket.
//!
//! The scan enumerates all rows but the last two, then tabulates the
//! per-output-cell contributions of the last two rows so that each leaf costs
//! a handful of lookups. For privacy problems the first row is restricted to
//! non-increasing entries: relabelling `U` changes none of rate, equivocation
//! or decoded distortion.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{binary_entropy, Alphabet, Axis, Channel, DistortionSpec, JointPmf, Pmf, Role};
use crate::region::PrivacyProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct OracleConfig {
    pub quantization_step: f64,
    pub max_enumerations: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            quantization_step: 0.05,
            max_enumerations: 10_000_000,
        }
    }
}

impl OracleConfig {
    pub fn new(quantization_step: f64, max_enumerations: u64) -> Result<Self> {
        let c = OracleConfig {
            quantization_step,
            max_enumerations,
        };
        c.levels()?;
        Ok(c)
    }

    /// `1 / q` as an integer.
    pub fn levels(&self) -> Result<usize> {
        let q = self.quantization_step;
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::invalid(format!(
                "quantization step {q} must lie in (0, 1]"
            )));
        }
        let n = (1.0 / q).round();
        if (n * q - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "1/q must be an integer, got q = {q}"
            )));
        }
        if self.max_enumerations == 0 {
            return Err(Error::invalid("enumeration budget must be positive"));
        }
        Ok(n as usize)
    }
}

/// Result of one oracle query.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    /// Exact optimum over the quantized channels.
    pub value: f64,
    pub channel: Channel,
    pub quantization_step: f64,
    /// Channels evaluated (after symmetry reduction).
    pub enumeration_count: u64,
    /// Interval certain to contain the unquantized optimum.
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Number of ways to write `n` as an ordered sum of `parts` non-negative integers.
pub fn composition_count(n: usize, parts: usize) -> u128 {
    if parts == 0 {
        return 0;
    }
    // C(n + parts - 1, parts - 1)
    let k = (parts - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n as u128 + parts as u128 - 1 - i) / (i + 1);
    }
    c
}

fn compositions(n: usize, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left as u32);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k as u32);
            rec(left - k, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// Every `n_in x n_out` row-stochastic matrix with entries in `{0, q, 2q, ..., 1}`.
pub fn enumerate_channels(
    n_in: usize,
    n_out: usize,
    cfg: &OracleConfig,
) -> Result<impl Iterator<Item = Channel>> {
    let n = cfg.levels()?;
    if n_in == 0 || n_out == 0 {
        return Err(Error::invalid("channel dimensions must be positive"));
    }
    let per_row = composition_count(n, n_out);
    let count = per_row.checked_pow(n_in as u32).unwrap_or(u128::MAX);
    if count > cfg.max_enumerations as u128 {
        return Err(Error::BudgetExceeded {
            count,
            budget: cfg.max_enumerations,
        });
    }
    let comps = compositions(n, n_out);
    let input = Axis::new("x", Role::Public, Alphabet::indexed(n_in)?);
    let output = Axis::new("y", Role::Reconstruction, Alphabet::indexed(n_out)?);
    let mut idx = vec![0usize; n_in];
    let mut done = false;
    Ok(std::iter::from_fn(move || {
        if done {
            return None;
        }
        let m: Vec<f64> = idx
            .iter()
            .flat_map(|&k| comps[k].iter().map(|&v| v as f64 / n as f64))
            .collect();
        let c = Channel::from_parts_unchecked(vec![input.clone()], output.clone(), m);
        done = true;
        for d in (0..n_in).rev() {
            idx[d] += 1;
            if idx[d] < comps.len() {
                done = false;
                break;
            }
            idx[d] = 0;
        }
        Some(c)
    }))
}

fn xlogx(v: f64) -> f64 {
    if v > 0.0 {
        v * v.log2()
    } else {
        0.0
    }
}

/// Continuity of `H(A | B)` under a total-variation change `t` of the joint.
fn cond_entropy_modulus(t: f64, dim_a: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    t * (dim_a as f64).log2() + (1.0 + t) * binary_entropy(t / (1.0 + t))
}

/// Continuity of `H(A)` under a total-variation change `t`.
fn entropy_modulus(t: f64, dim: usize) -> f64 {
    if t <= 0.0 || dim <= 1 {
        return 0.0;
    }
    let d = dim as f64;
    if t >= 1.0 - 1.0 / d {
        return d.log2();
    }
    t * (d - 1.0).log2() + binary_entropy(t)
}

/// What the scan optimizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionQuery {
    /// Maximize equivocation at distortion `<= d`.
    Gamma { d: f64 },
    /// Minimize rate at distortion `<= d` and equivocation `>= e`.
    Rate { d: f64, e: f64 },
}

/// Scan rows: each is one channel row applied to a group of encoder inputs.
struct Rows {
    n_rows: usize,
    nz: usize,
    nh: usize,
    nr: usize,
    nu: usize,
    nxh: usize,
    /// `wh[(g * nh + h) * nz + z]`
    wh: Vec<f64>,
    /// `wr[(g * nr + r) * nz + z]`
    wr: Vec<f64>,
    wz: Vec<f64>,
    pg: Vec<f64>,
    h_z: f64,
    dist: Vec<f64>,
    /// Decode `u` as reconstruction `u` instead of the Bayes decoder.
    fixed_decoder: bool,
    symmetric: bool,
}

impl Rows {
    fn from_problem(prob: &PrivacyProblem, markov: bool) -> Result<Self> {
        let ev = crate::region::eval::Eval::new(prob)?;
        let group: Vec<usize> = if markov {
            ev.r_of.clone()
        } else {
            (0..ev.nx).collect()
        };
        let n_rows = if markov { ev.nr } else { ev.nx };
        let (nz, nh, nr) = (ev.nz, ev.nh, ev.nr);
        let mut wh = vec![0.0; n_rows * nh * nz];
        let mut wr = vec![0.0; n_rows * nr * nz];
        let mut wz = vec![0.0; n_rows * nz];
        let mut pg = vec![0.0; n_rows];
        for x in 0..ev.nx {
            let g = group[x];
            pg[g] += ev.px[x];
            for z in 0..nz {
                let p = ev.pxz[x * nz + z];
                wh[(g * nh + ev.h_of[x]) * nz + z] += p;
                wr[(g * nr + ev.r_of[x]) * nz + z] += p;
                wz[g * nz + z] += p;
            }
        }
        let h_z = -ev.pz.iter().map(|&p| xlogx(p)).sum::<f64>();
        Ok(Rows {
            n_rows,
            nz,
            nh,
            nr,
            nu: ev.nu,
            nxh: ev.nxh,
            wh,
            wr,
            wz,
            pg,
            h_z,
            dist: ev.dist,
            fixed_decoder: false,
            symmetric: true,
        })
    }

    /// Channels `p(x_hat | x)` for the plain rate-distortion problem.
    fn rate_distortion(p: &Pmf, d: &DistortionSpec) -> Result<Self> {
        let n = p.len();
        if d.rows() != n {
            return Err(Error::AlphabetMismatch {
                expected: n,
                found: d.rows(),
            });
        }
        let mut wh = vec![0.0; n * n];
        for x in 0..n {
            wh[x * n + x] = p.probs()[x];
        }
        Ok(Rows {
            n_rows: n,
            nz: 1,
            nh: n,
            nr: n,
            nu: d.cols(),
            nxh: d.cols(),
            wr: wh.clone(),
            wh,
            wz: p.probs().to_vec(),
            pg: p.probs().to_vec(),
            h_z: 0.0,
            dist: d.matrix().to_vec(),
            fixed_decoder: true,
            symmetric: false,
        })
    }

    fn span(&self) -> f64 {
        let hi = self.dist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.dist.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Optimum of one query: exact on the grid and relaxed by the rounding slack.
#[derive(Debug, Clone)]
struct Best {
    value: f64,
    relaxed: f64,
    leaf: Option<Vec<usize>>,
}

struct Scan<'a> {
    rows: &'a Rows,
    n: usize,
    comps: Vec<Vec<u32>>,
    row_h: Vec<f64>,
    fracs: Vec<f64>,
    choices: Vec<Vec<usize>>,
    queries: &'a [RegionQuery],
    slack_d: f64,
    slack_e: f64,
    best: Vec<Best>,
    count: u64,
}

const TOL: f64 = 1e-12;

impl<'a> Scan<'a> {
    fn new(rows: &'a Rows, queries: &'a [RegionQuery], cfg: &OracleConfig) -> Result<Self> {
        let n = cfg.levels()?;
        let comps = compositions(n, rows.nu);
        let fracs: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let row_h = comps
            .iter()
            .map(|c| c.iter().map(|&j| xlogx(fracs[j as usize])).sum())
            .collect();
        let mut choices = Vec::with_capacity(rows.n_rows);
        let mut first = true;
        for g in 0..rows.n_rows {
            if rows.pg[g] == 0.0 {
                choices.push(vec![0]);
                continue;
            }
            if first && rows.symmetric {
                let sym = (0..comps.len())
                    .filter(|&k| comps[k].windows(2).all(|w| w[0] >= w[1]))
                    .collect();
                choices.push(sym);
            } else {
                choices.push((0..comps.len()).collect());
            }
            first = false;
        }
        let count = choices
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX);
        if count > cfg.max_enumerations as u128 {
            return Err(Error::BudgetExceeded {
                count,
                budget: cfg.max_enumerations,
            });
        }
        let tau = cfg.quantization_step * (rows.nu / 2) as f64;
        let best = queries
            .iter()
            .map(|q| {
                let init = match q {
                    RegionQuery::Gamma { .. } => f64::NEG_INFINITY,
                    RegionQuery::Rate { .. } => f64::INFINITY,
                };
                Best {
                    value: init,
                    relaxed: init,
                    leaf: None,
                }
            })
            .collect();
        Ok(Scan {
            rows,
            n,
            comps,
            row_h,
            fracs,
            choices,
            queries,
            slack_d: tau * rows.span(),
            slack_e: cond_entropy_modulus(tau, rows.nh),
            best,
            count: 0,
        })
    }

    fn tau(&self) -> f64 {
        (self.rows.nu / 2) as f64 / self.n as f64
    }

    fn run(&mut self) {
        let r = self.rows;
        let (nu, nz) = (r.nu, r.nz);
        let mut sh = vec![0.0; r.nh * nu * nz];
        let mut sr = vec![0.0; r.nr * nu * nz];
        let mut sz = vec![0.0; nu * nz];
        let mut prefix = Vec::with_capacity(r.n_rows);
        let tail = r.n_rows.min(2);
        self.recurse(
            0,
            r.n_rows - tail,
            &mut prefix,
            &mut sh,
            &mut sr,
            &mut sz,
            0.0,
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        g: usize,
        stop: usize,
        prefix: &mut Vec<usize>,
        sh: &mut Vec<f64>,
        sr: &mut Vec<f64>,
        sz: &mut Vec<f64>,
        row_term: f64,
    ) {
        if g == stop {
            self.leaves(prefix, sh, sr, sz, row_term);
            return;
        }
        let r = self.rows;
        for ci in 0..self.choices[g].len() {
            let k = self.choices[g][ci];
            let comp = self.comps[k].clone();
            self.add_row(g, &comp, 1.0, sh, sr, sz);
            prefix.push(k);
            let rt = row_term + r.pg[g] * self.row_h[k];
            self.recurse(g + 1, stop, prefix, sh, sr, sz, rt);
            prefix.pop();
            self.add_row(g, &comp, -1.0, sh, sr, sz);
        }
    }

    fn add_row(
        &self,
        g: usize,
        comp: &[u32],
        sign: f64,
        sh: &mut [f64],
        sr: &mut [f64],
        sz: &mut [f64],
    ) {
        let r = self.rows;
        let (nu, nz) = (r.nu, r.nz);
        for u in 0..nu {
            let c = sign * self.fracs[comp[u] as usize];
            if c == 0.0 {
                continue;
            }
            for z in 0..nz {
                sz[u * nz + z] += c * r.wz[g * nz + z];
                for h in 0..r.nh {
                    sh[(h * nu + u) * nz + z] += c * r.wh[(g * r.nh + h) * nz + z];
                }
                for x in 0..r.nr {
                    sr[(x * nu + u) * nz + z] += c * r.wr[(g * r.nr + x) * nz + z];
                }
            }
        }
    }

    /// Tabulate the last two rows, then scan every pair of their compositions.
    fn leaves(&mut self, prefix: &[usize], sh: &[f64], sr: &[f64], sz: &[f64], row_term: f64) {
        let r = self.rows;
        let (nu, nz, n) = (r.nu, r.nz, self.n);
        let nrow = r.n_rows;
        let (a, b) = if nrow >= 2 {
            (Some(nrow - 2), nrow - 1)
        } else {
            (None, nrow - 1)
        };
        let w = n + 1;
        let mut te = vec![0.0; nu * w * w];
        let mut td = vec![0.0; nu * w * w];
        let mut thu = vec![0.0; nu * w * w];
        let ja_max = if a.is_some() { n } else { 0 };
        let mut vr = vec![0.0; r.nr];
        for u in 0..nu {
            for j1 in 0..=ja_max {
                let f1 = self.fracs[j1];
                for j2 in 0..=n {
                    let f2 = self.fracs[j2];
                    let (mut e, mut dd, mut hu) = (0.0, 0.0, 0.0);
                    for z in 0..nz {
                        let mut puz = sz[u * nz + z] + f2 * r.wz[b * nz + z];
                        if let Some(a) = a {
                            puz += f1 * r.wz[a * nz + z];
                        }
                        for h in 0..r.nh {
                            let mut v =
                                sh[(h * nu + u) * nz + z] + f2 * r.wh[(b * r.nh + h) * nz + z];
                            if let Some(a) = a {
                                v += f1 * r.wh[(a * r.nh + h) * nz + z];
                            }
                            e -= xlogx(v);
                        }
                        e += xlogx(puz);
                        hu -= xlogx(puz);
                        for (x, slot) in vr.iter_mut().enumerate() {
                            let mut v =
                                sr[(x * nu + u) * nz + z] + f2 * r.wr[(b * r.nr + x) * nz + z];
                            if let Some(a) = a {
                                v += f1 * r.wr[(a * r.nr + x) * nz + z];
                            }
                            *slot = v;
                        }
                        let cost = |xh: usize| -> f64 {
                            vr.iter()
                                .enumerate()
                                .map(|(x, v)| v * r.dist[x * r.nxh + xh])
                                .sum()
                        };
                        if r.fixed_decoder {
                            dd += cost(u);
                        } else if puz > 0.0 {
                            dd += (0..r.nxh).map(cost).fold(f64::INFINITY, f64::min);
                        }
                    }
                    let k = (u * w + j1) * w + j2;
                    te[k] = e.max(0.0);
                    td[k] = dd;
                    thu[k] = hu;
                }
            }
        }

        let ca: Vec<usize> = match a {
            Some(a) => self.choices[a].clone(),
            None => vec![usize::MAX],
        };
        let zero = vec![0u32; nu];
        let mut off = vec![0usize; nu];
        for &ka in &ca {
            let (ja, ha, pa) = if ka == usize::MAX {
                (&zero, 0.0, 0.0)
            } else {
                (
                    &self.comps[ka],
                    self.row_h[ka],
                    r.pg[a.expect("two tail rows")],
                )
            };
            for u in 0..nu {
                off[u] = (u * w + ja[u] as usize) * w;
            }
            let base = row_term + pa * ha - r.h_z;
            for &kb in &self.choices[b] {
                let jb = &self.comps[kb];
                let (mut e, mut dd, mut hu) = (0.0, 0.0, 0.0);
                for u in 0..nu {
                    let k = off[u] + jb[u] as usize;
                    e += te[k];
                    dd += td[k];
                    hu += thu[k];
                }
                let rate = (hu + base + r.pg[b] * self.row_h[kb]).max(0.0);
                self.count += 1;
                for (qi, q) in self.queries.iter().enumerate() {
                    let best = &mut self.best[qi];
                    match *q {
                        RegionQuery::Gamma { d } => {
                            if dd <= d + self.slack_d + TOL && e > best.relaxed {
                                best.relaxed = e;
                            }
                            if dd <= d + TOL && e > best.value {
                                best.value = e;
                                best.leaf = Some(leaf(prefix, ka, kb));
                            }
                        }
                        RegionQuery::Rate { d, e: et } => {
                            if rate < best.relaxed
                                && dd <= d + self.slack_d + TOL
                                && e >= et - self.slack_e - TOL
                            {
                                best.relaxed = rate;
                            }
                            if rate < best.value && dd <= d + TOL && e >= et - TOL {
                                best.value = rate;
                                best.leaf = Some(leaf(prefix, ka, kb));
                            }
                        }
                    }
                }
            }
        }
    }

    fn matrix(&self, leaf: &[usize]) -> Vec<f64> {
        leaf.iter()
            .flat_map(|&k| self.comps[k].iter().map(|&j| self.fracs[j as usize]))
            .collect()
    }
}

fn leaf(prefix: &[usize], ka: usize, kb: usize) -> Vec<usize> {
    let mut v = prefix.to_vec();
    if ka != usize::MAX {
        v.push(ka);
    }
    v.push(kb);
    v
}

/// Run several region queries in one scan.
///
/// With `markov` set, only encoders `p(u | x_r)` are enumerated. Queries
/// with no feasible grid channel come back as `Err(Infeasible)`.
pub fn oracle_region(
    prob: &PrivacyProblem,
    queries: &[RegionQuery],
    markov: bool,
    cfg: &OracleConfig,
) -> Result<Vec<Result<OracleReport>>> {
    let rows = Rows::from_problem(prob, markov)?;
    let mut scan = Scan::new(&rows, queries, cfg)?;
    scan.run();
    let tau = scan.tau();
    let nu = rows.nu;
    let h_max = prob.max_equivocation();
    let slack_r = cond_entropy_modulus(tau, nu) + entropy_modulus(tau, nu);
    let group: Vec<usize> = {
        let ev = crate::region::eval::Eval::new(prob)?;
        if markov {
            ev.r_of
        } else {
            (0..ev.nx).collect()
        }
    };
    let mut out = Vec::with_capacity(queries.len());
    for (q, best) in queries.iter().zip(&scan.best) {
        let Some(leaf) = &best.leaf else {
            out.push(Err(Error::Infeasible {
                reason: format!("no quantized channel satisfies {q:?}"),
                gamma_estimate: None,
            }));
            continue;
        };
        let rows_m = scan.matrix(leaf);
        let mut m = Vec::with_capacity(group.len() * nu);
        for &g in &group {
            m.extend_from_slice(&rows_m[g * nu..(g + 1) * nu]);
        }
        let channel = Channel::normalized(prob.encoder_inputs(), prob.u_axis(), m)?;
        let (lower_bound, upper_bound) = match q {
            RegionQuery::Gamma { .. } => (best.value, (best.relaxed + scan.slack_e).min(h_max)),
            RegionQuery::Rate { .. } => ((best.relaxed - slack_r).max(0.0), best.value),
        };
        out.push(Ok(OracleReport {
            value: best.value,
            channel,
            quantization_step: cfg.quantization_step,
            enumeration_count: scan.count,
            lower_bound,
            upper_bound,
        }));
    }
    Ok(out)
}

fn single(prob: &PrivacyProblem, q: RegionQuery, cfg: &OracleConfig) -> Result<OracleReport> {
    oracle_region(prob, &[q], false, cfg)?
        .pop()
        .expect("one query")
}

/// Quantized maximum of `H(X_h | U, Z)` over encoders `p(u | x_r, x_h)` with
/// optimal-decoder distortion at most `d`.
pub fn oracle_gamma(
    joint: &JointPmf,
    d: &DistortionSpec,
    distortion: f64,
    u_card: usize,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    let prob = PrivacyProblem::new(joint.clone(), d.clone(), Some(u_card))?;
    single(&prob, RegionQuery::Gamma { d: distortion }, cfg)
}

/// Quantized minimum of `I(X; U) - I(Z; U)` at distortion `<= d` and equivocation `>= e`.
pub fn oracle_rate(
    prob: &PrivacyProblem,
    distortion: f64,
    equivocation: f64,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    single(
        prob,
        RegionQuery::Rate {
            d: distortion,
            e: equivocation,
        },
        cfg,
    )
}

/// Quantized minimum of `I(X; X_hat)` over channels with `E d(X, X_hat) <= D`.
pub fn oracle_rd(
    p: &Pmf,
    d: &DistortionSpec,
    distortion: f64,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    let rows = Rows::rate_distortion(p, d)?;
    let queries = [RegionQuery::Rate {
        d: distortion,
        e: 0.0,
    }];
    let mut scan = Scan::new(&rows, &queries, cfg)?;
    scan.run();
    let best = &scan.best[0];
    let Some(leaf) = &best.leaf else {
        return Err(Error::Infeasible {
            reason: format!("no quantized channel reaches distortion {distortion}"),
            gamma_estimate: None,
        });
    };
    let tau = scan.tau();
    let slack = 2.0 * entropy_modulus(tau, rows.nu);
    let input = Axis::new("x", Role::Public, p.alphabet().clone());
    let output = Axis::new("x_hat", Role::Reconstruction, Alphabet::indexed(rows.nu)?);
    let channel = Channel::normalized(vec![input], output, scan.matrix(leaf))?;
    Ok(OracleReport {
        value: best.value,
        channel,
        quantization_step: cfg.quantization_step,
        enumeration_count: scan.count,
        lower_bound: (best.relaxed - slack).max(0.0),
        upper_bound: best.value,
    })
}
