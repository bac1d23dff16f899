//! Dense evaluation of equivocation, rate, optimal decoder and gradients for
//! an encoder channel `c[x][u]`, where `x` runs over the encoder alphabet.
//!
//! Layout: `pxz[x * nz + z]`, `puz[u * nz + z]`, `phuz[(h * nu + u) * nz + z]`,
//! `pruz[(r * nu + u) * nz + z]`, decoder `dec[u * nz + z]`.

use super::problem::PrivacyProblem;
use crate::error::Result;

const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub nx: usize,
    pub nz: usize,
    pub nu: usize,
    pub nh: usize,
    pub nr: usize,
    pub nxh: usize,
    pub pxz: Vec<f64>,
    pub px: Vec<f64>,
    pub pz: Vec<f64>,
    pub h_of: Vec<usize>,
    pub r_of: Vec<usize>,
    /// `dist[r * nxh + xh]`
    pub dist: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    pub puz: Vec<f64>,
    pub phuz: Vec<f64>,
    pub pruz: Vec<f64>,
    pub dec: Vec<usize>,
}

impl Eval {
    pub fn new(prob: &PrivacyProblem) -> Result<Self> {
        let j = prob.joint();
        let enc = prob.encoder_axes();
        let side = prob.side_axes();
        let nx = j.product_size(enc);
        let nz = j.product_size(side).max(1);
        let both: Vec<usize> = enc.iter().chain(side).copied().collect();
        let pxz = j.marginal(&both)?;
        let px: Vec<f64> = pxz.chunks(nz).map(|r| r.iter().sum()).collect();
        let mut pz = vec![0.0; nz];
        for row in pxz.chunks(nz) {
            for (acc, p) in pz.iter_mut().zip(row) {
                *acc += p;
            }
        }
        let enc_joint = j.marginal_joint(enc)?;
        let pos = |axes: &[usize]| -> Vec<usize> {
            axes.iter()
                .map(|a| enc.iter().position(|e| e == a).expect("encoder axis"))
                .collect()
        };
        let h_of = enc_joint.projection(&pos(prob.private_axes()));
        let r_of = enc_joint.projection(&pos(prob.public_axes()));
        let d = prob.distortion();
        Ok(Eval {
            nx,
            nz,
            nu: prob.u_cardinality(),
            nh: j.product_size(prob.private_axes()),
            nr: j.product_size(prob.public_axes()),
            nxh: d.cols(),
            pxz,
            px,
            pz,
            h_of,
            r_of,
            dist: d.matrix().to_vec(),
        })
    }

    pub fn scratch(&self) -> Scratch {
        let uz = self.nu * self.nz;
        Scratch {
            puz: vec![0.0; uz],
            phuz: vec![0.0; self.nh * uz],
            pruz: vec![0.0; self.nr * uz],
            dec: vec![0; uz],
        }
    }

    pub fn accumulate(&self, c: &[f64], s: &mut Scratch) {
        let (nu, nz) = (self.nu, self.nz);
        s.puz.iter_mut().for_each(|v| *v = 0.0);
        s.phuz.iter_mut().for_each(|v| *v = 0.0);
        s.pruz.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..self.nx {
            let (h, r) = (self.h_of[x], self.r_of[x]);
            for z in 0..nz {
                let p = self.pxz[x * nz + z];
                if p == 0.0 {
                    continue;
                }
                for u in 0..nu {
                    let m = p * c[x * nu + u];
                    s.puz[u * nz + z] += m;
                    s.phuz[(h * nu + u) * nz + z] += m;
                    s.pruz[(r * nu + u) * nz + z] += m;
                }
            }
        }
    }

    /// `H(X_h | U, Z)` from accumulated marginals.
    pub fn equivocation(&self, s: &Scratch) -> f64 {
        let uz = self.nu * self.nz;
        let mut e = 0.0;
        for h in 0..self.nh {
            for k in 0..uz {
                let m = s.phuz[h * uz + k];
                if m > 0.0 {
                    e -= m * (m / s.puz[k]).log2();
                }
            }
        }
        e.max(0.0)
    }

    /// `I(X; U) - I(Z; U) = H(U | Z) - H(U | X)`.
    pub fn rate(&self, c: &[f64], s: &Scratch) -> f64 {
        let nz = self.nz;
        let mut r = 0.0;
        for (k, &m) in s.puz.iter().enumerate() {
            if m > 0.0 {
                r -= m * (m / self.pz[k % nz]).log2();
            }
        }
        for x in 0..self.nx {
            if self.px[x] == 0.0 {
                continue;
            }
            let row = &c[x * self.nu..(x + 1) * self.nu];
            let h: f64 = row
                .iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| v * v.log2())
                .sum();
            r += self.px[x] * h;
        }
        r.max(0.0)
    }

    /// Optimal decoder into `s.dec`; returns its expected distortion.
    /// Lowest index wins ties; cells with `p(u, z) = 0` decode to 0.
    pub fn decode(&self, s: &mut Scratch) -> f64 {
        let uz = self.nu * self.nz;
        let mut total = 0.0;
        for k in 0..uz {
            if s.puz[k] <= 0.0 {
                s.dec[k] = 0;
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = 0;
            for xh in 0..self.nxh {
                let mut cost = 0.0;
                for r in 0..self.nr {
                    cost += s.pruz[r * uz + k] * self.dist[r * self.nxh + xh];
                }
                if cost < best {
                    best = cost;
                    arg = xh;
                }
            }
            s.dec[k] = arg;
            total += best;
        }
        total
    }

    /// Linear distortion coefficients for a fixed decoder:
    /// `a[x][u] = sum_z p(x, z) d(r(x), dec(u, z))`.
    pub fn distortion_coeffs(&self, dec: &[usize], a: &mut [f64]) {
        let (nu, nz) = (self.nu, self.nz);
        for x in 0..self.nx {
            let drow = &self.dist[self.r_of[x] * self.nxh..(self.r_of[x] + 1) * self.nxh];
            for u in 0..nu {
                let mut v = 0.0;
                for z in 0..nz {
                    v += self.pxz[x * nz + z] * drow[dec[u * nz + z]];
                }
                a[x * nu + u] = v;
            }
        }
    }

    /// `dE / dc[x][u] = -sum_z p(x, z) log2 p(h(x) | u, z)`.
    pub fn grad_equivocation(&self, s: &Scratch, g: &mut [f64]) {
        let (nu, nz) = (self.nu, self.nz);
        for x in 0..self.nx {
            let h = self.h_of[x];
            for u in 0..nu {
                let mut v = 0.0;
                for z in 0..nz {
                    let p = self.pxz[x * nz + z];
                    let q = s.puz[u * nz + z];
                    if p == 0.0 || q <= 0.0 {
                        continue;
                    }
                    let cond = (s.phuz[(h * nu + u) * nz + z] / q).max(LOG_FLOOR);
                    v -= p * cond.log2();
                }
                g[x * nu + u] = v;
            }
        }
    }

    /// `dR / dc[x][u] = -sum_z p(x, z) log2 p(u | z) + p(x) log2 c[x][u]`.
    pub fn grad_rate(&self, c: &[f64], s: &Scratch, g: &mut [f64]) {
        let (nu, nz) = (self.nu, self.nz);
        for x in 0..self.nx {
            for u in 0..nu {
                let mut v = 0.0;
                for z in 0..nz {
                    let p = self.pxz[x * nz + z];
                    if p == 0.0 {
                        continue;
                    }
                    let q = (s.puz[u * nz + z] / self.pz[z]).max(LOG_FLOOR);
                    v -= p * q.log2();
                }
                v += self.px[x] * c[x * nu + u].max(LOG_FLOOR).log2();
                g[x * nu + u] = v;
            }
        }
    }

    /// Smallest distortion any channel can reach: `sum_r p(r) min_xh d(r, xh)`.
    pub fn min_distortion(&self) -> f64 {
        let mut pr = vec![0.0; self.nr];
        for x in 0..self.nx {
            pr[self.r_of[x]] += self.px[x];
        }
        pr.iter()
            .enumerate()
            .map(|(r, p)| {
                let row = &self.dist[r * self.nxh..(r + 1) * self.nxh];
                p * row.iter().copied().fold(f64::INFINITY, f64::min)
            })
            .sum()
    }
}

/// Exact metrics of one channel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Metrics {
    pub equivocation: f64,
    pub rate: f64,
    pub distortion: f64,
}

impl Eval {
    pub fn metrics(&self, c: &[f64], s: &mut Scratch) -> Metrics {
        self.accumulate(c, s);
        let distortion = self.decode(s);
        Metrics {
            equivocation: self.equivocation(s),
            rate: self.rate(c, s),
            distortion,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{
        conditional_entropy, mutual_information, push_forward, Alphabet, Axis, DistortionSpec,
        JointPmf, Role,
    };

    fn side_problem() -> PrivacyProblem {
        let ax = |n: &str, r| Axis::new(n, r, Alphabet::indexed(2).unwrap());
        let probs = vec![0.2, 0.05, 0.1, 0.05, 0.03, 0.12, 0.15, 0.3];
        let j = JointPmf::new(
            vec![
                ax("h", Role::Private),
                ax("r", Role::Public),
                ax("z", Role::SideInfo),
            ],
            probs,
        )
        .unwrap();
        PrivacyProblem::new(j, DistortionSpec::hamming(2), Some(3)).unwrap()
    }

    fn channel() -> Vec<f64> {
        vec![0.5, 0.3, 0.2, 0.1, 0.1, 0.8, 0.6, 0.0, 0.4, 0.25, 0.25, 0.5]
    }

    #[test]
    fn matches_generic_information_measures() {
        let prob = side_problem();
        let ev = Eval::new(&prob).unwrap();
        let mut s = ev.scratch();
        let c = channel();
        let m = ev.metrics(&c, &mut s);
        let ch = crate::prob::Channel::new(prob.encoder_inputs(), prob.u_axis(), c).unwrap();
        let full = push_forward(prob.joint(), &[0, 1], &ch).unwrap();
        let e = conditional_entropy(&full, &[0], &[3, 2]).unwrap();
        let r = mutual_information(&full, &[0, 1], &[3]).unwrap()
            - mutual_information(&full, &[2], &[3]).unwrap();
        assert!((m.equivocation - e).abs() < 1e-12);
        assert!((m.rate - r).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let prob = side_problem();
        let ev = Eval::new(&prob).unwrap();
        let mut s = ev.scratch();
        let c = channel();
        let mut ge = vec![0.0; c.len()];
        let mut gr = vec![0.0; c.len()];
        ev.accumulate(&c, &mut s);
        ev.grad_equivocation(&s, &mut ge);
        ev.grad_rate(&c, &s, &mut gr);
        // directional derivative along a move inside one row
        for (x, (a, b)) in [(0usize, (0usize, 1usize)), (3, (1, 2)), (1, (2, 0))] {
            let eps = 1e-6;
            let mut cp = c.clone();
            cp[x * 3 + a] += eps;
            cp[x * 3 + b] -= eps;
            let mp = ev.metrics(&cp, &mut s);
            let mut cm = c.clone();
            cm[x * 3 + a] -= eps;
            cm[x * 3 + b] += eps;
            let mm = ev.metrics(&cm, &mut s);
            let fd_e = (mp.equivocation - mm.equivocation) / (2.0 * eps);
            let fd_r = (mp.rate - mm.rate) / (2.0 * eps);
            assert!((fd_e - (ge[x * 3 + a] - ge[x * 3 + b])).abs() < 1e-6);
            assert!((fd_r - (gr[x * 3 + a] - gr[x * 3 + b])).abs() < 1e-6);
        }
    }

    #[test]
    fn decoder_cost_matches_coefficients() {
        let prob = side_problem();
        let ev = Eval::new(&prob).unwrap();
        let mut s = ev.scratch();
        let c = channel();
        let m = ev.metrics(&c, &mut s);
        let mut a = vec![0.0; c.len()];
        ev.distortion_coeffs(&s.dec, &mut a);
        let lin: f64 = a.iter().zip(&c).map(|(a, c)| a * c).sum();
        assert!((lin - m.distortion).abs() < 1e-12);
    }
}
