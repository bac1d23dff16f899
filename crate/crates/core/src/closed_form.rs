//! Exact solutions for two worked models: a categorical source under Hamming
//! distortion (reverse waterfilling) and a bivariate Gaussian pair with one
//! revealed attribute.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{
    conditional_entropy, mutual_information, push_forward, Axis, Channel, Pmf, Role,
};

/// Reverse-waterfilling solution of the Hamming rate-distortion problem at one distortion.
#[derive(Debug, Clone, Serialize)]
pub struct WaterfillSolution {
    pub distortion: f64,
    /// Water level.
    pub lambda: f64,
    /// `1 - D`, the diagonal of the test channel.
    pub d_bar: f64,
    /// Symbols with `p(x) > lambda`.
    pub support: Vec<usize>,
    pub p_xhat: Pmf,
    /// Reverse test channel `p(x | x_hat)`; rows indexed by `x_hat`.
    /// Rows of unsupported reconstructions carry `p(x)` (they have zero weight).
    pub test_channel: Channel,
    /// Forward channel `p(x_hat | x)` used for sanitization.
    pub forward_channel: Channel,
    /// `max_x |sum_xhat p(xhat) p(x|xhat) - p(x)|`.
    pub consistency_residual: f64,
    /// `H(X | X_hat)` evaluated on the joint built from the test channel.
    pub gamma_exact: f64,
    /// `-D̄ log D̄ - |supp| λ log λ - sum_{k not in supp} p_k log p_k`, as written in the source derivation.
    pub gamma_literal: f64,
    /// `I(X; X_hat)` of the same joint.
    pub rate: f64,
}

fn xlog2x(v: f64) -> f64 {
    if v > 0.0 {
        v * v.log2()
    } else {
        0.0
    }
}

/// Distortion reached at water level `lambda`: `P(outside) + (|supp| - 1) lambda`.
fn level_distortion(p: &[f64], lambda: f64) -> f64 {
    let mut out = 0.0;
    let mut n_in = 0usize;
    for &v in p {
        if v > lambda {
            n_in += 1;
        } else {
            out += v;
        }
    }
    out + n_in.saturating_sub(1) as f64 * lambda
}

pub fn hamming_waterfill(p: &Pmf, distortion: f64) -> Result<WaterfillSolution> {
    let probs = p.probs();
    let m = probs.len();
    let p_max = probs.iter().copied().fold(0.0, f64::max);
    let d_max = 1.0 - p_max;
    if !(distortion >= 0.0 && distortion <= d_max + 1e-12) {
        return Err(Error::OutOfRange {
            what: "distortion",
            value: distortion,
            lo: 0.0,
            hi: d_max,
        });
    }
    let target = distortion.min(d_max);

    // smallest lambda with level_distortion(lambda) >= target
    let (mut lo, mut hi) = (0.0, p_max);
    if level_distortion(probs, 0.0) >= target {
        hi = 0.0;
    }
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * p_max {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if level_distortion(probs, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut lambda = hi;
    let support: Vec<usize> = (0..m).filter(|&x| probs[x] > lambda).collect();
    let p_out: f64 = (0..m)
        .filter(|x| !support.contains(x))
        .map(|x| probs[x])
        .sum();
    if support.len() > 1 {
        // exact level for this support
        lambda = (target - p_out) / (support.len() - 1) as f64;
    }
    let d_bar = 1.0 - target;

    let mass: f64 = support.iter().map(|&x| probs[x] - lambda).sum();
    let p_xhat_w: Vec<f64> = (0..m)
        .map(|x| {
            if support.contains(&x) {
                (probs[x] - lambda) / mass
            } else {
                0.0
            }
        })
        .collect();
    let p_xhat = Pmf::normalized(p.alphabet().clone(), p_xhat_w)?;

    let mut test = vec![0.0; m * m];
    for xh in 0..m {
        let row = &mut test[xh * m..(xh + 1) * m];
        if support.contains(&xh) {
            for x in 0..m {
                row[x] = if x == xh {
                    d_bar
                } else if support.contains(&x) {
                    lambda
                } else {
                    probs[x]
                };
            }
        } else {
            row.copy_from_slice(probs);
        }
    }
    let x_axis = Axis::new("x", Role::Both, p.alphabet().clone());
    let xh_axis = Axis::new("x_hat", Role::Reconstruction, p.alphabet().clone());
    let test_channel = Channel::normalized(vec![xh_axis.clone()], x_axis.clone(), test)?;

    let mut residual: f64 = 0.0;
    for x in 0..m {
        let back: f64 = (0..m)
            .map(|xh| p_xhat.probs()[xh] * test_channel.get(xh, x))
            .sum();
        residual = residual.max((back - probs[x]).abs());
    }

    let mut fwd = vec![0.0; m * m];
    for x in 0..m {
        for xh in 0..m {
            fwd[x * m + xh] = if probs[x] > 0.0 {
                p_xhat.probs()[xh] * test_channel.get(xh, x) / probs[x]
            } else {
                p_xhat.probs()[xh]
            };
        }
    }
    let forward_channel = Channel::normalized(vec![x_axis], xh_axis, fwd)?;

    let joint = push_forward(
        &p_xhat.to_joint("x_hat", Role::Reconstruction),
        &[0],
        &test_channel,
    )?;
    let gamma_exact = conditional_entropy(&joint, &[1], &[0])?;
    let rate = mutual_information(&joint, &[1], &[0])?;

    let outside: f64 = (0..m)
        .filter(|x| !support.contains(x))
        .map(|x| -xlog2x(probs[x]))
        .sum();
    let gamma_literal = -xlog2x(d_bar) - support.len() as f64 * xlog2x(lambda) + outside;

    Ok(WaterfillSolution {
        distortion: target,
        lambda,
        d_bar,
        support,
        p_xhat,
        test_channel,
        forward_channel,
        consistency_residual: residual,
        gamma_exact,
        gamma_literal,
        rate,
    })
}

impl WaterfillSolution {
    /// The literal formula with the λ-term counted `|supp| - 1` times.
    pub fn gamma_formula_corrected(&self) -> f64 {
        self.gamma_literal + xlog2x(self.lambda)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GammaCurvePoint {
    pub distortion: f64,
    pub gamma_exact_bits: f64,
    pub gamma_literal_bits: f64,
}

pub fn hamming_gamma_curve(p: &Pmf, d_grid: &[f64]) -> Result<Vec<GammaCurvePoint>> {
    d_grid
        .iter()
        .map(|&d| {
            let s = hamming_waterfill(p, d)?;
            Ok(GammaCurvePoint {
                distortion: d,
                gamma_exact_bits: s.gamma_exact,
                gamma_literal_bits: s.gamma_literal,
            })
        })
        .collect()
}

/// Zero-mean jointly Gaussian pair (X revealed, Y hidden).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianModel {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub rho: f64,
}

/// A value in variance units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Variance(pub f64);

/// A value in bits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Bits(pub f64);

/// Maximal equivocation at one distortion, in both readings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaussianGamma {
    pub distortion: f64,
    /// `σ_Y² [(1 - ρ²) + ρ² D / σ_X²]`.
    pub variance_form: Variance,
    /// `½ log2(2πe · variance_form)`; `-inf` when the variance is zero.
    pub entropy_form: Bits,
}

impl GaussianModel {
    pub fn new(sigma_x2: f64, sigma_y2: f64, rho: f64) -> Result<Self> {
        if !(sigma_x2 > 0.0 && sigma_x2.is_finite()) || !(sigma_y2 > 0.0 && sigma_y2.is_finite()) {
            return Err(Error::invalid("variances must be positive and finite"));
        }
        if !(rho.abs() <= 1.0) {
            return Err(Error::OutOfRange {
                what: "rho",
                value: rho,
                lo: -1.0,
                hi: 1.0,
            });
        }
        Ok(GaussianModel {
            sigma_x2,
            sigma_y2,
            rho,
        })
    }

    /// Slope of the variance form in D.
    pub fn slope(&self) -> f64 {
        self.sigma_y2 * self.rho * self.rho / self.sigma_x2
    }

    /// The reverse test channel `X = X_hat + N` has noise variance `D`.
    pub fn reverse_noise_variance(&self, distortion: f64) -> f64 {
        distortion
    }
}

pub fn gaussian_gamma(m: &GaussianModel, distortion: f64) -> Result<GaussianGamma> {
    if !(distortion >= 0.0 && distortion <= m.sigma_x2) {
        return Err(Error::OutOfRange {
            what: "distortion",
            value: distortion,
            lo: 0.0,
            hi: m.sigma_x2,
        });
    }
    let r2 = m.rho * m.rho;
    let v = m.sigma_y2 * ((1.0 - r2) + r2 * distortion / m.sigma_x2);
    let bits = if v > 0.0 {
        0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).log2()
    } else {
        f64::NEG_INFINITY
    };
    Ok(GaussianGamma {
        distortion,
        variance_form: Variance(v),
        entropy_form: Bits(bits),
    })
}

pub fn gaussian_region(m: &GaussianModel, d_grid: &[f64]) -> Result<Vec<GaussianGamma>> {
    d_grid.iter().map(|&d| gaussian_gamma(m, d)).collect()
}
