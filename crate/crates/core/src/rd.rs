//! Rate-distortion function of a discrete memoryless source.
//!
//! Blahut-Arimoto iteration at a fixed Lagrange slope `s >= 0` (nats per unit
//! distortion): the test channel is `Q(x_hat|x) ∝ q(x_hat) exp(-s d(x, x_hat))`
//! and `q` is refreshed as the output marginal. Each slope yields one point on
//! the lower convex envelope of the (D, R) region; a target distortion is hit
//! by bisection over the slope.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{Alphabet, Axis, Channel, DistortionSpec, Pmf, Role};

#[derive(Debug, Clone)]
pub struct BaConfig {
    /// Stop when the Lagrangian `R + s D / ln 2` changes by less than this (bits).
    pub tolerance: f64,
    pub max_iters: usize,
    /// Slopes swept by [`rd_curve`]; sorted, non-negative.
    pub slope_grid: Vec<f64>,
}

impl Default for BaConfig {
    fn default() -> Self {
        let mut slope_grid = vec![0.0];
        // geometric 0.05 .. 50
        let n = 48;
        for k in 0..n {
            let t = k as f64 / (n - 1) as f64;
            slope_grid.push(0.05 * 1000f64.powf(t));
        }
        BaConfig {
            tolerance: 1e-9,
            max_iters: 200_000,
            slope_grid,
        }
    }
}

impl BaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.slope_grid.is_empty() {
            return Err(Error::invalid("slope grid is empty"));
        }
        if self
            .slope_grid
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
            || self.slope_grid.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::invalid(
                "slope grid must be sorted, finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// One point on the rate-distortion curve with its achieving test channel `p(x_hat|x)`.
#[derive(Debug, Clone, Serialize)]
pub struct RdPoint {
    pub rate: f64,
    pub distortion: f64,
    pub slope: f64,
    pub iterations: usize,
    pub channel: Channel,
}

fn check_inputs(p: &Pmf, d: &DistortionSpec) -> Result<()> {
    if d.rows() != p.len() {
        return Err(Error::AlphabetMismatch {
            expected: p.len(),
            found: d.rows(),
        });
    }
    Ok(())
}

/// `min_{x_hat} E[d(X, x_hat)]`: distortion of the best constant reconstruction.
pub fn d_max(p: &Pmf, d: &DistortionSpec) -> f64 {
    best_constant(p, d).1
}

/// `E[min_{x_hat} d(X, x_hat)]`: the smallest achievable distortion.
pub fn d_min(p: &Pmf, d: &DistortionSpec) -> f64 {
    p.probs()
        .iter()
        .enumerate()
        .map(|(x, &px)| px * d.row(x).iter().copied().fold(f64::INFINITY, f64::min))
        .sum()
}

fn best_constant(p: &Pmf, d: &DistortionSpec) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for xh in 0..d.cols() {
        let v: f64 = p
            .probs()
            .iter()
            .enumerate()
            .map(|(x, &px)| px * d.get(x, xh))
            .sum();
        if v < best.1 {
            best = (xh, v);
        }
    }
    best
}

fn channel_axes(p: &Pmf, d: &DistortionSpec) -> Result<(Axis, Axis)> {
    let input = Axis::new("x", Role::Public, p.alphabet().clone());
    let out_alphabet = if d.cols() == p.len() {
        p.alphabet().clone()
    } else {
        Alphabet::indexed(d.cols())?
    };
    Ok((
        input,
        Axis::new("x_hat", Role::Reconstruction, out_alphabet),
    ))
}

/// Mutual information and distortion of `p(x) Q(x_hat|x)`.
pub(crate) fn rate_and_distortion(p: &[f64], q_rows: &[f64], d: &DistortionSpec) -> (f64, f64) {
    let m = d.cols();
    let mut marg = vec![0.0; m];
    for (x, &px) in p.iter().enumerate() {
        for (y, &qv) in q_rows[x * m..(x + 1) * m].iter().enumerate() {
            marg[y] += px * qv;
        }
    }
    let mut rate = 0.0;
    let mut dist = 0.0;
    for (x, &px) in p.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &qv) in q_rows[x * m..(x + 1) * m].iter().enumerate() {
            if qv > 0.0 {
                rate += px * qv * (qv / marg[y]).log2();
                dist += px * qv * d.get(x, y);
            }
        }
    }
    (rate.max(0.0), dist)
}

/// Blahut-Arimoto at a fixed slope.
pub fn blahut_arimoto(p: &Pmf, d: &DistortionSpec, slope: f64, cfg: &BaConfig) -> Result<RdPoint> {
    check_inputs(p, d)?;
    if !(slope.is_finite() && slope >= 0.0) {
        return Err(Error::invalid(format!(
            "slope must be finite and >= 0, got {slope}"
        )));
    }
    if !(cfg.tolerance > 0.0) || cfg.max_iters == 0 {
        return Err(Error::invalid("invalid BA configuration"));
    }
    let (input, output) = channel_axes(p, d)?;
    let n = p.len();
    let m = d.cols();

    if slope == 0.0 {
        let (xh, dist) = best_constant(p, d);
        let mut row = vec![0.0; m];
        row[xh] = 1.0;
        return Ok(RdPoint {
            rate: 0.0,
            distortion: dist,
            slope,
            iterations: 0,
            channel: Channel::constant(vec![input], output, &row)?,
        });
    }

    let probs = p.probs();
    let active: Vec<usize> = (0..n).filter(|&x| probs[x] > 0.0).collect();
    // shifted distortions keep exp() away from underflow for large slopes
    let shifted: Vec<f64> = (0..n)
        .flat_map(|x| {
            let row = d.row(x);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            row.iter().map(move |&v| v - lo)
        })
        .collect();

    let mut q = vec![1.0 / m as f64; m];
    let mut rows = vec![0.0; n * m];
    let mut logw = vec![0.0; m];
    let mut prev = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut rate = 0.0;
    let mut dist = 0.0;

    for iter in 1..=cfg.max_iters {
        for &x in &active {
            let mut hi = f64::NEG_INFINITY;
            for y in 0..m {
                logw[y] = if q[y] > 0.0 {
                    q[y].ln() - slope * shifted[x * m + y]
                } else {
                    f64::NEG_INFINITY
                };
                hi = hi.max(logw[y]);
            }
            let row = &mut rows[x * m..(x + 1) * m];
            let mut z = 0.0;
            for y in 0..m {
                row[y] = (logw[y] - hi).exp();
                z += row[y];
            }
            row.iter_mut().for_each(|v| *v /= z);
        }
        q.iter_mut().for_each(|v| *v = 0.0);
        for &x in &active {
            for y in 0..m {
                q[y] += probs[x] * rows[x * m + y];
            }
        }
        (rate, dist) = rate_and_distortion(probs, &rows, d);
        let functional = rate + slope * dist / std::f64::consts::LN_2;
        residual = (functional - prev).abs();
        prev = functional;
        if residual < cfg.tolerance {
            fill_inactive(&mut rows, &active, d);
            return Ok(RdPoint {
                rate,
                distortion: dist,
                slope,
                iterations: iter,
                channel: Channel::normalized(vec![input], output, rows)?,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residual,
        rate,
        distortion: dist,
    })
}

/// Rows of zero-probability symbols are unused; point them at their cheapest reconstruction.
fn fill_inactive(rows: &mut [f64], active: &[usize], d: &DistortionSpec) {
    let m = d.cols();
    for x in 0..d.rows() {
        if active.contains(&x) {
            continue;
        }
        let row = d.row(x);
        let best = (0..m).fold(0, |b, y| if row[y] < row[b] { y } else { b });
        rows[x * m..(x + 1) * m].iter_mut().for_each(|v| *v = 0.0);
        rows[x * m + best] = 1.0;
    }
}

/// Sweep `cfg.slope_grid`, returning points sorted by distortion.
pub fn rd_curve(p: &Pmf, d: &DistortionSpec, cfg: &BaConfig) -> Result<Vec<RdPoint>> {
    cfg.validate()?;
    let mut pts = cfg
        .slope_grid
        .iter()
        .map(|&s| blahut_arimoto(p, d, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    pts.sort_by(|a, b| {
        a.distortion
            .total_cmp(&b.distortion)
            .then(b.rate.total_cmp(&a.rate))
    });
    Ok(pts)
}

/// `R(D)` at a target distortion, by bisection over the slope.
///
/// Where the curve has a linear segment the slope bisection brackets the
/// target between two distortions; the returned channel is then the mixture
/// of the two bracketing channels that meets the target exactly.
pub fn rd_at_distortion(
    p: &Pmf,
    d: &DistortionSpec,
    target: f64,
    cfg: &BaConfig,
) -> Result<RdPoint> {
    check_inputs(p, d)?;
    if !target.is_finite() {
        return Err(Error::invalid("target distortion must be finite"));
    }
    let lo_d = d_min(p, d);
    if target < lo_d - 1e-12 {
        return Err(Error::Infeasible {
            reason: format!("distortion {target} below the minimum achievable {lo_d}"),
            gamma_estimate: None,
        });
    }
    let top = blahut_arimoto(p, d, 0.0, cfg)?;
    if target >= top.distortion {
        return Ok(top);
    }

    const SLOPE_CAP: f64 = 4096.0;
    let spread = positive_spread(d);
    let mut lo = top;
    let mut s = 1.0 / spread;
    let mut hi = blahut_arimoto(p, d, s, cfg)?;
    while hi.distortion > target {
        if s >= SLOPE_CAP / spread {
            if hi.distortion - target < 1e-9 {
                return Ok(hi);
            }
            return Err(Error::Infeasible {
                reason: format!("could not reach distortion {target}"),
                gamma_estimate: None,
            });
        }
        lo = hi;
        s *= 2.0;
        hi = blahut_arimoto(p, d, s, cfg)?;
    }
    for _ in 0..80 {
        if hi.distortion >= target - 1e-13 || hi.slope - lo.slope < 1e-12 * hi.slope {
            break;
        }
        let mid = blahut_arimoto(p, d, 0.5 * (lo.slope + hi.slope), cfg)?;
        if mid.distortion > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi.distortion >= target - 1e-13 {
        return Ok(hi);
    }
    // linear segment between lo and hi: mix channels to land on the target
    let theta = (lo.distortion - target) / (lo.distortion - hi.distortion);
    let mixed: Vec<f64> = lo
        .channel
        .matrix()
        .iter()
        .zip(hi.channel.matrix())
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect();
    let (rate, distortion) = rate_and_distortion(p.probs(), &mixed, d);
    let (input, output) = channel_axes(p, d)?;
    Ok(RdPoint {
        rate,
        distortion,
        slope: hi.slope,
        iterations: hi.iterations,
        channel: Channel::normalized(vec![input], output, mixed)?,
    })
}

/// Smallest positive gap between a row's minimum and another entry; sets the slope scale.
fn positive_spread(d: &DistortionSpec) -> f64 {
    let mut best = f64::INFINITY;
    for x in 0..d.rows() {
        let row = d.row(x);
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        for &v in row {
            if v > lo {
                best = best.min(v - lo);
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::binary_entropy;

    fn hamming_rd_binary(dist: f64) -> f64 {
        1.0 - binary_entropy(dist)
    }

    #[test]
    fn d_max_examples() {
        let h2 = DistortionSpec::hamming(2);
        let h3 = DistortionSpec::hamming(3);
        assert_eq!(d_max(&Pmf::uniform(2).unwrap(), &h2), 0.5);
        assert_eq!(d_max(&Pmf::from_probs(vec![0.0, 1.0]).unwrap(), &h2), 0.0);
        assert_eq!(
            d_max(&Pmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap(), &h3),
            0.5
        );
    }

    #[test]
    fn zero_slope_is_rate_zero_at_d_max() {
        let p = Pmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        let pt =
            blahut_arimoto(&p, &DistortionSpec::hamming(3), 0.0, &BaConfig::default()).unwrap();
        assert_eq!(pt.rate, 0.0);
        assert_eq!(pt.distortion, 0.5);
    }

    #[test]
    fn large_slope_is_lossless() {
        let p = Pmf::uniform(2).unwrap();
        let pt =
            blahut_arimoto(&p, &DistortionSpec::hamming(2), 40.0, &BaConfig::default()).unwrap();
        assert!((pt.rate - 1.0).abs() < 1e-9);
        assert!(pt.distortion < 1e-9);
    }

    #[test]
    fn binary_point_on_analytic_curve() {
        let p = Pmf::uniform(2).unwrap();
        let pt =
            rd_at_distortion(&p, &DistortionSpec::hamming(2), 0.1, &BaConfig::default()).unwrap();
        assert!((pt.distortion - 0.1).abs() < 1e-9);
        assert!((pt.rate - 0.531_004_406_410_718_8).abs() < 1e-6);
    }

    #[test]
    fn curve_tracks_one_minus_h2() {
        let p = Pmf::uniform(2).unwrap();
        let pts = rd_curve(&p, &DistortionSpec::hamming(2), &BaConfig::default()).unwrap();
        for pt in &pts {
            assert!((pt.rate - hamming_rd_binary(pt.distortion.min(0.5))).abs() < 1e-4);
        }
    }

    #[test]
    fn point_mass_has_zero_rate() {
        let p = Pmf::from_probs(vec![1.0, 0.0, 0.0]).unwrap();
        for pt in rd_curve(&p, &DistortionSpec::hamming(3), &BaConfig::default()).unwrap() {
            assert!(pt.rate.abs() < 1e-9);
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let p = Pmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        let cfg = BaConfig {
            max_iters: 1,
            tolerance: 1e-15,
            ..BaConfig::default()
        };
        let err = blahut_arimoto(&p, &DistortionSpec::hamming(3), 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 1, .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn below_minimum_distortion_is_infeasible() {
        let d = DistortionSpec::from_rows("shifted", &[vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap();
        let err = rd_at_distortion(&Pmf::uniform(2).unwrap(), &d, 0.2, &BaConfig::default());
        assert!(matches!(err, Err(Error::Infeasible { .. })));
    }
}
