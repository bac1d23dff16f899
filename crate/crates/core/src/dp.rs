//! Laplace mechanism baseline for numeric queries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Statistical query answered by the mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuerySpec {
    /// Number of rows satisfying a predicate.
    Count,
    /// Sum of per-row values clipped to `[lo, hi]`.
    ClippedSum { lo: f64, hi: f64 },
    /// Sum with no clipping; has no finite sensitivity.
    Sum,
}

impl QuerySpec {
    pub fn clipped_sum(lo: f64, hi: f64) -> Result<Self> {
        let q = QuerySpec::ClippedSum { lo, hi };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if let QuerySpec::ClippedSum { lo, hi } = *self {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!(
                    "clip bounds must be finite with lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Answer a count query.
    pub fn count<T>(&self, rows: &[T], pred: impl Fn(&T) -> bool) -> Result<f64> {
        match self {
            QuerySpec::Count => Ok(rows.iter().filter(|r| pred(r)).count() as f64),
            _ => Err(Error::invalid("not a count query")),
        }
    }

    /// Answer a sum query, clipping each value.
    pub fn sum(&self, values: &[f64]) -> Result<f64> {
        match *self {
            QuerySpec::ClippedSum { lo, hi } => {
                self.validate()?;
                Ok(values.iter().map(|v| v.clamp(lo, hi)).sum())
            }
            QuerySpec::Sum => Ok(values.iter().sum()),
            QuerySpec::Count => Err(Error::invalid("not a sum query")),
        }
    }
}

/// Largest change one row can make to the query answer.
pub fn sensitivity(q: &QuerySpec) -> Result<f64> {
    q.validate()?;
    match *q {
        QuerySpec::Count => Ok(1.0),
        QuerySpec::ClippedSum { lo, hi } => Ok(lo.abs().max(hi.abs())),
        QuerySpec::Sum => Err(Error::invalid(
            "unbounded sum has no finite sensitivity; give clipping bounds",
        )),
    }
}

/// Laplace mechanism with scale `b = delta_f / epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    epsilon: f64,
    delta_f: f64,
    b: f64,
}

impl Mechanism {
    pub fn new(epsilon: f64, delta_f: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(delta_f >= 0.0 && delta_f.is_finite()) {
            return Err(Error::OutOfRange {
                what: "sensitivity".into(),
                value: delta_f,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        Ok(Mechanism {
            epsilon,
            delta_f,
            b: delta_f / epsilon,
        })
    }

    pub fn for_query(q: &QuerySpec, epsilon: f64) -> Result<Self> {
        Mechanism::new(epsilon, sensitivity(q)?)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.delta_f
    }

    pub fn scale(&self) -> f64 {
        self.b
    }

    pub fn noise_variance(&self) -> f64 {
        2.0 * self.b * self.b
    }

    /// Draw one Laplace(0, b) sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        laplace_sample(self.b, rng)
    }

    /// Add independent noise to each value.
    pub fn apply(&self, values: &[f64], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        values.iter().map(|v| v + self.sample(&mut rng)).collect()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || epsilon.is_nan() {
        return Err(Error::OutOfRange {
            what: "epsilon".into(),
            value: epsilon,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(())
}

/// Inverse-CDF draw from Laplace(0, b).
pub fn laplace_sample<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    // u in (-1/2, 1/2]
    let u = 0.5 - rng.random::<f64>();
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Laplace(0, b) density.
pub fn laplace_density(z: f64, b: f64) -> f64 {
    (-z.abs() / b).exp() / (2.0 * b)
}

/// Add Laplace noise calibrated to `q` and `epsilon` to each value.
pub fn laplace_mechanism(
    values: &[f64],
    q: &QuerySpec,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(Mechanism::for_query(q, epsilon)?.apply(values, seed))
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    pub epsilon: f64,
    pub sensitivity: f64,
    pub scale: f64,
    /// `e^epsilon`.
    pub bound: f64,
    /// Worst density ratio over outputs for inputs `sensitivity` apart,
    /// `exp(sensitivity / b)`.
    pub analytic_ratio: f64,
    pub analytic_holds: bool,
    /// Largest histogram ratio between the two shifted output laws.
    pub empirical_ratio: f64,
    /// Allowed excess of `empirical_ratio` over `bound` from sampling error.
    pub empirical_tolerance: f64,
    pub empirical_holds: bool,
    pub samples: usize,
}

/// Check the `e^epsilon` density-ratio bound for Laplace(b) noise on two
/// inputs `delta_f` apart.
pub fn dp_ratio_check(b: f64, epsilon: f64, delta_f: f64) -> Result<RatioReport> {
    dp_ratio_check_with(b, epsilon, delta_f, 200_000, 0)
}

pub fn dp_ratio_check_with(
    b: f64,
    epsilon: f64,
    delta_f: f64,
    samples: usize,
    seed: u64,
) -> Result<RatioReport> {
    check_epsilon(epsilon)?;
    if !(b > 0.0) || !(delta_f >= 0.0) {
        return Err(Error::invalid(
            "scale must be positive and sensitivity non-negative",
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let bound = epsilon.exp();
    // |log f(z) - log f(z - s)| <= |s| / b by the triangle inequality
    let analytic_ratio = (delta_f / b).exp();
    let analytic_holds = delta_f / b <= epsilon * (1.0 + 1e-12);

    let width = b / 4.0;
    let lo = -4.0 * b;
    let nbins = ((8.0 * b + delta_f) / width).ceil() as usize;
    let mut h0 = vec![0u64; nbins];
    let mut h1 = vec![0u64; nbins];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        for (h, shift) in [(&mut h0, 0.0), (&mut h1, delta_f)] {
            let z = shift + laplace_sample(b, &mut rng);
            let k = ((z - lo) / width).floor();
            if k >= 0.0 && (k as usize) < nbins {
                h[k as usize] += 1;
            }
        }
    }
    // bins with enough mass in both laws for a stable ratio
    let min_count = (samples as f64 * 1e-3).max(100.0) as u64;
    let mut empirical_ratio = 1.0f64;
    let mut thinnest = u64::MAX;
    for (&a, &c) in h0.iter().zip(&h1) {
        if a >= min_count && c >= min_count {
            empirical_ratio = empirical_ratio
                .max(a as f64 / c as f64)
                .max(c as f64 / a as f64);
            thinnest = thinnest.min(a.min(c));
        }
    }
    let empirical_tolerance = if thinnest == u64::MAX {
        0.0
    } else {
        bound * 5.0 * (2.0 / thinnest as f64).sqrt()
    };
    let empirical_holds = empirical_ratio <= bound + empirical_tolerance;
    Ok(RatioReport {
        epsilon,
        sensitivity: delta_f,
        scale: b,
        bound,
        analytic_ratio,
        analytic_holds,
        empirical_ratio,
        empirical_tolerance,
        empirical_holds,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyPoint {
    pub epsilon: f64,
    pub expected_abs_error: f64,
}

/// Expected absolute noise `E|Lap(b)| = b = delta_f / epsilon` per epsilon.
pub fn accuracy_curve(epsilon_grid: &[f64], q: &QuerySpec) -> Result<Vec<AccuracyPoint>> {
    let delta_f = sensitivity(q)?;
    epsilon_grid
        .iter()
        .map(|&epsilon| {
            check_epsilon(epsilon)?;
            Ok(AccuracyPoint {
                epsilon,
                expected_abs_error: delta_f / epsilon,
            })
        })
        .collect()
}
