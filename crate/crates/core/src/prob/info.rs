//! Entropies, mutual information and expected distortion on finite joints.
//!
//! All logarithms are base 2. `0 log 0 = 0`; `p log(p/0)` with `p > 0`
//! saturates to `+inf` in [`relative_entropy`].

use super::channel::{Channel, DistortionSpec};
use super::dist::{JointPmf, Pmf};
use crate::error::{Error, Result};

/// `-sum p log2 p` over raw probabilities.
pub fn entropy_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Binary entropy function h2(p).
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_bits(p.probs())
}

/// `D(p || q)` in bits; `+inf` when `p` puts mass where `q` has none.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| {
            if b > 0.0 {
                a * (a / b).log2()
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

fn check_disjoint(j: &JointPmf, a: &[usize], b: &[usize]) -> Result<()> {
    j.check_axes(a)?;
    j.check_axes(b)?;
    if let Some(&x) = a.iter().find(|x| b.contains(x)) {
        return Err(Error::AxisOverlap(x));
    }
    Ok(())
}

/// Joint entropy of a set of axes.
pub fn joint_entropy(j: &JointPmf, axes: &[usize]) -> Result<f64> {
    Ok(entropy_bits(&j.marginal(axes)?))
}

/// `H(target | given)`; with `given` empty this is `H(target)`.
pub fn conditional_entropy(j: &JointPmf, target: &[usize], given: &[usize]) -> Result<f64> {
    check_disjoint(j, target, given)?;
    let both: Vec<usize> = target.iter().chain(given).copied().collect();
    let h = joint_entropy(j, &both)? - joint_entropy(j, given)?;
    Ok(h.max(0.0))
}

/// `I(A; B) = H(A) + H(B) - H(A, B)`.
pub fn mutual_information(j: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    check_disjoint(j, a, b)?;
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    let i = joint_entropy(j, a)? + joint_entropy(j, b)? - joint_entropy(j, &ab)?;
    Ok(i.max(0.0))
}

/// Append the output of `c`, driven by `input_axes` of `j`, as a new last axis.
///
/// The result is `p(x) c(y | x_input)` and keeps every original axis, so its
/// marginal over those axes is exactly `j`.
pub fn push_forward(j: &JointPmf, input_axes: &[usize], c: &Channel) -> Result<JointPmf> {
    j.check_axes(input_axes)?;
    let expected = j.product_size(input_axes);
    if c.n_in() != expected {
        return Err(Error::AlphabetMismatch {
            expected,
            found: c.n_in(),
        });
    }
    let n_out = c.n_out();
    let proj = j.projection(input_axes);
    let mut probs = Vec::with_capacity(j.probs().len() * n_out);
    for (&p, &x) in j.probs().iter().zip(&proj) {
        probs.extend(c.row(x).iter().map(|&q| p * q));
    }
    let mut axes = j.axes().to_vec();
    axes.push(c.output().clone());
    Ok(JointPmf::from_parts_unchecked(axes, probs))
}

/// Convenience: `p(x) c(y|x)` for a single-axis source.
pub fn push_forward_pmf(p: &Pmf, c: &Channel) -> Result<JointPmf> {
    push_forward(&p.to_joint("x", super::Role::Public), &[0], c)
}

/// `sum p(x_r, x_hat) g(x_r, x_hat)` with both sides flattened over their axis sets.
pub fn expected_distortion(
    j: &JointPmf,
    source_axes: &[usize],
    recon_axes: &[usize],
    d: &DistortionSpec,
) -> Result<f64> {
    check_disjoint(j, source_axes, recon_axes)?;
    let ns = j.product_size(source_axes);
    let nr = j.product_size(recon_axes);
    if ns != d.rows() {
        return Err(Error::AlphabetMismatch {
            expected: d.rows(),
            found: ns,
        });
    }
    if nr != d.cols() {
        return Err(Error::AlphabetMismatch {
            expected: d.cols(),
            found: nr,
        });
    }
    let both: Vec<usize> = source_axes.iter().chain(recon_axes).copied().collect();
    let m = j.marginal(&both)?;
    Ok(m.iter().zip(d.matrix()).map(|(p, g)| p * g).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{Alphabet, Axis, Role};

    const H2_01: f64 = 0.468_995_593_589_281_2;

    fn dsbs(p: f64) -> JointPmf {
        let a = |n: &str| Axis::new(n, Role::Public, Alphabet::indexed(2).unwrap());
        JointPmf::new(
            vec![a("x"), a("y")],
            vec![(1.0 - p) / 2.0, p / 2.0, p / 2.0, (1.0 - p) / 2.0],
        )
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::uniform(2).unwrap()), 1.0);
        assert_eq!(entropy(&Pmf::from_probs(vec![0.0, 1.0, 0.0]).unwrap()), 0.0);
        let p = Pmf::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((entropy(&p) - 1.5).abs() < 1e-15);
        assert!((binary_entropy(0.1) - H2_01).abs() < 1e-15);
    }

    #[test]
    fn conditional_entropy_examples() {
        let j = dsbs(0.1);
        assert!((conditional_entropy(&j, &[0], &[1]).unwrap() - H2_01).abs() < 1e-12);
        // independent axes
        let ind = dsbs(0.5);
        assert!((conditional_entropy(&ind, &[0], &[1]).unwrap() - 1.0).abs() < 1e-12);
        // deterministic function
        let det = dsbs(0.0);
        assert!(conditional_entropy(&det, &[0], &[1]).unwrap().abs() < 1e-12);
        assert!(matches!(
            conditional_entropy(&j, &[0], &[0]),
            Err(Error::AxisOverlap(0))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        assert!(mutual_information(&dsbs(0.5), &[0], &[1]).unwrap().abs() < 1e-12);
        assert!((mutual_information(&dsbs(0.0), &[0], &[1]).unwrap() - 1.0).abs() < 1e-12);
        let i = mutual_information(&dsbs(0.1), &[0], &[1]).unwrap();
        assert!((i - (1.0 - H2_01)).abs() < 1e-12);
        let i_rev = mutual_information(&dsbs(0.1), &[1], &[0]).unwrap();
        assert!((i - i_rev).abs() < 1e-12);
    }

    #[test]
    fn push_forward_examples() {
        let p = Pmf::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let id = Channel::identity(p.alphabet());
        let j = push_forward_pmf(&p, &id).unwrap();
        assert_eq!(j.probs(), &[0.2, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.5]);

        let q = [0.1, 0.9];
        let input = Axis::new("x", Role::Public, p.alphabet().clone());
        let out = Axis::new("y", Role::Reconstruction, Alphabet::indexed(2).unwrap());
        let c = Channel::constant(vec![input], out, &q).unwrap();
        let j = push_forward_pmf(&p, &c).unwrap();
        for x in 0..3 {
            for y in 0..2 {
                assert!((j.probs()[x * 2 + y] - p.probs()[x] * q[y]).abs() < 1e-15);
            }
        }

        let u = Pmf::uniform(2).unwrap();
        let j = push_forward_pmf(&u, &Channel::bsc(0.1).unwrap()).unwrap();
        assert_eq!(j.marginal(&[1]).unwrap(), vec![0.5, 0.5]);

        let mismatch = push_forward_pmf(&p, &Channel::bsc(0.1).unwrap());
        assert!(matches!(mismatch, Err(Error::AlphabetMismatch { .. })));
    }

    #[test]
    fn expected_distortion_examples() {
        let p = Pmf::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
        let d3 = DistortionSpec::hamming(3);
        let j = push_forward_pmf(&p, &Channel::identity(p.alphabet())).unwrap();
        assert_eq!(expected_distortion(&j, &[0], &[1], &d3).unwrap(), 0.0);

        // independent uniform pair over M symbols -> (M-1)/M
        let m = 4;
        let u = Pmf::uniform(m).unwrap();
        let input = Axis::new("x", Role::Public, u.alphabet().clone());
        let out = Axis::new("y", Role::Reconstruction, u.alphabet().clone());
        let c = Channel::constant(vec![input], out, u.probs()).unwrap();
        let j = push_forward_pmf(&u, &c).unwrap();
        let d = expected_distortion(&j, &[0], &[1], &DistortionSpec::hamming(m)).unwrap();
        assert!((d - 0.75).abs() < 1e-15);

        let j = push_forward_pmf(&Pmf::uniform(2).unwrap(), &Channel::bsc(0.1).unwrap()).unwrap();
        let d = expected_distortion(&j, &[0], &[1], &DistortionSpec::hamming(2)).unwrap();
        assert!((d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_saturates() {
        assert_eq!(relative_entropy(&[0.5, 0.5], &[1.0, 0.0]), f64::INFINITY);
        assert_eq!(relative_entropy(&[0.0, 1.0], &[0.5, 0.5]), 1.0);
    }
}
