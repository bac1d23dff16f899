use serde::{Deserialize, Serialize};

use super::alphabet::{Alphabet, Axis, Role};
use crate::error::{Error, Result};

/// Normalization tolerance applied at construction.
pub const NORM_TOL: f64 = 1e-12;

/// On-disk form shared by [`Pmf`], [`JointPmf`] and [`Channel`](super::Channel):
/// `{"axes":[{"name","role","labels"}], "probs":[...row-major...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistJson {
    pub axes: Vec<Axis>,
    pub probs: Vec<f64>,
}

pub(crate) fn check_probs(probs: &[f64], expected_len: usize) -> Result<()> {
    if probs.len() != expected_len {
        return Err(Error::InvalidDistribution(format!(
            "expected {expected_len} probabilities, found {}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "entry {p} is negative or not finite"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// A probability mass function over one alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistJson", into = "DistJson")]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        check_probs(&probs, alphabet.size())?;
        Ok(Pmf { alphabet, probs })
    }

    /// Pmf over an indexed alphabet `0..n`.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let alphabet = Alphabet::indexed(probs.len())?;
        Pmf::new(alphabet, probs)
    }

    /// Normalizes non-negative weights. This is the only renormalizing constructor.
    pub fn normalized(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Pmf::new(alphabet, probs)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Pmf::from_probs(vec![1.0 / n as f64; n])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Lift into a single-axis joint distribution.
    pub fn to_joint(&self, name: &str, role: Role) -> JointPmf {
        JointPmf {
            axes: vec![Axis::new(name, role, self.alphabet.clone())],
            probs: self.probs.clone(),
        }
    }
}

impl TryFrom<DistJson> for Pmf {
    type Error = Error;

    fn try_from(j: DistJson) -> Result<Self> {
        if j.axes.len() != 1 {
            return Err(Error::invalid(format!(
                "a pmf has exactly one axis, found {}",
                j.axes.len()
            )));
        }
        let axis = j.axes.into_iter().next().expect("one axis");
        Pmf::new(axis.alphabet, j.probs)
    }
}

impl From<Pmf> for DistJson {
    fn from(p: Pmf) -> Self {
        DistJson {
            axes: vec![Axis::new("x", Role::Public, p.alphabet)],
            probs: p.probs,
        }
    }
}

/// Dense joint distribution over role-tagged axes, stored row-major
/// (last axis varies fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistJson", into = "DistJson")]
pub struct JointPmf {
    axes: Vec<Axis>,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(axes: Vec<Axis>, probs: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid(
                "a joint distribution needs at least one axis",
            ));
        }
        let len = axes.iter().map(Axis::size).product();
        check_probs(&probs, len)?;
        Ok(JointPmf { axes, probs })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::size).collect()
    }

    /// Indices of axes whose role satisfies `pred`, in axis order.
    pub fn axes_where(&self, pred: impl Fn(Role) -> bool) -> Vec<usize> {
        (0..self.axes.len())
            .filter(|&i| pred(self.axes[i].role))
            .collect()
    }

    pub fn axis_by_name(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    /// Size of the product alphabet over `axes`.
    pub fn product_size(&self, axes: &[usize]) -> usize {
        axes.iter().map(|&i| self.axes[i].size()).product()
    }

    pub(crate) fn check_axes(&self, axes: &[usize]) -> Result<()> {
        for (k, &a) in axes.iter().enumerate() {
            if a >= self.axes.len() {
                return Err(Error::invalid(format!(
                    "axis {a} out of range for {} axes",
                    self.axes.len()
                )));
            }
            if axes[..k].contains(&a) {
                return Err(Error::AxisOverlap(a));
            }
        }
        Ok(())
    }

    /// For every flat index of the joint, the flat index into the product
    /// alphabet of `axes` (row-major in the order given).
    pub(crate) fn projection(&self, axes: &[usize]) -> Vec<usize> {
        let shape = self.shape();
        let n = self.probs.len();
        // stride of each joint axis inside the projected space
        let mut sub_stride = vec![0usize; shape.len()];
        let mut s = 1;
        for &a in axes.iter().rev() {
            sub_stride[a] = s;
            s *= shape[a];
        }
        let mut out = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        let mut flat = 0usize;
        for _ in 0..n {
            out.push(flat);
            // odometer increment, last axis fastest
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                flat += sub_stride[d];
                if idx[d] < shape[d] {
                    break;
                }
                flat -= sub_stride[d] * shape[d];
                idx[d] = 0;
            }
        }
        out
    }

    /// Marginal over `axes`, flattened row-major in the order given.
    pub fn marginal(&self, axes: &[usize]) -> Result<Vec<f64>> {
        self.check_axes(axes)?;
        let mut out = vec![0.0; self.product_size(axes)];
        for (p, j) in self.probs.iter().zip(self.projection(axes)) {
            out[j] += p;
        }
        Ok(out)
    }

    /// Marginal over `axes` as a new joint distribution keeping the axis metadata.
    pub fn marginal_joint(&self, axes: &[usize]) -> Result<JointPmf> {
        let probs = self.marginal(axes)?;
        let axes = axes.iter().map(|&i| self.axes[i].clone()).collect();
        Ok(JointPmf { axes, probs })
    }

    /// Replace the role of one axis.
    pub fn with_role(mut self, axis: usize, role: Role) -> Result<Self> {
        self.check_axes(&[axis])?;
        self.axes[axis].role = role;
        Ok(self)
    }

    pub(crate) fn from_parts_unchecked(axes: Vec<Axis>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(axes.iter().map(Axis::size).product::<usize>(), probs.len());
        JointPmf { axes, probs }
    }
}

impl TryFrom<DistJson> for JointPmf {
    type Error = Error;

    fn try_from(j: DistJson) -> Result<Self> {
        JointPmf::new(j.axes, j.probs)
    }
}

impl From<JointPmf> for DistJson {
    fn from(j: JointPmf) -> Self {
        DistJson {
            axes: j.axes,
            probs: j.probs,
        }
    }
}
