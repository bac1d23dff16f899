use serde::{Deserialize, Serialize};

use super::alphabet::{Alphabet, Axis, Role};
use super::dist::{DistJson, NORM_TOL};
use crate::error::{Error, Result};

/// Row-stochastic conditional distribution from a (possibly product) input
/// alphabet to an output alphabet.
///
/// Serialized in the same shape as a joint distribution: the input axes
/// followed by the output axis, with `probs` holding the matrix row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistJson", into = "DistJson")]
pub struct Channel {
    inputs: Vec<Axis>,
    output: Axis,
    n_in: usize,
    matrix: Vec<f64>,
}

impl Channel {
    pub fn new(inputs: Vec<Axis>, output: Axis, matrix: Vec<f64>) -> Result<Self> {
        let n_in: usize = inputs.iter().map(Axis::size).product();
        let n_out = output.size();
        if matrix.len() != n_in * n_out {
            return Err(Error::InvalidDistribution(format!(
                "channel matrix has {} entries, expected {n_in}x{n_out}",
                matrix.len()
            )));
        }
        for (i, row) in matrix.chunks(n_out).enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidDistribution(format!(
                    "channel row {i} has a negative or non-finite entry"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "channel row {i} sums to {s}"
                )));
            }
        }
        Ok(Channel {
            inputs,
            output,
            n_in,
            matrix,
        })
    }

    /// Channel between indexed alphabets from explicit rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_out = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_out) {
            return Err(Error::invalid("ragged channel rows"));
        }
        let input = Axis::new("x", Role::Public, Alphabet::indexed(rows.len())?);
        let output = Axis::new("y", Role::Reconstruction, Alphabet::indexed(n_out)?);
        Channel::new(vec![input], output, rows.concat())
    }

    /// Same as [`Channel::new`] but each row is rescaled to sum to one.
    pub fn normalized(inputs: Vec<Axis>, output: Axis, mut matrix: Vec<f64>) -> Result<Self> {
        let n_out = output.size();
        if n_out == 0 || matrix.len() % n_out != 0 {
            return Err(Error::invalid("channel matrix shape"));
        }
        for row in matrix.chunks_mut(n_out) {
            let s: f64 = row.iter().sum();
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::InvalidDistribution(
                    "channel row sums to zero".into(),
                ));
            }
            row.iter_mut().for_each(|p| *p /= s);
        }
        Channel::new(inputs, output, matrix)
    }

    pub fn identity(alphabet: &Alphabet) -> Self {
        let n = alphabet.size();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Channel {
            inputs: vec![Axis::new("x", Role::Public, alphabet.clone())],
            output: Axis::new("x_hat", Role::Reconstruction, alphabet.clone()),
            n_in: n,
            matrix: m,
        }
    }

    /// Every row equal to `row`: the output is independent of the input.
    pub fn constant(inputs: Vec<Axis>, output: Axis, row: &[f64]) -> Result<Self> {
        let n_in: usize = inputs.iter().map(Axis::size).product();
        Channel::new(inputs, output, row.repeat(n_in))
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Channel::from_rows(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn inputs(&self) -> &[Axis] {
        &self.inputs
    }

    pub fn output(&self) -> &Axis {
        &self.output
    }

    pub fn input_alphabet(&self) -> Result<Alphabet> {
        let parts: Vec<&Alphabet> = self.inputs.iter().map(|a| &a.alphabet).collect();
        Alphabet::product(&parts)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.output.size()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_out();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n_out() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.matrix.chunks(self.n_out())
    }

    pub(crate) fn from_parts_unchecked(inputs: Vec<Axis>, output: Axis, matrix: Vec<f64>) -> Self {
        let n_in = inputs.iter().map(Axis::size).product();
        debug_assert_eq!(matrix.len(), n_in * output.size());
        Channel {
            inputs,
            output,
            n_in,
            matrix,
        }
    }
}

impl TryFrom<DistJson> for Channel {
    type Error = Error;

    fn try_from(mut j: DistJson) -> Result<Self> {
        let output = j
            .axes
            .pop()
            .ok_or_else(|| Error::invalid("channel needs an output axis"))?;
        Channel::new(j.axes, output, j.probs)
    }
}

impl From<Channel> for DistJson {
    fn from(c: Channel) -> Self {
        let mut axes = c.inputs;
        axes.push(c.output);
        DistJson {
            axes,
            probs: c.matrix,
        }
    }
}

/// Per-symbol distortion g(x, x_hat): rows are source symbols, columns reconstructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistortionJson", into = "DistortionJson")]
pub struct DistortionSpec {
    name: String,
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistortionJson {
    name: String,
    matrix: Vec<Vec<f64>>,
}

impl DistortionSpec {
    pub fn new(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || matrix.len() != rows * cols {
            return Err(Error::invalid(format!(
                "distortion matrix has {} entries, expected {rows}x{cols}",
                matrix.len()
            )));
        }
        if matrix.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::invalid(
                "distortion entries must be finite and non-negative",
            ));
        }
        Ok(DistortionSpec {
            name: name.into(),
            rows,
            cols,
            matrix,
        })
    }

    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged distortion rows"));
        }
        DistortionSpec::new(name, rows.len(), cols, rows.concat())
    }

    /// Hamming distortion on an alphabet of size `n`: 0 on the diagonal, 1 elsewhere.
    pub fn hamming(n: usize) -> Self {
        let mut m = vec![1.0; n * n];
        for i in 0..n {
            m[i * n + i] = 0.0;
        }
        DistortionSpec {
            name: "hamming".into(),
            rows: n,
            cols: n,
            matrix: m,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, x_hat: usize) -> f64 {
        self.matrix[x * self.cols + x_hat]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.matrix[x * self.cols..(x + 1) * self.cols]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<DistortionJson> for DistortionSpec {
    type Error = Error;

    fn try_from(j: DistortionJson) -> Result<Self> {
        DistortionSpec::from_rows(j.name, &j.matrix)
    }
}

impl From<DistortionSpec> for DistortionJson {
    fn from(d: DistortionSpec) -> Self {
        DistortionJson {
            matrix: d.matrix.chunks(d.cols).map(<[f64]>::to_vec).collect(),
            name: d.name,
        }
    }
}
