use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{conditional_entropy, Alphabet, Axis, Channel, DistortionSpec, JointPmf, Role};

/// A privacy problem: a joint law over private, public and side-information
/// attributes, a distortion on the public attributes, and the alphabet size
/// of the auxiliary description `U`.
///
/// The encoder sees every private and public axis (an axis tagged `both`
/// appears once). The decoder sees `U` and the side-information axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyProblem {
    joint: JointPmf,
    distortion: DistortionSpec,
    u_cardinality: usize,
    encoder_axes: Vec<usize>,
    private_axes: Vec<usize>,
    public_axes: Vec<usize>,
    side_axes: Vec<usize>,
}

impl PrivacyProblem {
    /// `u_cardinality = None` picks `|X_r| * |X_h| + 2`.
    pub fn new(
        joint: JointPmf,
        distortion: DistortionSpec,
        u_cardinality: Option<usize>,
    ) -> Result<Self> {
        for (i, a) in joint.axes().iter().enumerate() {
            if matches!(a.role, Role::Auxiliary | Role::Reconstruction) {
                return Err(Error::invalid(format!(
                    "axis {i} ({}) has role {}; problems take private, public, both or side-info axes",
                    a.name, a.role
                )));
            }
        }
        let private_axes = joint.axes_where(Role::is_private);
        let public_axes = joint.axes_where(Role::is_public);
        let side_axes = joint.axes_where(|r| r == Role::SideInfo);
        let encoder_axes = joint.axes_where(|r| r.is_private() || r.is_public());
        if public_axes.is_empty() {
            return Err(Error::invalid("problem needs at least one public axis"));
        }
        if private_axes.is_empty() {
            return Err(Error::invalid("problem needs at least one private axis"));
        }
        let nr = joint.product_size(&public_axes);
        let nh = joint.product_size(&private_axes);
        if distortion.rows() != nr {
            return Err(Error::AlphabetMismatch {
                expected: nr,
                found: distortion.rows(),
            });
        }
        let u_cardinality = u_cardinality.unwrap_or(nr * nh + 2);
        if u_cardinality == 0 {
            return Err(Error::invalid("u_cardinality must be at least 1"));
        }
        Ok(PrivacyProblem {
            joint,
            distortion,
            u_cardinality,
            encoder_axes,
            private_axes,
            public_axes,
            side_axes,
        })
    }

    /// Census problem: a single axis that is both public and private.
    pub fn census(
        p: &crate::prob::Pmf,
        distortion: DistortionSpec,
        u_cardinality: Option<usize>,
    ) -> Result<Self> {
        PrivacyProblem::new(p.to_joint("x", Role::Both), distortion, u_cardinality)
    }

    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn distortion(&self) -> &DistortionSpec {
        &self.distortion
    }

    pub fn u_cardinality(&self) -> usize {
        self.u_cardinality
    }

    pub fn with_u_cardinality(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("u_cardinality must be at least 1"));
        }
        self.u_cardinality = n;
        Ok(self)
    }

    pub fn encoder_axes(&self) -> &[usize] {
        &self.encoder_axes
    }

    pub fn private_axes(&self) -> &[usize] {
        &self.private_axes
    }

    pub fn public_axes(&self) -> &[usize] {
        &self.public_axes
    }

    pub fn side_axes(&self) -> &[usize] {
        &self.side_axes
    }

    pub fn has_side_info(&self) -> bool {
        !self.side_axes.is_empty()
    }

    /// Same problem with the side-information axes marginalized out.
    pub fn without_side_info(&self) -> Result<Self> {
        let keep: Vec<usize> = self.encoder_axes.clone();
        let joint = self.joint.marginal_joint(&keep)?;
        PrivacyProblem::new(joint, self.distortion.clone(), Some(self.u_cardinality))
    }

    /// Input axes of an encoder channel.
    pub fn encoder_inputs(&self) -> Vec<Axis> {
        self.encoder_axes
            .iter()
            .map(|&i| self.joint.axis(i).clone())
            .collect()
    }

    pub fn u_axis(&self) -> Axis {
        Axis::new(
            "u",
            Role::Auxiliary,
            Alphabet::indexed(self.u_cardinality).expect("u_cardinality >= 1"),
        )
    }

    /// `H(X_h | Z)`, the largest possible equivocation.
    pub fn max_equivocation(&self) -> f64 {
        conditional_entropy(&self.joint, &self.private_axes, &self.side_axes).unwrap_or(0.0)
    }

    /// `H(X_h | X_r, Z)`, the equivocation left when the public part is revealed.
    pub fn min_equivocation(&self) -> f64 {
        // private axes that are also public are fully revealed
        let target: Vec<usize> = self
            .private_axes
            .iter()
            .copied()
            .filter(|a| !self.public_axes.contains(a))
            .collect();
        if target.is_empty() {
            return 0.0;
        }
        let given: Vec<usize> = self
            .public_axes
            .iter()
            .chain(&self.side_axes)
            .copied()
            .collect();
        conditional_entropy(&self.joint, &target, &given).unwrap_or(0.0)
    }

    /// `H(X_h)`.
    pub fn private_entropy(&self) -> f64 {
        conditional_entropy(&self.joint, &self.private_axes, &[]).unwrap_or(0.0)
    }

    pub fn check_channel(&self, c: &Channel) -> Result<()> {
        let nx = self.joint.product_size(&self.encoder_axes);
        if c.n_in() != nx {
            return Err(Error::AlphabetMismatch {
                expected: nx,
                found: c.n_in(),
            });
        }
        if c.n_out() != self.u_cardinality {
            return Err(Error::AlphabetMismatch {
                expected: self.u_cardinality,
                found: c.n_out(),
            });
        }
        Ok(())
    }
}

/// On-disk problem description.
///
/// `distortion` is either `"hamming"` or a distortion object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub joint: JointPmf,
    pub distortion: DistortionRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_cardinality: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistortionRef {
    Named(String),
    Spec(DistortionSpec),
}

impl ProblemJson {
    pub fn into_problem(self) -> Result<PrivacyProblem> {
        let d = match self.distortion {
            DistortionRef::Spec(d) => d,
            DistortionRef::Named(name) if name == "hamming" => {
                let public = self.joint.axes_where(Role::is_public);
                DistortionSpec::hamming(self.joint.product_size(&public))
            }
            DistortionRef::Named(name) => {
                return Err(Error::invalid(format!("unknown distortion '{name}'")))
            }
        };
        PrivacyProblem::new(self.joint, d, self.u_cardinality)
    }
}

impl TryFrom<ProblemJson> for PrivacyProblem {
    type Error = Error;

    fn try_from(j: ProblemJson) -> Result<Self> {
        j.into_problem()
    }
}

/// Solver settings for the privacy-region optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub multistarts: usize,
    pub inner_tolerance: f64,
    pub max_iters: usize,
    pub rng_seed: u64,
    pub penalty_weight_schedule: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            multistarts: 32,
            inner_tolerance: 1e-10,
            max_iters: 2000,
            rng_seed: 0,
            penalty_weight_schedule: vec![1.0, 10.0, 100.0, 1e3, 1e4],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.multistarts == 0 {
            return Err(Error::invalid("multistarts must be at least 1"));
        }
        if !(self.inner_tolerance > 0.0) {
            return Err(Error::invalid("inner_tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.penalty_weight_schedule.is_empty()
            || self.penalty_weight_schedule.iter().any(|w| !(*w > 0.0))
        {
            return Err(Error::invalid(
                "penalty weights must be positive and non-empty",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundType {
    /// Realized by the returned channel; an inner bound on the true region.
    Achievable,
}

/// One `(R, D, E)` tuple with the channel and decoder that realize it.
///
/// `decoder[u * n_z + z]` is the reconstruction index for `(u, z)`;
/// `n_z = 1` without side information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionPoint {
    pub rate: f64,
    pub distortion: f64,
    pub equivocation: f64,
    pub bound_type: BoundType,
    pub channel: Channel,
    pub decoder: Vec<usize>,
}
