//! Finite-alphabet probability primitives.

mod alphabet;
mod channel;
mod dist;
mod info;

pub use alphabet::{Alphabet, Axis, Role};
pub use channel::{Channel, DistortionSpec};
pub use dist::{DistJson, JointPmf, Pmf, NORM_TOL};
pub use info::{
    binary_entropy, conditional_entropy, entropy, entropy_bits, expected_distortion, joint_entropy,
    mutual_information, push_forward, push_forward_pmf, relative_entropy,
};
