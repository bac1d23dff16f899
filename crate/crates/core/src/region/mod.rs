//! Privacy-utility region: the equivocation frontier `Γ(D)` and the rate
//! surface `R(D, E)`, with optional side information at the decoder.

pub(crate) mod eval;
mod problem;
mod solver;

pub use problem::{
    BoundType, DistortionRef, PrivacyProblem, ProblemJson, RegionPoint, SolverConfig,
};
pub use solver::{
    equivocation, evaluate, gamma_of_d, markov_gamma_of_d, markov_restricted_solver,
    optimal_decoder, r_of_de, rate_objective, region_curve, RegionCurve, RegionSample,
};
