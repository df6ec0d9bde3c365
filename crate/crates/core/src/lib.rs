//! Maximum-entropy probability densities and utility functions estimated
//! from partial information, with the implied Arrow–Pratt risk aversion.
//!
//! The pipeline: describe a [`Support`] and a list of [`ConstraintSpec`]s,
//! validate them into a [`Problem`], solve with [`solve_equality`] or
//! [`solve_interval`], then read the result as a utility curve
//! ([`maxent_utility`]) and a risk-aversion profile
//! ([`risk_aversion_analytic`]).

// `!(x > a)` is used on purpose so NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod entropy;
pub mod error;
pub mod problem;
pub mod quadrature;
pub mod risk;
pub mod solver;
pub mod utility;

pub use entropy::{
    differential_entropy, discrete_entropy, entropy_of_increments, Base, EntropyValue,
};
pub use error::{Error, Result};
pub use problem::{
    align_indicator_knots, validate_problem, BoundState, ConstraintFunction, ConstraintSpec,
    Diagnostics, MaxEntSolution, Problem, Support, Target, DEFAULT_NODES,
};
pub use quadrature::Grid;
pub use risk::{risk_aversion_analytic, risk_aversion_numeric, RiskAversionProfile};
pub use solver::{
    log_partition, moments, solve_equality, solve_interval, Dual, DualState, SolverOptions,
};
pub use utility::{
    classify_family, cumulate, curve_to_density, density_to_curve, increments, maxent_utility,
    maxent_utility_from_assessments, utility_volume, Assessment, Family, UtilityCurve, UtilityFit,
    UtilityIncrementVector, UtilityVector,
};
