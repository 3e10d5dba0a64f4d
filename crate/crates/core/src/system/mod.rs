//! Hypothesis checks, the truncated solution operators and the outer
//! fixed-point iteration for the coupled system.

mod fixed_point;
mod operator;
mod structure;

pub use fixed_point::{
    fixed_point_solve, system_operator, FixedPointConfig, FixedPointReport, Start,
};
pub use operator::{
    gamma_fields, operator_t_comp, operator_t_coop, order_preservation_check, rho_estimate,
    truncate, OrderReport, RhoEstimate, SystemOperator,
};
pub use structure::{
    check_structure, Exponents, HypothesisCheck, LimitEstimate, Mode, ProblemSpec, StructureReport,
};
