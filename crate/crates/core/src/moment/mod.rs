//! Moment-constrained distribution sets and the randomized oracle that
//! maximizes expectations over them.

mod domain;
mod oracle;
mod spec;

pub use domain::{DomainSampler, SampleDomain, Shape};
pub use oracle::{
    maximize_expectation, p_bound, phase_one, pricing_duals, reduced_cost, required_samples, Certificate,
    DiscreteDistribution, MomentOracle, MomentSettings, OracleOutcome, SampleBudget,
};
pub use spec::{parse_moment_file, BasisFunction, MomentSpec};
