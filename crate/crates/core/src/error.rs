use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("index token not issued by this problem's oracle: {0}")]
    UnknownIndex(String),

    #[error("subgradient norm {norm} exceeds declared bound {bound}")]
    SubgradientBound { norm: f64, bound: f64 },

    #[error("Slater condition violated: g(xbar, t) = {value} > -eta = {neg_eta}")]
    SlaterViolated { value: f64, neg_eta: f64 },

    #[error("master problem is numerically infeasible: {0}")]
    MasterInfeasible(String),

    #[error("inner solver did not converge: {0}")]
    InnerIterationLimit(String),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("centering value undefined for a zero subgradient")]
    ZeroSubgradient,

    #[error("dual multipliers are not available for this master solution")]
    NoDuals,

    #[error("phase-one budget exhausted: no feasible distribution found (moment set may be empty)")]
    PhaseOneExhausted,

    #[error("point lies outside the sampling domain")]
    OutsideDomain,

    #[error("LP basis became ill-conditioned after repeated refactorization")]
    IllConditionedBasis,

    #[error("pricing LP infeasible on the given support")]
    PricingInfeasible,

    #[error("unknown benchmark id `{0}`")]
    UnknownBenchmark(String),

    #[error("config file: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
