pub mod barrier;
pub mod benchmarks;
pub mod bundle;
pub mod cutting;
pub mod diagnostics;
pub mod dro;
pub mod error;
pub mod lp;
pub mod master;
pub mod moment;
pub mod problem;

pub use cutting::{run, Cut, CutIndex, CutKind, CutType, IterationRecord, SeparationOracle, SolveResult, SolveStatus};
pub use error::{Error, Result};
pub use master::{MasterSolution, MasterState};
pub use problem::{
    CenteringStrategy, CutMethod, DecisionBox, MasterKind, SemiInfiniteFamily, SicpProblem, SlaterInfo,
    SolverConfig, StaticConstraint,
};
