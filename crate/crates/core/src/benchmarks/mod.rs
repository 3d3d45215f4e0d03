pub mod ex1;
pub mod ex3;
pub mod ex4e;
pub mod quadrature;
pub mod registry;
pub mod search;
pub mod seb;

pub use quadrature::{gauss_legendre, QuadratureRule};
pub use search::{separate_1d, IntervalOracle};
pub use registry::{catalog, make_problem, Benchmark, BenchmarkId, Instance};
