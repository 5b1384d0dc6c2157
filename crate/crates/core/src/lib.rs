//! Dominant eigenvectors of symmetric PSD operators through the difference
//! objective `f(x) = ‖x‖² - (x'Ax)^{1/2}`.
//!
//! The crate provides matrix-free operators ([`linop`]), the objective and
//! its derivatives ([`objective`]), the power method and its relatives along
//! with the Split-Merge iteration ([`solvers`]), a dense oracle plus checks of
//! the convergence theory ([`theory`]), and a synthetic test-matrix generator
//! ([`matgen`]).
//!
//! ```
//! use splitmerge::matgen::{generate, SyntheticSpec};
//! use splitmerge::solvers::{solve, SolverConfig};
//!
//! let (a, spectrum) = generate(&SyntheticSpec::new(32, 0.1, 0)).unwrap();
//! let result = solve(&a, &SolverConfig::default(), Some(&spectrum)).unwrap();
//! assert!(result.converged);
//! assert!((result.rayleigh_estimate - 1.0).abs() < 1e-8);
//! ```

pub mod linop;
pub mod matgen;
pub mod objective;
pub mod solvers;
pub mod theory;
pub mod vecops;

pub use linop::{LinearOperator, Operator};
pub use solvers::{solve, solve_from, Method, RhoPolicy, SolveResult, SolverConfig, StopMode};
pub use theory::Spectrum;
