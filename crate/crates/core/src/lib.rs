//! Golden-ratio proximal ADMM for `min g(x) + f(w)  s.t.  A x + B w = b`,
//! with two step-size rules that never need `||A||`.
//!
//! - [`linops`]: matrix-free operators (dense, identities, periodic gradient,
//!   periodic blur, transport marginals).
//! - [`prox`]: the convex terms and their proximal maps.
//! - [`solver`]: GrpADMM (fixed, decreasing, increasing steps) and PADMM.
//! - [`problems`]: seeded generators for the LASSO, ROF denoising, TV
//!   deblurring and unbalanced transport benchmarks.

pub mod error;
pub mod linops;
pub mod metrics;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod vecops;

pub use error::{Error, Result};
pub use linops::{BlurMethod, Image2D, LinearMap, PeriodicBlur};
pub use metrics::{fes_gap, objective, psnr, MetricsRow};
pub use problem::{GroundTruth, SplitProblem};
pub use problems::ProblemSpec;
pub use prox::{ProxTerm, QuadData};
pub use solver::{
    run, step, Alg1Rule, Alg2Rule, Algorithm, Branch, FixedSteps, RunOptions, RunReport, RunStatus,
    SolverConfig, SolverState, StepInfo, StepRule, XiSchedule, GOLDEN_RATIO,
};
