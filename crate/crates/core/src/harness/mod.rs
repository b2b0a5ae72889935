//! Verification harness: scenarios, seeded sampling, the check catalog,
//! geodesic tracing and reports.

pub mod checks;
pub mod eval;
pub mod geodesic;
pub mod sampling;
pub mod scenario;
pub mod suite;

pub use checks::{CheckSpec, Severity, CATALOG};
pub use eval::{eval_pack, Dump, PACKS};
pub use geodesic::{trace, Trajectory, TrajectoryPoint};
pub use sampling::{draw_samples, Sample};
pub use scenario::{Scenario, BUILTIN_NAMES};
pub use suite::{run_suite, Status, VerificationReport, THREADS_ENV};
