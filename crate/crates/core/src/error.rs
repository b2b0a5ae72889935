use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("metric is not positive definite at x = {x:?}")]
    MetricNotPositiveDefinite { x: Vec<f64> },
    #[error("axis covector has Riemannian norm {norm}, expected 1 (tolerance {tol})")]
    AxisNotUnit { norm: f64, tol: f64 },
    #[error("charge g = {g} outside the open interval (-2, 2)")]
    ChargeOutOfRange { g: f64 },
    #[error("charge g = {g} is nonzero but below the 1/g threshold {min}; use g = 0 for the Riemannian branch")]
    ChargeTooSmall { g: f64, min: f64 },
    #[error("{0} carries 1/g and is undefined on the Riemannian branch")]
    RiemannianBranch(&'static str),
    #[error("zero tangent vector")]
    ZeroVector,
    #[error("direction too close to the axis ray: q/S = {ratio:e} < {min:e}")]
    NearAxis { ratio: f64, min: f64 },
    #[error("direction orthogonal to the axis: |b|/S = {ratio:e} < {min:e}")]
    AxisOrthogonal { ratio: f64, min: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point {x:?} leaves the domain box")]
    OutsideDomain { x: Vec<f64> },
    #[error("scenario configuration: {0}")]
    Config(String),
    #[error("unknown pack selector `{0}`")]
    UnknownPack(String),
    #[error("sampling failed after {attempts} attempts")]
    Sampling { attempts: usize },
    #[error("geodesic left the admissible region at t = {t}: {reason}")]
    GeodesicExit { t: f64, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T, E = FinslerError> = std::result::Result<T, E>;
