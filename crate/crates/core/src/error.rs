use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("linear polynomial is identically zero")]
    ZeroPolynomial,
    #[error("inconsistent pencil lengths: beta {beta}, alphaL {alpha_l}, alphaR {alpha_r}")]
    LengthMismatch {
        beta: usize,
        alpha_l: usize,
        alpha_r: usize,
    },
    #[error("requested order {requested} exceeds available length {available}")]
    OrderTooLarge { requested: usize, available: usize },
    #[error("scale factor at index {0} is zero")]
    ZeroScaleFactor(usize),
    #[error("evaluation point is a root of alpha_{0} (interpolation node)")]
    NodeCollision(usize),
    #[error("q_{order} vanishes at the evaluation point")]
    PoleAtPoint { order: usize },
    #[error("selected convergents failed to stabilize (last increment {increment:e})")]
    NoStabilization { increment: f64 },
    #[error("zero tail denominator at level {0} of the backward evaluation")]
    BackwardBreakdown(usize),
    #[error("B section is ill-conditioned (condition number {condition:e})")]
    IllConditionedB { condition: f64 },
    #[error("section is numerically singular (inversion residual {residual:e})")]
    SingularSection { residual: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("evaluation point hits the atom at {0}")]
    AtomHit(f64),
    #[error("interpolation node must have a nonzero imaginary part")]
    RealNode,
    #[error("invalid node plan: {0}")]
    InvalidNodePlan(String),
    #[error("non-positive weight {weight:e} produced at step {step}")]
    NegativeWeight { step: usize, weight: f64 },
    #[error("weights of the propagated measure drift from one by {drift:e} at step {step}")]
    WeightDrift { step: usize, drift: f64 },
    #[error("B section is not positive definite")]
    NotPositiveDefinite,
    #[error("LU pivot d_{0} vanishes")]
    ZeroPivot(usize),
    #[error("UL sequence y_{0} vanishes")]
    ZeroY(usize),
    #[error("transform point coincides with the evaluation point")]
    CoincidentPoints,
    #[error("determinant B_(n={n}) of the multi-step Christoffel formula vanishes")]
    SingularBDet { n: usize },
    #[error("contour geometry violated: {0}")]
    GeometryViolation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}
