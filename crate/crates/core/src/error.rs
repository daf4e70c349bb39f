use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("product domain needs at least one coordinate")]
    Empty,
    #[error("an ordered coordinate set needs more than one element, got {0}")]
    TooFewElements(usize),
    #[error("axis {axis} out of range for a domain of dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("point has {got} coordinates, domain has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("position {position} is not valid on axis {axis}")]
    InvalidPosition { axis: usize, position: i64 },
    #[error("coordinate {axis} is the star state")]
    StarOffAxis { axis: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter vector has length {got}, model expects {expected}")]
    ParameterLength { expected: usize, got: usize },
    #[error("parameter {index} = {value} is outside the model's parameter space")]
    ParameterDomain { index: usize, value: f64 },
    #[error("invalid model configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("row {row} has {got} columns, expected {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
    #[error("row {row}: {source}")]
    InvalidPoint { row: usize, source: DomainError },
}

/// Failure to evaluate an unnormalised log-density. Samplers treat it as a
/// density of zero.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log-density is not finite ({0})")]
    NonFinite(f64),
    #[error("gradient is not finite")]
    NonFiniteGradient,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error(
        "count series diverges: the unnormalised mass does not decay (log-rate {log_rate}, dispersion {dispersion})"
    )]
    Divergent { log_rate: f64, dispersion: f64 },
    #[error("conditional for coordinate {coordinate} needs more than {cap} support points")]
    SupportTooLarge { coordinate: usize, cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error(
        "all loss gradients vanish at the bootstrap minimisers (numerator {numerator}, denominator {denominator})"
    )]
    DegenerateGradients { numerator: f64, denominator: f64 },
    #[error("score-matching numerator is not positive (numerator {numerator}, denominator {denominator})")]
    TheoremConditionViolated { numerator: f64, denominator: f64 },
    #[error("score-matching sums are not finite (numerator {numerator:e}, denominator {denominator:e}); the loss may have no minimiser")]
    NonFinite { numerator: f64, denominator: f64 },
    #[error("no bootstrap minimisers supplied")]
    NoMinimisers,
    #[error("loss could not be evaluated at the initial point")]
    BadInitialPoint,
}
