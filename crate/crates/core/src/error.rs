use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("phase index {0} is outside 0..=3")]
    PhaseOutOfRange(u8),

    #[error("austenite (index 0) is not a martensite variant")]
    AusteniteIndex,

    #[error("variant pair must be distinct, got ({0}, {0})")]
    SameVariant(u8),

    #[error("invalid volume fractions: {0}")]
    InvalidFractions(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("resolution too small: {0}")]
    ResolutionTooSmall(String),

    #[error("field is not a {{0,1}} indicator: {0}")]
    NotIndicator(String),

    #[error("mollifier radius {radius} exceeds half the domain extent {half_extent}")]
    MollifierTooWide { radius: f64, half_extent: f64 },

    #[error(
        "margin violation: h = {h} needs dist(U, boundary) > c*h = {required}, but dist = {dist}"
    )]
    Margin { h: f64, required: f64, dist: f64 },

    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    #[error("window support touches the domain boundary along axis {0}")]
    WindowTouchesBoundary(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent estimate: {0}")]
    Inconsistent(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
