use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("{op}: domain error: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("argument {at} is a gamma-function pole")]
    Pole { at: f64 },

    #[error("invalid H-function parameters: {0}")]
    InvalidParams(String),

    #[error(
        "pole collision: left pole (j={j}, l={l}) and right pole (i={i}, k={k}) coincide at s = {at}"
    )]
    PoleCollision { j: usize, l: usize, i: usize, k: usize, at: f64 },

    #[error("no vertical line separates the poles (max left {left}, min right {right})")]
    NoContour { left: f64, right: f64 },

    #[error("H-function argument {z} exceeds the supported range")]
    Overflow { z: f64 },

    #[error("contour quadrature did not converge: value {value:e}, relative error {rel_error:e}")]
    NonConvergence { value: f64, rel_error: f64 },

    #[error("residue of order {order} at s = {at} is not supported")]
    ResidueOrder { order: i32, at: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid modulation: {0}")]
    InvalidModulation(String),

    #[error("asymptotic expression not applicable: {0}")]
    NotApplicable(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { op, detail: detail.into() }
    }
}
