use thiserror::Error;

/// Errors raised by validation and by the numerical operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("boundary violation: value at node {node} is {value}, expected {expected}")]
    BoundaryViolation {
        node: usize,
        value: f64,
        expected: f64,
    },

    #[error("monotonicity violation at row {row}, column {}: decreases by {:e} from column {node}", node + 1, -increment)]
    MonotonicityViolation {
        row: usize,
        node: usize,
        increment: f64,
    },

    #[error("non-finite value at row {row}, column {node}")]
    NonFinite { row: usize, node: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate density in cell ({step}, {cell}): density {density:e}")]
    DegenerateDensity {
        step: usize,
        cell: usize,
        density: f64,
    },

    #[error("flow step {step} rejected: monotonicity defect {defect:e} exceeds tolerance, refine the time grid")]
    StepRejected { step: usize, defect: f64 },

    #[error("blowup detected at step {step} (t = {time}): max|v_x|·dt = {ratio:.3}")]
    BlowupDetected { step: usize, time: f64, ratio: f64 },

    #[error("jump record inconsistent with path: {0}")]
    InconsistentJump(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
