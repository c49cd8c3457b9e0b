use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not unitary: max |U^dagger U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("wire {wire} is out of range for a {num_wires}-wire register")]
    WireOutOfRange { wire: usize, num_wires: usize },

    #[error("wire {0} is addressed more than once")]
    WireCollision(usize),

    #[error("operator of dimension {actual} does not match {expected} for the addressed wires")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Kraus set is incomplete: max |sum M^dagger M - I| = {deviation:e}")]
    IncompleteKraus { deviation: f64 },

    #[error("Kraus set is empty")]
    EmptyKraus,

    #[error("cannot trace out every wire of the register")]
    TraceAllWires,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("register of {requested} wires exceeds the {max}-wire limit")]
    RegisterTooLarge { requested: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace drifted by {drift:e} during integration; increase the number of substeps")]
    StepSize { drift: f64 },

    #[error("{steps} steps is too many to enumerate (limit {limit}); use the Monte Carlo mode")]
    TooManySteps { steps: usize, limit: usize },

    #[error("cannot export circuit: {0}")]
    Export(String),

    #[error("QASM parse error on line {line}: {message}")]
    QasmParse { line: usize, message: String },

    #[error("power-law fit: {0}")]
    Fit(String),
}
