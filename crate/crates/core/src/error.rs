use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a rational literal (expected \"num/den\"): {0:?}")]
    RationalSyntax(String),

    #[error("tree file: {0}")]
    TreeFormat(String),

    #[error("node {node}: {reason}")]
    InvalidNode { node: String, reason: String },

    #[error("time {t} is outside 0..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },

    #[error("process has {got} values but the tree has {expected} nodes")]
    ProcessShape { expected: usize, got: usize },

    #[error("stop nodes {ancestor} and {descendant} are not an antichain")]
    NotAntichain { ancestor: String, descendant: String },

    #[error("tree admits {count} stopping times, above the cap of {cap}")]
    EnumerationCap { count: String, cap: u64 },

    #[error("not a supermartingale: violation at node {node} ({reason})")]
    NotSupermartingale { node: String, reason: String },

    #[error("jump threshold index must be positive")]
    InvalidThreshold,

    #[error("freeze state {state:?} is held along the P-charged path ending at {path_leaf}")]
    FreezeStateCharged { state: String, path_leaf: String },

    #[error("witness requires non-martingale (no mass is lost)")]
    WitnessRequiresLoss,

    #[error("outcome references unknown node {0}")]
    UnknownNode(String),

    #[error("invalid outcome: {0}")]
    InvalidOutcome(String),

    #[error("finite space: {0}")]
    InvalidSpace(String),

    #[error("set is not in the generated algebra")]
    NotInAlgebra,

    #[error("dyadic level {level}, interval {k}: {reason}")]
    Representative { level: u32, k: u64, reason: String },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("burn-in window [{start}, {anchor}) contains no grid point; refine the grid")]
    WindowUnresolved { start: f64, anchor: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("path is not nonincreasing at grid index {0}")]
    IncreasingPath(usize),

    #[error("conditional-expectation oracle for the terminal value is missing")]
    OracleMissing,

    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
