use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation in field `{field}`: {msg}")]
    Schema { field: String, msg: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("reference residual {residual:.3e} exceeds tolerance: {detail}")]
    ReferenceResidual { residual: f64, detail: String },
    #[error("infeasible polyhedron")]
    Infeasible,
    #[error("point is not in the set (violation {0:.3e})")]
    NotInSet(f64),
    #[error("vector is not normal at the point (residual {0:.3e})")]
    NotNormal(f64),
    #[error("point is off the graph: {0}")]
    OffGraph(String),
    #[error("iteration limit reached in {0}")]
    IterationLimit(&'static str),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("unsupported potential class: {0}")]
    Unsupported(String),
    #[error("solver diverged: ratio {ratio:.4} above contraction factor {alpha:.4} for {steps} consecutive steps")]
    Diverged { ratio: f64, alpha: f64, steps: usize },
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<Error> },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
