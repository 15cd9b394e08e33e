use thiserror::Error;

/// Errors surfaced by constructors and checked operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate coefficient index {0:?}")]
    DuplicateIndex(Vec<i64>),
    #[error("index {index:?} has arity {} but dim = {dim}", .index.len())]
    IndexArity { index: Vec<i64>, dim: usize },
    #[error("dim must be >= 1")]
    ZeroDim,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("evaluator returned a non-finite value at grid point {0:?}")]
    NonFiniteSample(Vec<f64>),
    #[error("grid too coarse: need at least {need} points on axis {axis}, got {got}")]
    GridTooCoarse { axis: usize, need: usize, got: usize },
    #[error("symbol is not real-valued")]
    NotRealValued,
    #[error("constant symbol has no critical-point theory")]
    ConstantSymbol,
    #[error("interval does not meet the range of the symbol")]
    EmptyPreimage,
    #[error("axis {axis} out of range for dim {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("operation requires a one-dimensional symbol, got dim {0}")]
    NotOneDim(usize),
    #[error("space mismatch: {0} vs {1}")]
    SpaceMismatch(String, String),
    #[error("operator is not flagged Hermitian")]
    NotHermitian,
    #[error("truncation must be >= 1")]
    EmptyTruncation,
    #[error("box side {side} too small for bandwidth {bandwidth} in periodic mode")]
    BoxTooSmall { side: usize, bandwidth: usize },
    #[error("sequence horizon {horizon} shorter than required length {need}")]
    HorizonTooShort { horizon: usize, need: usize },
    #[error("explicit sequence has {len} entries but horizon is {horizon}")]
    ExplicitTooLong { len: usize, horizon: usize },
    #[error("vector length {got} does not match truncation {expect}")]
    VectorLength { expect: usize, got: usize },
    #[error("{0} vectors but {1} coupling constants")]
    RankMismatch(usize, usize),
    #[error("seminorm order {0} exceeds the supported maximum 3")]
    SeminormOrder(usize),
    #[error("window needs 0 < a < b, got ({0}, {1})")]
    BadWindow(f64, f64),
    #[error("time list must be strictly ascending")]
    TimesNotAscending,
    #[error("light-cone guard violated: t_max {t_max} exceeds max safe time {max_safe_t:.3}")]
    LightConeViolation { t_max: f64, max_safe_t: f64 },
    #[error("band filter produced a vector of norm {0:.3e} (empty band)")]
    EmptyBand(f64),
    #[error("resolvent probe requires eta > 0")]
    ZeroEta,
    #[error("interval needs lo <= hi, got [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("matrix i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("matrix file: {0}")]
    MatrixFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
