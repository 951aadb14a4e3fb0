use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the pipeline.
///
/// Variants are grouped by module of origin; the CLI maps them onto exit
/// codes (data errors vs. numerical errors) by matching on the variant.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // manifold
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("rank deficient input: singular value {index} is {value:.3e}, below {threshold:.3e}")]
    RankDeficient {
        index: usize,
        value: f64,
        threshold: f64,
    },
    #[error(
        "projection is singular: smallest singular value of the basis product is {value:.3e}"
    )]
    SingularProjection { value: f64 },
    #[error("matrix is not orthonormal: max deviation {0:.3e} from identity Gram matrix")]
    NotOrthonormal(f64),

    // kernels
    #[error("kernel bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    // diffusion
    #[error("similarity graph is disconnected: {0}")]
    DisconnectedGraph(String),
    #[error("eigenvalue solver failed to converge")]
    ConvergenceFailure,
    #[error("index out of bounds: {0}")]
    Index(String),

    // classify
    #[error("class {0:?} has no training samples")]
    EmptyClass(String),
    #[error("dictionary column {0} has near-zero norm")]
    ZeroColumn(usize),
    #[error(
        "constrained problem infeasible: least-squares residual^2 {residual:.3e} exceeds {epsilon:.3e}"
    )]
    Infeasible { residual: f64, epsilon: f64 },
    #[error("degenerate clustering input: {0}")]
    DegenerateData(String),

    // datagen
    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },
    #[error("ragged rows in {path}: row {row} has {found} fields, expected {expected}")]
    RaggedRows {
        path: PathBuf,
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("unsupported format in {path}: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("corrupt header in {path}: {message}")]
    CorruptHeader { path: PathBuf, message: String },
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("heterogeneous sample shapes: {0}")]
    HeterogeneousShapes(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed input data, as
    /// opposed to numerical failures of the algorithms themselves.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::RaggedRows { .. }
                | Error::UnsupportedFormat { .. }
                | Error::CorruptHeader { .. }
                | Error::EmptyDataset(_)
                | Error::HeterogeneousShapes(_)
                | Error::NonFinite(_)
                | Error::Io { .. }
        )
    }
}
