use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("point sent to infinity by primitive {primitive}")]
    PointAtInfinity { primitive: usize },
    #[error("{} vertices sent to infinity (first: {:?})", vertices.len(), vertices.first())]
    VerticesAtInfinity {
        primitive: usize,
        vertices: Vec<usize>,
    },
    #[error("max conformal distortion {max_distortion:.6} exceeds limit {limit}")]
    Conformality { max_distortion: f64, limit: f64 },
    #[error("image not embedded: faces {faces:?} are {distance:e} apart")]
    NotEmbedded { faces: [usize; 2], distance: f64 },
    #[error("no safe Moebius map after {attempts} rejections; increase the margin")]
    SamplingFailure { attempts: usize },
    #[error("topology error: {0}")]
    Topology(String),
    #[error("undefined result: {0}")]
    Undefined(String),
    #[error("generation failed: {0}")]
    Generation(String),
}

impl Error {
    /// Short, stable identifier used in machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::InvalidMesh(_) => "invalid-mesh",
            Error::InvalidParameter(_) => "parameter",
            Error::Precondition(_) => "precondition",
            Error::PointAtInfinity { .. } | Error::VerticesAtInfinity { .. } => "infinity",
            Error::Conformality { .. } => "conformality",
            Error::NotEmbedded { .. } => "embedding",
            Error::SamplingFailure { .. } => "sampling",
            Error::Topology(_) => "topology",
            Error::Undefined(_) => "undefined",
            Error::Generation(_) => "generation",
        }
    }
}
