use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("mesh parse error at line {line}: {message}")]
    MeshParse { line: usize, message: String },

    #[error("mesh has no triangles")]
    EmptyMesh,

    #[error("voxelization produced no interior voxels (spacing {spacing} too coarse for the mesh)")]
    EmptyInterior { spacing: f64 },

    #[error("mesh is not watertight: parity raycasts disagree on {disagreeing} of {total} voxels")]
    NotWatertight { disagreeing: usize, total: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Poisson ratio out of range: v = {0} (need 0 < v < 0.5)")]
    PoissonOutOfRange(f64),

    #[error("time step {dt} violates the CFL bound dt <= {bound} (0.5 * dx / c, c = {wave_speed})")]
    Cfl { dt: f64, bound: f64, wave_speed: f64 },

    #[error("particle {index} at {position:?} is outside the grid safe margin")]
    OutOfGrid { index: usize, position: [f64; 3] },

    #[error("singular deformation gradient (smallest singular value {0:e})")]
    Singular(f64),

    #[error("non-finite particle state at step {step}, particle {index}: {what}")]
    NonFinite { step: usize, index: usize, what: &'static str },

    #[error("bad frame file: {0}")]
    FrameFormat(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("image encoding error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
