use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("degenerate sample: points are collinear")]
    DegenerateSample,

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("voxel grids are not on a shared lattice ({0} vs {1})")]
    GridMismatch(f64, f64),

    #[error("voxel IoU undefined: both grids are empty")]
    EmptyUnion,

    #[error("proposal {0} is not visible in any view")]
    InvisibleProposal(usize),

    #[error("unclosed wall loop: gap of {gap:.3} m exceeds tolerance")]
    UnclosedWallLoop { gap: f64 },

    #[error("pool of {size} proposals exceeds brute-force limit {max}")]
    PoolTooLarge { size: usize, max: usize },

    #[error("could not place {what} after {tries} tries")]
    Placement { what: String, tries: usize },

    #[error("{format} parse error at line {line}: {msg}")]
    Parse {
        format: &'static str,
        line: usize,
        msg: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid pool: {0}")]
    Pool(String),

    #[error("invalid observation data: {0}")]
    Observation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn parse(format: &'static str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            format,
            line,
            msg: msg.into(),
        }
    }
}
