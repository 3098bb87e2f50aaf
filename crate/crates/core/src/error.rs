use thiserror::Error;

/// Errors produced by the pattern engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold edge ({0}, {1}): more than two incident faces or inconsistent orientation")]
    NonManifoldEdge(u32, u32),

    #[error("non-manifold vertex {0}: incident faces do not form a single fan")]
    NonManifoldVertex(u32),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("stale split events: {0}")]
    StaleEvents(String),

    #[error("empty seed set")]
    EmptySeeds,

    #[error("seed vertex {0} lies outside the region")]
    SeedOutsideRegion(u32),

    #[error("overlapping seed sets at vertex {0}")]
    OverlappingSeeds(u32),

    #[error("unknown region {0}")]
    UnknownRegion(u32),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unreachable: {0}")]
    Unreachable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("macro `{name}` is not applicable: {reason}")]
    NotApplicable { name: String, reason: String },

    #[error("unknown macro `{0}`")]
    UnknownMacro(String),

    #[error("snapshot belongs to a different session")]
    ForeignSnapshot,

    #[error("nothing to undo")]
    NothingToUndo,

    #[error("script error: {0}")]
    Script(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable snake_case name of the variant, for structured error payloads.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::NonManifoldEdge(..) => "non_manifold_edge",
            Error::NonManifoldVertex(_) => "non_manifold_vertex",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::Degenerate(_) => "degenerate",
            Error::InvalidSplit(_) => "invalid_split",
            Error::StaleEvents(_) => "stale_events",
            Error::EmptySeeds => "empty_seeds",
            Error::SeedOutsideRegion(_) => "seed_outside_region",
            Error::OverlappingSeeds(_) => "overlapping_seeds",
            Error::UnknownRegion(_) => "unknown_region",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::Unreachable(_) => "unreachable",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotApplicable { .. } => "not_applicable",
            Error::UnknownMacro(_) => "unknown_macro",
            Error::ForeignSnapshot => "foreign_snapshot",
            Error::NothingToUndo => "nothing_to_undo",
            Error::Script(_) => "script",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
