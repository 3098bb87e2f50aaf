use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] geopattern::Error),

    #[error("cannot load mesh {path}: {source}")]
    Mesh { path: String, source: geopattern::Error },

    #[error("command {index} ({kind}) failed: {source}")]
    CommandFailed { index: usize, kind: &'static str, source: geopattern::Error },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Usage(String),
}
