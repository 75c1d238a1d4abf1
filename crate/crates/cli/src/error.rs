use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] biphoton_povm::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 2 invalid configuration, 3 numerical degeneracy,
    /// 4 resource limit, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use biphoton_povm::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidArgument(_) | E::IncompatibleGrid(_)) => 2,
            CliError::Core(E::Degenerate(_)) => 3,
            CliError::Core(E::ResourceLimit(_)) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}
