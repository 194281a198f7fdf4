use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] polar_coded::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 2 for bad input, 3 for anything that went wrong while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        use polar_coded::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Construction(_) => "construction",
                E::Validation(_) => "validation",
                E::Shape(_) => "shape",
                E::NotDecodable(_) => "not_decodable",
                E::Subcode { .. } => "subcode",
                E::Conditioning(_) => "conditioning",
                E::Fetch(_) => "fetch",
                E::Divergence(_) => "divergence",
                E::Timeout { .. } => "timeout",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
