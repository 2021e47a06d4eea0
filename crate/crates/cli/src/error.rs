use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] eeqdm::Error),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Checkpoint(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Short machine-readable category printed before the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                eeqdm::Error::Structural(_) => "structural",
                eeqdm::Error::Encoding(_) => "encoding",
                eeqdm::Error::Capacity { .. } => "capacity",
                eeqdm::Error::Config(_) => "config",
                eeqdm::Error::Format(_) => "format",
                eeqdm::Error::Length { .. } => "length",
                eeqdm::Error::Shape(_) => "shape",
                eeqdm::Error::NonFinite(_) => "non-finite",
                eeqdm::Error::Io(_) => "io",
            },
            CliError::Config(_) => "config",
            CliError::Checkpoint(_) => "checkpoint",
            CliError::Io(_) => "io",
            CliError::Usage(_) => "usage",
        }
    }

    /// `error: <kind>: <message>` with any line breaks flattened.
    pub fn report_line(&self) -> String {
        let full = self.to_string();
        // Core messages already carry their category as a "<category>: " prefix.
        let msg = match self {
            CliError::Core(_) => full.split_once(": ").map_or(full.as_str(), |(_, rest)| rest),
            _ => full.as_str(),
        };
        let msg = msg.replace(['\n', '\r'], " ");
        format!("error: {}: {}", self.kind(), msg.trim())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
