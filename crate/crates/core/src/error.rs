use crate::fields::Vec2;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A particle (or a stage position of a multi-stage pusher) left the
    /// support of a grid-backed field.
    #[error("particle escaped the domain at ({:.6}, {:.6}){}", .position.x, .position.y,
        .index.map(|i| format!(" (particle {i})")).unwrap_or_default())]
    Escaped { index: Option<usize>, position: Vec2 },

    #[error("{}{key}: {message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        key: String,
        message: String,
    },

    #[error("poisson solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn escaped(position: Vec2) -> Self {
        Error::Escaped {
            index: None,
            position,
        }
    }

    pub(crate) fn with_index(self, index: usize) -> Self {
        match self {
            Error::Escaped { position, .. } => Error::Escaped {
                index: Some(index),
                position,
            },
            other => other,
        }
    }
}
