use tabula_core::{CodecError, CompositionError, KeyStoreError};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("cannot bind {addr}: {reason}")]
    Bind { addr: String, reason: String },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    KeyStore(#[from] KeyStoreError),
}

impl NetError {
    pub fn name(&self) -> &'static str {
        match self {
            NetError::Bind { .. } => "Bind",
            NetError::BadRequest(_) => "BadRequest",
            NetError::Transport(_) => "Transport",
            NetError::Malformed(_) => "Malformed",
            NetError::Status { .. } => "HttpStatus",
            NetError::Config(_) => "InvalidScenario",
            NetError::Codec(e) => e.name(),
            NetError::Composition(e) => e.name(),
            NetError::KeyStore(e) => e.name(),
        }
    }
}

impl From<reqwest::Error> for NetError {
    fn from(e: reqwest::Error) -> Self {
        NetError::Transport(e.to_string())
    }
}
