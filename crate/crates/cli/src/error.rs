use tabula_core::{CodecError, CompositionError, DocError, KeyError, KeyStoreError, TableError};
use tabula_net::NetError;

/// An error with the machine-readable name printed before its message.
#[derive(Debug)]
pub struct CliError {
    pub name: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(name: &'static str, message: impl Into<String>) -> CliError {
        CliError {
            name,
            message: message.into(),
        }
    }
}

macro_rules! named {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::new(e.name(), e.to_string())
            }
        }
    )*};
}

named!(CodecError, CompositionError, DocError, KeyError, KeyStoreError, TableError, NetError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("Io", e.to_string())
    }
}
