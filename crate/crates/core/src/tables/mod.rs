//! Temporary table, symbol table and tag table.

mod arrangement;
mod symbol;
mod tag;
mod temp;

use thiserror::Error;

pub use arrangement::{arrangement_for, Arrangement, CharClass};
pub use symbol::SymbolTable;
pub use tag::{tat_upsert, NonVarKind, TagTable, TatContext, TatEntry};
pub use temp::TempTable;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("code space exhausted")]
    CodeSpaceExhausted,
    #[error("code sum overflow")]
    SumOverflow,
    #[error("character {0:?} has no symbol code")]
    UnsupportedCharacter(char),
    #[error("duplicate tag table entry {0:?}")]
    DuplicateEntry(String),
}

impl TableError {
    pub fn name(&self) -> &'static str {
        match self {
            TableError::CodeSpaceExhausted => "CodeSpaceExhausted",
            TableError::SumOverflow => "SumOverflow",
            TableError::UnsupportedCharacter(_) => "UnsupportedCharacter",
            TableError::DuplicateEntry(_) => "DuplicateEntry",
        }
    }
}
