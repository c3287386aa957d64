//! Word-level encoding of a [`WordStream`](crate::doc::WordStream) into
//! decimal words, and back.
//!
//! Every word of the output is one of
//!
//! | word            | meaning                          |
//! |-----------------|----------------------------------|
//! | `0`             | closes the innermost element     |
//! | `0` + digits    | element name                     |
//! | `00` + digits   | attribute name                   |
//! | `000` + digits  | attribute value                  |
//! | digits          | text (first digit nonzero)       |
//!
//! Symbol codes and tag-table codes never start with `0`, so the marker is
//! always the run of leading zeros.

mod engine;
mod message;
mod state;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::doc::DocError;
use crate::tables::{NonVarKind, SymbolTable, TableError};

pub use engine::{stbd, stbe, tatbd, tatbe, Session};
pub(crate) use engine::{commit_new_words, decode_word, encode_token};
pub use message::EncryptedMessage;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("character {0:?} has no symbol code")]
    UnsupportedCharacter(char),
    #[error("code space exhausted")]
    CodeSpaceExhausted,
    #[error("code sum overflow")]
    SumOverflow,
    #[error("word {0:?} is not a whole number of codes")]
    MalformedWord(String),
    #[error("word {0:?} contains an unknown code")]
    UnknownCode(String),
    #[error("closers do not balance the open elements")]
    UnbalancedClosers,
    #[error("word {0:?} is not in the tag table")]
    UnknownTatCode(String),
    #[error("symbol form of {0:?} collides with a tag-table code")]
    AmbiguousWord(String),
    #[error("word {0:?} cannot be classified")]
    Unclassifiable(String),
    #[error("digest word {0:?} where none is expected")]
    UnexpectedDigest(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("decoded words do not form a document: {0}")]
    InvalidStream(DocError),
    #[error("session state line {0}: {1}")]
    CorruptState(usize, String),
}

impl CodecError {
    pub fn name(&self) -> &'static str {
        match self {
            CodecError::UnsupportedCharacter(_) => "UnsupportedCharacter",
            CodecError::CodeSpaceExhausted => "CodeSpaceExhausted",
            CodecError::SumOverflow => "SumOverflow",
            CodecError::MalformedWord(_) => "MalformedWord",
            CodecError::UnknownCode(_) => "UnknownCode",
            CodecError::UnbalancedClosers => "UnbalancedClosers",
            CodecError::UnknownTatCode(_) => "UnknownTatCode",
            CodecError::AmbiguousWord(_) => "AmbiguousWord",
            CodecError::Unclassifiable(_) => "Unclassifiable",
            CodecError::UnexpectedDigest(_) => "UnexpectedDigest",
            CodecError::MalformedMessage(_) => "MalformedMessage",
            CodecError::InvalidStream(e) => e.name(),
            CodecError::CorruptState(..) => "CorruptState",
        }
    }
}

impl From<TableError> for CodecError {
    fn from(e: TableError) -> Self {
        match e {
            TableError::CodeSpaceExhausted | TableError::DuplicateEntry(_) => CodecError::CodeSpaceExhausted,
            TableError::SumOverflow => CodecError::SumOverflow,
            TableError::UnsupportedCharacter(c) => CodecError::UnsupportedCharacter(c),
        }
    }
}

/// Which encoder produced (or should produce) a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Every word spelled out code by code.
    #[default]
    St,
    /// Known non-variable words replaced by their tag-table code.
    Tat,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::St => "st",
            Mode::Tat => "tat",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "st" => Ok(Mode::St),
            "tat" => Ok(Mode::Tat),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordKind {
    Closer,
    Tag,
    AttrName,
    AttrValue,
    Variable,
    Digest,
}

impl WordKind {
    pub fn marker(self) -> &'static str {
        match self {
            WordKind::Tag => "0",
            WordKind::AttrName => "00",
            WordKind::AttrValue => "000",
            _ => "",
        }
    }

    pub fn non_var_kind(self) -> Option<NonVarKind> {
        match self {
            WordKind::Tag => Some(NonVarKind::Tag),
            WordKind::AttrName => Some(NonVarKind::AttrName),
            WordKind::AttrValue => Some(NonVarKind::AttrValue),
            _ => None,
        }
    }
}

/// Hex lengths of the supported digest algorithms.
pub const DIGEST_HEX_LENGTHS: [usize; 3] = [32, 40, 64];

/// Lowercase hex of a supported digest length with at least one letter.
pub fn is_digest_word(word: &str) -> bool {
    DIGEST_HEX_LENGTHS.contains(&word.len())
        && word.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
        && word.bytes().any(|b| b.is_ascii_alphabetic())
}

/// Classify a word from its text alone (`classify_word`).
pub fn classify_word(word: &str) -> Result<WordKind, CodecError> {
    if !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()) {
        if word == "0" {
            return Ok(WordKind::Closer);
        }
        let zeros = word.bytes().take_while(|&b| b == b'0').count();
        let kind = match zeros {
            _ if zeros == word.len() => None,
            0 => Some(WordKind::Variable),
            1 => Some(WordKind::Tag),
            2 => Some(WordKind::AttrName),
            3 => Some(WordKind::AttrValue),
            _ => None,
        };
        return kind.ok_or_else(|| CodecError::Unclassifiable(word.to_string()));
    }
    if is_digest_word(word) {
        return Ok(WordKind::Digest);
    }
    Err(CodecError::Unclassifiable(word.to_string()))
}

/// The digits after the marker of a word of known kind.
pub fn strip_marker(word: &str, kind: WordKind) -> &str {
    &word[kind.marker().len().min(word.len())..]
}

/// Marker plus the concatenated symbol codes of `word` (`encode_word`).
pub fn encode_word(word: &str, kind: WordKind, st: &SymbolTable) -> Result<String, CodecError> {
    let mut out = String::with_capacity(kind.marker().len() + word.len() * st.width() as usize);
    out.push_str(kind.marker());
    for c in word.chars() {
        let code = st.code(c).ok_or(CodecError::UnsupportedCharacter(c))?;
        out.push_str(&code.to_string());
    }
    Ok(out)
}

/// Inverse of [`encode_word`] on the digits after the marker.
pub fn decode_digits(digits: &str, st: &SymbolTable) -> Result<String, CodecError> {
    let width = st.width() as usize;
    if digits.is_empty() || !digits.len().is_multiple_of(width) || !digits.is_ascii() {
        return Err(CodecError::MalformedWord(digits.to_string()));
    }
    let mut out = String::with_capacity(digits.len() / width);
    for chunk in digits.as_bytes().chunks(width) {
        let chunk = std::str::from_utf8(chunk).expect("ascii");
        let c = chunk
            .parse::<u128>()
            .ok()
            .and_then(|code| st.char_for(code))
            .ok_or_else(|| CodecError::UnknownCode(digits.to_string()))?;
        out.push(c);
    }
    Ok(out)
}
