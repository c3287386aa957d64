use std::fmt;
use std::str::FromStr;

use super::{is_digest_word, CodecError};

/// Access header plus body words, as carried in a `text/plain` body.
///
/// The serialized form is each ordinal followed by a comma, one space, then
/// the words separated by single spaces: `1, 04 008 ... 0 0`. With no
/// ordinals the body stands alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct EncryptedMessage {
    pub access: Vec<usize>,
    pub words: Vec<String>,
}

impl EncryptedMessage {
    pub fn new(access: Vec<usize>, words: Vec<String>) -> EncryptedMessage {
        EncryptedMessage { access, words }
    }

    pub fn body(&self) -> String {
        self.words.join(" ")
    }

    /// Same body, different header.
    pub fn with_access(&self, access: Vec<usize>) -> EncryptedMessage {
        EncryptedMessage {
            access,
            words: self.words.clone(),
        }
    }
}

impl fmt::Display for EncryptedMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.access {
            write!(f, "{o},")?;
        }
        if !self.access.is_empty() {
            f.write_str(" ")?;
        }
        f.write_str(&self.body())
    }
}

fn malformed(msg: impl Into<String>) -> CodecError {
    CodecError::MalformedMessage(msg.into())
}

impl FromStr for EncryptedMessage {
    type Err = CodecError;

    fn from_str(text: &str) -> Result<Self, CodecError> {
        let text = text.strip_suffix('\n').unwrap_or(text);
        let (access, body) = match text.split_once(' ') {
            Some((head, rest)) if head.ends_with(',') => (parse_access(head)?, rest),
            _ if text.ends_with(',') => return Err(malformed("access header without a body")),
            _ => (Vec::new(), text),
        };
        if body.is_empty() {
            return Err(malformed("empty body"));
        }
        let mut words = Vec::new();
        for word in body.split(' ') {
            let digits = !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit());
            if !digits && !is_digest_word(word) {
                return Err(malformed(format!("bad word {word:?}")));
            }
            words.push(word.to_string());
        }
        Ok(EncryptedMessage { access, words })
    }
}

fn parse_access(head: &str) -> Result<Vec<usize>, CodecError> {
    let inner = &head[..head.len() - 1];
    inner
        .split(',')
        .map(|o| {
            let canonical = !o.is_empty() && o.bytes().all(|b| b.is_ascii_digit()) && !o.starts_with('0');
            if !canonical {
                return Err(malformed(format!("bad ordinal {o:?}")));
            }
            o.parse().map_err(|_| malformed(format!("bad ordinal {o:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for text in [
            "1, 04 008 0002 009 0003 05 122122104122 0 06 349 0 0",
            "3,4, 01 0 adc1aeffe1fe867740f976fd55c0c481",
            "0117126126104 0",
        ] {
            let msg: EncryptedMessage = text.parse().unwrap();
            assert_eq!(msg.to_string(), text);
        }
        let msg: EncryptedMessage = "3,4, 01 0".parse().unwrap();
        assert_eq!(msg.access, vec![3, 4]);
        assert_eq!(msg.words, vec!["01", "0"]);
    }

    #[test]
    fn empty_header_leaves_body_alone() {
        let msg = EncryptedMessage::new(vec![], vec!["01".into(), "0".into()]);
        assert_eq!(msg.to_string(), "01 0");
        assert_eq!(msg.with_access(vec![1]).to_string(), "1, 01 0");
    }

    #[test]
    fn rejects() {
        for text in ["", "1,", "1, ", "1,  01 0", "01  0", "0,1, 01 0", "01, 01 0", "1 , 01 0", "01 x 0", "01 0 "] {
            assert!(text.parse::<EncryptedMessage>().is_err(), "{text:?}");
        }
    }
}
