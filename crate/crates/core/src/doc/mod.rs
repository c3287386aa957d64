//! Canonical word stream shared by XML and JSON payloads.
//!
//! Both formats reduce to the same token sequence, so the codec never sees
//! which one a document arrived in:
//!
//! ```
//! use tabula_core::doc::{parse_json, parse_xml};
//!
//! let xml = parse_xml(r#"<root a="1"><b>x</b></root>"#).unwrap();
//! let json = parse_json(r#"{"root":{"-a":"1","b":"x"}}"#).unwrap();
//! assert_eq!(xml, json);
//! ```

mod json;
mod xml;

use std::fmt;

use thiserror::Error;

pub use json::{emit_json, parse_json};
pub use xml::{emit_xml, parse_xml};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("mixed content is not supported")]
    MixedContentUnsupported,
    #[error("character {0:?} is outside the printable range")]
    UnsupportedCharacter(char),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("invalid token stream: {0}")]
    InvalidStream(String),
}

impl DocError {
    pub fn name(&self) -> &'static str {
        match self {
            DocError::MalformedXml(_) => "MalformedXml",
            DocError::MalformedJson(_) => "MalformedJson",
            DocError::MixedContentUnsupported => "MixedContentUnsupported",
            DocError::UnsupportedCharacter(_) => "UnsupportedCharacter",
            DocError::UnsupportedShape(_) => "UnsupportedShape",
            DocError::InvalidStream(_) => "InvalidStream",
        }
    }
}

/// One word of a document, or the end of the innermost open element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Token {
    Open(String),
    AttrName(String),
    AttrValue(String),
    Variable(String),
    Close,
}

impl Token {
    /// The word carried by the token; `None` for [`Token::Close`].
    pub fn word(&self) -> Option<&str> {
        match self {
            Token::Open(w) | Token::AttrName(w) | Token::AttrValue(w) | Token::Variable(w) => Some(w),
            Token::Close => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Open(w) => write!(f, "Open {w}"),
            Token::AttrName(w) => write!(f, "AttrName {w}"),
            Token::AttrValue(w) => write!(f, "AttrValue {w}"),
            Token::Variable(w) => write!(f, "Variable {w}"),
            Token::Close => f.write_str("Close"),
        }
    }
}

/// A validated token sequence describing exactly one root element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordStream {
    tokens: Vec<Token>,
}

impl WordStream {
    pub fn new(tokens: Vec<Token>) -> Result<WordStream, DocError> {
        validate(&tokens)?;
        Ok(WordStream { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    /// Characters in tag names, attribute names and attribute values.
    pub fn non_variable_chars(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| !matches!(t, Token::Variable(_)))
            .filter_map(Token::word)
            .map(str::len)
            .sum()
    }

    pub fn variable_chars(&self) -> usize {
        self.tokens
            .iter()
            .filter_map(|t| match t {
                Token::Variable(w) => Some(w.len()),
                _ => None,
            })
            .sum()
    }
}

impl<'a> IntoIterator for &'a WordStream {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

/// Element and attribute names: an ASCII letter or `_`, then letters, digits,
/// `_`, `-` or `.`. No namespace prefixes.
pub fn is_valid_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

pub(crate) fn check_printable(text: &str) -> Result<(), DocError> {
    match text.chars().find(|c| !(' '..='~').contains(c)) {
        Some(c) => Err(DocError::UnsupportedCharacter(c)),
        None => Ok(()),
    }
}

#[derive(PartialEq)]
enum Content {
    Attrs,
    Text,
    Children,
}

fn validate(tokens: &[Token]) -> Result<(), DocError> {
    let bad = |msg: &str| Err(DocError::InvalidStream(msg.to_string()));
    // one frame per open element: what it has seen so far
    let mut stack: Vec<(Content, Vec<&str>)> = Vec::new();
    let mut finished = false;
    let mut i = 0;
    while i < tokens.len() {
        if finished {
            return bad("tokens after the root element");
        }
        match &tokens[i] {
            Token::Open(name) => {
                if !is_valid_name(name) {
                    return bad(&format!("invalid element name {name:?}"));
                }
                if let Some(top) = stack.last_mut() {
                    match top.0 {
                        Content::Text => return Err(DocError::MixedContentUnsupported),
                        _ => top.0 = Content::Children,
                    }
                }
                stack.push((Content::Attrs, Vec::new()));
            }
            Token::AttrName(name) => {
                let Some(top) = stack.last_mut() else {
                    return bad("attribute outside an element");
                };
                if top.0 != Content::Attrs {
                    return bad("attribute after element content");
                }
                if !is_valid_name(name) {
                    return bad(&format!("invalid attribute name {name:?}"));
                }
                if top.1.contains(&name.as_str()) {
                    return bad(&format!("duplicate attribute {name:?}"));
                }
                top.1.push(name);
                match tokens.get(i + 1) {
                    Some(Token::AttrValue(value)) => {
                        check_printable(value)?;
                        if value.is_empty() {
                            return Err(DocError::UnsupportedShape("empty attribute value".into()));
                        }
                    }
                    _ => return bad("attribute name without a value"),
                }
                i += 1;
            }
            Token::AttrValue(_) => return bad("attribute value without a name"),
            Token::Variable(text) => {
                let Some(top) = stack.last_mut() else {
                    return bad("text outside an element");
                };
                match top.0 {
                    Content::Attrs => top.0 = Content::Text,
                    Content::Text => return bad("two text words in one element"),
                    Content::Children => return Err(DocError::MixedContentUnsupported),
                }
                check_printable(text)?;
                if text.trim().is_empty() {
                    return Err(DocError::UnsupportedShape("empty or blank text".into()));
                }
            }
            Token::Close => {
                if stack.pop().is_none() {
                    return bad("unbalanced close");
                }
                finished = stack.is_empty();
            }
        }
        i += 1;
    }
    if !finished {
        return bad(if tokens.is_empty() { "empty stream" } else { "unclosed element" });
    }
    Ok(())
}

/// 1-based, document-order numbering of the elements of a stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagOrdinals {
    // (token index, element name) per ordinal - 1
    tags: Vec<(usize, String)>,
}

impl TagOrdinals {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Ordinal of the element opened at `token_index`.
    pub fn ordinal_at(&self, token_index: usize) -> Option<usize> {
        self.tags
            .binary_search_by_key(&token_index, |&(i, _)| i)
            .ok()
            .map(|o| o + 1)
    }

    /// Token index of the `Open` carrying `ordinal`.
    pub fn position(&self, ordinal: usize) -> Option<usize> {
        ordinal.checked_sub(1).and_then(|o| self.tags.get(o)).map(|&(i, _)| i)
    }

    pub fn name(&self, ordinal: usize) -> Option<&str> {
        ordinal
            .checked_sub(1)
            .and_then(|o| self.tags.get(o))
            .map(|(_, n)| n.as_str())
    }

    /// `(ordinal, name)` pairs in document order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> + '_ {
        self.tags.iter().enumerate().map(|(o, (_, n))| (o + 1, n.as_str()))
    }
}

pub fn tag_ordinals(stream: &WordStream) -> TagOrdinals {
    let tags = stream
        .iter()
        .enumerate()
        .filter_map(|(i, t)| match t {
            Token::Open(name) => Some((i, name.clone())),
            _ => None,
        })
        .collect();
    TagOrdinals { tags }
}

/// For every token, the ordinal of the innermost element it belongs to.
/// `Open` and its matching `Close` belong to the element itself.
pub fn enclosing_ordinals(stream: &WordStream) -> Vec<usize> {
    let mut out = Vec::with_capacity(stream.len());
    let mut stack = Vec::new();
    let mut next = 0;
    for t in stream {
        match t {
            Token::Open(_) => {
                next += 1;
                stack.push(next);
                out.push(next);
            }
            Token::Close => out.push(stack.pop().unwrap_or(0)),
            _ => out.push(stack.last().copied().unwrap_or(0)),
        }
    }
    out
}

/// Best-effort type of a decoded variable word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Integer,
    Decimal,
    Boolean,
    Text,
}

pub fn infer_type(text: &str) -> ValueType {
    let digits = text.strip_prefix('-').unwrap_or(text);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        return ValueType::Integer;
    }
    if let Some((int, frac)) = digits.split_once('.') {
        let all = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if all(int) && all(frac) {
            return ValueType::Decimal;
        }
    }
    match text {
        "true" | "false" => ValueType::Boolean,
        _ => ValueType::Text,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Token::*;

    fn s(tokens: Vec<Token>) -> Result<WordStream, DocError> {
        WordStream::new(tokens)
    }

    fn open(n: &str) -> Token {
        Open(n.into())
    }

    fn var(v: &str) -> Token {
        Variable(v.into())
    }

    #[test]
    fn grammar_accepts_empty_and_leaf_elements() {
        assert!(s(vec![open("a"), Close]).is_ok());
        assert!(s(vec![open("a"), var("x"), Close]).is_ok());
        assert!(s(vec![open("a"), AttrName("k".into()), AttrValue("v".into()), open("b"), Close, Close]).is_ok());
    }

    #[test]
    fn grammar_rejects() {
        assert_eq!(
            s(vec![open("a"), var("x"), open("b"), Close, Close]),
            Err(DocError::MixedContentUnsupported)
        );
        assert_eq!(
            s(vec![open("a"), open("b"), Close, var("x"), Close]),
            Err(DocError::MixedContentUnsupported)
        );
        assert!(matches!(s(vec![]), Err(DocError::InvalidStream(_))));
        assert!(matches!(s(vec![open("a")]), Err(DocError::InvalidStream(_))));
        assert!(matches!(s(vec![open("a"), Close, Close]), Err(DocError::InvalidStream(_))));
        assert!(matches!(s(vec![open("a"), Close, open("b"), Close]), Err(DocError::InvalidStream(_))));
        assert!(matches!(s(vec![open("1a"), Close]), Err(DocError::InvalidStream(_))));
        assert!(matches!(
            s(vec![open("a"), open("b"), Close, AttrName("k".into()), AttrValue("v".into()), Close]),
            Err(DocError::InvalidStream(_))
        ));
        assert!(matches!(s(vec![open("a"), var(" "), Close]), Err(DocError::UnsupportedShape(_))));
        assert_eq!(s(vec![open("a"), var("\u{e9}"), Close]), Err(DocError::UnsupportedCharacter('\u{e9}')));
    }

    #[test]
    fn ordinals_follow_document_order() {
        let st = s(vec![open("root"), open("name"), var("x"), Close, open("value"), var("2"), Close, Close]).unwrap();
        let ords = tag_ordinals(&st);
        let names: Vec<_> = ords.iter().collect();
        assert_eq!(names, vec![(1, "root"), (2, "name"), (3, "value")]);
        assert_eq!(ords.ordinal_at(4), Some(3));
        assert_eq!(ords.position(2), Some(1));
        assert_eq!(enclosing_ordinals(&st), vec![1, 2, 2, 2, 3, 3, 3, 1]);
    }

    #[test]
    fn type_tags() {
        assert_eq!(infer_type("2"), ValueType::Integer);
        assert_eq!(infer_type("-17"), ValueType::Integer);
        assert_eq!(infer_type("2.5"), ValueType::Decimal);
        assert_eq!(infer_type("true"), ValueType::Boolean);
        assert_eq!(infer_type("iiti"), ValueType::Text);
        assert_eq!(infer_type("1."), ValueType::Text);
    }
}
