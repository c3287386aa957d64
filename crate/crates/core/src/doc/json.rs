use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};

use super::{check_printable, is_valid_name, DocError, Token, WordStream};

const TEXT_KEY: &str = "#text";

/// JSON value with object members kept in order, duplicates included.
#[derive(Debug)]
enum Node {
    Null,
    Scalar(String),
    Array(Vec<Node>),
    Object(Vec<(String, Node)>),
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(NodeVisitor)
    }
}

struct NodeVisitor;

impl<'de> Visitor<'de> for NodeVisitor {
    type Value = Node;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<Node, E> {
        Ok(Node::Null)
    }

    fn visit_bool<E>(self, v: bool) -> Result<Node, E> {
        Ok(Node::Scalar(v.to_string()))
    }

    fn visit_i64<E>(self, v: i64) -> Result<Node, E> {
        Ok(Node::Scalar(v.to_string()))
    }

    fn visit_u64<E>(self, v: u64) -> Result<Node, E> {
        Ok(Node::Scalar(v.to_string()))
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Node, E> {
        serde_json::Number::from_f64(v)
            .map(|n| Node::Scalar(n.to_string()))
            .ok_or_else(|| E::custom("non-finite number"))
    }

    fn visit_str<E>(self, v: &str) -> Result<Node, E> {
        Ok(Node::Scalar(v.to_string()))
    }

    fn visit_string<E>(self, v: String) -> Result<Node, E> {
        Ok(Node::Scalar(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Node, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(Node::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Node, A::Error> {
        let mut members = Vec::new();
        while let Some((k, v)) = map.next_entry::<String, Node>()? {
            members.push((k, v));
        }
        Ok(Node::Object(members))
    }
}

fn shape(msg: impl Into<String>) -> DocError {
    DocError::UnsupportedShape(msg.into())
}

/// Parse JSON that follows the XML mapping convention (`parse_json`).
///
/// The document is an object with exactly one member, the root element.
/// Inside an element object, `-name` members are attributes, `#text` is the
/// element's text, arrays repeat an element and `null` is an empty element.
/// Scalars become text words as serde_json prints them. A bare
/// `"root": {...}` without the enclosing braces is accepted too.
pub fn parse_json(text: &str) -> Result<WordStream, DocError> {
    let trimmed = text.trim();
    let node: Node = if trimmed.starts_with('"') {
        serde_json::from_str(&format!("{{{trimmed}}}"))
    } else {
        serde_json::from_str(trimmed)
    }
    .map_err(|e| DocError::MalformedJson(e.to_string()))?;
    let members = match node {
        Node::Object(m) => m,
        _ => return Err(shape("top level must be an object")),
    };
    let mut members = members.into_iter();
    let (name, value) = match (members.next(), members.next()) {
        (Some(root), None) => root,
        (None, _) => return Err(shape("no root element")),
        _ => return Err(shape("more than one root element")),
    };
    if matches!(value, Node::Array(_)) {
        return Err(shape("root element cannot repeat"));
    }
    let mut tokens = Vec::new();
    element(&name, value, &mut tokens)?;
    WordStream::new(tokens)
}

fn element(name: &str, value: Node, tokens: &mut Vec<Token>) -> Result<(), DocError> {
    if !is_valid_name(name) {
        return Err(shape(format!("unsupported element name {name:?}")));
    }
    tokens.push(Token::Open(name.to_string()));
    match value {
        Node::Null => {}
        Node::Scalar(s) => push_text(s, tokens)?,
        Node::Array(_) => return Err(shape("nested arrays are not supported")),
        Node::Object(members) => {
            let mut text = None;
            let mut children = Vec::new();
            for (key, member) in members {
                if let Some(attr) = key.strip_prefix('-') {
                    let Node::Scalar(v) = member else {
                        return Err(shape(format!("attribute {key:?} must be a scalar")));
                    };
                    if !is_valid_name(attr) {
                        return Err(shape(format!("unsupported attribute name {attr:?}")));
                    }
                    check_printable(&v)?;
                    tokens.push(Token::AttrName(attr.to_string()));
                    tokens.push(Token::AttrValue(v));
                } else if key == TEXT_KEY {
                    let Node::Scalar(v) = member else {
                        return Err(shape("#text must be a scalar"));
                    };
                    if text.replace(v).is_some() {
                        return Err(shape("duplicate #text"));
                    }
                } else {
                    children.push((key, member));
                }
            }
            if text.is_some() && !children.is_empty() {
                return Err(DocError::MixedContentUnsupported);
            }
            if let Some(t) = text {
                push_text(t, tokens)?;
            }
            for (key, member) in children {
                match member {
                    Node::Array(items) => {
                        for item in items {
                            element(&key, item, tokens)?;
                        }
                    }
                    other => element(&key, other, tokens)?,
                }
            }
        }
    }
    tokens.push(Token::Close);
    Ok(())
}

fn push_text(text: String, tokens: &mut Vec<Token>) -> Result<(), DocError> {
    check_printable(&text)?;
    if text.trim().is_empty() {
        return Err(shape("empty or blank text"));
    }
    tokens.push(Token::Variable(text));
    Ok(())
}

/// Compact JSON in the same convention. Text words are always JSON strings;
/// adjacent repeats of a child become an array.
pub fn emit_json(stream: &WordStream) -> String {
    let tokens = stream.tokens();
    let mut out = String::from("{");
    let Some(Token::Open(name)) = tokens.first() else {
        return String::from("{}");
    };
    push_str(&mut out, name);
    out.push(':');
    emit_value(tokens, 0, &mut out);
    out.push('}');
    out
}

fn push_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serializes"));
}

/// Emit the value of the element opened at `start`; returns the index just
/// past its `Close`.
fn emit_value(tokens: &[Token], start: usize, out: &mut String) -> usize {
    let mut i = start + 1;
    let mut attrs = Vec::new();
    while let (Some(Token::AttrName(k)), Some(Token::AttrValue(v))) = (tokens.get(i), tokens.get(i + 1)) {
        attrs.push((k.as_str(), v.as_str()));
        i += 2;
    }
    let text = match tokens.get(i) {
        Some(Token::Variable(t)) => {
            i += 1;
            Some(t.as_str())
        }
        _ => None,
    };
    let has_children = matches!(tokens.get(i), Some(Token::Open(_)));
    if attrs.is_empty() && !has_children {
        match text {
            Some(t) => push_str(out, t),
            None => out.push_str("null"),
        }
        return i + 1;
    }
    out.push('{');
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !std::mem::take(&mut first) {
            out.push(',');
        }
    };
    for (k, v) in attrs {
        sep(out);
        push_str(out, &format!("-{k}"));
        out.push(':');
        push_str(out, v);
    }
    if let Some(t) = text {
        sep(out);
        push_str(out, TEXT_KEY);
        out.push(':');
        push_str(out, t);
    }
    while let Some(Token::Open(name)) = tokens.get(i) {
        let run = repeat_run(tokens, i, name);
        sep(out);
        push_str(out, name);
        out.push(':');
        if run.len() > 1 {
            out.push('[');
            for (n, &child) in run.iter().enumerate() {
                if n > 0 {
                    out.push(',');
                }
                i = emit_value(tokens, child, out);
            }
            out.push(']');
        } else {
            i = emit_value(tokens, i, out);
        }
    }
    out.push('}');
    i + 1
}

/// Start indices of the adjacent siblings named `name` beginning at `start`.
fn repeat_run(tokens: &[Token], start: usize, name: &str) -> Vec<usize> {
    let mut run = Vec::new();
    let mut i = start;
    while let Some(Token::Open(n)) = tokens.get(i) {
        if n != name {
            break;
        }
        run.push(i);
        i = skip_element(tokens, i);
    }
    run
}

fn skip_element(tokens: &[Token], start: usize) -> usize {
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(start) {
        match t {
            Token::Open(_) => depth += 1,
            Token::Close => {
                depth -= 1;
                if depth == 0 {
                    return i + 1;
                }
            }
            _ => {}
        }
    }
    tokens.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::parse_xml;

    const JSON1: &str = r#""root": {
    "-attr1": "value1",
    "-attr2": "value2",
    "name": "iiti",
    "value": "2"
}"#;

    fn words(s: &WordStream) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn braceless_document_matches_xml() {
        let json = parse_json(JSON1).unwrap();
        let xml = parse_xml(r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value></root>"#).unwrap();
        assert_eq!(json, xml);
        assert_eq!(
            emit_json(&json),
            r#"{"root":{"-attr1":"value1","-attr2":"value2","name":"iiti","value":"2"}}"#
        );
    }

    #[test]
    fn arrays_repeat_elements() {
        let s = parse_json(r#"{"a":{"b":["1","2"]}}"#).unwrap();
        assert_eq!(
            words(&s),
            ["Open a", "Open b", "Variable 1", "Close", "Open b", "Variable 2", "Close", "Close"]
        );
        assert_eq!(emit_json(&s), r#"{"a":{"b":["1","2"]}}"#);
        assert_eq!(parse_json(&emit_json(&s)).unwrap(), s);
    }

    #[test]
    fn non_adjacent_repeats_use_duplicate_keys() {
        let xml = parse_xml("<a><b>1</b><c>x</c><b>2</b></a>").unwrap();
        let json = emit_json(&xml);
        assert_eq!(json, r#"{"a":{"b":"1","c":"x","b":"2"}}"#);
        assert_eq!(parse_json(&json).unwrap(), xml);
    }

    #[test]
    fn scalars_nulls_and_text() {
        let s = parse_json(r##"{"a":{"n":2,"f":true,"e":null,"o":{},"t":{"-k":"v","#text":"x"}}}"##).unwrap();
        assert_eq!(
            words(&s),
            [
                "Open a",
                "Open n",
                "Variable 2",
                "Close",
                "Open f",
                "Variable true",
                "Close",
                "Open e",
                "Close",
                "Open o",
                "Close",
                "Open t",
                "AttrName k",
                "AttrValue v",
                "Variable x",
                "Close",
                "Close"
            ]
        );
        assert_eq!(parse_json(&emit_json(&s)).unwrap(), s);
    }

    #[test]
    fn rejects_shapes() {
        assert!(matches!(parse_json("{}"), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json("[1]"), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"a":1,"b":2}"#), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"a":[1,2]}"#), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"a":{"b":[[1]]}}"#), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"a":""}"#), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"a":{"-k":{}}}"#), Err(DocError::UnsupportedShape(_))));
        assert!(matches!(parse_json(r#"{"1a":"x"}"#), Err(DocError::UnsupportedShape(_))));
        assert_eq!(
            parse_json(r##"{"a":{"#text":"x","b":"y"}}"##),
            Err(DocError::MixedContentUnsupported)
        );
        assert!(matches!(parse_json(r#"{"a":"#), Err(DocError::MalformedJson(_))));
        assert_eq!(parse_json(r#"{"a":"é"}"#), Err(DocError::UnsupportedCharacter('\u{e9}')));
    }

    #[test]
    fn attributes_are_hoisted_before_children() {
        let s = parse_json(r#"{"a":{"b":"1","-k":"v"}}"#).unwrap();
        assert_eq!(
            words(&s),
            ["Open a", "AttrName k", "AttrValue v", "Open b", "Variable 1", "Close", "Close"]
        );
    }
}
