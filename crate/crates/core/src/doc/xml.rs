use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{check_printable, is_valid_name, DocError, Token, WordStream};

fn malformed(e: impl std::fmt::Display) -> DocError {
    DocError::MalformedXml(e.to_string())
}

struct Frame {
    text: String,
    has_children: bool,
}

/// Parse element-only XML into a [`WordStream`] (`parse_xml`).
///
/// Whitespace-only text between elements is dropped. Comments, processing
/// instructions, CDATA, DOCTYPE and namespace prefixes are rejected; a
/// leading XML declaration is allowed.
pub fn parse_xml(text: &str) -> Result<WordStream, DocError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().expand_empty_elements = true;
    let mut tokens = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut seen_root = false;
    let mut seen_anything = false;
    loop {
        let event = reader.read_event().map_err(malformed)?;
        match event {
            Event::Decl(_) if !seen_anything => {}
            Event::Start(e) => {
                if stack.is_empty() && seen_root {
                    return Err(malformed("more than one root element"));
                }
                if let Some(parent) = stack.last_mut() {
                    if !parent.text.trim().is_empty() {
                        return Err(DocError::MixedContentUnsupported);
                    }
                    parent.has_children = true;
                    parent.text.clear();
                }
                seen_root = true;
                open_element(&e, &mut tokens)?;
                stack.push(Frame {
                    text: String::new(),
                    has_children: false,
                });
            }
            Event::End(_) => {
                let frame = stack.pop().ok_or_else(|| malformed("unexpected end tag"))?;
                if !frame.text.trim().is_empty() {
                    if frame.has_children {
                        return Err(DocError::MixedContentUnsupported);
                    }
                    check_printable(&frame.text)?;
                    tokens.push(Token::Variable(frame.text));
                }
                tokens.push(Token::Close);
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(malformed)?;
                match stack.last_mut() {
                    Some(frame) => {
                        if frame.has_children && !s.trim().is_empty() {
                            return Err(DocError::MixedContentUnsupported);
                        }
                        frame.text.push_str(&s);
                    }
                    None if s.trim().is_empty() => {}
                    None => return Err(malformed("text outside the root element")),
                }
            }
            Event::Eof => break,
            Event::Empty(_) => unreachable!("empty elements are expanded"),
            Event::Decl(_) => return Err(malformed("misplaced XML declaration")),
            Event::CData(_) => return Err(malformed("CDATA sections are not supported")),
            Event::Comment(_) => return Err(malformed("comments are not supported")),
            Event::PI(_) => return Err(malformed("processing instructions are not supported")),
            Event::DocType(_) => return Err(malformed("DOCTYPE is not supported")),
        }
        seen_anything = true;
    }
    if !stack.is_empty() {
        return Err(malformed("unclosed element"));
    }
    if !seen_root {
        return Err(malformed("no root element"));
    }
    WordStream::new(tokens)
}

fn open_element(e: &BytesStart<'_>, tokens: &mut Vec<Token>) -> Result<(), DocError> {
    let name = std::str::from_utf8(e.name().as_ref()).map_err(malformed)?.to_string();
    if !is_valid_name(&name) {
        return Err(malformed(format!("unsupported element name {name:?}")));
    }
    tokens.push(Token::Open(name));
    for attr in e.attributes() {
        let attr = attr.map_err(malformed)?;
        let key = std::str::from_utf8(attr.key.as_ref()).map_err(malformed)?;
        if !is_valid_name(key) || key == "xmlns" {
            return Err(malformed(format!("unsupported attribute name {key:?}")));
        }
        let value = attr.unescape_value().map_err(malformed)?;
        check_printable(&value)?;
        if value.is_empty() {
            return Err(DocError::UnsupportedShape("empty attribute value".into()));
        }
        tokens.push(Token::AttrName(key.to_string()));
        tokens.push(Token::AttrValue(value.into_owned()));
    }
    Ok(())
}

/// Canonical XML: double-quoted attributes separated by single spaces, no
/// whitespace between elements, empty elements as `<a></a>`.
pub fn emit_xml(stream: &WordStream) -> String {
    let mut out = String::new();
    let mut names: Vec<&str> = Vec::new();
    let mut tag_open = false;
    for token in stream {
        match token {
            Token::Open(name) => {
                if tag_open {
                    out.push('>');
                }
                out.push('<');
                out.push_str(name);
                names.push(name);
                tag_open = true;
            }
            Token::AttrName(name) => {
                out.push(' ');
                out.push_str(name);
            }
            Token::AttrValue(value) => {
                out.push_str("=\"");
                out.push_str(&escape(value.as_str()));
                out.push('"');
            }
            Token::Variable(text) => {
                if tag_open {
                    out.push('>');
                    tag_open = false;
                }
                out.push_str(&escape(text.as_str()));
            }
            Token::Close => {
                if tag_open {
                    out.push('>');
                    tag_open = false;
                }
                let name = names.pop().unwrap_or_default();
                out.push_str("</");
                out.push_str(name);
                out.push('>');
            }
        }
    }
    out
}
