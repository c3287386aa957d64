//! Text dump of a session's tables.
//!
//! ```text
//! [12,6,1,1,1,14,4,1,3,2]
//! 97 153
//! ...
//! tag root 4
//! attr-value value1 2
//! ```
//!
//! The first line is the key, then one `<codepoint> <code>` line per symbol
//! and one `<kind> <word> <code>` line per tag-table entry in insertion
//! order. Reading a dump rebuilds the symbol table from the key and checks
//! it against the listed codes.

use crate::key::TenElementKey;
use crate::tables::{NonVarKind, TagTable, TatContext, TatEntry};

use super::{CodecError, Session};

impl Session {
    pub fn dump(&self) -> String {
        let mut out = format!("{}\n", self.key());
        for (c, code) in self.st().entries() {
            out.push_str(&format!("{} {code}\n", u32::from(c)));
        }
        for e in self.tat().entries() {
            out.push_str(&format!("{} {} {}\n", e.kind, e.word, e.code));
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Session, CodecError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| CodecError::CorruptState(1, "empty".into()))?;
        let key = TenElementKey::parse(first.trim()).map_err(|e| CodecError::CorruptState(1, e.to_string()))?;
        let base = Session::new(key)?;
        let mut tat = TagTable::new();
        for (i, line) in lines {
            let bad = |reason: String| CodecError::CorruptState(i + 1, reason);
            let (head, rest) = line.split_once(' ').ok_or_else(|| bad("expected at least two fields".into()))?;
            if let Ok(cp) = head.parse::<u32>() {
                let c = char::from_u32(cp).ok_or_else(|| bad(format!("bad code point {cp}")))?;
                let code: u128 = rest.parse().map_err(|_| bad(format!("bad code {rest:?}")))?;
                if base.st().code(c) != Some(code) {
                    return Err(bad(format!("symbol code of {c:?} does not match the key")));
                }
                continue;
            }
            let kind: NonVarKind = head.parse().map_err(|_| bad(format!("unknown kind {head:?}")))?;
            let (word, code) = rest.rsplit_once(' ').ok_or_else(|| bad("expected a word and a code".into()))?;
            let code: u64 = code.parse().map_err(|_| bad(format!("bad code {code:?}")))?;
            tat.insert_raw(TatEntry {
                word: word.to_string(),
                kind,
                code,
            })
            .map_err(|e| bad(e.to_string()))?;
        }
        let ctx = TatContext::for_count(tat.len());
        Ok(Session::with_state(key, tat, ctx)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Mode;
    use crate::doc::parse_xml;

    const XML1: &str = r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value></root>"#;

    #[test]
    fn dump_round_trip() {
        let mut s = Session::new("[12,6,1,1,1,14,4,1,3,2]".parse().unwrap()).unwrap();
        s.encode(&parse_xml(XML1).unwrap(), Mode::St, &[]).unwrap();
        let text = s.dump();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("[12,6,1,1,1,14,4,1,3,2]"));
        assert!(text.contains("\n106 125\n"));
        assert!(text.contains("\ntag root 4\n"));
        assert!(text.ends_with("\ntag value 6\n"));
        let back = Session::from_dump(&text).unwrap();
        assert_eq!(back, s);
        let mut a = back.clone();
        let mut b = s.clone();
        let doc = parse_xml(XML1).unwrap();
        assert_eq!(a.encode(&doc, Mode::Tat, &[]).unwrap(), b.encode(&doc, Mode::Tat, &[]).unwrap());
    }

    #[test]
    fn corrupt_dumps() {
        let mut s = Session::new("[12,6,1,1,1,14,4,1,3,2]".parse().unwrap()).unwrap();
        s.encode(&parse_xml(XML1).unwrap(), Mode::St, &[]).unwrap();
        let good = s.dump();
        for (bad, line) in [
            (good.replacen("106 125", "106 126", 1), 0),
            (good.replacen("tag root 4", "tag root 8", 1), 0),
            (good.replacen("tag root 4", "label root 4", 1), 0),
            ("[1,2]\n".to_string(), 1),
            (String::new(), 1),
        ] {
            match Session::from_dump(&bad) {
                Err(CodecError::CorruptState(l, _)) => assert!(line == 0 || l == line, "{l}"),
                other => panic!("{other:?}"),
            }
        }
    }
}
