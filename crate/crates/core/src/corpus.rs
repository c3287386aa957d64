//! Seeded document generator and size measurements.

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::codec::{CodecError, Mode, Session};
use crate::doc::{emit_xml, Token, WordStream};
use crate::key::TenElementKey;

/// How much of a document's text is structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    /// More than 60% of the characters are names and attribute values.
    NonVariableDominant,
    Balanced,
    /// Less than 40%.
    VariableDominant,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::NonVariableDominant, Stratum::Balanced, Stratum::VariableDominant];

    pub fn of(stream: &WordStream) -> Stratum {
        let nv = stream.non_variable_chars();
        let total = nv + stream.variable_chars();
        match nv * 10 {
            x if x > total * 6 => Stratum::NonVariableDominant,
            x if x < total * 4 => Stratum::VariableDominant,
            _ => Stratum::Balanced,
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stratum::NonVariableDominant => "non-variable",
            Stratum::Balanced => "balanced",
            Stratum::VariableDominant => "variable",
        })
    }
}

/// Random documents over a fixed alphabet.
#[derive(Debug, Clone)]
pub struct DocGen {
    first: Vec<char>,
    rest: Vec<char>,
    text: Vec<char>,
    pub max_depth: u32,
    pub max_children: usize,
}

impl DocGen {
    /// `None` when the alphabet cannot spell an element name.
    pub fn for_alphabet(alphabet: impl IntoIterator<Item = char>) -> Option<DocGen> {
        let text: Vec<char> = alphabet.into_iter().filter(|c| (' '..='~').contains(c)).collect();
        let first: Vec<char> = text.iter().copied().filter(|c| c.is_ascii_alphabetic() || *c == '_').collect();
        let rest: Vec<char> = text
            .iter()
            .copied()
            .filter(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            .collect();
        let printable = text.iter().any(|c| *c != ' ');
        (!first.is_empty() && printable).then_some(DocGen {
            first,
            rest,
            text,
            max_depth: 3,
            max_children: 4,
        })
    }

    /// Generator for documents every character of which `key` can encode.
    pub fn for_key(key: &TenElementKey) -> Option<DocGen> {
        let st = crate::tables::SymbolTable::build(key).ok()?;
        DocGen::for_alphabet(st.entries().map(|(c, _)| c))
    }

    pub fn name<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> String {
        let mut s = String::with_capacity(len.max(1));
        s.push(*self.first.choose(rng).expect("non-empty"));
        for _ in 1..len {
            s.push(*self.rest.choose(rng).expect("first chars are valid rest chars"));
        }
        s
    }

    /// Printable text without leading or trailing blanks.
    pub fn text<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> String {
        let len = len.max(1);
        loop {
            let s: String = (0..len).map(|_| *self.text.choose(rng).expect("non-empty")).collect();
            let t = s.trim();
            if !t.is_empty() {
                return t.to_string();
            }
        }
    }

    /// A document whose names come from a small pool, so they repeat the
    /// way element names do in real payloads.
    pub fn document<R: Rng + ?Sized>(&self, rng: &mut R, name_len: usize, text_len: usize) -> WordStream {
        let pool: Vec<String> = (0..rng.random_range(2..=6))
            .map(|_| {
                let len = rng.random_range(1..=name_len.max(1));
                self.name(rng, len)
            })
            .collect();
        let mut tokens = Vec::new();
        self.element(rng, &pool, 0, text_len, &mut tokens);
        WordStream::new(tokens).expect("generated documents are well formed")
    }

    fn element<R: Rng + ?Sized>(&self, rng: &mut R, pool: &[String], depth: u32, text_len: usize, out: &mut Vec<Token>) {
        out.push(Token::Open(pool.choose(rng).expect("non-empty").clone()));
        let mut used: Vec<&String> = Vec::new();
        for _ in 0..rng.random_range(0..=2) {
            let attr = pool.choose(rng).expect("non-empty");
            if used.contains(&attr) {
                continue;
            }
            used.push(attr);
            out.push(Token::AttrName(attr.clone()));
            let len = rng.random_range(1..=4);
            out.push(Token::AttrValue(self.name(rng, len)));
        }
        let children = if depth < self.max_depth { rng.random_range(0..=self.max_children) } else { 0 };
        if children == 0 {
            if rng.random_bool(0.9) {
                let len = rng.random_range(1..=text_len.max(1));
                out.push(Token::Variable(self.text(rng, len)));
            }
        } else {
            for _ in 0..children {
                self.element(rng, pool, depth + 1, text_len, out);
            }
        }
        out.push(Token::Close);
    }
}

/// A generated document with its measured stratum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDoc {
    pub stratum: Stratum,
    pub stream: WordStream,
}

/// `per_stratum` documents of each stratum. Name and text lengths are
/// skewed per target and the stratum is then measured, not assumed.
pub fn generate_corpus<R: Rng + ?Sized>(gen: &DocGen, per_stratum: usize, rng: &mut R) -> Vec<CorpusDoc> {
    let mut out = Vec::with_capacity(per_stratum * 3);
    for target in Stratum::ALL {
        let (name_len, text_len) = match target {
            Stratum::NonVariableDominant => (12, 3),
            Stratum::Balanced => (6, 8),
            Stratum::VariableDominant => (3, 40),
        };
        let mut found = 0;
        while found < per_stratum {
            let stream = gen.document(rng, name_len, text_len);
            if Stratum::of(&stream) == target {
                out.push(CorpusDoc { stratum: target, stream });
                found += 1;
            }
        }
    }
    out
}

/// One row of the size table, in bytes or characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRow {
    pub non_variable_chars: usize,
    pub variable_chars: usize,
    pub original: usize,
    pub stbe: usize,
    pub tatbe: usize,
}

impl SizeRow {
    pub fn tatbe_over_stbe(&self) -> f64 {
        self.tatbe as f64 / self.stbe as f64
    }
}

/// Sizes of `stream` as XML, as a first-contact symbol-table message and as
/// a tag-table message once the tag table has seen the document.
pub fn measure_sizes(stream: &WordStream, key: &TenElementKey) -> Result<SizeRow, CodecError> {
    let mut session = Session::new(*key)?;
    let st = session.encode(stream, Mode::St, &[])?.to_string().len();
    let tat = session.encode(stream, Mode::Tat, &[])?.to_string().len();
    Ok(SizeRow {
        non_variable_chars: stream.non_variable_chars(),
        variable_chars: stream.variable_chars(),
        original: emit_xml(stream).len(),
        stbe: st,
        tatbe: tat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{parse_xml, tag_ordinals};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k1() -> TenElementKey {
        "[12,6,1,1,1,14,4,1,3,2]".parse().unwrap()
    }

    #[test]
    fn seeded_and_stratified() {
        let gen = DocGen::for_key(&k1()).unwrap();
        let a = generate_corpus(&gen, 5, &mut ChaCha8Rng::seed_from_u64(3));
        let b = generate_corpus(&gen, 5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
        for s in Stratum::ALL {
            assert_eq!(a.iter().filter(|d| d.stratum == s).count(), 5);
        }
        assert!(a.iter().all(|d| Stratum::of(&d.stream) == d.stratum));
    }

    #[test]
    fn names_repeat() {
        let gen = DocGen::for_key(&k1()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let doc = (0..50).map(|_| gen.document(&mut rng, 5, 5)).find(|d| tag_ordinals(d).len() > 8).unwrap();
        let ords = tag_ordinals(&doc);
        let mut names: Vec<&str> = ords.iter().map(|(_, n)| n).collect();
        names.sort();
        names.dedup();
        assert!(names.len() < ords.len());
    }

    #[test]
    fn alphabet_without_letters() {
        assert!(DocGen::for_alphabet("0123456789".chars()).is_none());
        assert!(DocGen::for_alphabet("a".chars()).is_some());
    }

    #[test]
    fn xml1_sizes() {
        let doc = parse_xml(r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value></root>"#).unwrap();
        let row = measure_sizes(&doc, &k1()).unwrap();
        assert_eq!((row.non_variable_chars, row.variable_chars), (35, 5));
        assert!(row.tatbe < row.stbe);
        assert!(row.stbe < 3 * row.original);
    }
}
