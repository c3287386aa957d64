use crate::doc::{Token, WordStream};
use crate::key::TenElementKey;
use crate::tables::{tat_upsert, NonVarKind, SymbolTable, TableError, TagTable, TatContext};

use super::{classify_word, decode_digits, encode_word, strip_marker, CodecError, EncryptedMessage, Mode, WordKind};

/// Per-peer conversation state: the key, its symbol table, and the tag table
/// grown by every message exchanged so far.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    key: TenElementKey,
    st: SymbolTable,
    tat: TagTable,
    ctx: TatContext,
}

impl Session {
    pub fn new(key: TenElementKey) -> Result<Session, TableError> {
        Ok(Session {
            st: SymbolTable::build(&key)?,
            key,
            tat: TagTable::new(),
            ctx: TatContext::default(),
        })
    }

    /// Resume a conversation from saved tag-table state.
    pub fn with_state(key: TenElementKey, tat: TagTable, ctx: TatContext) -> Result<Session, TableError> {
        let mut s = Session::new(key)?;
        s.tat = tat;
        s.ctx = ctx;
        Ok(s)
    }

    pub fn key(&self) -> &TenElementKey {
        &self.key
    }

    pub fn st(&self) -> &SymbolTable {
        &self.st
    }

    pub fn tat(&self) -> &TagTable {
        &self.tat
    }

    pub fn ctx(&self) -> &TatContext {
        &self.ctx
    }

    /// Encode one message and grow the tag table with its new words.
    pub fn encode(&mut self, stream: &WordStream, mode: Mode, access: &[usize]) -> Result<EncryptedMessage, CodecError> {
        let words = stream
            .iter()
            .map(|t| encode_token(t, self, mode))
            .collect::<Result<Vec<_>, _>>()?;
        let new: Vec<_> = non_variable_words(stream.tokens()).map(|(w, k)| (0, w, k)).collect();
        commit_new_words(&mut [&mut *self], &new)?;
        Ok(EncryptedMessage::new(access.to_vec(), words))
    }

    /// Decode one message and grow the tag table exactly as the encoder did.
    pub fn decode(&mut self, msg: &EncryptedMessage, mode: Mode) -> Result<WordStream, CodecError> {
        let mut depth = 0usize;
        let mut tokens = Vec::with_capacity(msg.words.len());
        for word in &msg.words {
            let kind = classify_word(word)?;
            match kind {
                WordKind::Tag => depth += 1,
                WordKind::Closer => depth = depth.checked_sub(1).ok_or(CodecError::UnbalancedClosers)?,
                _ => {}
            }
            tokens.push(decode_word(word, kind, self, mode)?);
        }
        if depth != 0 {
            return Err(CodecError::UnbalancedClosers);
        }
        let stream = WordStream::new(tokens).map_err(CodecError::InvalidStream)?;
        let new: Vec<_> = non_variable_words(stream.tokens()).map(|(w, k)| (0, w, k)).collect();
        commit_new_words(&mut [&mut *self], &new)?;
        Ok(stream)
    }
}

fn non_variable_words(tokens: &[Token]) -> impl Iterator<Item = (String, NonVarKind)> + '_ {
    tokens.iter().filter_map(|t| match t {
        Token::Open(w) => Some((w.clone(), NonVarKind::Tag)),
        Token::AttrName(w) => Some((w.clone(), NonVarKind::AttrName)),
        Token::AttrValue(w) => Some((w.clone(), NonVarKind::AttrValue)),
        _ => None,
    })
}

/// Wire word for one token. Tag-table lookups see the table as it stood
/// before the message, so a word new to this message is spelled out at
/// every occurrence.
pub(crate) fn encode_token(token: &Token, session: &Session, mode: Mode) -> Result<String, CodecError> {
    let (word, kind) = match token {
        Token::Close => return Ok("0".to_string()),
        Token::Variable(w) => return encode_word(w, WordKind::Variable, &session.st),
        Token::Open(w) => (w, WordKind::Tag),
        Token::AttrName(w) => (w, WordKind::AttrName),
        Token::AttrValue(w) => (w, WordKind::AttrValue),
    };
    if mode == Mode::Tat {
        if let Some(code) = session.tat.code_of(word) {
            return Ok(format!("{}{code}", kind.marker()));
        }
    }
    let spelled = encode_word(word, kind, &session.st)?;
    if mode == Mode::Tat && is_tat_code(strip_marker(&spelled, kind), &session.tat) {
        return Err(CodecError::AmbiguousWord(word.clone()));
    }
    Ok(spelled)
}

fn is_tat_code(digits: &str, tat: &TagTable) -> bool {
    digits.parse::<u64>().is_ok_and(|c| tat.contains_code(c))
}

/// Token for one classified wire word.
pub(crate) fn decode_word(word: &str, kind: WordKind, session: &Session, mode: Mode) -> Result<Token, CodecError> {
    let make = match kind {
        WordKind::Closer => return Ok(Token::Close),
        WordKind::Digest => return Err(CodecError::UnexpectedDigest(word.to_string())),
        WordKind::Variable => return decode_digits(word, &session.st).map(Token::Variable),
        WordKind::Tag => Token::Open,
        WordKind::AttrName => Token::AttrName,
        WordKind::AttrValue => Token::AttrValue,
    };
    let digits = strip_marker(word, kind);
    if mode == Mode::Tat {
        if let Some(w) = digits.parse::<u64>().ok().and_then(|c| session.tat.word_of(c)) {
            return Ok(make(w.to_string()));
        }
        if digits.len() < session.st.width() as usize {
            return Err(CodecError::UnknownTatCode(word.to_string()));
        }
    }
    decode_digits(digits, &session.st).map(make)
}

/// Insert the non-variable words of one message, grouped by session index,
/// into each session's tag table.
///
/// Each table's digit budget is set from its own count of new words before
/// the first insertion. Nothing is committed unless every session succeeds.
pub(crate) fn commit_new_words(
    sessions: &mut [&mut Session],
    words: &[(usize, String, NonVarKind)],
) -> Result<(), CodecError> {
    let mut staged = Vec::with_capacity(sessions.len());
    for (idx, session) in sessions.iter().enumerate() {
        let mut fresh: Vec<(&str, NonVarKind)> = Vec::new();
        for (_, w, k) in words.iter().filter(|(i, _, _)| *i == idx) {
            if session.tat.code_of(w).is_none() && !fresh.iter().any(|(f, _)| f == w) {
                fresh.push((w, *k));
            }
        }
        if fresh.is_empty() {
            staged.push(None);
            continue;
        }
        let mut tat = session.tat.clone();
        let mut ctx = session.ctx;
        ctx.prepare(&tat, fresh.len());
        for (w, k) in fresh {
            tat_upsert(&mut tat, &ctx, w, k, &session.st)?;
        }
        staged.push(Some((tat, ctx)));
    }
    for (session, stage) in sessions.iter_mut().zip(staged) {
        if let Some((tat, ctx)) = stage {
            session.tat = tat;
            session.ctx = ctx;
        }
    }
    Ok(())
}

/// Symbol-table based encryption.
pub fn stbe(stream: &WordStream, session: &mut Session, access: &[usize]) -> Result<EncryptedMessage, CodecError> {
    session.encode(stream, Mode::St, access)
}

/// Symbol-table based decryption.
pub fn stbd(msg: &EncryptedMessage, session: &mut Session) -> Result<WordStream, CodecError> {
    session.decode(msg, Mode::St)
}

/// Tag-table based encryption.
pub fn tatbe(stream: &WordStream, session: &mut Session, access: &[usize]) -> Result<EncryptedMessage, CodecError> {
    session.encode(stream, Mode::Tat, access)
}

/// Tag-table based decryption.
pub fn tatbd(msg: &EncryptedMessage, session: &mut Session) -> Result<WordStream, CodecError> {
    session.decode(msg, Mode::Tat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::parse_xml;

    const XML1: &str = r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value></root>"#;
    const XML2: &str = r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value><nv>a1</nv></root>"#;

    fn session() -> Session {
        Session::new(TenElementKey::parse("[12,6,1,1,1,14,4,1,3,2]").unwrap()).unwrap()
    }

    fn tat_pairs(s: &Session) -> Vec<(String, u64)> {
        s.tat().entries().iter().map(|e| (e.word.clone(), e.code)).collect()
    }

    #[test]
    fn first_contact_then_tag_table() {
        let mut server = session();
        let mut client = session();
        let doc = parse_xml(XML1).unwrap();

        let first = stbe(&doc, &mut server, &[1]).unwrap();
        assert_eq!(
            first.to_string(),
            "1, 0117126126104 00153104104117340 000850153137820146340 00153104104117349 \
             000850153137820146349 0116153109146 122122104122 0 0850153137820146 349 0 0"
        );
        assert_eq!(stbd(&first, &mut client).unwrap(), doc);
        assert_eq!(server.tat(), client.tat());
        let expected: Vec<(String, u64)> = [("root", 4), ("attr1", 8), ("value1", 2), ("attr2", 9), ("value2", 3), ("name", 5), ("value", 6)]
            .iter()
            .map(|(w, c)| (w.to_string(), *c))
            .collect();
        assert_eq!(tat_pairs(&server), expected);

        let second = tatbe(&doc, &mut server, &[1]).unwrap();
        assert_eq!(second.to_string(), "1, 04 008 0002 009 0003 05 122122104122 0 06 349 0 0");
        assert_eq!(tatbd(&second, &mut client).unwrap(), doc);

        let doc2 = parse_xml(XML2).unwrap();
        let third = tatbe(&doc2, &mut server, &[1]).unwrap();
        assert_eq!(
            third.to_string(),
            "1, 04 008 0002 009 0003 05 122122104122 0 06 349 0 0116850 153340 0 0"
        );
        assert_eq!(tatbd(&third, &mut client).unwrap(), doc2);
        assert_eq!(server.tat(), client.tat());
        assert_eq!(server.tat().code_of("nv"), Some(1));
    }

    #[test]
    fn fresh_table_makes_tat_equal_st() {
        let doc = parse_xml(XML2).unwrap();
        let a = stbe(&doc, &mut session(), &[]).unwrap();
        let b = tatbe(&doc, &mut session(), &[]).unwrap();
        assert_eq!(a, b);
        assert!(a.access.is_empty());
    }

    #[test]
    fn decode_errors() {
        let mut s = session();
        let bad = |text: &str| text.parse::<EncryptedMessage>().unwrap();
        assert!(matches!(stbd(&bad("01171261261040 0"), &mut s), Err(CodecError::MalformedWord(_))));
        assert_eq!(stbd(&bad("0117126126104 0 0"), &mut s), Err(CodecError::UnbalancedClosers));
        assert_eq!(stbd(&bad("0117126126104"), &mut s), Err(CodecError::UnbalancedClosers));
        assert!(matches!(tatbd(&bad("1, 07 0"), &mut s), Err(CodecError::UnknownTatCode(_))));
        assert!(matches!(
            stbd(&bad("0117126126104 0 adc1aeffe1fe867740f976fd55c0c481"), &mut s),
            Err(CodecError::UnexpectedDigest(_))
        ));
        assert!(matches!(
            stbd(&bad("0117126126104 122 122 0"), &mut s),
            Err(CodecError::InvalidStream(_))
        ));
        // failed decodes leave the table untouched
        assert!(s.tat().is_empty());
    }

    #[test]
    fn tag_codes_never_read_as_symbol_form() {
        // width 2, eleven new words: tag codes are two digits as well.
        // "ab" sums to 11 + 12 = 23, the symbol code of 'm', so it moves on.
        let key = TenElementKey::new([9, 9, 1, 0, 0, 0, 1, 0, 2, 1]).unwrap();
        let mut s = Session::new(key).unwrap();
        assert_eq!(s.st().code('m'), Some(23));
        let mut tokens = vec![Token::Open("ab".into())];
        for name in ["b", "c", "d", "e", "f", "g", "h", "i", "j", "k"] {
            tokens.push(Token::Open(name.into()));
            tokens.push(Token::Close);
        }
        tokens.push(Token::Close);
        s.encode(&WordStream::new(tokens).unwrap(), Mode::St, &[]).unwrap();
        let ab = s.tat().code_of("ab").unwrap();
        assert!(ab != 23 && s.st().char_for(u128::from(ab)).is_none());

        let mut dec = s.clone();
        let doc = WordStream::new(vec![Token::Open("m".into()), Token::Close]).unwrap();
        let msg = s.encode(&doc, Mode::Tat, &[]).unwrap();
        assert_eq!(msg.to_string(), "023 0");
        assert_eq!(dec.decode(&msg, Mode::Tat).unwrap(), doc);
    }
}
