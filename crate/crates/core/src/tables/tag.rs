use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::key::decimal_digits;

use super::{SymbolTable, TableError};

/// What kind of non-variable word a tag-table entry was first seen as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NonVarKind {
    Tag,
    AttrName,
    AttrValue,
}

impl NonVarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NonVarKind::Tag => "tag",
            NonVarKind::AttrName => "attr-name",
            NonVarKind::AttrValue => "attr-value",
        }
    }
}

impl fmt::Display for NonVarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NonVarKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "tag" => Ok(NonVarKind::Tag),
            "attr-name" => Ok(NonVarKind::AttrName),
            "attr-value" => Ok(NonVarKind::AttrValue),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TatEntry {
    pub word: String,
    pub kind: NonVarKind,
    pub code: u64,
}

/// Non-variable word <-> short agreed integer. Codes are never renumbered.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagTable {
    entries: Vec<TatEntry>,
    by_word: HashMap<String, usize>,
    by_code: HashMap<u64, usize>,
}

impl TagTable {
    pub fn new() -> TagTable {
        TagTable::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn code_of(&self, word: &str) -> Option<u64> {
        self.by_word.get(word).map(|&i| self.entries[i].code)
    }

    pub fn word_of(&self, code: u64) -> Option<&str> {
        self.by_code.get(&code).map(|&i| self.entries[i].word.as_str())
    }

    pub fn contains_code(&self, code: u64) -> bool {
        self.by_code.contains_key(&code)
    }

    /// Entries in insertion order.
    pub fn entries(&self) -> &[TatEntry] {
        &self.entries
    }

    /// Restore an entry verbatim, e.g. from a saved session.
    pub fn insert_raw(&mut self, entry: TatEntry) -> Result<(), TableError> {
        if entry.code == 0 || self.by_word.contains_key(&entry.word) || self.by_code.contains_key(&entry.code) {
            return Err(TableError::DuplicateEntry(entry.word));
        }
        let idx = self.entries.len();
        self.by_word.insert(entry.word.clone(), idx);
        self.by_code.insert(entry.code, idx);
        self.entries.push(entry);
        Ok(())
    }
}

/// Digit budget for tag-table codes during one message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TatContext {
    /// Entries already in the table plus new words introduced by the message.
    pub no_of_non_vars: usize,
    /// `ceil(log10(no_of_non_vars + 1))`.
    pub no_of_digits_for_non_vars: u32,
}

impl TatContext {
    pub fn for_count(no_of_non_vars: usize) -> TatContext {
        TatContext {
            no_of_non_vars,
            no_of_digits_for_non_vars: digits_for(no_of_non_vars),
        }
    }

    /// Set the budget before a message that adds `new_words` to `tat`.
    pub fn prepare(&mut self, tat: &TagTable, new_words: usize) {
        *self = TatContext::for_count(tat.len() + new_words);
    }
}

// ceil(log10(n + 1)) is the decimal length of n
fn digits_for(n: usize) -> u32 {
    if n == 0 {
        0
    } else {
        decimal_digits(n as u128)
    }
}

const MAX_TAT_DIGITS: u32 = 18;

// A code that reads as a run of symbol codes would be mistaken for a word
// spelled out in symbol form, so it is skipped like a taken one.
fn spells_symbols(code: u128, st: &SymbolTable) -> bool {
    let digits = code.to_string();
    let width = st.width() as usize;
    digits.len().is_multiple_of(width)
        && digits
            .as_bytes()
            .chunks(width)
            .all(|c| std::str::from_utf8(c).ok().and_then(|c| c.parse().ok()).is_some_and(|c| st.char_for(c).is_some()))
}

/// Look up `word`, inserting it with a code derived from its symbol codes if
/// absent (`tat_upsert`).
pub fn tat_upsert(
    tat: &mut TagTable,
    ctx: &TatContext,
    word: &str,
    kind: NonVarKind,
    st: &SymbolTable,
) -> Result<u64, TableError> {
    if let Some(code) = tat.code_of(word) {
        return Ok(code);
    }
    let mut sum: u128 = 0;
    for c in word.chars() {
        let code = st.code(c).ok_or(TableError::UnsupportedCharacter(c))?;
        sum = sum.checked_add(code).ok_or(TableError::SumOverflow)?;
    }
    let mut width = ctx.no_of_digits_for_non_vars.max(1);
    let mut modulus = 10u128.pow(width);
    let digits = decimal_digits(sum);
    let mut code = if digits <= width {
        sum * 10u128.pow(width - digits)
    } else {
        sum / 10u128.pow(digits - width)
    };
    let mut steps: u128 = 0;
    while code == 0 || tat.contains_code(code as u64) || spells_symbols(code, st) {
        code = (code + 1) % modulus;
        steps += 1;
        if steps > modulus {
            // every code of this many digits is unusable: try one more digit
            if width >= MAX_TAT_DIGITS {
                return Err(TableError::CodeSpaceExhausted);
            }
            code = modulus;
            width += 1;
            modulus *= 10;
            steps = 0;
        }
    }
    let code = code as u64;
    tat.insert_raw(TatEntry {
        word: word.to_string(),
        kind,
        code,
    })?;
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::TenElementKey;

    fn k1_st() -> SymbolTable {
        SymbolTable::build(&TenElementKey::new([12, 6, 1, 1, 1, 14, 4, 1, 3, 2]).unwrap()).unwrap()
    }

    #[test]
    fn digit_budget() {
        assert_eq!(TatContext::for_count(7).no_of_digits_for_non_vars, 1);
        assert_eq!(TatContext::for_count(9).no_of_digits_for_non_vars, 1);
        assert_eq!(TatContext::for_count(10).no_of_digits_for_non_vars, 2);
        assert_eq!(TatContext::for_count(99).no_of_digits_for_non_vars, 2);
        assert_eq!(TatContext::for_count(100).no_of_digits_for_non_vars, 3);
    }

    #[test]
    fn first_message_insertion_order() {
        let st = k1_st();
        let mut tat = TagTable::new();
        let ctx = TatContext::for_count(7);
        let words = [
            ("root", NonVarKind::Tag, 4),
            ("attr1", NonVarKind::AttrName, 8),
            ("value1", NonVarKind::AttrValue, 2),
            ("attr2", NonVarKind::AttrName, 9),
            ("value2", NonVarKind::AttrValue, 3),
            ("name", NonVarKind::Tag, 5),
            ("value", NonVarKind::Tag, 6),
        ];
        for (w, kind, expected) in words {
            assert_eq!(tat_upsert(&mut tat, &ctx, w, kind, &st).unwrap(), expected, "{w}");
        }
        // idempotent
        assert_eq!(tat_upsert(&mut tat, &ctx, "root", NonVarKind::Tag, &st).unwrap(), 4);
        assert_eq!(tat.len(), 7);

        let ctx = TatContext::for_count(10);
        assert_eq!(tat_upsert(&mut tat, &ctx, "t1", NonVarKind::Tag, &st).unwrap(), 44);
    }

    #[test]
    fn wraps_past_zero() {
        let st = k1_st();
        let mut tat = TagTable::new();
        let ctx = TatContext::for_count(8);
        for w in ["root", "attr1", "value1", "attr2", "value2", "name", "value"] {
            tat_upsert(&mut tat, &ctx, w, NonVarKind::Tag, &st).unwrap();
        }
        // 116 + 850 = 966 -> 9 (taken) -> 0 (skipped) -> 1
        assert_eq!(tat_upsert(&mut tat, &ctx, "nv", NonVarKind::Tag, &st).unwrap(), 1);
    }

    #[test]
    fn full_budget_widens_the_code() {
        let st = k1_st();
        let mut tat = TagTable::new();
        let ctx = TatContext::for_count(9);
        let words = ["a", "b", "c", "d", "e", "f", "g", "h", "i"];
        for w in words {
            tat_upsert(&mut tat, &ctx, w, NonVarKind::Tag, &st).unwrap();
        }
        // all nine one-digit codes are taken
        assert_eq!(tat_upsert(&mut tat, &ctx, "j", NonVarKind::Tag, &st), Ok(10));
    }

    #[test]
    fn codes_avoid_symbol_spellings() {
        // with a three-digit budget "j" sums to its own symbol code
        let st = k1_st();
        let mut tat = TagTable::new();
        let ctx = TatContext::for_count(100);
        let code = tat_upsert(&mut tat, &ctx, "j", NonVarKind::Tag, &st).unwrap();
        assert_eq!(st.code('j'), Some(125));
        assert!(code > 125 && st.char_for(u128::from(code)).is_none());
    }

    #[test]
    fn unsupported_character() {
        let st = k1_st();
        let mut tat = TagTable::new();
        assert_eq!(
            tat_upsert(&mut tat, &TatContext::for_count(1), "a-b", NonVarKind::Tag, &st),
            Err(TableError::UnsupportedCharacter('-'))
        );
    }
}
