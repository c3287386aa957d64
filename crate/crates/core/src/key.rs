//! The ten-element symmetric key.
//!
//! A key is `[rows, cols, start_with, row_rev, col_rev, symbol_type,
//! group_size, reverse, final_sum, power]`. Everything else (the temporary
//! table, the symbol table and the width of every code) is derived from these
//! ten integers, so both ends of a conversation only have to agree on them.
//!
//! The textual form is `[12,6,1,1,1,14,4,1,3,2]`: no whitespace, no leading
//! zeros. Digests are computed over exactly these bytes, so parsing rejects
//! every other spelling.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::tables::arrangement_for;

/// Largest accepted `final_sum`. Symbol codes are `u128` and a word's code sum
/// must not overflow for any realistic word length.
pub const MAX_CODE_WIDTH: u32 = 30;

pub const ROWS: usize = 0;
pub const COLS: usize = 1;
pub const START_WITH: usize = 2;
pub const ROW_REV: usize = 3;
pub const COL_REV: usize = 4;
pub const SYMBOL_TYPE: usize = 5;
pub const GROUP_SIZE: usize = 6;
pub const REVERSE: usize = 7;
pub const FINAL_SUM: usize = 8;
pub const POWER: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key element {0} is out of range")]
    OutOfRange(usize),
    #[error("character set does not fit the table or the code space")]
    CapacityExceeded,
    #[error("final_sum is too small for the largest header value")]
    WidthTooSmall,
    #[error("malformed key text: {0}")]
    Malformed(String),
    #[error("no valid key exists within the given bounds")]
    NoValidKeyInBounds,
}

impl KeyError {
    pub fn name(&self) -> &'static str {
        match self {
            KeyError::OutOfRange(_) => "OutOfRange",
            KeyError::CapacityExceeded => "CapacityExceeded",
            KeyError::WidthTooSmall => "WidthTooSmall",
            KeyError::Malformed(_) => "Malformed",
            KeyError::NoValidKeyInBounds => "NoValidKeyInBounds",
        }
    }
}

/// A validated ten-element key. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TenElementKey {
    elements: [u32; 10],
}

impl TenElementKey {
    /// Validates ten raw integers (`validate_key`).
    pub fn new(candidate: [u64; 10]) -> Result<Self, KeyError> {
        let mut elements = [0u32; 10];
        for (i, (&raw, slot)) in candidate.iter().zip(elements.iter_mut()).enumerate() {
            *slot = u32::try_from(raw).map_err(|_| KeyError::OutOfRange(i))?;
        }
        let key = TenElementKey { elements };
        key.check()?;
        Ok(key)
    }

    fn check(&self) -> Result<(), KeyError> {
        let e = &self.elements;
        for i in [START_WITH, ROW_REV, COL_REV, REVERSE] {
            if e[i] > 1 {
                return Err(KeyError::OutOfRange(i));
            }
        }
        if e[SYMBOL_TYPE] > 63 {
            return Err(KeyError::OutOfRange(SYMBOL_TYPE));
        }
        for i in [ROWS, COLS, GROUP_SIZE, FINAL_SUM, POWER] {
            if e[i] == 0 {
                return Err(KeyError::OutOfRange(i));
            }
        }
        if e[FINAL_SUM] > MAX_CODE_WIDTH {
            return Err(KeyError::OutOfRange(FINAL_SUM));
        }
        let cells = self.cells();
        if u64::from(e[GROUP_SIZE]) > cells {
            return Err(KeyError::OutOfRange(GROUP_SIZE));
        }
        let charset = self.charset_len() as u64;
        if charset > cells {
            return Err(KeyError::CapacityExceeded);
        }
        // codes with final_sum digits and a nonzero lead: 9 * 10^(w-1)
        let capacity = 9u128 * 10u128.pow(e[FINAL_SUM] - 1);
        if u128::from(charset) > capacity {
            return Err(KeyError::CapacityExceeded);
        }
        match self.max_cell_value() {
            Some(v) if decimal_digits(v) <= e[FINAL_SUM] => Ok(()),
            _ => Err(KeyError::WidthTooSmall),
        }
    }

    /// Largest `rh^power + ch^power` over all header pairs, `None` on overflow.
    pub(crate) fn max_cell_value(&self) -> Option<u128> {
        let (rows, cols) = (u128::from(self.rows()), u128::from(self.cols()));
        let (max_rh, max_ch) = if self.start_with() {
            (rows + cols, cols)
        } else {
            (rows, rows + cols)
        };
        max_rh
            .checked_pow(self.power())?
            .checked_add(max_ch.checked_pow(self.power())?)
    }

    pub fn elements(&self) -> [u32; 10] {
        self.elements
    }

    pub fn rows(&self) -> u32 {
        self.elements[ROWS]
    }

    pub fn cols(&self) -> u32 {
        self.elements[COLS]
    }

    pub fn start_with(&self) -> bool {
        self.elements[START_WITH] == 1
    }

    pub fn row_rev(&self) -> bool {
        self.elements[ROW_REV] == 1
    }

    pub fn col_rev(&self) -> bool {
        self.elements[COL_REV] == 1
    }

    pub fn symbol_type(&self) -> u8 {
        self.elements[SYMBOL_TYPE] as u8
    }

    pub fn group_size(&self) -> u32 {
        self.elements[GROUP_SIZE]
    }

    pub fn reverse(&self) -> bool {
        self.elements[REVERSE] == 1
    }

    /// Code width in decimal digits.
    pub fn final_sum(&self) -> u32 {
        self.elements[FINAL_SUM]
    }

    pub fn power(&self) -> u32 {
        self.elements[POWER]
    }

    pub fn cells(&self) -> u64 {
        u64::from(self.rows()) * u64::from(self.cols())
    }

    pub fn charset_len(&self) -> usize {
        arrangement_for(self.symbol_type()).charset_len()
    }

    /// The canonical text form (`serialize_key`).
    pub fn serialize(&self) -> String {
        self.to_string()
    }

    /// Strict inverse of [`TenElementKey::serialize`] (`parse_key`).
    pub fn parse(text: &str) -> Result<Self, KeyError> {
        let inner = text
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| KeyError::Malformed("expected [..]".into()))?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 10 {
            return Err(KeyError::Malformed(format!(
                "expected 10 elements, found {}",
                parts.len()
            )));
        }
        let mut raw = [0u64; 10];
        for (i, part) in parts.iter().enumerate() {
            let canonical = !part.is_empty()
                && part.bytes().all(|b| b.is_ascii_digit())
                && (part.len() == 1 || !part.starts_with('0'));
            if !canonical {
                return Err(KeyError::Malformed(format!("element {i}: {part:?}")));
            }
            raw[i] = part
                .parse()
                .map_err(|_| KeyError::Malformed(format!("element {i}: {part:?}")))?;
        }
        TenElementKey::new(raw)
    }
}

impl fmt::Display for TenElementKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("]")
    }
}

impl FromStr for TenElementKey {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TenElementKey::parse(s)
    }
}

pub(crate) fn decimal_digits(mut v: u128) -> u32 {
    let mut n = 1;
    while v >= 10 {
        v /= 10;
        n += 1;
    }
    n
}

/// Inclusive sampling range for each key element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyBounds {
    pub ranges: [RangeInclusive<u32>; 10],
}

impl Default for KeyBounds {
    fn default() -> Self {
        KeyBounds {
            ranges: [
                4..=16,
                4..=16,
                0..=1,
                0..=1,
                0..=1,
                0..=63,
                1..=8,
                0..=1,
                1..=6,
                1..=3,
            ],
        }
    }
}

impl KeyBounds {
    pub fn with(mut self, index: usize, range: RangeInclusive<u32>) -> Self {
        self.ranges[index] = range;
        self
    }

    /// Bounds that admit only `key`.
    pub fn exactly(key: &TenElementKey) -> Self {
        KeyBounds {
            ranges: key.elements().map(|v| v..=v),
        }
    }

    // Cheap impossibility check so that hopeless bounds fail without sampling.
    fn admits_some_key(&self) -> bool {
        if self.ranges.iter().any(|r| r.is_empty()) {
            return false;
        }
        let max_cells = u64::from(*self.ranges[ROWS].end()) * u64::from(*self.ranges[COLS].end());
        let smallest_charset = self.ranges[SYMBOL_TYPE]
            .clone()
            .filter(|&t| t <= 63)
            .map(|t| arrangement_for(t as u8).charset_len() as u64)
            .min();
        match smallest_charset {
            Some(len) => len <= max_cells,
            None => false,
        }
    }
}

const GENERATE_ATTEMPTS: usize = 10_000;

/// Draws a random valid key within `bounds` (`generate_key`).
///
/// A sampled `final_sum` that is too narrow is raised to the smallest width
/// that validates; any other violation triggers a resample.
pub fn generate_key<R: Rng + ?Sized>(bounds: &KeyBounds, rng: &mut R) -> Result<TenElementKey, KeyError> {
    if !bounds.admits_some_key() {
        return Err(KeyError::NoValidKeyInBounds);
    }
    for _ in 0..GENERATE_ATTEMPTS {
        let mut raw = [0u64; 10];
        for (slot, range) in raw.iter_mut().zip(bounds.ranges.iter()) {
            *slot = u64::from(rng.random_range(range.clone()));
        }
        match TenElementKey::new(raw) {
            Ok(key) => return Ok(key),
            Err(KeyError::WidthTooSmall) | Err(KeyError::CapacityExceeded) => {
                if let Some(key) = raise_width(raw) {
                    return Ok(key);
                }
            }
            Err(_) => {}
        }
    }
    Err(KeyError::NoValidKeyInBounds)
}

fn raise_width(mut raw: [u64; 10]) -> Option<TenElementKey> {
    let start = raw[FINAL_SUM].max(1);
    for width in start..=u64::from(MAX_CODE_WIDTH) {
        raw[FINAL_SUM] = width;
        match TenElementKey::new(raw) {
            Ok(key) => return Some(key),
            Err(KeyError::WidthTooSmall) | Err(KeyError::CapacityExceeded) => continue,
            Err(_) => return None,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn key(raw: [u64; 10]) -> Result<TenElementKey, KeyError> {
        TenElementKey::new(raw)
    }

    #[test]
    fn accepts_worked_example_keys() {
        assert!(key([12, 6, 1, 1, 1, 14, 4, 1, 3, 2]).is_ok());
        assert!(key([12, 6, 1, 1, 1, 14, 4, 0, 3, 2]).is_ok());
        assert!(key([6, 12, 1, 0, 1, 14, 3, 1, 3, 2]).is_ok());
        assert!(key([7, 10, 0, 0, 1, 14, 3, 0, 3, 2]).is_ok());
    }

    #[test]
    fn rejects_non_bit_flags() {
        assert_eq!(key([12, 6, 2, 1, 1, 14, 4, 1, 3, 2]), Err(KeyError::OutOfRange(2)));
        assert_eq!(key([12, 6, 1, 1, 1, 14, 4, 5, 3, 2]), Err(KeyError::OutOfRange(7)));
        assert_eq!(key([12, 6, 1, 1, 1, 64, 4, 1, 3, 2]), Err(KeyError::OutOfRange(5)));
        assert_eq!(key([0, 6, 1, 1, 1, 14, 4, 1, 3, 2]), Err(KeyError::OutOfRange(0)));
        assert_eq!(key([12, 6, 1, 1, 1, 14, 4, 1, 3, 0]), Err(KeyError::OutOfRange(9)));
    }

    #[test]
    fn width_too_small_when_max_header_value_overflows_width() {
        // 18^2 + 6^2 = 360 needs three digits
        assert_eq!(key([12, 6, 1, 1, 1, 14, 4, 1, 2, 2]), Err(KeyError::WidthTooSmall));
    }

    #[test]
    fn group_size_may_reach_cell_count() {
        assert!(key([12, 6, 1, 1, 1, 14, 72, 1, 3, 2]).is_ok());
        assert_eq!(key([12, 6, 1, 1, 1, 14, 73, 1, 3, 2]), Err(KeyError::OutOfRange(6)));
    }

    #[test]
    fn capacity_checks() {
        // 95 characters in a 9x10 table
        assert_eq!(key([9, 10, 1, 0, 0, 63, 1, 0, 3, 2]), Err(KeyError::CapacityExceeded));
        assert!(key([10, 10, 1, 0, 0, 63, 1, 0, 3, 2]).is_ok());
    }

    #[test]
    fn serialize_is_compact() {
        let k = key([12, 6, 1, 1, 1, 14, 4, 1, 3, 2]).unwrap();
        assert_eq!(k.serialize(), "[12,6,1,1,1,14,4,1,3,2]");
        let g = key([7, 10, 0, 0, 1, 14, 3, 0, 3, 2]).unwrap();
        assert_eq!(g.to_string(), "[7,10,0,0,1,14,3,0,3,2]");
    }

    #[test]
    fn parse_is_strict() {
        assert!(TenElementKey::parse("[12,6,1,1,1,14,4,1,3,2]").is_ok());
        for bad in [
            "[12,6]",
            "[12, 6,1,1,1,14,4,1,3,2]",
            "12,6,1,1,1,14,4,1,3,2",
            "[12,6,1,1,1,14,4,1,3,2] ",
            "[012,6,1,1,1,14,4,1,3,2]",
            "[12,6,1,1,1,14,4,1,3,+2]",
            "[12,6,1,1,1,14,4,1,3,]",
            "[]",
        ] {
            assert!(
                matches!(TenElementKey::parse(bad), Err(KeyError::Malformed(_))),
                "{bad}"
            );
        }
        assert_eq!(
            TenElementKey::parse("[12,6,2,1,1,14,4,1,3,2]"),
            Err(KeyError::OutOfRange(2))
        );
    }

    #[test]
    fn generate_within_bounds() {
        let bounds = KeyBounds::default()
            .with(ROWS, 4..=16)
            .with(COLS, 4..=16)
            .with(POWER, 1..=3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let k = generate_key(&bounds, &mut rng).unwrap();
            assert!((4..=16).contains(&k.rows()));
            assert!((4..=16).contains(&k.cols()));
            assert!((1..=3).contains(&k.power()));
            assert_eq!(TenElementKey::new(k.elements().map(u64::from)), Ok(k));
        }
    }

    #[test]
    fn generate_rejects_impossible_bounds() {
        let bounds = KeyBounds::default()
            .with(ROWS, 1..=1)
            .with(COLS, 1..=1)
            .with(SYMBOL_TYPE, 63..=63);
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        assert_eq!(generate_key(&bounds, &mut rng), Err(KeyError::NoValidKeyInBounds));
    }

    #[test]
    fn generate_is_deterministic_under_seed() {
        let bounds = KeyBounds::default();
        let a = generate_key(&bounds, &mut rand::rngs::StdRng::seed_from_u64(42)).unwrap();
        let b = generate_key(&bounds, &mut rand::rngs::StdRng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_raises_narrow_width() {
        let bounds = KeyBounds::default().with(FINAL_SUM, 1..=1);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let k = generate_key(&bounds, &mut rng).unwrap();
        assert!(k.final_sum() >= 2);
        let mut narrower = k.elements().map(u64::from);
        narrower[FINAL_SUM] -= 1;
        assert!(TenElementKey::new(narrower).is_err());
    }
}
