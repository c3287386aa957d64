use std::collections::HashMap;

use crate::key::{decimal_digits, TenElementKey};

use super::{TableError, TempTable};

/// Bijection between printable characters and fixed-width decimal codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolTable {
    width: u32,
    by_char: [Option<u128>; 128],
    by_code: HashMap<u128, u8>,
    // insertion order, i.e. table order
    order: Vec<u8>,
}

impl SymbolTable {
    /// `build_st`: derive every character's code from the key's temporary table.
    pub fn build(key: &TenElementKey) -> Result<SymbolTable, TableError> {
        let tt = TempTable::build(key);
        Self::from_temp_table(&tt, key.final_sum(), key.power())
    }

    pub fn from_temp_table(tt: &TempTable, width: u32, power: u32) -> Result<SymbolTable, TableError> {
        let lowest = 10u128.pow(width - 1);
        let highest = 10u128.pow(width) - 1;
        let mut st = SymbolTable {
            width,
            by_char: [None; 128],
            by_code: HashMap::new(),
            order: Vec::new(),
        };
        for (row, col, c) in tt.occupied() {
            let value = tt.cell_value(row, col, power);
            let mut code = fit_width(value, width);
            let start = code;
            while st.by_code.contains_key(&code) {
                code = if code >= highest { lowest } else { code + 1 };
                if code == start {
                    return Err(TableError::CodeSpaceExhausted);
                }
            }
            let b = c as u8;
            st.by_char[usize::from(b)] = Some(code);
            st.by_code.insert(code, b);
            st.order.push(b);
        }
        Ok(st)
    }

    /// Code width in decimal digits (`final_sum`).
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn code(&self, c: char) -> Option<u128> {
        if c.is_ascii() {
            self.by_char[c as usize]
        } else {
            None
        }
    }

    pub fn char_for(&self, code: u128) -> Option<char> {
        self.by_code.get(&code).map(|&b| b as char)
    }

    /// Entries in table order.
    pub fn entries(&self) -> impl Iterator<Item = (char, u128)> + '_ {
        self.order
            .iter()
            .map(|&b| (b as char, self.by_char[usize::from(b)].expect("entry")))
    }
}

/// Scale a cell value to exactly `width` digits: pad with zeros on the right,
/// or drop trailing digits.
fn fit_width(value: u128, width: u32) -> u128 {
    let digits = decimal_digits(value);
    if digits <= width {
        value * 10u128.pow(width - digits)
    } else {
        value / 10u128.pow(digits - width)
    }
}
