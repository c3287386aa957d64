use crate::key::TenElementKey;

use super::arrangement_for;

/// Header-numbered character grid derived from a key.
///
/// Characters occupy the first `charset_len` non-header cells in row-major
/// order; every later cell is empty. Headers are computed, not stored, so a
/// key with a very large table costs nothing beyond its charset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TempTable {
    rows: u32,
    cols: u32,
    start_with: bool,
    row_rev: bool,
    col_rev: bool,
    cells: Vec<u8>,
}

impl TempTable {
    /// `build_tt`: number the headers, fill the charset, reverse groups.
    pub fn build(key: &TenElementKey) -> TempTable {
        let mut cells = arrangement_for(key.symbol_type()).charset();
        if key.reverse() {
            let group = key.group_size() as usize;
            for chunk in cells.chunks_mut(group) {
                chunk.reverse();
            }
        }
        TempTable {
            rows: key.rows(),
            cols: key.cols(),
            start_with: key.start_with(),
            row_rev: key.row_rev(),
            col_rev: key.col_rev(),
            cells,
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    /// Header number of the `row`-th non-header row, counted from the top.
    pub fn row_header(&self, row: u32) -> u32 {
        let base = if self.start_with { self.cols } else { 0 };
        base + if self.row_rev { self.rows - row } else { row + 1 }
    }

    /// Header number of the `col`-th non-header column, counted from the left.
    pub fn col_header(&self, col: u32) -> u32 {
        let base = if self.start_with { 0 } else { self.rows };
        base + if self.col_rev { self.cols - col } else { col + 1 }
    }

    pub fn cell(&self, row: u32, col: u32) -> Option<char> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        let idx = row as usize * self.cols as usize + col as usize;
        self.cells.get(idx).map(|&b| b as char)
    }

    /// Non-empty cells, top-left to bottom-right, as `(row, col, char)`.
    pub fn occupied(&self) -> impl Iterator<Item = (u32, u32, char)> + '_ {
        let cols = self.cols as usize;
        self.cells
            .iter()
            .enumerate()
            .map(move |(i, &b)| ((i / cols) as u32, (i % cols) as u32, b as char))
    }

    /// `(rh, ch)` of the cell holding `c`.
    pub fn headers_of(&self, c: char) -> Option<(u32, u32)> {
        self.occupied()
            .find(|&(_, _, x)| x == c)
            .map(|(r, col, _)| (self.row_header(r), self.col_header(col)))
    }

    /// `rh^power + ch^power` for a cell (`cell_value`).
    ///
    /// Validated keys bound the largest header value, so this cannot overflow
    /// for a table built from one.
    pub fn cell_value(&self, row: u32, col: u32, power: u32) -> u128 {
        let rh = u128::from(self.row_header(row));
        let ch = u128::from(self.col_header(col));
        rh.pow(power) + ch.pow(power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(raw: [u64; 10]) -> TenElementKey {
        TenElementKey::new(raw).unwrap()
    }

    #[test]
    fn headers_for_start_with_columns_reversed() {
        let tt = TempTable::build(&k([12, 6, 1, 1, 1, 14, 4, 0, 3, 2]));
        // columns take 1..6 right to left, rows take 7..18 bottom to top
        assert_eq!(tt.col_header(5), 1);
        assert_eq!(tt.col_header(0), 6);
        assert_eq!(tt.row_header(11), 7);
        assert_eq!(tt.row_header(0), 18);
    }

    #[test]
    fn headers_for_start_with_rows() {
        let tt = TempTable::build(&k([7, 10, 0, 0, 1, 14, 3, 0, 3, 2]));
        assert_eq!(tt.row_header(0), 1);
        assert_eq!(tt.row_header(6), 7);
        assert_eq!(tt.col_header(9), 8);
        assert_eq!(tt.col_header(0), 17);
    }

    #[test]
    fn header_numbers_are_a_permutation() {
        let tt = TempTable::build(&k([5, 9, 0, 1, 0, 0, 2, 1, 3, 2]));
        let mut all: Vec<u32> = (0..5).map(|r| tt.row_header(r)).collect();
        all.extend((0..9).map(|c| tt.col_header(c)));
        all.sort();
        assert_eq!(all, (1..=14).collect::<Vec<_>>());
    }

    #[test]
    fn worked_example_positions() {
        let tt = TempTable::build(&k([12, 6, 1, 1, 1, 14, 4, 1, 3, 2]));
        assert_eq!(tt.headers_of('j'), Some((11, 2)));
        assert_eq!(tt.headers_of('G'), Some((15, 5)));
        assert_eq!(tt.headers_of('9'), Some((17, 2)));
        let (r, c, _) = tt.occupied().find(|&(_, _, x)| x == 'G').unwrap();
        assert_eq!(tt.cell_value(r, c, 2), 250);
        let (r, c, _) = tt.occupied().find(|&(_, _, x)| x == 'j').unwrap();
        assert_eq!(tt.cell_value(r, c, 2), 125);
        assert_eq!(tt.cell_value(r, c, 1), 13);
    }

    #[test]
    fn groups_of_one_are_unchanged() {
        let a = TempTable::build(&k([12, 6, 1, 1, 1, 14, 1, 0, 3, 2]));
        let b = TempTable::build(&k([12, 6, 1, 1, 1, 14, 1, 1, 3, 2]));
        assert_eq!(a, b);
    }

    #[test]
    fn reverse_runs_within_groups() {
        let tt = TempTable::build(&k([12, 6, 1, 1, 1, 14, 4, 1, 3, 2]));
        let first: String = tt.occupied().take(8).map(|(_, _, c)| c).collect();
        assert_eq!(first, "32107654");
        // 62 characters: the trailing short group holds y, z
        let last: String = tt.occupied().skip(60).map(|(_, _, c)| c).collect();
        assert_eq!(last, "zy");
        assert_eq!(tt.cell(10, 2), None);
    }
}
