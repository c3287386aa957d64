use std::sync::OnceLock;

/// One of the four character classes that can fill the temporary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharClass {
    Small,
    Capital,
    Digit,
    /// The 33 printable ASCII characters that are neither letters nor digits,
    /// space included.
    Special,
}

impl CharClass {
    pub const ALL: [CharClass; 4] = [
        CharClass::Small,
        CharClass::Capital,
        CharClass::Digit,
        CharClass::Special,
    ];

    /// Characters of the class in ascending code order.
    pub fn chars(self) -> impl Iterator<Item = u8> {
        (0x20u8..=0x7e).filter(move |&b| self.contains(b))
    }

    pub fn contains(self, b: u8) -> bool {
        match self {
            CharClass::Small => b.is_ascii_lowercase(),
            CharClass::Capital => b.is_ascii_uppercase(),
            CharClass::Digit => b.is_ascii_digit(),
            CharClass::Special => (0x20..=0x7e).contains(&b) && !b.is_ascii_alphanumeric(),
        }
    }

    pub fn len(self) -> usize {
        match self {
            CharClass::Small | CharClass::Capital => 26,
            CharClass::Digit => 10,
            CharClass::Special => 33,
        }
    }
}

/// Ordered, repeat-free list of character classes selected by `symbol_type`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Arrangement(Vec<CharClass>);

impl Arrangement {
    pub fn classes(&self) -> &[CharClass] {
        &self.0
    }

    /// Characters in table fill order.
    pub fn charset(&self) -> Vec<u8> {
        self.0.iter().flat_map(|c| c.chars()).collect()
    }

    pub fn charset_len(&self) -> usize {
        self.0.iter().map(|c| c.len()).sum()
    }

    pub fn contains(&self, b: u8) -> bool {
        self.0.iter().any(|c| c.contains(b))
    }
}

fn table() -> &'static [Arrangement; 64] {
    static TABLE: OnceLock<[Arrangement; 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut all = Vec::with_capacity(64);
        for size in 1..=4 {
            for subset in subsets(size) {
                let mut perms = Vec::new();
                permutations(&subset, &mut Vec::new(), &mut perms);
                perms.sort();
                all.extend(perms.into_iter().map(Arrangement));
            }
        }
        // entry 14 must read digits, capitals, smalls
        all.swap(14, 21);
        all.try_into().expect("64 arrangements")
    })
}

fn subsets(size: usize) -> Vec<Vec<CharClass>> {
    let mut out = Vec::new();
    for mask in 0u8..16 {
        if mask.count_ones() as usize == size {
            let subset: Vec<_> = (0..4)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| CharClass::ALL[i])
                .collect();
            out.push(subset);
        }
    }
    out.sort();
    out
}

fn permutations(rest: &[CharClass], prefix: &mut Vec<CharClass>, out: &mut Vec<Vec<CharClass>>) {
    if rest.is_empty() {
        out.push(prefix.clone());
        return;
    }
    for i in 0..rest.len() {
        let mut remaining = rest.to_vec();
        let c = remaining.remove(i);
        prefix.push(c);
        permutations(&remaining, prefix, out);
        prefix.pop();
    }
}

/// Fixed arrangement for `symbol_type` in `0..=63`.
///
/// # Panics
/// If `symbol_type > 63`; keys are validated before reaching here.
pub fn arrangement_for(symbol_type: u8) -> &'static Arrangement {
    &table()[usize::from(symbol_type)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use CharClass::*;

    #[test]
    fn pinned_entries() {
        assert_eq!(arrangement_for(0).classes(), &[Small]);
        assert_eq!(arrangement_for(1).classes(), &[Capital]);
        assert_eq!(arrangement_for(14).classes(), &[Digit, Capital, Small]);
        assert_eq!(arrangement_for(21).classes(), &[Digit, Special]);
    }

    #[test]
    fn table_is_every_ordered_subset_once() {
        let set: HashSet<_> = (0..64).map(|i| arrangement_for(i).clone()).collect();
        assert_eq!(set.len(), 64);
        for i in 0..64 {
            let classes = arrangement_for(i).classes();
            let distinct: HashSet<_> = classes.iter().collect();
            assert_eq!(distinct.len(), classes.len());
            assert!((1..=4).contains(&classes.len()));
        }
    }

    #[test]
    fn charset_sizes() {
        assert_eq!(CharClass::Special.chars().count(), 33);
        assert!(CharClass::Special.contains(b' '));
        assert_eq!(arrangement_for(14).charset_len(), 62);
        let full = (0..64).map(|i| arrangement_for(i).charset_len()).max();
        assert_eq!(full, Some(95));
        let cs = arrangement_for(14).charset();
        assert_eq!(&cs[..3], b"012");
        assert_eq!(cs[10], b'A');
        assert_eq!(cs[36], b'a');
    }
}
