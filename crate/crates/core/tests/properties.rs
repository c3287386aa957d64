use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tabula_core::corpus::DocGen;
use tabula_core::doc::{emit_json, emit_xml};
use tabula_core::tables::arrangement_for;
use tabula_core::{
    generate_key, parse_json, parse_xml, EncryptedMessage, KeyBounds, KeyRole, KeyStore, Mode, Session, SymbolTable,
    TenElementKey, WordStream,
};

fn raw_key() -> impl Strategy<Value = [u64; 10]> {
    (
        (1u64..=20, 1u64..=20, 0u64..=1, 0u64..=1, 0u64..=1),
        (0u64..=63, 1u64..=12, 0u64..=1, 1u64..=7, 1u64..=4),
    )
        .prop_map(|((r, c, s, rr, cr), (t, g, rev, w, p))| [r, c, s, rr, cr, t, g, rev, w, p])
}

/// A seeded key that can spell names, and a document it can encode.
fn key_and_doc(seed: u64) -> (TenElementKey, WordStream) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let key = generate_key(&KeyBounds::default(), &mut rng).unwrap();
        if let Some(gen) = DocGen::for_key(&key) {
            let doc = gen.document(&mut rng, 1 + (seed % 7) as usize, 1 + (seed % 23) as usize);
            return (key, doc);
        }
    }
}

fn check_table(key: &TenElementKey, st: &SymbolTable) {
    let width = key.final_sum();
    assert_eq!(st.width(), width);
    assert_eq!(st.len(), key.charset_len());
    let mut codes = HashSet::new();
    let mut chars = HashSet::new();
    for (c, code) in st.entries() {
        let text = code.to_string();
        assert_eq!(text.len() as u32, width, "{key}: {c:?} -> {code}");
        assert!(!text.starts_with('0'));
        assert!(codes.insert(code), "{key}: duplicate code {code}");
        assert!(chars.insert(c));
        assert_eq!(st.char_for(code), Some(c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn symbol_tables_are_bijective_with_fixed_width(raw in raw_key()) {
        if let Ok(key) = TenElementKey::new(raw) {
            let st = SymbolTable::build(&key).unwrap();
            check_table(&key, &st);
            prop_assert_eq!(SymbolTable::build(&key).unwrap(), st);
        }
    }

    #[test]
    fn codec_round_trips(seed in any::<u64>()) {
        let (key, doc) = key_and_doc(seed);
        let mut enc = Session::new(key).unwrap();
        let mut dec = enc.clone();
        for mode in [Mode::St, Mode::Tat, Mode::Tat] {
            let msg = enc.encode(&doc, mode, &[1]).unwrap();
            let wire: EncryptedMessage = msg.to_string().parse().unwrap();
            prop_assert_eq!(&wire, &msg);
            prop_assert_eq!(&dec.decode(&wire, mode).unwrap(), &doc);
            prop_assert_eq!(enc.tat(), dec.tat());
        }
    }

    #[test]
    fn documents_survive_serialization(seed in any::<u64>()) {
        let (_, doc) = key_and_doc(seed);
        prop_assert_eq!(&parse_xml(&emit_xml(&doc)).unwrap(), &doc);
        prop_assert_eq!(&parse_json(&emit_json(&doc)).unwrap(), &doc);
    }

    #[test]
    fn tag_tables_replay_identically(seeds in proptest::collection::vec(any::<u64>(), 1..5)) {
        let (key, _) = key_and_doc(seeds[0]);
        let gen = DocGen::for_key(&key).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seeds[0]);
        let docs: Vec<WordStream> = seeds.iter().map(|s| gen.document(&mut rng, 2 + (s % 5) as usize, 4)).collect();
        let mut a = Session::new(key).unwrap();
        let mut b = Session::new(key).unwrap();
        for d in &docs {
            let ma = a.encode(d, Mode::Tat, &[]).unwrap();
            let mb = b.encode(d, Mode::Tat, &[]).unwrap();
            prop_assert_eq!(ma, mb);
        }
        prop_assert_eq!(a.tat(), b.tat());
        prop_assert_eq!(a.dump(), b.dump());
    }
}

#[test]
fn small_keys_never_fail_to_build() {
    // every valid key with at most 25 cells
    let mut valid = 0;
    for rows in 1..=5u64 {
        for cols in 1..=5u64 {
            for bits in 0..16u64 {
                for symbol_type in 0..=63u64 {
                    if arrangement_for(symbol_type as u8).charset_len() as u64 > rows * cols {
                        continue;
                    }
                    for group in 1..=4 {
                        for width in 1..=4 {
                            for power in 1..=3 {
                                let raw = [
                                    rows,
                                    cols,
                                    bits & 1,
                                    bits >> 1 & 1,
                                    bits >> 2 & 1,
                                    symbol_type,
                                    group,
                                    bits >> 3 & 1,
                                    width,
                                    power,
                                ];
                                if let Ok(key) = TenElementKey::new(raw) {
                                    valid += 1;
                                    check_table(&key, &SymbolTable::build(&key).unwrap());
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(valid > 0);
}

#[test]
fn keystore_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("keys.tsv");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut store = KeyStore::new();
    for i in 0..20 {
        let role = if i % 5 == 0 { KeyRole::Group } else { KeyRole::Pairwise };
        store.insert(&format!("peer{}", i % 7), &format!("k{i}"), role, generate_key(&KeyBounds::default(), &mut rng).unwrap());
    }
    store.save(&path).unwrap();
    let loaded = KeyStore::load(&path).unwrap();
    assert_eq!(loaded.to_text(), store.to_text());
    assert_eq!(loaded.len(), 20);
}
