//! Fixtures shared by the benchmarks.

use rand::rngs::StdRng;
use rand::SeedableRng;
use tabula_core::corpus::{generate_corpus, DocGen, Stratum};
use tabula_core::{parse_xml, TenElementKey, WordStream};

pub const XML1: &str = r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value></root>"#;
pub const XML2: &str =
    r#"<root attr1="value1" attr2="value2"><name>iiti</name><value>2</value><nv>a1</nv></root>"#;

pub fn key(text: &str) -> TenElementKey {
    text.parse().expect("fixture key")
}

pub fn small() -> WordStream {
    parse_xml(XML1).expect("fixture document")
}

/// One seeded document per stratum, generated for `key`.
pub fn generated(key: &TenElementKey) -> Vec<(Stratum, WordStream)> {
    let gen = DocGen::for_key(key).expect("key spells names");
    generate_corpus(&gen, 1, &mut StdRng::seed_from_u64(42))
        .into_iter()
        .map(|d| (d.stratum, d.stream))
        .collect()
}
