//! Message-level encryption for XML and JSON payloads.
//!
//! A ten-element key expands into a symbol table that maps every printable
//! character to a fixed-width number. Structural words (element names,
//! attribute names and values) also get short codes in a tag table that both
//! ends grow in step, so later messages shrink.

pub mod codec;
pub mod composition;
pub mod corpus;
pub mod doc;
pub mod key;
pub mod keystore;
pub mod tables;

pub use codec::{CodecError, EncryptedMessage, Mode, Session, WordKind};
pub use composition::{
    attach_digests, compose_decrypt, compose_encrypt, verify_digests, CompositionError, CompositionPolicy,
    DigestAlgorithm, KeyRing, OwnershipView, Verdict,
};
pub use doc::{parse_json, parse_xml, DocError, Token, WordStream};
pub use key::{generate_key, KeyBounds, KeyError, TenElementKey};
pub use keystore::{KeyManager, KeyReply, KeyRole, KeyStore, KeyStoreError, GET_KEY};
pub use tables::{NonVarKind, SymbolTable, TableError, TagTable, TatContext};
