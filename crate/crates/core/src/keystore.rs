//! Key storage at both ends of the "Get key" exchange.
//!
//! The file format is one record per line:
//! `peer <TAB> key-id <TAB> role <TAB> key`, UTF-8 with LF endings.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;

use crate::composition::{CompositionError, KeyRing};
use crate::key::{generate_key, KeyBounds, KeyError, TenElementKey};

/// Exact body of a key request.
pub const GET_KEY: &str = "Get key";

/// Key id under which a pairwise exchange stores its key.
pub const SESSION_KEY_ID: &str = "session";

#[derive(Debug, thiserror::Error)]
pub enum KeyStoreError {
    #[error("keystore i/o: {0}")]
    Io(#[from] io::Error),
    #[error("keystore line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("could not store key: {0}")]
    StoreFailure(String),
}

impl KeyStoreError {
    pub fn name(&self) -> &'static str {
        match self {
            KeyStoreError::Io(_) => "Io",
            KeyStoreError::Corrupt { .. } => "Corrupt",
            KeyStoreError::StoreFailure(_) => "StoreFailure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyRole {
    Pairwise,
    Group,
}

impl fmt::Display for KeyRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyRole::Pairwise => "pairwise",
            KeyRole::Group => "group",
        })
    }
}

impl FromStr for KeyRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pairwise" => Ok(KeyRole::Pairwise),
            "group" => Ok(KeyRole::Group),
            _ => Err(format!("unknown role {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRecord {
    pub peer: String,
    pub key_id: String,
    pub role: KeyRole,
    pub key: TenElementKey,
}

fn valid_field(s: &str) -> bool {
    !s.is_empty() && !s.contains(['\t', '\n', '\r'])
}

/// Keys by (peer, key id).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyStore {
    records: BTreeMap<(String, String), (KeyRole, TenElementKey)>,
}

impl KeyStore {
    pub fn new() -> KeyStore {
        KeyStore::default()
    }

    /// Insert or replace; returns the replaced key.
    pub fn insert(&mut self, peer: &str, key_id: &str, role: KeyRole, key: TenElementKey) -> Option<TenElementKey> {
        assert!(valid_field(peer) && valid_field(key_id), "peer and key id must be non-empty and tab-free");
        self.records
            .insert((peer.to_string(), key_id.to_string()), (role, key))
            .map(|(_, k)| k)
    }

    pub fn get(&self, peer: &str, key_id: &str) -> Option<(KeyRole, &TenElementKey)> {
        self.records
            .get(&(peer.to_string(), key_id.to_string()))
            .map(|(r, k)| (*r, k))
    }

    pub fn remove(&mut self, peer: &str, key_id: &str) -> Option<TenElementKey> {
        self.records.remove(&(peer.to_string(), key_id.to_string())).map(|(_, k)| k)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = KeyRecord> + '_ {
        self.records.iter().map(|((peer, key_id), (role, key))| KeyRecord {
            peer: peer.clone(),
            key_id: key_id.clone(),
            role: *role,
            key: *key,
        })
    }

    pub fn for_peer<'a>(&'a self, peer: &'a str) -> impl Iterator<Item = KeyRecord> + 'a {
        self.records().filter(move |r| r.peer == peer)
    }

    /// A key ring of everything held for `peer`, ids taken from key ids.
    pub fn ring_for(&self, peer: &str) -> Result<KeyRing, CompositionError> {
        let mut ring = KeyRing::new();
        for r in self.for_peer(peer) {
            ring.add(&r.key_id, r.key, r.role == KeyRole::Group)?;
        }
        Ok(ring)
    }

    /// A key ring of every record, ids taken from key ids. The same key id
    /// under two peers is accepted only for the same key and role.
    pub fn ring_all(&self) -> Result<KeyRing, CompositionError> {
        let mut ring = KeyRing::new();
        for r in self.records() {
            match ring.get(&r.key_id) {
                Some(e) if e.session.key() == &r.key && e.group == (r.role == KeyRole::Group) => {}
                Some(_) => return Err(CompositionError::DuplicateKey(r.key_id)),
                None => ring.add(&r.key_id, r.key, r.role == KeyRole::Group)?,
            }
        }
        Ok(ring)
    }

    pub fn to_text(&self) -> String {
        self.records()
            .map(|r| format!("{}\t{}\t{}\t{}\n", r.peer, r.key_id, r.role, r.key))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<KeyStore, KeyStoreError> {
        let mut store = KeyStore::new();
        for (i, line) in text.lines().enumerate() {
            let corrupt = |reason: String| KeyStoreError::Corrupt { line: i + 1, reason };
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [peer, key_id, role, key] = fields[..] else {
                return Err(corrupt(format!("expected 4 fields, found {}", fields.len())));
            };
            if !valid_field(peer) || !valid_field(key_id) {
                return Err(corrupt("empty peer or key id".into()));
            }
            let role: KeyRole = role.parse().map_err(corrupt)?;
            let key = TenElementKey::parse(key).map_err(|e: KeyError| corrupt(e.to_string()))?;
            if store.insert(peer, key_id, role, key).is_some() {
                return Err(corrupt(format!("duplicate record for {peer}/{key_id}")));
            }
        }
        Ok(store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<KeyStore, KeyStoreError> {
        KeyStore::from_text(&fs::read_to_string(path)?)
    }

    /// Write through a sibling temporary file so a crash never leaves a
    /// half-written store.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), KeyStoreError> {
        let path = path.as_ref();
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, self.to_text())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeyReply {
    /// The response body: the new key's text.
    Key(TenElementKey),
    /// Not a key request; hand the body to the service.
    PassThrough,
}

/// Server side of the exchange.
#[derive(Debug)]
pub struct KeyManager<R> {
    store: KeyStore,
    bounds: KeyBounds,
    peer_bounds: HashMap<String, KeyBounds>,
    rng: R,
    path: Option<PathBuf>,
}

impl<R: Rng> KeyManager<R> {
    pub fn new(store: KeyStore, bounds: KeyBounds, rng: R) -> KeyManager<R> {
        KeyManager {
            store,
            bounds,
            peer_bounds: HashMap::new(),
            rng,
            path: None,
        }
    }

    /// Draw keys for `peer` from `bounds` instead of the default ones.
    pub fn with_peer_bounds(mut self, peer: &str, bounds: KeyBounds) -> KeyManager<R> {
        self.peer_bounds.insert(peer.to_string(), bounds);
        self
    }

    /// Persist the store to `path` after every change.
    pub fn persist_to(mut self, path: impl Into<PathBuf>) -> KeyManager<R> {
        self.path = Some(path.into());
        self
    }

    pub fn store(&self) -> &KeyStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut KeyStore {
        &mut self.store
    }

    /// Answer an exact `"Get key"` body with a fresh key stored against
    /// `peer`, replacing any earlier one. Anything else passes through.
    pub fn handle_key_request(&mut self, body: &str, peer: &str) -> Result<KeyReply, KeyStoreError> {
        if body != GET_KEY {
            return Ok(KeyReply::PassThrough);
        }
        if !valid_field(peer) {
            return Err(KeyStoreError::StoreFailure(format!("invalid peer id {peer:?}")));
        }
        let bounds = self.peer_bounds.get(peer).unwrap_or(&self.bounds);
        let key = generate_key(bounds, &mut self.rng).map_err(|e| KeyStoreError::StoreFailure(e.to_string()))?;
        self.set(peer, SESSION_KEY_ID, KeyRole::Pairwise, key)?;
        Ok(KeyReply::Key(key))
    }

    /// Store a key, rolling back if it cannot be persisted.
    pub fn set(&mut self, peer: &str, key_id: &str, role: KeyRole, key: TenElementKey) -> Result<(), KeyStoreError> {
        if !valid_field(peer) || !valid_field(key_id) {
            return Err(KeyStoreError::StoreFailure(format!("invalid record {peer:?}/{key_id:?}")));
        }
        let old = self.store.get(peer, key_id).map(|(r, k)| (r, *k));
        self.store.insert(peer, key_id, role, key);
        if let Some(path) = &self.path {
            if let Err(e) = self.store.save(path) {
                match old {
                    Some((r, k)) => self.store.insert(peer, key_id, r, k),
                    None => self.store.remove(peer, key_id),
                };
                return Err(KeyStoreError::StoreFailure(e.to_string()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::SymbolTable;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k(s: &str) -> TenElementKey {
        s.parse().unwrap()
    }

    fn three_keys() -> KeyStore {
        let mut s = KeyStore::new();
        s.insert("sp1", "K1", KeyRole::Pairwise, k("[12,6,1,1,1,14,4,1,3,2]"));
        s.insert("sp2", "K2", KeyRole::Pairwise, k("[6,12,1,0,1,14,3,1,3,2]"));
        s.insert("sp1", "K3", KeyRole::Group, k("[7,10,0,0,1,14,3,0,3,2]"));
        s
    }

    #[test]
    fn text_round_trip() {
        let s = three_keys();
        let text = s.to_text();
        assert!(text.contains("sp1\tK1\tpairwise\t[12,6,1,1,1,14,4,1,3,2]\n"));
        assert_eq!(KeyStore::from_text(&text).unwrap(), s);
        assert!(KeyStore::from_text("").unwrap().is_empty());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("keys.tsv");
        let s = three_keys();
        s.save(&path).unwrap();
        assert_eq!(KeyStore::load(&path).unwrap(), s);
        assert!(matches!(KeyStore::load(dir.path().join("missing")), Err(KeyStoreError::Io(_))));
    }

    #[test]
    fn corrupt_lines() {
        let good = "a\tK1\tpairwise\t[12,6,1,1,1,14,4,1,3,2]\n";
        for (bad, line) in [
            (format!("{good}a\tK2\tpairwise\n"), 2),
            (format!("{good}b\tK2\towner\t[12,6,1,1,1,14,4,1,3,2]\n"), 2),
            (format!("b\tK2\tgroup\t[12,6,1\n{good}"), 1),
            (format!("{good}{good}"), 2),
            ("\tK\tgroup\t[12,6,1,1,1,14,4,1,3,2]".to_string(), 1),
        ] {
            match KeyStore::from_text(&bad) {
                Err(KeyStoreError::Corrupt { line: l, .. }) => assert_eq!(l, line, "{bad:?}"),
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn group_of_three_holds_n_keys() {
        // each member: one pairwise key per other member plus the group key
        let s = three_keys();
        let ring = s.ring_for("sp1").unwrap();
        assert_eq!(ring.len(), 2);
        assert_eq!(ring.group_id(), Some("K3"));
        let mut s = s;
        s.insert("sp2", "K3", KeyRole::Group, k("[7,10,0,0,1,14,3,0,3,2]"));
        assert_eq!(s.ring_all().unwrap().len(), 3);
        s.insert("sp3", "K3", KeyRole::Pairwise, k("[7,10,0,0,1,14,3,0,3,2]"));
        assert!(s.ring_all().is_err());
    }

    #[test]
    fn get_key_exchange() {
        let mut m = KeyManager::new(KeyStore::new(), KeyBounds::default(), ChaCha8Rng::seed_from_u64(7));
        assert_eq!(m.handle_key_request("get key", "c").unwrap(), KeyReply::PassThrough);
        assert_eq!(m.handle_key_request("Get key ", "c").unwrap(), KeyReply::PassThrough);
        assert!(m.store().is_empty());
        let KeyReply::Key(first) = m.handle_key_request(GET_KEY, "c").unwrap() else { panic!() };
        let text = first.serialize();
        assert!(text.starts_with('[') && !text.contains(' '));
        // the client side parses the body and derives the same table
        let client = TenElementKey::parse(&text).unwrap();
        assert_eq!(SymbolTable::build(&client).unwrap(), SymbolTable::build(&first).unwrap());
        let KeyReply::Key(second) = m.handle_key_request(GET_KEY, "c").unwrap() else { panic!() };
        assert_eq!(m.store().len(), 1);
        assert_eq!(m.store().get("c", SESSION_KEY_ID).unwrap().1, &second);
    }

    #[test]
    fn pinned_bounds() {
        let k1 = k("[12,6,1,1,1,14,4,1,3,2]");
        let mut m = KeyManager::new(KeyStore::new(), KeyBounds::default(), ChaCha8Rng::seed_from_u64(2))
            .with_peer_bounds("sp1", KeyBounds::exactly(&k1));
        assert_eq!(m.handle_key_request(GET_KEY, "sp1").unwrap(), KeyReply::Key(k1));
    }

    #[test]
    fn persistence_failure_rolls_back() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = KeyManager::new(KeyStore::new(), KeyBounds::default(), ChaCha8Rng::seed_from_u64(1))
            .persist_to(dir.path().join("no-such-dir").join("keys"));
        let err = m.handle_key_request(GET_KEY, "c").unwrap_err();
        assert_eq!(err.name(), "StoreFailure");
        assert!(m.store().is_empty());

        let path = dir.path().join("keys");
        let mut m = KeyManager::new(KeyStore::new(), KeyBounds::default(), ChaCha8Rng::seed_from_u64(1)).persist_to(&path);
        m.handle_key_request(GET_KEY, "c").unwrap();
        assert_eq!(&KeyStore::load(&path).unwrap(), m.store());
    }
}
