//! One document, several keys.
//!
//! Each element is owned by one key of a [`KeyRing`]: the root and anything
//! not mentioned by the [`CompositionPolicy`] belong to the group key, and an
//! element assigned to a pairwise key takes its whole subtree with it. A
//! single body serves every recipient; each one decodes the parts its keys
//! cover and sees the rest as opaque words in place.

mod digest;
mod layout;
mod partial;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::codec::{commit_new_words, encode_token, CodecError, Mode, Session};
use crate::doc::{enclosing_ordinals, Token, WordStream};
use crate::key::TenElementKey;
use crate::tables::{NonVarKind, TableError};

pub use digest::{
    attach_digests, attach_digests_for, resign_digests, sign_segment, verify_digests, DigestAlgorithm,
    SegmentVerdict, Verdict,
};
pub use partial::{compose_decrypt, OwnershipView, PartialStream, PartialWord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompositionError {
    #[error("no key {0:?} in the key ring")]
    MissingKey(String),
    #[error("duplicate key id {0:?}")]
    DuplicateKey(String),
    #[error("policy conflict: {0}")]
    PolicyConflict(String),
    #[error("malformed message: {0}")]
    MalformedMessage(String),
    #[error("element {0} is not readable with the held keys")]
    NotOwned(usize),
    #[error("element {0} has no text")]
    NoVariable(usize),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

impl CompositionError {
    pub fn name(&self) -> &'static str {
        match self {
            CompositionError::MissingKey(_) => "MissingKey",
            CompositionError::DuplicateKey(_) => "DuplicateKey",
            CompositionError::PolicyConflict(_) => "PolicyConflict",
            CompositionError::MalformedMessage(_) => "MalformedMessage",
            CompositionError::NotOwned(_) => "NotOwned",
            CompositionError::NoVariable(_) => "NoVariable",
            CompositionError::Codec(e) => e.name(),
        }
    }
}

impl From<TableError> for CompositionError {
    fn from(e: TableError) -> Self {
        CompositionError::Codec(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyEntry {
    pub id: String,
    pub group: bool,
    pub session: Session,
}

/// Named keys with their tables. At most one entry is the group key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyRing {
    entries: Vec<KeyEntry>,
}

impl KeyRing {
    pub fn new() -> KeyRing {
        KeyRing::default()
    }

    pub fn add(&mut self, id: &str, key: TenElementKey, group: bool) -> Result<(), CompositionError> {
        self.add_session(id, Session::new(key)?, group)
    }

    pub fn add_session(&mut self, id: &str, session: Session, group: bool) -> Result<(), CompositionError> {
        if self.get(id).is_some() {
            return Err(CompositionError::DuplicateKey(id.to_string()));
        }
        if group {
            if let Some(g) = self.group_id() {
                return Err(CompositionError::PolicyConflict(format!("{g:?} is already the group key")));
            }
        }
        self.entries.push(KeyEntry {
            id: id.to_string(),
            group,
            session,
        });
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&KeyEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.get(id).map(|e| &e.session)
    }

    pub fn group_id(&self) -> Option<&str> {
        self.entries.iter().find(|e| e.group).map(|e| e.id.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    pub fn entries(&self) -> &[KeyEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy of the entries named in `ids`, state included.
    pub fn subset(&self, ids: &[&str]) -> Result<KeyRing, CompositionError> {
        let mut out = KeyRing::new();
        for id in ids {
            let e = self.get(id).ok_or_else(|| CompositionError::MissingKey(id.to_string()))?;
            out.entries.push(e.clone());
        }
        Ok(out)
    }

    fn index_of(&self, id: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.id == id)
    }

    fn sessions_mut(&mut self) -> Vec<&mut Session> {
        self.entries.iter_mut().map(|e| &mut e.session).collect()
    }
}

/// Which key owns which element, by ordinal. Unlisted elements inherit
/// their parent's key; the root always belongs to the group key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionPolicy {
    group: String,
    owners: BTreeMap<usize, String>,
}

impl CompositionPolicy {
    pub fn new(group: &str) -> CompositionPolicy {
        CompositionPolicy {
            group: group.to_string(),
            owners: BTreeMap::new(),
        }
    }

    pub fn assign(mut self, ordinal: usize, key_id: &str) -> CompositionPolicy {
        self.owners.insert(ordinal, key_id.to_string());
        self
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn assignments(&self) -> impl Iterator<Item = (usize, &str)> {
        self.owners.iter().map(|(o, k)| (*o, k.as_str()))
    }

    /// Owner key id of every element; `parents[o - 1]` is the parent ordinal
    /// of element `o`.
    pub fn resolve(&self, parents: &[Option<usize>]) -> Result<Vec<String>, CompositionError> {
        let conflict = |msg: String| Err(CompositionError::PolicyConflict(msg));
        if let Some((&o, _)) = self.owners.range(parents.len() + 1..).next() {
            return conflict(format!("ordinal {o} is not in the document"));
        }
        if self.owners.contains_key(&0) {
            return conflict("ordinals start at 1".into());
        }
        let mut owners: Vec<String> = Vec::with_capacity(parents.len());
        for (i, parent) in parents.iter().enumerate() {
            let explicit = self.owners.get(&(i + 1));
            let owner = match parent {
                None => {
                    if explicit.is_some_and(|k| *k != self.group) {
                        return conflict("the root element must use the group key".into());
                    }
                    self.group.clone()
                }
                Some(p) => {
                    let inherited = &owners[p - 1];
                    match explicit {
                        Some(k) if *inherited != self.group && k != inherited => {
                            return conflict(format!(
                                "element {} is inside {inherited:?}'s element {p} but assigned to {k:?}",
                                i + 1
                            ));
                        }
                        Some(k) => k.clone(),
                        None => inherited.clone(),
                    }
                }
            };
            owners.push(owner);
        }
        Ok(owners)
    }
}

/// `group=K3 2=K1 3=K2 4=K2`, separated by spaces or commas.
impl FromStr for CompositionPolicy {
    type Err = CompositionError;

    fn from_str(s: &str) -> Result<Self, CompositionError> {
        let bad = |p: &str| CompositionError::PolicyConflict(format!("bad policy item {p:?}"));
        let mut group = None;
        let mut owners = BTreeMap::new();
        for item in s.split([' ', ',', '\n']).filter(|p| !p.is_empty()) {
            let (lhs, rhs) = item.split_once('=').ok_or_else(|| bad(item))?;
            if rhs.is_empty() {
                return Err(bad(item));
            }
            if lhs == "group" {
                group = Some(rhs.to_string());
            } else {
                let o: usize = lhs.parse().map_err(|_| bad(item))?;
                owners.insert(o, rhs.to_string());
            }
        }
        let group = group.ok_or_else(|| CompositionError::PolicyConflict("policy names no group key".into()))?;
        Ok(CompositionPolicy { group, owners })
    }
}

impl fmt::Display for CompositionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "group={}", self.group)?;
        for (o, k) in &self.owners {
            write!(f, " {o}={k}")?;
        }
        Ok(())
    }
}

/// Parent ordinal of every element of a stream.
pub fn stream_parents(stream: &WordStream) -> Vec<Option<usize>> {
    let mut parents = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for t in stream {
        match t {
            Token::Open(_) => {
                parents.push(stack.last().copied());
                stack.push(parents.len());
            }
            Token::Close => {
                stack.pop();
            }
            _ => {}
        }
    }
    parents
}

/// Encode each word with the tables of the key owning its element
/// (`compose_encrypt`). Returns the body words, without access header.
pub fn compose_encrypt(
    stream: &WordStream,
    policy: &CompositionPolicy,
    ring: &mut KeyRing,
    mode: Mode,
) -> Result<Vec<String>, CompositionError> {
    let owners = policy.resolve(&stream_parents(stream))?;
    let owner_idx = owners
        .iter()
        .map(|id| ring.index_of(id).ok_or_else(|| CompositionError::MissingKey(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let enclosing = enclosing_ordinals(stream);
    let mut words = Vec::with_capacity(stream.len());
    let mut new_words = Vec::new();
    for (token, &ord) in stream.iter().zip(&enclosing) {
        let idx = owner_idx[ord - 1];
        words.push(encode_token(token, &ring.entries[idx].session, mode)?);
        let kind = match token {
            Token::Open(_) => NonVarKind::Tag,
            Token::AttrName(_) => NonVarKind::AttrName,
            Token::AttrValue(_) => NonVarKind::AttrValue,
            _ => continue,
        };
        new_words.push((idx, token.word().unwrap_or_default().to_string(), kind));
    }
    commit_new_words(&mut ring.sessions_mut(), &new_words)?;
    Ok(words)
}

/// Ordinals a recipient holding `keys` should process: every element owned
/// by one of its pairwise keys (`access_header`).
pub fn access_header(
    stream: &WordStream,
    policy: &CompositionPolicy,
    keys: &[&str],
) -> Result<Vec<usize>, CompositionError> {
    let owners = policy.resolve(&stream_parents(stream))?;
    Ok(owners
        .iter()
        .enumerate()
        .filter(|(_, k)| **k != policy.group && keys.contains(&k.as_str()))
        .map(|(i, _)| i + 1)
        .collect())
}
