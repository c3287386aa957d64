use crate::codec::{commit_new_words, decode_word, encode_word, EncryptedMessage, Mode, WordKind};
use crate::doc::{check_printable, Token, WordStream};

use super::layout::Layout;
use super::{CompositionError, CompositionPolicy, KeyRing};

/// How a recipient decides which key owns which element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OwnershipView {
    /// The full policy is known; keys still stay with their holders.
    Policy(CompositionPolicy),
    /// Only the access header is known: its elements (and their subtrees)
    /// belong to the recipient's single pairwise key, the root to the group
    /// key, and everything else is opaque.
    Header,
}

impl OwnershipView {
    /// Owner key id per element, `None` where the view cannot tell or the
    /// key is not held.
    pub(crate) fn owners(
        &self,
        layout: &Layout,
        access: &[usize],
        ring: &KeyRing,
    ) -> Result<Vec<Option<String>>, CompositionError> {
        let held = |id: &str| ring.get(id).is_some();
        match self {
            OwnershipView::Policy(policy) => Ok(policy
                .resolve(&layout.parents())?
                .into_iter()
                .map(|id| held(&id).then_some(id))
                .collect()),
            OwnershipView::Header => {
                let pairwise: Vec<&str> = ring.entries().iter().filter(|e| !e.group).map(|e| e.id.as_str()).collect();
                let mine = match (pairwise.as_slice(), access.is_empty()) {
                    (_, true) => None,
                    ([one], false) => Some(one.to_string()),
                    ([], false) => return Err(CompositionError::MissingKey("pairwise key".into())),
                    _ => {
                        return Err(CompositionError::PolicyConflict(
                            "the header alone cannot say which pairwise key applies".into(),
                        ))
                    }
                };
                let group = ring.group_id().map(str::to_string);
                let mut owners: Vec<Option<String>> = Vec::with_capacity(layout.spans.len());
                for (i, span) in layout.spans.iter().enumerate() {
                    let owner = if access.contains(&(i + 1)) {
                        mine.clone()
                    } else {
                        match span.parent {
                            None => group.clone(),
                            // below the root, inherit from the parent
                            Some(p) if layout.spans[p - 1].parent.is_some() => owners[p - 1].clone(),
                            Some(_) => None,
                        }
                    };
                    owners.push(owner);
                }
                Ok(owners)
            }
        }
    }
}

/// One wire word as seen by a recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialWord {
    pub raw: String,
    pub kind: WordKind,
    /// Element the word belongs to; 0 for the whole-document digest.
    pub ordinal: usize,
    /// Key that decoded the word, if any.
    pub owner: Option<String>,
    /// `None` for opaque words and digests.
    pub token: Option<Token>,
}

/// A message decoded as far as the held keys allow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialStream {
    pub access: Vec<usize>,
    pub words: Vec<PartialWord>,
}

impl PartialStream {
    pub fn is_complete(&self) -> bool {
        self.words.iter().all(|w| w.kind == WordKind::Digest || w.token.is_some())
    }

    /// The full document; fails if any word stayed opaque.
    pub fn to_stream(&self) -> Result<WordStream, CompositionError> {
        let mut tokens = Vec::with_capacity(self.words.len());
        for w in self.words.iter().filter(|w| w.kind != WordKind::Digest) {
            match &w.token {
                Some(t) => tokens.push(t.clone()),
                None => return Err(CompositionError::NotOwned(w.ordinal)),
            }
        }
        WordStream::new(tokens).map_err(|e| CompositionError::Codec(crate::codec::CodecError::InvalidStream(e)))
    }

    /// All wire words, digests included.
    pub fn body_words(&self) -> Vec<String> {
        self.words.iter().map(|w| w.raw.clone()).collect()
    }

    pub fn to_message(&self) -> EncryptedMessage {
        EncryptedMessage::new(self.access.clone(), self.body_words())
    }

    /// Decoded name of element `ordinal`.
    pub fn element_name(&self, ordinal: usize) -> Option<&str> {
        self.words.iter().find_map(|w| match (&w.token, w.kind) {
            (Some(Token::Open(name)), WordKind::Tag) if w.ordinal == ordinal => Some(name.as_str()),
            _ => None,
        })
    }

    /// Decoded text of element `ordinal`.
    pub fn variable(&self, ordinal: usize) -> Option<&str> {
        self.words.iter().find_map(|w| match &w.token {
            Some(Token::Variable(t)) if w.ordinal == ordinal => Some(t.as_str()),
            _ => None,
        })
    }

    /// Replace the text of an owned element, re-encoded with its key. Every
    /// other word stays byte-identical.
    pub fn set_variable(&mut self, ordinal: usize, text: &str, ring: &KeyRing) -> Result<(), CompositionError> {
        let word = self
            .words
            .iter_mut()
            .find(|w| w.ordinal == ordinal && w.kind == WordKind::Variable)
            .ok_or(CompositionError::NoVariable(ordinal))?;
        let session = word
            .owner
            .as_deref()
            .and_then(|id| ring.session(id))
            .ok_or(CompositionError::NotOwned(ordinal))?;
        check_printable(text).map_err(|e| CompositionError::Codec(crate::codec::CodecError::InvalidStream(e)))?;
        if text.trim().is_empty() {
            return Err(CompositionError::NoVariable(ordinal));
        }
        word.raw = encode_word(text, WordKind::Variable, session.st())?;
        word.token = Some(Token::Variable(text.to_string()));
        Ok(())
    }
}

/// Decode the parts of `msg` covered by the keys in `ring`
/// (`compose_decrypt`). Tag tables of the held keys grow as they would for
/// the plain codec.
pub fn compose_decrypt(
    msg: &EncryptedMessage,
    ring: &mut KeyRing,
    view: &OwnershipView,
    mode: Mode,
) -> Result<PartialStream, CompositionError> {
    let layout = Layout::parse(&msg.words)?;
    let owners = view.owners(&layout, &msg.access, ring)?;
    let mut words = Vec::with_capacity(msg.words.len());
    let mut new_words = Vec::new();
    for (i, raw) in msg.words.iter().enumerate() {
        let kind = layout.kinds[i];
        let ordinal = layout.element[i];
        let owner = match ordinal {
            0 => None,
            o => owners[o - 1].clone(),
        };
        let token = match (kind, &owner) {
            (WordKind::Digest, _) => None,
            (WordKind::Closer, _) => Some(Token::Close),
            (_, Some(id)) => {
                let idx = ring.index_of(id).expect("owner is held");
                let token = decode_word(raw, kind, &ring.entries[idx].session, mode)?;
                if let Some(k) = kind.non_var_kind() {
                    new_words.push((idx, token.word().unwrap_or_default().to_string(), k));
                }
                Some(token)
            }
            (_, None) => None,
        };
        words.push(PartialWord {
            raw: raw.clone(),
            kind,
            ordinal,
            owner: if kind == WordKind::Closer || kind == WordKind::Digest { None } else { owner },
            token,
        });
    }
    commit_new_words(&mut ring.sessions_mut(), &new_words)?;
    Ok(PartialStream {
        access: msg.access.clone(),
        words,
    })
}
