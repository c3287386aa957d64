use std::fmt;
use std::str::FromStr;

use md5::Md5;
use sha1::Sha1;
use sha2::{Digest, Sha256};

use crate::codec::{EncryptedMessage, WordKind};
use crate::key::TenElementKey;

use super::layout::Layout;
use super::partial::OwnershipView;
use super::{CompositionError, CompositionPolicy, KeyRing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DigestAlgorithm {
    #[default]
    Md5,
    Sha1,
    Sha256,
}

impl DigestAlgorithm {
    pub fn hex_len(self) -> usize {
        match self {
            DigestAlgorithm::Md5 => 32,
            DigestAlgorithm::Sha1 => 40,
            DigestAlgorithm::Sha256 => 64,
        }
    }
}

impl fmt::Display for DigestAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DigestAlgorithm::Md5 => "md5",
            DigestAlgorithm::Sha1 => "sha1",
            DigestAlgorithm::Sha256 => "sha256",
        })
    }
}

impl FromStr for DigestAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "md5" => Ok(DigestAlgorithm::Md5),
            "sha1" => Ok(DigestAlgorithm::Sha1),
            "sha256" => Ok(DigestAlgorithm::Sha256),
            _ => Err(format!("unknown digest algorithm {s:?}")),
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn keyed<D: Digest>(key: &TenElementKey, segment: &[&str]) -> String {
    let mut h = D::new();
    h.update(key.serialize().as_bytes());
    h.update(segment.join(" ").as_bytes());
    hex(&h.finalize())
}

/// Digest of the key's text followed by the segment words joined with
/// single spaces (`sign_segment`).
pub fn sign_segment<S: AsRef<str>>(segment: &[S], key: &TenElementKey, alg: DigestAlgorithm) -> String {
    let words: Vec<&str> = segment.iter().map(AsRef::as_ref).collect();
    match alg {
        DigestAlgorithm::Md5 => keyed::<Md5>(key, &words),
        DigestAlgorithm::Sha1 => keyed::<Sha1>(key, &words),
        DigestAlgorithm::Sha256 => keyed::<Sha256>(key, &words),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    Reject,
    NotCheckable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentVerdict {
    /// Signed element, or `None` for the whole-document digest.
    pub ordinal: Option<usize>,
    pub key_id: Option<String>,
    pub verdict: Verdict,
}

/// Elements that start a new owner below a different one: the roots of the
/// subtrees that carry their own digest.
fn boundaries(layout: &Layout, owners: &[Option<String>], group: Option<&str>) -> Vec<usize> {
    (1..=layout.spans.len())
        .filter(|&o| {
            let own = owners[o - 1].as_deref();
            let parent = layout.spans[o - 1].parent.and_then(|p| owners[p - 1].as_deref());
            own.is_some() && own != group && own != parent
        })
        .collect()
}

fn rebuild(
    words: &[String],
    layout: &Layout,
    mut subtree_digest: impl FnMut(usize) -> Option<String>,
    final_digest: Option<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len() + layout.spans.len() + 1);
    for (i, w) in words.iter().enumerate() {
        if layout.kinds[i] == WordKind::Digest {
            continue;
        }
        out.push(w.clone());
        if layout.kinds[i] == WordKind::Closer {
            let ord = layout.element[i];
            if layout.spans[ord - 1].parent.is_some() {
                out.extend(subtree_digest(ord));
            }
        }
    }
    out.extend(final_digest);
    out
}

fn signer<'r>(ring: &'r KeyRing, id: &str) -> Result<&'r TenElementKey, CompositionError> {
    ring.session(id)
        .map(|s| s.key())
        .ok_or_else(|| CompositionError::MissingKey(id.to_string()))
}

/// Sign every pairwise-owned subtree with its key, then the whole body with
/// the group key (`attach_digests`). Existing digests are dropped.
pub fn attach_digests(
    body: &[String],
    policy: &CompositionPolicy,
    ring: &KeyRing,
    alg: DigestAlgorithm,
) -> Result<Vec<String>, CompositionError> {
    attach(body, policy, ring, None, alg)
}

/// Like [`attach_digests`] but signs only the subtrees owned by
/// `recipient_keys`, producing the message meant for one recipient.
pub fn attach_digests_for(
    body: &[String],
    policy: &CompositionPolicy,
    ring: &KeyRing,
    recipient_keys: &[&str],
    alg: DigestAlgorithm,
) -> Result<Vec<String>, CompositionError> {
    attach(body, policy, ring, Some(recipient_keys), alg)
}

fn attach(
    body: &[String],
    policy: &CompositionPolicy,
    ring: &KeyRing,
    only: Option<&[&str]>,
    alg: DigestAlgorithm,
) -> Result<Vec<String>, CompositionError> {
    let layout = Layout::parse(body)?;
    let owners: Vec<Option<String>> = policy.resolve(&layout.parents())?.into_iter().map(Some).collect();
    let signed = boundaries(&layout, &owners, Some(policy.group()));
    let mut digests = vec![None; layout.spans.len()];
    for &o in &signed {
        let id = owners[o - 1].as_deref().expect("resolved");
        if only.is_some_and(|keys| !keys.contains(&id)) {
            continue;
        }
        digests[o - 1] = Some(sign_segment(&layout.segment(body, o), signer(ring, id)?, alg));
    }
    let whole = sign_segment(&layout.plain(body), signer(ring, policy.group())?, alg);
    Ok(rebuild(body, &layout, |o| digests[o - 1].take(), Some(whole)))
}

/// Recompute the digests this holder can produce and keep the others as
/// they are: what an intermediary does after editing its own elements.
pub fn resign_digests(
    msg: &EncryptedMessage,
    ring: &KeyRing,
    view: &OwnershipView,
    alg: DigestAlgorithm,
) -> Result<Vec<String>, CompositionError> {
    let words = &msg.words;
    let layout = Layout::parse(words)?;
    let owners = view.owners(&layout, &msg.access, ring)?;
    let group = ring.group_id();
    let mine = boundaries(&layout, &owners, group);
    let subtree = |o: usize| {
        if mine.contains(&o) {
            let id = owners[o - 1].as_deref().expect("held");
            let key = ring.session(id).expect("held").key();
            Some(sign_segment(&layout.segment(words, o), key, alg))
        } else {
            layout.spans[o - 1].digest.map(|i| words[i].clone())
        }
    };
    let whole = match group.and_then(|g| ring.session(g)) {
        Some(s) => Some(sign_segment(&layout.plain(words), s.key(), alg)),
        None => layout.final_digest.map(|i| words[i].clone()),
    };
    Ok(rebuild(words, &layout, subtree, whole))
}

/// Check every digest the held keys can recompute (`verify_digests`).
///
/// A subtree owned by a held pairwise key must carry a matching digest, and
/// so must the whole body when the group key is held; a missing digest is a
/// rejection. Digests under keys not held are `NotCheckable`.
pub fn verify_digests(
    msg: &EncryptedMessage,
    ring: &KeyRing,
    view: &OwnershipView,
    alg: DigestAlgorithm,
) -> Result<Vec<SegmentVerdict>, CompositionError> {
    let words = &msg.words;
    let layout = Layout::parse(words)?;
    let owners = view.owners(&layout, &msg.access, ring)?;
    let group = ring.group_id();
    let checkable = boundaries(&layout, &owners, group);
    let check = |found: Option<usize>, key: &TenElementKey, segment: Vec<&str>| match found {
        Some(i) if words[i] == sign_segment(&segment, key, alg) => Verdict::Accept,
        _ => Verdict::Reject,
    };
    let mut out = Vec::new();
    for (i, span) in layout.spans.iter().enumerate() {
        let o = i + 1;
        if checkable.contains(&o) {
            let id = owners[i].clone().expect("held");
            let key = ring.session(&id).expect("held").key();
            out.push(SegmentVerdict {
                ordinal: Some(o),
                verdict: check(span.digest, key, layout.segment(words, o)),
                key_id: Some(id),
            });
        } else if span.digest.is_some() {
            // signed by someone else, or unexpected for this holder
            let own = owners[i].as_deref();
            let verdict = if own.is_some() { Verdict::Reject } else { Verdict::NotCheckable };
            out.push(SegmentVerdict {
                ordinal: Some(o),
                key_id: own.map(str::to_string),
                verdict,
            });
        }
    }
    out.push(match group.and_then(|g| ring.session(g).map(|s| (g, s))) {
        Some((g, s)) => SegmentVerdict {
            ordinal: None,
            key_id: Some(g.to_string()),
            verdict: check(layout.final_digest, s.key(), layout.plain(words)),
        },
        None => SegmentVerdict {
            ordinal: None,
            key_id: None,
            verdict: Verdict::NotCheckable,
        },
    });
    Ok(out)
}
