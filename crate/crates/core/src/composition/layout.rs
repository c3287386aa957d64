use crate::codec::{classify_word, is_digest_word, WordKind, DIGEST_HEX_LENGTHS};

use super::CompositionError;

/// Where one element sits in a body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Span {
    pub parent: Option<usize>,
    /// Index of the element's name word.
    pub start: usize,
    /// Index of its closer.
    pub end: usize,
    /// Index of the digest word right after the closer, if any.
    pub digest: Option<usize>,
}

/// Structure of a body recovered from markers alone: no key needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub kinds: Vec<WordKind>,
    /// Ordinal of the element each word belongs to; 0 for the final digest.
    pub element: Vec<usize>,
    pub spans: Vec<Span>,
    pub final_digest: Option<usize>,
}

impl Layout {
    pub fn parse(words: &[String]) -> Result<Layout, CompositionError> {
        let bad = |msg: String| CompositionError::MalformedMessage(msg);
        let mut kinds = Vec::with_capacity(words.len());
        let mut element = Vec::with_capacity(words.len());
        let mut spans: Vec<Span> = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut final_digest = None;
        // element whose closer is the previous word, or 0 for the root's
        let mut just_closed: Option<usize> = None;
        for (i, word) in words.iter().enumerate() {
            if let Some(closed) = just_closed.take() {
                if is_digest_at_boundary(word) {
                    kinds.push(WordKind::Digest);
                    if stack.is_empty() {
                        final_digest = Some(i);
                        element.push(0);
                    } else {
                        spans[closed - 1].digest = Some(i);
                        element.push(closed);
                    }
                    continue;
                }
            }
            if stack.is_empty() && !spans.is_empty() {
                return Err(bad(format!("word {i} follows the root element")));
            }
            let kind = classify_word(word).map_err(|e| bad(format!("word {i}: {e}")))?;
            match kind {
                WordKind::Tag => {
                    spans.push(Span {
                        parent: stack.last().copied(),
                        start: i,
                        end: i,
                        digest: None,
                    });
                    stack.push(spans.len());
                    element.push(spans.len());
                }
                WordKind::Closer => {
                    let ord = stack.pop().ok_or_else(|| bad(format!("unbalanced closer at word {i}")))?;
                    spans[ord - 1].end = i;
                    element.push(ord);
                    just_closed = Some(ord);
                }
                WordKind::Digest => return Err(bad(format!("digest at word {i} does not follow a closer"))),
                _ => match stack.last() {
                    Some(&ord) => element.push(ord),
                    None => return Err(bad(format!("word {i} is outside any element"))),
                },
            }
            kinds.push(kind);
        }
        if !stack.is_empty() || spans.is_empty() {
            return Err(bad("unbalanced closers".into()));
        }
        Ok(Layout {
            kinds,
            element,
            spans,
            final_digest,
        })
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        self.spans.iter().map(|s| s.parent).collect()
    }

    /// The words that are not digests.
    pub fn plain<'w>(&self, words: &'w [String]) -> Vec<&'w str> {
        words
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k != WordKind::Digest)
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// Non-digest words of element `ord`'s subtree, in order.
    pub fn segment<'w>(&self, words: &'w [String], ord: usize) -> Vec<&'w str> {
        let span = &self.spans[ord - 1];
        (span.start..=span.end)
            .filter(|&i| self.kinds[i] != WordKind::Digest)
            .map(|i| words[i].as_str())
            .collect()
    }
}

/// After a closer a text word cannot occur, so besides hex-with-letter
/// digests an all-digit word of digest length with a nonzero lead is read as
/// a digest too.
fn is_digest_at_boundary(word: &str) -> bool {
    is_digest_word(word)
        || (DIGEST_HEX_LENGTHS.contains(&word.len())
            && word.bytes().all(|b| b.is_ascii_digit())
            && !word.starts_with('0'))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn spans_and_digests() {
        let w = words(
            "01 009 0002 05 122122104122 0 adc1aeffe1fe867740f976fd55c0c481 07 313 0 0 \
             72afa9838090da9c5d82d2060c42f48c",
        );
        let l = Layout::parse(&w).unwrap();
        assert_eq!(l.spans.len(), 3);
        assert_eq!(l.spans[1], Span { parent: Some(1), start: 3, end: 5, digest: Some(6) });
        assert_eq!(l.spans[2].digest, None);
        assert_eq!(l.final_digest, Some(11));
        assert_eq!(l.segment(&w, 2), ["05", "122122104122", "0"]);
        assert_eq!(l.plain(&w).len(), 10);
        assert_eq!(l.element, [1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 1, 0]);
        assert_eq!(l.parents(), [None, Some(1), Some(1)]);
    }

    #[test]
    fn numeric_digest_after_closer() {
        let d = "1".repeat(32);
        let w = words(&format!("01 05 0 {d} 0"));
        let l = Layout::parse(&w).unwrap();
        assert_eq!(l.spans[1].digest, Some(3));
    }

    #[test]
    fn malformed() {
        for s in [
            "01 05 0",
            "01 0 0",
            "01 0 05 0",
            "adc1aeffe1fe867740f976fd55c0c481 01 0",
            "01 adc1aeffe1fe867740f976fd55c0c481 0",
            "01 00 0",
            "122 01 0",
        ] {
            assert!(Layout::parse(&words(s)).is_err(), "{s}");
        }
    }
}
