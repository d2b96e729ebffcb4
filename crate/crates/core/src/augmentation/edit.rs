//! Token-level document edits and the span shifts they induce.

use crate::corpus::{Document, Span};
use crate::error::{Error, Result};

/// A single edit in global token coordinates of the document it applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    /// Remove `len` tokens starting at `at`.
    Delete { at: usize, len: usize },
    /// Insert `len` tokens before the token currently at `at`.
    Insert { at: usize, len: usize },
}

impl Edit {
    /// New coordinates of `span` after the edit, or `None` if the edit
    /// changes the tokens the span covers.
    pub fn shift(&self, span: Span) -> Option<Span> {
        match *self {
            Edit::Delete { at, len } => {
                if len == 0 || span.end < at {
                    Some(span)
                } else if span.start >= at + len {
                    Some(Span {
                        start: span.start - len,
                        end: span.end - len,
                    })
                } else {
                    None
                }
            }
            Edit::Insert { at, len } => {
                if len == 0 || span.end < at {
                    Some(span)
                } else if span.start >= at {
                    Some(Span {
                        start: span.start + len,
                        end: span.end + len,
                    })
                } else {
                    None
                }
            }
        }
    }
}

/// Sentences under construction. Global offsets are recomputed on demand,
/// so sentences may be temporarily empty between edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditableDocument {
    sentences: Vec<Vec<String>>,
}

impl EditableDocument {
    pub fn from_document(doc: &Document) -> Self {
        EditableDocument {
            sentences: doc.to_sentences(),
        }
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn sentence_len(&self, i: usize) -> usize {
        self.sentences[i].len()
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Global offset of the first token of sentence `i` (or the total token
    /// count for `i == num_sentences()`).
    pub fn sentence_start(&self, i: usize) -> usize {
        self.sentences[..i].iter().map(Vec::len).sum()
    }

    fn locate(&self, index: usize) -> (usize, usize) {
        let mut offset = 0;
        for (i, s) in self.sentences.iter().enumerate() {
            if index < offset + s.len() {
                return (i, index - offset);
            }
            offset += s.len();
        }
        unreachable!("index {index} checked against token count")
    }

    /// Remove the tokens of `span`, which may cross sentences. Sentences left
    /// empty are dropped unless `keep_empty` is set.
    pub fn delete(&mut self, span: Span, keep_empty: bool) -> Result<(Vec<String>, Edit)> {
        let total = self.num_tokens();
        if span.end >= total {
            return Err(Error::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len: total,
            });
        }
        let mut removed = Vec::with_capacity(span.len());
        let mut remaining = span.len();
        let (mut si, mut off) = self.locate(span.start);
        while remaining > 0 {
            let sentence = &mut self.sentences[si];
            let take = remaining.min(sentence.len() - off);
            removed.extend(sentence.drain(off..off + take));
            remaining -= take;
            si += 1;
            off = 0;
        }
        if !keep_empty {
            self.sentences.retain(|s| !s.is_empty());
        }
        Ok((
            removed,
            Edit::Delete {
                at: span.start,
                len: span.len(),
            },
        ))
    }

    /// Insert `tokens` into sentence `sentence` before its `offset`-th token.
    pub fn insert_tokens(&mut self, sentence: usize, offset: usize, tokens: &[String]) -> Result<Edit> {
        let n = self.sentences.len();
        let target = self
            .sentences
            .get(sentence)
            .ok_or(Error::BoundaryOutOfRange {
                boundary: sentence,
                sentences: n,
            })?;
        if offset > target.len() {
            return Err(Error::IndexOutOfRange {
                index: offset,
                len: target.len(),
            });
        }
        let at = self.sentence_start(sentence) + offset;
        self.sentences[sentence].splice(offset..offset, tokens.iter().cloned());
        Ok(Edit::Insert {
            at,
            len: tokens.len(),
        })
    }

    /// Insert a new sentence so that it becomes sentence `index`.
    pub fn insert_sentence(&mut self, index: usize, tokens: Vec<String>) -> Result<Edit> {
        if index > self.sentences.len() {
            return Err(Error::BoundaryOutOfRange {
                boundary: index,
                sentences: self.sentences.len(),
            });
        }
        let at = self.sentence_start(index);
        let len = tokens.len();
        self.sentences.insert(index, tokens);
        Ok(Edit::Insert { at, len })
    }

    pub fn into_document(mut self, doc_id: impl Into<String>) -> Result<Document> {
        self.sentences.retain(|s| !s.is_empty());
        Document::new(doc_id, self.sentences)
    }
}
