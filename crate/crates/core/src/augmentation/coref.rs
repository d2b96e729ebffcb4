use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{augmented_doc_id, AugmentedInstance, Strategy};
use crate::corpus::{argument_distance, Corpus, Document, EventFrame, Span};
use crate::error::{Error, Result};
use crate::{io, seed};

/// Mention as stored in the chains file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMention {
    pub span: Span,
    #[serde(default)]
    pub ne: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ChainsLine {
    doc_id: String,
    chains: Vec<Vec<ChainMention>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub span: Span,
    pub is_named_entity: bool,
    pub text: String,
}

/// Precomputed coreference chains per document id.
#[derive(Debug, Clone, Default)]
pub struct CorefChains {
    by_doc: HashMap<String, Vec<Vec<Mention>>>,
}

impl CorefChains {
    /// Attach mention text from `corpus` and validate spans. Chains for
    /// documents absent from the corpus are ignored.
    pub fn from_raw(raw: Vec<(String, Vec<Vec<ChainMention>>)>, corpus: &Corpus) -> Result<Self> {
        let docs: HashMap<&str, &Document> = corpus
            .entries
            .iter()
            .map(|e| (e.document.doc_id(), &e.document))
            .collect();
        let mut by_doc = HashMap::new();
        for (doc_id, chains) in raw {
            let Some(doc) = docs.get(doc_id.as_str()) else {
                log::debug!("chains for unknown document `{doc_id}` ignored");
                continue;
            };
            let mut resolved = Vec::with_capacity(chains.len());
            for chain in chains {
                let mut mentions = Vec::with_capacity(chain.len());
                for m in chain {
                    doc.check_span(&m.span)?;
                    mentions.push(Mention {
                        span: m.span,
                        is_named_entity: m.ne,
                        text: doc.span_text(&m.span),
                    });
                }
                resolved.push(mentions);
            }
            by_doc
                .entry(doc_id)
                .or_insert_with(Vec::new)
                .extend(resolved);
        }
        Ok(CorefChains { by_doc })
    }

    pub fn load(path: &Path, corpus: &Corpus) -> Result<Self> {
        let lines: Vec<ChainsLine> = io::read_jsonl(path)?;
        CorefChains::from_raw(
            lines.into_iter().map(|l| (l.doc_id, l.chains)).collect(),
            corpus,
        )
    }

    pub fn for_doc(&self, doc_id: &str) -> Option<&[Vec<Mention>]> {
        self.by_doc.get(doc_id).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MentionSelection {
    /// Uniform over qualifying mentions.
    Random,
    /// Most tokens, then named entities, then earliest.
    Meaningful,
}

/// Repoint argument `index` to a mention, in another sentence, of a chain
/// whose mentions cover the argument. The document text is not modified.
pub fn cr_augment(
    doc: &Document,
    frame: &EventFrame,
    index: usize,
    chains: &[Vec<Mention>],
    mode: MentionSelection,
    seed: u64,
) -> Result<AugmentedInstance> {
    let arg = frame.arguments.get(index).ok_or(Error::NoSuchArgument {
        index,
        count: frame.arguments.len(),
    })?;
    let distance = argument_distance(doc, frame, &arg.span)?;
    if distance != 0 {
        return Err(Error::NotIntraSentential { index, distance });
    }
    let covering: Vec<&Vec<Mention>> = chains
        .iter()
        .filter(|chain| chain.iter().any(|m| m.span.contains(&arg.span)))
        .collect();
    if covering.is_empty() {
        return Err(Error::NoCoveringChain(index));
    }
    let trigger_sentence = frame.trigger_sentence(doc)?;
    let mut candidates: Vec<&Mention> = Vec::new();
    for mention in covering.into_iter().flatten() {
        doc.check_span(&mention.span)?;
        if doc.sentence_of(mention.span.start)? != trigger_sentence
            && !candidates.iter().any(|c| c.span == mention.span)
        {
            candidates.push(mention);
        }
    }
    candidates.sort_by_key(|m| m.span);
    let chosen = match mode {
        _ if candidates.is_empty() => return Err(Error::NoInterSententialMention(index)),
        MentionSelection::Random => candidates[seed::rng(seed).random_range(0..candidates.len())],
        MentionSelection::Meaningful => candidates
            .iter()
            .copied()
            .min_by_key(|m| {
                (
                    std::cmp::Reverse(m.span.len()),
                    !m.is_named_entity,
                    m.span.start,
                )
            })
            .expect("non-empty"),
    };

    let strategy = match mode {
        MentionSelection::Random => Strategy::CrRandom,
        MentionSelection::Meaningful => Strategy::CrMeaningful,
    };
    let mut out_frame = frame.clone();
    out_frame.arguments[index].span = chosen.span;
    let document = Document::new(
        augmented_doc_id(frame, strategy, Some(index)),
        doc.to_sentences(),
    )?;
    Ok(AugmentedInstance {
        source_doc_id: doc.doc_id().to_string(),
        strategy,
        document,
        frame: out_frame,
        moved_role: Some(arg.role.clone()),
        rng_seed: seed,
    })
}
