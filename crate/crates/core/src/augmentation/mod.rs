//! Augmentation strategies that turn intra-sentential arguments into
//! inter-sentential ones.
//!
//! * simple swapping ([`ss_plain`], [`ss_verbose`]) moves the argument tokens
//!   to a sentence boundary;
//! * coreference ([`cr_augment`]) repoints the gold span to a mention of the
//!   same entity in another sentence;
//! * rewriting ([`remap_spans`]) ingests externally paraphrased or rewritten
//!   text and searches it for the trigger and argument tokens.

mod coref;
pub mod edit;
mod remap;
mod swap;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use coref::{cr_augment, ChainMention, CorefChains, Mention, MentionSelection};
pub use remap::{
    build_rewrite_prompt, find_occurrences, remap_spans, DropReason, DropRecord, MappingReport,
};
pub use swap::{plain_boundaries, ss_plain, ss_verbose, verbose_sentence};

use crate::corpus::{argument_distance, Corpus, CorpusEntry, Document, EventFrame, RamsRecord};
use crate::error::{Error, Result};
use crate::{io, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    SsPlain,
    SsVerbose,
    CrRandom,
    CrMeaningful,
    LlmParaphrase,
    LlmRewrite,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::SsPlain,
        Strategy::SsVerbose,
        Strategy::CrRandom,
        Strategy::CrMeaningful,
        Strategy::LlmParaphrase,
        Strategy::LlmRewrite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::SsPlain => "ss_plain",
            Strategy::SsVerbose => "ss_verbose",
            Strategy::CrRandom => "cr_random",
            Strategy::CrMeaningful => "cr_meaningful",
            Strategy::LlmParaphrase => "llm_paraphrase",
            Strategy::LlmRewrite => "llm_rewrite",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|s| s.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown strategy `{s}`; expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

/// A new document/event pair derived from an original annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedInstance {
    pub source_doc_id: String,
    pub strategy: Strategy,
    pub document: Document,
    pub frame: EventFrame,
    /// Role whose gold span was moved or repointed; absent for rewrites.
    pub moved_role: Option<String>,
    pub rng_seed: u64,
}

impl AugmentedInstance {
    pub fn to_record(&self) -> RamsRecord {
        let mut record = RamsRecord::from_entry(&CorpusEntry {
            document: self.document.clone(),
            frames: vec![self.frame.clone()],
        });
        record.strategy = Some(self.strategy.as_str().to_string());
        record.source_doc_id = Some(self.source_doc_id.clone());
        record
    }
}

pub(crate) fn augmented_doc_id(frame: &EventFrame, strategy: Strategy, role_index: Option<usize>) -> String {
    match role_index {
        Some(i) => format!("{}::{}::{}", frame.event_id, strategy, i),
        None => format!("{}::{}", frame.event_id, strategy),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AugmentConfig {
    /// Keep the original argument occurrence when inserting the verbose
    /// sentence. Off by default: the original occurrence is removed.
    pub verbose_keep_original: bool,
}

/// Rewritten text for one event (or for every event of a document when
/// `event_id` is absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteRecord {
    pub doc_id: String,
    #[serde(default)]
    pub event_id: Option<String>,
    pub sentences: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Default)]
pub struct Rewrites {
    by_key: HashMap<(String, Option<String>), Vec<Vec<String>>>,
}

impl Rewrites {
    pub fn from_records(records: Vec<RewriteRecord>) -> Self {
        let by_key = records
            .into_iter()
            .map(|r| ((r.doc_id, r.event_id), r.sentences))
            .collect();
        Rewrites { by_key }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Rewrites::from_records(io::read_jsonl(path)?))
    }

    pub fn get(&self, doc_id: &str, event_id: &str) -> Option<&Vec<Vec<String>>> {
        self.by_key
            .get(&(doc_id.to_string(), Some(event_id.to_string())))
            .or_else(|| self.by_key.get(&(doc_id.to_string(), None)))
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AugmentResources<'a> {
    pub chains: Option<&'a CorefChains>,
    pub rewrites: Option<&'a Rewrites>,
}

fn intra_sentential(doc: &Document, frame: &EventFrame) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, arg) in frame.arguments.iter().enumerate() {
        if argument_distance(doc, frame, &arg.span)? == 0 {
            out.push(i);
        }
    }
    Ok(out)
}

/// Apply one strategy to every frame of a corpus.
///
/// Simple swapping yields one instance per intra-sentential argument,
/// coreference one per intra-sentential argument with a qualifying chain, and
/// rewriting one per frame whose trigger could be remapped.
pub fn augment_corpus(
    corpus: &Corpus,
    strategy: Strategy,
    config: &AugmentConfig,
    resources: AugmentResources<'_>,
    seed: u64,
) -> Result<(Vec<AugmentedInstance>, MappingReport)> {
    let base = seed::substream(seed, seed::AUGMENT);
    let mut instances = Vec::new();
    let mut report = MappingReport::default();
    match strategy {
        Strategy::SsPlain | Strategy::SsVerbose | Strategy::CrRandom | Strategy::CrMeaningful => {
            let chains = match strategy {
                Strategy::CrRandom | Strategy::CrMeaningful => Some(resources.chains.ok_or_else(|| {
                    Error::MissingResource(format!("{strategy} requires coreference chains"))
                })?),
                _ => None,
            };
            for (doc, frame) in corpus.frames() {
                report.events_total += 1;
                let before = instances.len();
                for idx in intra_sentential(doc, frame)? {
                    report.args_total += 1;
                    let item_seed = seed::derive(
                        base,
                        &[strategy.as_str(), doc.doc_id(), &frame.event_id, &idx.to_string()],
                    );
                    let result = match strategy {
                        Strategy::SsPlain => ss_plain(doc, frame, idx, None, item_seed),
                        Strategy::SsVerbose => ss_verbose(
                            doc,
                            frame,
                            idx,
                            None,
                            item_seed,
                            config.verbose_keep_original,
                        ),
                        Strategy::CrRandom | Strategy::CrMeaningful => {
                            let mode = if strategy == Strategy::CrRandom {
                                MentionSelection::Random
                            } else {
                                MentionSelection::Meaningful
                            };
                            let doc_chains = chains
                                .and_then(|c| c.for_doc(doc.doc_id()))
                                .unwrap_or(&[]);
                            cr_augment(doc, frame, idx, doc_chains, mode, item_seed)
                        }
                        _ => unreachable!(),
                    };
                    match result {
                        Ok(instance) => {
                            report.args_mapped += 1;
                            instances.push(instance);
                        }
                        Err(err) => {
                            let reason = match err {
                                Error::TriggerOverlap(_) => DropReason::TriggerOverlap,
                                Error::NoCoveringChain(_) => DropReason::NoCoveringChain,
                                Error::NoInterSententialMention(_) => {
                                    DropReason::NoInterSententialMention
                                }
                                other => return Err(other),
                            };
                            report.drops.push(DropRecord {
                                doc_id: doc.doc_id().to_string(),
                                event_id: frame.event_id.clone(),
                                role: Some(frame.arguments[idx].role.clone()),
                                reason,
                            });
                        }
                    }
                }
                if instances.len() > before {
                    report.events_mapped += 1;
                }
            }
        }
        Strategy::LlmParaphrase | Strategy::LlmRewrite => {
            let rewrites = resources.rewrites.ok_or_else(|| {
                Error::MissingResource(format!("{strategy} requires rewritten texts"))
            })?;
            for (doc, frame) in corpus.frames() {
                let Some(sentences) = rewrites.get(doc.doc_id(), &frame.event_id) else {
                    report.events_total += 1;
                    report.args_total += frame.arguments.len();
                    report.drops.push(DropRecord {
                        doc_id: doc.doc_id().to_string(),
                        event_id: frame.event_id.clone(),
                        role: None,
                        reason: DropReason::MissingRewrite,
                    });
                    continue;
                };
                let item_seed =
                    seed::derive(base, &[strategy.as_str(), doc.doc_id(), &frame.event_id]);
                let (instance, entry) = remap_spans(doc, frame, sentences, strategy, item_seed);
                report.merge(entry);
                instances.extend(instance);
            }
        }
    }
    Ok((instances, report))
}
