//! Span recovery for externally rewritten documents.
//!
//! Rewriters do not preserve token positions, so every gold span is searched
//! for as a case-insensitive token subsequence of the rewritten text. Among
//! several occurrences the one whose relative position in the document is
//! closest to the original wins, then the earliest.

use serde::{Deserialize, Serialize};

use super::{augmented_doc_id, AugmentedInstance, Strategy};
use crate::corpus::{Argument, Document, EventFrame, Span};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    TriggerUnmapped,
    ArgumentUnmapped,
    MissingRewrite,
    EmptyRewrite,
    TriggerOverlap,
    NoCoveringChain,
    NoInterSententialMention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub doc_id: String,
    pub event_id: String,
    pub role: Option<String>,
    pub reason: DropReason,
}

/// Counts of events and arguments that survived augmentation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingReport {
    pub events_total: usize,
    pub events_mapped: usize,
    pub args_total: usize,
    pub args_mapped: usize,
    pub drops: Vec<DropRecord>,
}

impl MappingReport {
    pub fn merge(&mut self, other: MappingReport) {
        self.events_total += other.events_total;
        self.events_mapped += other.events_mapped;
        self.args_total += other.args_total;
        self.args_mapped += other.args_mapped;
        self.drops.extend(other.drops);
    }

    pub fn event_rate(&self) -> f64 {
        ratio(self.events_mapped, self.events_total)
    }

    pub fn argument_rate(&self) -> f64 {
        ratio(self.args_mapped, self.args_total)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Start indices of every case-insensitive occurrence of `needle`.
pub fn find_occurrences<S: AsRef<str>, T: AsRef<str>>(haystack: &[S], needle: &[T]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    let needle: Vec<String> = needle.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let hay: Vec<String> = haystack.iter().map(|t| t.as_ref().to_lowercase()).collect();
    (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == needle[..])
        .collect()
}

/// Occurrence of `span`'s tokens in `rewritten` nearest to its original
/// relative position, compared exactly in integer arithmetic.
fn relocate(original: &Document, span: &Span, rewritten: &Document) -> Option<Span> {
    let needle = original.span_tokens(span);
    let old_total = original.num_tokens() as u128;
    let new_total = rewritten.num_tokens() as u128;
    let target = span.start as u128 * new_total;
    find_occurrences(rewritten.tokens(), needle)
        .into_iter()
        .min_by_key(|&occ| ((occ as u128 * old_total).abs_diff(target), occ))
        .map(|start| Span {
            start,
            end: start + needle.len() - 1,
        })
}

/// Map the trigger and arguments of `frame` onto rewritten sentences.
///
/// Returns `None` as the instance when the trigger cannot be found; arguments
/// that cannot be found are dropped individually. Empty sentences in the
/// rewrite are ignored.
pub fn remap_spans(
    doc: &Document,
    frame: &EventFrame,
    rewritten_sentences: &[Vec<String>],
    strategy: Strategy,
    seed: u64,
) -> (Option<AugmentedInstance>, MappingReport) {
    let mut report = MappingReport {
        events_total: 1,
        args_total: frame.arguments.len(),
        ..Default::default()
    };
    let drop = |reason, role: Option<&str>| DropRecord {
        doc_id: doc.doc_id().to_string(),
        event_id: frame.event_id.clone(),
        role: role.map(str::to_string),
        reason,
    };
    let sentences: Vec<Vec<String>> = rewritten_sentences
        .iter()
        .filter(|s| !s.is_empty())
        .cloned()
        .collect();
    let rewritten = match Document::new(augmented_doc_id(frame, strategy, None), sentences) {
        Ok(d) => d,
        Err(_) => {
            report.drops.push(drop(DropReason::EmptyRewrite, None));
            return (None, report);
        }
    };
    let Some(trigger) = relocate(doc, &frame.trigger, &rewritten) else {
        report.drops.push(drop(DropReason::TriggerUnmapped, None));
        return (None, report);
    };
    report.events_mapped = 1;
    let mut arguments = Vec::with_capacity(frame.arguments.len());
    for arg in &frame.arguments {
        match relocate(doc, &arg.span, &rewritten) {
            Some(span) => {
                report.args_mapped += 1;
                arguments.push(Argument {
                    role: arg.role.clone(),
                    span,
                });
            }
            None => report
                .drops
                .push(drop(DropReason::ArgumentUnmapped, Some(&arg.role))),
        }
    }
    let instance = AugmentedInstance {
        source_doc_id: doc.doc_id().to_string(),
        strategy,
        document: rewritten,
        frame: EventFrame {
            event_id: frame.event_id.clone(),
            trigger,
            event_type: frame.event_type.clone(),
            arguments,
        },
        moved_role: None,
        rng_seed: seed,
    };
    (Some(instance), report)
}

/// The rewriting prompt: the story followed by the instruction naming the
/// sentence count, the trigger, and the arguments in document order.
pub fn build_rewrite_prompt(doc: &Document, frame: &EventFrame) -> Result<String> {
    if frame.arguments.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "event `{}` has no arguments to include",
            frame.event_id
        )));
    }
    let mut spans: Vec<Span> = frame.arguments.iter().map(|a| a.span).collect();
    spans.sort();
    let arguments: Vec<String> = spans.iter().map(|s| doc.span_text(s)).collect();
    Ok(format!(
        "{}\n\nRewrite the story like a newspaper article in {} sentences. \
         Include the event triggering word {} and event arguments {} in the generated article.",
        doc.text(),
        doc.num_sentences(),
        doc.span_text(&frame.trigger),
        arguments.join(", ")
    ))
}
