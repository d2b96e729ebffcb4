//! Simple swapping: move an intra-sentential argument to a sentence boundary.
//!
//! Boundary `k` sits between sentence `k - 1` and sentence `k`. The plain
//! variant appends the argument tokens to sentence `k - 1` (boundary 0
//! prepends to sentence 0), so the sentence count is unchanged. The verbose
//! variant inserts a new sentence at index `k`.

use rand::Rng;

use super::edit::{Edit, EditableDocument};
use super::{augmented_doc_id, AugmentedInstance, Strategy};
use crate::corpus::{argument_distance, Argument, Document, EventFrame, Span};
use crate::error::{Error, Result};
use crate::seed;

fn movable_argument(doc: &Document, frame: &EventFrame, index: usize) -> Result<Span> {
    let arg = frame.arguments.get(index).ok_or(Error::NoSuchArgument {
        index,
        count: frame.arguments.len(),
    })?;
    let distance = argument_distance(doc, frame, &arg.span)?;
    if distance != 0 {
        return Err(Error::NotIntraSentential { index, distance });
    }
    if arg.span.overlaps(&frame.trigger) {
        return Err(Error::TriggerOverlap(index));
    }
    Ok(arg.span)
}

/// Sentence that receives the tokens under plain insertion at `boundary`.
fn plain_target(boundary: usize) -> usize {
    boundary.saturating_sub(1)
}

/// Boundaries for plain swapping that move the argument out of the
/// trigger's sentence; all boundaries when no such placement exists.
pub fn plain_boundaries(num_sentences: usize, trigger_sentence: usize) -> Vec<usize> {
    let all: Vec<usize> = (0..=num_sentences).collect();
    let moving: Vec<usize> = all
        .iter()
        .copied()
        .filter(|&k| plain_target(k) != trigger_sentence)
        .collect();
    if moving.is_empty() {
        all
    } else {
        moving
    }
}

/// `The <role> of the event <trigger> is <argument> .`
pub fn verbose_sentence(role: &str, trigger: &[String], argument: &[String]) -> (Vec<String>, usize) {
    let mut tokens = vec!["The".to_string()];
    tokens.extend(role.split_whitespace().map(str::to_string));
    tokens.extend(["of", "the", "event"].map(str::to_string));
    tokens.extend(trigger.iter().cloned());
    tokens.push("is".to_string());
    let arg_offset = tokens.len();
    tokens.extend(argument.iter().cloned());
    tokens.push(".".to_string());
    (tokens, arg_offset)
}

/// Apply `edits` in order; `None` if any edit disturbs the span.
fn shift_all(span: Span, edits: &[Edit]) -> Option<Span> {
    edits.iter().try_fold(span, |s, e| e.shift(s))
}

fn rebuild_frame(
    frame: &EventFrame,
    moved_index: usize,
    new_gold: Span,
    edits: &[Edit],
) -> Result<EventFrame> {
    let moved_span = frame.arguments[moved_index].span;
    let trigger = shift_all(frame.trigger, edits).ok_or_else(|| {
        Error::InvalidDocument("edit disturbed the trigger span".to_string())
    })?;
    let mut arguments = Vec::with_capacity(frame.arguments.len());
    for (i, arg) in frame.arguments.iter().enumerate() {
        let span = if i == moved_index || arg.span == moved_span {
            Some(new_gold)
        } else {
            shift_all(arg.span, edits)
        };
        // arguments partially overlapping the moved tokens lose their surface
        if let Some(span) = span {
            arguments.push(Argument {
                role: arg.role.clone(),
                span,
            });
        }
    }
    Ok(EventFrame {
        event_id: frame.event_id.clone(),
        trigger,
        event_type: frame.event_type.clone(),
        arguments,
    })
}

/// Move argument `index` to a sentence boundary, sampled with `seed` when
/// `boundary` is `None`.
pub fn ss_plain(
    doc: &Document,
    frame: &EventFrame,
    index: usize,
    boundary: Option<usize>,
    seed: u64,
) -> Result<AugmentedInstance> {
    let span = movable_argument(doc, frame, index)?;
    let n = doc.num_sentences();
    let boundary = match boundary {
        Some(b) if b > n => {
            return Err(Error::BoundaryOutOfRange {
                boundary: b,
                sentences: n,
            })
        }
        Some(b) => b,
        None => {
            let options = plain_boundaries(n, frame.trigger_sentence(doc)?);
            options[seed::rng(seed).random_range(0..options.len())]
        }
    };

    let mut ed = EditableDocument::from_document(doc);
    let (moved, delete) = ed.delete(span, true)?;
    let target = plain_target(boundary);
    let offset = if boundary == 0 { 0 } else { ed.sentence_len(target) };
    let insert = ed.insert_tokens(target, offset, &moved)?;
    let Edit::Insert { at, len } = insert else {
        unreachable!()
    };
    let new_gold = Span::new(at, at + len - 1)?;
    let out_frame = rebuild_frame(frame, index, new_gold, &[delete, insert])?;
    let document = ed.into_document(augmented_doc_id(frame, Strategy::SsPlain, Some(index)))?;
    Ok(AugmentedInstance {
        source_doc_id: doc.doc_id().to_string(),
        strategy: Strategy::SsPlain,
        document,
        frame: out_frame,
        moved_role: Some(frame.arguments[index].role.clone()),
        rng_seed: seed,
    })
}

/// Insert `The <role> of the event <trigger> is <argument> .` as a new
/// sentence at a boundary and point the gold span at it. The original
/// occurrence is removed unless `keep_original` is set.
pub fn ss_verbose(
    doc: &Document,
    frame: &EventFrame,
    index: usize,
    boundary: Option<usize>,
    seed: u64,
    keep_original: bool,
) -> Result<AugmentedInstance> {
    let span = movable_argument(doc, frame, index)?;
    let n = doc.num_sentences();
    let boundary = match boundary {
        Some(b) if b > n => {
            return Err(Error::BoundaryOutOfRange {
                boundary: b,
                sentences: n,
            })
        }
        Some(b) => b,
        // a new sentence never shares the trigger's sentence
        None => seed::rng(seed).random_range(0..=n),
    };
    let role = &frame.arguments[index].role;
    let (sentence, arg_offset) = verbose_sentence(
        role,
        doc.span_tokens(&frame.trigger),
        doc.span_tokens(&span),
    );

    let mut ed = EditableDocument::from_document(doc);
    let mut edits = Vec::with_capacity(2);
    if !keep_original {
        let (_, delete) = ed.delete(span, true)?;
        edits.push(delete);
    }
    let insert = ed.insert_sentence(boundary, sentence)?;
    let Edit::Insert { at, .. } = insert else {
        unreachable!()
    };
    edits.push(insert);
    let start = at + arg_offset;
    let new_gold = Span::new(start, start + span.len() - 1)?;
    let mut out_frame = rebuild_frame(frame, index, new_gold, &edits)?;
    if keep_original {
        // the original occurrence is untouched text now, not a gold span
        for (i, arg) in frame.arguments.iter().enumerate() {
            if i != index && arg.span == span {
                if let Some(shifted) = shift_all(span, &edits) {
                    out_frame.arguments[i].span = shifted;
                }
            }
        }
    }
    let document = ed.into_document(augmented_doc_id(frame, Strategy::SsVerbose, Some(index)))?;
    Ok(AugmentedInstance {
        source_doc_id: doc.doc_id().to_string(),
        strategy: Strategy::SsVerbose,
        document,
        frame: out_frame,
        moved_role: Some(role.clone()),
        rng_seed: seed,
    })
}
