//! Zero- and few-shot prompts that ask every role question at once, and
//! lenient mapping of generated answers back to token spans.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::augmentation::find_occurrences;
use crate::corpus::{Document, EventFrame, Ontology, Span};
use crate::error::{Error, Result};
use crate::evaluation::Prediction;
use crate::question_gen::{template_questions, WhTable};
use crate::seed;

pub const NO_ANSWER: &str = "No answer";

pub const DEFAULT_INSTRUCTION: &str = "Answer the following questions about the event in the \
document above. Copy each answer from the document, or write \"No answer\" if the document does \
not contain one. Give one answer per line.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    pub instruction: String,
    /// Exemplars preceding the test block; zero gives a zero-shot prompt.
    pub n_shots: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            instruction: DEFAULT_INSTRUCTION.to_string(),
            n_shots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub doc_id: String,
    pub event_id: String,
    pub prompt: String,
    pub roles: Vec<String>,
    #[serde(default, skip_serializing)]
    pub shots: Vec<String>,
}

/// Answers produced by a completion client, one per role in prompt order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedAnswers {
    pub doc_id: String,
    pub event_id: String,
    pub answers: Vec<Option<String>>,
}

fn block(
    doc: &Document,
    frame: &EventFrame,
    ontology: &Ontology,
    wh: &WhTable,
    instruction: &str,
    with_answers: bool,
) -> Result<(String, Vec<String>)> {
    let questions = template_questions(doc, frame, ontology, wh)?;
    let mut out = format!("Document: {}\n{}\nQuestions:\n", doc.text(), instruction);
    for (i, q) in questions.iter().enumerate() {
        out.push_str(&format!("{}. {}\n", i + 1, q.question));
    }
    out.push_str("Answers:");
    if with_answers {
        for (i, q) in questions.iter().enumerate() {
            let answer = match &q.answer {
                Some(span) => doc.span_text(span),
                None => NO_ANSWER.to_string(),
            };
            out.push_str(&format!("\n{}. {}", i + 1, answer));
        }
    }
    let roles = questions.into_iter().filter_map(|q| q.role).collect();
    Ok((out, roles))
}

/// Build the prompt for one event. Exemplars are drawn without replacement
/// from `pool`, skipping the event itself, using a seed derived from the
/// event identity so that the result does not depend on iteration order.
pub fn build_prompt(
    doc: &Document,
    frame: &EventFrame,
    ontology: &Ontology,
    wh: &WhTable,
    pool: &[(&Document, &EventFrame)],
    config: &PromptConfig,
    seed: u64,
) -> Result<PromptBundle> {
    let mut shots = Vec::new();
    if config.n_shots > 0 {
        let candidates: Vec<&(&Document, &EventFrame)> = pool
            .iter()
            .filter(|(d, f)| !(d.doc_id() == doc.doc_id() && f.event_id == frame.event_id))
            .collect();
        if candidates.is_empty() {
            return Err(Error::EmptyShotPool);
        }
        let item_seed = seed::derive(
            seed::substream(seed, seed::SHOTS),
            &[doc.doc_id(), &frame.event_id],
        );
        let amount = config.n_shots.min(candidates.len());
        for i in index::sample(&mut seed::rng(item_seed), candidates.len(), amount) {
            let (d, f) = candidates[i];
            shots.push(block(d, f, ontology, wh, &config.instruction, true)?.0);
        }
    }
    let (test, roles) = block(doc, frame, ontology, wh, &config.instruction, false)?;
    let mut prompt = String::new();
    for shot in &shots {
        prompt.push_str(shot);
        prompt.push_str("\n\n");
    }
    prompt.push_str(&test);
    Ok(PromptBundle {
        doc_id: doc.doc_id().to_string(),
        event_id: frame.event_id.clone(),
        prompt,
        roles,
        shots,
    })
}

fn strip_numbering(line: &str) -> &str {
    let digits = line.trim_start_matches(|c: char| c.is_ascii_digit());
    if digits.len() < line.len() {
        if let Some(rest) = digits.strip_prefix(['.', ')', ':']) {
            return rest.trim();
        }
    }
    line
}

/// Split a completion into one answer per role: non-empty lines in order,
/// numbering removed, "No answer" (any case) as `None`. Missing lines are
/// `None`; extra lines are ignored.
pub fn parse_generated_answers(text: &str, n_roles: usize) -> Vec<Option<String>> {
    let mut answers: Vec<Option<String>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(strip_numbering)
        .map(|l| {
            if l.is_empty() || l.trim_end_matches('.').eq_ignore_ascii_case(NO_ANSWER) {
                None
            } else {
                Some(l.to_string())
            }
        })
        .take(n_roles)
        .collect();
    answers.resize(n_roles, None);
    answers
}

/// Every span of `doc` that a generated answer could refer to. Both the raw
/// whitespace tokens and the tokens after stripping edge punctuation are
/// searched.
pub fn lenient_candidates(doc: &Document, generated: &str) -> Vec<Span> {
    let raw: Vec<&str> = generated.split_whitespace().collect();
    let stripped: Vec<&str> = generated
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation())
        .split_whitespace()
        .collect();
    let mut spans = Vec::new();
    for tokens in [raw, stripped] {
        for start in find_occurrences(doc.tokens(), &tokens) {
            let span = Span {
                start,
                end: start + tokens.len() - 1,
            };
            if !spans.contains(&span) {
                spans.push(span);
            }
        }
    }
    spans.sort();
    spans
}

/// True if any mapping of `generated` onto the document equals `gold`.
/// A missing answer matches exactly when the gold argument is absent.
pub fn lenient_match(doc: &Document, generated: Option<&str>, gold: Option<Span>) -> bool {
    match (generated, gold) {
        (None, None) => true,
        (Some(text), Some(gold)) => lenient_candidates(doc, text).contains(&gold),
        _ => false,
    }
}

/// Predictions for one prompted event. A generated answer becomes the gold
/// span of its role when any mapping matches it, otherwise its first
/// occurrence; answers that never occur in the document are dropped.
pub fn lenient_predictions(
    doc: &Document,
    frame: &EventFrame,
    roles: &[String],
    answers: &[Option<String>],
) -> Vec<Prediction> {
    roles
        .iter()
        .zip(answers)
        .map(|(role, answer)| {
            let span = answer.as_deref().and_then(|text| {
                let candidates = lenient_candidates(doc, text);
                candidates
                    .iter()
                    .find(|c| frame.spans_for(role).any(|g| g == **c))
                    .or(candidates.first())
                    .copied()
            });
            Prediction {
                doc_id: doc.doc_id().to_string(),
                event_id: frame.event_id.clone(),
                role: role.clone(),
                span,
            }
        })
        .collect()
}
