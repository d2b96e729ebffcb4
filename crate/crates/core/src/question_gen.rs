//! Question/answer instances built from event frames.
//!
//! Template questions are generated for every role the ontology licenses for
//! an event type, whether or not the role is filled; unfilled roles get a
//! no-answer instance. Questions produced by an external question-generation
//! model, and QA pairs from other corpora, are ingested from JSON lines.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Document, EventFrame, Ontology, Span};
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionSource {
    Template,
    Transformer,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhWord {
    What,
    Where,
    Who,
    How,
}

impl WhWord {
    pub fn as_str(self) -> &'static str {
        match self {
            WhWord::What => "what",
            WhWord::Where => "where",
            WhWord::Who => "who",
            WhWord::How => "how",
        }
    }

    fn capitalized(self) -> &'static str {
        match self {
            WhWord::What => "What",
            WhWord::Where => "Where",
            WhWord::Who => "Who",
            WhWord::How => "How",
        }
    }
}

impl fmt::Display for WhWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WhWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "what" => Ok(WhWord::What),
            "where" => Ok(WhWord::Where),
            "who" => Ok(WhWord::Who),
            "how" => Ok(WhWord::How),
            other => Err(Error::InvalidArgument(format!(
                "unknown wh-word `{other}` (expected what, where, who or how)"
            ))),
        }
    }
}

/// One question about one role of one event. `answer` is `None` for
/// "No answer".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaInstance {
    pub instance_id: String,
    pub doc_id: String,
    pub event_id: String,
    pub role: Option<String>,
    pub question: String,
    pub answer: Option<Span>,
    pub source: QuestionSource,
    pub wh_word: Option<WhWord>,
}

/// Stable content hash: identical questions about the same role of the same
/// event always get the same id, whichever generator produced them.
pub fn instance_id(doc_id: &str, event_id: &str, role: &str, question: &str) -> String {
    let mut hasher = Sha256::new();
    for part in [doc_id, event_id, role, question] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

/// Role to wh-word mapping with an optional fallback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhTable {
    map: BTreeMap<String, WhWord>,
    default: Option<WhWord>,
}

const WHERE_ROLES: &[&str] = &[
    "place",
    "origin",
    "destination",
    "hidingplace",
    "territoryorfacility",
];

const WHO_ROLES: &[&str] = &[
    "agent",
    "attacker",
    "beneficiary",
    "candidate",
    "communicator",
    "damager",
    "damagerdestroyer",
    "deceased",
    "defendant",
    "demonstrator",
    "destroyer",
    "detainee",
    "driverpassenger",
    "employee",
    "executioner",
    "extraditer",
    "founder",
    "giver",
    "governmentbody",
    "injurer",
    "investigator",
    "jailer",
    "judgecourt",
    "killer",
    "manufacturer",
    "monitor",
    "otherparticipant",
    "participant",
    "passenger",
    "plaintiff",
    "preventer",
    "prosecutor",
    "recipient",
    "rejecternullifier",
    "retreater",
    "spy",
    "surrenderer",
    "transporter",
    "victim",
    "violator",
    "voter",
    "yielder",
];

const HOW_ROLES: &[&str] = &["instrument", "manner"];

impl WhTable {
    pub fn new(default: Option<WhWord>) -> Self {
        WhTable {
            map: BTreeMap::new(),
            default,
        }
    }

    /// The shipped table: places ask "where", people and agents ask "who",
    /// instruments ask "how", everything else asks "what".
    pub fn builtin() -> Self {
        let mut table = WhTable::new(Some(WhWord::What));
        for (roles, wh) in [
            (WHERE_ROLES, WhWord::Where),
            (WHO_ROLES, WhWord::Who),
            (HOW_ROLES, WhWord::How),
        ] {
            for role in roles {
                table.set(role, wh);
            }
        }
        table
    }

    pub fn set(&mut self, role: &str, wh: WhWord) {
        self.map.insert(role.to_string(), wh);
    }

    /// Parse `role=wh` lines; `__default__=wh` sets the fallback.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut table = WhTable::new(None);
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<wh-table>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Malformed(format!("expected role=wh-word, got `{line}`")).at_line(i + 1)
            })?;
            let wh: WhWord = value.parse().map_err(|e: Error| e.at_line(i + 1))?;
            match key.trim() {
                "__default__" => table.default = Some(wh),
                role => table.set(role, wh),
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        WhTable::parse(io::open(path)?)
    }

    pub fn lookup(&self, role: &str) -> Result<WhWord> {
        self.map
            .get(role)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::MissingWhWord(role.to_string()))
    }
}

impl Default for WhTable {
    fn default() -> Self {
        WhTable::builtin()
    }
}

/// `"{Wh} is the {role} of the event {trigger}?"`
pub fn template_question(wh: WhWord, role: &str, trigger: &str) -> String {
    format!("{} is the {} of the event {}?", wh.capitalized(), role, trigger)
}

/// One instance per licensed role of the frame's event type, in ontology
/// order. When a role is filled more than once the earliest span is the answer.
pub fn template_questions(
    doc: &Document,
    frame: &EventFrame,
    ontology: &Ontology,
    wh: &WhTable,
) -> Result<Vec<QaInstance>> {
    let roles = ontology
        .roles_for(&frame.event_type)
        .ok_or_else(|| Error::UnknownEventType(frame.event_type.clone()))?;
    doc.check_span(&frame.trigger)?;
    let trigger = doc.span_text(&frame.trigger);
    roles
        .iter()
        .map(|role| {
            let wh_word = wh.lookup(role)?;
            let question = template_question(wh_word, role, &trigger);
            Ok(QaInstance {
                instance_id: instance_id(doc.doc_id(), &frame.event_id, role, &question),
                doc_id: doc.doc_id().to_string(),
                event_id: frame.event_id.clone(),
                role: Some(role.clone()),
                question,
                answer: frame.first_span_for(role),
                source: QuestionSource::Template,
                wh_word: Some(wh_word),
            })
        })
        .collect()
}

pub fn corpus_template_questions(
    corpus: &Corpus,
    ontology: &Ontology,
    wh: &WhTable,
) -> Result<Vec<QaInstance>> {
    let mut out = Vec::new();
    for (doc, frame) in corpus.frames() {
        out.extend(template_questions(doc, frame, ontology, wh)?);
    }
    Ok(out)
}

/// A generated question for a present argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub doc_id: String,
    pub event_id: String,
    pub role: String,
    pub question: String,
}

/// Attach gold answers to externally generated questions. Questions about
/// roles the event does not fill are rejected.
pub fn transformer_instances(
    questions: &[GeneratedQuestion],
    corpus: &Corpus,
) -> Result<Vec<QaInstance>> {
    let index = corpus.index();
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let (_, frame) = index
                .get(&(q.doc_id.as_str(), q.event_id.as_str()))
                .ok_or_else(|| {
                    Error::DanglingReference(format!(
                        "question {}: no event `{}` in document `{}`",
                        i + 1,
                        q.event_id,
                        q.doc_id
                    ))
                })?;
            let answer = frame
                .first_span_for(&q.role)
                .ok_or_else(|| Error::AbsentArgument {
                    doc_id: q.doc_id.clone(),
                    event_id: q.event_id.clone(),
                    role: q.role.clone(),
                })?;
            Ok(QaInstance {
                instance_id: instance_id(&q.doc_id, &q.event_id, &q.role, &q.question),
                doc_id: q.doc_id.clone(),
                event_id: q.event_id.clone(),
                role: Some(q.role.clone()),
                question: q.question.clone(),
                answer: Some(answer),
                source: QuestionSource::Transformer,
                wh_word: None,
            })
        })
        .collect()
}

pub fn ingest_transformer_questions(path: &Path, corpus: &Corpus) -> Result<Vec<QaInstance>> {
    let questions: Vec<GeneratedQuestion> = io::read_jsonl(path)?;
    transformer_instances(&questions, corpus)
}

/// A QA pair from another corpus: its own context, a question and a token
/// span answer (or null).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalRecord {
    pub context: Vec<Vec<String>>,
    pub question: String,
    pub answer: Option<Span>,
}

/// External QA pairs, each with its standalone context document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExternalQa {
    pub documents: Vec<Document>,
    pub instances: Vec<QaInstance>,
}

fn context_id(context: &[Vec<String>]) -> String {
    let mut hasher = Sha256::new();
    for sentence in context {
        for token in sentence {
            hasher.update(token.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
    }
    format!("ext-{}", hex::encode(&hasher.finalize()[..8]))
}

pub fn external_instances(records: Vec<ExternalRecord>) -> Result<ExternalQa> {
    let mut out = ExternalQa::default();
    for (i, record) in records.into_iter().enumerate() {
        let doc_id = context_id(&record.context);
        let document = Document::new(doc_id.clone(), record.context)
            .map_err(|e| e.at_line(i + 1))?;
        if let Some(span) = &record.answer {
            document.check_span(span).map_err(|e| e.at_line(i + 1))?;
        }
        let answer_key = record
            .answer
            .map(|s| format!("{}:{}", s.start, s.end))
            .unwrap_or_default();
        out.instances.push(QaInstance {
            instance_id: instance_id(&doc_id, "", &answer_key, &record.question),
            doc_id,
            event_id: String::new(),
            role: None,
            question: record.question,
            answer: record.answer,
            source: QuestionSource::External,
            wh_word: None,
        });
        out.documents.push(document);
    }
    Ok(out)
}

pub fn ingest_external_qa(path: &Path) -> Result<ExternalQa> {
    let records: Vec<ExternalRecord> = io::read_jsonl(path)?;
    external_instances(records)
}
