//! Documents, event frames and the event ontology.
//!
//! A [`Document`] is a list of tokenized sentences addressed by a global,
//! 0-based token index over the concatenation of all sentences. Spans are
//! inclusive on both ends, as in the annotation files.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Inclusive token span `[start, end]` in global document coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::Malformed(format!(
                "span start {start} is after its end {end}"
            )));
        }
        Ok(Span { start, end })
    }

    pub fn single(index: usize) -> Self {
        Span {
            start: index,
            end: index,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end + 1
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl TryFrom<(usize, usize)> for Span {
    type Error = Error;

    fn try_from((start, end): (usize, usize)) -> Result<Self> {
        Span::new(start, end)
    }
}

impl From<Span> for (usize, usize) {
    fn from(span: Span) -> Self {
        (span.start, span.end)
    }
}

/// A tokenized multi-sentence document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    tokens: Vec<String>,
    /// Sentence start offsets plus a trailing total: sentence `i` covers
    /// `bounds[i]..bounds[i + 1]`.
    bounds: Vec<usize>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, sentences: Vec<Vec<String>>) -> Result<Self> {
        let doc_id = doc_id.into();
        if sentences.is_empty() {
            return Err(Error::InvalidDocument(format!(
                "document `{doc_id}` has no sentences"
            )));
        }
        let mut bounds = Vec::with_capacity(sentences.len() + 1);
        let mut tokens = Vec::new();
        for (i, sentence) in sentences.into_iter().enumerate() {
            if sentence.is_empty() {
                return Err(Error::InvalidDocument(format!(
                    "document `{doc_id}` has an empty sentence at index {i}"
                )));
            }
            bounds.push(tokens.len());
            tokens.extend(sentence);
        }
        bounds.push(tokens.len());
        Ok(Document {
            doc_id,
            tokens,
            bounds,
        })
    }

    /// Convenience constructor from whitespace-separated sentences.
    pub fn from_text(doc_id: impl Into<String>, sentences: &[&str]) -> Result<Self> {
        Document::new(
            doc_id,
            sentences
                .iter()
                .map(|s| s.split_whitespace().map(str::to_string).collect())
                .collect(),
        )
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Global token range of sentence `i`.
    pub fn sentence_range(&self, i: usize) -> Range<usize> {
        self.bounds[i]..self.bounds[i + 1]
    }

    pub fn sentence(&self, i: usize) -> &[String] {
        &self.tokens[self.sentence_range(i)]
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[String]> + '_ {
        (0..self.num_sentences()).map(move |i| self.sentence(i))
    }

    pub fn to_sentences(&self) -> Vec<Vec<String>> {
        self.sentences().map(<[String]>::to_vec).collect()
    }

    /// Index of the sentence containing global token `index`.
    pub fn sentence_of(&self, index: usize) -> Result<usize> {
        if index >= self.tokens.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.tokens.len(),
            });
        }
        // bounds is strictly increasing because sentences are non-empty
        Ok(match self.bounds.binary_search(&index) {
            Ok(i) => i,
            Err(i) => i - 1,
        })
    }

    pub fn check_span(&self, span: &Span) -> Result<()> {
        if span.end >= self.tokens.len() {
            return Err(Error::SpanOutOfBounds {
                start: span.start,
                end: span.end,
                len: self.tokens.len(),
            });
        }
        Ok(())
    }

    pub fn span_tokens(&self, span: &Span) -> &[String] {
        &self.tokens[span.range()]
    }

    pub fn span_text(&self, span: &Span) -> String {
        self.span_tokens(span).join(" ")
    }

    /// All sentences joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Argument {
    pub role: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventFrame {
    pub event_id: String,
    pub trigger: Span,
    /// Dotted ontology path, e.g. `movement.transportartifact.receiveimport`.
    pub event_type: String,
    /// A role may occur more than once.
    pub arguments: Vec<Argument>,
}

impl EventFrame {
    pub fn trigger_sentence(&self, doc: &Document) -> Result<usize> {
        doc.sentence_of(self.trigger.start)
    }

    /// Gold spans for `role` in document order.
    pub fn spans_for<'a>(&'a self, role: &'a str) -> impl Iterator<Item = Span> + 'a {
        let mut spans: Vec<Span> = self
            .arguments
            .iter()
            .filter(move |a| a.role == role)
            .map(|a| a.span)
            .collect();
        spans.sort();
        spans.into_iter()
    }

    pub fn first_span_for(&self, role: &str) -> Option<Span> {
        self.spans_for(role).next()
    }
}

/// Signed sentence offset from the trigger to an argument; negative means
/// the argument precedes the trigger.
pub fn argument_distance(doc: &Document, frame: &EventFrame, arg_span: &Span) -> Result<isize> {
    doc.check_span(arg_span)?;
    doc.check_span(&frame.trigger)?;
    let arg = doc.sentence_of(arg_span.start)? as isize;
    let trigger = doc.sentence_of(frame.trigger.start)? as isize;
    Ok(arg - trigger)
}

/// Event types with their licensed roles.
///
/// Role lookup is exact: a non-leaf type licenses the roles listed on its own
/// line, and no inheritance from parents or children is applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    events: BTreeMap<String, Vec<String>>,
    roles: BTreeSet<String>,
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, event_type: impl Into<String>, roles: Vec<String>) {
        self.roles.extend(roles.iter().cloned());
        self.events.insert(event_type.into(), roles);
    }

    /// Parse the tab-separated table: `event.type<TAB>role<TAB>role...`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut ontology = Ontology::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<ontology>", e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t').map(str::trim);
            let event_type = fields.next().unwrap_or_default();
            if event_type.is_empty() {
                return Err(Error::Malformed("empty event type".into()).at_line(i + 1));
            }
            if ontology.events.contains_key(event_type) {
                return Err(Error::Malformed(format!("duplicate event type `{event_type}`"))
                    .at_line(i + 1));
            }
            let roles: Vec<String> = fields
                .filter(|r| !r.is_empty())
                .map(str::to_string)
                .collect();
            ontology.insert(event_type, roles);
        }
        Ok(ontology)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ontology::parse(io::open(path)?).map_err(|e| match e {
            Error::AtLine { line, source } => {
                Error::Malformed(format!("{}:{line}: {source}", path.display()))
            }
            other => other,
        })
    }

    pub fn roles_for(&self, event_type: &str) -> Option<&[String]> {
        self.events.get(event_type).map(Vec::as_slice)
    }

    pub fn licenses(&self, event_type: &str, role: &str) -> bool {
        self.roles_for(event_type)
            .is_some_and(|roles| roles.iter().any(|r| r == role))
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_roles(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &BTreeSet<String> {
        &self.roles
    }

    pub fn event_types(&self) -> impl Iterator<Item = &str> {
        self.events.keys().map(String::as_str)
    }
}

/// What to do with annotations that the ontology does not license.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownPolicy {
    #[default]
    Reject,
    /// Log a warning and drop the offending event or argument.
    WarnSkip,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub on_unknown: UnknownPolicy,
    /// Remove `evtNNNargNN` prefixes from role strings.
    pub strip_role_prefix: bool,
}

/// Strip a positional `evt<digits>arg<digits>` prefix from a role string.
///
/// This is the only place role strings are rewritten, and only when
/// [`LoadOptions::strip_role_prefix`] is set.
pub fn strip_role_prefix(role: &str) -> &str {
    fn digits(s: &str) -> usize {
        s.bytes().take_while(u8::is_ascii_digit).count()
    }
    let Some(rest) = role.strip_prefix("evt") else {
        return role;
    };
    let n = digits(rest);
    if n == 0 {
        return role;
    }
    let Some(rest) = rest[n..].strip_prefix("arg") else {
        return role;
    };
    let n = digits(rest);
    if n == 0 || n == rest.len() {
        return role;
    }
    &rest[n..]
}

/// One annotation record: a document and the events annotated on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub document: Document,
    pub frames: Vec<EventFrame>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = (&Document, &EventFrame)> {
        self.entries
            .iter()
            .flat_map(|e| e.frames.iter().map(move |f| (&e.document, f)))
    }

    /// Index from `(doc_id, event_id)` to the document and frame.
    pub fn index(&self) -> HashMap<(&str, &str), (&Document, &EventFrame)> {
        self.frames()
            .map(|(d, f)| ((d.doc_id(), f.event_id.as_str()), (d, f)))
            .collect()
    }
}

/// `[start, end, [[event_type, confidence], ...]]`
pub type RawTrigger = (usize, usize, Vec<(String, f64)>);

/// `[[trig_start, trig_end], [arg_start, arg_end], role]`
pub type RawLink = ((usize, usize), (usize, usize), String);

/// On-disk record in the public RAMS JSON-lines schema, with optional extra
/// fields used by this toolkit when writing derived corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamsRecord {
    pub doc_key: String,
    pub sentences: Vec<Vec<String>>,
    pub evt_triggers: Vec<RawTrigger>,
    pub gold_evt_links: Vec<RawLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_ids: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_doc_id: Option<String>,
}

impl RamsRecord {
    pub fn from_entry(entry: &CorpusEntry) -> Self {
        let doc = &entry.document;
        RamsRecord {
            doc_key: doc.doc_id().to_string(),
            sentences: doc.to_sentences(),
            evt_triggers: entry
                .frames
                .iter()
                .map(|f| (f.trigger.start, f.trigger.end, vec![(f.event_type.clone(), 1.0)]))
                .collect(),
            gold_evt_links: entry
                .frames
                .iter()
                .flat_map(|f| {
                    f.arguments.iter().map(move |a| {
                        (f.trigger.into(), a.span.into(), a.role.clone())
                    })
                })
                .collect(),
            event_ids: Some(entry.frames.iter().map(|f| f.event_id.clone()).collect()),
            strategy: None,
            source_doc_id: None,
        }
    }
}

/// Converts records to entries, assigning event ids and validating.
struct RecordConverter<'a> {
    ontology: Option<&'a Ontology>,
    options: LoadOptions,
    seen_keys: HashMap<String, usize>,
}

impl<'a> RecordConverter<'a> {
    fn convert(&mut self, record: RamsRecord) -> Result<CorpusEntry> {
        let document = Document::new(record.doc_key.clone(), record.sentences)?;
        if let Some(ids) = &record.event_ids {
            if ids.len() != record.evt_triggers.len() {
                return Err(Error::Malformed(format!(
                    "{} event ids for {} triggers",
                    ids.len(),
                    record.evt_triggers.len()
                )));
            }
        }
        let mut frames = Vec::with_capacity(record.evt_triggers.len());
        let mut trigger_index: HashMap<Span, usize> = HashMap::new();
        for (k, (start, end, types)) in record.evt_triggers.iter().enumerate() {
            let trigger = Span::new(*start, *end)?;
            document.check_span(&trigger)?;
            let event_type = types
                .first()
                .map(|(t, _)| t.clone())
                .ok_or_else(|| Error::Malformed(format!("trigger {k} has no event type")))?;
            let event_id = match &record.event_ids {
                Some(ids) => ids[k].clone(),
                None => {
                    let ordinal = self.seen_keys.entry(record.doc_key.clone()).or_insert(0);
                    let id = format!("{}#{}", record.doc_key, ordinal);
                    *ordinal += 1;
                    id
                }
            };
            if trigger_index.insert(trigger, frames.len()).is_some() {
                return Err(Error::Malformed(format!(
                    "duplicate trigger span [{start}, {end}]"
                )));
            }
            frames.push(EventFrame {
                event_id,
                trigger,
                event_type,
                arguments: Vec::new(),
            });
        }
        for ((ts, te), (as_, ae), role) in &record.gold_evt_links {
            let trigger = Span::new(*ts, *te)?;
            let span = Span::new(*as_, *ae)?;
            document.check_span(&span)?;
            let &frame_idx = trigger_index.get(&trigger).ok_or_else(|| {
                Error::Malformed(format!("link references unknown trigger [{ts}, {te}]"))
            })?;
            let role = if self.options.strip_role_prefix {
                strip_role_prefix(role)
            } else {
                role.as_str()
            };
            frames[frame_idx].arguments.push(Argument {
                role: role.to_string(),
                span,
            });
        }
        if let Some(ontology) = self.ontology {
            frames = self.validate(&document, frames, ontology)?;
        }
        Ok(CorpusEntry { document, frames })
    }

    fn validate(
        &self,
        document: &Document,
        frames: Vec<EventFrame>,
        ontology: &Ontology,
    ) -> Result<Vec<EventFrame>> {
        let reject = self.options.on_unknown == UnknownPolicy::Reject;
        let mut kept = Vec::with_capacity(frames.len());
        for mut frame in frames {
            if ontology.roles_for(&frame.event_type).is_none() {
                let err = Error::UnknownEventType(frame.event_type.clone());
                if reject {
                    return Err(err);
                }
                log::warn!("{}: skipping event {}: {err}", document.doc_id(), frame.event_id);
                continue;
            }
            let mut arguments = Vec::with_capacity(frame.arguments.len());
            for arg in frame.arguments {
                if ontology.licenses(&frame.event_type, &arg.role) {
                    arguments.push(arg);
                    continue;
                }
                let err = Error::UnlicensedRole {
                    event_type: frame.event_type.clone(),
                    role: arg.role.clone(),
                };
                if reject {
                    return Err(err);
                }
                log::warn!("{}: skipping argument: {err}", document.doc_id());
            }
            frame.arguments = arguments;
            kept.push(frame);
        }
        Ok(kept)
    }
}

/// Parse a RAMS-format JSON-lines stream. Records keep file order; errors
/// carry the 1-based line number.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    ontology: Option<&Ontology>,
    options: &LoadOptions,
) -> Result<Corpus> {
    let mut converter = RecordConverter {
        ontology,
        options: *options,
        seen_keys: HashMap::new(),
    };
    let mut entries = Vec::new();
    io::for_each_line(reader, |line_no, line| {
        let record: RamsRecord = serde_json::from_str(line)
            .map_err(|e| Error::Malformed(e.to_string()).at_line(line_no))?;
        let entry = converter
            .convert(record)
            .map_err(|e| e.at_line(line_no))?;
        entries.push(entry);
        Ok(())
    })?;
    Ok(Corpus { entries })
}

pub fn load_corpus(path: &Path, ontology: Option<&Ontology>, options: &LoadOptions) -> Result<Corpus> {
    parse_corpus(io::open(path)?, ontology, options).map_err(|e| match e {
        Error::AtLine { line, source } if !source.is_io() => {
            Error::Malformed(format!("{}:{line}: {source}", path.display()))
        }
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Distinct document ids.
    pub n_documents: usize,
    pub n_events: usize,
    pub n_arguments: usize,
    pub n_intra: usize,
    pub n_inter: usize,
}

impl CorpusStats {
    /// `n_arguments / n_events` as a reduced fraction.
    pub fn args_per_event_ratio(&self) -> (usize, usize) {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        if self.n_events == 0 {
            return (0, 1);
        }
        let g = gcd(self.n_arguments, self.n_events).max(1);
        (self.n_arguments / g, self.n_events / g)
    }

    pub fn args_per_event(&self) -> f64 {
        if self.n_events == 0 {
            0.0
        } else {
            self.n_arguments as f64 / self.n_events as f64
        }
    }
}

pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    let mut doc_ids = HashSet::new();
    for entry in &corpus.entries {
        doc_ids.insert(entry.document.doc_id());
        for frame in &entry.frames {
            stats.n_events += 1;
            for arg in &frame.arguments {
                stats.n_arguments += 1;
                if argument_distance(&entry.document, frame, &arg.span)? == 0 {
                    stats.n_intra += 1;
                } else {
                    stats.n_inter += 1;
                }
            }
        }
    }
    stats.n_documents = doc_ids.len();
    Ok(stats)
}
