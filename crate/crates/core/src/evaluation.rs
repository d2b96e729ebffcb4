//! Exact-match scoring with distance, role, event-type and confusion
//! breakdowns, plus coarse automatic error tags.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{argument_distance, Corpus, Document, EventFrame, Ontology, Span};
use crate::error::{Error, Result};
use crate::io;

/// One predicted span (or "No answer") for a role of an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Prediction {
    pub doc_id: String,
    pub event_id: String,
    pub role: String,
    pub span: Option<Span>,
}

/// Predictions to score. A model that answers one span per role yields at
/// most one entry per `(doc_id, event_id, role)`; several entries for the same
/// key are accepted so that annotations with repeated roles can be scored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    pub entries: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(entries: Vec<Prediction>) -> Self {
        PredictionSet { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(PredictionSet::new(io::read_jsonl(path)?))
    }

    /// Every gold argument as a prediction.
    pub fn from_gold(corpus: &Corpus) -> Self {
        let entries = corpus
            .frames()
            .flat_map(|(doc, frame)| {
                frame.arguments.iter().map(move |a| Prediction {
                    doc_id: doc.doc_id().to_string(),
                    event_id: frame.event_id.clone(),
                    role: a.role.clone(),
                    span: Some(a.span),
                })
            })
            .collect();
        PredictionSet { entries }
    }

    /// Error if any key carries more than one entry.
    pub fn check_one_per_role(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for p in &self.entries {
            if !seen.insert((&p.doc_id, &p.event_id, &p.role)) {
                return Err(Error::Malformed(format!(
                    "more than one prediction for role `{}` of event `{}` in `{}`",
                    p.role, p.event_id, p.doc_id
                )));
            }
        }
        Ok(())
    }
}

/// Sentence distance bucket, trigger to argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    #[serde(rename = "-2")]
    TwoBefore,
    #[serde(rename = "-1")]
    OneBefore,
    #[serde(rename = "0")]
    Same,
    #[serde(rename = "+1")]
    OneAfter,
    #[serde(rename = "+2")]
    TwoAfter,
    #[serde(rename = "other")]
    Other,
}

impl Bucket {
    pub const ALL: [Bucket; 6] = [
        Bucket::TwoBefore,
        Bucket::OneBefore,
        Bucket::Same,
        Bucket::OneAfter,
        Bucket::TwoAfter,
        Bucket::Other,
    ];

    pub fn from_distance(d: isize) -> Self {
        match d {
            -2 => Bucket::TwoBefore,
            -1 => Bucket::OneBefore,
            0 => Bucket::Same,
            1 => Bucket::OneAfter,
            2 => Bucket::TwoAfter,
            _ => Bucket::Other,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Bucket::TwoBefore => "-2",
            Bucket::OneBefore => "-1",
            Bucket::Same => "0",
            Bucket::OneAfter => "+1",
            Bucket::TwoAfter => "+2",
            Bucket::Other => "other",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bucket::TwoBefore => "2 before",
            Bucket::OneBefore => "1 before",
            Bucket::Same => "same",
            Bucket::OneAfter => "1 after",
            Bucket::TwoAfter => "2 after",
            Bucket::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    gold: usize,
    predicted: usize,
    correct: usize,
}

impl Counts {
    fn prf(self) -> Prf {
        let precision = frac(self.correct, self.predicted);
        let recall = frac(self.correct, self.gold);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
            support: self.gold,
            predicted: self.predicted,
            correct: self.correct,
        }
    }
}

fn frac(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold arguments.
    pub support: usize,
    pub predicted: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCell {
    pub gold: String,
    pub predicted: String,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub cells: Vec<ConfusionCell>,
}

impl ConfusionMatrix {
    pub fn get(&self, gold: &str, predicted: &str) -> usize {
        self.cells
            .iter()
            .find(|c| c.gold == gold && c.predicted == predicted)
            .map_or(0, |c| c.count)
    }

    pub fn is_diagonal(&self) -> bool {
        self.cells.iter().all(|c| c.gold == c.predicted)
    }

    /// The `k` gold roles with the most span-correct predictions, ties by name.
    pub fn top_roles(&self, k: usize) -> Vec<String> {
        let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &self.cells {
            *totals.entry(&c.gold).or_default() += c.count;
        }
        let mut roles: Vec<(&str, usize)> = totals.into_iter().collect();
        roles.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        roles.into_iter().take(k).map(|(r, _)| r.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTags {
    /// Overlapping but different span for a gold role.
    pub partial_span: usize,
    /// Disjoint span for a gold role.
    pub wrong_span: usize,
    /// Gold argument whose role got no span prediction.
    pub no_prediction: usize,
    /// Prediction for a role the event does not fill.
    pub spurious: usize,
    pub not_tagged: Vec<String>,
}

impl Default for ErrorTags {
    fn default() -> Self {
        ErrorTags {
            partial_span: 0,
            wrong_span: 0,
            no_prediction: 0,
            spurious: 0,
            not_tagged: vec![
                "alternative answer via coreference".into(),
                "distractor".into(),
                "annotation error".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_gold: usize,
    pub n_predicted: usize,
    pub n_correct: usize,
    /// No span predictions at all; precision is reported as 0.
    pub precision_undefined: bool,
    pub by_distance: BTreeMap<Bucket, Prf>,
    pub by_role: BTreeMap<String, Prf>,
    /// Unweighted mean of per-role F1 among roles seen in gold for the type.
    pub by_event: BTreeMap<String, f64>,
    pub confusion: ConfusionMatrix,
    pub error_tags: ErrorTags,
}

struct GoldArg {
    role: String,
    span: Span,
    bucket: Bucket,
    used: bool,
}

struct EventGold<'a> {
    doc: &'a Document,
    frame: &'a EventFrame,
    args: Vec<GoldArg>,
}

/// Score `predictions` against the gold corpus by exact tuple match.
///
/// When an ontology is supplied, predicted roles must be licensed for the
/// event type.
pub fn score(gold: &Corpus, predictions: &PredictionSet, ontology: Option<&Ontology>) -> Result<EvalReport> {
    let mut events: HashMap<(&str, &str), EventGold> = HashMap::new();
    let mut order: Vec<(&str, &str)> = Vec::new();
    for (doc, frame) in gold.frames() {
        let mut args = Vec::with_capacity(frame.arguments.len());
        for a in &frame.arguments {
            args.push(GoldArg {
                role: a.role.clone(),
                span: a.span,
                bucket: Bucket::from_distance(argument_distance(doc, frame, &a.span)?),
                used: false,
            });
        }
        args.sort_by_key(|a| a.span);
        let key = (doc.doc_id(), frame.event_id.as_str());
        if events.insert(key, EventGold { doc, frame, args }).is_some() {
            return Err(Error::Malformed(format!(
                "event `{}` of document `{}` occurs twice in gold",
                key.1, key.0
            )));
        }
        order.push(key);
    }

    // sorted so that tie-breaking never depends on input order
    let mut preds: Vec<&Prediction> = predictions.entries.iter().collect();
    preds.sort();

    let mut total = Counts::default();
    let mut by_distance: BTreeMap<Bucket, Counts> = Bucket::ALL.iter().map(|&b| (b, Counts::default())).collect();
    let mut by_role: BTreeMap<String, Counts> = BTreeMap::new();
    let mut by_type_role: BTreeMap<(String, String), Counts> = BTreeMap::new();
    let mut confusion: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut tags = ErrorTags::default();
    let mut predicted_roles: HashSet<(&str, &str, &str)> = HashSet::new();

    for ev in events.values() {
        for a in &ev.args {
            total.gold += 1;
            by_distance.get_mut(&a.bucket).unwrap().gold += 1;
            by_role.entry(a.role.clone()).or_default().gold += 1;
            by_type_role
                .entry((ev.frame.event_type.clone(), a.role.clone()))
                .or_default()
                .gold += 1;
        }
    }

    for p in &preds {
        let ev = events
            .get_mut(&(p.doc_id.as_str(), p.event_id.as_str()))
            .ok_or_else(|| {
                Error::DanglingReference(format!(
                    "prediction for event `{}` of document `{}` has no gold counterpart",
                    p.event_id, p.doc_id
                ))
            })?;
        if let Some(ont) = ontology {
            if !ont.licenses(&ev.frame.event_type, &p.role) {
                return Err(Error::UnlicensedRole {
                    event_type: ev.frame.event_type.clone(),
                    role: p.role.clone(),
                });
            }
        }
        let Some(span) = p.span else { continue };
        ev.doc.check_span(&span)?;
        predicted_roles.insert((&p.doc_id, &p.event_id, &p.role));
        total.predicted += 1;
        by_role.entry(p.role.clone()).or_default().predicted += 1;
        by_type_role
            .entry((ev.frame.event_type.clone(), p.role.clone()))
            .or_default()
            .predicted += 1;

        let hit = ev
            .args
            .iter_mut()
            .find(|a| !a.used && a.role == p.role && a.span == span);
        let bucket = match hit {
            Some(a) => {
                a.used = true;
                total.correct += 1;
                by_role.get_mut(&p.role).unwrap().correct += 1;
                by_type_role
                    .get_mut(&(ev.frame.event_type.clone(), p.role.clone()))
                    .unwrap()
                    .correct += 1;
                by_distance.get_mut(&a.bucket).unwrap().correct += 1;
                a.bucket
            }
            None => {
                let same_role: Vec<&GoldArg> = ev.args.iter().filter(|a| a.role == p.role).collect();
                if same_role.is_empty() {
                    tags.spurious += 1;
                    Bucket::from_distance(argument_distance(ev.doc, ev.frame, &span)?)
                } else {
                    if same_role.iter().any(|a| a.span.overlaps(&span)) {
                        tags.partial_span += 1;
                    } else {
                        tags.wrong_span += 1;
                    }
                    same_role[0].bucket
                }
            }
        };
        by_distance.get_mut(&bucket).unwrap().predicted += 1;

        let same_span: Vec<&GoldArg> = ev.args.iter().filter(|a| a.span == span).collect();
        if let Some(g) = same_span
            .iter()
            .find(|a| a.role == p.role)
            .or(same_span.first())
        {
            *confusion.entry((g.role.clone(), p.role.clone())).or_default() += 1;
        }
    }

    for key in &order {
        let ev = &events[key];
        for a in &ev.args {
            if !a.used && !predicted_roles.contains(&(key.0, key.1, a.role.as_str())) {
                tags.no_prediction += 1;
            }
        }
    }

    let mut by_event: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for ((event_type, _), counts) in &by_type_role {
        if counts.gold > 0 {
            by_event.entry(event_type.clone()).or_default().push(counts.prf().f1);
        }
    }

    let overall = total.prf();
    Ok(EvalReport {
        precision: overall.precision,
        recall: overall.recall,
        f1: overall.f1,
        n_gold: total.gold,
        n_predicted: total.predicted,
        n_correct: total.correct,
        precision_undefined: total.predicted == 0,
        by_distance: by_distance.into_iter().map(|(b, c)| (b, c.prf())).collect(),
        by_role: by_role.into_iter().map(|(r, c)| (r, c.prf())).collect(),
        by_event: by_event
            .into_iter()
            .map(|(t, f1s)| (t, f1s.iter().sum::<f64>() / f1s.len() as f64))
            .collect(),
        confusion: ConfusionMatrix {
            cells: confusion
                .into_iter()
                .map(|((gold, predicted), count)| ConfusionCell { gold, predicted, count })
                .collect(),
        },
        error_tags: tags,
    })
}

/// Relative F1 change in percent. Keys whose baseline F1 is zero are listed
/// in `undefined` instead.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaF1 {
    pub overall: Option<f64>,
    pub by_distance: BTreeMap<Bucket, f64>,
    pub by_role: BTreeMap<String, f64>,
    pub undefined: Vec<String>,
}

fn relative(new: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| 100.0 * (new - base) / base)
}

pub fn delta_f1(new: &EvalReport, base: &EvalReport) -> DeltaF1 {
    let mut out = DeltaF1 {
        overall: relative(new.f1, base.f1),
        ..Default::default()
    };
    if out.overall.is_none() {
        out.undefined.push("overall".into());
    }
    for (bucket, prf) in &new.by_distance {
        if let Some(b) = base.by_distance.get(bucket) {
            match relative(prf.f1, b.f1) {
                Some(d) => {
                    out.by_distance.insert(*bucket, d);
                }
                None => out.undefined.push(format!("distance {}", bucket.key())),
            }
        }
    }
    for (role, prf) in &new.by_role {
        if let Some(b) = base.by_role.get(role) {
            match relative(prf.f1, b.f1) {
                Some(d) => {
                    out.by_role.insert(role.clone(), d);
                }
                None => out.undefined.push(format!("role {role}")),
            }
        }
    }
    out
}

/// Plain-text summary with the distance table; a baseline adds a %ΔF1 column.
pub fn render_text(report: &EvalReport, base: Option<&EvalReport>) -> String {
    let delta = base.map(|b| delta_f1(report, b));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "P {:.2}  R {:.2}  F1 {:.2}  (gold {}, predicted {}, correct {}){}",
        100.0 * report.precision,
        100.0 * report.recall,
        100.0 * report.f1,
        report.n_gold,
        report.n_predicted,
        report.n_correct,
        if report.precision_undefined { "  [no span predictions]" } else { "" }
    );
    let _ = writeln!(out);
    let _ = write!(out, "{:<10} {:>8} {:>8} {:>8} {:>8}", "distance", "P", "R", "F1", "support");
    if delta.is_some() {
        let _ = write!(out, " {:>9}", "%dF1");
    }
    let _ = writeln!(out);
    for (bucket, prf) in &report.by_distance {
        let _ = write!(
            out,
            "{:<10} {:>8.2} {:>8.2} {:>8.2} {:>8}",
            bucket.label(),
            100.0 * prf.precision,
            100.0 * prf.recall,
            100.0 * prf.f1,
            prf.support
        );
        if let Some(d) = &delta {
            match d.by_distance.get(bucket) {
                Some(v) => {
                    let _ = write!(out, " {:>+9.1}", v);
                }
                None => {
                    let _ = write!(out, " {:>9}", "n/a");
                }
            }
        }
        let _ = writeln!(out);
    }
    let t = &report.error_tags;
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "errors: partial_span {}  wrong_span {}  no_prediction {}  spurious {}",
        t.partial_span, t.wrong_span, t.no_prediction, t.spurious
    );
    let _ = writeln!(out, "not tagged automatically: {}", t.not_tagged.join(", "));
    out
}

/// Per-role scores as CSV.
pub fn role_csv(report: &EvalReport) -> String {
    let mut out = String::from("role,precision,recall,f1,support,predicted,correct\n");
    for (role, p) in &report.by_role {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{},{},{}",
            role, p.precision, p.recall, p.f1, p.support, p.predicted, p.correct
        );
    }
    out
}

/// Confusion matrix over the `top_k` most frequent gold roles as CSV, rows
/// gold and columns predicted.
pub fn confusion_csv(report: &EvalReport, top_k: usize) -> String {
    let roles = report.confusion.top_roles(top_k);
    let mut out = String::from("gold\\predicted");
    for r in &roles {
        out.push(',');
        out.push_str(r);
    }
    out.push('\n');
    for g in &roles {
        out.push_str(g);
        for p in &roles {
            let _ = write!(out, ",{}", report.confusion.get(g, p));
        }
        out.push('\n');
    }
    out
}
