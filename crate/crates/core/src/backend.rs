//! Answer providers: an HTTP client for external QA servers and mock
//! answerers for running the pipeline without a model.
//!
//! Wire protocol: `POST {endpoint}/answer` with `{"requests": [...]}`,
//! answered by `{"responses": [...]}`. Spans are inclusive global token
//! indices into the request context.

use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Span};
use crate::error::{Error, Result};
use crate::evaluation::Prediction;
use crate::question_gen::QaInstance;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSpan {
    pub start: usize,
    pub end: usize,
}

impl From<Span> for WireSpan {
    fn from(s: Span) -> Self {
        WireSpan { start: s.start, end: s.end }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub instance_id: String,
    pub context: Vec<Vec<String>>,
    pub question: String,
    pub trigger: WireSpan,
}

impl AnswerRequest {
    pub fn context_len(&self) -> usize {
        self.context.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub instance_id: String,
    pub answer: Option<WireSpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestBody {
    pub requests: Vec<AnswerRequest>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseBody {
    pub responses: Vec<AnswerResponse>,
}

/// Something that answers batches of questions.
pub trait Answerer {
    /// Exactly one response per request, in request order.
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>>;
}

/// One request per instance; instances must refer to events of `corpus`.
pub fn build_requests(corpus: &Corpus, instances: &[QaInstance]) -> Result<Vec<AnswerRequest>> {
    let index = corpus.index();
    instances
        .iter()
        .map(|inst| {
            let (doc, frame) = index
                .get(&(inst.doc_id.as_str(), inst.event_id.as_str()))
                .ok_or_else(|| {
                    Error::DanglingReference(format!(
                        "instance {} refers to event `{}` of document `{}`",
                        inst.instance_id, inst.event_id, inst.doc_id
                    ))
                })?;
            Ok(AnswerRequest {
                instance_id: inst.instance_id.clone(),
                context: doc.to_sentences(),
                question: inst.question.clone(),
                trigger: frame.trigger.into(),
            })
        })
        .collect()
}

/// Requests for standalone documents, such as external QA contexts.
pub fn build_document_requests(documents: &[Document], instances: &[QaInstance]) -> Result<Vec<AnswerRequest>> {
    let by_id: HashMap<&str, &Document> = documents.iter().map(|d| (d.doc_id(), d)).collect();
    instances
        .iter()
        .map(|inst| {
            let doc = by_id.get(inst.doc_id.as_str()).ok_or_else(|| {
                Error::DanglingReference(format!("unknown document `{}`", inst.doc_id))
            })?;
            Ok(AnswerRequest {
                instance_id: inst.instance_id.clone(),
                context: doc.to_sentences(),
                question: inst.question.clone(),
                trigger: WireSpan { start: 0, end: 0 },
            })
        })
        .collect()
}

/// Reorder server responses to match `requests`. Missing or unknown ids are
/// protocol violations; out-of-bounds spans are replaced by `None`.
pub fn align_responses(requests: &[AnswerRequest], responses: Vec<AnswerResponse>) -> Result<Vec<AnswerResponse>> {
    let mut by_id: HashMap<String, Option<WireSpan>> = HashMap::with_capacity(responses.len());
    for r in responses {
        if by_id.insert(r.instance_id.clone(), r.answer).is_some() {
            return Err(Error::Protocol(format!("duplicate response for {}", r.instance_id)));
        }
    }
    let mut out = Vec::with_capacity(requests.len());
    for req in requests {
        let answer = by_id.remove(&req.instance_id).ok_or_else(|| {
            Error::Protocol(format!("no response for instance {}", req.instance_id))
        })?;
        let answer = answer.filter(|s| {
            let ok = s.start <= s.end && s.end < req.context_len();
            if !ok {
                log::warn!(
                    "discarding span [{}, {}] for {}: context has {} tokens",
                    s.start,
                    s.end,
                    req.instance_id,
                    req.context_len()
                );
            }
            ok
        });
        out.push(AnswerResponse {
            instance_id: req.instance_id.clone(),
            answer,
        });
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(Error::Protocol(format!("response for unknown instance {extra}")));
    }
    Ok(out)
}

/// Turn responses into predictions through the instances they answer.
/// Instances without a role (external QA) are skipped.
pub fn to_predictions(instances: &[QaInstance], responses: &[AnswerResponse]) -> Vec<Prediction> {
    let answers: HashMap<&str, Option<WireSpan>> = responses
        .iter()
        .map(|r| (r.instance_id.as_str(), r.answer))
        .collect();
    instances
        .iter()
        .filter_map(|inst| {
            let role = inst.role.clone()?;
            let answer = answers.get(inst.instance_id.as_str()).copied().flatten();
            Some(Prediction {
                doc_id: inst.doc_id.clone(),
                event_id: inst.event_id.clone(),
                role,
                span: answer.map(|w| Span { start: w.start, end: w.end }),
            })
        })
        .collect()
}

/// Client for an external `/answer` server.
#[derive(Debug, Clone)]
pub struct HttpAnswerer {
    pub endpoint: String,
    pub batch_size: usize,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl HttpAnswerer {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpAnswerer {
            endpoint: endpoint.into(),
            batch_size: 32,
            retries: 3,
            backoff: Duration::from_millis(200),
            timeout: Duration::from_secs(60),
        }
    }

    fn url(&self) -> String {
        format!("{}/answer", self.endpoint.trim_end_matches('/'))
    }

    fn post(&self, agent: &ureq::Agent, body: &RequestBody) -> Result<ResponseBody> {
        let url = self.url();
        let mut attempt = 0;
        loop {
            let failure = match agent.post(&url).send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status < 300 {
                        return resp
                            .body_mut()
                            .read_json::<ResponseBody>()
                            .map_err(|e| Error::Protocol(format!("unreadable response body: {e}")));
                    }
                    if status < 500 {
                        let text = resp.body_mut().read_to_string().unwrap_or_default();
                        return Err(Error::Protocol(format!("server rejected batch ({status}): {text}")));
                    }
                    format!("server error {status}")
                }
                Err(e) => e.to_string(),
            };
            if attempt >= self.retries {
                return Err(Error::Transport(format!(
                    "{url}: {failure} (after {} attempts)",
                    attempt + 1
                )));
            }
            let delay = self.backoff * 2u32.saturating_pow(attempt).min(32);
            log::warn!("{url}: {failure}; retrying in {delay:?}");
            thread::sleep(delay);
            attempt += 1;
        }
    }
}

impl Answerer for HttpAnswerer {
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut out = Vec::with_capacity(requests.len());
        for chunk in requests.chunks(self.batch_size.max(1)) {
            let body = RequestBody { requests: chunk.to_vec() };
            let resp = self.post(&agent, &body)?;
            out.extend(align_responses(chunk, resp.responses)?);
        }
        Ok(out)
    }
}

fn gold_answers(instances: &[QaInstance]) -> HashMap<String, Option<Span>> {
    instances
        .iter()
        .map(|i| (i.instance_id.clone(), i.answer))
        .collect()
}

/// Answers with the gold span of each instance.
#[derive(Debug, Clone, Default)]
pub struct OracleAnswerer {
    gold: HashMap<String, Option<Span>>,
}

impl OracleAnswerer {
    pub fn new(instances: &[QaInstance]) -> Self {
        OracleAnswerer { gold: gold_answers(instances) }
    }
}

impl Answerer for OracleAnswerer {
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>> {
        Ok(requests
            .iter()
            .map(|r| AnswerResponse {
                instance_id: r.instance_id.clone(),
                answer: self.gold.get(&r.instance_id).copied().flatten().map(Into::into),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoAnswerAnswerer;

impl Answerer for NoAnswerAnswerer {
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>> {
        Ok(requests
            .iter()
            .map(|r| AnswerResponse {
                instance_id: r.instance_id.clone(),
                answer: None,
            })
            .collect())
    }
}

/// Always answers with the first token of the context.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstTokenAnswerer;

impl Answerer for FirstTokenAnswerer {
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>> {
        Ok(requests
            .iter()
            .map(|r| AnswerResponse {
                instance_id: r.instance_id.clone(),
                answer: Some(WireSpan { start: 0, end: 0 }),
            })
            .collect())
    }
}

/// Gold answers perturbed at random: dropped with probability `p_drop`,
/// otherwise one boundary moved by one token with probability `p_shift`.
/// Each instance draws from its own stream, so results do not depend on
/// batching.
#[derive(Debug, Clone)]
pub struct NoisyAnswerer {
    gold: HashMap<String, Option<Span>>,
    p_drop: f64,
    p_shift: f64,
    seed: u64,
}

impl NoisyAnswerer {
    pub fn new(instances: &[QaInstance], p_drop: f64, p_shift: f64, seed: u64) -> Result<Self> {
        for (name, p) in [("p_drop", p_drop), ("p_shift", p_shift)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(NoisyAnswerer {
            gold: gold_answers(instances),
            p_drop,
            p_shift,
            seed: seed::substream(seed, seed::NOISE),
        })
    }

    fn perturb(&self, request: &AnswerRequest) -> Option<WireSpan> {
        let gold = self.gold.get(&request.instance_id).copied().flatten()?;
        let mut rng = seed::rng(seed::derive(self.seed, &[&request.instance_id]));
        let drop = rng.random::<f64>() < self.p_drop;
        let shift = rng.random::<f64>() < self.p_shift;
        let move_start = rng.random::<bool>();
        let forward = rng.random::<bool>();
        if drop {
            return None;
        }
        let mut span = WireSpan::from(gold);
        if shift {
            let last = request.context_len().saturating_sub(1);
            let bound = if move_start { &mut span.start } else { &mut span.end };
            *bound = if forward { (*bound + 1).min(last) } else { bound.saturating_sub(1) };
            if span.start > span.end {
                std::mem::swap(&mut span.start, &mut span.end);
            }
        }
        Some(span)
    }
}

impl Answerer for NoisyAnswerer {
    fn answer_batch(&self, requests: &[AnswerRequest]) -> Result<Vec<AnswerResponse>> {
        Ok(requests
            .iter()
            .map(|r| AnswerResponse {
                instance_id: r.instance_id.clone(),
                answer: self.perturb(r),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockKind {
    Oracle,
    NoAnswer,
    FirstToken,
    Noisy,
}

impl std::str::FromStr for MockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(MockKind::Oracle),
            "no_answer" => Ok(MockKind::NoAnswer),
            "first_token" => Ok(MockKind::FirstToken),
            "noisy" => Ok(MockKind::Noisy),
            other => Err(Error::InvalidArgument(format!(
                "unknown mock `{other}`; expected one of: oracle, no_answer, first_token, noisy"
            ))),
        }
    }
}
