#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use eaqa::backend::{RequestBody, ResponseBody};
use eaqa::corpus::{Argument, Corpus, CorpusEntry, Document, EventFrame, Ontology, Span};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub const ROLES: &[&str] = &["agent", "patient", "instrument", "place", "time", "recipient"];
pub const EVENT_TYPES: &[&str] = &["alpha.one", "alpha.two", "beta.one"];

pub fn random_ontology() -> Ontology {
    let mut ont = Ontology::new();
    for t in EVENT_TYPES {
        ont.insert(*t, ROLES.iter().map(|r| r.to_string()).collect());
    }
    ont
}

/// Random corpus with non-overlapping spans inside each event. Roles are
/// unique per event unless `repeat_roles` is set.
pub fn random_corpus(seed: u64, n_docs: usize, repeat_roles: bool) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = ["oil", "trucks", "Syria", "the", "firm", "a", "group", "Iran", "talks", "sanctions"];
    let mut entries = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let n_sent = rng.random_range(1..=5);
        let sentences: Vec<Vec<String>> = (0..n_sent)
            .map(|_| {
                (0..rng.random_range(2..=9))
                    .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                    .collect()
            })
            .collect();
        let doc = Document::new(format!("doc{d}"), sentences).unwrap();
        let n = doc.num_tokens();
        let mut frames = Vec::new();
        for e in 0..rng.random_range(1..=3) {
            let trig = rng.random_range(0..n);
            let mut taken = vec![false; n];
            taken[trig] = true;
            let mut roles: Vec<&str> = ROLES.to_vec();
            roles.shuffle(&mut rng);
            let k = rng.random_range(0..=roles.len());
            let mut arguments = Vec::new();
            for i in 0..k {
                let role = if repeat_roles && i > 0 && rng.random_bool(0.3) {
                    roles[0]
                } else {
                    roles[i]
                };
                let start = rng.random_range(0..n);
                let end = (start + rng.random_range(0..3)).min(n - 1);
                if taken[start..=end].iter().any(|&t| t) {
                    continue;
                }
                taken[start..=end].iter_mut().for_each(|t| *t = true);
                arguments.push(Argument {
                    role: role.to_string(),
                    span: Span::new(start, end).unwrap(),
                });
            }
            frames.push(EventFrame {
                event_id: format!("doc{d}#{e}"),
                trigger: Span::single(trig),
                event_type: EVENT_TYPES[rng.random_range(0..EVENT_TYPES.len())].to_string(),
                arguments,
            });
        }
        entries.push(CorpusEntry { document: doc, frames });
    }
    Corpus { entries }
}

/// Reply chosen by a test server for one POST body and 0-based request count.
pub type Handler = dyn Fn(&RequestBody, usize) -> (u16, String) + Send + Sync;

pub struct TestServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

/// Minimal HTTP/1.1 server answering `POST /answer` with `handler`.
pub fn serve(handler: Box<Handler>) -> TestServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let (status, reply) = if !request_line.starts_with("POST /answer ") {
                (404, "{}".to_string())
            } else {
                match serde_json::from_slice::<RequestBody>(&body) {
                    Ok(req) => handler(&req, n),
                    Err(e) => (400, format!("{{\"error\":\"{e}\"}}")),
                }
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    TestServer { url, hits }
}

pub fn json_reply(body: &ResponseBody) -> (u16, String) {
    (200, serde_json::to_string(body).unwrap())
}
