mod common;

use std::sync::atomic::Ordering;
use std::time::Duration;

use eaqa::backend::{
    build_requests, AnswerResponse, Answerer, HttpAnswerer, NoisyAnswerer, OracleAnswerer, RequestBody,
    ResponseBody, WireSpan,
};
use eaqa::corpus::{load_corpus, Corpus, LoadOptions, Ontology};
use eaqa::question_gen::{corpus_template_questions, QaInstance, WhTable};
use eaqa::Error;

use common::{fixture, json_reply, serve};

fn import_event() -> (Corpus, Vec<QaInstance>) {
    let ont = Ontology::load(&fixture("ontology.tsv")).unwrap();
    let corpus = load_corpus(&fixture("import_event.jsonl"), Some(&ont), &LoadOptions::default()).unwrap();
    let instances = corpus_template_questions(&corpus, &ont, &WhTable::builtin()).unwrap();
    (corpus, instances)
}

fn fast(url: &str) -> HttpAnswerer {
    let mut http = HttpAnswerer::new(url);
    http.backoff = Duration::from_millis(5);
    http.timeout = Duration::from_secs(5);
    http
}

#[test]
fn oracle_round_trip_in_batches() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let oracle = OracleAnswerer::new(&instances);
    let expected = oracle.answer_batch(&requests).unwrap();
    let server = serve(Box::new(move |req, _| {
        // answer in reverse order to exercise realignment
        let mut responses = oracle.answer_batch(&req.requests).unwrap();
        responses.reverse();
        json_reply(&ResponseBody { responses })
    }));
    let mut http = fast(&server.url);
    http.batch_size = 2;
    assert_eq!(http.answer_batch(&requests).unwrap(), expected);
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_server_errors_then_succeeds() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let oracle = OracleAnswerer::new(&instances);
    let server = serve(Box::new(move |req, n| {
        if n < 2 {
            (503, "{}".into())
        } else {
            json_reply(&ResponseBody {
                responses: oracle.answer_batch(&req.requests).unwrap(),
            })
        }
    }));
    let got = fast(&server.url).answer_batch(&requests).unwrap();
    assert_eq!(got.len(), requests.len());
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn persistent_server_errors_are_transport_failures() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let server = serve(Box::new(|_, _| (500, "{}".into())));
    let mut http = fast(&server.url);
    http.retries = 2;
    let err = http.answer_batch(&requests).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert!(err.is_io());
    assert_eq!(server.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn unreachable_endpoint_is_transport_failure() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let mut http = fast(&format!("http://127.0.0.1:{port}"));
    http.retries = 1;
    let err = http.answer_batch(&requests).unwrap_err();
    assert!(err.is_io(), "{err}");
}

#[test]
fn client_errors_are_protocol_violations_without_retry() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let server = serve(Box::new(|_, _| (422, "{\"error\":\"bad\"}".into())));
    let err = fast(&server.url).answer_batch(&requests).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
    assert_eq!(server.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn out_of_bounds_answers_become_null() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let server = serve(Box::new(|req, _| {
        let responses = req
            .requests
            .iter()
            .map(|r| AnswerResponse {
                instance_id: r.instance_id.clone(),
                answer: Some(WireSpan { start: 3, end: r.context_len() + 4 }),
            })
            .collect();
        json_reply(&ResponseBody { responses })
    }));
    let got = fast(&server.url).answer_batch(&requests).unwrap();
    assert!(got.iter().all(|r| r.answer.is_none()));
}

#[test]
fn missing_and_unknown_ids_are_protocol_violations() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances).unwrap();
    let missing = serve(Box::new(|req, _| {
        let responses = req.requests[1..]
            .iter()
            .map(|r| AnswerResponse { instance_id: r.instance_id.clone(), answer: None })
            .collect();
        json_reply(&ResponseBody { responses })
    }));
    let err = fast(&missing.url).answer_batch(&requests).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");

    let unknown = serve(Box::new(|req, _| {
        let mut responses: Vec<_> = req
            .requests
            .iter()
            .map(|r| AnswerResponse { instance_id: r.instance_id.clone(), answer: None })
            .collect();
        responses[0].instance_id = "nope".into();
        json_reply(&ResponseBody { responses })
    }));
    let err = fast(&unknown.url).answer_batch(&requests).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");

    let garbage = serve(Box::new(|_, _| (200, "not json".into())));
    let err = fast(&garbage.url).answer_batch(&requests).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err}");
}

#[test]
fn recorded_exchange_matches_current_schema() {
    let (corpus, instances) = import_event();
    let requests = build_requests(&corpus, &instances[..2]).unwrap();
    if std::env::var_os("EAQA_RECORD_PROTOCOL").is_some() {
        let write = |name: &str, json: String| std::fs::write(fixture(name), json + "\n").unwrap();
        write("protocol/request.json", serde_json::to_string_pretty(&RequestBody { requests: requests.clone() }).unwrap());
        let responses = OracleAnswerer::new(&instances).answer_batch(&requests).unwrap();
        write("protocol/response.json", serde_json::to_string_pretty(&ResponseBody { responses }).unwrap());
    }
    let recorded: RequestBody =
        serde_json::from_str(&std::fs::read_to_string(fixture("protocol/request.json")).unwrap()).unwrap();
    assert_eq!(recorded, RequestBody { requests: requests.clone() });

    let recorded: ResponseBody =
        serde_json::from_str(&std::fs::read_to_string(fixture("protocol/response.json")).unwrap()).unwrap();
    let fresh = OracleAnswerer::new(&instances).answer_batch(&requests).unwrap();
    assert_eq!(recorded.responses, fresh);
    assert_eq!(fresh[0].answer, Some(WireSpan { start: 14, end: 15 }));

    let value: serde_json::Value = serde_json::to_value(&recorded).unwrap();
    let span = &value["responses"][1]["answer"];
    assert_eq!(span, &serde_json::json!({"start": 24, "end": 24}));
}

#[test]
fn noisy_drop_rate_is_within_three_sigma() {
    let corpus = common::random_corpus(9, 600, false);
    let instances: Vec<_> = corpus_template_questions(&corpus, &common::random_ontology(), &WhTable::builtin())
        .unwrap()
        .into_iter()
        .filter(|i| i.answer.is_some())
        .take(1000)
        .collect();
    assert_eq!(instances.len(), 1000);
    let requests = build_requests(&corpus, &instances).unwrap();
    let noisy = NoisyAnswerer::new(&instances, 0.5, 0.0, 7).unwrap();
    let dropped = noisy
        .answer_batch(&requests)
        .unwrap()
        .iter()
        .filter(|r| r.answer.is_none())
        .count();
    // sigma = sqrt(1000 * 0.25) ~ 15.8
    assert!((dropped as f64 - 500.0).abs() <= 3.0 * 15.82, "dropped {dropped}");
}
