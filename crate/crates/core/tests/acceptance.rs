//! Acceptance checks. Each check prints one PASS or FAIL line; the process
//! exits non-zero if any check fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use eaqa::augmentation::edit::{Edit, EditableDocument};
use eaqa::augmentation::{
    augment_corpus, remap_spans, AugmentConfig, AugmentResources, CorefChains, Rewrites, Strategy,
};
use eaqa::backend::{
    build_requests, to_predictions, Answerer, HttpAnswerer, NoisyAnswerer, OracleAnswerer, ResponseBody,
};
use eaqa::blending::{epoch_set, plan, Decay};
use eaqa::cli::{run, Cli};
use eaqa::corpus::{argument_distance, corpus_stats, load_corpus, Corpus, Document, LoadOptions, Ontology, Span};
use eaqa::evaluation::{score, PredictionSet};
use eaqa::prompting::lenient_match;
use eaqa::question_gen::{corpus_template_questions, template_questions, WhTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{fixture, random_corpus, random_ontology};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ontology() -> Ontology {
    Ontology::load(&fixture("ontology.tsv")).unwrap()
}

fn load(name: &str) -> Corpus {
    load_corpus(&fixture(name), Some(&ontology()), &LoadOptions::default()).unwrap()
}

fn combined(names: &[&str]) -> Corpus {
    Corpus {
        entries: names.iter().flat_map(|n| load(n).entries).collect(),
    }
}

fn corpus_statistics() -> Check {
    if let Some(dir) = std::env::var_os("RAMS_DIR") {
        let expected = [
            ("train", [3194, 7329, 17026, 14018, 3008]),
            ("dev", [399, 924, 2188, 1811, 377]),
            ("test", [400, 871, 2023, 1667, 356]),
        ];
        let mut details = Vec::new();
        for (split, want) in expected {
            let path = Path::new(&dir).join(format!("{split}.jsonlines"));
            let start = Instant::now();
            let corpus = load_corpus(&path, None, &LoadOptions::default()).map_err(|e| e.to_string())?;
            let s = corpus_stats(&corpus).map_err(|e| e.to_string())?;
            let elapsed = start.elapsed().as_secs_f64();
            let got = [s.n_documents, s.n_events, s.n_arguments, s.n_intra, s.n_inter];
            ensure(got == want, || format!("{split}: got {got:?}, expected {want:?}"))?;
            ensure(elapsed < 10.0, || format!("{split}: took {elapsed:.1}s"))?;
            details.push(format!("{split} {got:?} in {elapsed:.2}s"));
        }
        return Ok(format!("RAMS {}", details.join("; ")));
    }
    let start = Instant::now();
    let s = corpus_stats(&load("synthetic.jsonl")).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let got = [s.n_documents, s.n_events, s.n_arguments, s.n_intra, s.n_inter];
    ensure(got == [50, 104, 225, 171, 54], || format!("synthetic fixture: got {got:?}"))?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.1}s"))?;
    Ok(format!("RAMS_DIR unset; synthetic fixture {got:?} in {elapsed:.3}s"))
}

fn question_generation() -> Check {
    let corpus = load("import_event.jsonl");
    let (doc, frame) = corpus.frames().next().unwrap();
    let qs = template_questions(doc, frame, &ontology(), &WhTable::builtin()).map_err(|e| e.to_string())?;
    let got: Vec<(String, Option<String>)> = qs
        .iter()
        .map(|q| (q.question.clone(), q.answer.map(|s| doc.span_text(&s))))
        .collect();
    let want = vec![
        ("Who is the transporter of the event importing?", Some("Bilal Erdogan")),
        ("What is the artifact of the event importing?", Some("oil")),
        ("What is the vehicle of the event importing?", Some("trucks")),
        ("Where is the origin of the event importing?", Some("Syria and Iraq")),
        ("Where is the destination of the event importing?", None),
    ];
    let want: Vec<(String, Option<String>)> = want
        .into_iter()
        .map(|(q, a)| (q.to_string(), a.map(str::to_string)))
        .collect();
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("5 questions verbatim, destination has no answer".into())
}

fn oracle_scores(corpus: &Corpus, ont: &Ontology, answerer: &dyn Answerer) -> Result<eaqa::evaluation::EvalReport, String> {
    let instances = corpus_template_questions(corpus, ont, &WhTable::builtin()).map_err(|e| e.to_string())?;
    let requests = build_requests(corpus, &instances).map_err(|e| e.to_string())?;
    let responses = answerer.answer_batch(&requests).map_err(|e| e.to_string())?;
    let predictions = to_predictions(&instances, &responses);
    score(corpus, &PredictionSet::new(predictions), Some(ont)).map_err(|e| e.to_string())
}

fn all_breakdowns_perfect(r: &eaqa::evaluation::EvalReport) -> Result<(), String> {
    ensure(r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0, || {
        format!("overall P {} R {} F1 {}", r.precision, r.recall, r.f1)
    })?;
    for (b, p) in &r.by_distance {
        ensure(p.support == 0 || p.f1 == 1.0, || format!("bucket {} F1 {}", b.key(), p.f1))?;
    }
    for (role, p) in &r.by_role {
        ensure(p.f1 == 1.0, || format!("role {role} F1 {}", p.f1))?;
    }
    for (t, f1) in &r.by_event {
        ensure(*f1 == 1.0, || format!("event {t} F1 {f1}"))?;
    }
    ensure(r.confusion.is_diagonal(), || "confusion not diagonal".into())
}

fn f1_property_suite() -> Check {
    // (a) oracle, in process and over HTTP
    let ont = ontology();
    let corpus = combined(&["synthetic.jsonl", "import_event.jsonl", "clinton.jsonl"]);
    let instances = corpus_template_questions(&corpus, &ont, &WhTable::builtin()).unwrap();
    let oracle = OracleAnswerer::new(&instances);
    all_breakdowns_perfect(&oracle_scores(&corpus, &ont, &oracle)?)?;
    let server = common::serve(Box::new(move |req, _| {
        common::json_reply(&ResponseBody {
            responses: oracle.answer_batch(&req.requests).unwrap(),
        })
    }));
    let mut http = HttpAnswerer::new(server.url.clone());
    http.batch_size = 64;
    let r = oracle_scores(&corpus, &ont, &http)?;
    all_breakdowns_perfect(&r)?;

    // (b) noisy recall
    let random_ont = random_ontology();
    let mut big = random_corpus(101, 1200, false);
    let mut seed = 102;
    while big.frames().map(|(_, f)| f.arguments.len()).sum::<usize>() < 3000 {
        big.entries.extend(random_corpus(seed, 200, false).entries);
        seed += 1;
    }
    let n_args: usize = big.frames().map(|(_, f)| f.arguments.len()).sum();
    let big_instances = corpus_template_questions(&big, &random_ont, &WhTable::builtin()).unwrap();
    let noisy = NoisyAnswerer::new(&big_instances, 0.3, 0.0, 7).unwrap();
    let r = oracle_scores(&big, &random_ont, &noisy)?;
    ensure((r.recall - 0.7).abs() <= 0.03, || format!("noisy recall {:.4} on {n_args} arguments", r.recall))?;

    // (c) self-scoring
    for s in 0..100 {
        let c = random_corpus(1000 + s, 8, true);
        let r = score(&c, &PredictionSet::from_gold(&c), None).map_err(|e| e.to_string())?;
        ensure(r.f1 == 1.0 && r.confusion.is_diagonal(), || format!("self-score fixture {s}: F1 {}", r.f1))?;
    }
    Ok(format!(
        "oracle F1 1.0 on {} arguments (in-process and HTTP); noisy recall {:.4} on {n_args} arguments; 100 self-scores diagonal",
        r_gold(&corpus),
        r.recall
    ))
}

fn r_gold(c: &Corpus) -> usize {
    c.frames().map(|(_, f)| f.arguments.len()).sum()
}

fn augmentation_counts() -> Check {
    let fixtures = combined(&["import_event.jsonl", "clinton.jsonl"]);
    let synthetic = load("synthetic.jsonl");
    let chains = CorefChains::load(&fixture("chains.jsonl"), &fixtures).map_err(|e| e.to_string())?;
    let config = AugmentConfig::default();
    let mut details = Vec::new();
    for (name, corpus) in [("fixtures", &fixtures), ("synthetic", &synthetic)] {
        let intra = corpus_stats(corpus).unwrap().n_intra;
        for strategy in [Strategy::SsPlain, Strategy::SsVerbose] {
            let (out, _) = augment_corpus(corpus, strategy, &config, AugmentResources::default(), 5)
                .map_err(|e| e.to_string())?;
            ensure(out.len() == intra, || format!("{name} {strategy}: {} instances for {intra} intra arguments", out.len()))?;
            for inst in &out {
                let role = inst.moved_role.as_deref().unwrap();
                let moved = inst.frame.spans_for(role).any(|s| {
                    argument_distance(&inst.document, &inst.frame, &s).unwrap() != 0
                });
                ensure(moved, || format!("{}: {role} still intra-sentential", inst.document.doc_id()))?;
            }
        }
        details.push(format!("{name}: ss {intra}/{intra}"));
    }
    let resources = AugmentResources {
        chains: Some(&chains),
        rewrites: None,
    };
    for strategy in [Strategy::CrRandom, Strategy::CrMeaningful] {
        let (out, _) = augment_corpus(&fixtures, strategy, &config, resources, 5).map_err(|e| e.to_string())?;
        ensure(out.len() == 3, || format!("{strategy}: {} instances, expected 3", out.len()))?;
    }
    details.push("cr_random 3, cr_meaningful 3".into());
    Ok(details.join("; "))
}

fn span_shift_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut checked = 0;
    for trial in 0..10_000 {
        let n_sent = rng.random_range(1..=5);
        let sentences: Vec<Vec<String>> = (0..n_sent)
            .map(|s| (0..rng.random_range(2..=8)).map(|t| format!("w{s}_{t}")).collect())
            .collect();
        let doc = Document::new("d", sentences).unwrap();
        let n = doc.num_tokens();
        let spans: Vec<Span> = (0..6)
            .map(|_| {
                let a = rng.random_range(0..n);
                Span::new(a, (a + rng.random_range(0..3)).min(n - 1)).unwrap()
            })
            .collect();
        let mut ed = EditableDocument::from_document(&doc);
        let edit = if trial % 2 == 0 {
            let a = rng.random_range(0..n);
            // never delete the whole document
            let end = (a + rng.random_range(0..4)).min(n - 1).min(a + n - 2);
            let cut = Span::new(a, end).unwrap();
            ed.delete(cut, rng.random_bool(0.5)).unwrap().1
        } else {
            let s = rng.random_range(0..ed.num_sentences());
            let offset = rng.random_range(0..=ed.sentence_len(s));
            let new: Vec<String> = (0..rng.random_range(1..4)).map(|i| format!("new{i}")).collect();
            if rng.random_bool(0.5) {
                ed.insert_tokens(s, offset, &new).unwrap()
            } else {
                ed.insert_sentence(rng.random_range(0..=ed.num_sentences()), new).unwrap()
            }
        };
        let after = ed.into_document("d").unwrap();
        for span in spans {
            let disjoint = match edit {
                Edit::Delete { at, len } => span.end < at || span.start >= at + len,
                Edit::Insert { at, .. } => span.end < at || span.start >= at,
            };
            checked += 1;
            match edit.shift(span) {
                Some(s) if after.span_tokens(&s) == doc.span_tokens(&span) => {}
                None if !disjoint => {}
                _ => violations += 1,
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations over {checked} spans"))?;

    // non-moved arguments keep their text under both swap strategies
    let corpus = random_corpus(77, 300, false);
    let mut swapped = 0;
    for strategy in [Strategy::SsPlain, Strategy::SsVerbose] {
        let (out, _) = augment_corpus(&corpus, strategy, &AugmentConfig::default(), AugmentResources::default(), 9)
            .map_err(|e| e.to_string())?;
        let index = corpus.index();
        for inst in &out {
            let (doc, frame) = index[&(inst.source_doc_id.as_str(), inst.frame.event_id.as_str())];
            let moved = inst.moved_role.as_deref().unwrap();
            ensure(
                inst.document.span_text(&inst.frame.trigger) == doc.span_text(&frame.trigger),
                || "trigger text changed".into(),
            )?;
            for arg in &inst.frame.arguments {
                let orig = frame.arguments.iter().find(|a| a.role == arg.role).unwrap();
                ensure(inst.document.span_text(&arg.span) == doc.span_text(&orig.span), || {
                    format!("{} of {} changed text (moved {moved})", arg.role, inst.document.doc_id())
                })?;
            }
            swapped += 1;
        }
    }
    Ok(format!("10000 edits, {checked} spans, 0 violations; {swapped} swaps keep argument text"))
}

fn remapping() -> Check {
    let corpus = combined(&["synthetic.jsonl", "import_event.jsonl", "clinton.jsonl"]);
    let mut events = (0, 0);
    let mut args = (0, 0);
    for (doc, frame) in corpus.frames() {
        let (inst, report) = remap_spans(doc, frame, &doc.to_sentences(), Strategy::LlmRewrite, 0);
        events = (events.0 + report.events_mapped, events.1 + report.events_total);
        args = (args.0 + report.args_mapped, args.1 + report.args_total);
        let inst = inst.ok_or_else(|| format!("identity rewrite dropped {}", frame.event_id))?;
        ensure(inst.frame.arguments == frame.arguments && inst.frame.trigger == frame.trigger, || {
            format!("identity rewrite moved spans of {}", frame.event_id)
        })?;
    }
    ensure(events.0 == events.1 && args.0 == args.1, || format!("events {events:?}, arguments {args:?}"))?;

    let clinton = load("clinton.jsonl");
    let rewrites = Rewrites::load(&fixture("clinton_gpt3.jsonl")).map_err(|e| e.to_string())?;
    let resources = AugmentResources {
        chains: None,
        rewrites: Some(&rewrites),
    };
    let (out, report) = augment_corpus(&clinton, Strategy::LlmRewrite, &AugmentConfig::default(), resources, 0)
        .map_err(|e| e.to_string())?;
    ensure(out.len() == 1 && report.events_mapped == 1 && report.args_mapped == 2, || {
        format!("GPT-3 rewrite: {report:?}")
    })?;
    let inst = &out[0];
    let distances: Vec<isize> = inst
        .frame
        .arguments
        .iter()
        .map(|a| argument_distance(&inst.document, &inst.frame, &a.span).unwrap())
        .collect();
    ensure(distances.iter().all(|&d| d != 0), || format!("distances {distances:?}"))?;
    Ok(format!(
        "identity {}/{} events, {}/{} arguments; GPT-3 rewrite trigger + 2 arguments, distances {distances:?}",
        events.0, events.1, args.0, args.1
    ))
}

fn blend_schedule() -> Check {
    let tables = [
        (0.2, vec![100, 80, 60, 40, 20]),
        (0.4, vec![100, 60, 20, 0, 0]),
        (0.6, vec![100, 40, 0, 0, 0]),
    ];
    let extra: Vec<_> = {
        let c = random_corpus(5, 60, false);
        let all = corpus_template_questions(&c, &random_ontology(), &WhTable::builtin()).unwrap();
        all.into_iter().take(100).collect()
    };
    ensure(extra.len() == 100, || "not enough extra instances".into())?;
    for (alpha, want) in &tables {
        let s = plan(*alpha, 5, 0, 100, Decay::Linear).map_err(|e| e.to_string())?;
        ensure(&s.per_epoch == want, || format!("alpha {alpha}: {:?}", s.per_epoch))?;
        for seed in 0..100 {
            let first = epoch_set(&[], &extra, &s, 1, seed).map_err(|e| e.to_string())?;
            ensure(first == extra, || format!("alpha {alpha} seed {seed}: epoch 1 is not the full set"))?;
            let mut prev: Option<Vec<usize>> = None;
            for epoch in 1..=5 {
                let kept = s.retained(epoch, seed).unwrap();
                ensure(kept.len() == want[epoch - 1], || format!("alpha {alpha} epoch {epoch}: size {}", kept.len()))?;
                if let Some(p) = &prev {
                    ensure(kept.iter().all(|i| p.contains(i)), || {
                        format!("alpha {alpha} seed {seed}: epoch {epoch} not nested")
                    })?;
                }
                prev = Some(kept);
            }
        }
    }
    Ok("0.2 [100,80,60,40,20], 0.4 [100,60,20,0,0], 0.6 [100,40,0,0,0]; nested over 100 seeds".into())
}

fn lenient_mapping() -> Check {
    let corpus = load("import_event.jsonl");
    let (doc, frame) = corpus.frames().next().unwrap();
    let gold = frame.first_span_for("artifact").unwrap();
    ensure(doc.span_text(&Span::single(5)) == "oil" && gold == Span::single(24), || "fixture changed".into())?;
    ensure(lenient_match(doc, Some("oil"), Some(gold)), || "second occurrence of `oil` not matched".into())?;
    ensure(lenient_match(doc, Some("Bilal Erdogan"), frame.first_span_for("transporter")), || {
        "transporter not matched".into()
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let corpus = random_corpus(32, 200, false);
    let docs: Vec<&Document> = corpus.entries.iter().map(|e| &e.document).collect();
    let mut exact = 0;
    for _ in 0..1000 {
        let doc = docs[rng.random_range(0..docs.len())];
        let n = doc.num_tokens();
        let g = rng.random_range(0..n);
        let gold = Span::new(g, (g + rng.random_range(0..3)).min(n - 1)).unwrap();
        let pred = if rng.random_bool(0.5) {
            gold
        } else {
            let p = rng.random_range(0..n);
            Span::new(p, (p + rng.random_range(0..3)).min(n - 1)).unwrap()
        };
        if pred == gold {
            exact += 1;
            ensure(lenient_match(doc, Some(&doc.span_text(&pred)), Some(gold)), || {
                format!("exact prediction {pred:?} not lenient in {}", doc.doc_id())
            })?;
        }
    }
    Ok(format!("`oil` second occurrence matched; exact implies lenient on {exact} of 1000 random predictions"))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let cli = Cli::try_parse_from(std::iter::once("eaqa").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    run(cli, &mut out).map_err(|e| format!("{args:?}: {e}"))?;
    Ok(out)
}

fn pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let f = |n: &str| fixture(n).to_string_lossy().into_owned();
    let o = |n: &str| dir.join(n).to_string_lossy().into_owned();
    let (syn, ont, cl) = (f("synthetic.jsonl"), f("ontology.tsv"), f("clinton.jsonl"));
    let mut stdout = Vec::new();
    let steps: Vec<Vec<String>> = vec![
        vec!["convert", "--corpus", &syn, "--ontology", &ont, "--out", &o("qa.jsonl")],
        vec!["augment", "--corpus", &syn, "--strategy", "ss_plain", "--out", &o("aug_ss.jsonl"), "--report", &o("aug_ss_report.jsonl"), "--seed", "11"],
        vec!["augment", "--corpus", &syn, "--strategy", "ss_verbose", "--out", &o("aug_verbose.jsonl"), "--seed", "11"],
        vec!["augment", "--corpus", &cl, "--strategy", "cr_random", "--chains", &f("chains.jsonl"), "--out", &o("aug_cr.jsonl"), "--seed", "11"],
        vec!["augment", "--corpus", &cl, "--strategy", "llm_rewrite", "--rewrites", &f("clinton_gpt3.jsonl"), "--out", &o("aug_llm.jsonl")],
        vec!["convert", "--corpus", &o("aug_ss.jsonl"), "--ontology", &ont, "--out", &o("qa_aug.jsonl")],
        vec!["blend-plan", "--alpha", "0.4", "--base-file", &o("qa.jsonl"), "--extra-file", &o("qa_aug.jsonl"), "--out", &o("blend.jsonl"), "--seed", "11"],
        vec!["prompt", "--corpus", &syn, "--ontology", &ont, "--shots", "2", "--out", &o("prompts.jsonl"), "--seed", "11"],
        vec!["answer", "--corpus", &syn, "--ontology", &ont, "--instances", &o("qa.jsonl"), "--mock", "noisy", "--p-drop", "0.3", "--p-shift", "0.2", "--out", &o("preds.jsonl"), "--seed", "11"],
        vec!["score", "--corpus", &syn, "--ontology", &ont, "--predictions", &o("preds.jsonl"), "--out", &o("report.jsonl"), "--csv", &o("csv")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        stdout.extend(run_cli(&args)?);
    }
    let mut files = BTreeMap::new();
    files.insert("<stdout>".to_string(), stdout);
    for entry in walk(dir) {
        let rel = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        files.insert(rel, std::fs::read(&entry).unwrap());
    }
    Ok(files)
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn determinism() -> Check {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    ensure(first.keys().eq(second.keys()), || "different output files".into())?;
    for (name, bytes) in &first {
        ensure(&second[name] == bytes, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} outputs byte-identical across two runs", first.len()))
}

fn main() {
    let checks: Vec<Criterion> = vec![
        ("corpus statistics", corpus_statistics),
        ("question generation", question_generation),
        ("F1 property suite", f1_property_suite),
        ("augmentation counts", augmentation_counts),
        ("span-shift soundness", span_shift_soundness),
        ("remapping", remapping),
        ("blend schedule", blend_schedule),
        ("lenient mapping", lenient_mapping),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
