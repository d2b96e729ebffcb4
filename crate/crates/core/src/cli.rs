//! Command-line interface. Every command reads and writes JSON-lines files
//! whose first line is a manifest recording the tool version, the seed and
//! digests of the inputs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::augmentation::{
    augment_corpus, build_rewrite_prompt, AugmentConfig, AugmentResources, CorefChains, Rewrites, Strategy,
};
use crate::backend::{
    build_requests, to_predictions, Answerer, FirstTokenAnswerer, HttpAnswerer, MockKind, NoAnswerAnswerer,
    NoisyAnswerer, OracleAnswerer,
};
use crate::blending::{epoch_set, merge, plan, Decay};
use crate::corpus::{corpus_stats, load_corpus, Corpus, LoadOptions, Ontology, UnknownPolicy};
use crate::error::{Error, Result};
use crate::evaluation::{confusion_csv, render_text, role_csv, score, EvalReport, PredictionSet};
use crate::io::{self, Manifest};
use crate::prompting::{build_prompt, lenient_predictions, GeneratedAnswers, PromptConfig, DEFAULT_INSTRUCTION};
use crate::question_gen::{
    corpus_template_questions, ingest_external_qa, ingest_transformer_questions, QaInstance, WhTable,
};

pub const ENDPOINT_ENV: &str = "EAQA_ENDPOINT";

#[derive(Debug, Parser)]
#[command(name = "eaqa", version, about = "Event-argument extraction as question answering")]
pub struct Cli {
    /// Seed for every random choice; recorded in output manifests.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn annotations into question-answer instances.
    Convert(ConvertArgs),
    /// Document, event and argument counts of a corpus.
    Stats(StatsArgs),
    /// Create inter-sentential training examples.
    Augment(AugmentArgs),
    /// Per-epoch schedule for blending additional instances.
    BlendPlan(BlendPlanArgs),
    /// Zero- or few-shot prompts asking all role questions at once.
    Prompt(PromptArgs),
    /// Collect answers from a server, a mock, or generated text.
    Answer(AnswerArgs),
    /// Exact-match scoring of predictions against gold annotations.
    Score(ScoreArgs),
    /// Render a saved score report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// RAMS-format JSON-lines corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Ontology file: `event_type<TAB>role<TAB>role...` per line.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Drop events and arguments the ontology does not license instead of failing.
    #[arg(long)]
    pub skip_unknown: bool,
    /// Remove `evtNNNargNN` prefixes from role names.
    #[arg(long)]
    pub strip_role_prefix: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    /// Role to wh-word table (`role=wh` lines); the built-in table otherwise.
    #[arg(long)]
    pub wh_table: Option<PathBuf>,
    /// Generated questions to merge: JSON lines `{doc_id, event_id, role, question}`.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    /// External QA pairs to merge: JSON lines `{context, question, answer}`.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long, conflicts_with = "rams_dir")]
    pub corpus: Option<PathBuf>,
    /// Directory holding `<split>.jsonlines` files of the RAMS release.
    #[arg(long, requires = "split")]
    pub rams_dir: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    #[arg(long)]
    pub strip_role_prefix: bool,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    /// One of ss_plain, ss_verbose, cr_random, cr_meaningful, llm_paraphrase, llm_rewrite.
    #[arg(long)]
    pub strategy: String,
    /// Coreference chains, required by cr_* strategies.
    #[arg(long)]
    pub chains: Option<PathBuf>,
    /// Rewritten texts, required by llm_* strategies.
    #[arg(long)]
    pub rewrites: Option<PathBuf>,
    /// Keep the original argument occurrence in ss_verbose.
    #[arg(long)]
    pub verbose_keep_original: bool,
    /// Write rewriting prompts for every event here instead of augmenting.
    #[arg(long)]
    pub emit_rewrite_prompts: bool,
    /// Mapping report (counts and drops) as JSON lines.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BlendPlanArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    /// Number of additional instances, when no instance file is given.
    #[arg(long, required_unless_present = "extra_file")]
    pub extra: Option<usize>,
    #[arg(long)]
    pub base: Option<usize>,
    /// Base QA instances; with `--extra-file` enables the per-epoch id manifest.
    #[arg(long)]
    pub base_file: Option<PathBuf>,
    #[arg(long)]
    pub extra_file: Option<PathBuf>,
    /// linear or geometric.
    #[arg(long, default_value = "linear")]
    pub decay: String,
    /// Per-epoch instance ids as JSON lines `{epoch, instance_ids}`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub wh_table: Option<PathBuf>,
    /// Exemplars per prompt.
    #[arg(long, default_value_t = 0)]
    pub shots: usize,
    /// Corpus to draw exemplars from; the input corpus otherwise.
    #[arg(long)]
    pub shot_pool: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_INSTRUCTION)]
    pub instruction: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnswerArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    /// QA instances written by `convert`.
    #[arg(long, required_unless_present = "generated")]
    pub instances: Option<PathBuf>,
    /// Answer server base URL.
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// oracle, no_answer, first_token or noisy.
    #[arg(long)]
    pub mock: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub p_drop: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p_shift: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Generated answers `{doc_id, event_id, answers}` to map leniently.
    #[arg(long, conflicts_with_all = ["instances", "mock"])]
    pub generated: Option<PathBuf>,
    #[arg(long)]
    pub wh_table: Option<PathBuf>,
    /// Predictions as JSON lines `{doc_id, event_id, role, span}`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub input: CorpusArgs,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Baseline predictions for the %ΔF1 column.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Report as JSON lines (manifest, then the report).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-role and confusion CSV files.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report written by `score --out`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 15)]
    pub top_k: usize,
}

fn options(args: &CorpusArgs) -> LoadOptions {
    LoadOptions {
        on_unknown: if args.skip_unknown {
            UnknownPolicy::WarnSkip
        } else {
            UnknownPolicy::Reject
        },
        strip_role_prefix: args.strip_role_prefix,
    }
}

struct Loaded {
    corpus: Corpus,
    ontology: Option<Ontology>,
    manifest: Manifest,
}

fn load(args: &CorpusArgs, command: &str, seed: Option<u64>) -> Result<Loaded> {
    let ontology = args.ontology.as_deref().map(Ontology::load).transpose()?;
    let corpus = load_corpus(&args.corpus, ontology.as_ref(), &options(args))?;
    let mut manifest = Manifest::new(command, seed).with_input("corpus", &args.corpus)?;
    if let Some(p) = &args.ontology {
        manifest = manifest.with_input("ontology", p)?;
    }
    Ok(Loaded {
        corpus,
        ontology,
        manifest,
    })
}

fn require_ontology(loaded: &Loaded) -> Result<&Ontology> {
    loaded
        .ontology
        .as_ref()
        .ok_or_else(|| Error::MissingResource("--ontology is required for this command".into()))
}

fn wh_table(path: Option<&Path>, manifest: Manifest) -> Result<(WhTable, Manifest)> {
    match path {
        Some(p) => Ok((WhTable::load(p)?, manifest.with_input("wh_table", p)?)),
        None => Ok((WhTable::builtin(), manifest)),
    }
}

fn text_with_manifest(manifest: &Manifest, body: &str) -> String {
    format!("# manifest: {}\n{}", manifest.to_json_line(), body)
}

/// Run a parsed command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let seed = cli.seed;
    let w = |out: &mut dyn Write, text: &str| {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e))
    };
    match cli.command {
        Command::Convert(args) => {
            let loaded = load(&args.input, "convert", None)?;
            let ontology = require_ontology(&loaded)?;
            let (wh, mut manifest) = wh_table(args.wh_table.as_deref(), loaded.manifest.clone())?;
            let mut sets = vec![corpus_template_questions(&loaded.corpus, ontology, &wh)?];
            if let Some(p) = &args.questions {
                sets.push(ingest_transformer_questions(p, &loaded.corpus)?);
                manifest = manifest.with_input("questions", p)?;
            }
            if let Some(p) = &args.external {
                sets.push(ingest_external_qa(p)?.instances);
                manifest = manifest.with_input("external", p)?;
            }
            let sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
            let (merged, duplicates) = merge(&sets);
            io::write_jsonl(&args.out, &manifest, &merged)?;
            w(
                out,
                &format!(
                    "wrote {} instances (sources {:?}, {} duplicates removed)\n",
                    merged.len(),
                    sizes,
                    duplicates
                ),
            )
        }
        Command::Stats(args) => {
            let path = match (&args.corpus, &args.rams_dir, &args.split) {
                (Some(p), _, _) => p.clone(),
                (None, Some(dir), Some(split)) => rams_split(dir, split)?,
                _ => {
                    return Err(Error::InvalidArgument(
                        "give --corpus, or --rams-dir with --split".into(),
                    ))
                }
            };
            let ontology = args.ontology.as_deref().map(Ontology::load).transpose()?;
            let options = LoadOptions {
                strip_role_prefix: args.strip_role_prefix,
                ..Default::default()
            };
            let corpus = load_corpus(&path, ontology.as_ref(), &options)?;
            let stats = corpus_stats(&corpus)?;
            if args.json {
                return w(out, &format!("{}\n", serde_json::to_string(&stats)?));
            }
            let (num, den) = stats.args_per_event_ratio();
            w(
                out,
                &format!(
                    "documents   {}\nevents      {}\narguments   {}\nintra       {}\ninter       {}\nargs/event  {:.2} ({}/{})\n",
                    stats.n_documents,
                    stats.n_events,
                    stats.n_arguments,
                    stats.n_intra,
                    stats.n_inter,
                    stats.args_per_event(),
                    num,
                    den
                ),
            )
        }
        Command::Augment(args) => {
            let strategy: Strategy = args.strategy.parse()?;
            let loaded = load(&args.input, "augment", Some(seed))?;
            let mut manifest = loaded.manifest.clone();
            if args.emit_rewrite_prompts {
                let mut prompts = Vec::new();
                for (doc, frame) in loaded.corpus.frames() {
                    if frame.arguments.is_empty() {
                        continue;
                    }
                    prompts.push(serde_json::json!({
                        "doc_id": doc.doc_id(),
                        "event_id": frame.event_id,
                        "prompt": build_rewrite_prompt(doc, frame)?,
                    }));
                }
                io::write_jsonl(&args.out, &manifest, &prompts)?;
                return w(out, &format!("wrote {} rewrite prompts\n", prompts.len()));
            }
            let chains = match &args.chains {
                Some(p) => {
                    manifest = manifest.with_input("chains", p)?;
                    Some(CorefChains::load(p, &loaded.corpus)?)
                }
                None => None,
            };
            let rewrites = match &args.rewrites {
                Some(p) => {
                    manifest = manifest.with_input("rewrites", p)?;
                    Some(Rewrites::load(p)?)
                }
                None => None,
            };
            let config = AugmentConfig {
                verbose_keep_original: args.verbose_keep_original,
            };
            let resources = AugmentResources {
                chains: chains.as_ref(),
                rewrites: rewrites.as_ref(),
            };
            let (instances, report) = augment_corpus(&loaded.corpus, strategy, &config, resources, seed)?;
            io::write_jsonl(&args.out, &manifest, instances.iter().map(|i| i.to_record()))?;
            if let Some(p) = &args.report {
                io::write_jsonl(p, &manifest, [&report])?;
            }
            w(
                out,
                &format!(
                    "{strategy}: {} instances; events mapped {}/{} ({:.1}%), arguments mapped {}/{} ({:.1}%), {} drops\n",
                    instances.len(),
                    report.events_mapped,
                    report.events_total,
                    100.0 * report.event_rate(),
                    report.args_mapped,
                    report.args_total,
                    100.0 * report.argument_rate(),
                    report.drops.len()
                ),
            )
        }
        Command::BlendPlan(args) => {
            let decay: Decay = args.decay.parse()?;
            let mut manifest = Manifest::new("blend-plan", Some(seed));
            let base: Option<Vec<QaInstance>> = match &args.base_file {
                Some(p) => {
                    manifest = manifest.with_input("base", p)?;
                    Some(io::read_jsonl(p)?)
                }
                None => None,
            };
            let extra: Option<Vec<QaInstance>> = match &args.extra_file {
                Some(p) => {
                    manifest = manifest.with_input("extra", p)?;
                    Some(io::read_jsonl(p)?)
                }
                None => None,
            };
            let n_extra = extra.as_ref().map(Vec::len).or(args.extra).unwrap_or(0);
            let n_base = base.as_ref().map(Vec::len).or(args.base).unwrap_or(0);
            let schedule = plan(args.alpha, args.epochs, n_base, n_extra, decay)?;
            let mut table = String::from("epoch,retained\n");
            for (e, n) in schedule.per_epoch.iter().enumerate() {
                table.push_str(&format!("{},{}\n", e + 1, n));
            }
            if let Some(p) = &args.out {
                let mut rows = Vec::with_capacity(schedule.n_epochs);
                for epoch in 1..=schedule.n_epochs {
                    let ids: Vec<String> = match (&base, &extra) {
                        (Some(b), Some(x)) => epoch_set(b, x, &schedule, epoch, seed)?
                            .into_iter()
                            .map(|i| i.instance_id)
                            .collect(),
                        (None, Some(x)) => schedule
                            .retained(epoch, seed)?
                            .into_iter()
                            .map(|i| x[i].instance_id.clone())
                            .collect(),
                        _ => schedule
                            .retained(epoch, seed)?
                            .into_iter()
                            .map(|i| format!("extra:{i}"))
                            .collect(),
                    };
                    rows.push(serde_json::json!({"epoch": epoch, "retained": schedule.per_epoch[epoch - 1], "instance_ids": ids}));
                }
                io::write_jsonl(p, &manifest, &rows)?;
            }
            w(out, &table)
        }
        Command::Prompt(args) => {
            let loaded = load(&args.input, "prompt", Some(seed))?;
            let ontology = require_ontology(&loaded)?;
            let (wh, mut manifest) = wh_table(args.wh_table.as_deref(), loaded.manifest.clone())?;
            let pool_corpus = match &args.shot_pool {
                Some(p) => {
                    manifest = manifest.with_input("shot_pool", p)?;
                    Some(load_corpus(p, Some(ontology), &options(&args.input))?)
                }
                None => None,
            };
            let pool: Vec<_> = pool_corpus.as_ref().unwrap_or(&loaded.corpus).frames().collect();
            let config = PromptConfig {
                instruction: args.instruction.clone(),
                n_shots: args.shots,
            };
            let mut bundles = Vec::new();
            for (doc, frame) in loaded.corpus.frames() {
                bundles.push(build_prompt(doc, frame, ontology, &wh, &pool, &config, seed)?);
            }
            io::write_jsonl(&args.out, &manifest, &bundles)?;
            w(out, &format!("wrote {} prompts\n", bundles.len()))
        }
        Command::Answer(args) => {
            let loaded = load(&args.input, "answer", Some(seed))?;
            let mut manifest = loaded.manifest.clone();
            if let Some(p) = &args.generated {
                let ontology = require_ontology(&loaded)?;
                let (wh, m) = wh_table(args.wh_table.as_deref(), manifest.with_input("generated", p)?)?;
                manifest = m;
                let generated: Vec<GeneratedAnswers> = io::read_jsonl(p)?;
                let index = loaded.corpus.index();
                let mut predictions = Vec::new();
                for g in &generated {
                    let (doc, frame) = index.get(&(g.doc_id.as_str(), g.event_id.as_str())).ok_or_else(|| {
                        Error::DanglingReference(format!(
                            "answers for unknown event `{}` of document `{}`",
                            g.event_id, g.doc_id
                        ))
                    })?;
                    let roles: Vec<String> = crate::question_gen::template_questions(doc, frame, ontology, &wh)?
                        .into_iter()
                        .filter_map(|q| q.role)
                        .collect();
                    if g.answers.len() != roles.len() {
                        return Err(Error::Malformed(format!(
                            "{} answers for {} questions of event `{}`",
                            g.answers.len(),
                            roles.len(),
                            g.event_id
                        )));
                    }
                    predictions.extend(lenient_predictions(doc, frame, &roles, &g.answers));
                }
                io::write_jsonl(&args.out, &manifest, &predictions)?;
                return w(out, &format!("wrote {} predictions\n", predictions.len()));
            }
            let path = args.instances.as_ref().expect("required by clap");
            manifest = manifest.with_input("instances", path)?;
            let instances: Vec<QaInstance> = io::read_jsonl(path)?;
            let requests = build_requests(&loaded.corpus, &instances)?;
            let answerer: Box<dyn Answerer> = match (&args.mock, &args.endpoint) {
                (Some(name), _) => match name.parse::<MockKind>()? {
                    MockKind::Oracle => Box::new(OracleAnswerer::new(&instances)),
                    MockKind::NoAnswer => Box::new(NoAnswerAnswerer),
                    MockKind::FirstToken => Box::new(FirstTokenAnswerer),
                    MockKind::Noisy => Box::new(NoisyAnswerer::new(&instances, args.p_drop, args.p_shift, seed)?),
                },
                (None, Some(endpoint)) => Box::new(HttpAnswerer {
                    endpoint: endpoint.clone(),
                    batch_size: args.batch_size,
                    retries: args.retries,
                    backoff: Duration::from_millis(200),
                    timeout: Duration::from_secs(args.timeout),
                }),
                (None, None) => {
                    return Err(Error::InvalidArgument(format!(
                        "give --mock, --endpoint or {ENDPOINT_ENV}"
                    )))
                }
            };
            let responses = answerer.answer_batch(&requests)?;
            if responses.len() != requests.len() {
                return Err(Error::Protocol(format!(
                    "{} responses for {} requests",
                    responses.len(),
                    requests.len()
                )));
            }
            let predictions = to_predictions(&instances, &responses);
            io::write_jsonl(&args.out, &manifest, &predictions)?;
            w(out, &format!("wrote {} predictions\n", predictions.len()))
        }
        Command::Score(args) => {
            let loaded = load(&args.input, "score", None)?;
            let manifest = loaded.manifest.clone().with_input("predictions", &args.predictions)?;
            let report = score(
                &loaded.corpus,
                &PredictionSet::load(&args.predictions)?,
                loaded.ontology.as_ref(),
            )?;
            let base = match &args.baseline {
                Some(p) => Some(score(&loaded.corpus, &PredictionSet::load(p)?, loaded.ontology.as_ref())?),
                None => None,
            };
            if let Some(p) = &args.out {
                io::write_jsonl(p, &manifest, [&report])?;
            }
            if let Some(dir) = &args.csv {
                write_csv(dir, &manifest, &report, args.top_k)?;
            }
            w(out, &render_text(&report, base.as_ref()))
        }
        Command::Report(args) => {
            let report = read_report(&args.report)?;
            let base = args.baseline.as_deref().map(read_report).transpose()?;
            if let Some(dir) = &args.csv {
                let manifest = Manifest::new("report", None).with_input("report", &args.report)?;
                write_csv(dir, &manifest, &report, args.top_k)?;
            }
            w(out, &render_text(&report, base.as_ref()))
        }
    }
}

fn rams_split(dir: &Path, split: &str) -> Result<PathBuf> {
    for ext in ["jsonlines", "jsonl"] {
        let p = dir.join(format!("{split}.{ext}"));
        if p.exists() {
            return Ok(p);
        }
    }
    Err(Error::io(
        dir.join(format!("{split}.jsonlines")),
        std::io::Error::new(std::io::ErrorKind::NotFound, "split file not found"),
    ))
}

fn read_report(path: &Path) -> Result<EvalReport> {
    let mut reports: Vec<EvalReport> = io::read_jsonl(path)?;
    match reports.len() {
        1 => Ok(reports.remove(0)),
        n => Err(Error::Malformed(format!(
            "{}: expected one report, found {n}",
            path.display()
        ))),
    }
}

fn write_csv(dir: &Path, manifest: &Manifest, report: &EvalReport, top_k: usize) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_text(&dir.join("roles.csv"), &text_with_manifest(manifest, &role_csv(report)))?;
    io::write_text(
        &dir.join("confusion.csv"),
        &text_with_manifest(manifest, &confusion_csv(report, top_k)),
    )
}

/// Exit status for a failed command: 2 for I/O and transport failures,
/// 1 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        2
    } else {
        1
    }
}
