//! Subcommands. Each writing subcommand appends a stage to the run manifest
//! (`--manifest`, default `topiclab-manifest.json` in the working directory).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use topiclab::corpus::read_corpus;
use topiclab::diagnostics::{diagnose_model, emit_report, ModelDiagnostics, SearchResult};
use topiclab::evaluation::{write_label_table, write_records, write_tasks, Task};
use topiclab::{
    build_dtm, corpus_stats, dedupe, fit, gen_topic_intrusion, gen_word_intrusion, heldout_log_likelihood, label_export, search_k,
    DiagnosticsRow, DocTermMatrix, RawDocument, TopicModel, TopicScores,
};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::manifest::{RunManifest, StageRecord};
use crate::session::{load_model, load_tasks, score, SessionsFile};
use crate::store::read_responses;

pub const DEFAULT_MANIFEST: &str = "topiclab-manifest.json";
pub const DEFAULT_BIND: &str = "127.0.0.1:8787";

#[derive(Debug, Parser)]
#[command(name = "topiclab", version, about = "Seeded topic-model pipeline and intrusion-task coding service")]
pub struct Cli {
    /// Run config (TOML). Defaults apply when omitted.
    #[arg(long, global = true, env = "TOPICLAB_CONFIG")]
    pub config: Option<PathBuf>,
    /// Manifest to create or extend.
    #[arg(long, global = true, default_value = DEFAULT_MANIFEST)]
    pub manifest: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deduplicate, preprocess and build the document-term matrix.
    Prep {
        /// JSONL corpus with `id` and `text` per line.
        #[arg(long)]
        corpus: PathBuf,
        /// Binary document-term matrix to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write a readable `doc term count` export.
        #[arg(long)]
        text: Option<PathBuf>,
        /// Also write corpus statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Fit one model.
    Fit {
        #[arg(long)]
        dtm: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `fit.k`.
        #[arg(long)]
        k: Option<usize>,
        /// Overrides `fit.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit and score a grid of K.
    Searchk {
        #[arg(long)]
        dtm: PathBuf,
        /// Comma-separated K values; overrides `diagnostics.k_grid`.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score one fitted model: held-out likelihood, dispersion, coherence, exclusivity.
    Diagnose {
        #[arg(long)]
        dtm: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate word- and topic-intrusion tasks.
    Tasks {
        #[arg(long)]
        model: PathBuf,
        /// The raw corpus, for document text in topic tasks.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `tasks.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `tasks.topic_cases`.
        #[arg(long)]
        topic_cases: Option<usize>,
    },
    /// Run the coding service.
    Serve {
        /// Sessions file (TOML, one `[[session]]` table per session).
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long, env = "TOPICLAB_BIND", default_value = DEFAULT_BIND)]
        bind: SocketAddr,
    },
    /// Score a response log offline; prints JSON.
    Metrics {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        responses: PathBuf,
    },
    /// Export a labelling packet.
    Labels {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Packet as a JSONL record.
        #[arg(long)]
        out: PathBuf,
        /// Also write a plain-text table.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Print the manifest.
    Manifest {
        /// Re-hash every recorded file; exit 1 if any changed.
        #[arg(long)]
        verify: bool,
    },
}

/// Parses `args` and runs the subcommand. Returns the process exit code:
/// 0 on success, 2 on usage errors, 1 on any other failure (with one JSON
/// error line on stderr).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let stage = match cli.command {
        Command::Prep { corpus, out, text, stats } => prep(&config, &corpus, &out, text.as_deref(), stats.as_deref())?,
        Command::Fit { dtm, out, k, seed } => fit_cmd(&config, &dtm, &out, k, seed)?,
        Command::Searchk { dtm, k, out_dir } => searchk(&config, &dtm, k, &out_dir)?,
        Command::Diagnose { dtm, model, out_dir } => diagnose(&config, &dtm, &model, &out_dir)?,
        Command::Tasks { model, corpus, out, seed, topic_cases } => tasks(&config, &model, &corpus, &out, seed, topic_cases)?,
        Command::Labels { model, corpus, out, table } => labels(&config, &model, &corpus, &out, table.as_deref())?,
        Command::Serve { sessions, bind } => return serve(&sessions, bind).map(|_| 0),
        Command::Metrics { tasks, model, responses } => return metrics(&tasks, &model, &responses).map(|_| 0),
        Command::Manifest { verify } => return manifest(&cli.manifest, verify),
    };
    let mut m = RunManifest::load_or_new(&cli.manifest)?;
    m.record(stage);
    m.write(&cli.manifest)?;
    Ok(0)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::file(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(HarnessError::file(path))?))
}

fn read_raw(path: &Path) -> Result<Vec<RawDocument>> {
    let f = File::open(path).map_err(HarnessError::file(path))?;
    Ok(read_corpus(BufReader::new(f))?)
}

fn read_dtm(path: &Path) -> Result<DocTermMatrix> {
    let f = File::open(path).map_err(HarnessError::file(path))?;
    Ok(DocTermMatrix::read_binary(BufReader::new(f))?)
}

fn write_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::Io(e.into()))?;
    writeln!(w).map_err(HarnessError::file(path))?;
    w.flush().map_err(HarnessError::file(path))
}

fn write_model(path: &Path, model: &TopicModel) -> Result<()> {
    let mut w = create(path)?;
    model.write_json(&mut w)?;
    w.flush().map_err(HarnessError::file(path))
}

fn stage(name: &str, config: &RunConfig, params: serde_json::Value) -> Result<StageRecord> {
    Ok(StageRecord::new(name, config.digest()?, params))
}

fn prep(config: &RunConfig, corpus: &Path, out: &Path, text: Option<&Path>, stats: Option<&Path>) -> Result<StageRecord> {
    let started = Instant::now();
    let pre = config.preprocessor()?;
    let raw = read_raw(corpus)?;
    let n_raw = raw.len();
    let kept = dedupe(raw);
    let processed: Vec<_> = kept.iter().map(|d| pre.run(d)).collect();
    let (dtm, dropped) = build_dtm(&processed)?;
    let mut w = create(out)?;
    dtm.write_binary(&mut w).and_then(|_| w.flush()).map_err(HarnessError::file(out))?;

    let mut rec = stage(
        "prep",
        config,
        json!({"n_raw": n_raw, "n_duplicates": n_raw - kept.len(), "dropped_empty": dropped, "n_docs": dtm.n_docs(), "n_terms": dtm.n_terms()}),
    )?;
    rec.input("corpus", corpus)?.output("dtm", out)?;
    if let Some(p) = text {
        let mut w = create(p)?;
        dtm.write_text(&mut w).and_then(|_| w.flush()).map_err(HarnessError::file(p))?;
        rec.output("dtm_text", p)?;
    }
    if let Some(p) = stats {
        write_json_file(p, &corpus_stats(&dtm))?;
        rec.output("corpus_stats", p)?;
    }
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

fn fit_cmd(config: &RunConfig, dtm_path: &Path, out: &Path, k: Option<usize>, seed: Option<u64>) -> Result<StageRecord> {
    let started = Instant::now();
    let dtm = read_dtm(dtm_path)?;
    let mut hyper = config.fit.hyperparams(k.unwrap_or(config.fit.k));
    if let Some(s) = seed {
        hyper.seed = s;
    }
    let model = fit(&dtm, &hyper)?;
    write_model(out, &model)?;
    let params = serde_json::to_value(&hyper).map_err(|e| HarnessError::Io(e.into()))?;
    let mut rec = stage("fit", config, params)?;
    rec.input("dtm", dtm_path)?.output("model", out)?.seed("fit", hyper.seed);
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

fn searchk(config: &RunConfig, dtm_path: &Path, k: Option<Vec<usize>>, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let dtm = read_dtm(dtm_path)?;
    let grid = k.unwrap_or_else(|| config.diagnostics.k_grid.clone());
    let template = config.fit.template();
    let results = search_k(&dtm, &grid, &template, &config.heldout)?;
    let (rows, topics) = emit_report(&results, out_dir, config.diagnostics.format)?;
    let mut rec = stage("searchk", config, json!({"k": results.iter().map(|r| r.row.k).collect::<Vec<_>>(), "template": template}))?;
    rec.input("dtm", dtm_path)?.output("searchk_diagnostics", &rows)?.output("searchk_topic_scores", &topics)?;
    rec.seed("base", template.seed).seed("heldout", config.heldout.seed);
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

/// Held-out likelihood refits the model's hyperparameters on the training
/// split; the other scores use the given model on the full matrix. The
/// written table carries `wall_time_ms = 0` so that reruns compare equal.
fn diagnose(config: &RunConfig, dtm_path: &Path, model_path: &Path, out_dir: &Path) -> Result<StageRecord> {
    let started = Instant::now();
    let dtm = read_dtm(dtm_path)?;
    let model = load_model(model_path)?;
    let ModelDiagnostics { k, residual_dispersion, mean_coherence, mean_exclusivity, topics } =
        diagnose_model(&model, &dtm, config.diagnostics.top_words, config.diagnostics.frex_weight)?;
    let held = heldout_log_likelihood(&dtm, model.hyper(), &config.heldout)?;
    let result = SearchResult {
        row: DiagnosticsRow { k, heldout_llpw: held.llpw, residual_dispersion, mean_coherence, mean_exclusivity, wall_time_ms: 0 },
        topics: TopicScores { coherence: topics.coherence, exclusivity: topics.exclusivity },
    };
    let (rows, topic_rows) = emit_report(&[result], out_dir, config.diagnostics.format)?;
    let mut rec = stage(
        "diagnose",
        config,
        json!({"top_words": config.diagnostics.top_words, "frex_weight": config.diagnostics.frex_weight, "heldout": config.heldout, "heldout_docs": held.n_docs, "heldout_tokens": held.n_tokens}),
    )?;
    rec.input("dtm", dtm_path)?.input("model", model_path)?;
    rec.output("diagnostics", &rows)?.output("topic_scores", &topic_rows)?;
    rec.seed("heldout", config.heldout.seed).seed("refit", model.hyper().seed);
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

fn tasks(
    config: &RunConfig,
    model_path: &Path,
    corpus: &Path,
    out: &Path,
    seed: Option<u64>,
    topic_cases: Option<usize>,
) -> Result<StageRecord> {
    let started = Instant::now();
    let model = load_model(model_path)?;
    let raw = read_raw(corpus)?;
    let seed = seed.unwrap_or(config.tasks.seed);
    let n_cases = topic_cases.unwrap_or(config.tasks.topic_cases);
    let mut all: Vec<Task> = gen_word_intrusion(&model, seed)?.into_iter().map(Task::WordIntrusion).collect();
    let n_word = all.len();
    all.extend(gen_topic_intrusion(&model, &raw, n_cases, seed)?.into_iter().map(Task::TopicIntrusion));
    let mut w = create(out)?;
    write_tasks(&all, &mut w)?;
    let mut rec = stage("tasks", config, json!({"word_tasks": n_word, "topic_tasks": all.len() - n_word}))?;
    rec.input("model", model_path)?.input("corpus", corpus)?.output("tasks", out)?.seed("tasks", seed);
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

fn labels(config: &RunConfig, model_path: &Path, corpus: &Path, out: &Path, table: Option<&Path>) -> Result<StageRecord> {
    let started = Instant::now();
    let model = load_model(model_path)?;
    let raw = read_raw(corpus)?;
    let l = &config.labels;
    let packet = label_export(&model, &raw, l.n_topics, l.n_words, l.n_docs)?;
    let mut w = create(out)?;
    write_records(std::slice::from_ref(&packet), &mut w)?;
    let mut rec = stage("labels", config, json!({"n_topics": l.n_topics, "n_words": l.n_words, "n_docs": l.n_docs}))?;
    rec.input("model", model_path)?.input("corpus", corpus)?.output("labels", out)?;
    if let Some(p) = table {
        let mut w = create(p)?;
        write_label_table(&packet, &mut w).and_then(|_| w.flush()).map_err(HarnessError::file(p))?;
        rec.output("label_table", p)?;
    }
    rec.wall_time_ms = started.elapsed().as_millis() as u64;
    Ok(rec)
}

fn serve(sessions: &Path, bind: SocketAddr) -> Result<()> {
    let file = SessionsFile::load(sessions)?;
    let (state, reports) = crate::service::AppState::from_file(&file)?;
    for (id, r) in reports {
        if r.quarantined > 0 {
            eprintln!("{}", json!({"warning": "quarantined", "session": id, "records": r.quarantined}));
        }
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = crate::service::bind(bind).await.map_err(HarnessError::Io)?;
        eprintln!("{}", json!({"listening": listener.local_addr()?.to_string()}));
        crate::service::serve(listener, state).await?;
        Ok(())
    })
}

fn metrics(tasks_path: &Path, model_path: &Path, responses: &Path) -> Result<()> {
    let tasks = load_tasks(tasks_path)?;
    let model = load_model(model_path)?;
    let (records, skipped) = read_responses(responses)?;
    if skipped > 0 {
        eprintln!("{}", json!({"warning": "unreadable_records", "records": skipped}));
    }
    let report = score(&tasks, &records, &model)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.into()))?);
    Ok(())
}

fn manifest(path: &Path, verify: bool) -> Result<i32> {
    let m = RunManifest::read(path)?;
    if !verify {
        println!("{}", serde_json::to_string_pretty(&m).map_err(|e| HarnessError::Io(e.into()))?);
        return Ok(0);
    }
    let changed = m.verify();
    println!("{}", json!({"ok": changed.is_empty(), "changed": changed}));
    Ok(if changed.is_empty() { 0 } else { 1 })
}
