use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use proofforge::config::Config;
use proofforge::contextkb::{build_context, sample_for_category, BashSandbox, ContextStore};
use proofforge::corpus::{frame_solve_as_prove, ingest_corpus, Category};
use proofforge::evalmetrics::{
    beq_check, gold_trees, load_beq_records, load_candidates, load_gold, load_records, merge_beq, score_candidates,
    BeqRecord, Normalization, Report, ReportFormat, DEFAULT_THRESHOLD,
};
use proofforge::formalize::{run_ensemble, validity, FinalStatus};
use proofforge::hub::{self, AppState, Event, HubStore};
use proofforge::prover::{load_tasks, pass_at_1, run_attempts, ProverConfig};

#[derive(Parser)]
#[command(name = "proofforge", version, about = "Formalize, prove and score olympiad problems in Lean 4")]
struct Cli {
    /// Settings file.
    #[arg(long, global = true, default_value = "proofforge.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Category documentation packs.
    #[command(subcommand)]
    Context(ContextCmd),
    #[command(subcommand)]
    Formalize(FormalizeCmd),
    #[command(subcommand)]
    Prove(ProveCmd),
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// Run the annotation API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        store: PathBuf,
    },
    /// Print verified annotations as JSONL.
    Export {
        #[arg(long)]
        store: PathBuf,
    },
}

#[derive(Subcommand)]
enum ContextCmd {
    /// Let the documentation agent explore a library checkout.
    Build {
        #[arg(long)]
        category: Category,
        #[arg(long)]
        repo: PathBuf,
        /// Corpus the example problems are sampled from.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long, default_value_t = 40)]
        budget: usize,
        #[arg(long, default_value_t = 0.25)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Store an existing documentation file as a pack.
    Import {
        file: PathBuf,
        #[arg(long)]
        category: Option<Category>,
    },
}

#[derive(Subcommand)]
enum FormalizeCmd {
    Run {
        #[arg(long)]
        corpus: PathBuf,
        /// Models file; the settings file's list is used when absent.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ProveCmd {
    Run {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10)]
        turns: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also record attempts in this hub store.
        #[arg(long)]
        store: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GoldArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Directory of candidate `*.jsonl` files.
    #[arg(long)]
    candidates: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCmd {
    /// Score candidates against gold and write comparison records.
    Gted {
        #[command(flatten)]
        input: GoldArgs,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "sum-of-sizes")]
        normalization: NormArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prove each compiling candidate equivalent to gold in both directions.
    Beq {
        #[command(flatten)]
        input: GoldArgs,
        #[arg(long)]
        prover: String,
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fold comparison records into per-model rows.
    Report {
        #[arg(long, value_enum)]
        format: ReportFormat,
        #[arg(long)]
        records: PathBuf,
        /// Verdicts from `metrics beq`, merged into the records.
        #[arg(long)]
        beq: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_delimiter = ',')]
        heatmap: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum NormArg {
    SumOfSizes,
    MaxSize,
}

fn load_config(path: &Path) -> Result<Config> {
    if path.exists() {
        Ok(Config::load(path)?)
    } else {
        tracing::debug!(path = %path.display(), "no settings file, using defaults");
        Ok(Config::default())
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for it in items {
        serde_json::to_writer(&mut f, it)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

fn file_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn context(cfg: &Config, cmd: ContextCmd) -> Result<()> {
    let dir = cfg.context_dir.clone().unwrap_or_else(|| PathBuf::from("context"));
    let store = ContextStore::open(dir)?;
    match cmd {
        ContextCmd::Build {
            category,
            repo,
            corpus,
            agent,
            budget,
            ratio,
            seed,
        } => {
            let problems = ingest_corpus(&corpus)?;
            let samples = sample_for_category(&problems, category, ratio, seed)?;
            let scratch = tempfile::tempdir()?;
            let sandbox = BashSandbox::new(repo, scratch.path());
            let episode = build_context(category, &samples, &cfg.gateway()?, &cfg.model(&agent)?, &sandbox, budget)?;
            store.put(&episode.pack)?;
            store.put_episode(category, &episode.calls)?;
            println!("{}: {} tool calls, {} bytes", category.slug(), episode.calls.len(), episode.pack.body.len());
        }
        ContextCmd::Import { file, category } => {
            let pack = store.import_file(&file, category)?;
            println!("{}: imported {} bytes", pack.category.slug(), pack.body.len());
        }
    }
    Ok(())
}

fn formalize(mut cfg: Config, corpus: &Path, models: Option<&Path>, out: &Path) -> Result<()> {
    if let Some(m) = models {
        cfg.load_models(m)?;
    }
    let ensemble = cfg.ensemble()?;
    if ensemble.is_empty() {
        bail!("no models configured");
    }
    let summarizer = cfg.summarizer()?;
    let gateway = cfg.gateway()?;
    let validator = cfg.validator()?;
    let problems = ingest_corpus(corpus)?
        .iter()
        .map(frame_solve_as_prove)
        .collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(out)?;
    let store = HubStore::open(out.join("store"))?;
    let contexts = cfg.context_dir.as_ref().map(ContextStore::open).transpose()?;
    let mut by_model: BTreeMap<String, Vec<_>> = BTreeMap::new();
    let mut summaries = Vec::new();
    for p in &problems {
        let pack = match (&contexts, p.category) {
            (Some(s), Some(cat)) if cfg.formalize.use_context => Some(s.get(cat)?),
            _ => None,
        };
        let outcome = run_ensemble(p, &ensemble, pack.as_ref(), &summarizer, &gateway, &validator, &store, &cfg.formalize)?;
        let valid = outcome.candidates.iter().filter(|c| c.final_status == FinalStatus::Valid).count();
        println!("{}: {valid}/{} valid", p.id, outcome.candidates.len());
        for c in outcome.candidates {
            by_model.entry(c.model.clone()).or_default().push(c);
        }
        summaries.push(outcome.summary);
    }
    let cdir = out.join("candidates");
    std::fs::create_dir_all(&cdir)?;
    for (model, cands) in &by_model {
        write_jsonl(&cdir.join(format!("{}.jsonl", file_safe(model))), cands)?;
    }
    write_jsonl(&out.join("summaries.jsonl"), &summaries)?;
    let all: Vec<_> = by_model.values().flatten().cloned().collect();
    let v = validity(&all);
    for (model, t) in &v.per_model {
        println!("{model}: {}/{} valid ({:.1}%)", t.valid, t.total, t.rate() * 100.0);
    }
    println!("any model: {}/{} problems ({:.1}%)", v.ensemble.valid, v.ensemble.total, v.ensemble.rate() * 100.0);
    std::fs::write(out.join("validity.json"), serde_json::to_string_pretty(&v)?)?;
    Ok(())
}

fn prove(cfg: &Config, tasks: &Path, model: &str, turns: usize, out: &Path, store: Option<&Path>) -> Result<()> {
    let tasks = load_tasks(tasks)?;
    let spec = cfg.model(model)?;
    let attempts = run_attempts(
        &tasks,
        &spec,
        &cfg.gateway()?,
        &cfg.validator()?,
        &ProverConfig {
            max_turns: turns,
            ..cfg.prover
        },
    )?;
    std::fs::create_dir_all(out)?;
    for a in &attempts {
        let path = out.join(format!("{}.{}.json", file_safe(&a.task_id), file_safe(&a.model)));
        std::fs::write(&path, serde_json::to_string_pretty(a)?)?;
    }
    if let Some(dir) = store {
        let hub = HubStore::open(dir)?;
        for a in &attempts {
            hub.append(Event::AttemptAdded(a.clone()))?;
        }
    }
    let score = pass_at_1(&attempts)?;
    std::fs::write(out.join("pass_at_1.json"), serde_json::to_string_pretty(&score)?)?;
    println!("{model} pass@1: {score}");
    Ok(())
}

fn metrics(cfg: &Config, cmd: MetricsCmd) -> Result<()> {
    match cmd {
        MetricsCmd::Gted {
            input,
            threshold,
            normalization,
            out,
        } => {
            let gold = gold_trees(&load_gold(&input.gold)?)?;
            let cands = load_candidates(&input.candidates)?;
            let norm = match normalization {
                NormArg::SumOfSizes => Normalization::SumOfSizes,
                NormArg::MaxSize => Normalization::MaxSize,
            };
            let records = score_candidates(&cands, &gold, &BTreeMap::new(), norm);
            if let Some(path) = out {
                write_jsonl(&path, &records)?;
            }
            print!("{}", Report::build(&records, threshold, &[])?.render(ReportFormat::Csv));
        }
        MetricsCmd::Beq {
            input,
            prover,
            budget,
            out,
        } => {
            let gold: BTreeMap<String, String> =
                load_gold(&input.gold)?.into_iter().map(|g| (g.problem_id, g.theorem_code)).collect();
            let cands = load_candidates(&input.candidates)?;
            let spec = cfg.model(&prover)?;
            let gateway = cfg.gateway()?;
            let validator = cfg.validator()?;
            let mut verdicts = Vec::new();
            for (model, list) in &cands {
                for c in list.iter().filter(|c| c.final_status == FinalStatus::Valid) {
                    let Some(g) = gold.get(&c.problem_id) else { continue };
                    match beq_check(g, &c.final_code, &spec, budget, &gateway, &validator) {
                        Ok(r) => verdicts.push(BeqRecord::new(model, &c.problem_id, &r)),
                        Err(e) => tracing::warn!(model = %model, problem = %c.problem_id, error = %e, "beq skipped"),
                    }
                }
            }
            if let Some(path) = out {
                write_jsonl(&path, &verdicts)?;
            }
            for model in cands.keys() {
                let passed = verdicts.iter().filter(|v| &v.model == model && v.pass).count();
                println!("{model}: beq {passed}");
            }
        }
        MetricsCmd::Report {
            format,
            records,
            beq,
            threshold,
            heatmap,
            out,
        } => {
            let mut recs = load_records(&records)?;
            if let Some(b) = beq {
                merge_beq(&mut recs, &load_beq_records(&b)?);
            }
            let report = Report::build(&recs, threshold, &heatmap)?;
            match out {
                Some(path) => report.emit(format, &path)?,
                None => print!("{}", report.render(format)),
            }
        }
    }
    Ok(())
}

fn serve(cfg: &Config, host: &str, port: u16, store: &Path) -> Result<()> {
    let addr: SocketAddr = format!("{host}:{port}").parse().context("bad listen address")?;
    let state = AppState {
        store: Arc::new(HubStore::open(store)?),
        validator: Arc::new(cfg.validator()?),
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = hub::bind(addr).await?;
        tracing::info!(%addr, "hub listening");
        hub::serve(listener, state).await
    })?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Context(cmd) => context(&cfg, cmd),
        Command::Formalize(FormalizeCmd::Run { corpus, models, out }) => formalize(cfg, &corpus, models.as_deref(), &out),
        Command::Prove(ProveCmd::Run {
            tasks,
            model,
            turns,
            out,
            store,
        }) => prove(&cfg, &tasks, &model, turns, &out, store.as_deref()),
        Command::Metrics(cmd) => metrics(&cfg, cmd),
        Command::Serve { port, host, store } => serve(&cfg, &host, port, &store),
        Command::Export { store } => {
            print!("{}", HubStore::open(store)?.export_verified());
            Ok(())
        }
    }
}
