//! `reasonforge`: generate, render, score and verify graph-based reasoning
//! datasets.

mod config;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use reasonforge_core::data::DataSource;
use reasonforge_core::evalkit::{self, stats_table};
use reasonforge_core::oracle;
use reasonforge_core::promptkit::{select_shots, FewShotConfig, PromptRecord, PromptSet};
use reasonforge_core::taskgen::{self, DatasetSpec, Example};
use reasonforge_core::verbalizer::{NamePool, TemplatePool};
use reasonforge_core::{grow_graph, GraphDocument, GrowthConfig, Task};

#[derive(Parser)]
#[command(name = "reasonforge", version, about = "Graph-based synthetic reasoning datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset as JSONL and print its per-hop counts.
    Gen(GenArgs),
    /// Render prompt/target pairs for a dataset.
    Render(RenderArgs),
    /// Score model responses against a gold dataset.
    Score(ScoreArgs),
    /// Re-derive every answer with the oracle.
    Verify(VerifyArgs),
    /// Print the per-hop count table of a dataset.
    Stats(StatsArgs),
    /// Grow a single relational graph and write it as JSON.
    Graph(GraphArgs),
}

#[derive(Args)]
struct GenArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    /// Named count preset (`paper`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hop range `2:10` or list `2,4,6`; used with --count.
    #[arg(long)]
    hops: Option<String>,
    /// Examples per hop.
    #[arg(long)]
    count: Option<usize>,
    /// Explicit per-hop counts, `2=100,3=50`.
    #[arg(long)]
    counts: Option<String>,
    /// `none`, `permute`, `noise:K`, `flip:K` or `mix=KIND@W,...`.
    #[arg(long)]
    aug: Option<String>,
    /// Graph growth iterations.
    #[arg(long)]
    graph_iters: Option<usize>,
    /// Reuse this many graphs per hop instead of one per example.
    #[arg(long)]
    graphs_per_hop: Option<usize>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Dataset path; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    dataset: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// `std-p` or `eta-p`.
    #[arg(long)]
    style: Option<String>,
    /// In-context examples per prompt.
    #[arg(short = 'k', long = "shots-k", alias = "k")]
    k: Option<usize>,
    /// Dataset JSONL to draw shots from; required when k > 0.
    #[arg(long)]
    shots: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// JSONL of `{id, response}`.
    #[arg(long)]
    predictions: PathBuf,
    /// Gold dataset JSONL.
    #[arg(long)]
    gold: PathBuf,
    #[arg(long, default_value = "eta-p")]
    style: String,
    /// Report JSON path; printed after the table when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Dataset JSONL, or a graph JSON document with --graph.
    input: PathBuf,
    #[arg(long)]
    graph: bool,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    dataset: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    task: Task,
    #[arg(long, default_value_t = 2)]
    graph_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Render(a) => render(a),
        Command::Score(a) => score(a),
        Command::Verify(a) => verify(a),
        Command::Stats(a) => stats(a),
        Command::Graph(a) => graph(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_dataset(path: &Path) -> Result<Vec<Example>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(taskgen::read_jsonl(BufReader::new(file), &path.display().to_string())?)
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(0) => bail!("--workers must be positive"),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(job)),
        None => Ok(job()),
    }
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let source = DataSource::from_env();
    let file = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        task: a.task,
        preset: a.preset,
        seed: a.seed,
        hops: a.hops,
        count: a.count,
        counts: a.counts.as_deref().map(config::parse_counts).transpose()?,
        aug: a.aug,
        graph_iters: a.graph_iters,
        graphs_per_hop: a.graphs_per_hop,
        workers: a.workers,
        output: a.output,
        ..RunConfig::default()
    };
    let top = file.overlay(flags);
    let task = top.task()?;
    let cfg = match &top.preset {
        Some(name) => RunConfig::preset(name, task, &source)?.overlay(top),
        None => top,
    };
    let mut spec = DatasetSpec::new(task, cfg.hop_counts()?, cfg.seed.unwrap_or(0));
    spec.augmentation = cfg.augmentation()?;
    if let Some(l) = cfg.graph_iters {
        spec.graph_iterations = l;
    }
    spec.graphs_per_hop = cfg.graphs_per_hop;
    spec.validate()?;

    let names = NamePool::load(&source)?;
    let templates = TemplatePool::load(task, &source)?;
    let examples = with_workers(cfg.workers, || taskgen::build_dataset_with(&spec, &names, &templates))??;

    let mut out = writer(cfg.output.as_deref())?;
    taskgen::write_jsonl(&examples, &mut out)?;
    drop(out);
    let table = stats_table(&examples);
    if cfg.output.is_some() {
        println!("{table}");
    } else {
        eprintln!("{table}");
    }
    Ok(ExitCode::SUCCESS)
}

fn render(a: RenderArgs) -> Result<ExitCode> {
    let source = DataSource::from_env();
    let file = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.overlay(RunConfig {
        style: a.style,
        k: a.k,
        seed: a.seed,
        ..RunConfig::default()
    });
    let style = cfg.style()?;
    let shots = FewShotConfig {
        k: cfg.k.unwrap_or(FewShotConfig::default().k),
        seed: cfg.seed.unwrap_or(0),
    };
    let dataset = read_dataset(&a.dataset)?;
    let pool = match (&a.shots, shots.k) {
        (_, 0) => Vec::new(),
        (Some(p), _) => read_dataset(p)?,
        (None, k) => bail!("{k} shots requested but no shot pool given (use --shots FILE or -k 0)"),
    };
    let prompts = PromptSet::load(&source)?;
    let mut out = writer(a.output.as_deref())?;
    for ex in &dataset {
        let chosen = select_shots(&pool, ex, &shots)?;
        let record = PromptRecord {
            id: ex.id.clone(),
            prompt: prompts.render_prompt(ex, style, &chosen)?,
            target: prompts.render_target(ex, style),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn score(a: ScoreArgs) -> Result<ExitCode> {
    let style = a.style.parse().map_err(anyhow::Error::msg)?;
    let gold = read_dataset(&a.gold)?;
    let file = File::open(&a.predictions).with_context(|| format!("opening {}", a.predictions.display()))?;
    let predictions = evalkit::read_predictions(BufReader::new(file))?;
    let report = evalkit::score(&predictions, &gold, style)?;
    println!("{report}");
    let json = serde_json::to_string_pretty(&report)?;
    match &a.output {
        Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    if a.graph {
        let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
        let doc: GraphDocument = serde_json::from_str(&text)?;
        let mismatches = oracle::check_graph(&doc)?;
        println!("{} edges, {} mismatches", doc.edges.len(), mismatches.len());
        for m in &mismatches {
            println!("  {m:?}");
        }
        return Ok(if mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE });
    }
    let names = NamePool::load(&DataSource::from_env())?;
    let dataset = read_dataset(&a.input)?;
    let report = taskgen::verify_dataset(&dataset, &names);
    println!("{} examples, {} mismatches", report.examples, report.mismatches.len());
    for m in &report.mismatches {
        let oracle = m.oracle.map_or_else(|| "-".to_string(), |r| r.to_string());
        println!("  {}: answer {} oracle {} ({})", m.id, m.answer, oracle, m.reason);
    }
    println!("hops: {}", join_counts(report.hops.iter().map(|(h, n)| (h.to_string(), *n))));
    println!("labels: {}", join_counts(report.labels.iter().map(|(l, n)| (l.clone(), *n))));
    if let Some(p) = &a.json {
        std::fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn join_counts(items: impl Iterator<Item = (String, usize)>) -> String {
    items.map(|(k, n)| format!("{k}={n}")).collect::<Vec<_>>().join(" ")
}

fn stats(a: StatsArgs) -> Result<ExitCode> {
    let table = stats_table(&read_dataset(&a.dataset)?);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    } else {
        println!("{table}");
    }
    Ok(ExitCode::SUCCESS)
}

fn graph(a: GraphArgs) -> Result<ExitCode> {
    let g = grow_graph(a.task, &GrowthConfig::new(a.task, a.graph_iters, a.seed))?;
    let mut out = writer(a.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &g.to_document())?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}
