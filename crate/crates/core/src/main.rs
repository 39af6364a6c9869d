//! Command-line entry point: build-graph | assess | eval.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use s2rq::config::{Config, FileConfig, FlagOverrides};
use s2rq::llm_gateway::TemplateSet;
use s2rq::pipeline;

#[derive(Debug, Parser)]
#[command(name = "s2rq", version)]
#[command(
    about = "Assess the quality of reproduction steps in bug reports against a GUI execution graph"
)]
struct Cli {
    /// Config file (TOML) supplying defaults for the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Verbose traversal and mapping logs on stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the execution graph from a directory of interaction traces
    BuildGraph {
        /// Directory containing trace files (*.json).
        #[arg(long)]
        traces: PathBuf,

        /// Output graph file.
        #[arg(long)]
        out: PathBuf,
    },

    /// Assess bug reports against a graph, writing quality reports
    Assess {
        /// Execution graph file.
        #[arg(long)]
        graph: PathBuf,

        /// One report file (.json structured, anything else plain text).
        #[arg(long, conflicts_with = "reports_dir")]
        report: Option<PathBuf>,

        /// Directory of report files.
        #[arg(long)]
        reports_dir: Option<PathBuf>,

        /// Model provider.
        #[arg(long, value_parser = ["mock", "remote"])]
        provider: Option<String>,

        /// Remote model name.
        #[arg(long)]
        model: Option<String>,

        /// Remote endpoint URL (chat-completions style).
        #[arg(long)]
        endpoint: Option<String>,

        /// Mock-oracle match threshold in [0, 1].
        #[arg(long)]
        threshold: Option<f64>,

        /// Output directory for quality reports and the audit log.
        #[arg(long)]
        out_dir: Option<PathBuf>,

        /// Worker pool size; defaults to available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },

    /// Score predicted quality reports against ground truth
    Eval {
        /// Directory of predicted machine reports (*.report.json).
        #[arg(long)]
        predicted: PathBuf,

        /// Directory of ground truth files (*.truth.json).
        #[arg(long)]
        truth: PathBuf,

        /// Write machine-readable metrics to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let file_config = match &cli.config {
        Some(path) => Some(FileConfig::load(path)?),
        None => None,
    };
    match &cli.command {
        Command::BuildGraph { traces, out } => {
            let (nodes, edges) = pipeline::build_graph_from_dir(traces, out)?;
            println!("wrote {}: {nodes} nodes, {edges} edges", out.display());
            Ok(())
        }
        Command::Assess {
            graph,
            report,
            reports_dir,
            provider,
            model,
            endpoint,
            threshold,
            out_dir,
            workers,
        } => {
            let flags = FlagOverrides {
                provider: provider.clone(),
                model: model.clone(),
                endpoint: endpoint.clone(),
                threshold: *threshold,
                out_dir: out_dir.clone(),
                workers: *workers,
                verbose: cli.verbose,
            };
            let config = Config::resolve(file_config, flags)?;
            run_assess(&config, graph, report.as_deref(), reports_dir.as_deref())
        }
        Command::Eval {
            predicted,
            truth,
            out,
        } => {
            let output = pipeline::evaluate_dirs(predicted, truth)?;
            print!("{}", pipeline::render_metrics_table(&output));
            if let Some(path) = out {
                std::fs::write(path, pipeline::render_metrics_json(&output))?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn run_assess(
    config: &Config,
    graph_path: &Path,
    report: Option<&Path>,
    reports_dir: Option<&Path>,
) -> anyhow::Result<()> {
    let graph = s2rq::execution_model::load_graph(graph_path)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let audit_path = config.out_dir.join("audit.jsonl");
    let templates = TemplateSet::zero_shot();

    let mut report_paths: Vec<PathBuf> = Vec::new();
    match (report, reports_dir) {
        (Some(path), None) => report_paths.push(path.to_path_buf()),
        (None, Some(dir)) => {
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.is_file() {
                    report_paths.push(path);
                }
            }
            report_paths.sort();
            if report_paths.is_empty() {
                anyhow::bail!("no report files in {}", dir.display());
            }
        }
        _ => anyhow::bail!("pass exactly one of --report or --reports-dir"),
    }

    // Distinct reports may proceed concurrently over the shared immutable
    // graph; calls within one traversal stay sequential.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    // One shared, thread-safe gateway; the audit lock serializes log writes
    // while distinct reports proceed concurrently.
    let gateway = pipeline::make_gateway(config, Some(&audit_path))?;
    let results: Vec<(PathBuf, anyhow::Result<Vec<pipeline::AssessOutput>>)> = pool.install(|| {
        use rayon::prelude::*;
        report_paths
            .par_iter()
            .map(|path| {
                let run = || -> anyhow::Result<Vec<pipeline::AssessOutput>> {
                    Ok(pipeline::assess_file(
                        path,
                        &graph,
                        &gateway,
                        &templates,
                        &config.out_dir,
                    )?)
                };
                (path.clone(), run())
            })
            .collect()
    });

    let mut failures = 0usize;
    for (path, result) in results {
        match result {
            Ok(outputs) => {
                for out in outputs {
                    println!("{}", out.summary_line);
                }
            }
            Err(err) => {
                failures += 1;
                eprintln!("error: {}: {err:#}", path.display());
            }
        }
    }
    if failures > 0 {
        anyhow::bail!("{failures} report(s) failed");
    }
    Ok(())
}
