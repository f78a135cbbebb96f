//! `opteval`: evaluate candidate optimization formulations against ground
//! truth, solve OFIR models, run replay/live evaluation grids, and emit
//! report artifacts.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use opteval::bench::{load_case, CaseId, PromptId};
use opteval::gateway::{Gateway, GatewayMode, ModelConfig};
use opteval::parser::{parse_ofir, Parsed};
use opteval::report::{
    correlations, emit_correlations_csv, emit_heatmap_csv, emit_radar_csv, emit_tables,
    heatmap_scores, radar_scores, TableFormat,
};
use opteval::runner::{
    record_set_from_cells, records_from_json, run, score_texts, RunConfig, RunError, DEFAULT_SEED,
};
use opteval::solve::{solve_lp, solve_milp, SolveStatus};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNBOUNDED: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_MISSING: u8 = 5;

#[derive(Parser)]
#[command(name = "opteval", version, about = "Component-level evaluation of optimization formulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an OFIR model and print status, objective, and assignment.
    Solve {
        /// Path to the .ofir document (symbolic or flat).
        file: PathBuf,
        /// Relax integrality and solve the LP.
        #[arg(long)]
        relax: bool,
    },
    /// Score a candidate formulation against a ground-truth formulation.
    Score {
        /// Ground-truth OFIR document.
        #[arg(long)]
        gt: PathBuf,
        /// Candidate document (OFIR or plain math text).
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run an evaluation grid (problems x prompts x models).
    Run {
        /// JSON run configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated problem ids (default: all four).
        #[arg(long, value_delimiter = ',')]
        problems: Vec<String>,
        /// Comma-separated prompt ids P1..P6 (default: all six).
        #[arg(long, value_delimiter = ',')]
        prompts: Vec<String>,
        /// Comma-separated model ids (used with --mode/--endpoint).
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        /// Gateway mode for --models: live, record, or replay.
        #[arg(long)]
        mode: Option<String>,
        /// Chat-completions endpoint for live/record mode.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fixture store root (default: fixtures).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Output directory for records.json, manifest, and transcripts.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate a records.json into tables, radar, heatmap, correlations.
    Report {
        /// records.json from a previous run.
        #[arg(long = "in")]
        input: PathBuf,
        /// Per-problem summary tables: csv, json, or md.
        #[arg(long)]
        tables: Option<String>,
        /// Radar plot data (csv).
        #[arg(long)]
        radar: Option<String>,
        /// Heatmap plot data (csv).
        #[arg(long)]
        heatmap: Option<String>,
        /// Correlation matrix (csv).
        #[arg(long)]
        correlations: Option<String>,
        /// Output directory; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark assets.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// List the shipped benchmark cases.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { file, relax } => cmd_solve(&file, relax),
        Command::Score { gt, pred, seed } => cmd_score(&gt, &pred, seed),
        Command::Run { config, problems, prompts, models, mode, endpoint, seed, fixtures, out, workers } => {
            cmd_run(RunArgs { config, problems, prompts, models, mode, endpoint, seed, fixtures, out, workers })
        }
        Command::Report { input, tables, radar, heatmap, correlations, out } => {
            cmd_report(&input, tables, radar, heatmap, correlations, out)
        }
        Command::Bench { command: BenchCommand::List } => cmd_bench_list(),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn cmd_solve(file: &PathBuf, relax: bool) -> anyhow::Result<u8> {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return Ok(EXIT_MISSING);
        }
    };
    let parsed = match parse_ofir(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("parse error: {e}");
            return Ok(EXIT_PARSE);
        }
    };
    let model = match parsed.model {
        Parsed::Scalar(s) => s.model,
        Parsed::Symbolic { formulation, instance } => {
            match opteval::ground::ground(&formulation, &instance) {
                Ok(report) => report.model,
                Err(e) => {
                    eprintln!("grounding error: {e}");
                    return Ok(EXIT_PARSE);
                }
            }
        }
    };
    let result = if relax { solve_lp(&model) } else { solve_milp(&model) }
        .map_err(|e| anyhow!("solver error: {e}"))?;
    println!("status: {}", match result.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::IterationLimit => "iteration-limit",
    });
    if let Some(obj) = result.objective {
        println!("objective: {obj}");
    }
    if let Some(assignment) = &result.assignment {
        for (name, value) in assignment {
            println!("{name}: {value}");
        }
    }
    println!("nodes: {}", result.node_count);
    println!("pivots: {}", result.pivot_count);
    Ok(match result.status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        SolveStatus::Unbounded => EXIT_UNBOUNDED,
        SolveStatus::IterationLimit => EXIT_FAIL,
    })
}

fn cmd_score(gt: &PathBuf, pred: &PathBuf, seed: u64) -> anyhow::Result<u8> {
    let gt_text = match std::fs::read_to_string(gt) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", gt.display());
            return Ok(EXIT_MISSING);
        }
    };
    let pred_text = match std::fs::read_to_string(pred) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", pred.display());
            return Ok(EXIT_MISSING);
        }
    };
    match score_texts(&gt_text, &pred_text, seed) {
        Ok((match_result, record)) => {
            let doc = serde_json::json!({
                "match": match_result,
                "metrics": record,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("parse error: {e}");
            Ok(EXIT_PARSE)
        }
    }
}

struct RunArgs {
    config: Option<PathBuf>,
    problems: Vec<String>,
    prompts: Vec<String>,
    models: Vec<String>,
    mode: Option<String>,
    endpoint: Option<String>,
    seed: Option<u64>,
    fixtures: Option<PathBuf>,
    out: Option<PathBuf>,
    workers: Option<usize>,
}

fn cmd_run(args: RunArgs) -> anyhow::Result<u8> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", path.display());
                    return Ok(EXIT_MISSING);
                }
            };
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::full_grid(Vec::new()),
    };

    if !args.problems.is_empty() {
        cfg.problems = args
            .problems
            .iter()
            .map(|p| CaseId::parse(p).ok_or_else(|| anyhow!("unknown problem `{p}`")))
            .collect::<Result<_, _>>()?;
    }
    if !args.prompts.is_empty() {
        cfg.prompts = args
            .prompts
            .iter()
            .map(|p| PromptId::parse(p).ok_or_else(|| anyhow!("unknown prompt `{p}`")))
            .collect::<Result<_, _>>()?;
    }
    if !args.models.is_empty() {
        let mode = match args.mode.as_deref().unwrap_or("replay") {
            "live" => GatewayMode::Live,
            "record" => GatewayMode::Record,
            "replay" => GatewayMode::Replay,
            other => return Err(anyhow!("unknown mode `{other}`")),
        };
        cfg.models = args
            .models
            .iter()
            .map(|id| {
                let mut m = ModelConfig::replay(id.clone());
                m.mode = mode;
                if let Some(endpoint) = &args.endpoint {
                    m.endpoint = endpoint.clone();
                }
                m
            })
            .collect();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(fixtures) = args.fixtures {
        cfg.fixtures_dir = fixtures;
    }
    if let Some(out) = args.out {
        cfg.out_dir = Some(out);
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if cfg.models.is_empty() {
        return Err(anyhow!("no models configured; pass --models or a --config file"));
    }

    let gateway = Gateway::new(cfg.fixtures_dir.clone());
    match run(&cfg, &gateway) {
        Ok(output) => {
            let flagged = output.cells.iter().filter(|c| c.error.is_some()).count();
            let ok = output.cells.len() - flagged;
            eprintln!("evaluated {} cells ({ok} ok, {flagged} flagged)", output.cells.len());
            if cfg.out_dir.is_none() {
                print!("{}", output.records_json);
            }
            Ok(EXIT_OK)
        }
        Err(e @ (RunError::MissingAssets(_) | RunError::MissingFixtures(_))) => {
            eprintln!("error: {e}");
            Ok(EXIT_MISSING)
        }
        Err(e) => Err(anyhow!(e)),
    }
}

fn cmd_report(
    input: &PathBuf,
    tables: Option<String>,
    radar: Option<String>,
    heatmap: Option<String>,
    corr: Option<String>,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return Ok(EXIT_MISSING);
        }
    };
    let (_seed, cells) = records_from_json(&text).map_err(|e| anyhow!(e))?;
    let rs = record_set_from_cells(&cells);

    let mut outputs: Vec<(String, String)> = Vec::new();

    if let Some(fmt) = tables {
        let format = TableFormat::parse(&fmt).ok_or_else(|| anyhow!("unknown table format `{fmt}`"))?;
        let ext = match format {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
            TableFormat::Markdown => "md",
        };
        for (problem, doc) in emit_tables(&rs, format) {
            outputs.push((format!("table_{problem}.{ext}"), doc));
        }
    }
    if let Some(fmt) = radar {
        if fmt != "csv" {
            return Err(anyhow!("unknown radar format `{fmt}` (only csv)"));
        }
        let mut problems: Vec<String> = rs.cells.iter().map(|c| c.problem.clone()).collect();
        problems.sort();
        problems.dedup();
        for problem in problems {
            let scores = radar_scores(&rs, &problem).map_err(|e| anyhow!(e))?;
            outputs.push((format!("radar_{problem}.csv"), emit_radar_csv(&scores)));
        }
    }
    if let Some(fmt) = heatmap {
        if fmt != "csv" {
            return Err(anyhow!("unknown heatmap format `{fmt}` (only csv)"));
        }
        outputs.push(("heatmap.csv".to_string(), emit_heatmap_csv(&heatmap_scores(&rs))));
    }
    if let Some(fmt) = corr {
        if fmt != "csv" {
            return Err(anyhow!("unknown correlations format `{fmt}` (only csv)"));
        }
        let matrix = correlations(&rs).map_err(|e| anyhow!(e))?;
        outputs.push(("correlations.csv".to_string(), emit_correlations_csv(&matrix)));
    }

    match out {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            for (name, body) in &outputs {
                std::fs::write(dir.join(name), body)?;
            }
            eprintln!("wrote {} artifacts to {}", outputs.len(), dir.display());
        }
        None => {
            for (name, body) in &outputs {
                println!("# {name}");
                println!("{body}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bench_list() -> anyhow::Result<u8> {
    println!("{:<22} {:<10} {:>12}  {}", "id", "difficulty", "optimum", "variables/constraints");
    for id in CaseId::ALL {
        let case = load_case(id).map_err(|e| anyhow!(e.to_string()))?;
        let report = case.grounded().map_err(|e| anyhow!(e.to_string()))?;
        let difficulty = format!("{:?}", case.difficulty).to_lowercase();
        println!(
            "{:<22} {:<10} {:>12.4}  {} vars, {} rows",
            case.id.as_str(),
            difficulty,
            case.known_optimum[0],
            report.model.variables.len(),
            report.model.constraints.len(),
        );
    }
    Ok(EXIT_OK)
}
