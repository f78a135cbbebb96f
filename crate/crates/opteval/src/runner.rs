//! End-to-end evaluation runs: render prompts, collect completions through
//! the gateway, parse and ground the candidates, match against the ground
//! truth, and assemble metric records plus run artifacts (records.json,
//! transcripts, manifest).

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::bench::{load_case, load_prompt, render_prompt, CaseId, PromptId};
use crate::gateway::{Gateway, GatewayMode, Message, ModelConfig};
use crate::ground::ground;
use crate::ir::ScalarModel;
use crate::matcher::{match_models, MatchOutcome, MatchSide};
use crate::metrics::{
    self, cons_rmse, efficiency, obj_rmse, optimality_gap, precision_recall, sample, MetricRecord,
    SampleSet, Telemetry,
};
use crate::parser::{parse_mathtext, parse_ofir, ParseMode, Parsed};
use crate::report::{Cell, RecordSet};
use crate::solve::{solve_milp, SolveResult, SolveStatus};

pub const DEFAULT_SEED: u64 = 42;
pub const RECORDS_SCHEMA: &str = "opteval/records/1";
pub const MANIFEST_SCHEMA: &str = "opteval/manifest/1";

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_fixtures_dir() -> PathBuf {
    PathBuf::from("fixtures")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub problems: Vec<CaseId>,
    pub prompts: Vec<PromptId>,
    pub models: Vec<ModelConfig>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fixtures_dir")]
    pub fixtures_dir: PathBuf,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Worker cap; defaults to available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn full_grid(models: Vec<ModelConfig>) -> RunConfig {
        RunConfig {
            problems: CaseId::ALL.to_vec(),
            prompts: PromptId::ALL.to_vec(),
            models,
            seed: DEFAULT_SEED,
            fixtures_dir: default_fixtures_dir(),
            out_dir: None,
            workers: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("empty grid: problems, prompts, and models must be nonempty")]
    EmptyGrid,
    #[error("missing assets: {0}")]
    MissingAssets(String),
    #[error("fixtures directory `{0}` does not exist (replay mode)")]
    MissingFixtures(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub model: String,
    pub prompt: String,
    pub problem: String,
    pub record: Option<MetricRecord>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct TranscriptDoc<'a> {
    model: &'a str,
    prompt: &'a str,
    problem: &'a str,
    exchanges: Vec<TranscriptExchange<'a>>,
}

#[derive(Debug, Clone, Serialize)]
struct TranscriptExchange<'a> {
    request: &'a [Message],
    response: &'a str,
    latency_ms: u64,
}

#[derive(Debug)]
pub struct RunOutput {
    /// Successful cells only, usable by the report module directly.
    pub records: RecordSet,
    /// Every grid cell in grid order, including failures.
    pub cells: Vec<CellOutcome>,
    /// Canonical records.json body (byte-stable across replay runs).
    pub records_json: String,
    pub manifest_json: String,
    /// (file stem, json body) per cell transcript.
    pub transcripts: Vec<(String, String)>,
}

// ---------------------------------------------------------------------------
// Scoring core
// ---------------------------------------------------------------------------

/// Scores one candidate against ground truth. `telemetry` is zeroed for
/// file-based scoring where no model exchange happened.
pub fn score_candidate(
    gt: &MatchSide,
    gt_solve: &SolveResult,
    samples: &SampleSet,
    cand: &MatchSide,
    telemetry: Option<&Telemetry>,
) -> (crate::matcher::MatchResult, MetricRecord) {
    let outcome: MatchOutcome = match_models(gt, cand);
    let pr = precision_recall(&outcome.result);
    let mut record_flags: Vec<String> = Vec::new();
    if pr.vacuous {
        record_flags.push(metrics::flags::VACUOUS_PRECISION_RECALL.into());
    }

    let cand_solve = solve_milp(&cand.model).unwrap_or_else(|_| SolveResult {
        status: SolveStatus::Infeasible,
        objective: None,
        assignment: None,
        node_count: 0,
        pivot_count: 0,
        dual_objective: None,
    });

    let (opt_gap, gap_flag) = if gt_solve.status == SolveStatus::Optimal {
        match optimality_gap(gt_solve, &cand_solve) {
            Ok(g) => (g.value, g.flag),
            Err(_) => (None, Some(metrics::flags::GAP_UNDEFINED)),
        }
    } else {
        (None, Some(metrics::flags::GAP_UNDEFINED))
    };
    if let Some(flag) = gap_flag {
        record_flags.push(flag.into());
    }

    let obj = match (gt_solve.objective, cand_solve.objective) {
        (Some(t), Some(c)) => obj_rmse(&[t], &[c]).unwrap_or(0.0),
        _ => {
            record_flags.push(metrics::flags::OBJ_RMSE_UNDEFINED.into());
            0.0
        }
    };

    let cons = cons_rmse(&outcome.matched_rows, samples, outcome.gt_var_count);
    if cons.no_matched {
        record_flags.push(metrics::flags::NO_MATCHED_CONSTRAINTS.into());
    }

    let eff = telemetry.map(|t| efficiency(t)).unwrap_or(crate::metrics::Efficiency {
        latency_ms: 0,
        input_tokens: 0,
        output_tokens: 0,
        approximate: false,
    });
    if eff.approximate {
        record_flags.push(metrics::flags::TOKENS_APPROXIMATE.into());
    }

    let record = MetricRecord {
        cons_p: pr.cons_p,
        cons_r: pr.cons_r,
        dv_p: pr.dv_p,
        dv_r: pr.dv_r,
        opt_gap,
        obj_rmse: obj,
        cons_rmse: cons.value,
        latency_ms: eff.latency_ms,
        input_tokens: eff.input_tokens,
        output_tokens: eff.output_tokens,
        flags: record_flags,
    };
    (outcome.result, record)
}

/// Parses a candidate document: strict OFIR first, then lenient math text.
pub fn parse_candidate(text: &str) -> Result<(MatchSide, Vec<String>), String> {
    let to_side = |parsed: Parsed| -> Result<MatchSide, String> {
        match parsed {
            Parsed::Scalar(scalar) => Ok(MatchSide::from(&scalar)),
            Parsed::Symbolic { formulation, instance } => {
                let report = ground(&formulation, &instance).map_err(|e| e.to_string())?;
                Ok(MatchSide::from(&report))
            }
        }
    };
    match parse_ofir(text) {
        Ok(outcome) => Ok((to_side(outcome.model)?, Vec::new())),
        Err(_) => {
            let outcome = parse_mathtext(text, ParseMode::Lenient).map_err(|e| e.to_string())?;
            let warnings = outcome.warnings.iter().map(|(_, w)| w.clone()).collect();
            Ok((to_side(outcome.model)?, warnings))
        }
    }
}

// ---------------------------------------------------------------------------
// Full runs
// ---------------------------------------------------------------------------

struct ProblemContext {
    gt: MatchSide,
    gt_solve: SolveResult,
    samples: SampleSet,
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

/// Runs the configured grid. Per-cell failures become flagged cells; global
/// failures (assets, fixtures directory, output directory) abort.
pub fn run(cfg: &RunConfig, gateway: &Gateway) -> Result<RunOutput, RunError> {
    if cfg.problems.is_empty() || cfg.prompts.is_empty() || cfg.models.is_empty() {
        return Err(RunError::EmptyGrid);
    }
    if cfg.models.iter().any(|m| m.mode == GatewayMode::Replay)
        && !gateway.store().root().exists()
    {
        return Err(RunError::MissingFixtures(gateway.store().root().display().to_string()));
    }

    // Shared per-problem context, built once.
    let mut contexts: HashMap<CaseId, ProblemContext> = HashMap::new();
    for &problem in &cfg.problems {
        let case = load_case(problem).map_err(|e| RunError::MissingAssets(e.to_string()))?;
        let report = case.grounded().map_err(|e| RunError::MissingAssets(e.to_string()))?;
        let gt_solve = solve_milp(&report.model)
            .map_err(|e| RunError::MissingAssets(format!("{problem}: {e}")))?;
        let samples = sample(&report.model, cfg.seed, metrics::DEFAULT_SAMPLE_COUNT)
            .map_err(|e| RunError::MissingAssets(format!("{problem}: {e}")))?;
        contexts.insert(problem, ProblemContext { gt: MatchSide::from(&report), gt_solve, samples });
    }

    // Grid in deterministic order: problems x prompts x models.
    struct Job {
        problem: CaseId,
        prompt: PromptId,
        model: ModelConfig,
        messages: Vec<String>,
    }
    let mut jobs = Vec::new();
    for &problem in &cfg.problems {
        let case = load_case(problem).map_err(|e| RunError::MissingAssets(e.to_string()))?;
        for &prompt in &cfg.prompts {
            let template = load_prompt(prompt);
            let messages = render_prompt(&template, &case);
            for model in &cfg.models {
                jobs.push(Job { problem, prompt, model: model.clone(), messages: messages.clone() });
            }
        }
    }

    let results: Vec<Mutex<Option<(CellOutcome, Option<(String, String)>)>>> =
        (0..jobs.len()).map(|_| Mutex::new(None)).collect();
    let cursor = AtomicUsize::new(0);
    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .clamp(1, jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= jobs.len() {
                    break;
                }
                let job = &jobs[idx];
                let ctx = &contexts[&job.problem];
                let outcome = run_cell(job.problem, job.prompt, &job.model, &job.messages, ctx, gateway);
                *results[idx].lock().unwrap() = Some(outcome);
            });
        }
    });

    let mut cells = Vec::with_capacity(jobs.len());
    let mut transcripts = Vec::new();
    let mut records = RecordSet::default();
    for slot in results {
        let (outcome, transcript) = slot.into_inner().unwrap().expect("worker filled slot");
        if let Some(rec) = &outcome.record {
            records
                .insert(Cell {
                    model: outcome.model.clone(),
                    prompt: outcome.prompt.clone(),
                    problem: outcome.problem.clone(),
                    record: rec.clone(),
                })
                .expect("grid cells are unique");
        }
        if let Some(t) = transcript {
            transcripts.push(t);
        }
        cells.push(outcome);
    }

    #[derive(Serialize)]
    struct RecordsDoc<'a> {
        schema: &'static str,
        seed: u64,
        cells: &'a [CellOutcome],
    }
    let records_json = serde_json::to_string_pretty(&RecordsDoc {
        schema: RECORDS_SCHEMA,
        seed: cfg.seed,
        cells: &cells,
    })
    .expect("serialize")
        + "\n";

    #[derive(Serialize)]
    struct ManifestDoc<'a> {
        schema: &'static str,
        version: &'static str,
        seed: u64,
        problems: Vec<&'a str>,
        prompts: Vec<&'a str>,
        models: &'a [ModelConfig],
        flagged_cells: usize,
    }
    let manifest_json = serde_json::to_string_pretty(&ManifestDoc {
        schema: MANIFEST_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        problems: cfg.problems.iter().map(|p| p.as_str()).collect(),
        prompts: cfg.prompts.iter().map(|p| p.as_str()).collect(),
        models: &cfg.models,
        flagged_cells: cells.iter().filter(|c| c.error.is_some()).count(),
    })
    .expect("serialize")
        + "\n";

    let output = RunOutput { records, cells, records_json, manifest_json, transcripts };

    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io(e.to_string()))?;
        std::fs::write(dir.join("records.json"), &output.records_json)
            .map_err(|e| RunError::Io(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), &output.manifest_json)
            .map_err(|e| RunError::Io(e.to_string()))?;
        let tdir = dir.join("transcripts");
        std::fs::create_dir_all(&tdir).map_err(|e| RunError::Io(e.to_string()))?;
        for (stem, body) in &output.transcripts {
            std::fs::write(tdir.join(format!("{stem}.json")), body)
                .map_err(|e| RunError::Io(e.to_string()))?;
        }
    }

    Ok(output)
}

fn run_cell(
    problem: CaseId,
    prompt: PromptId,
    model: &ModelConfig,
    messages: &[String],
    ctx: &ProblemContext,
    gateway: &Gateway,
) -> (CellOutcome, Option<(String, String)>) {
    let mut outcome = CellOutcome {
        model: model.model_id.clone(),
        prompt: prompt.as_str().to_string(),
        problem: problem.as_str().to_string(),
        record: None,
        error: None,
        warnings: Vec::new(),
    };

    let exchange_result = if messages.len() > 1 {
        gateway.run_multistep(model, messages).map_err(|e| e.to_string()).map(|t| {
            let doc = TranscriptDoc {
                model: &model.model_id,
                prompt: prompt.as_str(),
                problem: problem.as_str(),
                exchanges: t
                    .exchanges
                    .iter()
                    .map(|e| TranscriptExchange {
                        request: &e.request,
                        response: &e.response,
                        latency_ms: e.telemetry.latency_ms,
                    })
                    .collect(),
            };
            let json = serde_json::to_string_pretty(&doc).expect("serialize") + "\n";
            (t.final_response().unwrap_or_default().to_string(), t.combined.clone(), json)
        })
    } else {
        let request = [Message::user(messages[0].clone())];
        gateway.complete(model, &request).map_err(|e| e.to_string()).map(|(text, telemetry)| {
            let doc = TranscriptDoc {
                model: &model.model_id,
                prompt: prompt.as_str(),
                problem: problem.as_str(),
                exchanges: vec![TranscriptExchange {
                    request: &request,
                    response: &text,
                    latency_ms: telemetry.latency_ms,
                }],
            };
            let json = serde_json::to_string_pretty(&doc).expect("serialize") + "\n";
            (text.clone(), telemetry, json)
        })
    };

    let (text, telemetry, transcript_json) = match exchange_result {
        Ok(t) => t,
        Err(e) => {
            outcome.error = Some(e);
            return (outcome, None);
        }
    };

    let stem = format!(
        "{}_{}_{}",
        sanitize(problem.as_str()),
        sanitize(prompt.as_str()),
        sanitize(&model.model_id)
    );

    match parse_candidate(&text) {
        Ok((cand, warnings)) => {
            outcome.warnings = warnings;
            let (_, record) =
                score_candidate(&ctx.gt, &ctx.gt_solve, &ctx.samples, &cand, Some(&telemetry));
            outcome.record = Some(record);
        }
        Err(e) => {
            outcome.error = Some(format!("candidate parse failed: {e}"));
        }
    }
    (outcome, Some((stem, transcript_json)))
}

/// Builds a ground-truth side from an arbitrary parsed document (symbolic
/// documents ground against their own tables).
pub fn side_from_text(text: &str) -> Result<MatchSide, String> {
    let outcome = parse_ofir(text).map_err(|e| e.to_string())?;
    match outcome.model {
        Parsed::Scalar(scalar) => Ok(MatchSide::from(&scalar)),
        Parsed::Symbolic { formulation, instance } => {
            let report = ground(&formulation, &instance).map_err(|e| e.to_string())?;
            Ok(MatchSide::from(&report))
        }
    }
}

/// File-based scoring: ground truth (OFIR) against a candidate document.
pub fn score_texts(
    gt_text: &str,
    cand_text: &str,
    seed: u64,
) -> Result<(crate::matcher::MatchResult, MetricRecord), String> {
    let gt = side_from_text(gt_text)?;
    let (cand, _warnings) = parse_candidate(cand_text)?;
    let gt_solve = solve_milp(&gt.model).map_err(|e| e.to_string())?;
    let samples =
        sample(&gt.model, seed, metrics::DEFAULT_SAMPLE_COUNT).map_err(|e| e.to_string())?;
    Ok(score_candidate(&gt, &gt_solve, &samples, &cand, None))
}

/// Convenience accessor used by tests and the solve verb.
pub fn grounded_model(problem: CaseId) -> Result<ScalarModel, RunError> {
    let case = load_case(problem).map_err(|e| RunError::MissingAssets(e.to_string()))?;
    Ok(case
        .grounded()
        .map_err(|e| RunError::MissingAssets(e.to_string()))?
        .model)
}

/// Parses a records.json document back into cells plus the run seed.
pub fn records_from_json(text: &str) -> Result<(u64, Vec<CellOutcome>), String> {
    #[derive(Deserialize)]
    struct RecordsDoc {
        schema: String,
        seed: u64,
        cells: Vec<CellOutcome>,
    }
    let doc: RecordsDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if doc.schema != RECORDS_SCHEMA {
        return Err(format!("unexpected records schema `{}`", doc.schema));
    }
    Ok((doc.seed, doc.cells))
}

/// Successful cells of a records document as a `RecordSet`.
pub fn record_set_from_cells(cells: &[CellOutcome]) -> RecordSet {
    let mut rs = RecordSet::default();
    for c in cells {
        if let Some(rec) = &c.record {
            let _ = rs.insert(Cell {
                model: c.model.clone(),
                prompt: c.prompt.clone(),
                problem: c.problem.clone(),
                record: rec.clone(),
            });
        }
    }
    rs
}
