//! The evaluation metrics: precision/recall for constraints and variables,
//! optimality gap, objective RMSE, sampled constraint RMSE, and efficiency.

use serde::{Deserialize, Serialize};

use crate::ir::{Domain, ScalarModel};
use crate::matcher::{CanonRow, MatchResult, RowPair};
use crate::rng::SplitMix64;

pub const GAP_DENOMINATOR_FLOOR: f64 = 1e-9;

pub mod flags {
    pub const GAP_UNDEFINED: &str = "gap-undefined";
    pub const GAP_UNDEFINED_DENOMINATOR: &str = "gap-undefined-denominator";
    pub const OBJ_RMSE_UNDEFINED: &str = "obj-rmse-undefined";
    pub const NO_MATCHED_CONSTRAINTS: &str = "no-matched-constraints";
    pub const VACUOUS_PRECISION_RECALL: &str = "vacuous-precision-recall";
    pub const TOKENS_APPROXIMATE: &str = "tokens-approximate";
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("ground-truth solve is not optimal; benchmark misconfiguration")]
    GroundTruthNotOptimal,
    #[error("value lists differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty value lists")]
    Empty,
    #[error("variable `{0}` has lower bound above upper bound")]
    InvertedBounds(String),
}

// ---------------------------------------------------------------------------
// Precision / recall
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub cons_p: f64,
    pub cons_r: f64,
    pub dv_p: f64,
    pub dv_r: f64,
    /// Set when any of the four ratios hit the 0/0 convention.
    pub vacuous: bool,
}

fn ratio(tp: usize, denom: usize, vacuous: &mut bool) -> f64 {
    if denom == 0 {
        *vacuous = true;
        1.0
    } else {
        tp as f64 / denom as f64
    }
}

/// TP/(TP+FP) and TP/(TP+FN) per component; 0/0 counts as a perfect
/// vacuous match and is flagged.
pub fn precision_recall(m: &MatchResult) -> PrecisionRecall {
    let mut vacuous = false;
    PrecisionRecall {
        cons_p: ratio(m.constraint_tp, m.constraint_tp + m.constraint_fp, &mut vacuous),
        cons_r: ratio(m.constraint_tp, m.constraint_tp + m.constraint_fn_, &mut vacuous),
        dv_p: ratio(m.variable_tp, m.variable_tp + m.variable_fp, &mut vacuous),
        dv_r: ratio(m.variable_tp, m.variable_tp + m.variable_fn_, &mut vacuous),
        vacuous,
    }
}

// ---------------------------------------------------------------------------
// Optimality gap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapOutcome {
    pub value: Option<f64>,
    pub flag: Option<&'static str>,
}

/// `|opt - cand| / |opt|`, with an absolute-difference fallback when the
/// optimum is (numerically) zero, and an undefined outcome when the
/// candidate produced no optimal solve.
pub fn optimality_gap(
    gt: &crate::solve::SolveResult,
    cand: &crate::solve::SolveResult,
) -> Result<GapOutcome, MetricsError> {
    let opt = match (gt.status, gt.objective) {
        (crate::solve::SolveStatus::Optimal, Some(v)) => v,
        _ => return Err(MetricsError::GroundTruthNotOptimal),
    };
    let cand_obj = match (cand.status, cand.objective) {
        (crate::solve::SolveStatus::Optimal, Some(v)) => v,
        _ => return Ok(GapOutcome { value: None, flag: Some(flags::GAP_UNDEFINED) }),
    };
    if opt.abs() >= GAP_DENOMINATOR_FLOOR {
        Ok(GapOutcome { value: Some((opt - cand_obj).abs() / opt.abs()), flag: None })
    } else {
        Ok(GapOutcome {
            value: Some((opt - cand_obj).abs()),
            flag: Some(flags::GAP_UNDEFINED_DENOMINATOR),
        })
    }
}

// ---------------------------------------------------------------------------
// Objective RMSE
// ---------------------------------------------------------------------------

/// Root mean squared error over per-instance optimal objective values.
pub fn obj_rmse(truth: &[f64], cand: &[f64]) -> Result<f64, MetricsError> {
    if truth.len() != cand.len() {
        return Err(MetricsError::LengthMismatch(truth.len(), cand.len()));
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = truth.len() as f64;
    let sum: f64 = truth.iter().zip(cand).map(|(t, c)| (t - c) * (t - c)).sum();
    Ok((sum / n).sqrt())
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Fixed-seed sample set over a model's variable domains. Regeneration from
/// the same (seed, model) is bit-identical: one SplitMix64 stream, samples
/// in index order, variables filled in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub seed: u64,
    pub n: usize,
    pub points: Vec<Vec<f64>>,
}

pub const DEFAULT_SAMPLE_COUNT: usize = 100;
const DEFAULT_BOX_LO: f64 = 0.0;
const DEFAULT_BOX_HI: f64 = 100.0;

pub fn sample(model: &ScalarModel, seed: u64, n: usize) -> Result<SampleSet, MetricsError> {
    for v in &model.variables {
        if let (Some(lo), Some(hi)) = (v.lower, v.upper) {
            if lo > hi {
                return Err(MetricsError::InvertedBounds(v.name.clone()));
            }
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut point = Vec::with_capacity(model.variables.len());
        for v in &model.variables {
            let u = rng.next_f64();
            let value = match v.domain {
                Domain::Binary => {
                    if u < 0.5 {
                        0.0
                    } else {
                        1.0
                    }
                }
                Domain::Integer => {
                    let lo = v.lower.map(|d| d.to_f64()).unwrap_or(DEFAULT_BOX_LO);
                    let hi = v.upper.map(|d| d.to_f64()).unwrap_or_else(|| DEFAULT_BOX_HI.max(lo));
                    lo + (u * (hi - lo + 1.0)).floor().min(hi - lo)
                }
                Domain::Continuous => {
                    let lo = v.lower.map(|d| d.to_f64()).unwrap_or(DEFAULT_BOX_LO);
                    let hi = v.upper.map(|d| d.to_f64()).unwrap_or_else(|| DEFAULT_BOX_HI.max(lo));
                    lo + u * (hi - lo)
                }
            };
            point.push(value);
        }
        points.push(point);
    }
    Ok(SampleSet { seed, n, points })
}

// ---------------------------------------------------------------------------
// Constraint RMSE
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsRmse {
    pub value: f64,
    pub no_matched: bool,
}

fn residual_at(row: &CanonRow, point: &[f64], gt_var_count: usize) -> f64 {
    // Samples live on the ground-truth space; candidate-only columns
    // evaluate at zero.
    row.residual(&|v| if v < gt_var_count { point[v] } else { 0.0 })
}

/// RMSE over the matched row pairs at the sampled assignments: how
/// differently the matched constraints behave on identical inputs.
pub fn cons_rmse(pairs: &[RowPair], samples: &SampleSet, gt_var_count: usize) -> ConsRmse {
    if pairs.is_empty() {
        return ConsRmse { value: 0.0, no_matched: true };
    }
    let mut sum = 0.0;
    for pair in pairs {
        for point in &samples.points {
            let g = residual_at(&pair.gt, point, gt_var_count);
            let c = residual_at(&pair.cand, point, gt_var_count);
            sum += (g - c) * (g - c);
        }
    }
    let denom = (pairs.len() * samples.n) as f64;
    ConsRmse { value: (sum / denom).sqrt(), no_matched: false }
}

/// Diagnostic variant over *all* ground-truth rows: unmatched rows compare
/// against the zero function, so missing critical constraints show up as
/// residual mass instead of silently shrinking the matched set.
pub fn cons_rmse_full_baseline(
    rows: &[(CanonRow, Option<CanonRow>)],
    samples: &SampleSet,
    gt_var_count: usize,
) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for (gt_row, cand_row) in rows {
        for point in &samples.points {
            let g = residual_at(gt_row, point, gt_var_count);
            let c = cand_row
                .as_ref()
                .map(|r| residual_at(r, point, gt_var_count))
                .unwrap_or(0.0);
            sum += (g - c) * (g - c);
        }
    }
    let denom = (rows.len() * samples.n) as f64;
    (sum / denom).sqrt()
}

// ---------------------------------------------------------------------------
// Efficiency
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub latency_ms: u64,
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub request_chars: usize,
    pub response_chars: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub latency_ms: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub approximate: bool,
}

/// Latency plus token counts; when the provider reported no usage the
/// counts fall back to ceil(chars / 4) and the outcome is flagged.
pub fn efficiency(t: &Telemetry) -> Efficiency {
    let estimate = |chars: usize| (chars as u64).div_ceil(4);
    let mut approximate = false;
    let input_tokens = t.input_tokens.unwrap_or_else(|| {
        approximate = true;
        estimate(t.request_chars)
    });
    let output_tokens = t.output_tokens.unwrap_or_else(|| {
        approximate = true;
        estimate(t.response_chars)
    });
    Efficiency { latency_ms: t.latency_ms, input_tokens, output_tokens, approximate }
}

// ---------------------------------------------------------------------------
// Metric record
// ---------------------------------------------------------------------------

/// One (model, prompt, problem) evaluation cell. Serialized field names are
/// part of the interchange contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub cons_p: f64,
    pub cons_r: f64,
    pub dv_p: f64,
    pub dv_r: f64,
    /// `None` renders as `--` in tables; the flag says why.
    pub opt_gap: Option<f64>,
    pub obj_rmse: f64,
    pub cons_rmse: f64,
    pub latency_ms: u64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub flags: Vec<String>,
}

impl MetricRecord {
    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// `obj_rmse` is stored as 0.0 when undefined; treat it as absent.
    pub fn obj_rmse_defined(&self) -> Option<f64> {
        if self.has_flag(flags::OBJ_RMSE_UNDEFINED) {
            None
        } else {
            Some(self.obj_rmse)
        }
    }
}
