//! Aggregation over completed metric records: per-problem radar scores,
//! the prompt-effectiveness heatmap, pairwise metric correlations, and the
//! per-problem summary tables.
//!
//! All folds run over a canonically sorted view of the cells so results are
//! independent of insertion order.

use serde::{Deserialize, Serialize};

use crate::metrics::MetricRecord;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReportError {
    #[error("no records for problem `{0}`")]
    EmptyProblemSlice(String),
    #[error("correlations need at least 3 records, got {0}")]
    TooFewRecords(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub model: String,
    pub prompt: String,
    pub problem: String,
    pub record: MetricRecord,
}

/// All evaluated cells; at most one record per (model, prompt, problem).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordSet {
    pub cells: Vec<Cell>,
}

impl RecordSet {
    pub fn insert(&mut self, cell: Cell) -> Result<(), String> {
        if self
            .cells
            .iter()
            .any(|c| c.model == cell.model && c.prompt == cell.prompt && c.problem == cell.problem)
        {
            return Err(format!(
                "duplicate cell ({}, {}, {})",
                cell.model, cell.prompt, cell.problem
            ));
        }
        self.cells.push(cell);
        Ok(())
    }

    /// Cells sorted by (problem, prompt, model border), the canonical fold
    /// order.
    fn sorted(&self) -> Vec<&Cell> {
        let mut cells: Vec<&Cell> = self.cells.iter().collect();
        cells.sort_by(|a, b| {
            (&a.problem, &a.prompt, &a.model).cmp(&(&b.problem, &b.prompt, &b.model))
        });
        cells
    }

    fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.cells.iter().map(|c| c.problem.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    fn prompts(&self) -> Vec<String> {
        let mut out: Vec<String> = self.cells.iter().map(|c| c.prompt.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = self.cells.iter().map(|c| c.model.clone()).collect();
        out.sort();
        out.dedup();
        out
    }
}

// ---------------------------------------------------------------------------
// Metric access
// ---------------------------------------------------------------------------

pub const BENEFIT_METRICS: [&str; 4] = ["cons_p", "cons_r", "dv_p", "dv_r"];
pub const ERROR_METRICS: [&str; 3] = ["opt_gap", "obj_rmse", "cons_rmse"];
pub const EFFICIENCY_METRICS: [&str; 3] = ["latency_ms", "input_tokens", "output_tokens"];
/// Column order for correlations (matches the table column order).
pub const ALL_METRICS: [&str; 10] = [
    "cons_p",
    "cons_r",
    "dv_p",
    "dv_r",
    "opt_gap",
    "obj_rmse",
    "cons_rmse",
    "latency_ms",
    "input_tokens",
    "output_tokens",
];

/// Radar / heatmap axes: the four structural ratios, the three error
/// metrics, and the combined efficiency score.
pub const AXES: [&str; 8] = [
    "cons_p",
    "cons_r",
    "dv_p",
    "dv_r",
    "opt_gap",
    "obj_rmse",
    "cons_rmse",
    "efficiency",
];

fn metric_value(rec: &MetricRecord, metric: &str) -> Option<f64> {
    match metric {
        "cons_p" => Some(rec.cons_p),
        "cons_r" => Some(rec.cons_r),
        "dv_p" => Some(rec.dv_p),
        "dv_r" => Some(rec.dv_r),
        "opt_gap" => rec.opt_gap,
        "obj_rmse" => rec.obj_rmse_defined(),
        "cons_rmse" => Some(rec.cons_rmse),
        "latency_ms" => Some(rec.latency_ms as f64),
        "input_tokens" => Some(rec.input_tokens as f64),
        "output_tokens" => Some(rec.output_tokens as f64),
        _ => None,
    }
}

/// Min-max over the defined values of `metric` in `cells`. Scores are in
/// [0, 1] with higher better: error and efficiency metrics invert after
/// normalization, and a zero range scores 1.0 for every cell.
struct Scaler {
    lo: f64,
    hi: f64,
    invert: bool,
}

impl Scaler {
    fn fit(cells: &[&Cell], metric: &str) -> Option<Scaler> {
        let values: Vec<f64> = cells
            .iter()
            .filter_map(|c| metric_value(&c.record, metric))
            .collect();
        if values.is_empty() {
            return None;
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let invert = !BENEFIT_METRICS.contains(&metric);
        Some(Scaler { lo, hi, invert })
    }

    fn score(&self, value: f64) -> f64 {
        if self.hi == self.lo {
            return 1.0;
        }
        let norm = (value - self.lo) / (self.hi - self.lo);
        if self.invert {
            1.0 - norm
        } else {
            norm
        }
    }
}

/// Per-cell axis scores against scalers fitted on a slice of cells.
fn axis_scores(cell: &Cell, scalers: &[(String, Option<Scaler>)]) -> Vec<Option<f64>> {
    let get = |metric: &str| -> Option<f64> {
        let scaler = scalers.iter().find(|(m, _)| m == metric)?.1.as_ref()?;
        metric_value(&cell.record, metric).map(|v| scaler.score(v))
    };
    let mut out: Vec<Option<f64>> = Vec::with_capacity(AXES.len());
    for metric in BENEFIT_METRICS.iter().chain(ERROR_METRICS.iter()) {
        out.push(get(metric));
    }
    let eff: Vec<f64> = EFFICIENCY_METRICS.iter().filter_map(|m| get(m)).collect();
    out.push(if eff.is_empty() {
        None
    } else {
        Some(eff.iter().sum::<f64>() / eff.len() as f64)
    });
    out
}

fn fit_all(cells: &[&Cell]) -> Vec<(String, Option<Scaler>)> {
    ALL_METRICS
        .iter()
        .map(|m| (m.to_string(), Scaler::fit(cells, m)))
        .collect()
}

// ---------------------------------------------------------------------------
// Radar
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadarScores {
    pub problem: String,
    /// Axis names, parallel to each model's score vector.
    pub axes: Vec<String>,
    pub models: Vec<(String, Vec<Option<f64>>)>,
}

/// Per-model normalized axis scores for one problem: min-max over the
/// problem's cells, error metrics inverted, efficiency averaged from the
/// inverted latency/token scores, then one mean per model across prompts.
pub fn radar_scores(rs: &RecordSet, problem: &str) -> Result<RadarScores, ReportError> {
    let cells: Vec<&Cell> = rs.sorted().into_iter().filter(|c| c.problem == problem).collect();
    if cells.is_empty() {
        return Err(ReportError::EmptyProblemSlice(problem.to_string()));
    }
    let scalers = fit_all(&cells);
    let mut models = Vec::new();
    for model in rs.models() {
        let mine: Vec<&&Cell> = cells.iter().filter(|c| c.model == model).collect();
        if mine.is_empty() {
            continue;
        }
        let mut sums = vec![(0.0f64, 0usize); AXES.len()];
        for cell in &mine {
            for (i, s) in axis_scores(cell, &scalers).into_iter().enumerate() {
                if let Some(v) = s {
                    sums[i].0 += v;
                    sums[i].1 += 1;
                }
            }
        }
        let scores = sums
            .into_iter()
            .map(|(sum, n)| if n == 0 { None } else { Some(sum / n as f64) })
            .collect();
        models.push((model, scores));
    }
    Ok(RadarScores {
        problem: problem.to_string(),
        axes: AXES.iter().map(|s| s.to_string()).collect(),
        models,
    })
}

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapScores {
    pub problems: Vec<String>,
    pub prompts: Vec<String>,
    /// `values[problem][prompt]`: aggregate score in [0, 100].
    pub values: Vec<Vec<Option<f64>>>,
}

/// Aggregate performance per (problem, prompt): min-max within the problem
/// across all (prompt, model) cells, error inversion, efficiency trio
/// averaged, then the mean over models and metrics scaled to a percentage.
pub fn heatmap_scores(rs: &RecordSet) -> HeatmapScores {
    let problems = rs.problems();
    let prompts = rs.prompts();
    let sorted = rs.sorted();
    let mut values = Vec::new();
    for problem in &problems {
        let slice: Vec<&Cell> = sorted.iter().copied().filter(|c| &c.problem == problem).collect();
        let scalers = fit_all(&slice);
        let mut row = Vec::new();
        for prompt in &prompts {
            let mut entries: Vec<f64> = Vec::new();
            for cell in slice.iter().filter(|c| &c.prompt == prompt) {
                entries.extend(axis_scores(cell, &scalers).into_iter().flatten());
            }
            row.push(if entries.is_empty() {
                None
            } else {
                Some(entries.iter().sum::<f64>() / entries.len() as f64 * 100.0)
            });
        }
        values.push(row);
    }
    HeatmapScores { problems, prompts, values }
}

// ---------------------------------------------------------------------------
// Correlations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<String>,
    /// `r[i][j]`: Pearson correlation, `None` when undefined (zero variance
    /// or fewer than 3 pairwise-complete cells).
    pub r: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 3 {
        return None;
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|(x, _)| x).sum::<f64>() / nf;
    let my = pairs.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let syy: f64 = pairs.iter().map(|(_, y)| (y - my) * (y - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / (sxx * syy).sqrt())
}

/// Pairwise Pearson correlations over all cells, with pairwise-complete
/// deletion of cells whose either value is undefined.
pub fn correlations(rs: &RecordSet) -> Result<CorrelationMatrix, ReportError> {
    if rs.cells.len() < 3 {
        return Err(ReportError::TooFewRecords(rs.cells.len()));
    }
    let sorted = rs.sorted();
    let columns: Vec<Vec<Option<f64>>> = ALL_METRICS
        .iter()
        .map(|m| sorted.iter().map(|c| metric_value(&c.record, m)).collect())
        .collect();
    let k = ALL_METRICS.len();
    let mut r = vec![vec![None; k]; k];
    let mut counts = vec![vec![0usize; k]; k];
    for i in 0..k {
        for j in 0..k {
            let pairs: Vec<(f64, f64)> = columns[i]
                .iter()
                .zip(&columns[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .collect();
            counts[i][j] = pairs.len();
            r[i][j] = pearson(&pairs);
        }
    }
    Ok(CorrelationMatrix {
        metrics: ALL_METRICS.iter().map(|s| s.to_string()).collect(),
        r,
        counts,
    })
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Markdown,
}

impl TableFormat {
    pub fn parse(s: &str) -> Option<TableFormat> {
        match s {
            "csv" => Some(TableFormat::Csv),
            "json" => Some(TableFormat::Json),
            "md" | "markdown" => Some(TableFormat::Markdown),
            _ => None,
        }
    }
}

pub const TABLE_COLUMNS: [&str; 12] = [
    "prompt",
    "model",
    "cons_p",
    "cons_r",
    "dv_p",
    "dv_r",
    "opt_gap",
    "obj_rmse",
    "cons_rmse",
    "latency",
    "input_tokens",
    "output_tokens",
];

fn table_row(cell: &Cell) -> Vec<String> {
    let rec = &cell.record;
    let f2 = |v: f64| format!("{v:.2}");
    let gap = match rec.opt_gap {
        Some(v) => f2(v),
        None => "--".to_string(),
    };
    let obj = match rec.obj_rmse_defined() {
        Some(v) => f2(v),
        None => "--".to_string(),
    };
    vec![
        cell.prompt.clone(),
        cell.model.clone(),
        f2(rec.cons_p),
        f2(rec.cons_r),
        f2(rec.dv_p),
        f2(rec.dv_r),
        gap,
        obj,
        f2(rec.cons_rmse),
        f2(rec.latency_ms as f64 / 1000.0), // seconds
        rec.input_tokens.to_string(),
        rec.output_tokens.to_string(),
    ]
}

/// One document per problem (sorted problem order), rows sorted by
/// (prompt, model). Undefined values render as `--`.
pub fn emit_tables(rs: &RecordSet, format: TableFormat) -> Vec<(String, String)> {
    let sorted = rs.sorted();
    let mut out = Vec::new();
    for problem in rs.problems() {
        let rows: Vec<Vec<String>> = sorted
            .iter()
            .filter(|c| c.problem == problem)
            .map(|c| table_row(c))
            .collect();
        let doc = match format {
            TableFormat::Csv => {
                let mut doc = TABLE_COLUMNS.join(",");
                doc.push('\n');
                for row in &rows {
                    doc.push_str(&row.join(","));
                    doc.push('\n');
                }
                doc
            }
            TableFormat::Json => {
                let objects: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|row| {
                        let mut obj = serde_json::Map::new();
                        for (k, v) in TABLE_COLUMNS.iter().zip(row) {
                            obj.insert(k.to_string(), serde_json::Value::String(v.clone()));
                        }
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                serde_json::to_string_pretty(&objects).expect("serialize") + "\n"
            }
            TableFormat::Markdown => {
                let mut widths: Vec<usize> = TABLE_COLUMNS.iter().map(|c| c.len()).collect();
                for row in &rows {
                    for (i, v) in row.iter().enumerate() {
                        widths[i] = widths[i].max(v.len());
                    }
                }
                let fmt_row = |vals: &[String]| {
                    let padded: Vec<String> = vals
                        .iter()
                        .enumerate()
                        .map(|(i, v)| format!("{v:<width$}", width = widths[i]))
                        .collect();
                    format!("| {} |\n", padded.join(" | "))
                };
                let header: Vec<String> = TABLE_COLUMNS.iter().map(|s| s.to_string()).collect();
                let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
                let mut doc = fmt_row(&header);
                doc.push_str(&fmt_row(&rule));
                for row in &rows {
                    doc.push_str(&fmt_row(row));
                }
                doc
            }
        };
        out.push((problem, doc));
    }
    out
}

/// Plot-data CSV for the radar scores: one row per (model, axis).
pub fn emit_radar_csv(scores: &RadarScores) -> String {
    let mut doc = String::from("problem,model,axis,score\n");
    for (model, values) in &scores.models {
        for (axis, value) in scores.axes.iter().zip(values) {
            let rendered = value.map(|v| format!("{v:.6}")).unwrap_or_default();
            doc.push_str(&format!("{},{},{},{}\n", scores.problem, model, axis, rendered));
        }
    }
    doc
}

/// Plot-data CSV for the heatmap: problems as rows, prompts as columns.
pub fn emit_heatmap_csv(scores: &HeatmapScores) -> String {
    let mut doc = String::from("problem");
    for p in &scores.prompts {
        doc.push(',');
        doc.push_str(p);
    }
    doc.push('\n');
    for (problem, row) in scores.problems.iter().zip(&scores.values) {
        doc.push_str(problem);
        for v in row {
            doc.push(',');
            if let Some(v) = v {
                doc.push_str(&format!("{v:.2}"));
            }
        }
        doc.push('\n');
    }
    doc
}

/// Correlation matrix CSV; undefined entries render blank, not zero.
pub fn emit_correlations_csv(matrix: &CorrelationMatrix) -> String {
    let mut doc = String::from("metric");
    for m in &matrix.metrics {
        doc.push(',');
        doc.push_str(m);
    }
    doc.push('\n');
    for (i, m) in matrix.metrics.iter().enumerate() {
        doc.push_str(m);
        for j in 0..matrix.metrics.len() {
            doc.push(',');
            if let Some(r) = matrix.r[i][j] {
                doc.push_str(&format!("{r:.4}"));
            }
        }
        doc.push('\n');
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        ratios: (f64, f64, f64, f64),
        gap: Option<f64>,
        obj: f64,
        cons: f64,
        latency_ms: u64,
        input: u64,
        output: u64,
    ) -> MetricRecord {
        let mut flags = Vec::new();
        if gap.is_none() {
            flags.push(crate::metrics::flags::GAP_UNDEFINED.to_string());
        }
        MetricRecord {
            cons_p: ratios.0,
            cons_r: ratios.1,
            dv_p: ratios.2,
            dv_r: ratios.3,
            opt_gap: gap,
            obj_rmse: obj,
            cons_rmse: cons,
            latency_ms,
            input_tokens: input,
            output_tokens: output,
            flags,
        }
    }

    fn cell(model: &str, prompt: &str, problem: &str, rec: MetricRecord) -> Cell {
        Cell { model: model.into(), prompt: prompt.into(), problem: problem.into(), record: rec }
    }

    fn radar_fixture() -> RecordSet {
        let mut rs = RecordSet::default();
        rs.insert(cell("m1", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 2000, 100, 50))).unwrap();
        rs.insert(cell("m1", "P2", "p", record((0.8, 0.9, 1.0, 0.5), Some(0.5), 10.0, 2.0, 7000, 200, 150))).unwrap();
        rs.insert(cell("m2", "P1", "p", record((0.6, 0.8, 0.5, 1.0), Some(0.25), 5.0, 1.0, 12000, 100, 100))).unwrap();
        rs.insert(cell("m2", "P2", "p", record((1.0, 0.7, 0.75, 0.75), None, 20.0, 4.0, 4000, 200, 200))).unwrap();
        rs
    }

    #[test]
    fn radar_golden_values() {
        // Hand-computed normalization for the four-cell fixture.
        let rs = radar_fixture();
        let radar = radar_scores(&rs, "p").unwrap();
        let get = |model: &str| -> Vec<Option<f64>> {
            radar.models.iter().find(|(m, _)| m == model).unwrap().1.clone()
        };
        let m1 = get("m1");
        let m2 = get("m2");
        let expect = |got: Option<f64>, want: f64| {
            assert!((got.unwrap() - want).abs() < 1e-12, "got {got:?}, want {want}");
        };
        expect(m1[0], 0.75); // cons_p
        expect(m1[1], 0.8333333333333334); // cons_r
        expect(m1[2], 1.0); // dv_p
        expect(m1[3], 0.5); // dv_r
        expect(m1[4], 0.5); // opt_gap
        expect(m1[5], 0.75); // obj_rmse
        expect(m1[6], 0.75); // cons_rmse
        expect(m1[7], 0.6388888888888888); // efficiency
        expect(m2[0], 0.5);
        expect(m2[1], 0.1666666666666668);
        expect(m2[2], 0.25);
        expect(m2[3], 0.75);
        expect(m2[4], 0.5); // only the defined P1 gap participates
        expect(m2[5], 0.375);
        expect(m2[6], 0.375);
        expect(m2[7], 0.4111111111111111);
    }

    #[test]
    fn radar_zero_range_scores_one() {
        let mut rs = RecordSet::default();
        rs.insert(cell("a", "P1", "p", record((0.7, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 10, 10))).unwrap();
        rs.insert(cell("b", "P1", "p", record((0.7, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 10, 10))).unwrap();
        let radar = radar_scores(&rs, "p").unwrap();
        for (_, scores) in &radar.models {
            for s in scores {
                assert_eq!(*s, Some(1.0));
            }
        }
    }

    #[test]
    fn radar_minmax_endpoints() {
        // gaps {0, 0.5} -> inverted scores {1, 0}; latency {2,7,12}s ->
        // inverted {1.0, 0.5, 0.0}.
        let mut rs = RecordSet::default();
        rs.insert(cell("a", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 2000, 10, 10))).unwrap();
        rs.insert(cell("b", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.5), 0.0, 0.0, 7000, 10, 10))).unwrap();
        rs.insert(cell("c", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.25), 0.0, 0.0, 12000, 10, 10))).unwrap();
        let radar = radar_scores(&rs, "p").unwrap();
        let gap_idx = 4;
        let get = |m: &str| radar.models.iter().find(|(mm, _)| mm == m).unwrap().1.clone();
        assert_eq!(get("a")[gap_idx], Some(1.0));
        assert_eq!(get("b")[gap_idx], Some(0.0));
        // Efficiency = mean of inverted latency/input/output; tokens are
        // zero-range (all 10) so they score 1.0 each.
        let eff = |m: &str| get(m)[7].unwrap();
        assert!((eff("a") - (1.0 + 1.0 + 1.0) / 3.0).abs() < 1e-12);
        assert!((eff("b") - (0.5 + 1.0 + 1.0) / 3.0).abs() < 1e-12);
        assert!((eff("c") - (0.0 + 1.0 + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn radar_empty_slice_errors() {
        let rs = RecordSet::default();
        assert_eq!(
            radar_scores(&rs, "nope"),
            Err(ReportError::EmptyProblemSlice("nope".into()))
        );
    }

    fn heatmap_fixture() -> RecordSet {
        let mut rs = RecordSet::default();
        rs.insert(cell("m1", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 2000, 100, 50))).unwrap();
        rs.insert(cell("m2", "P1", "p", record((0.5, 1.0, 1.0, 0.5), Some(0.2), 4.0, 1.0, 6000, 100, 150))).unwrap();
        rs.insert(cell("m1", "P2", "p", record((0.75, 0.5, 0.5, 1.0), Some(0.1), 8.0, 0.5, 4000, 120, 100))).unwrap();
        rs.insert(cell("m2", "P2", "p", record((1.0, 0.75, 0.75, 0.75), Some(0.0), 2.0, 2.0, 8000, 120, 250))).unwrap();
        rs
    }

    #[test]
    fn heatmap_golden_values() {
        let hm = heatmap_scores(&heatmap_fixture());
        assert_eq!(hm.problems, vec!["p".to_string()]);
        assert_eq!(hm.prompts, vec!["P1".to_string(), "P2".to_string()]);
        let p1 = hm.values[0][0].unwrap();
        let p2 = hm.values[0][1].unwrap();
        assert!((p1 - 72.56944444444444).abs() < 1e-9, "{p1}");
        assert!((p2 - 46.70138888888889).abs() < 1e-9, "{p2}");
    }

    #[test]
    fn heatmap_uniform_records_score_100() {
        let mut rs = RecordSet::default();
        for (m, p) in [("a", "P1"), ("b", "P1"), ("a", "P2"), ("b", "P2")] {
            rs.insert(cell(m, p, "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 10, 20))).unwrap();
        }
        let hm = heatmap_scores(&rs);
        for row in &hm.values {
            for v in row {
                assert_eq!(*v, Some(100.0));
            }
        }
    }

    #[test]
    fn heatmap_dominant_prompt_hits_100() {
        // P1 dominates every metric, so its aggregate is exactly 100.
        let mut rs = RecordSet::default();
        rs.insert(cell("m", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 10, 10))).unwrap();
        rs.insert(cell("m", "P2", "p", record((0.5, 0.5, 0.5, 0.5), Some(1.0), 5.0, 5.0, 9000, 90, 90))).unwrap();
        let hm = heatmap_scores(&rs);
        assert_eq!(hm.values[0][0], Some(100.0));
        assert_eq!(hm.values[0][1], Some(0.0));
    }

    #[test]
    fn correlations_identity_and_anticorrelation() {
        let mut rs = RecordSet::default();
        for i in 0..5 {
            let x = i as f64 / 4.0;
            rs.insert(cell(
                &format!("m{i}"),
                "P1",
                "p",
                record((x, 1.0 - x, 1.0, 1.0), Some(x), 0.0, 0.0, 1000, 10, 10),
            ))
            .unwrap();
        }
        let m = correlations(&rs).unwrap();
        let idx = |name: &str| m.metrics.iter().position(|x| x == name).unwrap();
        let r = |a: &str, b: &str| m.r[idx(a)][idx(b)];
        assert!((r("cons_p", "cons_p").unwrap() - 1.0).abs() < 1e-12);
        assert!((r("cons_p", "cons_r").unwrap() + 1.0).abs() < 1e-12);
        assert!((r("cons_p", "opt_gap").unwrap() - 1.0).abs() < 1e-12);
        // dv_p is constant: undefined correlation, reported blank.
        assert_eq!(r("dv_p", "cons_p"), None);
        // Symmetry.
        assert_eq!(r("cons_r", "opt_gap"), r("opt_gap", "cons_r"));
    }

    #[test]
    fn correlations_require_three_records() {
        let mut rs = RecordSet::default();
        rs.insert(cell("a", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 10, 10))).unwrap();
        assert_eq!(correlations(&rs), Err(ReportError::TooFewRecords(1)));
    }

    #[test]
    fn correlations_pairwise_deletion_of_undefined() {
        let mut rs = RecordSet::default();
        // Three defined gaps plus two undefined; gap column pairs use only
        // the defined cells.
        let gaps = [Some(0.0), Some(0.5), None, Some(1.0), None];
        for (i, g) in gaps.iter().enumerate() {
            let x = i as f64;
            rs.insert(cell(&format!("m{i}"), "P1", "p", record((x / 4.0, 1.0, 1.0, 1.0), *g, x, 0.0, 1000, 10, 10))).unwrap();
        }
        let m = correlations(&rs).unwrap();
        let idx = |name: &str| m.metrics.iter().position(|x| x == name).unwrap();
        assert_eq!(m.counts[idx("opt_gap")][idx("obj_rmse")], 3);
        assert_eq!(m.counts[idx("cons_p")][idx("obj_rmse")], 5);
        assert!(m.r[idx("opt_gap")][idx("obj_rmse")].is_some());
    }

    #[test]
    fn table_renders_reference_row() {
        let mut rs = RecordSet::default();
        rs.insert(cell(
            "gpt-5",
            "P1",
            "knapsack",
            record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 2000, 137, 39),
        ))
        .unwrap();
        let docs = emit_tables(&rs, TableFormat::Csv);
        assert_eq!(docs.len(), 1);
        let body = &docs[0].1;
        assert!(body.contains("P1,gpt-5,1.00,1.00,1.00,1.00,0.00,0.00,0.00,2.00,137,39"), "{body}");
    }

    #[test]
    fn table_empty_recordset_is_headers_only() {
        let docs = emit_tables(&RecordSet::default(), TableFormat::Csv);
        assert!(docs.is_empty());
    }

    #[test]
    fn table_renders_undefined_gap_as_dashes() {
        let mut rs = RecordSet::default();
        rs.insert(cell("llama", "P3", "p", record((1.0, 1.0, 1.0, 1.0), None, 2031.0, 0.43, 10440, 219, 331))).unwrap();
        let docs = emit_tables(&rs, TableFormat::Markdown);
        assert!(docs[0].1.contains("--"));
        let csv = emit_tables(&rs, TableFormat::Csv);
        assert!(csv[0].1.contains(",--,"));
    }

    #[test]
    fn aggregation_is_insertion_order_invariant() {
        let rs = radar_fixture();
        let mut reversed = RecordSet::default();
        for c in rs.cells.iter().rev() {
            reversed.insert(c.clone()).unwrap();
        }
        let a = radar_scores(&rs, "p").unwrap();
        let b = radar_scores(&reversed, "p").unwrap();
        assert_eq!(a, b);
        assert_eq!(heatmap_scores(&rs), heatmap_scores(&reversed));
        assert_eq!(correlations(&rs).unwrap(), correlations(&reversed).unwrap());
    }

    #[test]
    fn duplicate_cells_rejected() {
        let mut rs = RecordSet::default();
        let c = cell("m", "P1", "p", record((1.0, 1.0, 1.0, 1.0), Some(0.0), 0.0, 0.0, 1000, 1, 1));
        rs.insert(c.clone()).unwrap();
        assert!(rs.insert(c).is_err());
    }
}
