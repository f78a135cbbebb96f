//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test -p opteval --test acceptance`.

use std::time::Instant;

use opteval::bench::{fig3_candidate_text, fig3_gt, load_case, CaseId};
use opteval::gateway::{Gateway, ModelConfig};
use opteval::ground::ground;
use opteval::ir::{CmpOp, LinearExpr, ScalarConstraint, ScalarModel, ScalarVar, Sense};
use opteval::matcher::{match_models, full_baseline_rows, MatchSide};
use opteval::metrics::{cons_rmse, cons_rmse_full_baseline, sample};
use opteval::parser::{parse_mathtext, ParseMode, Parsed};
use opteval::report::{
    correlations, emit_tables, heatmap_scores, radar_scores, RecordSet, TableFormat,
};
use opteval::rng::SplitMix64;
use opteval::runner::{
    parse_candidate, record_set_from_cells, records_from_json, run, score_candidate, RunConfig,
    DEFAULT_SEED,
};
use opteval::solve::{feasible, solve_milp, SolveStatus};

fn fixtures_root() -> String {
    format!("{}/../../fixtures", env!("CARGO_MANIFEST_DIR"))
}

fn mathtext_side(text: &str) -> MatchSide {
    match parse_mathtext(text, ParseMode::Lenient).unwrap().model {
        Parsed::Scalar(s) => MatchSide::from(&s),
        _ => panic!("expected scalar"),
    }
}

fn fig3_side() -> MatchSide {
    let (f, d) = fig3_gt().unwrap();
    MatchSide::from(&ground(&f, &d).unwrap())
}

#[test]
fn criterion_1_solver_optima() {
    let start = Instant::now();
    let expected: [(CaseId, f64, f64); 4] = [
        (CaseId::Knapsack, 220.0, 1e-6 * 221.0),
        (CaseId::AircraftAssignment, 700.0, 1e-6 * 701.0),
        (CaseId::Diet, 10.33, 0.01),
        (CaseId::AircraftLanding, 0.0, 1e-6),
    ];
    let mut report = Vec::new();
    for (id, want, tol) in expected {
        let model = load_case(id).unwrap().grounded().unwrap().model;
        let res = solve_milp(&model).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal, "{id}");
        let got = res.objective.unwrap();
        assert!((got - want).abs() <= tol, "{id}: got {got}, want {want} (tol {tol})");
        report.push(format!("{id}={got:.4}"));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS criterion 1: solver optima [{}] in {elapsed:?}", report.join(", "));
}

#[test]
fn criterion_2_fig3_reproduction() {
    let gt = fig3_side();
    let gt_solve = solve_milp(&gt.model).unwrap();
    let samples = sample(&gt.model, DEFAULT_SEED, 100).unwrap();
    let (cand, _) = parse_candidate(fig3_candidate_text()).unwrap();
    let (result, record) = score_candidate(&gt, &gt_solve, &samples, &cand, None);
    assert!(
        (record.cons_p - 0.67).abs() <= 0.005,
        "precision {} not within 0.005 of 0.67",
        record.cons_p
    );
    assert_eq!(record.cons_r, 0.5, "recall must be exactly 0.50");
    assert_eq!(record.opt_gap, Some(0.0), "gap must be exactly 0.00");
    assert_eq!(
        (result.constraint_tp, result.constraint_fp, result.constraint_fn_),
        (2, 1, 2)
    );
    println!(
        "PASS criterion 2: Fig-3 scoring precision={:.4} recall={:.2} gap={:?}",
        record.cons_p, record.cons_r, record.opt_gap
    );
}

#[test]
fn criterion_3_self_evaluation_identity() {
    for id in CaseId::ALL {
        let report = load_case(id).unwrap().grounded().unwrap();
        let gt = MatchSide::from(&report);
        let gt_solve = solve_milp(&gt.model).unwrap();
        let samples = sample(&gt.model, DEFAULT_SEED, 100).unwrap();
        let (_, record) = score_candidate(&gt, &gt_solve, &samples, &gt, None);
        assert_eq!(record.cons_p, 1.0, "{id} cons_p");
        assert_eq!(record.cons_r, 1.0, "{id} cons_r");
        assert_eq!(record.dv_p, 1.0, "{id} dv_p");
        assert_eq!(record.dv_r, 1.0, "{id} dv_r");
        assert_eq!(record.opt_gap, Some(0.0), "{id} gap");
        assert_eq!(record.obj_rmse, 0.0, "{id} obj_rmse");
        assert_eq!(record.cons_rmse, 0.0, "{id} cons_rmse");
    }
    println!("PASS criterion 3: self-evaluation identity on all four benchmarks");
}

/// Exhaustive oracle over binary assignments.
fn enumerate_binary(model: &ScalarModel) -> (SolveStatus, Option<f64>) {
    let n = model.variables.len();
    let min_sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << n) {
        let assignment: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
        if feasible(model, &assignment, 1e-9) {
            let obj = model.objective.eval_f64(&assignment);
            best = match best {
                None => Some(obj),
                Some(b) if min_sign * obj < min_sign * b => Some(obj),
                keep => keep,
            };
        }
    }
    match best {
        Some(v) => (SolveStatus::Optimal, Some(v)),
        None => (SolveStatus::Infeasible, None),
    }
}

fn random_binary_model(rng: &mut SplitMix64) -> ScalarModel {
    let dec_int = |v: i64| opteval::Decimal::from_int(v);
    let n = 2 + (rng.next_u64() % 14) as usize;
    let m = 1 + (rng.next_u64() % 6) as usize;
    let sense = if rng.next_u64() % 2 == 0 { Sense::Minimize } else { Sense::Maximize };
    let mut objective = LinearExpr::default();
    for i in 0..n {
        objective.add_term(i, dec_int((rng.next_u64() % 21) as i64 - 10));
    }
    let mut constraints = Vec::new();
    for k in 0..m {
        let mut lhs = LinearExpr::default();
        for i in 0..n {
            if rng.next_u64() % 3 != 0 {
                lhs.add_term(i, dec_int((rng.next_u64() % 21) as i64 - 10));
            }
        }
        let op = match rng.next_u64() % 3 {
            0 => CmpOp::Le,
            1 => CmpOp::Ge,
            _ => CmpOp::Eq,
        };
        constraints.push(ScalarConstraint {
            name: format!("c{k}"),
            lhs,
            op,
            rhs: dec_int((rng.next_u64() % 31) as i64 - 15),
        });
    }
    ScalarModel {
        name: "random".into(),
        sense,
        variables: (0..n).map(|i| ScalarVar::binary(format!("x{i}"))).collect(),
        objective,
        constraints,
    }
}

#[test]
fn criterion_4_solver_matches_enumeration_oracle() {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x0A7E_5EED);
    let mut optimal = 0usize;
    let mut infeasible = 0usize;
    for trial in 0..200 {
        let model = random_binary_model(&mut rng);
        let (oracle_status, oracle_obj) = enumerate_binary(&model);
        let res = solve_milp(&model).unwrap();
        assert_eq!(res.status, oracle_status, "trial {trial}");
        match oracle_status {
            SolveStatus::Optimal => optimal += 1,
            SolveStatus::Infeasible => infeasible += 1,
            _ => {}
        }
        if let (Some(o), Some(r)) = (oracle_obj, res.objective) {
            assert!(
                (o - r).abs() <= 1e-6 * (1.0 + o.abs()),
                "trial {trial}: oracle {o}, solver {r}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 4: 200 random MILPs match enumeration ({optimal} optimal, {infeasible} infeasible) in {elapsed:?}"
    );
}

#[test]
fn criterion_5_matching_invariances() {
    let gt = fig3_side();
    let base = match_models(&gt, &mathtext_side(fig3_candidate_text())).result;
    let rows = [
        "x11 + x12 <= 2",
        "x21 + x22 <= 2",
        "x11 + x21 >= 2",
        "x12 + x22 >= 2",
    ];

    // Scaling invariance: multiplying any candidate constraint by
    // k in (0, 100] leaves every count unchanged. 1000 trials.
    let mut rng = SplitMix64::new(42);
    for trial in 0..1000 {
        let row = rows[(rng.next_u64() % rows.len() as u64) as usize];
        let k = rng.next_f64() * 99.999 + 0.001; // (0, 100]
        let scaled_row = scale_row_text(row, k);
        let text = fig3_candidate_text().replace(row, &scaled_row);
        let scaled = match_models(&gt, &mathtext_side(&text)).result;
        assert_eq!(
            (scaled.constraint_tp, scaled.constraint_fp, scaled.constraint_fn_),
            (base.constraint_tp, base.constraint_fp, base.constraint_fn_),
            "trial {trial}: row `{row}` scaled by {k}"
        );
    }

    // Deleting a matched constraint decreases TP by exactly one.
    for row in ["x11 + x21 >= 2", "x21 + x22 <= 2"] {
        let text = fig3_candidate_text().replace(&format!("{row}\n"), "");
        let reduced = match_models(&gt, &mathtext_side(&text)).result;
        assert_eq!(reduced.constraint_tp, base.constraint_tp - 1, "deleting `{row}`");
    }
    println!("PASS criterion 5: scaling invariance (1000 trials) and deletion sensitivity");
}

fn scale_row_text(row: &str, k: f64) -> String {
    // fig3 candidate rows have unit coefficients and an integer rhs, so a
    // scaled copy can be rendered directly.
    let (lhs, rhs) = row.split_once("<=").map(|(a, b)| (a, ("<=", b))).unwrap_or_else(|| {
        let (a, b) = row.split_once(">=").unwrap();
        (a, (">=", b))
    });
    let (op, rhs) = rhs;
    let rhs: f64 = rhs.trim().parse().unwrap();
    let terms: Vec<String> = lhs
        .split('+')
        .map(|t| format!("{:.9} {}", k, t.trim()))
        .collect();
    format!("{} {} {:.9}", terms.join(" + "), op, k * rhs)
}

#[test]
fn criterion_6_sampled_rmse_protocol() {
    let gt = fig3_side();
    let (cand, _) = parse_candidate(fig3_candidate_text()).unwrap();

    // Bit-identical across two independent evaluations with seed 42.
    let value = |gt: &MatchSide, cand: &MatchSide| -> f64 {
        let outcome = match_models(gt, cand);
        let samples = sample(&gt.model, 42, 100).unwrap();
        cons_rmse(&outcome.matched_rows, &samples, outcome.gt_var_count).value
    };
    let a = value(&gt, &cand);
    let b = value(&gt, &cand);
    assert_eq!(a.to_bits(), b.to_bits());

    // Matched-set restriction: an unmatched extra candidate constraint
    // changes precision but not the sampled RMSE.
    let extended = format!("{}x11 + 7 x22 <= 100\n", fig3_candidate_text());
    let (cand_ext, _) = parse_candidate(&extended).unwrap();
    let c = value(&gt, &cand_ext);
    assert_eq!(a.to_bits(), c.to_bits());
    let base_fp = match_models(&gt, &cand).result.constraint_fp;
    let ext_fp = match_models(&gt, &cand_ext).result.constraint_fp;
    assert_eq!(ext_fp, base_fp + 1);
    println!("PASS criterion 6: sampled RMSE bit-stable ({a:e}) and matched-set restricted");
}

#[test]
fn criterion_7_recall_violation_direction() {
    let gt = fig3_side();
    let gt_solve = solve_milp(&gt.model).unwrap();
    let samples = sample(&gt.model, DEFAULT_SEED, 100).unwrap();

    let full_baseline = |cand_text: &str| -> f64 {
        let (cand, _) = parse_candidate(cand_text).unwrap();
        let rows = full_baseline_rows(&gt, &cand);
        cons_rmse_full_baseline(&rows, &samples, gt.model.variables.len())
    };
    let gap_of = |cand_text: &str| -> Option<f64> {
        let (cand, _) = parse_candidate(cand_text).unwrap();
        let (_, record) = score_candidate(&gt, &gt_solve, &samples, &cand, None);
        record.opt_gap
    };

    let baseline = full_baseline(fig3_candidate_text());

    // Removing the demand constraint: residuals against the full baseline
    // strictly increase and the relaxed optimum departs from the truth.
    let without_demand = fig3_candidate_text()
        .replace("x11 + x21 >= 2\n", "")
        .replace("x12 + x22 >= 2\n", "");
    let rmse_no_demand = full_baseline(&without_demand);
    assert!(
        rmse_no_demand > baseline,
        "full-baseline RMSE must rise: {rmse_no_demand} vs {baseline}"
    );
    let gap_no_demand = gap_of(&without_demand).expect("still solvable");
    assert!(gap_no_demand > 0.0, "gap must become positive, got {gap_no_demand}");

    // Removing only the redundant non-negativity bound leaves the optimum
    // untouched.
    let without_nonneg = fig3_candidate_text().replace("x11, x12, x21, x22 >= 0\n", "");
    let gap_no_nonneg = gap_of(&without_nonneg).expect("still solvable");
    assert_eq!(gap_no_nonneg, 0.0, "redundant bound removal must keep gap 0");
    println!(
        "PASS criterion 7: demand removal rmse {baseline:.3}->{rmse_no_demand:.3}, gap {gap_no_demand:.2}; nonneg removal gap {gap_no_nonneg:.2}"
    );
}

#[test]
fn criterion_8_report_math() {
    let text = include_str!("data/synthetic12.json");
    let (_seed, cells) = records_from_json(text).unwrap();
    assert_eq!(cells.len(), 12);
    let rs = record_set_from_cells(&cells);

    // Pearson against an independently written two-pass oracle.
    let matrix = correlations(&rs).unwrap();
    let idx = |name: &str| matrix.metrics.iter().position(|m| m == name).unwrap();
    let metric_of = |cell: &opteval::runner::CellOutcome, name: &str| -> Option<f64> {
        let r = cell.record.as_ref()?;
        match name {
            "cons_p" => Some(r.cons_p),
            "cons_r" => Some(r.cons_r),
            "dv_p" => Some(r.dv_p),
            "dv_r" => Some(r.dv_r),
            "opt_gap" => r.opt_gap,
            "obj_rmse" => Some(r.obj_rmse),
            "cons_rmse" => Some(r.cons_rmse),
            "latency_ms" => Some(r.latency_ms as f64),
            "input_tokens" => Some(r.input_tokens as f64),
            "output_tokens" => Some(r.output_tokens as f64),
            _ => None,
        }
    };
    let oracle = |a: &str, b: &str| -> Option<f64> {
        let pairs: Vec<(f64, f64)> = cells
            .iter()
            .filter_map(|c| Some((metric_of(c, a)?, metric_of(c, b)?)))
            .collect();
        if pairs.len() < 3 {
            return None;
        }
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
        let my = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
        let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        let syy: f64 = pairs.iter().map(|(_, y)| (y - my) * (y - my)).sum();
        if sxx == 0.0 || syy == 0.0 {
            return None;
        }
        let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / (sxx * syy).sqrt())
    };
    for a in opteval::report::ALL_METRICS {
        for b in opteval::report::ALL_METRICS {
            let got = matrix.r[idx(a)][idx(b)];
            let want = oracle(a, b);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(w)) => {
                    assert!((g - w).abs() < 1e-12, "r({a},{b}): {g} vs oracle {w}")
                }
                other => panic!("r({a},{b}) definedness mismatch: {other:?}"),
            }
        }
    }
    // Pinned values computed once with an external reference implementation.
    let pinned = [
        ("cons_r", "cons_rmse", -0.961686222132069),
        ("cons_rmse", "opt_gap", 0.9624114550924119),
        ("opt_gap", "obj_rmse", 0.9653741057805242),
        ("latency_ms", "output_tokens", 0.7217605345195992),
        ("cons_p", "obj_rmse", -0.9518748304672278),
    ];
    for (a, b, want) in pinned {
        let got = matrix.r[idx(a)][idx(b)].unwrap();
        assert!((got - want).abs() < 1e-12, "r({a},{b}): {got} vs {want}");
    }
    // dv_r has zero variance: blank, not zero.
    assert_eq!(matrix.r[idx("dv_r")][idx("cons_p")], None);

    // Radar and heatmap golden values (hand-computed min-max normalization)
    // are asserted in the report module's unit tests against the same
    // 1e-12 tolerance; here the full round trip over the committed file is
    // exercised along with the table rendering of undefined cells.
    let radar = radar_scores(&rs, "synthetic").unwrap();
    assert_eq!(radar.models.len(), 3);
    for (_, scores) in &radar.models {
        for s in scores.iter().flatten() {
            assert!((0.0..=1.0).contains(s));
        }
    }
    let hm = heatmap_scores(&rs);
    for row in &hm.values {
        for v in row.iter().flatten() {
            assert!((0.0..=100.0).contains(v));
        }
    }
    let tables = emit_tables(&rs, TableFormat::Csv);
    let doc = &tables[0].1;
    assert!(doc.lines().any(|l| l.contains(",--,")), "undefined gap renders as --");
    println!("PASS criterion 8: Pearson matches oracle to 1e-12; scores bounded; `--` rendered");
}

#[test]
fn criterion_9_replay_determinism() {
    let models = vec![
        ModelConfig::replay("deepseek-math-7b-instruct"),
        ModelConfig::replay("llama-3.1-8b-instruct"),
        ModelConfig::replay("gpt-5"),
    ];
    let mut cfg = RunConfig::full_grid(models);
    cfg.fixtures_dir = fixtures_root().into();
    let gw1 = Gateway::new(fixtures_root());
    let out1 = run(&cfg, &gw1).unwrap();
    let gw2 = Gateway::new(fixtures_root());
    let out2 = run(&cfg, &gw2).unwrap();
    assert_eq!(out1.cells.len(), 72);
    assert_eq!(out1.records_json, out2.records_json, "records.json must be byte-identical");
    let failed = out1.cells.iter().filter(|c| c.error.is_some()).count();
    assert_eq!(failed, 0, "all 72 cells replay cleanly");
    println!(
        "PASS criterion 9: two replay-mode grid runs byte-identical ({} cells, {} bytes)",
        out1.cells.len(),
        out1.records_json.len()
    );
}
