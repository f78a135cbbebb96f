//! Desk-scale LP/MILP solver: two-phase dense tableau simplex with Bland's
//! rule, plus depth-first branch and bound on the most fractional integer
//! variable. Built for the benchmark sizes here (tens of variables), traded
//! entirely toward determinism and provable optima.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ir::{CmpOp, Domain, ScalarModel, Sense};

pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const DEFAULT_NODE_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Present iff status is `Optimal`.
    pub objective: Option<f64>,
    /// Variable name -> value, present iff status is `Optimal`.
    pub assignment: Option<BTreeMap<String, f64>>,
    pub node_count: usize,
    pub pivot_count: usize,
    /// Dual objective recovered from the final basis of the last LP solve;
    /// agrees with `objective` up to numerical tolerance on LP solves.
    pub dual_objective: Option<f64>,
}

impl SolveResult {
    fn failed(status: SolveStatus, nodes: usize, pivots: usize) -> SolveResult {
        SolveResult {
            status,
            objective: None,
            assignment: None,
            node_count: nodes,
            pivot_count: pivots,
            dual_objective: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("model is not well-formed: {0}")]
    BadModel(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
}

// ---------------------------------------------------------------------------
// Standard form
// ---------------------------------------------------------------------------

/// How an original variable maps into standard-form columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// x = lb + x'   (single column, shift lb)
    Shifted { col: usize, shift: f64 },
    /// x = ub - x'   (single column, flipped)
    Flipped { col: usize, ub: f64 },
    /// x = x+ - x-   (two columns, free variable)
    Split { pos: usize, neg: usize },
}

/// Min-sense LP in equality standard form built from a `ScalarModel` with
/// integrality relaxed and per-variable bound overrides applied.
struct StandardLp {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    /// Objective constant accumulated by shifting; added back on report.
    cost_shift: f64,
    n_cols: usize,
    var_maps: Vec<VarMap>,
    /// Sense flip factor: -1 when the original model maximizes.
    sense_sign: f64,
}

fn build_standard(
    model: &ScalarModel,
    bounds: &[(f64, f64)],
) -> Result<Option<StandardLp>, SolveError> {
    let n = model.variables.len();
    let sense_sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut var_maps = Vec::with_capacity(n);
    let mut n_cols = 0usize;
    // Upper-bound rows produced by the shift (col, bound).
    let mut ub_rows: Vec<(usize, f64)> = Vec::new();

    for (i, _) in model.variables.iter().enumerate() {
        let (lb, ub) = bounds[i];
        if lb > ub + FEASIBILITY_TOL {
            // Contradictory box; the model is trivially infeasible.
            return Ok(None);
        }
        if lb.is_finite() {
            let col = n_cols;
            n_cols += 1;
            if ub.is_finite() {
                ub_rows.push((col, ub - lb));
            }
            var_maps.push(VarMap::Shifted { col, shift: lb });
        } else if ub.is_finite() {
            let col = n_cols;
            n_cols += 1;
            var_maps.push(VarMap::Flipped { col, ub });
        } else {
            let pos = n_cols;
            let neg = n_cols + 1;
            n_cols += 2;
            var_maps.push(VarMap::Split { pos, neg });
        }
    }

    let mut cost = vec![0.0; n_cols];
    let mut cost_shift = 0.0;
    for (i, c) in &model.objective.coeffs {
        let c = sense_sign * c.to_f64();
        if !c.is_finite() {
            return Err(SolveError::NonFinite("objective".into()));
        }
        match &var_maps[*i] {
            VarMap::Shifted { col, shift } => {
                cost[*col] += c;
                cost_shift += c * shift;
            }
            VarMap::Flipped { col, ub } => {
                cost[*col] -= c;
                cost_shift += c * ub;
            }
            VarMap::Split { pos, neg } => {
                cost[*pos] += c;
                cost[*neg] -= c;
            }
        }
    }
    cost_shift += sense_sign * model.objective.constant.to_f64();

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut ops = Vec::new();

    for con in &model.constraints {
        let mut row = vec![0.0; n_cols];
        let mut b = con.rhs.to_f64();
        for (i, c) in &con.lhs.coeffs {
            let c = c.to_f64();
            if !c.is_finite() {
                return Err(SolveError::NonFinite(con.name.clone()));
            }
            match &var_maps[*i] {
                VarMap::Shifted { col, shift } => {
                    row[*col] += c;
                    b -= c * shift;
                }
                VarMap::Flipped { col, ub } => {
                    row[*col] -= c;
                    b -= c * ub;
                }
                VarMap::Split { pos, neg } => {
                    row[*pos] += c;
                    row[*neg] -= c;
                }
            }
        }
        b -= con.lhs.constant.to_f64();
        rows.push(row);
        rhs.push(b);
        ops.push(con.op);
    }
    for (col, b) in ub_rows {
        let mut row = vec![0.0; n_cols];
        row[col] = 1.0;
        rows.push(row);
        rhs.push(b);
        ops.push(CmpOp::Le);
    }

    // Slack/surplus columns turn every row into an equality.
    let m = rows.len();
    for (r, op) in ops.iter().enumerate() {
        match op {
            CmpOp::Le => {
                for (i, row) in rows.iter_mut().enumerate() {
                    row.push(if i == r { 1.0 } else { 0.0 });
                }
                cost.push(0.0);
                n_cols += 1;
            }
            CmpOp::Ge => {
                for (i, row) in rows.iter_mut().enumerate() {
                    row.push(if i == r { -1.0 } else { 0.0 });
                }
                cost.push(0.0);
                n_cols += 1;
            }
            CmpOp::Eq => {}
        }
    }

    // Normalize to nonnegative right-hand sides.
    for r in 0..m {
        if rhs[r] < 0.0 {
            rhs[r] = -rhs[r];
            for v in rows[r].iter_mut() {
                *v = -*v;
            }
        }
    }

    Ok(Some(StandardLp { rows, rhs, cost, cost_shift, n_cols, var_maps, sense_sign }))
}

// ---------------------------------------------------------------------------
// Simplex on the standard form
// ---------------------------------------------------------------------------

enum LpOutcome {
    Optimal { x: Vec<f64>, basis: Vec<usize>, pivots: usize },
    Infeasible { pivots: usize },
    Unbounded { pivots: usize },
    IterationLimit { pivots: usize },
}

/// Two-phase primal simplex with Bland's rule. The tableau is
/// `(m+1) x (n+1)`; the last row carries reduced costs, the last column the
/// right-hand side.
fn simplex(lp: &StandardLp) -> LpOutcome {
    let m = lp.rows.len();
    let n = lp.n_cols;
    let limit = 100 * (m + n);
    let mut pivots = 0usize;

    // Phase 1: artificial basis.
    let total = n + m;
    let mut tab = vec![vec![0.0; total + 1]; m + 1];
    for r in 0..m {
        for c in 0..n {
            tab[r][c] = lp.rows[r][c];
        }
        tab[r][n + r] = 1.0;
        tab[r][total] = lp.rhs[r];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Phase-1 objective: minimize sum of artificials; expressed via the
    // reduced-cost row of the artificial basis.
    for c in 0..=total {
        let mut s = 0.0;
        for r in 0..m {
            s += tab[r][c];
        }
        tab[m][c] = -s;
    }
    for r in 0..m {
        tab[m][n + r] = 0.0;
    }

    match run_simplex(&mut tab, &mut basis, total, limit, &mut pivots) {
        SimplexRun::Optimal => {}
        SimplexRun::Unbounded => return LpOutcome::Infeasible { pivots },
        SimplexRun::IterationLimit => return LpOutcome::IterationLimit { pivots },
    }
    let phase1 = -tab[m][total];
    if phase1 > 1e-7 {
        return LpOutcome::Infeasible { pivots };
    }

    // Drive leftover artificials out of the basis where possible.
    for r in 0..m {
        if basis[r] >= n {
            let pivot_col = (0..n).find(|&c| tab[r][c].abs() > FEASIBILITY_TOL);
            if let Some(c) = pivot_col {
                pivot(&mut tab, &mut basis, r, c);
                pivots += 1;
            }
            // A row with no eligible column is redundant; the artificial
            // stays basic at zero and is harmless.
        }
    }

    // Phase 2: install the real costs, eliminate basic columns.
    for c in 0..total {
        tab[m][c] = if c < n { lp.cost[c] } else { 0.0 };
    }
    tab[m][total] = 0.0;
    for r in 0..m {
        let b = basis[r];
        let factor = tab[m][b];
        if factor != 0.0 {
            for c in 0..=total {
                tab[m][c] -= factor * tab[r][c];
            }
        }
    }
    // Artificial columns may not re-enter.
    let active = n;

    match run_simplex(&mut tab, &mut basis, active, limit, &mut pivots) {
        SimplexRun::Optimal => {}
        SimplexRun::Unbounded => return LpOutcome::Unbounded { pivots },
        SimplexRun::IterationLimit => return LpOutcome::IterationLimit { pivots },
    }

    let mut x = vec![0.0; n];
    for r in 0..m {
        if basis[r] < n {
            x[basis[r]] = tab[r][total];
        }
    }
    LpOutcome::Optimal { x, basis, pivots }
}

enum SimplexRun {
    Optimal,
    Unbounded,
    IterationLimit,
}

/// Bland's rule: entering column is the lowest-index column with a negative
/// reduced cost, the leaving row breaks ratio ties toward the lowest basis
/// index. Guarantees termination without cycling.
fn run_simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    active_cols: usize,
    limit: usize,
    pivots: &mut usize,
) -> SimplexRun {
    let m = basis.len();
    let total = tab[0].len() - 1;
    loop {
        if *pivots >= limit {
            return SimplexRun::IterationLimit;
        }
        let entering = (0..active_cols).find(|&c| tab[m][c] < -FEASIBILITY_TOL);
        let entering = match entering {
            Some(c) => c,
            None => return SimplexRun::Optimal,
        };
        let mut leaving: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tab[r][entering];
            if a > FEASIBILITY_TOL {
                let ratio = tab[r][total] / a;
                let better = match leaving {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - FEASIBILITY_TOL
                            || (ratio < lratio + FEASIBILITY_TOL && basis[r] < basis[lr])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
        }
        let (row, _) = match leaving {
            Some(l) => l,
            None => return SimplexRun::Unbounded,
        };
        pivot_dyn(tab, basis, row, entering);
        *pivots += 1;
    }
}

fn pivot(tab: &mut Vec<Vec<f64>>, basis: &mut [usize], row: usize, col: usize) {
    pivot_dyn(tab, basis, row, col)
}

fn pivot_dyn(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let width = tab[0].len();
    let p = tab[row][col];
    for c in 0..width {
        tab[row][c] /= p;
    }
    for r in 0..tab.len() {
        if r != row {
            let f = tab[r][col];
            if f != 0.0 {
                for c in 0..width {
                    tab[r][c] -= f * tab[row][c];
                }
            }
        }
    }
    if row < basis.len() {
        basis[row] = col;
    }
}

/// Dual vector from the final basis: solves `B^T y = c_B` by Gaussian
/// elimination on the original standard-form columns, independently of the
/// tableau's running objective row.
fn dual_objective(lp: &StandardLp, basis: &[usize]) -> Option<f64> {
    let m = lp.rows.len();
    let col = |c: usize, r: usize| -> f64 {
        if c < lp.n_cols {
            lp.rows[r][c]
        } else if c - lp.n_cols == r {
            1.0 // artificial column left basic at zero on a redundant row
        } else {
            0.0
        }
    };
    let cost_of = |c: usize| -> f64 {
        if c < lp.cost.len() {
            lp.cost[c]
        } else {
            0.0
        }
    };
    // Solve y^T B = c_B^T, i.e. B^T y = c_B.
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for (j, &bj) in basis.iter().enumerate() {
            a[j][i] = col(bj, i); // (B^T)[j][i] = B[i][j]
        }
    }
    for (j, &bj) in basis.iter().enumerate() {
        a[j][m] = cost_of(bj);
    }
    // Gaussian elimination with partial pivoting.
    for k in 0..m {
        let mut best = k;
        for r in k + 1..m {
            if a[r][k].abs() > a[best][k].abs() {
                best = r;
            }
        }
        a.swap(k, best);
        if a[k][k].abs() < 1e-12 {
            return None;
        }
        for r in k + 1..m {
            let f = a[r][k] / a[k][k];
            if f != 0.0 {
                for c in k..=m {
                    a[r][c] -= f * a[k][c];
                }
            }
        }
    }
    let mut y = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = a[k][m];
        for c in k + 1..m {
            s -= a[k][c] * y[c];
        }
        y[k] = s / a[k][k];
    }
    Some(y.iter().zip(&lp.rhs).map(|(yi, bi)| yi * bi).sum())
}

// ---------------------------------------------------------------------------
// Public solves
// ---------------------------------------------------------------------------

fn recover_assignment(model: &ScalarModel, lp: &StandardLp, x: &[f64]) -> Vec<f64> {
    model
        .variables
        .iter()
        .enumerate()
        .map(|(i, _)| match &lp.var_maps[i] {
            VarMap::Shifted { col, shift } => shift + x[*col],
            VarMap::Flipped { col, ub } => ub - x[*col],
            VarMap::Split { pos, neg } => x[*pos] - x[*neg],
        })
        .collect()
}

fn objective_value(model: &ScalarModel, assignment: &[f64]) -> f64 {
    model.objective.eval_f64(assignment)
}

fn model_bounds(model: &ScalarModel) -> Vec<(f64, f64)> {
    model
        .variables
        .iter()
        .map(|v| (v.lower_f64(), v.upper_f64()))
        .collect()
}

fn assignment_map(model: &ScalarModel, values: &[f64]) -> BTreeMap<String, f64> {
    model
        .variables
        .iter()
        .zip(values)
        .map(|(v, &x)| (v.name.clone(), x))
        .collect()
}

/// Checks all rows and boxes at `assignment` within `tol` (scaled by row
/// magnitude).
pub fn feasible(model: &ScalarModel, assignment: &[f64], tol: f64) -> bool {
    for (v, &x) in model.variables.iter().zip(assignment) {
        if x < v.lower_f64() - tol || x > v.upper_f64() + tol {
            return false;
        }
    }
    for con in &model.constraints {
        let lhs = con.lhs.eval_f64(assignment);
        let rhs = con.rhs.to_f64();
        let scale = 1.0 + lhs.abs().max(rhs.abs());
        let ok = match con.op {
            CmpOp::Le => lhs <= rhs + tol * scale,
            CmpOp::Ge => lhs >= rhs - tol * scale,
            CmpOp::Eq => (lhs - rhs).abs() <= tol * scale,
        };
        if !ok {
            return false;
        }
    }
    true
}

fn solve_lp_with_bounds(model: &ScalarModel, bounds: &[(f64, f64)]) -> Result<SolveResult, SolveError> {
    let lp = match build_standard(model, bounds)? {
        Some(lp) => lp,
        None => return Ok(SolveResult::failed(SolveStatus::Infeasible, 0, 0)),
    };
    match simplex(&lp) {
        LpOutcome::Optimal { x, basis, pivots } => {
            let assignment = recover_assignment(model, &lp, &x);
            let objective = objective_value(model, &assignment);
            let dual = dual_objective(&lp, &basis)
                .map(|d| lp.sense_sign * (d + lp.cost_shift));
            Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: Some(objective),
                assignment: Some(assignment_map(model, &assignment)),
                node_count: 0,
                pivot_count: pivots,
                dual_objective: dual,
            })
        }
        LpOutcome::Infeasible { pivots } => Ok(SolveResult::failed(SolveStatus::Infeasible, 0, pivots)),
        LpOutcome::Unbounded { pivots } => Ok(SolveResult::failed(SolveStatus::Unbounded, 0, pivots)),
        LpOutcome::IterationLimit { pivots } => {
            Ok(SolveResult::failed(SolveStatus::IterationLimit, 0, pivots))
        }
    }
}

/// Solves the LP relaxation (integrality dropped, bounds kept).
pub fn solve_lp(model: &ScalarModel) -> Result<SolveResult, SolveError> {
    model.check().map_err(SolveError::BadModel)?;
    solve_lp_with_bounds(model, &model_bounds(model))
}

/// Solves the mixed-integer model by depth-first branch and bound,
/// branching on the most fractional integer variable (ties toward the
/// lowest variable index). Returns a proven optimum.
pub fn solve_milp(model: &ScalarModel) -> Result<SolveResult, SolveError> {
    solve_milp_with_limit(model, DEFAULT_NODE_LIMIT)
}

pub fn solve_milp_with_limit(model: &ScalarModel, node_limit: usize) -> Result<SolveResult, SolveError> {
    model.check().map_err(SolveError::BadModel)?;
    let int_vars: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| matches!(v.domain, Domain::Binary | Domain::Integer))
        .map(|(i, _)| i)
        .collect();
    if int_vars.is_empty() {
        return solve_lp(model);
    }

    let root_bounds = model_bounds(model);
    let min_sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };

    let mut stack = vec![root_bounds];
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes = 0usize;
    let mut pivots = 0usize;
    let mut root_unbounded = false;
    let mut hit_limit = false;

    while let Some(bounds) = stack.pop() {
        if nodes >= node_limit {
            hit_limit = true;
            break;
        }
        nodes += 1;
        let res = solve_lp_with_bounds(model, &bounds)?;
        pivots += res.pivot_count;
        match res.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                if nodes == 1 {
                    root_unbounded = true;
                    break;
                }
                continue;
            }
            SolveStatus::IterationLimit => {
                hit_limit = true;
                break;
            }
            SolveStatus::Optimal => {}
        }
        let obj = res.objective.expect("optimal");
        if let Some((best, _)) = &incumbent {
            if min_sign * obj >= min_sign * best - FEASIBILITY_TOL {
                continue;
            }
        }
        let assignment: Vec<f64> = model
            .variables
            .iter()
            .map(|v| res.assignment.as_ref().expect("optimal")[&v.name])
            .collect();

        // Most fractional integer variable; ties toward the lowest index.
        let mut branch: Option<(usize, f64, f64)> = None;
        for &i in &int_vars {
            let v = assignment[i];
            let frac = (v - v.round()).abs();
            if frac > INTEGRALITY_TOL {
                let dist = (v - v.floor() - 0.5).abs();
                let better = match branch {
                    None => true,
                    Some((_, bd, _)) => dist < bd - 1e-12,
                };
                if better {
                    branch = Some((i, dist, v));
                }
            }
        }

        match branch {
            None => {
                let better = match &incumbent {
                    None => true,
                    Some((best, _)) => min_sign * obj < min_sign * best - FEASIBILITY_TOL,
                };
                if better {
                    incumbent = Some((obj, assignment));
                }
            }
            Some((var, _, value)) => {
                let mut up = bounds.clone();
                up[var].0 = up[var].0.max(value.ceil());
                let mut down = bounds;
                down[var].1 = down[var].1.min(value.floor());
                // Down branch explored first (LIFO).
                stack.push(up);
                stack.push(down);
            }
        }
    }

    if root_unbounded {
        return Ok(SolveResult::failed(SolveStatus::Unbounded, nodes, pivots));
    }
    if hit_limit {
        return Ok(SolveResult::failed(SolveStatus::IterationLimit, nodes, pivots));
    }
    match incumbent {
        Some((obj, assignment)) => Ok(SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(obj),
            assignment: Some(assignment_map(model, &assignment)),
            node_count: nodes,
            pivot_count: pivots,
            dual_objective: None,
        }),
        None => Ok(SolveResult::failed(SolveStatus::Infeasible, nodes, pivots)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Decimal;
    use crate::ir::{LinearExpr, ScalarConstraint, ScalarVar};
    use crate::rng::SplitMix64;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    fn lin(terms: &[(usize, &str)]) -> LinearExpr {
        let mut e = LinearExpr::default();
        for (v, c) in terms {
            e.add_term(*v, dec(c));
        }
        e
    }

    fn knapsack() -> ScalarModel {
        ScalarModel {
            name: "knapsack".into(),
            sense: Sense::Maximize,
            variables: vec![ScalarVar::binary("x1"), ScalarVar::binary("x2"), ScalarVar::binary("x3")],
            objective: lin(&[(0, "60"), (1, "100"), (2, "120")]),
            constraints: vec![ScalarConstraint {
                name: "capacity".into(),
                lhs: lin(&[(0, "10"), (1, "20"), (2, "30")]),
                op: CmpOp::Le,
                rhs: dec("50"),
            }],
        }
    }

    fn diet() -> ScalarModel {
        ScalarModel {
            name: "diet".into(),
            sense: Sense::Minimize,
            variables: vec![
                ScalarVar::continuous("x1", Some(Decimal::ZERO), Some(dec("10"))),
                ScalarVar::continuous("x2", Some(Decimal::ZERO), Some(dec("10"))),
            ],
            objective: lin(&[(0, "2.0"), (1, "1.5")]),
            constraints: vec![
                ScalarConstraint { name: "vitc_min".into(), lhs: lin(&[(0, "10"), (1, "5")]), op: CmpOp::Ge, rhs: dec("50") },
                ScalarConstraint { name: "vitc_max".into(), lhs: lin(&[(0, "10"), (1, "5")]), op: CmpOp::Le, rhs: dec("100") },
                ScalarConstraint { name: "fiber_min".into(), lhs: lin(&[(0, "5"), (1, "10")]), op: CmpOp::Ge, rhs: dec("30") },
                ScalarConstraint { name: "fiber_max".into(), lhs: lin(&[(0, "5"), (1, "10")]), op: CmpOp::Le, rhs: dec("60") },
            ],
        }
    }

    #[test]
    fn diet_lp_optimum_is_31_over_3() {
        let res = solve_lp(&diet()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let obj = res.objective.unwrap();
        assert!((obj - 31.0 / 3.0).abs() < 1e-7, "{obj}");
    }

    #[test]
    fn constant_objective_over_halfline_is_optimal_zero() {
        let m = ScalarModel {
            name: "m".into(),
            sense: Sense::Maximize,
            variables: vec![ScalarVar::continuous("x", Some(Decimal::ZERO), None)],
            objective: LinearExpr::default(),
            constraints: vec![],
        };
        let res = solve_lp(&m).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert_eq!(res.objective, Some(0.0));
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        let m = ScalarModel {
            name: "m".into(),
            sense: Sense::Minimize,
            variables: vec![ScalarVar::continuous("x", None, None)],
            objective: lin(&[(0, "1")]),
            constraints: vec![
                ScalarConstraint { name: "a".into(), lhs: lin(&[(0, "1")]), op: CmpOp::Ge, rhs: dec("1") },
                ScalarConstraint { name: "b".into(), lhs: lin(&[(0, "1")]), op: CmpOp::Le, rhs: dec("0") },
            ],
        };
        assert_eq!(solve_lp(&m).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let m = ScalarModel {
            name: "m".into(),
            sense: Sense::Maximize,
            variables: vec![ScalarVar::continuous("x", Some(Decimal::ZERO), None)],
            objective: lin(&[(0, "1")]),
            constraints: vec![],
        };
        assert_eq!(solve_lp(&m).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn knapsack_milp_optimum_and_assignment() {
        let res = solve_milp(&knapsack()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective.unwrap() - 220.0).abs() < 1e-6);
        let a = res.assignment.unwrap();
        assert!(a["x1"].abs() < 1e-6);
        assert!((a["x2"] - 1.0).abs() < 1e-6);
        assert!((a["x3"] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weak_duality_on_lp_solves() {
        for m in [diet(), knapsack()] {
            let relaxed = m.clone();
            let res = solve_lp(&relaxed).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal);
            let p = res.objective.unwrap();
            let d = res.dual_objective.unwrap();
            assert!((p - d).abs() <= 1e-7 * (1.0 + p.abs()), "primal {p} dual {d}");
        }
    }

    #[test]
    fn relaxation_bounds_milp_in_sense_direction() {
        let m = knapsack();
        let lp = solve_lp(&m).unwrap().objective.unwrap();
        let ip = solve_milp(&m).unwrap().objective.unwrap();
        assert!(lp >= ip - 1e-9); // maximize: relaxation is an upper bound
    }

    #[test]
    fn deterministic_counts() {
        let m = knapsack();
        let a = solve_milp(&m).unwrap();
        let b = solve_milp(&m).unwrap();
        assert_eq!(a.node_count, b.node_count);
        assert_eq!(a.pivot_count, b.pivot_count);
        assert_eq!(a.objective.unwrap().to_bits(), b.objective.unwrap().to_bits());
    }

    #[test]
    fn equality_constraints_via_two_phase() {
        // min x + y  s.t.  x + y = 4, x - y = 2, x,y >= 0 -> (3,1), obj 4.
        let m = ScalarModel {
            name: "eq".into(),
            sense: Sense::Minimize,
            variables: vec![
                ScalarVar::continuous("x", Some(Decimal::ZERO), None),
                ScalarVar::continuous("y", Some(Decimal::ZERO), None),
            ],
            objective: lin(&[(0, "1"), (1, "1")]),
            constraints: vec![
                ScalarConstraint { name: "s".into(), lhs: lin(&[(0, "1"), (1, "1")]), op: CmpOp::Eq, rhs: dec("4") },
                ScalarConstraint { name: "d".into(), lhs: lin(&[(0, "1"), (1, "-1")]), op: CmpOp::Eq, rhs: dec("2") },
            ],
        };
        let res = solve_lp(&m).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let a = res.assignment.unwrap();
        assert!((a["x"] - 3.0).abs() < 1e-9);
        assert!((a["y"] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_variables_split() {
        // min x s.t. x >= -5 as a row (variable itself unbounded).
        let m = ScalarModel {
            name: "free".into(),
            sense: Sense::Minimize,
            variables: vec![ScalarVar::continuous("x", None, None)],
            objective: lin(&[(0, "1")]),
            constraints: vec![ScalarConstraint {
                name: "lo".into(),
                lhs: lin(&[(0, "1")]),
                op: CmpOp::Ge,
                rhs: dec("-5"),
            }],
        };
        let res = solve_lp(&m).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.objective.unwrap() + 5.0).abs() < 1e-9);
    }

    /// Exhaustive oracle for pure-binary models.
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
        let n = 2 + (rng.next_u64() % 14) as usize; // up to 15 vars
        let m = 1 + (rng.next_u64() % 6) as usize; // up to 6 constraints
        let sense = if rng.next_u64() % 2 == 0 { Sense::Minimize } else { Sense::Maximize };
        let coeff = |rng: &mut SplitMix64| -> Decimal {
            let v = (rng.next_u64() % 21) as i64 - 10;
            Decimal::from_int(v)
        };
        let mut objective = LinearExpr::default();
        for i in 0..n {
            objective.add_term(i, coeff(rng));
        }
        let mut constraints = Vec::new();
        for k in 0..m {
            let mut lhs = LinearExpr::default();
            for i in 0..n {
                if rng.next_u64() % 3 != 0 {
                    lhs.add_term(i, coeff(rng));
                }
            }
            let op = match rng.next_u64() % 3 {
                0 => CmpOp::Le,
                1 => CmpOp::Ge,
                _ => CmpOp::Eq,
            };
            let rhs = Decimal::from_int((rng.next_u64() % 31) as i64 - 15);
            constraints.push(ScalarConstraint { name: format!("c{k}"), lhs, op, rhs });
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
    fn milp_matches_enumeration_oracle() {
        let mut rng = SplitMix64::new(20260810);
        for _ in 0..60 {
            let model = random_binary_model(&mut rng);
            let (oracle_status, oracle_obj) = enumerate_binary(&model);
            let res = solve_milp(&model).unwrap();
            assert_eq!(res.status, oracle_status, "model {}", crate::ir::emit(&model));
            if let (Some(o), Some(r)) = (oracle_obj, res.objective) {
                assert!((o - r).abs() <= 1e-6 * (1.0 + o.abs()), "oracle {o} got {r}\n{}", crate::ir::emit(&model));
            }
        }
    }

    #[test]
    fn milp_respects_node_limit() {
        let mut rng = SplitMix64::new(5);
        let model = random_binary_model(&mut rng);
        let res = solve_milp_with_limit(&model, 1).unwrap();
        // With a single node the solver cannot usually prove optimality.
        assert!(matches!(res.status, SolveStatus::IterationLimit | SolveStatus::Optimal | SolveStatus::Infeasible));
    }
}
