//! Constraint and variable matching between a ground-truth model and a
//! candidate model.
//!
//! Counting granularity follows the scoring behavior the benchmark tables
//! imply: constraints count as *families* (one quantified constraint or one
//! bound-declaration group per variable role), variables count as *roles*.
//! Scalar rows are canonicalized (orientation + scale normalization) and
//! matched one-to-one; row matches then lift to family pairs, and the row
//! pairs inside matched families form the matched set that the constraint
//! RMSE is computed over.

use serde::{Deserialize, Serialize};

use crate::ground::GroundingReport;
use crate::ir::{BoundDecl, BoundForm, CmpOp, ScalarModel};
use crate::parser::ScalarParse;

pub const MATCH_THRESHOLD: f64 = 0.8;
const COEFF_TOL: f64 = 1e-9;
const ZERO_COEFF: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatchError {
    #[error("degenerate constraint `{0}`: all-zero coefficient vector")]
    Degenerate(String),
}

// ---------------------------------------------------------------------------
// Match input
// ---------------------------------------------------------------------------

/// One side of a match: the scalar model plus the grouping metadata the
/// counting rules need.
#[derive(Debug, Clone)]
pub struct MatchSide {
    pub model: ScalarModel,
    pub bound_decls: Vec<BoundDecl>,
    /// Role per scalar variable (symbolic variable name on grounded models,
    /// name prefix on parsed candidates).
    pub roles: Vec<String>,
    /// Functional families: (family name, constraint indices).
    pub groups: Vec<(String, Vec<usize>)>,
}

impl From<&GroundingReport> for MatchSide {
    fn from(report: &GroundingReport) -> MatchSide {
        let mut roles = vec![String::new(); report.model.variables.len()];
        for (role, names) in &report.variable_map {
            for name in names {
                if let Some(idx) = report.model.var_index(name) {
                    roles[idx] = role.clone();
                }
            }
        }
        let groups = report
            .expansion_map
            .iter()
            .map(|(family, names)| {
                let idx = names
                    .iter()
                    .filter_map(|n| report.model.constraints.iter().position(|c| &c.name == n))
                    .collect();
                (family.clone(), idx)
            })
            .collect();
        MatchSide {
            model: report.model.clone(),
            bound_decls: report.bound_decls.clone(),
            roles,
            groups,
        }
    }
}

impl From<&ScalarParse> for MatchSide {
    fn from(parse: &ScalarParse) -> MatchSide {
        let roles = parse
            .model
            .variables
            .iter()
            .map(|v| crate::parser::role_prefix(&v.name))
            .collect();
        let groups = parse
            .model
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), vec![i]))
            .collect();
        MatchSide {
            model: parse.model.clone(),
            bound_decls: parse.bound_decls.clone(),
            roles,
            groups,
        }
    }
}

// ---------------------------------------------------------------------------
// Canonical constraints
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CanonSense {
    Le,
    Eq,
}

/// Orientation- and scale-normalized row over the union variable space:
/// `>=` rows are negated into `<=` form, coefficients are scaled so
/// `max |c| = 1`, and equality rows make the first nonzero coefficient in
/// variable order positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonRow {
    pub sense: CanonSense,
    /// Sorted by union variable index.
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl CanonRow {
    /// Signed residual `lhs(x) - rhs` of the canonical (<=-oriented) form.
    pub fn residual(&self, value_of: &dyn Fn(usize) -> f64) -> f64 {
        let mut acc = -self.rhs;
        for (v, c) in &self.coeffs {
            acc += c * value_of(*v);
        }
        acc
    }
}

/// Normalizes one scalar row. `name` is used for the degenerate error only.
pub fn canonicalize(
    name: &str,
    coeffs: &[(usize, f64)],
    op: CmpOp,
    rhs: f64,
) -> Result<CanonRow, MatchError> {
    let mut kept: Vec<(usize, f64)> = coeffs
        .iter()
        .filter(|(_, c)| c.abs() > ZERO_COEFF)
        .copied()
        .collect();
    kept.sort_by_key(|(v, _)| *v);
    if kept.is_empty() {
        return Err(MatchError::Degenerate(name.to_string()));
    }
    let mut rhs = rhs;
    let mut sense = CanonSense::Le;
    match op {
        CmpOp::Le => {}
        CmpOp::Ge => {
            for (_, c) in kept.iter_mut() {
                *c = -*c;
            }
            rhs = -rhs;
        }
        CmpOp::Eq => sense = CanonSense::Eq,
    }
    if sense == CanonSense::Eq && kept[0].1 < 0.0 {
        for (_, c) in kept.iter_mut() {
            *c = -*c;
        }
        rhs = -rhs;
    }
    let scale = kept.iter().map(|(_, c)| c.abs()).fold(0.0f64, f64::max);
    for (_, c) in kept.iter_mut() {
        *c /= scale;
    }
    rhs /= scale;
    Ok(CanonRow { sense, coeffs: kept, rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    Functional,
    BoundDeclaration,
}

/// One counted element: a functional family or a bound-declaration group,
/// with its canonical rows.
#[derive(Debug, Clone)]
pub struct CanonicalElement {
    pub name: String,
    pub kind: ElementKind,
    pub rows: Vec<CanonRow>,
}

/// Builds the counted element list for one side. `to_union` maps the side's
/// variable indices into the shared union space.
pub fn canonical_elements(side: &MatchSide, to_union: &[usize]) -> Vec<CanonicalElement> {
    let mut out = Vec::new();
    for (family, rows) in &side.groups {
        let mut canon = Vec::new();
        for &ci in rows {
            let con = &side.model.constraints[ci];
            let coeffs: Vec<(usize, f64)> = con
                .lhs
                .coeffs
                .iter()
                .map(|(v, c)| (to_union[*v], c.to_f64()))
                .collect();
            if let Ok(row) = canonicalize(&con.name, &coeffs, con.op, con.rhs.to_f64()) {
                canon.push(row);
            }
        }
        out.push(CanonicalElement { name: family.clone(), kind: ElementKind::Functional, rows: canon });
    }
    // Bound groups keyed by (role, form class), in first-appearance order.
    // A second declaration of the same form on a variable already covered
    // (say, an explicit `x >= 0` on top of a `0 <= x <= 10` box) opens a
    // new group so redundant declarations stay countable.
    struct BoundGroup {
        role: String,
        class: &'static str,
        ordinal: usize,
        vars: Vec<usize>,
        rows: Vec<CanonRow>,
    }
    let mut groups: Vec<BoundGroup> = Vec::new();
    for decl in &side.bound_decls {
        let u = to_union[decl.var];
        let (class, rows) = match decl.form {
            BoundForm::Lower(c) => ("lower", vec![row_le(u, -1.0, -c.to_f64())]),
            BoundForm::Upper(c) => ("upper", vec![row_le(u, 1.0, c.to_f64())]),
            BoundForm::Binary => ("binary", vec![row_le(u, -1.0, 0.0), row_le(u, 1.0, 1.0)]),
            // Integrality alone carries no linear row and is not counted.
            BoundForm::Integer => continue,
        };
        let target = groups
            .iter_mut()
            .find(|g| g.role == decl.role && g.class == class && !g.vars.contains(&decl.var));
        match target {
            Some(g) => {
                g.vars.push(decl.var);
                g.rows.extend(rows);
            }
            None => {
                let ordinal = groups
                    .iter()
                    .filter(|g| g.role == decl.role && g.class == class)
                    .count();
                groups.push(BoundGroup {
                    role: decl.role.clone(),
                    class,
                    ordinal,
                    vars: vec![decl.var],
                    rows,
                });
            }
        }
    }
    for g in groups {
        let name = if g.ordinal == 0 {
            format!("{}({})", g.class, g.role)
        } else {
            format!("{}({})#{}", g.class, g.role, g.ordinal + 1)
        };
        out.push(CanonicalElement { name, kind: ElementKind::BoundDeclaration, rows: g.rows });
    }
    out
}

fn row_le(var: usize, coeff: f64, rhs: f64) -> CanonRow {
    CanonRow { sense: CanonSense::Le, coeffs: vec![(var, coeff)], rhs }
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

fn rows_exact(a: &CanonRow, b: &CanonRow) -> bool {
    a.sense == b.sense
        && a.coeffs.len() == b.coeffs.len()
        && (a.rhs - b.rhs).abs() <= COEFF_TOL
        && a.coeffs
            .iter()
            .zip(&b.coeffs)
            .all(|((va, ca), (vb, cb))| va == vb && (ca - cb).abs() <= COEFF_TOL)
}

/// `0.5 * Jaccard(support) + 0.5 * cosine(coefficients)` over the union
/// space; only rows of the same canonical sense are comparable.
fn row_similarity(a: &CanonRow, b: &CanonRow) -> f64 {
    if a.sense != b.sense {
        return 0.0;
    }
    let sa: Vec<usize> = a.coeffs.iter().map(|(v, _)| *v).collect();
    let sb: Vec<usize> = b.coeffs.iter().map(|(v, _)| *v).collect();
    let inter = sa.iter().filter(|v| sb.contains(v)).count();
    let union = sa.len() + sb.len() - inter;
    let jaccard = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
    let mut dot = 0.0;
    for (v, c) in &a.coeffs {
        if let Some((_, cb)) = b.coeffs.iter().find(|(vb, _)| vb == v) {
            dot += c * cb;
        }
    }
    let na: f64 = a.coeffs.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    let nb: f64 = b.coeffs.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    let cosine = if na == 0.0 || nb == 0.0 { 0.0 } else { (dot / (na * nb)).max(0.0) };
    0.5 * jaccard + 0.5 * cosine
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchTier {
    Exact,
    Similar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintPair {
    pub gt: String,
    pub cand: String,
    pub tier: MatchTier,
    pub score: f64,
}

/// TP/FP/FN partition for constraints (family level) and variables (role
/// level), plus the underlying pair lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub constraint_pairs: Vec<ConstraintPair>,
    pub constraint_tp: usize,
    pub constraint_fp: usize,
    #[serde(rename = "constraint_fn")]
    pub constraint_fn_: usize,
    /// Scalar-level variable alignment (gt name, candidate name).
    pub variable_pairs: Vec<(String, String)>,
    pub variable_tp: usize,
    pub variable_fp: usize,
    #[serde(rename = "variable_fn")]
    pub variable_fn_: usize,
}

/// A matched row pair inside a matched family; the domain of the constraint
/// RMSE.
#[derive(Debug, Clone)]
pub struct RowPair {
    pub gt: CanonRow,
    pub cand: CanonRow,
    pub exact: bool,
}

#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub result: MatchResult,
    /// Matched row pairs over the union space.
    pub matched_rows: Vec<RowPair>,
    /// Union variable names; indices below `gt_var_count` are ground-truth
    /// variables, the rest are candidate-only columns.
    pub union_vars: Vec<String>,
    pub gt_var_count: usize,
}

// ---------------------------------------------------------------------------
// Variable matching
// ---------------------------------------------------------------------------

struct VarAlignment {
    pairs: Vec<(usize, usize)>,
    cand_to_union: Vec<usize>,
    union_names: Vec<String>,
}

fn align_variables(gt: &MatchSide, cand: &MatchSide) -> VarAlignment {
    let n_gt = gt.model.variables.len();
    let n_cand = cand.model.variables.len();
    let gt_norm: Vec<String> = gt
        .model
        .variables
        .iter()
        .map(|v| crate::parser::normalize_var_name(&v.name))
        .collect();
    let cand_norm: Vec<String> = cand
        .model
        .variables
        .iter()
        .map(|v| crate::parser::normalize_var_name(&v.name))
        .collect();

    let mut cand_match: Vec<Option<usize>> = vec![None; n_cand];
    let mut gt_match: Vec<Option<usize>> = vec![None; n_gt];

    // Normalized-name equality first.
    for (g, gname) in gt_norm.iter().enumerate() {
        let hit = cand_norm
            .iter()
            .enumerate()
            .find(|(c, cname)| cand_match[*c].is_none() && *cname == gname)
            .map(|(c, _)| c);
        if let Some(c) = hit {
            gt_match[g] = Some(c);
            cand_match[c] = Some(g);
        }
    }

    // Exact objective-coefficient signature for the leftovers; ambiguous
    // signatures stay unmatched.
    let gt_coeff = |i: usize| gt.model.objective.coeff(i).to_f64();
    let cand_coeff = |i: usize| cand.model.objective.coeff(i).to_f64();
    let unresolved_gt: Vec<usize> = (0..n_gt).filter(|&g| gt_match[g].is_none()).collect();
    let unresolved_cand: Vec<usize> = (0..n_cand).filter(|&c| cand_match[c].is_none()).collect();
    for &g in &unresolved_gt {
        if gt_match[g].is_some() {
            continue;
        }
        let sig = gt_coeff(g);
        let gt_peers = unresolved_gt
            .iter()
            .filter(|&&o| gt_match[o].is_none() && (gt_coeff(o) - sig).abs() <= COEFF_TOL)
            .count();
        let cands: Vec<usize> = unresolved_cand
            .iter()
            .copied()
            .filter(|&c| cand_match[c].is_none() && (cand_coeff(c) - sig).abs() <= COEFF_TOL)
            .collect();
        if gt_peers == 1 && cands.len() == 1 {
            gt_match[g] = Some(cands[0]);
            cand_match[cands[0]] = Some(g);
        }
    }

    let mut union_names: Vec<String> = gt.model.variables.iter().map(|v| v.name.clone()).collect();
    let mut cand_to_union = vec![usize::MAX; n_cand];
    for (c, m) in cand_match.iter().enumerate() {
        match m {
            Some(g) => cand_to_union[c] = *g,
            None => {
                cand_to_union[c] = union_names.len();
                union_names.push(cand.model.variables[c].name.clone());
            }
        }
    }
    let pairs = (0..n_gt).filter_map(|g| gt_match[g].map(|c| (g, c))).collect();
    VarAlignment { pairs, cand_to_union, union_names }
}

// ---------------------------------------------------------------------------
// Full matching
// ---------------------------------------------------------------------------

/// Aligns variables, canonicalizes both sides over the union space, matches
/// rows (exact stage, then similarity stage with threshold 0.8), lifts row
/// matches to family pairs, and assembles the TP/FP/FN counts.
pub fn match_models(gt: &MatchSide, cand: &MatchSide) -> MatchOutcome {
    let alignment = align_variables(gt, cand);
    let n_gt_vars = gt.model.variables.len();

    let gt_to_union: Vec<usize> = (0..n_gt_vars).collect();
    let gt_elements = canonical_elements(gt, &gt_to_union);
    let cand_elements = canonical_elements(cand, &alignment.cand_to_union);

    // Flat row lists tagged with their element index.
    let gt_rows: Vec<(usize, &CanonRow)> = gt_elements
        .iter()
        .enumerate()
        .flat_map(|(e, el)| el.rows.iter().map(move |r| (e, r)))
        .collect();
    let cand_rows: Vec<(usize, &CanonRow)> = cand_elements
        .iter()
        .enumerate()
        .flat_map(|(e, el)| el.rows.iter().map(move |r| (e, r)))
        .collect();

    // Stage 1: exact row matches, greedy in (gt order, cand order).
    let mut cand_used = vec![false; cand_rows.len()];
    let mut row_match: Vec<Option<(usize, f64, bool)>> = vec![None; gt_rows.len()];
    for (gi, (_, grow)) in gt_rows.iter().enumerate() {
        for (ci, (_, crow)) in cand_rows.iter().enumerate() {
            if !cand_used[ci] && rows_exact(grow, crow) {
                row_match[gi] = Some((ci, 1.0, true));
                cand_used[ci] = true;
                break;
            }
        }
    }

    // Stage 2: similarity >= threshold, greedy by descending score with
    // (gt order, cand order) tie-breaks.
    let mut scored: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, (_, grow)) in gt_rows.iter().enumerate() {
        if row_match[gi].is_some() {
            continue;
        }
        for (ci, (_, crow)) in cand_rows.iter().enumerate() {
            if cand_used[ci] {
                continue;
            }
            let s = row_similarity(grow, crow);
            if s >= MATCH_THRESHOLD {
                scored.push((s, gi, ci));
            }
        }
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    for (s, gi, ci) in scored {
        if row_match[gi].is_none() && !cand_used[ci] {
            row_match[gi] = Some((ci, s, false));
            cand_used[ci] = true;
        }
    }

    // Lift to element pairs: a ground-truth element matches when its rows
    // are covered (score mass / row count >= threshold) by rows of not-yet
    // -consumed candidate elements. Processing order: descending coverage,
    // then declaration order.
    let coverage = |e: usize, consumed: &[bool]| -> (f64, bool, Vec<usize>, Vec<usize>) {
        let mut mass = 0.0;
        let mut all_exact = true;
        let mut cand_elems = Vec::new();
        let mut row_idxs = Vec::new();
        for (gi, (ge, _)) in gt_rows.iter().enumerate() {
            if *ge != e {
                continue;
            }
            match row_match[gi] {
                Some((ci, s, exact)) if !consumed[cand_rows[ci].0] => {
                    mass += s;
                    all_exact &= exact;
                    row_idxs.push(gi);
                    if !cand_elems.contains(&cand_rows[ci].0) {
                        cand_elems.push(cand_rows[ci].0);
                    }
                }
                _ => all_exact = false,
            }
        }
        let total = gt_elements[e].rows.len().max(1) as f64;
        (mass / total, all_exact, cand_elems, row_idxs)
    };

    let no_consumed = vec![false; cand_elements.len()];
    let mut order: Vec<(f64, usize)> = (0..gt_elements.len())
        .map(|e| (coverage(e, &no_consumed).0, e))
        .collect();
    order.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });

    let mut consumed = vec![false; cand_elements.len()];
    let mut constraint_pairs = Vec::new();
    let mut matched_rows = Vec::new();
    for (_, e) in order {
        let (cov, all_exact, cand_elems, row_idxs) = coverage(e, &consumed);
        if cov >= MATCH_THRESHOLD && !cand_elems.is_empty() {
            let exact_tier = all_exact
                && row_idxs.len() == gt_elements[e].rows.len()
                && cand_elems
                    .iter()
                    .map(|&ce| cand_elements[ce].rows.len())
                    .sum::<usize>()
                    == gt_elements[e].rows.len();
            let names: Vec<String> = cand_elems.iter().map(|&ce| cand_elements[ce].name.clone()).collect();
            constraint_pairs.push(ConstraintPair {
                gt: gt_elements[e].name.clone(),
                cand: names.join("+"),
                tier: if exact_tier { MatchTier::Exact } else { MatchTier::Similar },
                score: cov,
            });
            for gi in row_idxs {
                let (ci, _, exact) = row_match[gi].expect("covered row");
                matched_rows.push(RowPair {
                    gt: gt_rows[gi].1.clone(),
                    cand: cand_rows[ci].1.clone(),
                    exact,
                });
            }
            for ce in cand_elems {
                consumed[ce] = true;
            }
        }
    }

    let constraint_tp = constraint_pairs.len();
    let constraint_fn_ = gt_elements.len() - constraint_tp;
    let constraint_fp = consumed.iter().filter(|c| !**c).count();

    // Variable counts at role level.
    let mut gt_roles: Vec<&str> = Vec::new();
    for r in &gt.roles {
        if !gt_roles.contains(&r.as_str()) {
            gt_roles.push(r);
        }
    }
    let mut cand_roles: Vec<&str> = Vec::new();
    for r in &cand.roles {
        if !cand_roles.contains(&r.as_str()) {
            cand_roles.push(r);
        }
    }
    let gt_role_matched = |role: &str| alignment.pairs.iter().any(|(g, _)| gt.roles[*g] == role);
    let cand_role_matched = |role: &str| alignment.pairs.iter().any(|(_, c)| cand.roles[*c] == role);
    let variable_tp = gt_roles.iter().filter(|r| gt_role_matched(r)).count();
    let variable_fn_ = gt_roles.len() - variable_tp;
    let variable_fp = cand_roles.iter().filter(|r| !cand_role_matched(r)).count();

    let variable_pairs = alignment
        .pairs
        .iter()
        .map(|(g, c)| {
            (
                gt.model.variables[*g].name.clone(),
                cand.model.variables[*c].name.clone(),
            )
        })
        .collect();

    MatchOutcome {
        result: MatchResult {
            constraint_pairs,
            constraint_tp,
            constraint_fp,
            constraint_fn_,
            variable_pairs,
            variable_tp,
            variable_fp,
            variable_fn_,
        },
        matched_rows,
        union_vars: alignment.union_names,
        gt_var_count: n_gt_vars,
    }
}

/// All canonical ground-truth rows paired with their match when one exists:
/// the "full baseline" domain for the diagnostic RMSE variant where
/// unmatched rows compare against the zero function.
pub fn full_baseline_rows(gt: &MatchSide, cand: &MatchSide) -> Vec<(CanonRow, Option<CanonRow>)> {
    let outcome = match_models(gt, cand);
    let gt_to_union: Vec<usize> = (0..gt.model.variables.len()).collect();
    let gt_elements = canonical_elements(gt, &gt_to_union);
    let mut out = Vec::new();
    for el in &gt_elements {
        for row in &el.rows {
            let matched = outcome
                .matched_rows
                .iter()
                .find(|rp| &rp.gt == row)
                .map(|rp| rp.cand.clone());
            out.push((row.clone(), matched));
        }
    }
    out
}
