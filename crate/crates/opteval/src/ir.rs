//! Core data model for optimization formulations.
//!
//! Two levels: [`SymbolicFormulation`] mirrors the set-indexed style of the
//! benchmark definitions (sets, parameter tables, quantified constraints),
//! while [`ScalarModel`] is the grounded, flat linear model that the solver
//! and the matcher operate on. All IR numbers are exact [`Decimal`]s.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::decimal::Decimal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Minimize => write!(f, "min"),
            Sense::Maximize => write!(f, "max"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Binary,
    Integer,
    Continuous,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Binary => write!(f, "binary"),
            Domain::Integer => write!(f, "integer"),
            Domain::Continuous => write!(f, "continuous"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmpOp::Le => write!(f, "<="),
            CmpOp::Ge => write!(f, ">="),
            CmpOp::Eq => write!(f, "="),
        }
    }
}

// ---------------------------------------------------------------------------
// Symbolic level
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDecl {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    /// Index-set signature; empty for scalars.
    pub index_sets: Vec<String>,
    pub description: String,
}

/// One index binder `i in S`. Anonymous binders (written as a bare set name)
/// get generated names during parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexBinder {
    pub index: String,
    pub set: String,
}

/// Side condition on a binder list. Comparison is by element position in the
/// declared set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IndexCond {
    NotEqual(String, String),
    LessThan(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub binders: Vec<IndexBinder>,
    pub condition: Option<IndexCond>,
    pub domain: Domain,
    pub lower: Option<Expr>,
    pub upper: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(Decimal),
    Param { name: String, indices: Vec<String> },
    Var { name: String, indices: Vec<String> },
    Sum { index: String, set: String, body: Box<Expr> },
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    /// Maximum decision-variable degree of the expression.
    pub fn var_degree(&self) -> u32 {
        match self {
            Expr::Num(_) | Expr::Param { .. } => 0,
            Expr::Var { .. } => 1,
            Expr::Sum { body, .. } => body.var_degree(),
            Expr::Add(terms) => terms.iter().map(Expr::var_degree).max().unwrap_or(0),
            Expr::Sub(a, b) => a.var_degree().max(b.var_degree()),
            Expr::Mul(a, b) => a.var_degree() + b.var_degree(),
            Expr::Neg(a) => a.var_degree(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantifier {
    pub binders: Vec<IndexBinder>,
    pub condition: Option<IndexCond>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicConstraint {
    pub name: String,
    pub quantifier: Option<Quantifier>,
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicFormulation {
    pub name: String,
    pub sense: Sense,
    pub sets: Vec<SetDecl>,
    pub parameters: Vec<ParamDecl>,
    pub variables: Vec<VarDecl>,
    pub objective: Expr,
    pub constraints: Vec<SymbolicConstraint>,
}

// ---------------------------------------------------------------------------
// Data instances
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    pub name: String,
    pub arity: usize,
    /// Entries keyed by label tuples, in file order.
    pub values: Vec<(Vec<String>, Decimal)>,
}

impl ParamTable {
    pub fn get(&self, key: &[String]) -> Option<Decimal> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataInstance {
    pub problem: String,
    /// Set name -> element labels in declared order.
    pub sets: Vec<(String, Vec<String>)>,
    pub params: Vec<ParamTable>,
}

impl DataInstance {
    pub fn set_elements(&self, name: &str) -> Option<&[String]> {
        self.sets.iter().find(|(n, _)| n == name).map(|(_, e)| e.as_slice())
    }

    pub fn param(&self, name: &str) -> Option<&ParamTable> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut ParamTable> {
        self.params.iter_mut().find(|p| p.name == name)
    }
}

// ---------------------------------------------------------------------------
// Scalar level
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarVar {
    pub name: String,
    pub domain: Domain,
    /// `None` means unbounded below.
    pub lower: Option<Decimal>,
    /// `None` means unbounded above.
    pub upper: Option<Decimal>,
}

impl ScalarVar {
    pub fn continuous(name: impl Into<String>, lower: Option<Decimal>, upper: Option<Decimal>) -> ScalarVar {
        ScalarVar { name: name.into(), domain: Domain::Continuous, lower, upper }
    }

    pub fn binary(name: impl Into<String>) -> ScalarVar {
        ScalarVar {
            name: name.into(),
            domain: Domain::Binary,
            lower: Some(Decimal::ZERO),
            upper: Some(Decimal::ONE),
        }
    }

    pub fn lower_f64(&self) -> f64 {
        self.lower.map(|d| d.to_f64()).unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper_f64(&self) -> f64 {
        self.upper.map(|d| d.to_f64()).unwrap_or(f64::INFINITY)
    }
}

/// `constant + sum(coeff_i * var_i)` with coefficients kept sorted by
/// variable index so that rendering is deterministic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearExpr {
    pub constant: Decimal,
    pub coeffs: Vec<(usize, Decimal)>,
}

impl LinearExpr {
    pub fn constant_only(c: Decimal) -> LinearExpr {
        LinearExpr { constant: c, coeffs: Vec::new() }
    }

    pub fn add_term(&mut self, var: usize, coeff: Decimal) {
        if coeff.is_zero() {
            return;
        }
        match self.coeffs.binary_search_by_key(&var, |(v, _)| *v) {
            Ok(pos) => {
                let merged = self.coeffs[pos].1.checked_add(&coeff).expect("coefficient overflow");
                if merged.is_zero() {
                    self.coeffs.remove(pos);
                } else {
                    self.coeffs[pos].1 = merged;
                }
            }
            Err(pos) => self.coeffs.insert(pos, (var, coeff)),
        }
    }

    pub fn coeff(&self, var: usize) -> Decimal {
        self.coeffs
            .binary_search_by_key(&var, |(v, _)| *v)
            .map(|pos| self.coeffs[pos].1)
            .unwrap_or(Decimal::ZERO)
    }

    pub fn eval_f64(&self, assignment: &[f64]) -> f64 {
        let mut acc = self.constant.to_f64();
        for (v, c) in &self.coeffs {
            acc += c.to_f64() * assignment[*v];
        }
        acc
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarConstraint {
    pub name: String,
    pub lhs: LinearExpr,
    pub op: CmpOp,
    pub rhs: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarModel {
    pub name: String,
    pub sense: Sense,
    pub variables: Vec<ScalarVar>,
    pub objective: LinearExpr,
    pub constraints: Vec<ScalarConstraint>,
}

impl ScalarModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Checks the scalar invariants: coefficient references in range,
    /// binary bounds implied, lower <= upper.
    pub fn check(&self) -> Result<(), String> {
        let n = self.variables.len();
        let check_expr = |e: &LinearExpr, what: &str| -> Result<(), String> {
            for (v, _) in &e.coeffs {
                if *v >= n {
                    return Err(format!("{what} references variable index {v} out of range"));
                }
            }
            Ok(())
        };
        check_expr(&self.objective, "objective")?;
        for c in &self.constraints {
            check_expr(&c.lhs, &c.name)?;
        }
        for v in &self.variables {
            if v.domain == Domain::Binary
                && (v.lower != Some(Decimal::ZERO) || v.upper != Some(Decimal::ONE))
            {
                return Err(format!("binary variable {} must have bounds [0,1]", v.name));
            }
            if let (Some(lo), Some(hi)) = (v.lower, v.upper) {
                if lo > hi {
                    return Err(format!("variable {} has lower > upper", v.name));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bound-declaration records
// ---------------------------------------------------------------------------

/// A variable domain restriction as *declared* in the source (grounded
/// formulation or parsed candidate text). The matcher counts these as
/// constraint elements; the scalar model keeps only the merged tightest
/// bounds, so redundant declarations survive here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundDecl {
    /// Variable index into the owning `ScalarModel`.
    pub var: usize,
    pub form: BoundForm,
    /// Role the declaration belongs to: the symbolic variable name on the
    /// ground-truth side, a name prefix on the candidate side.
    pub role: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundForm {
    /// `x >= c`
    Lower(Decimal),
    /// `x <= c`
    Upper(Decimal),
    /// `x in {0,1}`
    Binary,
    /// `x integer` (declares integrality only; carries no rows)
    Integer,
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// The element (constraint, declaration, symbol) the finding names.
    pub element: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

struct SymbolTable<'a> {
    f: &'a SymbolicFormulation,
}

impl<'a> SymbolTable<'a> {
    fn set_declared(&self, name: &str) -> bool {
        self.f.sets.iter().any(|s| s.name == name)
    }
    fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.f.parameters.iter().find(|p| p.name == name)
    }
    fn var(&self, name: &str) -> Option<&VarDecl> {
        self.f.variables.iter().find(|v| v.name == name)
    }
}

/// Returns an empty list iff all formulation invariants hold. Each
/// diagnostic names the violating element.
pub fn validate(f: &SymbolicFormulation) -> Vec<Diagnostic> {
    let table = SymbolTable { f };
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for s in &f.sets {
        if !seen.insert(s.name.as_str()) {
            out.push(Diagnostic {
                element: s.name.clone(),
                message: format!("set `{}` declared more than once", s.name),
            });
        }
    }

    for v in &f.variables {
        for b in &v.binders {
            if !table.set_declared(&b.set) {
                out.push(Diagnostic {
                    element: v.name.clone(),
                    message: format!("variable `{}` indexed by undeclared set `{}`", v.name, b.set),
                });
            }
        }
        let binder_names: Vec<&str> = v.binders.iter().map(|b| b.index.as_str()).collect();
        for bound in [&v.lower, &v.upper].into_iter().flatten() {
            check_expr(&table, bound, &binder_names, &v.name, &mut out);
            if bound.var_degree() > 0 {
                out.push(Diagnostic {
                    element: v.name.clone(),
                    message: format!("bound expression of `{}` references decision variables", v.name),
                });
            }
        }
    }

    check_expr(&table, &f.objective, &[], "objective", &mut out);
    if f.objective.var_degree() > 1 {
        out.push(Diagnostic {
            element: "objective".into(),
            message: "objective is nonlinear (contains a product of decision variables)".into(),
        });
    }

    for c in &f.constraints {
        let mut binder_names: Vec<&str> = Vec::new();
        if let Some(q) = &c.quantifier {
            let mut uniq = HashSet::new();
            for b in &q.binders {
                if !uniq.insert(b.index.as_str()) {
                    out.push(Diagnostic {
                        element: c.name.clone(),
                        message: format!("quantifier index `{}` bound twice in `{}`", b.index, c.name),
                    });
                }
                if !table.set_declared(&b.set) {
                    out.push(Diagnostic {
                        element: c.name.clone(),
                        message: format!("quantifier of `{}` ranges over undeclared set `{}`", c.name, b.set),
                    });
                }
                binder_names.push(b.index.as_str());
            }
            if let Some(cond) = &q.condition {
                let (a, b) = match cond {
                    IndexCond::NotEqual(a, b) | IndexCond::LessThan(a, b) => (a, b),
                };
                for idx in [a, b] {
                    if !binder_names.contains(&idx.as_str()) {
                        out.push(Diagnostic {
                            element: c.name.clone(),
                            message: format!("condition of `{}` uses unbound index `{}`", c.name, idx),
                        });
                    }
                }
            }
        }
        for side in [&c.lhs, &c.rhs] {
            check_expr(&table, side, &binder_names, &c.name, &mut out);
            if side.var_degree() > 1 {
                out.push(Diagnostic {
                    element: c.name.clone(),
                    message: format!("constraint `{}` is nonlinear (contains a product of decision variables)", c.name),
                });
            }
        }
    }

    out
}

fn check_expr(
    table: &SymbolTable<'_>,
    expr: &Expr,
    bound_indices: &[&str],
    element: &str,
    out: &mut Vec<Diagnostic>,
) {
    match expr {
        Expr::Num(_) => {}
        Expr::Param { name, indices } => {
            match table.param(name) {
                None => out.push(Diagnostic {
                    element: name.clone(),
                    message: format!("`{element}` references undeclared parameter `{name}`"),
                }),
                Some(decl) => {
                    if decl.index_sets.len() != indices.len() {
                        out.push(Diagnostic {
                            element: name.clone(),
                            message: format!(
                                "parameter `{name}` used with {} indices, declared with {}",
                                indices.len(),
                                decl.index_sets.len()
                            ),
                        });
                    }
                }
            }
            for idx in indices {
                if !bound_indices.contains(&idx.as_str()) {
                    out.push(Diagnostic {
                        element: element.to_string(),
                        message: format!("index `{idx}` is not bound in `{element}`"),
                    });
                }
            }
        }
        Expr::Var { name, indices } => {
            match table.var(name) {
                None => out.push(Diagnostic {
                    element: name.clone(),
                    message: format!("`{element}` references undeclared variable `{name}`"),
                }),
                Some(decl) => {
                    if decl.binders.len() != indices.len() {
                        out.push(Diagnostic {
                            element: name.clone(),
                            message: format!(
                                "variable `{name}` used with {} indices, declared with {}",
                                indices.len(),
                                decl.binders.len()
                            ),
                        });
                    }
                }
            }
            for idx in indices {
                if !bound_indices.contains(&idx.as_str()) {
                    out.push(Diagnostic {
                        element: element.to_string(),
                        message: format!("index `{idx}` is not bound in `{element}`"),
                    });
                }
            }
        }
        Expr::Sum { index, set, body } => {
            if !table.set_declared(set) {
                out.push(Diagnostic {
                    element: element.to_string(),
                    message: format!("sum in `{element}` ranges over undeclared set `{set}`"),
                });
            }
            let mut inner: Vec<&str> = bound_indices.to_vec();
            inner.push(index.as_str());
            check_expr(table, body, &inner, element, out);
        }
        Expr::Add(terms) => {
            for t in terms {
                check_expr(table, t, bound_indices, element, out);
            }
        }
        Expr::Sub(a, b) | Expr::Mul(a, b) => {
            check_expr(table, a, bound_indices, element, out);
            check_expr(table, b, bound_indices, element, out);
        }
        Expr::Neg(a) => check_expr(table, a, bound_indices, element, out),
    }
}

// ---------------------------------------------------------------------------
// Canonical emission (flat OFIR)
// ---------------------------------------------------------------------------

fn render_linexpr(e: &LinearExpr, vars: &[ScalarVar]) -> String {
    let mut out = String::new();
    let mut first = true;
    for (v, c) in &e.coeffs {
        let name = &vars[*v].name;
        let neg = *c < Decimal::ZERO;
        let abs = if neg { c.neg() } else { *c };
        if first {
            if neg {
                out.push_str("-");
            }
            first = false;
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if abs == Decimal::ONE {
            out.push_str(name);
        } else {
            out.push_str(&format!("{abs} {name}"));
        }
    }
    if !e.constant.is_zero() || first {
        let neg = e.constant < Decimal::ZERO;
        let abs = if neg { e.constant.neg() } else { e.constant };
        if first {
            if neg {
                out.push('-');
            }
            out.push_str(&abs.to_string());
        } else {
            out.push_str(if neg { " - " } else { " + " });
            out.push_str(&abs.to_string());
        }
    }
    out
}

/// Deterministic flat-OFIR rendering of a scalar model. Identical models
/// produce byte-identical text; `parse_ofir` reads it back structurally
/// unchanged.
pub fn emit(m: &ScalarModel) -> String {
    let mut out = String::new();
    out.push_str("# ofir/1\n");
    out.push_str(&format!("PROBLEM {}\n", m.name));
    for v in &m.variables {
        out.push_str(&format!("VAR {} {}", v.name, v.domain));
        if v.domain != Domain::Binary && (v.lower.is_some() || v.upper.is_some()) {
            let lo = v.lower.map(|d| d.to_string()).unwrap_or_default();
            let hi = v.upper.map(|d| d.to_string()).unwrap_or_default();
            out.push_str(&format!(" [{lo},{hi}]"));
        }
        out.push('\n');
    }
    out.push_str(&format!("OBJ {} {}\n", m.sense, render_linexpr(&m.objective, &m.variables)));
    for c in &m.constraints {
        out.push_str(&format!(
            "CON {}: {} {} {}\n",
            c.name,
            render_linexpr(&c.lhs, &m.variables),
            c.op,
            c.rhs
        ));
    }
    out
}
