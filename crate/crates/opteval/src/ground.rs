//! Expansion of a symbolic formulation against a data instance into a flat
//! scalar model: quantifiers and sums unroll over the declared set order,
//! parameter references resolve to table entries, and variable bound
//! expressions evaluate per element.

use crate::decimal::Decimal;
use crate::ir::{
    validate, BoundDecl, BoundForm, DataInstance, Diagnostic, Domain, Expr, IndexBinder,
    IndexCond, LinearExpr, ScalarConstraint, ScalarModel, ScalarVar, SymbolicFormulation,
};

#[derive(Debug, thiserror::Error)]
pub enum GroundError {
    #[error("formulation fails validation: {0:?}")]
    Invalid(Vec<Diagnostic>),
    #[error("missing parameter entry `{name}[{key}]`")]
    MissingParam { name: String, key: String },
    #[error("unknown set `{0}`")]
    UnknownSet(String),
    #[error("reference `{name}[{key}]` does not ground to a declared variable")]
    IndexOutOfRange { name: String, key: String },
    #[error("grounding `{element}`: {message}")]
    Eval { element: String, message: String },
}

#[derive(Debug, Clone)]
pub struct GroundingReport {
    pub model: ScalarModel,
    /// Bound declarations implied by the variable domains, grouped by role.
    pub bound_decls: Vec<BoundDecl>,
    /// Symbolic constraint name -> scalar constraint names, in emission order.
    pub expansion_map: Vec<(String, Vec<String>)>,
    /// Symbolic variable name -> scalar variable names.
    pub variable_map: Vec<(String, Vec<String>)>,
}

/// One scope of index bindings, `index name -> element label`.
type Env<'a> = Vec<(&'a str, &'a str)>;

fn lookup<'a>(env: &Env<'a>, index: &str) -> Option<&'a str> {
    env.iter().rev().find(|(n, _)| *n == index).map(|(_, v)| *v)
}

/// All binder tuples in declared set order, filtered by the condition.
fn binder_tuples<'a>(
    binders: &'a [IndexBinder],
    condition: &Option<IndexCond>,
    data: &'a DataInstance,
) -> Result<Vec<Env<'a>>, GroundError> {
    let mut tuples: Vec<Env<'a>> = vec![Vec::new()];
    for b in binders {
        let elems = data
            .set_elements(&b.set)
            .ok_or_else(|| GroundError::UnknownSet(b.set.clone()))?;
        let mut next = Vec::with_capacity(tuples.len() * elems.len());
        for t in &tuples {
            for e in elems {
                let mut t2 = t.clone();
                t2.push((b.index.as_str(), e.as_str()));
                next.push(t2);
            }
        }
        tuples = next;
    }
    if let Some(cond) = condition {
        let pos = |set: &str, label: &str| -> usize {
            data.set_elements(set)
                .and_then(|e| e.iter().position(|l| l == label))
                .unwrap_or(usize::MAX)
        };
        let set_of = |index: &str| -> &str {
            binders
                .iter()
                .find(|b| b.index == index)
                .map(|b| b.set.as_str())
                .unwrap_or("")
        };
        tuples.retain(|t| {
            let get = |i: &str| lookup(t, i).unwrap_or("");
            match cond {
                IndexCond::NotEqual(a, b) => get(a) != get(b),
                IndexCond::LessThan(a, b) => pos(set_of(a), get(a)) < pos(set_of(b), get(b)),
            }
        });
    }
    Ok(tuples)
}

fn scalar_name(role: &str, labels: &[&str]) -> String {
    let mut out = role.to_string();
    for l in labels {
        out.push_str(l);
    }
    out
}

struct Grounder<'a> {
    data: &'a DataInstance,
    vars: Vec<ScalarVar>,
    /// (role, labels) per scalar variable, aligned with `vars`.
    keys: Vec<(String, Vec<String>)>,
}

impl<'a> Grounder<'a> {
    fn param_value(&self, name: &str, labels: &[&str]) -> Result<Decimal, GroundError> {
        let key: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let table = self.data.param(name).ok_or_else(|| GroundError::MissingParam {
            name: name.to_string(),
            key: key.join(","),
        })?;
        table.get(&key).ok_or_else(|| GroundError::MissingParam {
            name: name.to_string(),
            key: key.join(","),
        })
    }

    fn var_index(&self, role: &str, labels: &[&str]) -> Result<usize, GroundError> {
        self.keys
            .iter()
            .position(|(r, ls)| {
                r == role && ls.len() == labels.len() && ls.iter().zip(labels).all(|(a, b)| a == b)
            })
            .ok_or_else(|| GroundError::IndexOutOfRange {
                name: role.to_string(),
                key: labels.join(","),
            })
    }

    /// Expands an expression under `env` into a linear form with exact
    /// decimal coefficients.
    fn eval(&self, expr: &Expr, env: &Env<'_>, element: &str) -> Result<LinearExpr, GroundError> {
        let err = |message: String| GroundError::Eval { element: element.to_string(), message };
        match expr {
            Expr::Num(d) => Ok(LinearExpr::constant_only(*d)),
            Expr::Param { name, indices } => {
                let labels = self.resolve_indices(indices, env, element)?;
                let v = self.param_value(name, &labels)?;
                Ok(LinearExpr::constant_only(v))
            }
            Expr::Var { name, indices } => {
                let labels = self.resolve_indices(indices, env, element)?;
                let idx = self.var_index(name, &labels)?;
                let mut e = LinearExpr::default();
                e.add_term(idx, Decimal::ONE);
                Ok(e)
            }
            Expr::Sum { index, set, body } => {
                let elems = self
                    .data
                    .set_elements(set)
                    .ok_or_else(|| GroundError::UnknownSet(set.clone()))?;
                let mut acc = LinearExpr::default();
                for e in elems {
                    let mut inner = env.clone();
                    inner.push((index.as_str(), e.as_str()));
                    let part = self.eval(body, &inner, element)?;
                    acc.constant = acc
                        .constant
                        .checked_add(&part.constant)
                        .map_err(|e| err(e.to_string()))?;
                    for (v, c) in part.coeffs {
                        acc.add_term(v, c);
                    }
                }
                Ok(acc)
            }
            Expr::Add(terms) => {
                let mut acc = LinearExpr::default();
                for t in terms {
                    let part = self.eval(t, env, element)?;
                    acc.constant = acc
                        .constant
                        .checked_add(&part.constant)
                        .map_err(|e| err(e.to_string()))?;
                    for (v, c) in part.coeffs {
                        acc.add_term(v, c);
                    }
                }
                Ok(acc)
            }
            Expr::Sub(a, b) => {
                let mut acc = self.eval(a, env, element)?;
                let part = self.eval(b, env, element)?;
                acc.constant = acc
                    .constant
                    .checked_sub(&part.constant)
                    .map_err(|e| err(e.to_string()))?;
                for (v, c) in part.coeffs {
                    acc.add_term(v, c.neg());
                }
                Ok(acc)
            }
            Expr::Mul(a, b) => {
                let ea = self.eval(a, env, element)?;
                let eb = self.eval(b, env, element)?;
                let scale = |e: &LinearExpr, k: Decimal| -> Result<LinearExpr, GroundError> {
                    let mut out = LinearExpr::default();
                    out.constant = e.constant.checked_mul(&k).map_err(|e| err(e.to_string()))?;
                    for (v, c) in &e.coeffs {
                        out.add_term(*v, c.checked_mul(&k).map_err(|e| err(e.to_string()))?);
                    }
                    Ok(out)
                };
                match (ea.is_empty(), eb.is_empty()) {
                    (true, _) => scale(&eb, ea.constant),
                    (_, true) => scale(&ea, eb.constant),
                    (false, false) => Err(err("product of decision variables".into())),
                }
            }
            Expr::Neg(a) => {
                let e = self.eval(a, env, element)?;
                let mut out = LinearExpr::default();
                out.constant = e.constant.neg();
                for (v, c) in e.coeffs {
                    out.add_term(v, c.neg());
                }
                Ok(out)
            }
        }
    }

    fn resolve_indices<'e>(
        &self,
        indices: &'e [String],
        env: &Env<'e>,
        element: &str,
    ) -> Result<Vec<&'e str>, GroundError> {
        indices
            .iter()
            .map(|i| {
                lookup(env, i).ok_or_else(|| GroundError::Eval {
                    element: element.to_string(),
                    message: format!("index `{i}` is not bound"),
                })
            })
            .collect()
    }
}

/// Grounds `f` against `d`. Requires `validate(f)` to be empty and `d` to
/// cover every set and parameter the formulation uses.
pub fn ground(f: &SymbolicFormulation, d: &DataInstance) -> Result<GroundingReport, GroundError> {
    let diags = validate(f);
    if !diags.is_empty() {
        return Err(GroundError::Invalid(diags));
    }

    let mut grounder = Grounder { data: d, vars: Vec::new(), keys: Vec::new() };
    let mut variable_map = Vec::new();
    let mut bound_decls = Vec::new();

    // Variables first, in declaration order, elements in set order.
    for decl in &f.variables {
        let tuples = binder_tuples(&decl.binders, &decl.condition, d)?;
        let mut names = Vec::new();
        for env in &tuples {
            let labels: Vec<&str> = env.iter().map(|(_, v)| *v).collect();
            let name = scalar_name(&decl.name, &labels);
            let idx = grounder.vars.len();
            match decl.domain {
                Domain::Binary => {
                    grounder.vars.push(ScalarVar::binary(name.clone()));
                    bound_decls.push(BoundDecl { var: idx, form: BoundForm::Binary, role: decl.name.clone() });
                }
                dom => {
                    let eval_bound = |e: &Option<Expr>| -> Result<Option<Decimal>, GroundError> {
                        match e {
                            None => Ok(None),
                            Some(expr) => {
                                let lin = grounder.eval(expr, env, &decl.name)?;
                                if !lin.is_empty() {
                                    return Err(GroundError::Eval {
                                        element: decl.name.clone(),
                                        message: "bound expression references variables".into(),
                                    });
                                }
                                Ok(Some(lin.constant))
                            }
                        }
                    };
                    let lower = eval_bound(&decl.lower)?;
                    let upper = eval_bound(&decl.upper)?;
                    grounder.vars.push(ScalarVar { name: name.clone(), domain: dom, lower, upper });
                    if dom == Domain::Integer {
                        bound_decls.push(BoundDecl { var: idx, form: BoundForm::Integer, role: decl.name.clone() });
                    }
                    if let Some(lo) = lower {
                        bound_decls.push(BoundDecl { var: idx, form: BoundForm::Lower(lo), role: decl.name.clone() });
                    }
                    if let Some(hi) = upper {
                        bound_decls.push(BoundDecl { var: idx, form: BoundForm::Upper(hi), role: decl.name.clone() });
                    }
                }
            }
            grounder
                .keys
                .push((decl.name.clone(), labels.iter().map(|s| s.to_string()).collect()));
            names.push(name);
        }
        variable_map.push((decl.name.clone(), names));
    }

    let objective = grounder.eval(&f.objective, &Vec::new(), "objective")?;

    let mut constraints = Vec::new();
    let mut expansion_map = Vec::new();
    for con in &f.constraints {
        let tuples = match &con.quantifier {
            None => vec![Vec::new()],
            Some(q) => binder_tuples(&q.binders, &q.condition, d)?,
        };
        let mut names = Vec::new();
        for env in &tuples {
            let labels: Vec<&str> = env.iter().map(|(_, v)| *v).collect();
            let name = scalar_name(&con.name, &labels);
            let lhs = grounder.eval(&con.lhs, env, &con.name)?;
            let rhs = grounder.eval(&con.rhs, env, &con.name)?;
            let (expr, rhs_const) = crate::parser::ofir_support::normalize_sides(lhs, rhs);
            constraints.push(ScalarConstraint { name: name.clone(), lhs: expr, op: con.op, rhs: rhs_const });
            names.push(name);
        }
        expansion_map.push((con.name.clone(), names));
    }

    let model = ScalarModel {
        name: f.name.clone(),
        sense: f.sense,
        variables: grounder.vars,
        objective,
        constraints,
    };
    model
        .check()
        .map_err(|m| GroundError::Eval { element: f.name.clone(), message: m })?;

    Ok(GroundingReport { model, bound_decls, expansion_map, variable_map })
}
