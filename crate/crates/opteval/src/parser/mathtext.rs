//! Lenient parser for plain linear-math text, the style language models
//! produce when asked for "only the formulation":
//!
//! ```text
//! maximize 60 x1 + 100 x2 + 120 x3
//! subject to
//! 10 x1 + 20 x2 + 30 x3 <= 50
//! x1, x2, x3 in {0,1}
//! ```
//!
//! Identifier spellings `x1`, `x_1`, `x[1]`, `x_{1}` fold to one canonical
//! variable. Implicit multiplication (`60x1`) and the unicode senses are
//! accepted. Strict mode aborts on an unparseable line; lenient mode skips
//! the line with a warning.

use crate::decimal::Decimal;
use crate::ir::{
    BoundDecl, BoundForm, CmpOp, Domain, LinearExpr, ScalarConstraint, ScalarModel, ScalarVar,
    Sense,
};

use super::ofir_support::{normalize_sides, scale_linear};
use super::{
    canonical_var_name, logical_lines, name_prefix, ParseError, ParseMode, ParseOutcome, Parsed,
    ScalarParse, Span,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Decimal),
    Plus,
    Minus,
    Star,
    Le,
    Ge,
    Eq,
    Comma,
    LBrace,
    RBrace,
    LParen,
    RParen,
}

fn tokenize(line: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' => { out.push(Tok::Plus); i += 1 }
            '-' | '\u{2212}' => { out.push(Tok::Minus); i += 1 }
            '*' | '\u{00d7}' | '\u{22c5}' | '\u{00b7}' => { out.push(Tok::Star); i += 1 }
            ',' => { out.push(Tok::Comma); i += 1 }
            '{' => { out.push(Tok::LBrace); i += 1 }
            '}' => { out.push(Tok::RBrace); i += 1 }
            '(' => { out.push(Tok::LParen); i += 1 }
            ')' => { out.push(Tok::RParen); i += 1 }
            '\u{2264}' => { out.push(Tok::Le); i += 1 }
            '\u{2265}' => { out.push(Tok::Ge); i += 1 }
            '\u{2208}' => { out.push(Tok::Ident("in".into())); i += 1 }
            '<' => {
                i += if chars.get(i + 1) == Some(&'=') { 2 } else { 1 };
                out.push(Tok::Le);
            }
            '>' => {
                i += if chars.get(i + 1) == Some(&'=') { 2 } else { 1 };
                out.push(Tok::Ge);
            }
            '=' => {
                i += if chars.get(i + 1) == Some(&'=') { 2 } else { 1 };
                out.push(Tok::Eq);
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let d: Decimal = text.parse().map_err(|e| format!("{e}"))?;
                out.push(Tok::Num(d));
            }
            _ if c.is_ascii_alphabetic() => {
                // Identifier with optional index decoration: x, x1, x_1,
                // x[1,2], x_{i,j}. Bracket groups directly attached to the
                // head are folded into the name.
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                loop {
                    match chars.get(i) {
                        Some('[') => {
                            let close = chars[i..].iter().position(|&c| c == ']');
                            match close {
                                Some(off) => i += off + 1,
                                None => return Err("unterminated `[` in identifier".into()),
                            }
                        }
                        Some('{') if i > start && chars[i - 1] == '_' => {
                            let close = chars[i..].iter().position(|&c| c == '}');
                            match close {
                                Some(off) => i += off + 1,
                                None => return Err("unterminated `{` in identifier".into()),
                            }
                        }
                        Some('_') if chars.get(i + 1).map_or(false, |n| n.is_ascii_alphanumeric() || *n == '{') => {
                            i += 1;
                        }
                        _ => break,
                    }
                }
                let raw: String = chars[start..i].iter().collect();
                out.push(Tok::Ident(raw));
            }
            _ => return Err(format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

struct VarIntern {
    vars: Vec<ScalarVar>,
    decls: Vec<BoundDecl>,
}

impl VarIntern {
    fn intern(&mut self, raw: &str) -> usize {
        let canonical = canonical_var_name(raw);
        match self.vars.iter().position(|v| v.name == canonical) {
            Some(idx) => idx,
            None => {
                self.vars.push(ScalarVar::continuous(canonical, None, None));
                self.vars.len() - 1
            }
        }
    }

    fn declare(&mut self, idx: usize, form: BoundForm) {
        let role = name_prefix(&self.vars[idx].name);
        match form {
            BoundForm::Binary => {
                self.vars[idx].domain = Domain::Binary;
                self.vars[idx].lower = Some(Decimal::ZERO);
                self.vars[idx].upper = Some(Decimal::ONE);
            }
            BoundForm::Integer => {
                if self.vars[idx].domain == Domain::Continuous {
                    self.vars[idx].domain = Domain::Integer;
                }
            }
            BoundForm::Lower(c) => {
                if self.vars[idx].domain != Domain::Binary {
                    let tighter = match self.vars[idx].lower {
                        Some(cur) => c > cur,
                        None => true,
                    };
                    if tighter {
                        self.vars[idx].lower = Some(c);
                    }
                }
            }
            BoundForm::Upper(c) => {
                if self.vars[idx].domain != Domain::Binary {
                    let tighter = match self.vars[idx].upper {
                        Some(cur) => c < cur,
                        None => true,
                    };
                    if tighter {
                        self.vars[idx].upper = Some(c);
                    }
                }
            }
        }
        self.decls.push(BoundDecl { var: idx, form, role });
    }
}

struct LineParser<'a> {
    toks: &'a [Tok],
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn linexpr(&mut self, vars: &mut VarIntern) -> Result<LinearExpr, String> {
        let mut acc = LinearExpr::default();
        let mut sign = Decimal::ONE;
        let mut expect_term = true;
        loop {
            match self.peek() {
                Some(Tok::Plus) if expect_term => {
                    self.next();
                }
                Some(Tok::Minus) if expect_term => {
                    sign = sign.neg();
                    self.next();
                }
                Some(Tok::Plus) | Some(Tok::Minus) if !expect_term => {
                    sign = if self.next() == Some(&Tok::Minus) {
                        Decimal::from_int(-1)
                    } else {
                        Decimal::ONE
                    };
                    expect_term = true;
                }
                _ if expect_term => {
                    let term = self.term(vars)?;
                    let scaled = scale_linear(&term, sign)?;
                    acc.constant = acc.constant.checked_add(&scaled.constant).map_err(|e| e.to_string())?;
                    for (v, c) in scaled.coeffs {
                        acc.add_term(v, c);
                    }
                    sign = Decimal::ONE;
                    expect_term = false;
                }
                _ => break,
            }
        }
        if expect_term {
            return Err("dangling operator".into());
        }
        Ok(acc)
    }

    /// One multiplicative group, with implicit multiplication between
    /// adjacent factors (`60x1`, `2 (x1 + x2)`).
    fn term(&mut self, vars: &mut VarIntern) -> Result<LinearExpr, String> {
        let mut acc = self.factor(vars)?;
        loop {
            let implicit = matches!(
                self.peek(),
                Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen)
            );
            if self.peek() == Some(&Tok::Star) {
                self.next();
            } else if !implicit {
                break;
            }
            let rhs = self.factor(vars)?;
            acc = mul_linear(&acc, &rhs)?;
        }
        Ok(acc)
    }

    fn factor(&mut self, vars: &mut VarIntern) -> Result<LinearExpr, String> {
        match self.next().cloned() {
            Some(Tok::Minus) => {
                let inner = self.factor(vars)?;
                scale_linear(&inner, Decimal::from_int(-1))
            }
            Some(Tok::Num(d)) => Ok(LinearExpr::constant_only(d)),
            Some(Tok::Ident(raw)) => {
                let idx = vars.intern(&raw);
                let mut e = LinearExpr::default();
                e.add_term(idx, Decimal::ONE);
                Ok(e)
            }
            Some(Tok::LParen) => {
                let inner = self.linexpr(vars)?;
                if self.next() != Some(&Tok::RParen) {
                    return Err("expected `)`".into());
                }
                Ok(inner)
            }
            other => Err(format!("expected a term, found {other:?}")),
        }
    }
}

fn mul_linear(a: &LinearExpr, b: &LinearExpr) -> Result<LinearExpr, String> {
    match (a.is_empty(), b.is_empty()) {
        (true, _) => scale_linear(b, a.constant),
        (_, true) => scale_linear(a, b.constant),
        (false, false) => Err("product of decision variables (nonlinear)".into()),
    }
}

fn is_separator(line: &str) -> bool {
    let lowered: String = line
        .to_ascii_lowercase()
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect();
    matches!(lowered.as_str(), "st" | "subjectto" | "suchthat" | "constraints")
}

fn objective_sense(word: &str) -> Option<Sense> {
    match word.to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Sense::Minimize),
        "maximize" | "maximise" | "max" => Some(Sense::Maximize),
        _ => None,
    }
}

/// Attempts the domain-line forms. Returns the declarations to apply, or
/// `None` when the line is not a domain line.
fn try_domain_line(toks: &[Tok]) -> Option<Vec<(String, BoundForm)>> {
    // varlist := ident (',' ident)*
    let mut names = Vec::new();
    let mut pos = 0;
    while let Some(Tok::Ident(raw)) = toks.get(pos) {
        names.push(raw.clone());
        pos += 1;
        if toks.get(pos) == Some(&Tok::Comma) {
            pos += 1;
        } else {
            break;
        }
    }
    if !names.is_empty() {
        match toks.get(pos) {
            // x1, x2 in {0,1}
            Some(Tok::Ident(kw)) if kw.eq_ignore_ascii_case("in") => {
                let tail = &toks[pos + 1..];
                if tail
                    == [
                        Tok::LBrace,
                        Tok::Num(Decimal::ZERO),
                        Tok::Comma,
                        Tok::Num(Decimal::ONE),
                        Tok::RBrace,
                    ]
                {
                    return Some(names.into_iter().map(|n| (n, BoundForm::Binary)).collect());
                }
                return None;
            }
            Some(Tok::Ident(kw)) if kw.eq_ignore_ascii_case("binary") && toks.len() == pos + 1 => {
                return Some(names.into_iter().map(|n| (n, BoundForm::Binary)).collect());
            }
            Some(Tok::Ident(kw)) if kw.eq_ignore_ascii_case("integer") && toks.len() == pos + 1 => {
                return Some(names.into_iter().map(|n| (n, BoundForm::Integer)).collect());
            }
            // x1, x2 >= c  /  x1, x2 <= c
            Some(op @ (Tok::Ge | Tok::Le)) => {
                let neg = toks.get(pos + 1) == Some(&Tok::Minus);
                let num_pos = pos + 1 + usize::from(neg);
                if let (Some(Tok::Num(c)), true) = (toks.get(num_pos), toks.len() == num_pos + 1) {
                    let c = if neg { c.neg() } else { *c };
                    let form = if *op == Tok::Ge { BoundForm::Lower(c) } else { BoundForm::Upper(c) };
                    return Some(names.into_iter().map(|n| (n, form)).collect());
                }
                return None;
            }
            _ => {}
        }
    }
    // lb <= x <= ub  (bound box; also the mirrored ub >= x >= lb)
    if toks.len() == 5 {
        if let (Tok::Num(a), Tok::Ident(name), Tok::Num(b)) = (&toks[0], &toks[2], &toks[4]) {
            match (&toks[1], &toks[3]) {
                (Tok::Le, Tok::Le) => {
                    return Some(vec![
                        (name.clone(), BoundForm::Lower(*a)),
                        (name.clone(), BoundForm::Upper(*b)),
                    ])
                }
                (Tok::Ge, Tok::Ge) => {
                    return Some(vec![
                        (name.clone(), BoundForm::Upper(*a)),
                        (name.clone(), BoundForm::Lower(*b)),
                    ])
                }
                _ => {}
            }
        }
    }
    None
}

/// Parses lenient linear-math text into a scalar model.
pub fn parse_mathtext(text: &str, mode: ParseMode) -> Result<ParseOutcome, ParseError> {
    let mut vars = VarIntern { vars: Vec::new(), decls: Vec::new() };
    let mut objective: Option<(Sense, LinearExpr)> = None;
    let mut constraints: Vec<ScalarConstraint> = Vec::new();
    let mut warnings: Vec<(Span, String)> = Vec::new();
    let mut spans: Vec<(String, Span)> = Vec::new();
    let mut row_counter = 0usize;

    for (line_no, span, raw_line) in logical_lines(text) {
        let line = raw_line
            .trim_start_matches(['*', '\u{2022}'])
            .trim();
        if line.is_empty() || is_separator(line) {
            continue;
        }

        // A skipped line must not leave variables behind that only it
        // mentioned, so interning rolls back on failure.
        let snapshot = vars.vars.len();
        let mut fail = |message: String, vars: &mut VarIntern| -> Result<(), ParseError> {
            vars.vars.truncate(snapshot);
            match mode {
                ParseMode::Strict => Err(ParseError::syntax(line_no, 1, message)),
                ParseMode::Lenient => {
                    warnings.push((span, format!("skipped unparseable line: {message}")));
                    Ok(())
                }
            }
        };

        let toks = match tokenize(line) {
            Ok(t) => t,
            Err(e) => {
                fail(e, &mut vars)?;
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }

        // Objective line.
        if let Tok::Ident(head) = &toks[0] {
            if let Some(sense) = objective_sense(head) {
                let body = &toks[1..];
                let mut p = LineParser { toks: body, pos: 0 };
                match p.linexpr(&mut vars) {
                    Ok(expr) if p.peek().is_none() => {
                        if objective.is_some() {
                            fail("more than one objective line".into(), &mut vars)?;
                        } else {
                            spans.push(("objective".into(), span));
                            objective = Some((sense, expr));
                        }
                        continue;
                    }
                    _ => {
                        fail("malformed objective line".into(), &mut vars)?;
                        continue;
                    }
                }
            }
        }

        // Domain lines.
        if let Some(decls) = try_domain_line(&toks) {
            let mut named = Vec::new();
            for (raw, form) in decls {
                let idx = vars.intern(&raw);
                vars.declare(idx, form);
                named.push(vars.vars[idx].name.clone());
            }
            spans.push((format!("domain {}", named.join(",")), span));
            continue;
        }

        // Constraint line.
        let mut p = LineParser { toks: &toks, pos: 0 };
        let lhs = match p.linexpr(&mut vars) {
            Ok(e) => e,
            Err(e) => {
                fail(e, &mut vars)?;
                continue;
            }
        };
        let op1 = match p.next() {
            Some(Tok::Le) => CmpOp::Le,
            Some(Tok::Ge) => CmpOp::Ge,
            Some(Tok::Eq) => CmpOp::Eq,
            _ => {
                fail("no comparison operator".into(), &mut vars)?;
                continue;
            }
        };
        let mid = match p.linexpr(&mut vars) {
            Ok(e) => e,
            Err(e) => {
                fail(e, &mut vars)?;
                continue;
            }
        };
        // Optional chained tail: expr op mid op rhs.
        let mut rows: Vec<(LinearExpr, CmpOp, LinearExpr)> = Vec::new();
        match p.next() {
            None => rows.push((lhs, op1, mid)),
            Some(op2_tok @ (Tok::Le | Tok::Ge | Tok::Eq)) => {
                let op2 = match op2_tok {
                    Tok::Le => CmpOp::Le,
                    Tok::Ge => CmpOp::Ge,
                    _ => CmpOp::Eq,
                };
                let rhs = match p.linexpr(&mut vars) {
                    Ok(e) if p.peek().is_none() => e,
                    _ => {
                        fail("malformed chained comparison".into(), &mut vars)?;
                        continue;
                    }
                };
                rows.push((lhs, op1, mid.clone()));
                rows.push((mid, op2, rhs));
            }
            Some(_) => {
                fail("trailing input after constraint".into(), &mut vars)?;
                continue;
            }
        }
        for (lhs, op, rhs) in rows {
            let (expr, rhs_const) = normalize_sides(lhs, rhs);
            row_counter += 1;
            let cname = format!("c{row_counter}");
            spans.push((cname.clone(), span));
            constraints.push(ScalarConstraint { name: cname, lhs: expr, op, rhs: rhs_const });
        }
    }

    let (sense, obj) = objective.ok_or(ParseError::MissingObjective)?;
    if constraints.is_empty() && vars.decls.is_empty() {
        warnings.push((Span { start: 0, end: 0 }, "no constraints".into()));
    }

    let model = ScalarModel {
        name: "candidate".into(),
        sense,
        variables: vars.vars,
        objective: obj,
        constraints,
    };
    Ok(ParseOutcome {
        model: Parsed::Scalar(ScalarParse { model, bound_decls: vars.decls }),
        warnings,
        spans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(text: &str, mode: ParseMode) -> (ScalarParse, Vec<(Span, String)>) {
        let out = parse_mathtext(text, mode).unwrap();
        match out.model {
            Parsed::Scalar(s) => (s, out.warnings),
            _ => panic!("expected scalar"),
        }
    }

    #[test]
    fn parses_knapsack_candidate() {
        let text = "maximize 60 x1 + 100 x2 + 120 x3\n10 x1 + 20 x2 + 30 x3 <= 50\nx1,x2,x3 in {0,1}";
        let (s, warnings) = scalar(text, ParseMode::Strict);
        assert!(warnings.is_empty());
        assert_eq!(s.model.sense, Sense::Maximize);
        assert_eq!(s.model.variables.len(), 3);
        assert!(s.model.variables.iter().all(|v| v.domain == Domain::Binary));
        assert_eq!(s.model.constraints.len(), 1);
        assert_eq!(s.model.constraints[0].rhs, Decimal::from_int(50));
        assert_eq!(s.bound_decls.len(), 3);
    }

    #[test]
    fn constant_objective_warns_no_constraints() {
        let (s, warnings) = scalar("minimize 0", ParseMode::Lenient);
        assert!(s.model.constraints.is_empty());
        assert!(warnings.iter().any(|(_, w)| w == "no constraints"));
    }

    #[test]
    fn alias_spellings_fold_to_one_variable() {
        let (s, _) = scalar("minimize x_2 + x_{2}\nx_2 >= 0", ParseMode::Lenient);
        assert_eq!(s.model.variables.len(), 1);
        assert_eq!(s.model.variables[0].name, "x2");
        assert_eq!(s.model.objective.coeff(0), Decimal::from_int(2));
        // Oracle check: evaluating at x2 = 1 must equal evaluating the raw
        // text `x_2 + x_{2}` at the same point, i.e. 1 + 1 = 2.
        assert_eq!(s.model.objective.eval_f64(&[1.0]), 2.0);
    }

    #[test]
    fn implicit_multiplication_and_unicode() {
        let (s, _) = scalar("maximize 60x1\n2x1 \u{2264} 10\nx1 \u{2265} 0", ParseMode::Strict);
        assert_eq!(s.model.objective.coeff(0), Decimal::from_int(60));
        assert_eq!(s.model.constraints[0].op, CmpOp::Le);
        assert_eq!(s.bound_decls[0].form, BoundForm::Lower(Decimal::ZERO));
    }

    #[test]
    fn bound_box_line() {
        let (s, _) = scalar("minimize x1\n0 <= x1 <= 10", ParseMode::Strict);
        let v = &s.model.variables[0];
        assert_eq!(v.lower, Some(Decimal::ZERO));
        assert_eq!(v.upper, Some(Decimal::from_int(10)));
        assert_eq!(s.bound_decls.len(), 2);
        assert!(s.model.constraints.is_empty());
    }

    #[test]
    fn chained_expression_becomes_two_rows() {
        let (s, _) = scalar("minimize x1 + x2\n5 <= x1 + x2 <= 10", ParseMode::Strict);
        assert_eq!(s.model.constraints.len(), 2);
        // 5 <= x1 + x2 normalizes to -x1 - x2 <= -5.
        assert_eq!(s.model.constraints[0].op, CmpOp::Le);
        assert_eq!(s.model.constraints[0].rhs, Decimal::from_int(-5));
        assert_eq!(s.model.constraints[1].rhs, Decimal::from_int(10));
    }

    #[test]
    fn constants_move_right_variables_left() {
        let (s, _) = scalar("minimize x1\n3 + 2 x1 >= x2 + 5", ParseMode::Strict);
        let c = &s.model.constraints[0];
        assert_eq!(c.rhs, Decimal::from_int(2));
        assert_eq!(c.lhs.coeff(0), Decimal::from_int(2));
        assert_eq!(c.lhs.coeff(1), Decimal::from_int(-1));
    }

    #[test]
    fn strict_aborts_lenient_warns() {
        let text = "minimize x1\nthis is prose, not math\nx1 >= 1";
        assert!(parse_mathtext(text, ParseMode::Strict).is_err());
        let (s, warnings) = scalar(text, ParseMode::Lenient);
        assert_eq!(warnings.len(), 1);
        assert_eq!(s.bound_decls.len(), 1);
    }

    #[test]
    fn missing_objective_is_an_error() {
        assert_eq!(
            parse_mathtext("x1 + x2 <= 5", ParseMode::Lenient),
            Err(ParseError::MissingObjective)
        );
    }

    #[test]
    fn undeclared_vars_are_free() {
        let (s, _) = scalar("minimize y\ny + z >= 2", ParseMode::Strict);
        assert!(s.model.variables.iter().all(|v| v.lower.is_none() && v.upper.is_none()));
    }

    #[test]
    fn nonlinear_product_rejected_per_line() {
        let text = "minimize x1\nx1 * x2 <= 5";
        assert!(parse_mathtext(text, ParseMode::Strict).is_err());
        let (s, warnings) = scalar(text, ParseMode::Lenient);
        assert_eq!(warnings.iter().filter(|(_, w)| w.starts_with("skipped")).count(), 1);
        assert!(s.model.constraints.is_empty());
        // x2 appeared only on the skipped line and must not survive.
        assert_eq!(s.model.variables.len(), 1);
    }
}
