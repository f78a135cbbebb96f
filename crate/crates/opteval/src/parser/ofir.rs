//! Strict parser for the OFIR interchange format (`ofir/1`).
//!
//! A document is a sequence of newline-separated records:
//!
//! ```text
//! # ofir/1
//! PROBLEM knapsack
//! SET I = {1, 2, 3}
//! PARAM ItemWeight[I] = {1: 10, 2: 20, 3: 30}
//! PARAM MaxWeightKnapsack = 50
//! VAR x[I] binary
//! OBJ max sum(i in I, ItemValue[i] * x[i])
//! CON capacity: sum(i in I, ItemWeight[i] * x[i]) <= MaxWeightKnapsack
//! ```
//!
//! Quantifiers and variable index signatures take multiple binders with an
//! optional `where i != j` / `where i < j` condition (needed for pairwise
//! constraints). Documents without any symbolic construct parse to a flat
//! [`ScalarModel`].

use crate::decimal::Decimal;
use crate::ir::{
    BoundDecl, BoundForm, CmpOp, DataInstance, Domain, Expr, IndexBinder, IndexCond, LinearExpr,
    ParamDecl, ParamTable, Quantifier, ScalarConstraint, ScalarModel, ScalarVar, SetDecl, Sense,
    SymbolicConstraint, SymbolicFormulation, VarDecl,
};

use super::{
    canonical_var_name, logical_lines, name_prefix, ParseError, ParseOutcome, Parsed, ScalarParse,
    Span,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Decimal),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Assign,
    Le,
    Ge,
    Lt,
    Ne,
    Plus,
    Minus,
    Star,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '[' => { out.push((Tok::LBracket, col)); i += 1 }
            ']' => { out.push((Tok::RBracket, col)); i += 1 }
            '{' => { out.push((Tok::LBrace, col)); i += 1 }
            '}' => { out.push((Tok::RBrace, col)); i += 1 }
            '(' => { out.push((Tok::LParen, col)); i += 1 }
            ')' => { out.push((Tok::RParen, col)); i += 1 }
            ',' => { out.push((Tok::Comma, col)); i += 1 }
            ':' => { out.push((Tok::Colon, col)); i += 1 }
            '+' => { out.push((Tok::Plus, col)); i += 1 }
            '-' | '\u{2212}' => { out.push((Tok::Minus, col)); i += 1 }
            '*' => { out.push((Tok::Star, col)); i += 1 }
            '\u{2264}' => { out.push((Tok::Le, col)); i += 1 }
            '\u{2265}' => { out.push((Tok::Ge, col)); i += 1 }
            '<' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Le, col));
                    i += 2;
                } else {
                    out.push((Tok::Lt, col));
                    i += 1;
                }
            }
            '>' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Ge, col));
                    i += 2;
                } else {
                    return Err(ParseError::syntax(line_no, col, "strict `>` is not a valid sense; use `>=`"));
                }
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    out.push((Tok::Ne, col));
                    i += 2;
                } else {
                    return Err(ParseError::syntax(line_no, col, "unexpected `!`"));
                }
            }
            '=' => { out.push((Tok::Assign, col)); i += 1 }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let d: Decimal = text
                    .parse()
                    .map_err(|e| ParseError::syntax(line_no, col, format!("{e}")))?;
                out.push((Tok::Num(d), col));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            }
            _ => return Err(ParseError::syntax(line_no, col, format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Cursor {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(toks: Vec<(Tok, usize)>, line: usize) -> Cursor {
        Cursor { toks, pos: 0, line }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or_else(|| {
            self.toks.last().map(|(_, c)| c + 1).unwrap_or(1)
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::syntax(self.line, self.col(), message)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn label(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            Some(Tok::Num(d)) => Ok(d.to_string()),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err(format!("expected {what}")))
            }
        }
    }

    fn done(&mut self) -> Result<(), ParseError> {
        if self.peek().is_some() {
            Err(self.err("trailing input"))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug)]
enum Record {
    Problem(String),
    Set(SetDecl, Vec<String>),
    Param(ParamDecl, ParamTable),
    Var(VarDecl),
    Obj(Sense, Expr),
    Con(SymbolicConstraint),
}

/// Parses one OFIR document. Spans map every declared element to the byte
/// range of its record.
pub fn parse_ofir(text: &str) -> Result<ParseOutcome, ParseError> {
    let lines = logical_lines(text);
    let mut records: Vec<(Record, Span, usize)> = Vec::new();

    for (line_no, span, content) in &lines {
        let mut cur = Cursor::new(tokenize(content, *line_no)?, *line_no);
        let tag = cur.ident("record tag (PROBLEM, SET, PARAM, VAR, OBJ, CON)")?;
        let rec = match tag.as_str() {
            "PROBLEM" => {
                let name = cur.ident("problem name")?;
                cur.done()?;
                Record::Problem(name)
            }
            "SET" => parse_set(&mut cur)?,
            "PARAM" => parse_param(&mut cur)?,
            "VAR" => parse_var(&mut cur)?,
            "OBJ" => parse_obj(&mut cur)?,
            "CON" => parse_con(&mut cur)?,
            other => {
                return Err(ParseError::syntax(
                    *line_no,
                    1,
                    format!("unknown record `{other}` (expected PROBLEM, SET, PARAM, VAR, OBJ, or CON)"),
                ))
            }
        };
        records.push((rec, *span, *line_no));
    }

    assemble(records)
}

fn parse_set(cur: &mut Cursor) -> Result<Record, ParseError> {
    let name = cur.ident("set name")?;
    cur.expect(Tok::Assign, "`=`")?;
    cur.expect(Tok::LBrace, "`{`")?;
    let mut elements = Vec::new();
    if cur.peek() != Some(&Tok::RBrace) {
        loop {
            elements.push(cur.label("set element label")?);
            match cur.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => return Err(cur.err("expected `,` or `}`")),
            }
        }
    } else {
        cur.next();
    }
    cur.done()?;
    Ok(Record::Set(SetDecl { name: name.clone(), description: String::new() }, elements))
}

fn parse_param(cur: &mut Cursor) -> Result<Record, ParseError> {
    let name = cur.ident("parameter name")?;
    let mut index_sets = Vec::new();
    if cur.peek() == Some(&Tok::LBracket) {
        cur.next();
        loop {
            index_sets.push(cur.ident("index set name")?);
            match cur.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBracket) => break,
                _ => return Err(cur.err("expected `,` or `]`")),
            }
        }
    }
    cur.expect(Tok::Assign, "`=`")?;
    let mut values = Vec::new();
    if index_sets.is_empty() {
        let v = parse_signed_number(cur)?;
        values.push((Vec::new(), v));
    } else {
        cur.expect(Tok::LBrace, "`{`")?;
        loop {
            let key = if cur.peek() == Some(&Tok::LParen) {
                cur.next();
                let mut key = Vec::new();
                loop {
                    key.push(cur.label("index label")?);
                    match cur.next() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RParen) => break,
                        _ => return Err(cur.err("expected `,` or `)`")),
                    }
                }
                key
            } else {
                vec![cur.label("index label")?]
            };
            if key.len() != index_sets.len() {
                return Err(ParseError::ArityMismatch {
                    name: name.clone(),
                    line: cur.line,
                    expected: index_sets.len(),
                    got: key.len(),
                });
            }
            cur.expect(Tok::Colon, "`:`")?;
            let v = parse_signed_number(cur)?;
            values.push((key, v));
            match cur.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => return Err(cur.err("expected `,` or `}`")),
            }
        }
    }
    cur.done()?;
    let arity = index_sets.len();
    Ok(Record::Param(
        ParamDecl { name: name.clone(), index_sets, description: String::new() },
        ParamTable { name, arity, values },
    ))
}

fn parse_signed_number(cur: &mut Cursor) -> Result<Decimal, ParseError> {
    let neg = if cur.peek() == Some(&Tok::Minus) {
        cur.next();
        true
    } else {
        false
    };
    match cur.next() {
        Some(Tok::Num(d)) => Ok(if neg { d.neg() } else { d }),
        _ => {
            cur.pos = cur.pos.saturating_sub(1);
            Err(cur.err("expected a number"))
        }
    }
}

/// Binder list: `A, B` (anonymous: index name = set name) or
/// `i in A, j in B`, optionally followed by `where i != j` / `where i < j`.
fn parse_binders(cur: &mut Cursor) -> Result<(Vec<IndexBinder>, Option<IndexCond>), ParseError> {
    let mut binders = Vec::new();
    loop {
        let first = cur.ident("index or set name")?;
        if matches!(cur.peek(), Some(Tok::Ident(kw)) if kw == "in") {
            cur.next();
            let set = cur.ident("set name")?;
            binders.push(IndexBinder { index: first, set });
        } else {
            binders.push(IndexBinder { index: first.clone(), set: first });
        }
        match cur.peek() {
            Some(Tok::Comma) => {
                cur.next();
            }
            _ => break,
        }
    }
    let mut condition = None;
    if matches!(cur.peek(), Some(Tok::Ident(kw)) if kw == "where") {
        cur.next();
        let a = cur.ident("index name")?;
        let cond = match cur.next() {
            Some(Tok::Ne) => IndexCond::NotEqual(a, cur.ident("index name")?),
            Some(Tok::Lt) => IndexCond::LessThan(a, cur.ident("index name")?),
            _ => return Err(cur.err("expected `!=` or `<` in binder condition")),
        };
        condition = Some(cond);
    }
    Ok((binders, condition))
}

fn parse_var(cur: &mut Cursor) -> Result<Record, ParseError> {
    let name = cur.ident("variable name")?;
    let mut binders = Vec::new();
    let mut condition = None;
    if cur.peek() == Some(&Tok::LBracket) {
        cur.next();
        let (b, c) = parse_binders(cur)?;
        binders = b;
        condition = c;
        cur.expect(Tok::RBracket, "`]`")?;
    }
    let domain = match cur.ident("domain (binary, integer, continuous)")?.as_str() {
        "binary" => Domain::Binary,
        "integer" => Domain::Integer,
        "continuous" => Domain::Continuous,
        other => return Err(cur.err(format!("unknown domain `{other}`"))),
    };
    let mut lower = None;
    let mut upper = None;
    if cur.peek() == Some(&Tok::LBracket) {
        cur.next();
        if cur.peek() != Some(&Tok::Comma) {
            lower = Some(parse_expr(cur)?);
        }
        cur.expect(Tok::Comma, "`,` between bounds")?;
        if cur.peek() != Some(&Tok::RBracket) {
            upper = Some(parse_expr(cur)?);
        }
        cur.expect(Tok::RBracket, "`]`")?;
    }
    cur.done()?;
    Ok(Record::Var(VarDecl { name, binders, condition, domain, lower, upper }))
}

fn parse_obj(cur: &mut Cursor) -> Result<Record, ParseError> {
    let sense = match cur.ident("`min` or `max`")?.as_str() {
        "min" | "minimize" => Sense::Minimize,
        "max" | "maximize" => Sense::Maximize,
        other => return Err(cur.err(format!("unknown objective sense `{other}`"))),
    };
    let expr = parse_expr(cur)?;
    cur.done()?;
    Ok(Record::Obj(sense, expr))
}

fn parse_con(cur: &mut Cursor) -> Result<Record, ParseError> {
    let name = cur.ident("constraint name")?;
    let mut quantifier = None;
    if matches!(cur.peek(), Some(Tok::Ident(kw)) if kw == "forall") {
        cur.next();
        let (binders, condition) = parse_binders(cur)?;
        quantifier = Some(Quantifier { binders, condition });
    }
    cur.expect(Tok::Colon, "`:`")?;
    let lhs = parse_expr(cur)?;
    let op = match cur.next() {
        Some(Tok::Le) => CmpOp::Le,
        Some(Tok::Ge) => CmpOp::Ge,
        Some(Tok::Assign) => CmpOp::Eq,
        _ => {
            cur.pos = cur.pos.saturating_sub(1);
            return Err(cur.err("expected `<=`, `>=`, or `=`"));
        }
    };
    let rhs = parse_expr(cur)?;
    cur.done()?;
    Ok(Record::Con(SymbolicConstraint { name, quantifier, lhs, op, rhs }))
}

// Expression grammar: expr := term (('+'|'-') term)*; term := factor ('*' factor)*;
// factor := '-' factor | '(' expr ')' | num | sum(i in S, expr) | ident['[' idx ']'].
fn parse_expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut acc = parse_term(cur)?;
    loop {
        match cur.peek() {
            Some(Tok::Plus) => {
                cur.next();
                let rhs = parse_term(cur)?;
                acc = match acc {
                    Expr::Add(mut terms) => {
                        terms.push(rhs);
                        Expr::Add(terms)
                    }
                    other => Expr::Add(vec![other, rhs]),
                };
            }
            Some(Tok::Minus) => {
                cur.next();
                let rhs = parse_term(cur)?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            }
            _ => break,
        }
    }
    Ok(acc)
}

fn parse_term(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let mut acc = parse_factor(cur)?;
    loop {
        // Adjacent factors multiply implicitly: `2 x1` reads as `2 * x1`,
        // which keeps emit/parse a fixed point for coefficient rendering.
        let implicit = matches!(cur.peek(), Some(Tok::Ident(_)) | Some(Tok::Num(_)) | Some(Tok::LParen));
        if cur.peek() == Some(&Tok::Star) {
            cur.next();
        } else if !implicit {
            break;
        }
        let rhs = parse_factor(cur)?;
        acc = Expr::Mul(Box::new(acc), Box::new(rhs));
    }
    Ok(acc)
}

fn parse_factor(cur: &mut Cursor) -> Result<Expr, ParseError> {
    match cur.next() {
        Some(Tok::Minus) => Ok(Expr::Neg(Box::new(parse_factor(cur)?))),
        Some(Tok::LParen) => {
            let inner = parse_expr(cur)?;
            cur.expect(Tok::RParen, "`)`")?;
            Ok(inner)
        }
        Some(Tok::Num(d)) => Ok(Expr::Num(d)),
        Some(Tok::Ident(name)) if name == "sum" => {
            cur.expect(Tok::LParen, "`(`")?;
            let index = cur.ident("sum index")?;
            match cur.next() {
                Some(Tok::Ident(kw)) if kw == "in" => {}
                _ => return Err(cur.err("expected `in`")),
            }
            let set = cur.ident("set name")?;
            cur.expect(Tok::Comma, "`,`")?;
            let body = parse_expr(cur)?;
            cur.expect(Tok::RParen, "`)`")?;
            Ok(Expr::Sum { index, set, body: Box::new(body) })
        }
        Some(Tok::Ident(name)) => {
            let mut indices = Vec::new();
            if cur.peek() == Some(&Tok::LBracket) {
                cur.next();
                loop {
                    indices.push(cur.label("index")?);
                    match cur.next() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RBracket) => break,
                        _ => return Err(cur.err("expected `,` or `]`")),
                    }
                }
            }
            // Var/Param resolution happens in `assemble` once declarations
            // are known; idents start out as Param refs.
            Ok(Expr::Param { name, indices })
        }
        _ => {
            cur.pos = cur.pos.saturating_sub(1);
            Err(cur.err("expected an expression"))
        }
    }
}

fn resolve_idents(expr: Expr, vars: &[String]) -> Expr {
    match expr {
        Expr::Param { name, indices } => {
            if vars.iter().any(|v| *v == name) {
                Expr::Var { name, indices }
            } else {
                Expr::Param { name, indices }
            }
        }
        Expr::Num(_) | Expr::Var { .. } => expr,
        Expr::Sum { index, set, body } => Expr::Sum { index, set, body: Box::new(resolve_idents(*body, vars)) },
        Expr::Add(terms) => Expr::Add(terms.into_iter().map(|t| resolve_idents(t, vars)).collect()),
        Expr::Sub(a, b) => Expr::Sub(Box::new(resolve_idents(*a, vars)), Box::new(resolve_idents(*b, vars))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(resolve_idents(*a, vars)), Box::new(resolve_idents(*b, vars))),
        Expr::Neg(a) => Expr::Neg(Box::new(resolve_idents(*a, vars))),
    }
}

fn assemble(records: Vec<(Record, Span, usize)>) -> Result<ParseOutcome, ParseError> {
    let mut problem: Option<String> = None;
    let mut sets: Vec<SetDecl> = Vec::new();
    let mut set_elems: Vec<(String, Vec<String>)> = Vec::new();
    let mut params: Vec<ParamDecl> = Vec::new();
    let mut tables: Vec<ParamTable> = Vec::new();
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut objective: Option<(Sense, Expr)> = None;
    let mut constraints: Vec<SymbolicConstraint> = Vec::new();
    let mut spans: Vec<(String, Span)> = Vec::new();

    let mut declared: Vec<(String, usize)> = Vec::new();
    let declare = |name: &str, line: usize, declared: &mut Vec<(String, usize)>| -> Result<(), ParseError> {
        if declared.iter().any(|(n, _)| n == name) {
            return Err(ParseError::DuplicateDeclaration { name: name.to_string(), line });
        }
        declared.push((name.to_string(), line));
        Ok(())
    };

    for (rec, span, line) in records {
        match rec {
            Record::Problem(name) => {
                if problem.is_some() {
                    return Err(ParseError::DuplicateDeclaration { name: "PROBLEM".into(), line });
                }
                spans.push(("PROBLEM".into(), span));
                problem = Some(name);
            }
            Record::Set(decl, elems) => {
                declare(&decl.name, line, &mut declared)?;
                spans.push((decl.name.clone(), span));
                set_elems.push((decl.name.clone(), elems));
                sets.push(decl);
            }
            Record::Param(decl, table) => {
                declare(&decl.name, line, &mut declared)?;
                spans.push((decl.name.clone(), span));
                params.push(decl);
                tables.push(table);
            }
            Record::Var(decl) => {
                declare(&decl.name, line, &mut declared)?;
                spans.push((decl.name.clone(), span));
                vars.push(decl);
            }
            Record::Obj(sense, expr) => {
                if objective.is_some() {
                    return Err(ParseError::DuplicateDeclaration { name: "OBJ".into(), line });
                }
                spans.push(("objective".into(), span));
                objective = Some((sense, expr));
            }
            Record::Con(con) => {
                if constraints.iter().any(|c| c.name == con.name) {
                    return Err(ParseError::DuplicateDeclaration { name: con.name.clone(), line });
                }
                spans.push((con.name.clone(), span));
                constraints.push(con);
            }
        }
    }

    let (sense, obj_expr) = objective.ok_or(ParseError::MissingObjective)?;

    // Validate table keys against declared sets.
    for table in &tables {
        let decl = params.iter().find(|p| p.name == table.name).expect("by construction");
        for (key, _) in &table.values {
            for (pos, label) in key.iter().enumerate() {
                let set_name = &decl.index_sets[pos];
                if let Some((_, elems)) = set_elems.iter().find(|(n, _)| n == set_name) {
                    if !elems.contains(label) {
                        return Err(ParseError::Syntax {
                            line: 0,
                            col: 0,
                            message: format!(
                                "table `{}` keys label `{label}` not in set `{set_name}`",
                                table.name
                            ),
                        });
                    }
                }
            }
        }
    }

    let var_names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let obj_expr = resolve_idents(obj_expr, &var_names);
    let constraints: Vec<SymbolicConstraint> = constraints
        .into_iter()
        .map(|c| SymbolicConstraint {
            lhs: resolve_idents(c.lhs, &var_names),
            rhs: resolve_idents(c.rhs, &var_names),
            ..c
        })
        .collect();
    let vars: Vec<VarDecl> = vars
        .into_iter()
        .map(|v| VarDecl {
            lower: v.lower.map(|e| resolve_idents(e, &var_names)),
            upper: v.upper.map(|e| resolve_idents(e, &var_names)),
            ..v
        })
        .collect();

    let name = problem.unwrap_or_else(|| "model".to_string());
    let symbolic = !sets.is_empty()
        || !params.is_empty()
        || vars.iter().any(|v| !v.binders.is_empty())
        || constraints.iter().any(|c| c.quantifier.is_some());

    if symbolic {
        let formulation = SymbolicFormulation {
            name: name.clone(),
            sense,
            sets,
            parameters: params,
            variables: vars,
            objective: obj_expr,
            constraints,
        };
        let instance = DataInstance { problem: name, sets: set_elems, params: tables };
        return Ok(ParseOutcome {
            model: Parsed::Symbolic { formulation, instance },
            warnings: Vec::new(),
            spans,
        });
    }

    // Flat scalar document.
    let mut scalar_vars: Vec<ScalarVar> = Vec::new();
    let mut bound_decls: Vec<BoundDecl> = Vec::new();
    for (idx, v) in vars.iter().enumerate() {
        let canonical = canonical_var_name(&v.name);
        let role = name_prefix(&canonical);
        let const_bound = |e: &Option<Expr>| -> Result<Option<Decimal>, ParseError> {
            match e {
                None => Ok(None),
                Some(Expr::Num(d)) => Ok(Some(*d)),
                Some(Expr::Neg(inner)) => match inner.as_ref() {
                    Expr::Num(d) => Ok(Some(d.neg())),
                    _ => Err(ParseError::syntax(0, 0, format!("bound of `{}` must be a constant", v.name))),
                },
                Some(_) => Err(ParseError::syntax(0, 0, format!("bound of `{}` must be a constant", v.name))),
            }
        };
        match v.domain {
            Domain::Binary => {
                scalar_vars.push(ScalarVar::binary(canonical));
                bound_decls.push(BoundDecl { var: idx, form: BoundForm::Binary, role });
            }
            _ => {
                let lower = const_bound(&v.lower)?;
                let upper = const_bound(&v.upper)?;
                scalar_vars.push(ScalarVar { name: canonical, domain: v.domain, lower, upper });
                if v.domain == Domain::Integer {
                    bound_decls.push(BoundDecl { var: idx, form: BoundForm::Integer, role: role.clone() });
                }
                if let Some(lo) = lower {
                    bound_decls.push(BoundDecl { var: idx, form: BoundForm::Lower(lo), role: role.clone() });
                }
                if let Some(hi) = upper {
                    bound_decls.push(BoundDecl { var: idx, form: BoundForm::Upper(hi), role: role.clone() });
                }
            }
        }
    }

    let resolve = |n: &str| scalar_vars.iter().position(|v| v.name == canonical_var_name(n));
    let objective = linearize(&obj_expr, &resolve).map_err(|m| ParseError::syntax(0, 0, m))?;
    let mut scalar_cons = Vec::new();
    for c in &constraints {
        let lhs = linearize(&c.lhs, &resolve).map_err(|m| ParseError::syntax(0, 0, format!("{}: {m}", c.name)))?;
        let rhs = linearize(&c.rhs, &resolve).map_err(|m| ParseError::syntax(0, 0, format!("{}: {m}", c.name)))?;
        let (expr, rhs_const) = normalize_sides(lhs, rhs);
        scalar_cons.push(ScalarConstraint { name: c.name.clone(), lhs: expr, op: c.op, rhs: rhs_const });
    }

    let model = ScalarModel {
        name,
        sense,
        variables: scalar_vars,
        objective,
        constraints: scalar_cons,
    };
    Ok(ParseOutcome {
        model: Parsed::Scalar(ScalarParse { model, bound_decls }),
        warnings: Vec::new(),
        spans,
    })
}

/// Moves all variable terms to the left side and constants to the right,
/// keeping the comparison direction.
pub(crate) fn normalize_sides(lhs: LinearExpr, rhs: LinearExpr) -> (LinearExpr, Decimal) {
    let mut expr = lhs;
    for (v, c) in rhs.coeffs {
        expr.add_term(v, c.neg());
    }
    let rhs_const = rhs.constant.checked_sub(&expr.constant).expect("decimal overflow");
    expr.constant = Decimal::ZERO;
    (expr, rhs_const)
}

/// Flattens a symbolic-free expression into a linear form over scalar
/// variables. Fails on residual symbolic nodes and variable products.
pub(crate) fn linearize(
    expr: &Expr,
    resolve: &dyn Fn(&str) -> Option<usize>,
) -> Result<LinearExpr, String> {
    match expr {
        Expr::Num(d) => Ok(LinearExpr::constant_only(*d)),
        Expr::Var { name, indices } | Expr::Param { name, indices } => {
            if !indices.is_empty() {
                return Err(format!("indexed reference `{name}` in a flat document"));
            }
            match resolve(name) {
                Some(idx) => {
                    let mut e = LinearExpr::default();
                    e.add_term(idx, Decimal::ONE);
                    Ok(e)
                }
                None => Err(format!("undeclared variable `{name}`")),
            }
        }
        Expr::Sum { .. } => Err("sum(...) is not valid in a flat document".into()),
        Expr::Add(terms) => {
            let mut acc = LinearExpr::default();
            for t in terms {
                let e = linearize(t, resolve)?;
                acc.constant = acc.constant.checked_add(&e.constant).map_err(|e| e.to_string())?;
                for (v, c) in e.coeffs {
                    acc.add_term(v, c);
                }
            }
            Ok(acc)
        }
        Expr::Sub(a, b) => {
            let mut acc = linearize(a, resolve)?;
            let e = linearize(b, resolve)?;
            acc.constant = acc.constant.checked_sub(&e.constant).map_err(|e| e.to_string())?;
            for (v, c) in e.coeffs {
                acc.add_term(v, c.neg());
            }
            Ok(acc)
        }
        Expr::Mul(a, b) => {
            let ea = linearize(a, resolve)?;
            let eb = linearize(b, resolve)?;
            match (ea.is_empty(), eb.is_empty()) {
                (true, _) => scale_linear(&eb, ea.constant),
                (_, true) => scale_linear(&ea, eb.constant),
                (false, false) => Err("product of decision variables (nonlinear)".into()),
            }
        }
        Expr::Neg(a) => {
            let e = linearize(a, resolve)?;
            scale_linear(&e, Decimal::from_int(-1))
        }
    }
}

pub(crate) fn scale_linear(e: &LinearExpr, k: Decimal) -> Result<LinearExpr, String> {
    let mut out = LinearExpr::default();
    out.constant = e.constant.checked_mul(&k).map_err(|e| e.to_string())?;
    for (v, c) in &e.coeffs {
        out.add_term(*v, c.checked_mul(&k).map_err(|e| e.to_string())?);
    }
    Ok(out)
}
