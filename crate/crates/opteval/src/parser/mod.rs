//! Parsing of formulations from the strict OFIR interchange format and from
//! the lenient linear-math text style that language models emit.
//!
//! Both grammars are versioned `ofir/1`. `parse_ofir` handles full symbolic
//! documents (sets, parameter tables, quantified constraints) as well as the
//! flat scalar subset that [`crate::ir::emit`] produces; `parse_mathtext`
//! covers plain `minimize ... / subject to ...` text.

mod mathtext;
mod ofir;

pub use mathtext::parse_mathtext;
pub use ofir::parse_ofir;

pub(crate) mod ofir_support {
    pub(crate) use super::ofir::{normalize_sides, scale_linear};
}

use serde::{Deserialize, Serialize};

use crate::ir::{BoundDecl, DataInstance, ScalarModel, SymbolicFormulation};

/// Byte range into the source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

/// A parsed scalar candidate: the model plus the bound declarations as
/// written (redundant declarations survive here even when the merged
/// variable bounds already imply them).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarParse {
    pub model: ScalarModel,
    pub bound_decls: Vec<BoundDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Symbolic { formulation: SymbolicFormulation, instance: DataInstance },
    Scalar(ScalarParse),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub model: Parsed,
    pub warnings: Vec<(Span, String)>,
    /// Element name -> byte range of its source record.
    pub spans: Vec<(String, Span)>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}, col {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("line {line}: duplicate declaration of `{name}`")]
    DuplicateDeclaration { name: String, line: usize },
    #[error("line {line}: `{name}` declared over {expected} sets but table keys have arity {got}")]
    ArityMismatch { name: String, line: usize, expected: usize, got: usize },
    #[error("missing objective")]
    MissingObjective,
}

impl ParseError {
    pub(crate) fn syntax(line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line, col, message: message.into() }
    }
}

/// Lines of a document with their byte spans; `#` starts a comment.
pub(crate) fn logical_lines(text: &str) -> Vec<(usize, Span, &str)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (idx, raw) in text.split('\n').enumerate() {
        let len = raw.len();
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let trimmed = content.trim();
        if !trimmed.is_empty() {
            let lead = content.len() - content.trim_start().len();
            out.push((idx + 1, Span { start: offset + lead, end: offset + lead + trimmed.len() }, trimmed));
        }
        offset += len + 1;
    }
    out
}

/// Canonical variable spelling: letters and digits only. `x_1`, `x[1]`,
/// `x_{1}` and `x1` all normalize to `x1`.
pub(crate) fn canonical_var_name(raw: &str) -> String {
    raw.chars().filter(|c| c.is_ascii_alphanumeric()).collect()
}

/// Leading alphabetic run of a canonical variable name; used to group
/// bound declarations by role on the candidate side.
pub(crate) fn name_prefix(canonical: &str) -> String {
    let end = canonical.find(|c: char| c.is_ascii_digit()).unwrap_or(canonical.len());
    canonical[..end].to_string()
}

/// Matching-oriented normalization: canonical spelling, case-folded.
pub fn normalize_var_name(raw: &str) -> String {
    canonical_var_name(raw).to_ascii_lowercase()
}

/// Role a variable name belongs to when no symbolic role is known: the
/// leading alphabetic run of the normalized name.
pub fn role_prefix(raw: &str) -> String {
    name_prefix(&normalize_var_name(raw))
}
