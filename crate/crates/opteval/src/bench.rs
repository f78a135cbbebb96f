//! The shipped benchmark suite: four classic problems (symbolic ground
//! truth, data instance, known optimum) plus the six prompt templates.
//! Assets are embedded from `assets/` so the library works without a
//! working directory, and the same files ship on disk as the interchange
//! surface.

use serde::{Deserialize, Serialize};

use crate::ground::{ground, GroundingReport};
use crate::ir::{DataInstance, ParamTable, SymbolicFormulation};
use crate::parser::{parse_ofir, Parsed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    Knapsack,
    AircraftAssignment,
    Diet,
    AircraftLanding,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [
        CaseId::Knapsack,
        CaseId::AircraftAssignment,
        CaseId::Diet,
        CaseId::AircraftLanding,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::Knapsack => "knapsack",
            CaseId::AircraftAssignment => "aircraft_assignment",
            CaseId::Diet => "diet",
            CaseId::AircraftLanding => "aircraft_landing",
        }
    }

    pub fn parse(s: &str) -> Option<CaseId> {
        CaseId::ALL.iter().copied().find(|c| c.as_str() == s)
    }
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown benchmark id `{0}`")]
    UnknownId(String),
    #[error("asset parse failure: {0}")]
    Parse(#[from] crate::parser::ParseError),
    #[error("asset grounding failure: {0}")]
    Ground(#[from] crate::ground::GroundError),
}

#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub id: CaseId,
    pub difficulty: Difficulty,
    pub gt: SymbolicFormulation,
    pub instances: Vec<DataInstance>,
    /// Known optimum per instance, from the shipped manifest.
    pub known_optimum: Vec<f64>,
    /// Natural-language problem statement used as `{PROBLEM}`.
    pub description: String,
}

impl BenchmarkCase {
    pub fn grounded(&self) -> Result<GroundingReport, crate::ground::GroundError> {
        ground(&self.gt, &self.instances[0])
    }
}

const KNAPSACK_OFIR: &str = include_str!("../../../assets/benchmarks/knapsack.ofir");
const AIRCRAFT_ASSIGNMENT_OFIR: &str =
    include_str!("../../../assets/benchmarks/aircraft_assignment.ofir");
const DIET_OFIR: &str = include_str!("../../../assets/benchmarks/diet.ofir");
const AIRCRAFT_LANDING_OFIR: &str =
    include_str!("../../../assets/benchmarks/aircraft_landing.ofir");

const KNAPSACK_PROBLEM: &str = include_str!("../../../assets/benchmarks/knapsack.problem.txt");
const AIRCRAFT_ASSIGNMENT_PROBLEM: &str =
    include_str!("../../../assets/benchmarks/aircraft_assignment.problem.txt");
const DIET_PROBLEM: &str = include_str!("../../../assets/benchmarks/diet.problem.txt");
const AIRCRAFT_LANDING_PROBLEM: &str =
    include_str!("../../../assets/benchmarks/aircraft_landing.problem.txt");

const FIG3_GT_OFIR: &str = include_str!("../../../assets/fig3/gt.ofir");
const FIG3_CANDIDATE: &str = include_str!("../../../assets/fig3/candidate.txt");

fn case_assets(id: CaseId) -> (&'static str, &'static str, Difficulty, f64) {
    match id {
        CaseId::Knapsack => (KNAPSACK_OFIR, KNAPSACK_PROBLEM, Difficulty::Easy, 220.0),
        CaseId::AircraftAssignment => (
            AIRCRAFT_ASSIGNMENT_OFIR,
            AIRCRAFT_ASSIGNMENT_PROBLEM,
            Difficulty::Medium,
            700.0,
        ),
        CaseId::Diet => (DIET_OFIR, DIET_PROBLEM, Difficulty::Medium, 31.0 / 3.0),
        CaseId::AircraftLanding => (
            AIRCRAFT_LANDING_OFIR,
            AIRCRAFT_LANDING_PROBLEM,
            Difficulty::Hard,
            0.0,
        ),
    }
}

fn parse_symbolic(text: &str) -> Result<(SymbolicFormulation, DataInstance), BenchError> {
    match parse_ofir(text)?.model {
        Parsed::Symbolic { formulation, instance } => Ok((formulation, instance)),
        Parsed::Scalar(_) => Err(BenchError::UnknownId("expected a symbolic document".into())),
    }
}

/// Big-M fallback for the landing problem: `(max L - min E) + max S`,
/// computable whenever the instance carries those tables. Used when an
/// instance does not pin `M` explicitly.
pub fn derived_big_m(d: &DataInstance) -> Option<f64> {
    let values = |name: &str| -> Option<Vec<f64>> {
        Some(d.param(name)?.values.iter().map(|(_, v)| v.to_f64()).collect())
    };
    let l = values("L")?;
    let e = values("E")?;
    let s = values("S")?;
    let max = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |xs: &[f64]| xs.iter().copied().fold(f64::INFINITY, f64::min);
    Some((max(&l) - min(&e)) + max(&s))
}

/// Loads one benchmark case from the embedded assets.
pub fn load_case(id: CaseId) -> Result<BenchmarkCase, BenchError> {
    let (ofir, problem, difficulty, optimum) = case_assets(id);
    let (gt, mut instance) = parse_symbolic(ofir)?;
    if id == CaseId::AircraftLanding && instance.param("M").is_none() {
        if let Some(m) = derived_big_m(&instance) {
            instance.params.push(ParamTable {
                name: "M".into(),
                arity: 0,
                values: vec![(vec![], crate::decimal::Decimal::from_int(m as i64))],
            });
        }
    }
    Ok(BenchmarkCase {
        id,
        difficulty,
        gt,
        instances: vec![instance],
        known_optimum: vec![optimum],
        description: problem.trim_end().to_string(),
    })
}

/// The shipped scoring fixture pair: a four-family aircraft-assignment
/// ground truth and the candidate that keeps availability and demand, adds
/// non-negativity, and misses capacity and the binary domain.
pub fn fig3_gt() -> Result<(SymbolicFormulation, DataInstance), BenchError> {
    parse_symbolic(FIG3_GT_OFIR)
}

pub fn fig3_candidate_text() -> &'static str {
    FIG3_CANDIDATE
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl PromptId {
    pub const ALL: [PromptId; 6] = [
        PromptId::P1,
        PromptId::P2,
        PromptId::P3,
        PromptId::P4,
        PromptId::P5,
        PromptId::P6,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptId::P1 => "P1",
            PromptId::P2 => "P2",
            PromptId::P3 => "P3",
            PromptId::P4 => "P4",
            PromptId::P5 => "P5",
            PromptId::P6 => "P6",
        }
    }

    pub fn parse(s: &str) -> Option<PromptId> {
        PromptId::ALL.iter().copied().find(|p| p.as_str() == s)
    }
}

impl std::fmt::Display for PromptId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub id: PromptId,
    pub title: &'static str,
    /// Message bodies; `{PROBLEM}` is substituted at render time. More than
    /// one step means a sequential multi-message protocol.
    pub steps: Vec<String>,
}

impl PromptTemplate {
    pub fn multi_step(&self) -> bool {
        self.steps.len() > 1
    }
}

const STEP_DELIMITER: &str = "---STEP---";

pub fn load_prompt(id: PromptId) -> PromptTemplate {
    let (title, raw) = match id {
        PromptId::P1 => ("Basic Prompt", include_str!("../../../assets/prompts/P1.txt")),
        PromptId::P2 => ("Act-As-Expert", include_str!("../../../assets/prompts/P2.txt")),
        PromptId::P3 => ("Chain-of-Thought", include_str!("../../../assets/prompts/P3.txt")),
        PromptId::P4 => ("Program-of-Thought", include_str!("../../../assets/prompts/P4.txt")),
        PromptId::P5 => ("Self-Consistency", include_str!("../../../assets/prompts/P5.txt")),
        PromptId::P6 => ("Modular Prompting Steps", include_str!("../../../assets/prompts/P6.txt")),
    };
    let steps = raw
        .split(STEP_DELIMITER)
        .map(|s| s.trim_matches('\n').to_string())
        .collect();
    PromptTemplate { id, title, steps }
}

/// Renders the template against a case: one message per step, with
/// `{PROBLEM}` replaced by the case's problem statement.
pub fn render_prompt(template: &PromptTemplate, case: &BenchmarkCase) -> Vec<String> {
    template
        .steps
        .iter()
        .map(|s| s.replace("{PROBLEM}", &case.description))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::{solve_milp, SolveStatus};

    #[test]
    fn all_cases_load_and_validate() {
        for id in CaseId::ALL {
            let case = load_case(id).unwrap();
            assert!(crate::ir::validate(&case.gt).is_empty(), "{id}");
            let report = case.grounded().unwrap();
            assert!(!report.model.variables.is_empty());
        }
    }

    #[test]
    fn difficulty_mapping() {
        assert_eq!(load_case(CaseId::Knapsack).unwrap().difficulty, Difficulty::Easy);
        assert_eq!(load_case(CaseId::AircraftAssignment).unwrap().difficulty, Difficulty::Medium);
        assert_eq!(load_case(CaseId::Diet).unwrap().difficulty, Difficulty::Medium);
        assert_eq!(load_case(CaseId::AircraftLanding).unwrap().difficulty, Difficulty::Hard);
    }

    #[test]
    fn optimum_gate_all_cases() {
        for id in CaseId::ALL {
            let case = load_case(id).unwrap();
            let model = case.grounded().unwrap().model;
            let res = solve_milp(&model).unwrap();
            assert_eq!(res.status, SolveStatus::Optimal, "{id}");
            let got = res.objective.unwrap();
            let want = case.known_optimum[0];
            assert!(
                (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
                "{id}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn landing_optimum_lands_at_targets() {
        let case = load_case(CaseId::AircraftLanding).unwrap();
        let model = case.grounded().unwrap().model;
        let res = solve_milp(&model).unwrap();
        let a = res.assignment.unwrap();
        assert!((a["x1"] - 4.0).abs() < 1e-6);
        assert!((a["x2"] - 8.0).abs() < 1e-6);
        assert!((a["x3"] - 14.0).abs() < 1e-6);
    }

    #[test]
    fn big_m_formula_matches_pinned_value() {
        let case = load_case(CaseId::AircraftLanding).unwrap();
        let instance = &case.instances[0];
        let derived = derived_big_m(instance).unwrap();
        assert_eq!(derived, 18.0);
        let pinned = instance.param("M").unwrap().get(&[]).unwrap().to_f64();
        assert_eq!(pinned, derived);
    }

    #[test]
    fn fig3_fixture_parses() {
        let (f, d) = fig3_gt().unwrap();
        assert!(crate::ir::validate(&f).is_empty());
        let model = crate::ground::ground(&f, &d).unwrap().model;
        let res = solve_milp(&model).unwrap();
        assert!((res.objective.unwrap() - 700.0).abs() < 1e-6);
        assert!(fig3_candidate_text().contains("x11"));
    }

    #[test]
    fn prompt_rendering_examples() {
        let knapsack = load_case(CaseId::Knapsack).unwrap();
        let diet = load_case(CaseId::Diet).unwrap();

        let p1 = render_prompt(&load_prompt(PromptId::P1), &knapsack);
        assert_eq!(p1.len(), 1);
        assert!(p1[0].contains("Solve the above optimization problem"));
        assert!(p1[0].contains("knapsack capacity is 50"));

        let p6 = render_prompt(&load_prompt(PromptId::P6), &diet);
        assert_eq!(p6.len(), 4);
        assert!(p6[0].contains("ONLY the decision variables"));
        assert!(p6[3].contains("Combine the decision variables"));
        // The problem statement appears in the first step only.
        assert!(p6[0].contains("total cost is minimized"));
        assert!(!p6[3].contains("total cost is minimized"));

        let p3 = render_prompt(&load_prompt(PromptId::P3), &knapsack);
        for step in [
            "Identify the objective",
            "Define the decision variables",
            "Formulate the objective function",
            "List the constraints",
        ] {
            assert!(p3[0].contains(step), "missing {step}");
        }
    }

    #[test]
    fn rendered_steps_are_nonempty() {
        for case_id in CaseId::ALL {
            let case = load_case(case_id).unwrap();
            for pid in PromptId::ALL {
                for step in render_prompt(&load_prompt(pid), &case) {
                    assert!(!step.trim().is_empty());
                }
            }
        }
    }

    #[test]
    fn format_instruction_is_delimited() {
        // The appended output-format note sits after a `----` line so the
        // verbatim prompt body can be checked independently of it.
        for pid in PromptId::ALL {
            let t = load_prompt(pid);
            let last = t.steps.last().unwrap();
            assert!(last.contains("\n----\n"), "{pid}");
            let body = last.split("\n----\n").next().unwrap();
            assert!(!body.contains("Output format"));
        }
    }

    #[test]
    fn multi_step_flag() {
        assert!(!load_prompt(PromptId::P1).multi_step());
        assert!(load_prompt(PromptId::P6).multi_step());
    }
}
