//! Built-in configurations exercising every verb.

use linpencil::markov::thiele_step;
use linpencil::{DiscreteMeasure, C64};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiments::{
    run_biorthogonality, run_build, run_convergence, run_factorization_suite, run_subsequence,
};
use crate::records::Summary;
use crate::Result;

const TWO_ATOM: &str = r#"{
    "id": "two_atom",
    "measure": {"kind": "inline", "atoms": [-1, 1], "weights": [0.5, 0.5], "interval": [-1, 1]},
    "nodes": {"kind": "pairs", "pairs": [[0, 1]]},
    "grid": {"kind": "points", "points": [[3, 0], [0, 2]]},
    "orders": [1, 2, 3, 4],
    "factorization": {"points": [[3, 0], [0.5, 2]]}
}"#;

const TWENTY_ATOM: &str = r#"{
    "id": "twenty_atom",
    "measure": {"kind": "uniform", "atoms": 20, "interval": [-1, 1]},
    "nodes": {"kind": "ladder", "count": 24},
    "rows": 24,
    "grid": {"kind": "points", "points": [[2, 0], [2, 1], [-3, 0], [0, 5], [0, 0]]},
    "orders": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24],
    "subsequence": {"xi": [2, 1]},
    "factorization": {
        "points": [[2.5, 0], [0.5, 1.6]],
        "d0": [[0, 0], [0.7, 0], [1.5, -0.4]],
        "special_points": [[0, 0.3], [0.5, 0.2], [-0.7, 0.4], [0.9, -0.3]],
        "gram_size": 7
    }
}"#;

pub fn builtin_configs() -> Vec<ExperimentConfig> {
    [TWO_ATOM, TWENTY_ATOM]
        .iter()
        .map(|s| ExperimentConfig::from_json(s).expect("built-in config is valid"))
        .collect()
}

/// Summaries of every verb on the built-in configurations, plus the
/// two-atom Thiele step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTest {
    pub passed: bool,
    pub thiele_two_atom: [f64; 3],
    pub summaries: Vec<Summary>,
}

pub fn run_selftest() -> Result<SelfTest> {
    let mut summaries = Vec::new();
    for cfg in builtin_configs() {
        summaries.push(run_build(&cfg)?.summary);
        summaries.push(run_convergence(&cfg)?.summary);
        if cfg.subsequence.is_some() {
            summaries.push(run_subsequence(&cfg)?.summary);
        }
        summaries.push(run_factorization_suite(&cfg)?.summary);
        if cfg.id != "two_atom" {
            summaries.push(run_biorthogonality(&cfg)?.summary);
        }
    }
    let mu = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5], (-1.0, 1.0))?;
    let step = thiele_step(&mu, C64::new(0.0, 1.0))?;
    let b_off = match &step {
        linpencil::ThieleStep::Continue { b_off, .. } => *b_off,
        linpencil::ThieleStep::Terminated { .. } => 0.0,
    };
    let thiele = [step.b_diag(), step.a_diag(), b_off];
    let thiele_ok = (thiele[0] - 2.0).abs() < 1e-13
        && thiele[1].abs() < 1e-13
        && (thiele[2] - 1.0).abs() < 1e-13;
    Ok(SelfTest {
        passed: thiele_ok && summaries.iter().all(|s| s.passed),
        thiele_two_atom: thiele,
        summaries,
    })
}
