use std::time::{SystemTime, UNIX_EPOCH};

use approj::baselines::{BlockJacobiConfig, GmresConfig};
use approj::problems::ProblemSpec;
use approj::{SolveReport, SolverConfig};
use serde::{Deserialize, Serialize};

/// A solver together with its full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "config", rename_all = "lowercase")]
pub enum SolverSpec {
    Pap(SolverConfig),
    Apap(SolverConfig),
    Jacobi(BlockJacobiConfig),
    Gmres(GmresConfig),
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Pap(_) => "pap",
            SolverSpec::Apap(_) => "apap",
            SolverSpec::Jacobi(_) => "jacobi",
            SolverSpec::Gmres(_) => "gmres",
        }
    }
}

/// One solve: what was solved, how, and what came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    pub report: SolveReport,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunRecord {
    pub fn new(problem: ProblemSpec, solver: SolverSpec, report: SolveReport) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunRecord { problem, solver, report, timestamp }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approj::problems::Func1D;
    use approj::Termination;

    #[test]
    fn json_round_trip_is_identical() {
        let report = SolveReport {
            solution: vec![1.0, -0.1, 1e-300],
            outer_iters: 2,
            inner_iters_total: 120,
            sweeps_total: 360,
            residual_history: vec![2.9e-3, 7.5e-10],
            true_residual_history: vec![2.9e-3, 7.5e-10],
            error_history: None,
            wall_time: 0.012,
            termination: Termination::Breakdown("singular \"block\"".into()),
            dropped_columns: 0,
        };
        for solver in [
            SolverSpec::Apap(SolverConfig::default()),
            SolverSpec::Gmres(GmresConfig::default()),
            SolverSpec::Jacobi(BlockJacobiConfig::default()),
        ] {
            let rec =
                RunRecord::new(ProblemSpec::tridiag(-1.0, 2.0, -1.0, 100, Func1D::Parabolic), solver, report.clone());
            let text = serde_json::to_string_pretty(&rec).unwrap();
            let back: RunRecord = serde_json::from_str(&text).unwrap();
            assert_eq!(back, rec);
            assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        }
    }
}
