//! Run reports: one JSON document per invocation, re-parseable against
//! this schema. The wall time is the only field that varies between
//! reruns at a fixed seed.

use hyperham::fields::Certificate;
use hyperham::oscillator::OrbitClass;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    /// Echo of the scenario configuration.
    pub scenario: serde_json::Value,
    /// Every enabled check passed.
    pub pass: bool,
    pub checks: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, max_residual: f64, tolerance: f64) -> Self {
        CheckReport {
            check: check.into(),
            mode: None,
            points: None,
            pass: max_residual <= tolerance,
            max_residual,
            tolerance,
        }
    }

    pub fn with_mode(mut self, mode: impl Into<String>) -> Self {
        self.mode = Some(mode.into());
        self
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = Some(points);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitReport {
    pub excited: usize,
    pub classes: usize,
    pub manifold: String,
    pub closure: String,
    /// Classification is "numerically rational" at these parameters.
    pub tol: f64,
    pub q_max: u64,
    pub frequencies: Vec<f64>,
    pub conserved_radii: Vec<f64>,
}

impl OrbitReport {
    pub fn from_class(class: &OrbitClass, frequencies: Vec<f64>, radii: Vec<f64>) -> Self {
        OrbitReport {
            excited: class.excited,
            classes: class.classes,
            manifold: class.manifold_descriptor(),
            closure: class.closure_descriptor(),
            tol: class.tol,
            q_max: class.q_max,
            frequencies,
            conserved_radii: radii,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateReport {
    /// `Tr(A^{2k+1})` for `k = 1..=k_max`.
    pub odd_traces: Vec<TraceRow>,
    /// `"non_hamiltonian"` or `"inconclusive"`. An inconclusive outcome
    /// does not establish Hamiltonianity; the trace test is
    /// one-directional.
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRow {
    pub k: usize,
    pub trace: f64,
}

impl CertificateReport {
    pub fn new(table: Vec<(usize, f64)>, certificate: &Certificate) -> Self {
        let odd_traces = table
            .into_iter()
            .map(|(k, trace)| TraceRow { k, trace })
            .collect();
        match certificate {
            Certificate::NonHamiltonian { k, trace } => CertificateReport {
                odd_traces,
                verdict: "non_hamiltonian".to_string(),
                k: Some(*k),
                trace: Some(*trace),
            },
            Certificate::Inconclusive => CertificateReport {
                odd_traces,
                verdict: "inconclusive".to_string(),
                k: None,
                trace: None,
            },
        }
    }
}

impl RunReport {
    pub fn new(command: &str, seed: u64, scenario: serde_json::Value) -> Self {
        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            scenario,
            pass: true,
            checks: Vec::new(),
            orbit: None,
            certificate: None,
            wall_time_secs: 0.0,
        }
    }

    pub fn push(&mut self, check: CheckReport) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}
