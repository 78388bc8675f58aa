//! Scenario configuration: a single JSON file that fully specifies a run.
//!
//! Unknown keys are rejected everywhere, and semantic validation reports
//! the offending key path (e.g. `hamiltonian.D1: not symmetric`).

use crate::error::CliError;
use hyperham::exterior::Polynomial;
use hyperham::fields::{HamiltonianTriple, RadialTriple};
use hyperham::integrate::{IntegratorSettings, DEFAULT_ADAPTIVE_TOL};
use hyperham::oscillator::{DEFAULT_RESONANCE_QMAX, DEFAULT_RESONANCE_TOL};
use hyperham::structures::{QuaternionicStructure, Sign};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Declarative description of one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub structure: StructureSpec,
    pub hamiltonian: HamiltonianSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monitors: Vec<MonitorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub n: usize,
    /// Sign pattern, one `+`/`-` per block, e.g. `"+-"`.
    pub signs: String,
    #[serde(default = "default_metric")]
    pub metric: String,
}

fn default_metric() -> String {
    "euclidean".to_string()
}

/// One polynomial monomial: `coeff * prod_i v_i^{powers[i]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Quadratic {
        #[serde(rename = "D1")]
        d1: Vec<Vec<f64>>,
        #[serde(rename = "D2")]
        d2: Vec<Vec<f64>>,
        #[serde(rename = "D3")]
        d3: Vec<Vec<f64>>,
    },
    /// Radial profiles, polynomial in the block radii `rho_p`.
    Radial { terms: RadialTerms },
    /// Coordinate polynomials.
    Polynomial {
        #[serde(rename = "H1")]
        h1: Vec<TermSpec>,
        #[serde(rename = "H2")]
        h2: Vec<TermSpec>,
        #[serde(rename = "H3")]
        h3: Vec<TermSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialTerms {
    #[serde(rename = "H1")]
    pub h1: Vec<TermSpec>,
    #[serde(rename = "H2")]
    pub h2: Vec<TermSpec>,
    #[serde(rename = "H3")]
    pub h3: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub method: MethodSpec,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Rk4,
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorSpec {
    Rho,
    #[serde(rename = "detJ")]
    DetJ,
    Theta,
    Energies,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_mode")]
    pub mode: ResidualMode,
}

fn default_points() -> usize {
    100
}

fn default_mode() -> ResidualMode {
    ResidualMode::Rational
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualMode {
    Rational,
    Float,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSpec {
    #[serde(default = "default_resonance_tol")]
    pub tol: f64,
    #[serde(default = "default_resonance_qmax")]
    pub q_max: u64,
}

fn default_resonance_tol() -> f64 {
    DEFAULT_RESONANCE_TOL
}

fn default_resonance_qmax() -> u64 {
    DEFAULT_RESONANCE_QMAX
}

impl ScenarioConfig {
    /// Parse from JSON text; syntax errors carry line/column diagnostics.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::usage(format!("config parse error: {e}")))
    }

    pub fn resonance_params(&self) -> (f64, u64) {
        match &self.resonance {
            Some(r) => (r.tol, r.q_max),
            None => (DEFAULT_RESONANCE_TOL, DEFAULT_RESONANCE_QMAX),
        }
    }
}

/// A parsed and semantically validated scenario.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub structure: QuaternionicStructure,
    pub triple: HamiltonianTriple,
    pub seed: u64,
}

impl Scenario {
    /// Build core objects from the configuration, checking dimensional
    /// consistency across sections.
    pub fn build(config: ScenarioConfig) -> Result<Self, CliError> {
        let signs = Sign::parse_pattern(&config.structure.signs)
            .map_err(|e| CliError::usage(format!("structure.signs: {e}")))?;
        if signs.len() != config.structure.n {
            return Err(CliError::usage(format!(
                "structure.signs: {} signs for n = {}",
                signs.len(),
                config.structure.n
            )));
        }
        if config.structure.metric != "euclidean" {
            return Err(CliError::usage(format!(
                "structure.metric: only \"euclidean\" is supported in configs, got {:?}",
                config.structure.metric
            )));
        }
        let structure = QuaternionicStructure::standard(config.structure.n, &signs)
            .map_err(|e| CliError::usage(format!("structure: {e}")))?;
        let dim = structure.dim();

        let triple = build_triple(&config.hamiltonian, dim, structure.n())?;

        if let Some(x0) = &config.initial_state {
            if x0.len() != dim {
                return Err(CliError::usage(format!(
                    "initial_state: {} components for a structure on R^{dim}",
                    x0.len()
                )));
            }
            if let Some(bad) = x0.iter().find(|v| !v.is_finite()) {
                return Err(CliError::usage(format!(
                    "initial_state: non-finite component {bad}"
                )));
            }
        }
        if let Some(spec) = &config.integrator {
            integrator_settings(spec)?;
        }

        let seed = config.seed;
        Ok(Scenario {
            config,
            structure,
            triple,
            seed,
        })
    }

    pub fn integrator_settings(&self) -> Result<IntegratorSettings, CliError> {
        match &self.config.integrator {
            Some(spec) => integrator_settings(spec),
            None => Err(CliError::usage(
                "integrator: section required for this command",
            )),
        }
    }

    pub fn initial_state(&self) -> Result<&[f64], CliError> {
        self.config
            .initial_state
            .as_deref()
            .ok_or_else(|| CliError::usage("initial_state: required for this command"))
    }
}

fn integrator_settings(spec: &IntegratorSpec) -> Result<IntegratorSettings, CliError> {
    let settings = match spec.method {
        MethodSpec::Rk4 => {
            let step = spec
                .step
                .ok_or_else(|| CliError::usage("integrator.step: required for rk4"))?;
            IntegratorSettings::rk4(step, spec.t_end)
        }
        MethodSpec::Rk45 => IntegratorSettings::rk45(
            spec.abs_tol.unwrap_or(DEFAULT_ADAPTIVE_TOL),
            spec.rel_tol.unwrap_or(DEFAULT_ADAPTIVE_TOL),
            spec.t_end,
        ),
    }
    .map_err(|e| CliError::usage(format!("integrator: {e}")))?;
    settings
        .with_stride(spec.stride)
        .map_err(|e| CliError::usage(format!("integrator.stride: {e}")))
}

fn build_triple(
    spec: &HamiltonianSpec,
    dim: usize,
    n: usize,
) -> Result<HamiltonianTriple, CliError> {
    match spec {
        HamiltonianSpec::Quadratic { d1, d2, d3 } => {
            let mats: [DMatrix<f64>; 3] = [
                parse_matrix(d1, dim, "hamiltonian.D1")?,
                parse_matrix(d2, dim, "hamiltonian.D2")?,
                parse_matrix(d3, dim, "hamiltonian.D3")?,
            ];
            HamiltonianTriple::quadratic(mats)
                .map_err(|e| CliError::usage(format!("hamiltonian: {e}")))
        }
        HamiltonianSpec::Radial { terms } => {
            let p1 = parse_poly(&terms.h1, n, "hamiltonian.terms.H1")?;
            let p2 = parse_poly(&terms.h2, n, "hamiltonian.terms.H2")?;
            let p3 = parse_poly(&terms.h3, n, "hamiltonian.terms.H3")?;
            let radial = RadialTriple::from_polynomials([p1, p2, p3])
                .map_err(|e| CliError::usage(format!("hamiltonian.terms: {e}")))?;
            Ok(HamiltonianTriple::Radial(radial))
        }
        HamiltonianSpec::Polynomial { h1, h2, h3 } => {
            let p1 = parse_poly(h1, dim, "hamiltonian.H1")?;
            let p2 = parse_poly(h2, dim, "hamiltonian.H2")?;
            let p3 = parse_poly(h3, dim, "hamiltonian.H3")?;
            HamiltonianTriple::polynomial([p1, p2, p3])
                .map_err(|e| CliError::usage(format!("hamiltonian: {e}")))
        }
    }
}

fn parse_matrix(rows: &[Vec<f64>], dim: usize, path: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::usage(format!(
            "{path}: expected a {dim}x{dim} matrix"
        )));
    }
    let m = DMatrix::from_fn(dim, dim, |r, c| rows[r][c]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage(format!("{path}: non-finite entry")));
    }
    let sym = (&m - m.transpose()).abs().max();
    if sym > 0.0 {
        return Err(CliError::usage(format!(
            "{path}: not symmetric (|D - D^T| = {sym:.3e})"
        )));
    }
    Ok(m)
}

fn parse_poly(terms: &[TermSpec], nvars: usize, path: &str) -> Result<Polynomial<f64>, CliError> {
    let mut converted = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        if term.powers.len() != nvars {
            return Err(CliError::usage(format!(
                "{path}[{i}].powers: {} exponents, expected {nvars}",
                term.powers.len()
            )));
        }
        if !term.coeff.is_finite() {
            return Err(CliError::usage(format!(
                "{path}[{i}].coeff: non-finite coefficient"
            )));
        }
        let exps: Vec<u16> = term
            .powers
            .iter()
            .map(|&p| {
                u16::try_from(p).map_err(|_| {
                    CliError::usage(format!("{path}[{i}].powers: exponent {p} too large"))
                })
            })
            .collect::<Result<_, _>>()?;
        converted.push((term.coeff, exps));
    }
    Polynomial::from_terms(nvars, converted).map_err(|e| CliError::usage(format!("{path}: {e}")))
}
