//! The five subcommands: validate, run, closed-form, certify, invariants.

use crate::config::{MonitorSpec, ResidualMode, Scenario};
use crate::error::CliError;
use crate::report::{CertificateReport, CheckReport, OrbitReport, RunReport};
use hyperham::exterior::{Coeff, Form, Rational};
use hyperham::fields::{
    hamiltonianity_certificate, hyperfield, linearize, odd_trace_table, Certificate,
    HamiltonianTriple, DEFAULT_CERTIFICATE_TOL,
};
use hyperham::integrate::{flow_jacobian, integrate, monitor_rho, IntegratorSettings, Trajectory};
use hyperham::invariants::{build_theta, flow_kernel_form, theta_invariance_form, FLOAT_MODE_TOL};
use hyperham::oscillator::{
    classify_orbit, great_circle_residual, harmonic_pair_energies, rationally_related, solve,
};
use hyperham::structures::DEFAULT_VALIDATION_TOL;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl RunOptions {
    fn effective_seed(&self, scenario: &Scenario) -> u64 {
        self.seed.unwrap_or(scenario.seed)
    }
}

/// Default drift tolerances for run monitors.
pub const RHO_DRIFT_TOL: f64 = 1e-8;
pub const DETJ_TOL: f64 = 1e-6;
pub const THETA_DRIFT_TOL: f64 = 1e-6;
pub const ENERGY_DRIFT_TOL: f64 = 1e-8;

/// Closed-form flows are isometries; their conservation residuals sit at
/// rounding level.
pub const CLOSED_FORM_RHO_TOL: f64 = 1e-12;
pub const CLOSED_FORM_ENERGY_TOL: f64 = 1e-10;
pub const GREAT_CIRCLE_TOL: f64 = 1e-9;
pub const CLOSED_ORBIT_RETURN_TOL: f64 = 1e-9;

fn finish(mut report: RunReport, started: Instant) -> RunReport {
    report.wall_time_secs = started.elapsed().as_secs_f64();
    report
}

/// `validate`: run the structure checks and the cross-section semantic
/// checks. Exit 2 when any check fails.
pub fn cmd_validate(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let seed = opts.effective_seed(scenario);
    let mut report = RunReport::new(
        "validate",
        seed,
        serde_json::to_value(&scenario.config).expect("config reserializes"),
    );
    let tol = opts.tol.unwrap_or(DEFAULT_VALIDATION_TOL);
    let validation = scenario.structure.validate(tol);
    for check in &validation.checks {
        report.push(CheckReport::new(
            format!("structure.{}", check.name),
            check.residual,
            tol,
        ));
    }

    // extended-form checks need a globally defined type sign
    let wants_theta_checks = scenario.config.monitors.contains(&MonitorSpec::Theta)
        || scenario.config.invariants.is_some();
    if wants_theta_checks && scenario.structure.type_sign().is_none() {
        return Err(CliError::validation(
            "mixed-sign structure: s undefined, theta-form checks unavailable",
        ));
    }

    if !report.pass {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.check.as_str())
            .collect();
        // still emit the full report before signalling failure
        emit(&finish(report.clone(), started), None, scenario, opts)?;
        return Err(CliError::validation(format!(
            "structure checks failed: {}",
            failed.join(", ")
        )));
    }
    let report = finish(report, started);
    emit(&report, None, scenario, opts)?;
    Ok(report)
}

/// `run`: integrate the hyperhamiltonian flow with the configured
/// monitors, write the trajectory CSV and summarize drifts.
pub fn cmd_run(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let seed = opts.effective_seed(scenario);
    let mut report = RunReport::new(
        "run",
        seed,
        serde_json::to_value(&scenario.config).expect("config reserializes"),
    );
    let settings = scenario.integrator_settings()?;
    let x0 = scenario.initial_state()?;
    let field = hyperfield(&scenario.structure, &scenario.triple)?;

    let monitors = &scenario.config.monitors;
    let needs_jacobian =
        monitors.contains(&MonitorSpec::DetJ) || monitors.contains(&MonitorSpec::Theta);

    let result = if needs_jacobian {
        flow_jacobian(&field, x0, &settings)
    } else {
        integrate(&field, x0, &settings)
    };
    let mut traj = match result {
        Ok(t) => t,
        Err(hyperham::Error::Integration {
            last_good_time,
            reason,
        }) => {
            flush_partial_csv(&field, x0, &settings, last_good_time, scenario, opts)?;
            return Err(CliError::runtime(format!(
                "integration failed at t = {last_good_time}: {reason}"
            )));
        }
        Err(e) => return Err(e.into()),
    };

    let tol_override = opts.tol;
    for monitor in monitors {
        match monitor {
            MonitorSpec::Rho => {
                monitor_rho(&mut traj, scenario.structure.n())?;
                for p in 1..=scenario.structure.n() {
                    let name = format!("rho{p}");
                    let drift = traj.monitor_drift(&name).unwrap_or(0.0);
                    report.push(CheckReport::new(
                        name,
                        drift,
                        tol_override.unwrap_or(RHO_DRIFT_TOL),
                    ));
                }
            }
            MonitorSpec::DetJ => {
                let jacobians = traj.jacobians.clone().expect("jacobians were propagated");
                let series: Vec<f64> = jacobians.iter().map(|j| j.determinant()).collect();
                let worst = series.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
                traj.add_monitor("detJ", series)?;
                report.push(CheckReport::new(
                    "detJ",
                    worst,
                    tol_override.unwrap_or(DETJ_TOL),
                ));
            }
            MonitorSpec::Theta => {
                let series = theta_transport_series(scenario, &traj)?;
                let first = series[0];
                let drift = series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
                traj.add_monitor("theta", series)?;
                report.push(CheckReport::new(
                    "theta",
                    drift,
                    tol_override.unwrap_or(THETA_DRIFT_TOL),
                ));
            }
            MonitorSpec::Energies => {
                let (ea, eb) = energy_series(&traj)?;
                let drift_a = drift_of(&ea);
                let drift_b = drift_of(&eb);
                traj.add_monitor("E_a", ea)?;
                traj.add_monitor("E_b", eb)?;
                report.push(CheckReport::new(
                    "E_a",
                    drift_a,
                    tol_override.unwrap_or(ENERGY_DRIFT_TOL),
                ));
                report.push(CheckReport::new(
                    "E_b",
                    drift_b,
                    tol_override.unwrap_or(ENERGY_DRIFT_TOL),
                ));
            }
        }
    }

    let report = finish(report, started);
    emit(&report, Some(&traj), scenario, opts)?;
    Ok(report)
}

/// `closed-form`: solve the quaternionic oscillator exactly, emit the
/// same CSV schema as `run` plus the orbit-classification block.
pub fn cmd_closed_form(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let seed = opts.effective_seed(scenario);
    let mut report = RunReport::new(
        "closed-form",
        seed,
        serde_json::to_value(&scenario.config).expect("config reserializes"),
    );
    let x0 = scenario.initial_state()?;
    let sol = solve(&scenario.structure, &scenario.triple, x0)?;

    // sample on the configured grid, or a default one
    let (step, t_end, stride) = match scenario.config.integrator.as_ref() {
        Some(_) => {
            let settings = scenario.integrator_settings()?;
            match settings.method {
                hyperham::integrate::Method::Rk4 { step } => {
                    (step, settings.t_end, settings.stride)
                }
                hyperham::integrate::Method::Rk45 { .. } => {
                    return Err(CliError::usage(
                        "integrator.method: closed-form sampling needs a fixed step (rk4)",
                    ))
                }
            }
        }
        None => (1e-2, 10.0, 1),
    };
    let mut times = Vec::new();
    let mut k = 0usize;
    loop {
        let t = step * (k * stride.max(1)) as f64;
        if t > t_end + 1e-12 {
            break;
        }
        times.push(t.min(t_end));
        k += 1;
    }
    if *times.last().unwrap_or(&0.0) < t_end {
        times.push(t_end);
    }
    let states = sol.sample(&times);
    let mut traj = Trajectory {
        times,
        states,
        jacobians: None,
        monitors: BTreeMap::new(),
    };

    for monitor in &scenario.config.monitors {
        match monitor {
            MonitorSpec::Rho => {
                monitor_rho(&mut traj, scenario.structure.n())?;
            }
            MonitorSpec::Energies => {
                let (ea, eb) = energy_series(&traj)?;
                traj.add_monitor("E_a", ea)?;
                traj.add_monitor("E_b", eb)?;
            }
            MonitorSpec::DetJ | MonitorSpec::Theta => {
                return Err(CliError::usage(
                    "monitors: detJ/theta apply to numerical runs, not closed-form sampling",
                ));
            }
        }
    }

    // conservation checks at closed-form accuracy
    monitor_rho(&mut traj, scenario.structure.n())?;
    for p in 1..=scenario.structure.n() {
        let drift = traj.monitor_drift(&format!("rho{p}")).unwrap_or(0.0);
        report.push(CheckReport::new(
            format!("rho{p}"),
            drift,
            opts.tol.unwrap_or(CLOSED_FORM_RHO_TOL),
        ));
    }
    if scenario.structure.dim() == 4 {
        let (ea, eb) = energy_series(&traj)?;
        report.push(CheckReport::new(
            "E_a",
            drift_of(&ea),
            opts.tol.unwrap_or(CLOSED_FORM_ENERGY_TOL),
        ));
        report.push(CheckReport::new(
            "E_b",
            drift_of(&eb),
            opts.tol.unwrap_or(CLOSED_FORM_ENERGY_TOL),
        ));
    }
    let circle = great_circle_residual(&sol, &traj.states)?;
    report.push(CheckReport::new(
        "great_circle",
        circle,
        opts.tol.unwrap_or(GREAT_CIRCLE_TOL),
    ));

    // orbit classification
    let (res_tol, q_max) = scenario.config.resonance_params();
    let class = classify_orbit(&sol, res_tol, q_max);
    if class.excited > 0 && class.classes == 1 {
        if let Some(t_return) = common_period(&sol.frequencies(), res_tol, q_max) {
            let x_t = sol.evaluate_at(t_return);
            let err: f64 = x_t
                .iter()
                .zip(x0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            report.push(CheckReport::new(
                "closed_orbit_return",
                err,
                opts.tol.unwrap_or(CLOSED_ORBIT_RETURN_TOL),
            ));
        }
    }
    report.orbit = Some(OrbitReport::from_class(
        &class,
        sol.frequencies(),
        sol.conserved_radii(),
    ));

    let report = finish(report, started);
    emit(&report, Some(&traj), scenario, opts)?;
    Ok(report)
}

/// `certify`: print the odd-trace table of the linearised field and the
/// non-Hamiltonianity verdict.
pub fn cmd_certify(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let seed = opts.effective_seed(scenario);
    let mut report = RunReport::new(
        "certify",
        seed,
        serde_json::to_value(&scenario.config).expect("config reserializes"),
    );
    if !matches!(scenario.triple, HamiltonianTriple::Quadratic(_)) {
        return Err(CliError::usage(
            "certify requires a quadratic Hamiltonian triple",
        ));
    }
    let a = linearize(&scenario.structure, &scenario.triple)?;
    let spec = scenario.config.certificate.as_ref();
    let k_max = spec
        .and_then(|c| c.k_max)
        .unwrap_or(2 * scenario.structure.dim());
    let tol = opts
        .tol
        .or(spec.and_then(|c| c.tol))
        .unwrap_or(DEFAULT_CERTIFICATE_TOL);
    let table = odd_trace_table(&a, k_max);
    let certificate = hamiltonianity_certificate(&a, k_max, tol);

    println!("  k   Tr(A^(2k+1))");
    for (k, trace) in &table {
        println!("{k:>3}   {trace:+.6e}");
    }
    match &certificate {
        Certificate::NonHamiltonian { k, trace } => println!(
            "verdict: non-Hamiltonian for every symplectic structure \
             (Tr(A^{}) = {trace})",
            2 * k + 1
        ),
        Certificate::Inconclusive => println!(
            "verdict: inconclusive up to k = {k_max} \
             (the odd-trace test is one-directional)"
        ),
    }
    report.certificate = Some(CertificateReport::new(table, &certificate));

    let report = finish(report, started);
    emit(&report, None, scenario, opts)?;
    Ok(report)
}

/// `invariants`: evaluate the flow-characterisation and conservation
/// residuals at seeded sample points, in exact-rational or float mode.
pub fn cmd_invariants(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let seed = opts.effective_seed(scenario);
    let mut report = RunReport::new(
        "invariants",
        seed,
        serde_json::to_value(&scenario.config).expect("config reserializes"),
    );
    if scenario.structure.n() > 2 {
        return Err(CliError::usage(format!(
            "invariants: form-level checks are capped at n <= 2, got n = {}",
            scenario.structure.n()
        )));
    }
    if scenario.structure.n() == 2 {
        eprintln!(
            "note: n = 2 form-level checks run on R^9 extended phase space; \
             coefficient counts grow combinatorially and rational mode may be slow"
        );
    }
    let spec = scenario
        .config
        .invariants
        .clone()
        .unwrap_or(crate::config::InvariantsSpec {
            points: 100,
            mode: ResidualMode::Rational,
        });
    let dim = scenario.structure.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(spec.points);
    for _ in 0..spec.points {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t: f64 = rng.gen_range(0.0..1.0);
        samples.push((x, t));
    }

    let (mode_name, tol) = match spec.mode {
        ResidualMode::Rational => ("rational", opts.tol.unwrap_or(0.0)),
        ResidualMode::Float => ("float", opts.tol.unwrap_or(FLOAT_MODE_TOL)),
    };

    let (t1, t2, dtheta) = match spec.mode {
        ResidualMode::Rational => residual_sweep::<Rational>(scenario, &samples)?,
        ResidualMode::Float => residual_sweep::<f64>(scenario, &samples)?,
    };
    report.push(
        CheckReport::new("flow_kernel", t1, tol)
            .with_mode(mode_name)
            .with_points(spec.points),
    );
    report.push(
        CheckReport::new("theta_invariance", t2, tol)
            .with_mode(mode_name)
            .with_points(spec.points),
    );
    report.push(CheckReport::new("dtheta_closed", dtheta, tol).with_mode(mode_name));

    let report = finish(report, started);
    emit(&report, None, scenario, opts)?;
    if !report.pass {
        return Err(CliError::runtime("invariant residuals exceed tolerance"));
    }
    Ok(report)
}

fn residual_sweep<C: Coeff>(
    scenario: &Scenario,
    samples: &[(Vec<f64>, f64)],
) -> Result<(f64, f64, f64), CliError> {
    let form1: Form<C> = flow_kernel_form(&scenario.structure, &scenario.triple)?;
    let form2: Form<C> = theta_invariance_form(&scenario.structure, &scenario.triple)?;
    let theta: Form<C> = build_theta(&scenario.structure, &scenario.triple)?;
    let dtheta = theta.exterior_derivative().max_abs_coeff();
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for (x, t) in samples {
        let mut ext: Vec<C> = x.iter().map(|v| C::from_f64(*v)).collect();
        let spatial = ext.clone();
        ext.push(C::from_f64(*t));
        worst1 = worst1.max(form1.max_abs_at(&ext));
        worst2 = worst2.max(form2.max_abs_at(&spatial));
    }
    Ok((worst1, worst2, dtheta))
}

/// Series of the conserved form evaluated on a flow-transported frame:
/// `Theta_{x(t)}(J e_1, …, J e_{dim-1})`, constant when `L_X Theta = 0`.
fn theta_transport_series(scenario: &Scenario, traj: &Trajectory) -> Result<Vec<f64>, CliError> {
    if scenario.structure.n() > 2 {
        return Err(CliError::usage(
            "monitors: theta transport is capped at n <= 2",
        ));
    }
    if scenario.structure.type_sign().is_none() {
        return Err(CliError::validation(
            "mixed-sign structure: s undefined, theta-form checks unavailable",
        ));
    }
    let theta: Form<f64> = build_theta(&scenario.structure, &scenario.triple)?;
    let jacobians = traj
        .jacobians
        .as_ref()
        .expect("theta monitor runs with jacobian propagation");
    let dim = scenario.structure.dim();
    let mut series = Vec::with_capacity(traj.len());
    for (state, jac) in traj.states.iter().zip(jacobians) {
        let vectors: Vec<Vec<f64>> = (0..dim - 1)
            .map(|i| jac.column(i).iter().copied().collect())
            .collect();
        series.push(theta.evaluate(state, &vectors)?);
    }
    Ok(series)
}

fn energy_series(traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut ea = Vec::with_capacity(traj.len());
    let mut eb = Vec::with_capacity(traj.len());
    for state in &traj.states {
        let (a, b) = harmonic_pair_energies(state)?;
        ea.push(a);
        eb.push(b);
    }
    Ok((ea, eb))
}

fn drift_of(series: &[f64]) -> f64 {
    let first = series[0];
    series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max)
}

/// Common period of rationally related frequencies:
/// `T = (2 pi / nu_1) * lcm(denominators of nu_p / nu_1)`.
fn common_period(frequencies: &[f64], tol: f64, q_max: u64) -> Option<f64> {
    let excited: Vec<f64> = frequencies.iter().copied().filter(|&nu| nu > 0.0).collect();
    let base = *excited.first()?;
    let mut l: u64 = 1;
    for &nu in &excited {
        let (_, b) = rationally_related(nu / base, tol, q_max)?;
        l = lcm(l, b);
    }
    Some(std::f64::consts::TAU / base * l as f64)
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// On integration failure, write the CSV of the successfully covered
/// prefix `[0, last_good_time]`; only complete rows are flushed.
fn flush_partial_csv(
    field: &hyperham::fields::VectorFieldEvaluator,
    x0: &[f64],
    settings: &IntegratorSettings,
    last_good_time: f64,
    scenario: &Scenario,
    opts: &RunOptions,
) -> Result<(), CliError> {
    let Some(csv_path) = scenario
        .config
        .outputs
        .as_ref()
        .and_then(|o| o.csv.as_ref())
    else {
        return Ok(());
    };
    if last_good_time <= 0.0 {
        return Ok(());
    }
    let mut partial = *settings;
    partial.t_end = last_good_time;
    if let Ok(traj) = integrate(field, x0, &partial) {
        write_csv_file(&traj, &opts.out_dir.join(csv_path))?;
    }
    Ok(())
}

fn write_csv_file(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    traj.write_csv(&mut file)?;
    Ok(())
}

/// Write the report (and trajectory CSV) to the configured output paths.
fn emit(
    report: &RunReport,
    traj: Option<&Trajectory>,
    scenario: &Scenario,
    opts: &RunOptions,
) -> Result<(), CliError> {
    let outputs = scenario.config.outputs.as_ref();
    if let (Some(traj), Some(csv)) = (traj, outputs.and_then(|o| o.csv.as_ref())) {
        write_csv_file(traj, &opts.out_dir.join(csv))?;
    }
    if let Some(path) = outputs.and_then(|o| o.report.as_ref()) {
        let full = opts.out_dir.join(path);
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(&full, report.to_json_pretty())?;
    }
    Ok(())
}
