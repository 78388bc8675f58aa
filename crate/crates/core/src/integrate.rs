//! Numerical integration of hyperhamiltonian flows.
//!
//! The default integrator is fixed-step RK4: the systems here have
//! closed-form references, so the integrator is a cross-check instrument
//! and fixed steps keep convergence studies clean. An adaptive
//! Dormand-Prince RK45 with PI step control is available for stiff
//! user-supplied Hamiltonians. No structure-preserving scheme is claimed;
//! volume (`det J = 1`) and block-radius conservation are monitored a
//! posteriori, with the flow-map Jacobian propagated by the variational
//! equation `dJ/dt = Df(x(t)) J`.

use crate::error::{Error, Result};
use crate::fields::{block_radii, VectorFieldEvaluator};
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::io::Write;

/// Default adaptive tolerances.
pub const DEFAULT_ADAPTIVE_TOL: f64 = 1e-10;

/// Stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classic fixed-step fourth-order Runge-Kutta.
    Rk4 { step: f64 },
    /// Dormand-Prince 5(4) with PI step-size control.
    Rk45 { abs_tol: f64, rel_tol: f64 },
}

/// Integration settings: scheme, horizon and output stride (every
/// `stride`-th accepted step is recorded; the endpoints always are).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub method: Method,
    pub t_end: f64,
    pub stride: usize,
}

impl IntegratorSettings {
    pub fn rk4(step: f64, t_end: f64) -> Result<Self> {
        let s = IntegratorSettings {
            method: Method::Rk4 { step },
            t_end,
            stride: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn rk45(abs_tol: f64, rel_tol: f64, t_end: f64) -> Result<Self> {
        let s = IntegratorSettings {
            method: Method::Rk45 { abs_tol, rel_tol },
            t_end,
            stride: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::structural("sample stride must be positive"));
        }
        self.stride = stride;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            Method::Rk4 { step } => {
                if !step.is_finite() || step <= 0.0 {
                    return Err(Error::structural(format!(
                        "RK4 step must be positive and finite, got {step}"
                    )));
                }
            }
            Method::Rk45 { abs_tol, rel_tol } => {
                if !(abs_tol.is_finite() && abs_tol > 0.0 && rel_tol.is_finite() && rel_tol > 0.0) {
                    return Err(Error::structural(format!(
                        "RK45 tolerances must be positive, got abs {abs_tol}, rel {rel_tol}"
                    )));
                }
            }
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::structural(format!(
                "t_end must be non-negative and finite, got {}",
                self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(Error::structural("sample stride must be positive"));
        }
        Ok(())
    }
}

/// Sampled flow of a vector field: strictly increasing times, one state
/// per time, optional flow-map Jacobians, and named monitor series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub jacobians: Option<Vec<DMatrix<f64>>>,
    pub monitors: BTreeMap<String, Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map(|s| s.len()).unwrap_or(0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }

    /// Attach a monitor series; its length must match the time grid.
    pub fn add_monitor(&mut self, name: impl Into<String>, series: Vec<f64>) -> Result<()> {
        if series.len() != self.times.len() {
            return Err(Error::structural(format!(
                "monitor series length {} does not match {} samples",
                series.len(),
                self.times.len()
            )));
        }
        self.monitors.insert(name.into(), series);
        Ok(())
    }

    /// Largest deviation of a monitor from its initial value.
    pub fn monitor_drift(&self, name: &str) -> Option<f64> {
        let series = self.monitors.get(name)?;
        let first = *series.first()?;
        Some(series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max))
    }

    /// Write the CSV schema `t,x1,…,x{dim}[,monitor columns]`, one row per
    /// sample, full double precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.dim();
        write!(w, "t")?;
        for i in 1..=dim {
            write!(w, ",x{i}")?;
        }
        for name in self.monitors.keys() {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (row, (t, state)) in self.times.iter().zip(&self.states).enumerate() {
            write!(w, "{}", fmt_f64(*t))?;
            for v in state {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            for series in self.monitors.values() {
                write!(w, ",{}", fmt_f64(series[row]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

const SAME_TIME_EPS: f64 = 1e-12;

/// Integrate `dx/dt = f(x)` from `x0` over `[0, t_end]`.
///
/// Deterministic: identical settings and inputs produce bit-identical
/// trajectories on one platform.
pub fn integrate(
    field: &VectorFieldEvaluator,
    x0: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    if x0.len() != field.dim() {
        return Err(Error::structural(format!(
            "initial state has {} components for a field on R^{}",
            x0.len(),
            field.dim()
        )));
    }
    let mut driver = StateOnly { field };
    run(&mut driver, x0.to_vec(), settings)
}

/// Integrate the state together with the variational equation
/// `dJ/dt = Df(x(t)) J`, `J(0) = I`, recording the flow-map Jacobian at
/// every sample.
pub fn flow_jacobian(
    field: &VectorFieldEvaluator,
    x0: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    let dim = field.dim();
    if x0.len() != dim {
        return Err(Error::structural(format!(
            "initial state has {} components for a field on R^{}",
            x0.len(),
            dim
        )));
    }
    let mut augmented = x0.to_vec();
    augmented.extend(DMatrix::<f64>::identity(dim, dim).iter().copied());
    let mut driver = WithJacobian { field, dim };
    let mut traj = run(&mut driver, augmented, settings)?;

    let mut jacobians = Vec::with_capacity(traj.states.len());
    for aug in &mut traj.states {
        let j = DMatrix::from_column_slice(dim, dim, &aug[dim..]);
        jacobians.push(j);
        aug.truncate(dim);
    }
    traj.jacobians = Some(jacobians);
    Ok(traj)
}

/// Append the per-block radius series `rho_p(t) = |xi_p(t)|^2 / 2` as
/// monitors `rho1..rho{n}` and return them.
pub fn monitor_rho(traj: &mut Trajectory, n: usize) -> Result<Vec<Vec<f64>>> {
    if traj.dim() != 4 * n {
        return Err(Error::structural(format!(
            "trajectory on R^{} cannot be split into {n} four-dimensional blocks",
            traj.dim()
        )));
    }
    let mut series = vec![Vec::with_capacity(traj.len()); n];
    for state in &traj.states {
        for (p, rho) in block_radii(state, n).into_iter().enumerate() {
            series[p].push(rho);
        }
    }
    for (p, s) in series.iter().enumerate() {
        traj.add_monitor(format!("rho{}", p + 1), s.clone())?;
    }
    Ok(series)
}

/// Right-hand side of the (possibly augmented) first-order system.
trait Rhs {
    fn eval(&mut self, y: &[f64]) -> Result<Vec<f64>>;
}

struct StateOnly<'a> {
    field: &'a VectorFieldEvaluator,
}

impl Rhs for StateOnly<'_> {
    fn eval(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        self.field.eval(y)
    }
}

struct WithJacobian<'a> {
    field: &'a VectorFieldEvaluator,
    dim: usize,
}

impl Rhs for WithJacobian<'_> {
    fn eval(&mut self, y: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dim;
        let x = &y[..dim];
        let mut out = self.field.eval(x)?;
        let df = self.field.jacobian(x)?;
        let j = DMatrix::from_column_slice(dim, dim, &y[dim..]);
        let dj = df * j;
        out.extend(dj.iter().copied());
        Ok(out)
    }
}

fn run<R: Rhs>(rhs: &mut R, y0: Vec<f64>, settings: &IntegratorSettings) -> Result<Trajectory> {
    match settings.method {
        Method::Rk4 { step } => run_rk4(rhs, y0, step, settings),
        Method::Rk45 { abs_tol, rel_tol } => run_rk45(rhs, y0, abs_tol, rel_tol, settings),
    }
}

/// Map a non-finite evaluation inside a step to an integration error
/// carrying the last time the state was still good.
fn at_time<T>(result: Result<T>, t: f64) -> Result<T> {
    match result {
        Err(Error::NonFinite(reason)) => Err(Error::Integration {
            last_good_time: t,
            reason,
        }),
        other => other,
    }
}

fn run_rk4<R: Rhs>(
    rhs: &mut R,
    y0: Vec<f64>,
    step: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0.clone()],
        jacobians: None,
        monitors: BTreeMap::new(),
    };
    let mut t = 0.0;
    let mut y = y0;
    let mut accepted: usize = 0;
    while t < settings.t_end - SAME_TIME_EPS {
        let h = step.min(settings.t_end - t);
        let next = at_time(rk4_step(rhs, &y, h), t)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration {
                last_good_time: t,
                reason: "state became non-finite".to_string(),
            });
        }
        y = next;
        t += h;
        accepted += 1;
        let at_end = t >= settings.t_end - SAME_TIME_EPS;
        if accepted.is_multiple_of(settings.stride) || at_end {
            traj.times.push(if at_end { settings.t_end } else { t });
            traj.states.push(y.clone());
        }
    }
    Ok(traj)
}

fn rk4_step<R: Rhs>(rhs: &mut R, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let k1 = rhs.eval(y)?;
    let k2 = rhs.eval(&combine(y, &[(h / 2.0, &k1)]))?;
    let k3 = rhs.eval(&combine(y, &[(h / 2.0, &k2)]))?;
    let k4 = rhs.eval(&combine(y, &[(h, &k3)]))?;
    let mut out = y.to_vec();
    for i in 0..y.len() {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn combine(y: &[f64], terms: &[(f64, &Vec<f64>)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for i in 0..out.len() {
            out[i] += c * k[i];
        }
    }
    out
}

// Dormand-Prince 5(4) tableau (stage times omitted: fields are autonomous).
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn run_rk45<R: Rhs>(
    rhs: &mut R,
    y0: Vec<f64>,
    abs_tol: f64,
    rel_tol: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![y0.clone()],
        jacobians: None,
        monitors: BTreeMap::new(),
    };
    let t_end = settings.t_end;
    if t_end == 0.0 {
        return Ok(traj);
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end / 100.0).clamp(1e-6, 1e-2);
    // PI controller state (Gustafsson-style exponents for order 5)
    let mut err_prev: f64 = 1.0;
    const SAFETY: f64 = 0.9;
    const FAC_MIN: f64 = 0.2;
    const FAC_MAX: f64 = 5.0;
    const ALPHA: f64 = 0.7 / 5.0;
    const BETA: f64 = 0.4 / 5.0;
    let mut accepted: usize = 0;

    while t < t_end - SAME_TIME_EPS {
        let h_floor = 1e-14 * t.abs().max(1.0);
        h = h.min(t_end - t);
        if h < h_floor {
            return Err(Error::Integration {
                last_good_time: t,
                reason: format!("step size underflow (h = {h:.3e})"),
            });
        }

        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(at_time(rhs.eval(&y), t)?);
        for stage in 1..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[stage][j];
                if a != 0.0 {
                    for i in 0..arg.len() {
                        arg[i] += h * a * kj[i];
                    }
                }
            }
            k.push(at_time(rhs.eval(&arg), t)?);
        }

        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (j, kj) in k.iter().enumerate() {
            for i in 0..y.len() {
                y5[i] += h * DP_B5[j] * kj[i];
                y4[i] += h * DP_B4[j] * kj[i];
            }
        }

        // scaled RMS error estimate
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / scale;
            err += e * e;
        }
        err = (err / y.len() as f64).sqrt().max(1e-16);

        if err <= 1.0 {
            t += h;
            y = y5;
            accepted += 1;
            let at_end = t >= t_end - SAME_TIME_EPS;
            if accepted.is_multiple_of(settings.stride) || at_end {
                traj.times.push(if at_end { t_end } else { t });
                traj.states.push(y.clone());
            }
            let fac = SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA);
            h *= fac.clamp(FAC_MIN, FAC_MAX);
            err_prev = err;
        } else {
            let fac = SAFETY * err.powf(-ALPHA);
            h *= fac.clamp(FAC_MIN, 1.0);
            if h < h_floor {
                return Err(Error::Integration {
                    last_good_time: t,
                    reason: format!("step rejection floor reached (h = {h:.3e}, err = {err:.3e})"),
                });
            }
        }
    }
    Ok(traj)
}

/// Least-squares slope of log(error) against log(h): the measured
/// convergence order of an integrator.
pub fn measured_order(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len());
    let n = steps.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
