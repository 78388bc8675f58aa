//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured runtime.
//!
//! Numeric tolerances are always asserted. The stated runtime limits are
//! asserted in release builds only (debug builds print the measured time
//! but skip the bound); run with
//! `cargo test --release -p hyperham-cli --test acceptance -- --test-threads=1 --nocapture`.

use hyperham::exterior::{Form, Polynomial, Rational};
use hyperham::fields::{
    hamiltonianity_certificate, hyperfield, linearize, non_hamiltonian_example_triple, Certificate,
    HamiltonianTriple, RadialTriple, DEFAULT_CERTIFICATE_TOL,
};
use hyperham::integrate::{
    flow_jacobian, integrate, measured_order, monitor_rho, IntegratorSettings,
};
use hyperham::invariants::{
    bracket, build_theta, field_to_form, flow_kernel_form, theta_invariance_form, PolyField,
};
use hyperham::oscillator::{
    classify_orbit, great_circle_residual, harmonic_pair_energies, solve, DEFAULT_RESONANCE_QMAX,
    DEFAULT_RESONANCE_TOL,
};
use hyperham::structures::{
    classify_unimodular, classify_unimodular_brute_force, h_matrices, k_matrices,
    QuaternionicStructure, Sign,
};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn criterion(number: usize, label: &str, limit_secs: f64, body: impl FnOnce()) {
    let started = Instant::now();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body));
    let elapsed = started.elapsed().as_secs_f64();
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!(
        "acceptance criterion {number} ({label}): {verdict} in {elapsed:.3} s (limit {limit_secs} s)"
    );
    if let Err(panic) = outcome {
        std::panic::resume_unwind(panic);
    }
    if !cfg!(debug_assertions) {
        assert!(
            elapsed < limit_secs,
            "criterion {number} exceeded its runtime limit: {elapsed:.3} s >= {limit_secs} s"
        );
    }
}

fn all_sign_patterns(n: usize) -> Vec<Vec<Sign>> {
    (0..(1usize << n))
        .map(|bits| {
            (0..n)
                .map(|p| {
                    if bits & (1 << p) == 0 {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn criterion_01_structure_algebra() {
    criterion(1, "structure algebra", 1.0, || {
        for n in 1..=4usize {
            for signs in all_sign_patterns(n) {
                let s = QuaternionicStructure::standard(n, &signs).unwrap();
                let report = s.validate(1e-12);
                assert!(report.passed(), "n={n} signs={signs:?}: {report:?}");
                // standard structures are integer matrices: exact zero
                assert_eq!(report.max_residual(), 0.0, "n={n} signs={signs:?}");
            }
        }
        let k = k_matrices();
        let h = h_matrices();
        assert_eq!(k[0] * k[1], k[2]);
        assert_eq!(k[1] * k[0], -k[2]);
        for ka in &k {
            for hb in &h {
                assert_eq!(ka * hb - hb * ka, nalgebra::Matrix4::zeros());
            }
        }
    });
}

#[test]
fn criterion_02_unimodular_classifier() {
    criterion(2, "unimodular classifier vs brute force", 1.0, || {
        let tol = 1e-9;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let unit = |rng: &mut ChaCha8Rng| {
            let v = [
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let mut disagreements = 0;
        for i in 0..1000 {
            let (a, b) = match i % 4 {
                0 => (unit(&mut rng), [0.0; 3]),
                1 => ([0.0; 3], unit(&mut rng)),
                2 => (unit(&mut rng), unit(&mut rng)),
                _ => (
                    [
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ],
                    [
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ],
                ),
            };
            if classify_unimodular(&a, &b, tol) != classify_unimodular_brute_force(&a, &b, tol) {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    });
}

fn rho_squared_half_triple() -> HamiltonianTriple {
    let h1 = Polynomial::from_terms(1, [(0.5, vec![2])]).unwrap();
    HamiltonianTriple::Radial(
        RadialTriple::from_polynomials([h1, Polynomial::zero(1), Polynomial::zero(1)]).unwrap(),
    )
}

#[test]
fn criterion_03_oracle_equivalence() {
    criterion(3, "RK4 vs closed form + convergence order", 5.0, || {
        let s = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let triple = rho_squared_half_triple();
        let x0 = [1.0, 1.0, 0.0, 0.0];
        let field = hyperfield(&s, &triple).unwrap();
        let sol = solve(&s, &triple, &x0).unwrap();

        let settings = IntegratorSettings::rk4(1e-3, 10.0).unwrap();
        let traj = integrate(&field, &x0, &settings).unwrap();
        let exact = sol.sample(&traj.times);
        let mut max_err: f64 = 0.0;
        for (got, want) in traj.states.iter().zip(&exact) {
            for (a, b) in got.iter().zip(want) {
                max_err = max_err.max((a - b).abs());
            }
        }
        assert!(max_err <= 1e-6, "max state error {max_err}");

        let steps = [1e-1, 5e-2, 2.5e-2];
        let t_end = 2.0;
        let reference = sol.evaluate_at(t_end);
        let errors: Vec<f64> = steps
            .iter()
            .map(|&h| {
                let settings = IntegratorSettings::rk4(h, t_end).unwrap();
                let traj = integrate(&field, &x0, &settings).unwrap();
                traj.final_state()
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let order = measured_order(&steps, &errors);
        assert!(
            (3.7..=4.3).contains(&order),
            "measured order {order} (errors {errors:?})"
        );
    });
}

#[test]
fn criterion_04_conservation() {
    criterion(4, "rho drift and volume preservation", 10.0, || {
        // two-block radial scenario over t in [0, 100]
        let s2 = QuaternionicStructure::standard(2, &[Sign::Plus, Sign::Plus]).unwrap();
        let h1 = Polynomial::from_terms(2, [(1.0, vec![1, 0]), (2.0, vec![0, 1])]).unwrap();
        let radial = HamiltonianTriple::Radial(
            RadialTriple::from_polynomials([h1, Polynomial::zero(2), Polynomial::zero(2)]).unwrap(),
        );
        let field = hyperfield(&s2, &radial).unwrap();
        let x0 = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let settings = IntegratorSettings::rk4(1e-3, 100.0)
            .unwrap()
            .with_stride(200)
            .unwrap();
        let mut traj = integrate(&field, &x0, &settings).unwrap();
        monitor_rho(&mut traj, 2).unwrap();
        for p in 1..=2 {
            let drift = traj.monitor_drift(&format!("rho{p}")).unwrap();
            assert!(drift <= 1e-8, "rho{p} drift {drift}");
        }

        // |det J(5) - 1| <= 1e-6 for the linear non-Hamiltonian scenario
        let s1 = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let example = non_hamiltonian_example_triple();
        let field = hyperfield(&s1, &example).unwrap();
        let settings = IntegratorSettings::rk4(1e-3, 5.0)
            .unwrap()
            .with_stride(500)
            .unwrap();
        let traj = flow_jacobian(&field, &[1.0, 0.0, 0.5, -0.5], &settings).unwrap();
        let det = traj
            .jacobians
            .as_ref()
            .unwrap()
            .last()
            .unwrap()
            .determinant();
        assert!(
            (det - 1.0).abs() <= 1e-6,
            "non-Hamiltonian example det J(5) = {det}"
        );

        // and for a cubic polynomial triple (rotation-dominated so the
        // flow stays bounded over the window)
        let cubic = HamiltonianTriple::polynomial([
            Polynomial::from_terms(
                4,
                [
                    (0.5, vec![2, 0, 0, 0]),
                    (0.5, vec![0, 2, 0, 0]),
                    (0.5, vec![0, 0, 2, 0]),
                    (0.5, vec![0, 0, 0, 2]),
                    (0.1, vec![3, 0, 0, 0]),
                    (-0.1, vec![0, 1, 1, 1]),
                ],
            )
            .unwrap(),
            Polynomial::from_terms(4, [(0.05, vec![1, 0, 0, 2])]).unwrap(),
            Polynomial::from_terms(4, [(-0.05, vec![0, 0, 3, 0])]).unwrap(),
        ])
        .unwrap();
        let field = hyperfield(&s1, &cubic).unwrap();
        let traj = flow_jacobian(&field, &[0.3, -0.2, 0.2, 0.1], &settings).unwrap();
        let det = traj
            .jacobians
            .as_ref()
            .unwrap()
            .last()
            .unwrap()
            .determinant();
        assert!((det - 1.0).abs() <= 1e-6, "cubic det J(5) = {det}");
    });
}

#[test]
fn criterion_05_certificate() {
    criterion(5, "non-Hamiltonianity certificate", 0.1, || {
        let s = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let a = linearize(&s, &non_hamiltonian_example_triple()).unwrap();
        assert_eq!(a.trace(), 0.0);
        // frozen oracle value for Tr(A^3)
        assert_eq!((&a * &a * &a).trace(), -24.0);
        match hamiltonianity_certificate(&a, 8, DEFAULT_CERTIFICATE_TOL) {
            Certificate::NonHamiltonian { k, trace } => {
                assert_eq!(k, 1);
                assert_eq!(trace, -24.0);
            }
            Certificate::Inconclusive => panic!("expected NonHamiltonian(k=1)"),
        }
    });
}

fn quadratic_test_set(rng: &mut ChaCha8Rng) -> Vec<HamiltonianTriple> {
    let mut set = vec![
        HamiltonianTriple::quadratic([
            DMatrix::identity(4, 4),
            DMatrix::zeros(4, 4),
            DMatrix::zeros(4, 4),
        ])
        .unwrap(),
        non_hamiltonian_example_triple(),
    ];
    for _ in 0..5 {
        let d: [DMatrix<f64>; 3] = std::array::from_fn(|_| {
            let mut m = DMatrix::zeros(4, 4);
            for i in 0..4 {
                for j in i..4 {
                    let v = rng.gen_range(-2.0..2.0);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        });
        set.push(HamiltonianTriple::quadratic(d).unwrap());
    }
    set
}

fn cubic_triple() -> HamiltonianTriple {
    HamiltonianTriple::polynomial([
        Polynomial::from_terms(4, [(1.0, vec![3, 0, 0, 0]), (-2.0, vec![0, 1, 1, 1])]).unwrap(),
        Polynomial::from_terms(4, [(0.5, vec![1, 0, 0, 2]), (1.0, vec![0, 2, 0, 0])]).unwrap(),
        Polynomial::from_terms(4, [(-0.75, vec![0, 0, 3, 0]), (0.3, vec![1, 1, 0, 0])]).unwrap(),
    ])
    .unwrap()
}

#[test]
fn criterion_06_flow_kernel() {
    criterion(6, "flow characterisation residuals", 10.0, || {
        let s = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        // exact zero in rational mode for every quadratic triple tested
        for triple in quadratic_test_set(&mut rng) {
            let residual: Form<Rational> = flow_kernel_form(&s, &triple).unwrap();
            assert!(residual.is_zero(), "rational-mode residual not zero");
        }
        // float mode: cubic triple at 100 seeded points
        let triple = cubic_triple();
        let residual: Form<f64> = flow_kernel_form(&s, &triple).unwrap();
        for _ in 0..100 {
            let mut point: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            point.push(rng.gen_range(0.0..1.0));
            let r = residual.max_abs_at(&point);
            assert!(r <= 1e-10, "float-mode residual {r}");
        }
    });
}

#[test]
fn criterion_07_conserved_form() {
    criterion(7, "conserved-form residuals and closedness", 10.0, || {
        let s = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut polynomials_in_suite: Vec<HamiltonianTriple> = Vec::new();
        for triple in quadratic_test_set(&mut rng) {
            let residual: Form<Rational> = theta_invariance_form(&s, &triple).unwrap();
            assert!(residual.is_zero(), "rational-mode residual not zero");
            polynomials_in_suite.push(triple);
        }
        polynomials_in_suite.push(cubic_triple());
        polynomials_in_suite.push(rho_squared_half_triple());
        // d Theta = 0 coefficient-exactly for every polynomial triple
        for triple in &polynomials_in_suite {
            let theta: Form<Rational> = build_theta(&s, triple).unwrap();
            assert!(theta.exterior_derivative().is_zero());
        }
    });
}

#[test]
fn criterion_08_bracket() {
    criterion(8, "bracket algebra", 1.0, || {
        let k = k_matrices();
        let h = h_matrices();
        let to_form = |m: &nalgebra::Matrix4<f64>| -> Form<Rational> {
            let d = DMatrix::from_fn(4, 4, |r, c| m[(r, c)]);
            field_to_form(&PolyField::<Rational>::linear(&d).unwrap()).unwrap()
        };
        // {F(K1 x), F(K2 x)} corresponds to -2 K3 x
        let chi = to_form(&k[0]);
        let psi = to_form(&k[1]);
        let br = bracket(&chi, &psi).unwrap();
        let expected = to_form(&(-2.0 * k[2]));
        assert_eq!(br, expected);

        // antisymmetry and Jacobi on the linear test set, exactly
        let set: Vec<Form<Rational>> = k.iter().chain(h.iter()).map(to_form).collect();
        for a in &set {
            for b in &set {
                let ab = bracket(a, b).unwrap();
                let ba = bracket(b, a).unwrap();
                assert!(ab.add(&ba).unwrap().is_zero(), "antisymmetry fails");
            }
        }
        for a in &set[..3] {
            for b in &set[..3] {
                for c in &set[3..] {
                    let cycle = bracket(&bracket(a, b).unwrap(), c)
                        .unwrap()
                        .add(&bracket(&bracket(b, c).unwrap(), a).unwrap())
                        .unwrap()
                        .add(&bracket(&bracket(c, a).unwrap(), b).unwrap())
                        .unwrap();
                    assert!(cycle.is_zero(), "Jacobi identity fails");
                }
            }
        }
    });
}

#[test]
fn criterion_09_orbit_geometry() {
    criterion(9, "great circles, period, pair energies", 5.0, || {
        let s = QuaternionicStructure::standard(1, &[Sign::Plus]).unwrap();
        let triple = rho_squared_half_triple();
        let x0 = [1.0, 1.0, 0.0, 0.0];
        let sol = solve(&s, &triple, &x0).unwrap();

        // closed-form samples stay on the great circle
        let times: Vec<f64> = (0..=1000).map(|k| 0.01 * k as f64).collect();
        let closed_states = sol.sample(&times);
        let r = great_circle_residual(&sol, &closed_states).unwrap();
        assert!(r <= 1e-9, "closed-form great-circle residual {r}");

        // RK4 samples stay on it to integrator accuracy
        let field = hyperfield(&s, &triple).unwrap();
        let settings = IntegratorSettings::rk4(1e-3, 10.0).unwrap();
        let traj = integrate(&field, &x0, &settings).unwrap();
        let r = great_circle_residual(&sol, &traj.states).unwrap();
        assert!(r <= 1e-8, "RK4 great-circle residual {r}");

        // period recovery from the trajectory
        let nu = sol.blocks()[0].nu;
        let dist_sq = |state: &[f64]| -> f64 {
            state
                .iter()
                .zip(&x0)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let (idx, _) = traj
            .times
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 3.0)
            .map(|(i, _)| (i, dist_sq(&traj.states[i])))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let (dm, d0, dp) = (
            dist_sq(&traj.states[idx - 1]),
            dist_sq(&traj.states[idx]),
            dist_sq(&traj.states[idx + 1]),
        );
        let h = traj.times[idx] - traj.times[idx - 1];
        let t_measured = traj.times[idx] - 0.5 * h * (dp - dm) / (dm - 2.0 * d0 + dp);
        let expected = std::f64::consts::TAU / nu;
        assert!(
            (t_measured - expected).abs() <= 1e-6,
            "period {t_measured} vs {expected}"
        );

        // harmonic pair energies conserved along the closed-form flow
        let x0e = [1.0, 0.0, 1.0, 0.0];
        let sol_e = solve(
            &s,
            &hyperham::oscillator::linear_radial_triple(&[1.0]).unwrap(),
            &x0e,
        )
        .unwrap();
        let (ea0, eb0) = harmonic_pair_energies(&x0e).unwrap();
        for &t in &times {
            let x = sol_e.evaluate_at(t);
            let (ea, eb) = harmonic_pair_energies(&x).unwrap();
            assert!((ea - ea0).abs() <= 1e-10, "E_a drift {}", (ea - ea0).abs());
            assert!((eb - eb0).abs() <= 1e-10, "E_b drift {}", (eb - eb0).abs());
        }
    });
}

#[test]
fn criterion_10_resonance_classification() {
    criterion(10, "resonance classification", 1.0, || {
        let s = QuaternionicStructure::standard(2, &[Sign::Plus, Sign::Plus]).unwrap();
        let x0 = [1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];

        let sol12 = solve(
            &s,
            &hyperham::oscillator::linear_radial_triple(&[1.0, 2.0]).unwrap(),
            &x0,
        )
        .unwrap();
        let class = classify_orbit(&sol12, DEFAULT_RESONANCE_TOL, DEFAULT_RESONANCE_QMAX);
        assert_eq!(class.classes, 1, "nu = (1,2) must be one rational class");
        let ret = sol12.evaluate_at(std::f64::consts::TAU);
        let err: f64 = ret
            .iter()
            .zip(&x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-9, "closed-orbit return error {err}");

        let sol_sqrt2 = solve(
            &s,
            &hyperham::oscillator::linear_radial_triple(&[1.0, std::f64::consts::SQRT_2]).unwrap(),
            &x0,
        )
        .unwrap();
        let class = classify_orbit(&sol_sqrt2, 1e-9, 1_000_000);
        assert_eq!(class.classes, 2, "nu = (1, sqrt 2) must give two classes");
        assert_eq!(class.excited, 2);
    });
}

#[test]
fn criterion_11_cli_surface() {
    criterion(
        11,
        "CLI subcommands, exit codes, reproducibility",
        30.0,
        || {
            let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios");
            let bin = env!("CARGO_BIN_EXE_hyperham");
            let run = |cmd: &str, cfg: &str, dir: &Path| -> (i32, Vec<u8>) {
                let out = std::process::Command::new(bin)
                    .args([
                        cmd,
                        "--config",
                        scenarios.join(cfg).to_str().unwrap(),
                        "--out",
                        dir.to_str().unwrap(),
                    ])
                    .output()
                    .expect("binary runs");
                (out.status.code().unwrap(), out.stdout)
            };

            let corpus: Vec<(&str, &str, i32)> = vec![
                ("validate", "rotation_quadratic.json", 0),
                ("validate", "mixed_validate_ok.json", 0),
                ("validate", "mixed_theta_reject.json", 2),
                ("validate", "invalid_unknown_key.json", 1),
                ("validate", "invalid_asym_d1.json", 1),
                ("run", "rotation_quadratic.json", 0),
                ("run", "non_hamiltonian_volume.json", 0),
                ("run", "radial_two_block.json", 0),
                ("run", "blowup_run.json", 3),
                ("closed-form", "radial_two_block.json", 0),
                ("closed-form", "radial_sqrt2.json", 0),
                ("closed-form", "non_hamiltonian_certify.json", 1), // not radial
                ("certify", "non_hamiltonian_certify.json", 0),
                ("certify", "radial_two_block.json", 1), // not quadratic
                ("invariants", "invariants_quadratic_rational.json", 0),
                ("invariants", "invariants_cubic_float.json", 0),
            ];

            let dir = tempfile::tempdir().unwrap();
            for (cmd, cfg, expected) in &corpus {
                let (code, _) = run(cmd, cfg, dir.path());
                assert_eq!(code, *expected, "{cmd} {cfg}");
            }

            // schema validity of every report written by the passing runs
            for report_name in [
                "rotation_report.json",
                "non_hamiltonian_volume_report.json",
                "two_block_report.json",
                "sqrt2_report.json",
                "certify_report.json",
                "invariants_rational_report.json",
                "invariants_float_report.json",
            ] {
                let text = std::fs::read_to_string(dir.path().join(report_name)).unwrap();
                let report: hyperham_cli::RunReport = serde_json::from_str(&text)
                    .unwrap_or_else(|e| panic!("{report_name} fails the schema: {e}"));
                assert!(report.pass, "{report_name} reports failure");
            }
            // orbit classification blocks carry the declared structure
            let sqrt2: hyperham_cli::RunReport = serde_json::from_str(
                &std::fs::read_to_string(dir.path().join("sqrt2_report.json")).unwrap(),
            )
            .unwrap();
            let orbit = sqrt2.orbit.expect("closed-form reports classify the orbit");
            assert_eq!((orbit.excited, orbit.classes), (2, 2));

            // byte-identical reruns at a fixed seed
            let rerun_dir = tempfile::tempdir().unwrap();
            let deterministic: Vec<(&str, &str, Vec<PathBuf>)> = vec![
                (
                    "run",
                    "rotation_quadratic.json",
                    vec!["rotation.csv".into(), "rotation_report.json".into()],
                ),
                (
                    "closed-form",
                    "radial_two_block.json",
                    vec!["two_block.csv".into(), "two_block_report.json".into()],
                ),
                (
                    "invariants",
                    "invariants_cubic_float.json",
                    vec!["invariants_float_report.json".into()],
                ),
            ];
            for (cmd, cfg, files) in &deterministic {
                let (code_a, _) = run(cmd, cfg, dir.path());
                let (code_b, _) = run(cmd, cfg, rerun_dir.path());
                assert_eq!(code_a, code_b);
                for file in files {
                    let a = std::fs::read(dir.path().join(file)).unwrap();
                    let b = std::fs::read(rerun_dir.path().join(file)).unwrap();
                    if file.extension().is_some_and(|e| e == "json") {
                        // reports are identical up to the wall-time field
                        let mut va: serde_json::Value = serde_json::from_slice(&a).unwrap();
                        let mut vb: serde_json::Value = serde_json::from_slice(&b).unwrap();
                        va.as_object_mut().unwrap().remove("wall_time_secs");
                        vb.as_object_mut().unwrap().remove("wall_time_secs");
                        assert_eq!(va, vb, "{} differs beyond wall time", file.display());
                    } else {
                        assert_eq!(a, b, "{} differs between reruns", file.display());
                    }
                }
            }
        },
    );
}
