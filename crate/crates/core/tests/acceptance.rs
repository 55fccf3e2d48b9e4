//! Acceptance suite: ten end-to-end criteria with frozen oracles. Each test
//! prints a single pass/fail line (visible with `--nocapture`).

use std::sync::Arc;
use std::time::Instant;

use lichsolve_core::barriers::*;
use lichsolve_core::error::CoreError;
use lichsolve_core::fields::*;
use lichsolve_core::iteration::*;
use lichsolve_core::mesh::*;
use lichsolve_core::spectral::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, name: &str, ok: Result<(), String>) {
    match ok {
        Ok(()) => println!("criterion {n} ({name}): pass"),
        Err(msg) => {
            println!("criterion {n} ({name}): FAIL: {msg}");
            panic!("criterion {n} ({name}) failed: {msg}");
        }
    }
}

fn constant_spec(
    d: &Arc<DiscreteDomain>,
    a: f64,
    b: f64,
    c: f64,
) -> ProblemSpec {
    ProblemSpec::new(
        d.clone(),
        ScalarField::constant(d, a),
        ScalarField::constant(d, b),
        ScalarField::constant(d, c),
        Exponents::new(5.0, -7.0).unwrap(),
        1.0,
        BoundaryNonlinearity::zero(),
    )
    .unwrap()
}

/// The radial fixture: m = 3, warp r, r ∈ [1, 20], a = -1/r², b ≡ 1, c ≡ 1,
/// σ = 5, τ = -7, g(t) = t^{1/2} - t³ on the inner sphere.
fn radial_fixture(n: usize) -> (Arc<DiscreteDomain>, ProblemSpec, Exhaustion) {
    let d = Arc::new(build_radial_mesh(1.0, 20.0, n, &|r| r, 3).unwrap());
    let a = ScalarField::from_fn(&d, |i| {
        let r = d.radius(i).unwrap();
        -1.0 / (r * r)
    });
    let g = BoundaryNonlinearity::power_sum(vec![
        PowerTerm {
            coeff: ScalarField::constant(&d, 1.0),
            exponent: 0.5,
        },
        PowerTerm {
            coeff: ScalarField::constant(&d, -1.0),
            exponent: 3.0,
        },
    ])
    .unwrap();
    let spec = ProblemSpec::new(
        d.clone(),
        a,
        ScalarField::constant(&d, 1.0),
        ScalarField::constant(&d, 1.0),
        Exponents::new(5.0, -7.0).unwrap(),
        1.0,
        g,
    )
    .unwrap();
    let ex = build_exhaustion(&d, 4, GrowthPolicy::UniformRadius).unwrap();
    (d, spec, ex)
}

#[test]
fn criterion_01_spectral_fidelity() {
    let run = || -> Result<(), String> {
        let t0 = Instant::now();
        let d = build_interval_mesh(1.0, 200, BoundaryClass::Boundary0, BoundaryClass::Boundary1)
            .map_err(|e| e.to_string())?;
        let a = ScalarField::constant(&d, 0.0);
        let all: Vec<usize> = (0..d.node_count()).collect();
        let zeta = zaremba_first(&d, &a, &all).map_err(|e| e.to_string())?.zeta;
        let lambda = dirichlet_first(&d, &a, &all).map_err(|e| e.to_string())?.zeta;
        let pi = std::f64::consts::PI;
        let zx = pi * pi / 4.0;
        let lx = pi * pi;
        if (zeta - zx).abs() / zx > 0.01 {
            return Err(format!("Zaremba {zeta} vs {zx}"));
        }
        if (lambda - lx).abs() / lx > 0.01 {
            return Err(format!("Dirichlet {lambda} vs {lx}"));
        }
        if !(lambda >= zeta) {
            return Err(format!("lambda1 {lambda} < zeta1 {zeta}"));
        }
        if t0.elapsed().as_secs_f64() >= 1.0 {
            return Err(format!("runtime {:?} >= 1 s", t0.elapsed()));
        }
        Ok(())
    };
    verdict(1, "spectral fidelity", run());
}

#[test]
fn criterion_02_domain_monotonicity() {
    let run = || -> Result<(), String> {
        let t0 = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(20260823);
        let mut done = 0usize;
        let mut trial = 0usize;
        while done < 200 {
            trial += 1;
            if trial > 2000 {
                return Err("too many degenerate draws".into());
            }
            let (d, inner, outer) = if trial % 2 == 0 {
                // path mesh, nested contiguous windows
                let n = rng.gen_range(20..60);
                let d = build_interval_mesh(
                    1.0,
                    n,
                    BoundaryClass::Boundary0,
                    BoundaryClass::Boundary0,
                )
                .map_err(|e| e.to_string())?;
                let lo2 = rng.gen_range(0..n / 4);
                let hi2 = rng.gen_range(3 * n / 4..n);
                let lo1 = lo2 + rng.gen_range(0..n / 8 + 1);
                let hi1 = hi2 - rng.gen_range(0..n / 8 + 1);
                let outer: Vec<usize> = (lo2..hi2).collect();
                let inner: Vec<usize> = (lo1..hi1.max(lo1 + 5).min(hi2)).collect();
                (d, inner, outer)
            } else {
                // grid mesh, nested rectangles
                let nx = rng.gen_range(6..13);
                let ny = rng.gen_range(6..13);
                let d = build_rectangle_mesh(
                    1.0,
                    1.0,
                    nx,
                    ny,
                    [BoundaryClass::Boundary0; 4],
                )
                .map_err(|e| e.to_string())?;
                // keep the inner rectangle at least 5x5 so the restricted
                // region retains free nodes after its frontier is clamped
                let x2 = (rng.gen_range(0..nx / 6 + 1), rng.gen_range(5 * nx / 6..nx));
                let y2 = (rng.gen_range(0..ny / 6 + 1), rng.gen_range(5 * ny / 6..ny));
                let x1 = (x2.0 + rng.gen_range(0..2), x2.1 - rng.gen_range(0..2));
                let y1 = (y2.0 + rng.gen_range(0..2), y2.1 - rng.gen_range(0..2));
                let rect = |xr: (usize, usize), yr: (usize, usize)| -> Vec<usize> {
                    let mut v = Vec::new();
                    for j in yr.0..yr.1 {
                        for i in xr.0..xr.1 {
                            v.push(j * nx + i);
                        }
                    }
                    v
                };
                (d, rect(x1, y1), rect(x2, y2))
            };
            let a = ScalarField::from_fn(&d, |_| rng.gen_range(-1.0..1.0));
            // degenerate draws (inner region entirely clamped) are resampled
            let z_inner = match zaremba_first_value(&d, &a, &inner) {
                Ok(z) => z,
                Err(CoreError::InvalidArgument(_)) => continue,
                Err(e) => return Err(e.to_string()),
            };
            let z_outer = zaremba_first_value(&d, &a, &outer).map_err(|e| e.to_string())?;
            if !(z_inner >= z_outer - 1e-10) {
                return Err(format!(
                    "trial {trial}: zeta(inner) {z_inner} < zeta(outer) {z_outer}"
                ));
            }
            done += 1;
        }
        if t0.elapsed().as_secs() >= 30 {
            return Err(format!("runtime {:?} >= 30 s", t0.elapsed()));
        }
        Ok(())
    };
    verdict(2, "domain monotonicity", run());
}

#[test]
fn criterion_03_pq_closed_forms() {
    let run = || -> Result<(), String> {
        let t0 = Instant::now();
        // symmetric case: p = 1, q = -1 gives M = 2 exactly
        let m = pq_margin(PqParams::new(1.0, 1.0, 1.0, 1.0, -1.0).unwrap()).m_value;
        if m != 2.0 {
            return Err(format!("M(1,-1) = {m} != 2"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..1000 {
            let a = 10f64.powf(rng.gen_range(-2.0..2.0));
            let b = 10f64.powf(rng.gen_range(-2.0..2.0));
            let c = 10f64.powf(rng.gen_range(-2.0..2.0));
            let p = rng.gen_range(0.2..6.0);
            let q = -rng.gen_range(0.2..9.0);
            let params = PqParams::new(a, b, c, p, q).unwrap();
            let min = pq_minimizer(params.clone());
            // 1000-point log-grid search oracle
            let mut grid_best = f64::INFINITY;
            for k in 0..1000 {
                let t = 10f64.powf(-6.0 + 12.0 * k as f64 / 999.0);
                grid_best = grid_best.min(params.eval(t));
            }
            if min.f_at_t_bar > grid_best + 1e-9 {
                return Err(format!(
                    "trial {trial}: f(t_bar) {} beats grid {grid_best} by too little",
                    min.f_at_t_bar
                ));
            }
            if pq_margin(params).satisfied && !(min.f_at_t_bar < 0.0) {
                return Err(format!("trial {trial}: margin holds but f(t_bar) >= 0"));
            }
        }
        if t0.elapsed().as_secs() >= 5 {
            return Err(format!("runtime {:?} >= 5 s", t0.elapsed()));
        }
        Ok(())
    };
    verdict(3, "pq closed forms", run());
}

#[test]
fn criterion_04_constant_solution_recovery() {
    let run = || -> Result<(), String> {
        let t0 = Instant::now();
        let d = Arc::new(
            build_interval_mesh(1.0, 101, BoundaryClass::Boundary1, BoundaryClass::Boundary1)
                .unwrap(),
        );
        let spec = constant_spec(&d, 0.0, 1.0, 1.0);
        let (h, k) = lipschitz_shifts(&spec, 0.5, 2.0, 33).map_err(|e| e.to_string())?;
        let config = MonotoneConfig::new(h, k, 1e-10, 100_000).unwrap();
        let phi = ScalarField::constant(&d, 0.5);
        let psi = ScalarField::constant(&d, 2.0);
        let rep = monotone_solve(&spec, &config, &phi, &psi, &psi).map_err(|e| e.to_string())?;
        let err = rep
            .solution
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max((v - 1.0).abs()));
        if err > 1e-8 {
            return Err(format!("sup-error {err} > 1e-8"));
        }
        if rep.ordering_violations != 0 {
            return Err(format!("{} ordering violations", rep.ordering_violations));
        }
        if t0.elapsed().as_secs_f64() >= 1.0 {
            return Err(format!("runtime {:?} >= 1 s", t0.elapsed()));
        }
        Ok(())
    };
    verdict(4, "constant solution recovery", run());
}

#[test]
fn criterion_05_scalar_root_cross_check() {
    let run = || -> Result<(), String> {
        let d = Arc::new(
            build_interval_mesh(1.0, 101, BoundaryClass::Boundary1, BoundaryClass::Boundary1)
                .unwrap(),
        );
        let spec = constant_spec(&d, 3.0, 1.0, 1.0);
        // independent scalar root-finder for 3u + u^{-7} - u^5 = 0
        let f = |t: f64| 3.0 * t + t.powi(-7) - t.powi(5);
        let (mut lo, mut hi) = (1.0, 2.0);
        if !(f(lo) > 0.0 && f(hi) < 0.0) {
            return Err("bisection bracket invalid".into());
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let (h, k) = lipschitz_shifts(&spec, 1.0, 2.0, 33).map_err(|e| e.to_string())?;
        let config = MonotoneConfig::new(h, k, 1e-10, 100_000).unwrap();
        let phi = ScalarField::constant(&d, 1.0);
        let psi = ScalarField::constant(&d, 2.0);
        let rep = monotone_solve(&spec, &config, &phi, &psi, &psi).map_err(|e| e.to_string())?;
        let err = rep
            .solution
            .values()
            .iter()
            .fold(0.0f64, |m, &v| m.max((v - root).abs()));
        if err > 1e-8 {
            return Err(format!("sup-error {err} > 1e-8 against root {root}"));
        }
        Ok(())
    };
    verdict(5, "scalar root cross-check", run());
}

#[test]
fn criterion_06_duality_soundness() {
    let run = || -> Result<(), String> {
        let (_d, spec, ex) = radial_fixture(400);
        let sub =
            build_subsolution(&spec, &ex, &BarrierOptions::default()).map_err(|e| e.to_string())?;
        for &(_i, r) in sub.residual.interior.iter() {
            if r < -1e-9 {
                return Err(format!("interior residual {r} < -1e-9"));
            }
        }
        for &(_i, r) in sub.residual.boundary.iter() {
            if r > 1e-9 {
                return Err(format!("boundary residual {r} > 1e-9"));
            }
        }
        Ok(())
    };
    verdict(6, "duality soundness", run());
}

#[test]
fn criterion_07_scaling_closure() {
    let run = || -> Result<(), String> {
        let (_d, spec, ex) = radial_fixture(400);
        let sub =
            build_subsolution(&spec, &ex, &BarrierOptions::default()).map_err(|e| e.to_string())?;
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            scale_subsolution(&sub.u_minus, s, &spec, 1e-9)
                .map_err(|e| format!("s = {s}: {e}"))?;
        }
        Ok(())
    };
    verdict(7, "scaling closure", run());
}

#[test]
fn criterion_08_exhaustion_convergence() {
    let run = || -> Result<(), String> {
        let t0 = Instant::now();
        let (_d, spec, ex) = radial_fixture(2000);
        let mut opts = SolveOptions::default();
        opts.use_exhaustion = true;
        opts.iteration.tol = 1e-8;
        let sol = solve_lichnerowicz(&spec, &ex, ThetaMode::Fixed, &opts)
            .map_err(|e| e.to_string())?;
        let er = sol.exhaustion_report.as_ref().ok_or("missing exhaustion report")?;
        let diffs: Vec<f64> = er.convergence.iter().map(|row| row[0]).collect();
        for w in diffs.windows(2) {
            if !(w[1] < w[0]) {
                return Err(format!("diffs not strictly decreasing: {diffs:?}"));
            }
        }
        let last = *diffs.last().ok_or("empty convergence table")?;
        if last > 1e-3 {
            return Err(format!("final innermost difference {last} > 1e-3"));
        }
        let res = &sol.report.residual;
        if res.interior_sup() > 1e-7 || res.boundary_sup() > 1e-7 {
            return Err(format!(
                "residuals {:.3e}/{:.3e} above 10*tol",
                res.interior_sup(),
                res.boundary_sup()
            ));
        }
        if t0.elapsed().as_secs() >= 60 {
            return Err(format!("runtime {:?} >= 60 s", t0.elapsed()));
        }
        Ok(())
    };
    verdict(8, "exhaustion convergence", run());
}

#[test]
fn criterion_09_theta_perturbation() {
    let run = || -> Result<(), String> {
        let (d, base, ex) = radial_fixture(400);
        let b = ScalarField::from_fn(&d, |i| {
            let r = d.radius(i).unwrap();
            if (r - 2.0).abs() < 0.25 {
                1.0 - 3.0
            } else {
                1.0
            }
        });
        let spec = ProblemSpec::new(
            d.clone(),
            base.a.clone(),
            b,
            base.c.clone(),
            base.exponents,
            1.0,
            base.g.clone(),
        )
        .unwrap();
        let auto = solve_lichnerowicz(&spec, &ex, ThetaMode::Auto, &SolveOptions::default())
            .map_err(|e| format!("auto mode failed: {e}"))?;
        let theta_0 = auto.theta_used;
        if !(theta_0 > 0.0 && theta_0 <= 1.0) {
            return Err(format!("theta_0 = {theta_0} not in (0, 1]"));
        }
        let half = spec.with_theta(theta_0 / 2.0).unwrap();
        solve_lichnerowicz(&half, &ex, ThetaMode::Fixed, &SolveOptions::default())
            .map_err(|e| format!("theta_0/2 failed: {e}"))?;
        // θ = 1 must either succeed or fail with a structured error
        match solve_lichnerowicz(&spec, &ex, ThetaMode::Fixed, &SolveOptions::default()) {
            Ok(sol) => {
                if sol.report.residual.interior_sup() > 1e-7 {
                    return Err("theta = 1 returned an uncertified solution".into());
                }
            }
            Err(
                CoreError::ConstructionFailure { .. }
                | CoreError::SchemeFailure { .. }
                | CoreError::Nonconvergence { .. },
            ) => {}
            Err(e) => return Err(format!("theta = 1 failed unstructured: {e}")),
        }
        Ok(())
    };
    verdict(9, "theta perturbation", run());
}

#[test]
fn criterion_10_defocusing_checker() {
    let run = || -> Result<(), String> {
        let d = Arc::new(
            build_interval_mesh(1.0, 11, BoundaryClass::Boundary1, BoundaryClass::Boundary1)
                .unwrap(),
        );
        let boundary = d.boundary1_nodes();
        let good = BoundaryNonlinearity::power_sum(vec![
            PowerTerm {
                coeff: ScalarField::constant(&d, 1.0),
                exponent: 0.5,
            },
            PowerTerm {
                coeff: ScalarField::constant(&d, -1.0),
                exponent: 3.0,
            },
        ])
        .unwrap();
        let rep = check_defocusing(&good, &boundary).map_err(|e| e.to_string())?;
        if !rep.strongly_defocusing() {
            return Err(format!("fixture not strongly defocusing: {rep:?}"));
        }
        let grid: Vec<f64> = (0..61)
            .map(|i| 1e-6 * (1e12f64).powf(i as f64 / 60.0))
            .collect();
        let gc = check_g_conditions(&good, &grid, &boundary).map_err(|e| e.to_string())?;
        for (name, c) in [
            ("i", &gc.cond_i),
            ("ii", &gc.cond_ii),
            ("iii", &gc.cond_iii),
            ("iv", &gc.cond_iv),
        ] {
            if !c.passed() {
                return Err(format!("g condition {name} did not pass: {}", c.detail));
            }
        }
        let bad = BoundaryNonlinearity::power_sum(vec![PowerTerm {
            coeff: ScalarField::constant(&d, 1.0),
            exponent: 3.0,
        }])
        .unwrap();
        let rep = check_defocusing(&bad, &boundary).map_err(|e| e.to_string())?;
        if rep.cond_i {
            return Err("g = +t^3 passed condition i".into());
        }
        match rep.cond_i_witness {
            Some((0, node)) if boundary.contains(&node) => Ok(()),
            other => Err(format!("wrong witness {other:?}")),
        }
    };
    verdict(10, "defocusing checker", run());
}
