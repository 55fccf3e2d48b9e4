//! The monotone iteration scheme, the truncated-boundary problems on an
//! exhaustion, and the end-to-end solve pipeline.

use std::sync::Arc;

use crate::barriers::{
    build_subsolution, build_supersolution, order_barriers, BarrierOptions, BarrierPair,
};
use crate::error::{CoreError, Result};
use crate::fields::{
    check_g_conditions, BoundaryNonlinearity, CheckStatus, ProblemSpec, ScalarField,
};
use crate::mesh::{restrict, BoundaryClass, DiscreteDomain, Exhaustion};
use crate::operators::{residual, ResidualPair, ShiftedSolve};
use crate::spectral::verify_spectral_hypotheses;

#[derive(Debug, Clone, Copy)]
pub struct MonotoneConfig {
    /// interior Lipschitz shift
    pub h: f64,
    /// boundary Lipschitz shift
    pub k: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// relative ordering slack for the chain audit
    pub ordering_tol: f64,
    /// re-measure H and K on the narrowed iterate band; each ascending
    /// iterate is an exact discrete subsolution (and descending a
    /// supersolution), so restarting the scheme from them is certified
    pub adapt_shifts: bool,
}

impl MonotoneConfig {
    pub fn new(h: f64, k: f64, tol: f64, max_iter: usize) -> Result<Self> {
        if !(h >= 0.0 && k >= 0.0) {
            return Err(CoreError::invalid("shifts must be nonnegative"));
        }
        if !(tol > 0.0) || max_iter < 1 {
            return Err(CoreError::invalid("need tol > 0 and max_iter >= 1"));
        }
        Ok(MonotoneConfig {
            h,
            k,
            tol,
            max_iter,
            // loose enough to absorb the non-M-matrix wiggle of the
            // second-order boundary stencil, far below real breakdown
            ordering_tol: 1e-7,
            adapt_shifts: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Ascending,
    Descending,
    Both,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// the ascending limit
    pub solution: ScalarField,
    pub descending: ScalarField,
    /// sup-gap between the two limits; a diagnostic, not an error
    pub limits_gap: f64,
    pub iterations: usize,
    pub gaps: Vec<f64>,
    /// must be 0 on success
    pub ordering_violations: usize,
    pub residual: ResidualPair,
    pub branch: Branch,
    pub h_final: f64,
    pub k_final: f64,
}

/// Sampled Lipschitz shifts making `f + H·s` and `g + K·s` non-decreasing
/// on `[lo, hi]`: 1.5 times the sampled max of the negative slopes, clipped
/// below at zero.
pub fn lipschitz_shifts(
    spec: &ProblemSpec,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<(f64, f64)> {
    if !(0.0 < lo && lo < hi) {
        return Err(CoreError::invalid("need 0 < lo < hi"));
    }
    if samples < 2 {
        return Err(CoreError::invalid("need at least 2 samples"));
    }
    let bt = spec.effective_b();
    let n = spec.domain.node_count();
    let boundary1 = spec.domain.boundary1_nodes();
    let mut h_max = 0.0f64;
    let mut k_max = 0.0f64;
    for s in 0..samples {
        let t = lo + (hi - lo) * s as f64 / (samples - 1) as f64;
        let dt = 1e-6 * t;
        for i in 0..n {
            if spec.domain.class(i) == BoundaryClass::Interior {
                let fp = spec.reaction(&bt, i, t + dt);
                let fm = spec.reaction(&bt, i, t - dt);
                let slope = (fp - fm) / (2.0 * dt);
                if !slope.is_finite() {
                    return Err(CoreError::invalid(format!(
                        "non-finite reaction slope at node {i}, t = {t}; raise lo above the singular range"
                    )));
                }
                h_max = h_max.max(-slope);
            }
        }
        for &i in &boundary1 {
            let gp = spec.g.eval(i, t + dt);
            let gm = spec.g.eval(i, t - dt);
            let slope = (gp - gm) / (2.0 * dt);
            if !slope.is_finite() {
                return Err(CoreError::invalid(format!(
                    "non-finite boundary slope at node {i}, t = {t}"
                )));
            }
            k_max = k_max.max(-slope);
        }
    }
    Ok((1.5 * h_max.max(0.0), 1.5 * k_max.max(0.0)))
}

struct Stepper<'a> {
    spec: &'a ProblemSpec,
    bt: ScalarField,
    h: f64,
    k: f64,
    solver: ShiftedSolve,
    dirichlet: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a ProblemSpec, h: f64, k: f64, dirichlet: &ScalarField) -> Result<Self> {
        // a is folded into the reaction, so the linear operator carries a ≡ 0
        let zero = ScalarField::constant(&spec.domain, 0.0);
        let solver = ShiftedSolve::new(spec.domain.clone(), &zero, h, k)?;
        Ok(Stepper {
            spec,
            bt: spec.effective_b(),
            h,
            k,
            solver,
            dirichlet: dirichlet.values().to_vec(),
        })
    }

    fn step(&self, w: &[f64]) -> Result<Vec<f64>> {
        let n = self.spec.domain.node_count();
        let mut interior_rhs = vec![0.0; n];
        let mut boundary_rhs = vec![0.0; n];
        for i in 0..n {
            match self.spec.domain.class(i) {
                BoundaryClass::Interior => {
                    interior_rhs[i] = self.spec.reaction(&self.bt, i, w[i]) + self.h * w[i];
                }
                BoundaryClass::Boundary1 => {
                    boundary_rhs[i] = self.spec.g.eval(i, w[i]) + self.k * w[i];
                }
                BoundaryClass::Boundary0 => {}
            }
        }
        self.solver.solve(&interior_rhs, &boundary_rhs, &self.dirichlet)
    }
}

/// One application of the monotone operator `T`.
pub fn monotone_step(
    spec: &ProblemSpec,
    config: &MonotoneConfig,
    w: &ScalarField,
    dirichlet: &ScalarField,
) -> Result<ScalarField> {
    let stepper = Stepper::new(spec, config.h, config.k, dirichlet)?;
    ScalarField::new(&spec.domain, stepper.step(w.values())?)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

/// Monotone iteration between the barriers `phi ≤ psi`, auditing the full
/// ordering chain at every step. Stops when the iterate sup-gap falls below
/// `tol` and the nonlinear residual below `10·tol`.
pub fn monotone_solve(
    spec: &ProblemSpec,
    config: &MonotoneConfig,
    phi: &ScalarField,
    psi: &ScalarField,
    dirichlet: &ScalarField,
) -> Result<SolveReport> {
    let n = spec.domain.node_count();
    if phi.len() != n || psi.len() != n || dirichlet.len() != n {
        return Err(CoreError::invalid("barrier or data length mismatch"));
    }
    if !(config.tol > 0.0) || config.max_iter < 1 {
        return Err(CoreError::invalid("need tol > 0 and max_iter >= 1"));
    }
    let slack = config.ordering_tol * (1.0 + psi.sup_norm());
    for i in 0..n {
        if !(phi.get(i) > 0.0) {
            return Err(CoreError::invalid(format!("phi must be positive (node {i})")));
        }
        if phi.get(i) > psi.get(i) + slack {
            return Err(CoreError::invalid(format!(
                "barriers out of order at node {i}: {} > {}",
                phi.get(i),
                psi.get(i)
            )));
        }
    }

    let mut h = config.h;
    let mut k = config.k;
    let mut stepper = Stepper::new(spec, h, k, dirichlet)?;
    // audit floor and ceiling; reset on certified shift refreshes
    let mut floor = phi.values().to_vec();
    let mut ceil = psi.values().to_vec();
    let mut lo = floor.clone();
    let mut hi = ceil.clone();
    let mut gaps = Vec::new();
    let mut iterations = 0;

    while iterations < config.max_iter {
        iterations += 1;
        let lo_next = stepper.step(&lo)?;
        let hi_next = stepper.step(&hi)?;
        for i in 0..n {
            let chain = [
                (floor[i], lo_next[i], "phi <= u-"),
                (lo[i], lo_next[i], "u- ascending"),
                (lo_next[i], hi_next[i], "u- <= u+"),
                (hi_next[i], hi[i], "u+ descending"),
                (hi_next[i], ceil[i], "u+ <= psi"),
            ];
            for (a, b, what) in chain {
                if a > b + slack {
                    return Err(CoreError::SchemeFailure {
                        iteration: iterations,
                        node: i,
                        detail: format!("ordering violated ({what}): {a} > {b}"),
                    });
                }
            }
        }
        let gap = sup_diff(&lo_next, &lo).max(sup_diff(&hi_next, &hi));
        gaps.push(gap);
        lo = lo_next;
        hi = hi_next;

        if gap <= config.tol {
            let sol = ScalarField::new(&spec.domain, lo.clone())?;
            let res = residual(spec, &sol)?;
            if res.interior_sup() <= 10.0 * config.tol && res.boundary_sup() <= 10.0 * config.tol {
                let desc = ScalarField::new(&spec.domain, hi.clone())?;
                let limits_gap = sup_diff(&lo, &hi);
                return Ok(SolveReport {
                    solution: sol,
                    descending: desc,
                    limits_gap,
                    iterations,
                    gaps,
                    ordering_violations: 0,
                    residual: res,
                    branch: Branch::Both,
                    h_final: h,
                    k_final: k,
                });
            }
        }

        if config.adapt_shifts && iterations % 16 == 0 {
            let band_lo = lo.iter().cloned().fold(f64::INFINITY, f64::min);
            let band_hi = hi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if band_lo > 0.0 && band_lo < band_hi {
                if let Ok((h2, k2)) = lipschitz_shifts(spec, band_lo, band_hi, 17) {
                    if h2 + k2 < 0.9 * (h + k) {
                        h = h2;
                        k = k2;
                        stepper = Stepper::new(spec, h, k, dirichlet)?;
                        floor = lo.clone();
                        ceil = hi.clone();
                    }
                }
            }
        }
    }
    Err(CoreError::Nonconvergence {
        iterations,
        last_gap: gaps.last().cloned().unwrap_or(f64::INFINITY),
    })
}

/// The truncation constant of the exhaustion problems:
/// max of g(x,u⁻) and ∂_ν u⁻ over the boundary, and of the negative parts
/// of g(x,u⁺) and ∂_ν u⁺.
pub fn compute_an(
    spec: &ProblemSpec,
    u_minus: &ScalarField,
    u_plus: &ScalarField,
) -> Result<f64> {
    let d = &spec.domain;
    let mut a_n = f64::NEG_INFINITY;
    let mut any = false;
    for i in 0..d.node_count() {
        match d.class(i) {
            BoundaryClass::Interior => continue,
            BoundaryClass::Boundary1 => {
                any = true;
                a_n = a_n.max(spec.g.eval(i, u_minus.get(i)));
                a_n = a_n.max((-spec.g.eval(i, u_plus.get(i))).max(0.0));
                a_n = a_n.max(d.normal_derivative(u_minus.values(), i)?);
                a_n = a_n.max((-d.normal_derivative(u_plus.values(), i)?).max(0.0));
            }
            BoundaryClass::Boundary0 => {
                any = true;
                a_n = a_n.max(d.normal_derivative(u_minus.values(), i)?);
                a_n = a_n.max((-d.normal_derivative(u_plus.values(), i)?).max(0.0));
            }
        }
    }
    if !any {
        return Ok(0.0);
    }
    // the negative-part terms are ≥ 0, so the max is too
    Ok(a_n.max(0.0))
}

/// `g_n(x,w) = ψ_n g(x,w) + A_n (1−ψ_n)(m−w)/δ` with `m = (u⁺+u⁻)/2`,
/// `δ = (u⁺−u⁻)/2`.
pub fn truncated_nonlinearity(
    spec: &ProblemSpec,
    psi_n: &ScalarField,
    u_minus: &ScalarField,
    u_plus: &ScalarField,
    a_n: f64,
) -> Result<BoundaryNonlinearity> {
    let d = &spec.domain;
    let n = d.node_count();
    let mut m = vec![0.0; n];
    let mut delta = vec![1.0; n];
    for i in 0..n {
        if d.class(i) == BoundaryClass::Interior {
            continue;
        }
        let p = psi_n.get(i);
        if !(0.0..=1.0).contains(&p) {
            return Err(CoreError::invalid(format!("psi_n out of [0,1] at node {i}")));
        }
        let dl = 0.5 * (u_plus.get(i) - u_minus.get(i));
        if !(dl > 0.0) {
            return Err(CoreError::invalid(format!(
                "barriers not strictly ordered at boundary node {i}"
            )));
        }
        m[i] = 0.5 * (u_plus.get(i) + u_minus.get(i));
        delta[i] = dl;
    }
    let g = spec.g.clone();
    let psi = psi_n.values().to_vec();
    Ok(BoundaryNonlinearity::Tabulated(Arc::new(move |i, t| {
        psi[i] * g.eval(i, t) + a_n * (1.0 - psi[i]) * (m[i] - t) / delta[i]
    })))
}

/// Restriction of a problem to a node subset; `g` is index-remapped.
pub fn restrict_spec(spec: &ProblemSpec, subset: &[usize]) -> Result<(ProblemSpec, Vec<usize>)> {
    let (rd, _) = restrict(&spec.domain, subset)?;
    let mut sorted: Vec<usize> = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let g_old = spec.g.clone();
    let map = sorted.clone();
    let g_new = BoundaryNonlinearity::Tabulated(Arc::new(move |i, t| g_old.eval(map[i], t)));
    let sub = ProblemSpec::new(
        Arc::new(rd),
        spec.a.restricted(&sorted),
        spec.b.restricted(&sorted),
        spec.c.restricted(&sorted),
        spec.exponents,
        spec.theta,
        g_new,
    )?;
    Ok((sub, sorted))
}

#[derive(Debug, Clone, Copy)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub ordering_tol: f64,
    pub adapt_shifts: bool,
    pub lipschitz_samples: usize,
    /// sequential mode warm-starts each member from the previous solution
    pub sequential: bool,
}

impl Default for IterationOptions {
    fn default() -> Self {
        IterationOptions {
            tol: 1e-8,
            max_iter: 400_000,
            ordering_tol: 1e-7,
            adapt_shifts: true,
            lipschitz_samples: 33,
            sequential: true,
        }
    }
}

#[derive(Debug)]
pub struct ExhaustionReport {
    pub reports: Vec<SolveReport>,
    /// `convergence[n][k]` = sup over member k of |u_{n+1} − u_n|
    pub convergence: Vec<Vec<f64>>,
    pub solution: ScalarField,
    pub mode: &'static str,
    pub failure: Option<(usize, CoreError)>,
}

pub fn exhaustion_solve(
    spec: &ProblemSpec,
    exhaustion: &Exhaustion,
    pair: &BarrierPair,
    opts: &IterationOptions,
) -> Result<ExhaustionReport> {
    let domain: &Arc<DiscreteDomain> = &spec.domain;
    let n_total = domain.node_count();
    let count = exhaustion.member_count();
    let mut reports = Vec::new();
    let mut solutions_global: Vec<Vec<f64>> = Vec::new();
    let mut prev_global: Option<Vec<f64>> = None;
    let mode = if opts.sequential { "sequential" } else { "independent" };

    for nmem in 0..count {
        let member = exhaustion.member(nmem);
        let run = || -> Result<(SolveReport, Vec<usize>)> {
            let (sub, sorted) = restrict_spec(spec, member)?;
            let phi = pair.u_minus.restricted(&sorted);
            let psi = pair.u_plus.restricted(&sorted);
            let dirichlet = psi.clone();
            // Γ_n = ∂₁ nodes of the previous member (all of them for n = 0)
            let gamma_src = if nmem == 0 { member } else { exhaustion.member(nmem - 1) };
            let mut in_gamma = vec![false; n_total];
            for &i in gamma_src {
                if domain.class(i) == BoundaryClass::Boundary1 {
                    in_gamma[i] = true;
                }
            }
            let psi_n = ScalarField::from_fn(&sub.domain, |i| {
                if in_gamma[sorted[i]] { 1.0 } else { 0.0 }
            });
            let a_n = compute_an(&sub, &phi, &psi)?;
            let g_n = truncated_nonlinearity(&sub, &psi_n, &phi, &psi, a_n)?;
            let mut truncated = sub.clone();
            truncated.g = g_n;
            let lo = phi.min();
            let hi = psi.max();
            let (h, k) = lipschitz_shifts(&truncated, lo, hi, opts.lipschitz_samples)?;
            let mut config = MonotoneConfig::new(h, k, opts.tol, opts.max_iter)?;
            config.ordering_tol = opts.ordering_tol;
            config.adapt_shifts = opts.adapt_shifts;
            // warm start: accept the previous solution as the ascending
            // start only when it certifies as a subsolution of the new
            // member problem; the extension past the old pinned frontier
            // usually breaks that, in which case we fall back to φ
            let mut start = phi.clone();
            if opts.sequential {
                if let Some(prev) = &prev_global {
                    let w = ScalarField::from_fn(&sub.domain, |i| {
                        let g = sorted[i];
                        if prev[g].is_finite() {
                            prev[g].max(phi.get(i)).min(psi.get(i))
                        } else {
                            phi.get(i)
                        }
                    });
                    let slack = opts.tol * (1.0 + psi.sup_norm());
                    if let Ok(res) = residual(&truncated, &w) {
                        if res.interior_min() >= -slack && res.boundary_max() <= slack {
                            start = w;
                        }
                    }
                }
            }
            let report = monotone_solve(&truncated, &config, &start, &psi, &dirichlet)?;
            Ok((report, sorted))
        };
        match run() {
            Ok((report, sorted)) => {
                let mut global = vec![f64::NAN; n_total];
                for (i, &g) in sorted.iter().enumerate() {
                    global[g] = report.solution.get(i);
                }
                prev_global = Some(global.clone());
                solutions_global.push(global);
                reports.push(report);
            }
            Err(e) => {
                let convergence = convergence_table(exhaustion, &solutions_global);
                let solution = match &prev_global {
                    Some(g) => ScalarField::from_fn(domain, |i| if g[i].is_finite() { g[i] } else { 0.0 }),
                    None => ScalarField::constant(domain, 0.0),
                };
                return Ok(ExhaustionReport {
                    reports,
                    convergence,
                    solution,
                    mode,
                    failure: Some((nmem, e)),
                });
            }
        }
    }
    let convergence = convergence_table(exhaustion, &solutions_global);
    let last = solutions_global.last().expect("count >= 1");
    let solution = ScalarField::new(domain, last.clone())?;
    Ok(ExhaustionReport {
        reports,
        convergence,
        solution,
        mode,
        failure: None,
    })
}

fn convergence_table(exhaustion: &Exhaustion, sols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut table = Vec::new();
    for n in 1..sols.len() {
        let mut row = Vec::new();
        for k in 0..n {
            let sup = exhaustion
                .member(k)
                .iter()
                .map(|&i| (sols[n][i] - sols[n - 1][i]).abs())
                .fold(0.0f64, f64::max);
            row.push(sup);
        }
        table.push(row);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    Fixed,
    Auto,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub iteration: IterationOptions,
    pub barrier: BarrierOptions,
    pub use_exhaustion: bool,
    /// skip the (heuristic) hypothesis gate
    pub override_hypotheses: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            iteration: IterationOptions::default(),
            barrier: BarrierOptions::default(),
            use_exhaustion: false,
            override_hypotheses: false,
        }
    }
}

#[derive(Debug)]
pub struct LichnerowiczSolution {
    pub theta_used: f64,
    pub theta_0: f64,
    pub barriers: BarrierPair,
    pub report: SolveReport,
    pub exhaustion_report: Option<ExhaustionReport>,
}

fn check_hypotheses(spec: &ProblemSpec) -> Result<()> {
    let sr = verify_spectral_hypotheses(spec, None, None)?;
    if !sr.hypothesis_i {
        return Err(CoreError::HypothesisFailure {
            condition: "zeta1(B0) > 0".into(),
            detail: format!("computed value {:.6e}", sr.zeta_b0),
        });
    }
    if !sr.hypothesis_ii {
        return Err(CoreError::HypothesisFailure {
            condition: "zeta1_bar(C0) > 0".into(),
            detail: format!("computed value {:.6e}", sr.zeta_c0),
        });
    }
    if !spec.g.is_zero() {
        let boundary1 = spec.domain.boundary1_nodes();
        if !boundary1.is_empty() {
            let grid: Vec<f64> = (0..61)
                .map(|i| 1e-6 * (1e12f64).powf(i as f64 / 60.0))
                .collect();
            let gr = check_g_conditions(&spec.g, &grid, &boundary1)?;
            for (name, check) in [
                ("g condition i", &gr.cond_i),
                ("g condition ii", &gr.cond_ii),
                ("g condition iii", &gr.cond_iii),
                ("g condition iv", &gr.cond_iv),
            ] {
                if check.status == CheckStatus::Fail {
                    return Err(CoreError::HypothesisFailure {
                        condition: name.into(),
                        detail: check.detail.clone(),
                    });
                }
            }
            if !gr.gt_non_increasing {
                return Err(CoreError::HypothesisFailure {
                    condition: "g(x,t)/t non-increasing".into(),
                    detail: format!("violated at {:?}", gr.gt_violation),
                });
            }
        }
    }
    Ok(())
}

/// End-to-end pipeline: hypothesis gate, barrier construction, scaling and
/// ordering, then the monotone (or exhaustion) solve.
pub fn solve_lichnerowicz(
    spec: &ProblemSpec,
    exhaustion: &Exhaustion,
    mode: ThetaMode,
    opts: &SolveOptions,
) -> Result<LichnerowiczSolution> {
    if !opts.override_hypotheses {
        check_hypotheses(spec)?;
    }
    let (spec_used, sup_build) = match mode {
        ThetaMode::Fixed => {
            let b = build_supersolution(spec, exhaustion, &opts.barrier)?;
            (spec.clone(), b)
        }
        ThetaMode::Auto => {
            // largest grid θ whose certificate actually passes
            let mut found = None;
            for &t in &opts.barrier.theta_grid {
                if t > 1.0 {
                    continue;
                }
                let candidate = spec.with_theta(t)?;
                match build_supersolution(&candidate, exhaustion, &opts.barrier) {
                    Ok(b) => {
                        found = Some((candidate, b));
                        break;
                    }
                    Err(CoreError::ConstructionFailure { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            found.ok_or_else(|| CoreError::ConstructionFailure {
                detail: "no theta on the grid admits a certified supersolution".into(),
                worst_node: None,
            })?
        }
    };
    let sub_build = build_subsolution(&spec_used, exhaustion, &opts.barrier)?;
    let pair = order_barriers(&sub_build, &sup_build, &spec_used, opts.barrier.tol)?;
    let theta_used = spec_used.theta;
    let theta_0 = sup_build.theta_0;

    if opts.use_exhaustion {
        let ex_report = exhaustion_solve(&spec_used, exhaustion, &pair, &opts.iteration)?;
        if let Some((idx, e)) = ex_report.failure {
            return Err(CoreError::SchemeFailure {
                iteration: idx,
                node: 0,
                detail: format!("exhaustion member {idx} failed: {e}"),
            });
        }
        let report = ex_report
            .reports
            .last()
            .cloned()
            .ok_or_else(|| CoreError::NumericError("empty exhaustion report".into()))?;
        sandwich_audit(&pair, &report.solution)?;
        Ok(LichnerowiczSolution {
            theta_used,
            theta_0,
            barriers: pair,
            report,
            exhaustion_report: Some(ex_report),
        })
    } else {
        let lo = pair.u_minus.min();
        let hi = pair.u_plus.max();
        let (h, k) = lipschitz_shifts(&spec_used, lo, hi, opts.iteration.lipschitz_samples)?;
        let mut config = MonotoneConfig::new(h, k, opts.iteration.tol, opts.iteration.max_iter)?;
        config.ordering_tol = opts.iteration.ordering_tol;
        config.adapt_shifts = opts.iteration.adapt_shifts;
        let dirichlet = pair.u_plus.clone();
        let report = monotone_solve(&spec_used, &config, &pair.u_minus, &pair.u_plus, &dirichlet)?;
        sandwich_audit(&pair, &report.solution)?;
        Ok(LichnerowiczSolution {
            theta_used,
            theta_0,
            barriers: pair,
            report,
            exhaustion_report: None,
        })
    }
}

fn sandwich_audit(pair: &BarrierPair, u: &ScalarField) -> Result<()> {
    let slack = 1e-9 * (1.0 + pair.u_plus.sup_norm());
    for i in 0..u.len() {
        if u.get(i) < pair.u_minus.get(i) - slack || u.get(i) > pair.u_plus.get(i) + slack {
            return Err(CoreError::SchemeFailure {
                iteration: 0,
                node: i,
                detail: format!(
                    "solution escaped the barrier sandwich: {} vs [{}, {}]",
                    u.get(i),
                    pair.u_minus.get(i),
                    pair.u_plus.get(i)
                ),
            });
        }
    }
    Ok(())
}
