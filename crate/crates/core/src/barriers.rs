//! Barrier construction: the explicit supersolution with its constant
//! ledger, the subsolution obtained through the duality transform, and the
//! scaled, ordered pair feeding the monotone scheme.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::fields::{dual_problem, power, ProblemSpec, ScalarField};
use crate::mesh::{BoundaryClass, DiscreteDomain, Exhaustion};
use crate::operators::{residual, ResidualPair};
use crate::spectral::{dirichlet_first, zaremba_first, Eigenpair};

/// Parameters of `f(t) = A t^p + B t^q − C`.
#[derive(Debug, Clone, Copy)]
pub struct PqParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    pub q: f64,
}

impl PqParams {
    pub fn new(a: f64, b: f64, c: f64, p: f64, q: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(CoreError::invalid("pq coefficients must be positive"));
        }
        if !(q < 0.0 && 0.0 < p) {
            return Err(CoreError::invalid("pq exponents must satisfy q < 0 < p"));
        }
        Ok(PqParams { a, b, c, p, q })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.a * power(t, self.p) + self.b * power(t, self.q) - self.c
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PqMargin {
    pub m_value: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// `M(p,q) = (−q/p)^{p/(p−q)} + (−q/p)^{q/(p−q)}` and the sufficiency
/// condition `A^{−q} B^p < (C/M)^{p−q}`.
pub fn pq_margin(params: PqParams) -> PqMargin {
    let (p, q) = (params.p, params.q);
    let r = -q / p;
    let m_value = r.powf(p / (p - q)) + r.powf(q / (p - q));
    let lhs = params.a.powf(-q) * params.b.powf(p);
    let rhs = (params.c / m_value).powf(p - q);
    PqMargin {
        m_value,
        lhs,
        rhs,
        satisfied: lhs < rhs,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PqMinimizer {
    pub t_bar: f64,
    pub f_at_t_bar: f64,
}

/// Closed-form minimizer `t̄ = (−qB/(pA))^{1/(p−q)}`; when the margin
/// condition holds the minimum is negative.
pub fn pq_minimizer(params: PqParams) -> PqMinimizer {
    let t_bar = (-params.q * params.b / (params.p * params.a)).powf(1.0 / (params.p - params.q));
    let f_at_t_bar = params.eval(t_bar);
    if pq_margin(params).satisfied {
        assert!(
            f_at_t_bar < 0.0,
            "margin condition held but f(t_bar) = {f_at_t_bar}"
        );
    }
    PqMinimizer { t_bar, f_at_t_bar }
}

/// Which interior analysis produced η.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperBranch {
    /// `‖c‖_{D′} ≠ 0`, `‖b₋‖ ≠ 0`: η = t̄(θ) from the pq lemma.
    General,
    /// `‖c‖_{D′} = 0`: η = t̃(θ)/2.
    CZero,
    /// `b₋ ≡ 0`: the θ-dependent term vanishes, θ₀ = 1.
    BMinusZero,
}

/// Every constant of the construction, kept for audit.
#[derive(Debug, Clone)]
pub struct ConstantLedger {
    pub theta_0: f64,
    pub theta: f64,
    pub eta: f64,
    pub mu: f64,
    pub xi: f64,
    pub rho: f64,
    pub gamma_bar: f64,
    pub lambda_0: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub h_const: f64,
    pub k_const: f64,
    pub m1: f64,
    pub m2: f64,
    pub epsilon: f64,
    pub e_const: f64,
    pub zeta_d: f64,
    /// Dirichlet value of D, logged when B₀ stays off ∂₁ (the alternative
    /// spectral condition); the Zaremba value is the one used.
    pub zeta_d_dirichlet: Option<f64>,
    pub branch: SuperBranch,
    /// set when γ̄ came from inconclusive sampling
    pub heuristic: bool,
    pub escalations: u32,
}

#[derive(Debug, Clone)]
pub struct SupersolutionBuild {
    pub u_plus: ScalarField,
    pub theta_0: f64,
    pub ledger: ConstantLedger,
    pub residual: ResidualPair,
    pub d_prime: Vec<usize>,
    pub d_region: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SubsolutionBuild {
    pub u_minus: ScalarField,
    pub dual: SupersolutionBuild,
    pub residual: ResidualPair,
}

/// The ordered pair with certificates, ready for the monotone scheme.
#[derive(Debug, Clone)]
pub struct BarrierPair {
    pub u_minus: ScalarField,
    pub u_plus: ScalarField,
    pub s: f64,
    pub ledger: ConstantLedger,
    pub sub_residual: ResidualPair,
    pub super_residual: ResidualPair,
    pub d_prime: Vec<usize>,
    pub d_region: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BarrierOptions {
    pub tol: f64,
    /// descending θ samples; θ₀ is the largest feasible one
    pub theta_grid: Vec<f64>,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        // 2^{-k/2} reaches ~7e-25, far below any θ₀ arising from bounded data
        BarrierOptions {
            tol: 1e-9,
            theta_grid: (0..=160).map(|k| 2f64.powf(-(k as f64) / 2.0)).collect(),
        }
    }
}

const ESCALATION_CAP: u32 = 40;

/// Root of a strictly decreasing function on (0, ∞), or 0 when the function
/// is already negative everywhere sampled.
fn decreasing_root(f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut lo = 1e-12;
    if f(lo) <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(CoreError::NumericError(
                "decreasing function has no reachable root".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Graph-distance linear ramp: 1 on `inner`, 0 outside `outer`, and
/// `d_out/(d_out + d_in)` in between.
pub fn cutoff_ramp(
    domain: &DiscreteDomain,
    inner: &[usize],
    outer: &[usize],
) -> Result<ScalarField> {
    let n = domain.node_count();
    let bfs = |seeds: &[usize], allowed: Option<&[bool]>| -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; n];
        let mut queue = VecDeque::new();
        for &s in seeds {
            dist[s] = 0.0;
            queue.push_back(s);
        }
        while let Some(i) = queue.pop_front() {
            for &(j, _) in domain.neighbors(i) {
                if let Some(mask) = allowed {
                    if !mask[j] {
                        continue;
                    }
                }
                if dist[j].is_infinite() {
                    dist[j] = dist[i] + 1.0;
                    queue.push_back(j);
                }
            }
        }
        dist
    };
    let mut in_outer = vec![false; n];
    for &i in outer {
        in_outer[i] = true;
    }
    let exterior: Vec<usize> = (0..n).filter(|&i| !in_outer[i]).collect();
    let d_in = bfs(inner, None);
    let d_out = if exterior.is_empty() {
        vec![f64::INFINITY; n]
    } else {
        bfs(&exterior, None)
    };
    let mut vals = vec![0.0; n];
    for i in 0..n {
        vals[i] = if d_in[i] == 0.0 {
            1.0
        } else if !in_outer[i] {
            0.0
        } else if d_out[i].is_finite() {
            d_out[i] / (d_out[i] + d_in[i])
        } else {
            1.0
        };
    }
    ScalarField::new(domain, vals)
}

/// Supersolution certificate: interior residual ≤ +tol, boundary ≥ −tol.
fn check_super(spec: &ProblemSpec, u: &ScalarField, tol: f64) -> Result<(bool, ResidualPair, Option<usize>)> {
    let r = residual(spec, u)?;
    let scale = tol * (1.0 + u.sup_norm());
    let mut worst: Option<(usize, f64)> = None;
    for &(i, v) in &r.interior {
        if v > scale && worst.map_or(true, |(_, w)| v > w) {
            worst = Some((i, v));
        }
    }
    for &(i, v) in &r.boundary {
        if -v > scale && worst.map_or(true, |(_, w)| -v > w) {
            worst = Some((i, -v));
        }
    }
    Ok((worst.is_none(), r, worst.map(|(i, _)| i)))
}

/// Subsolution certificate: interior residual ≥ −tol, boundary ≤ +tol.
fn check_sub(spec: &ProblemSpec, u: &ScalarField, tol: f64) -> Result<(bool, ResidualPair, Option<usize>)> {
    let r = residual(spec, u)?;
    let scale = tol * (1.0 + u.sup_norm());
    let mut worst: Option<(usize, f64)> = None;
    for &(i, v) in &r.interior {
        if -v > scale && worst.map_or(true, |(_, w)| -v > w) {
            worst = Some((i, -v));
        }
    }
    for &(i, v) in &r.boundary {
        if v > scale && worst.map_or(true, |(_, w)| v > w) {
            worst = Some((i, v));
        }
    }
    Ok((worst.is_none(), r, worst.map(|(i, _)| i)))
}

struct RegionPick {
    d_prime_idx: usize,
    d_idx: usize,
    zeta_d: f64,
    u1: Eigenpair,
    zeta_d_dirichlet: Option<f64>,
}

/// Deterministic scan for D′ ⊃⊃ B₀ and D ⊃⊃ D′ with ζ₁^L(D) > 0.
fn pick_regions(
    spec: &ProblemSpec,
    exhaustion: &Exhaustion,
    b0: &[usize],
) -> Result<RegionPick> {
    let domain = &spec.domain;
    let count = exhaustion.member_count();
    let contains = |member: &[usize], set: &[usize]| -> bool {
        let mut mask = vec![false; domain.node_count()];
        for &i in member {
            mask[i] = true;
        }
        set.iter().all(|&i| mask[i])
    };
    let d_prime_idx = (0..count)
        .find(|&k| contains(exhaustion.member(k), b0) && k + 1 < count)
        .ok_or_else(|| CoreError::HypothesisFailure {
            condition: "B0 compactly contained".into(),
            detail: "no proper exhaustion member contains {b <= 0}".into(),
        })?;
    for d_idx in d_prime_idx + 1..count {
        let member = exhaustion.member(d_idx);
        let pair = zaremba_first(domain, &spec.a, member)?;
        if pair.zeta > 0.0 {
            // the alternative Dirichlet condition applies when B₀ avoids ∂₁
            let b0_touches_boundary1 = b0
                .iter()
                .any(|&i| domain.class(i) == BoundaryClass::Boundary1);
            let zeta_d_dirichlet = if !b0.is_empty() && !b0_touches_boundary1 {
                dirichlet_first(domain, &spec.a, member).ok().map(|p| p.zeta)
            } else {
                None
            };
            return Ok(RegionPick {
                d_prime_idx,
                d_idx,
                zeta_d: pair.zeta,
                u1: pair.sup_normalized(),
                zeta_d_dirichlet,
            });
        }
    }
    Err(CoreError::HypothesisFailure {
        condition: "zeta1(D) > 0".into(),
        detail: "no exhaustion member strictly containing D' has a positive Zaremba eigenvalue"
            .into(),
    })
}

/// Node partition induced by the cutoff: exact-eigen core, exact-constant
/// deep tail, and the measured ramp in between.
struct Partition {
    #[allow(dead_code)]
    core: Vec<usize>,
    ramp: Vec<usize>,
    deep_tail: Vec<usize>,
}

fn partition_nodes(domain: &DiscreteDomain, psi: &ScalarField) -> Partition {
    let n = domain.node_count();
    let stencil_all = |i: usize, pred: &dyn Fn(usize) -> bool| -> bool {
        pred(i) && domain.neighbors(i).iter().all(|&(j, _)| pred(j))
    };
    let mut core = Vec::new();
    let mut ramp = Vec::new();
    let mut deep_tail = Vec::new();
    for i in 0..n {
        if domain.class(i) != BoundaryClass::Interior {
            continue;
        }
        if stencil_all(i, &|j| psi.get(j) == 1.0) {
            core.push(i);
        } else if stencil_all(i, &|j| psi.get(j) == 0.0) {
            deep_tail.push(i);
        } else {
            ramp.push(i);
        }
    }
    Partition { core, ramp, deep_tail }
}

/// Assemble `w = ψu₁ + (1−ψ)μ` and raise ∂₁ node values just enough to make
/// the stencil normal derivative nonnegative (the continuum proof has
/// ∂_ν u₁ = 0 exactly; the discrete eigenfunction only satisfies it weakly).
fn assemble_candidate(
    domain: &DiscreteDomain,
    psi: &ScalarField,
    u1_global: &ScalarField,
    mu: f64,
) -> Result<ScalarField> {
    let n = domain.node_count();
    let mut w: Vec<f64> = (0..n)
        .map(|i| psi.get(i) * u1_global.get(i) + (1.0 - psi.get(i)) * mu)
        .collect();
    for i in 0..n {
        if domain.class(i) != BoundaryClass::Boundary1 {
            continue;
        }
        let s = domain
            .normal_stencil(i)
            .ok_or_else(|| CoreError::invalid(format!("∂₁ node {i} lacks a normal stencil")))?;
        let dn = s.apply(&w);
        if dn < 0.0 {
            let own = s
                .coeffs
                .iter()
                .find(|&&(j, _)| j == i)
                .map(|&(_, c)| c)
                .unwrap_or(0.0);
            if own > 0.0 {
                w[i] += -dn / own;
            }
        }
    }
    ScalarField::new(domain, w)
}

pub fn build_supersolution(
    spec: &ProblemSpec,
    exhaustion: &Exhaustion,
    opts: &BarrierOptions,
) -> Result<SupersolutionBuild> {
    let domain: &Arc<DiscreteDomain> = &spec.domain;
    if opts.theta_grid.is_empty() || !(opts.tol > 0.0) {
        return Err(CoreError::invalid("barrier options need tol > 0 and a theta grid"));
    }
    let b0 = spec.b0_set();
    let pick = pick_regions(spec, exhaustion, &b0)?;
    let d_prime = exhaustion.member(pick.d_prime_idx).to_vec();
    let d_region = exhaustion.member(pick.d_idx).to_vec();
    let zeta = pick.zeta_d;
    let u1_global = pick.u1.scatter(domain);
    let psi = cutoff_ramp(domain, &d_prime, &d_region)?;
    let parts = partition_nodes(domain, &psi);

    // inf of u₁ over D′ and the sup of c there (core constants, μ-free)
    let inf_u1_dp = d_prime
        .iter()
        .map(|&i| u1_global.get(i))
        .fold(f64::INFINITY, f64::min);
    if !(inf_u1_dp > 0.0) {
        return Err(CoreError::NumericError(
            "eigenfunction vanished on D'".into(),
        ));
    }
    let e = spec.exponents;
    let xi = power(inf_u1_dp, e.tau - 1.0);
    let c_sup_dp = d_prime.iter().map(|&i| spec.c.get(i)).fold(0.0f64, f64::max);
    let b_minus_sup = spec.b.negative_part().sup_norm();

    // Γ over the deep tail: sup (a₊ + c)/b, requiring b > 0 wherever the
    // numerator is positive
    let mut gamma_cap = 0.0f64;
    for &i in &parts.deep_tail {
        let num = spec.a.get(i).max(0.0) + spec.c.get(i);
        if num == 0.0 {
            continue;
        }
        let den = spec.b.get(i);
        if den <= 0.0 {
            return Err(CoreError::HypothesisFailure {
                condition: "condsup iii (tail ratio)".into(),
                detail: format!("(a_+ + c)/b_+ unbounded at tail node {i}"),
            });
        }
        gamma_cap = gamma_cap.max(num / den);
    }
    let s_exp = e.sigma - 1.0;
    let t_exp = e.tau - 1.0;
    let lambda_0 = decreasing_root(|s| gamma_cap - power(s, s_exp) + gamma_cap * power(s, t_exp))?;

    // γ̄ from the sampled g-condition witness; heuristic when the sampling
    // was inconclusive
    let boundary1 = domain.boundary1_nodes();
    let (gamma_bar, heuristic) = if spec.g.is_zero() || boundary1.is_empty() {
        (0.0, false)
    } else {
        let grid: Vec<f64> = (0..61)
            .map(|i| 1e-6 * (1e12f64).powf(i as f64 / 60.0))
            .collect();
        let report = crate::fields::check_g_conditions(&spec.g, &grid, &boundary1)?;
        match report.cond_ii.witness {
            Some(w) => (w, false),
            None => (*grid.last().unwrap(), true),
        }
    };

    // branch on the interior analysis
    let branch = if b_minus_sup == 0.0 {
        SuperBranch::BMinusZero
    } else if c_sup_dp == 0.0 {
        SuperBranch::CZero
    } else {
        SuperBranch::General
    };

    // interior feasibility f_θ(η) = −ζ + θ‖b₋‖η^{σ−1} + ξ‖c‖_{D′}η^{τ−1}
    let f_theta = |theta: f64, eta: f64| -> f64 {
        -zeta + theta * b_minus_sup * power(eta, s_exp) + xi * c_sup_dp * power(eta, t_exp)
    };
    // branch value of η before the lower-bound clamp
    let branch_eta = |theta: f64| -> f64 {
        match branch {
            SuperBranch::General => {
                pq_minimizer(
                    PqParams::new(theta * b_minus_sup, xi * c_sup_dp, zeta, s_exp, t_exp)
                        .expect("positive by branch selection"),
                )
                .t_bar
            }
            SuperBranch::CZero => 0.5 * power(zeta / (theta * b_minus_sup), 1.0 / s_exp),
            SuperBranch::BMinusZero => {
                if xi * c_sup_dp == 0.0 {
                    1.0
                } else {
                    // f(η) ≤ −ζ/2 for η ≥ this
                    2.0f64.max(power(2.0 * xi * c_sup_dp / zeta, 1.0 / (1.0 - e.tau)))
                }
            }
        }
    };
    let (m1, m2) = match branch {
        SuperBranch::General => {
            // t̄(θ) = θ^{1/(τ−σ)} M₂ and the suflem cap θ < M₁
            let m2 = power(
                -t_exp * xi * c_sup_dp / (s_exp * b_minus_sup),
                1.0 / (s_exp - t_exp),
            );
            let margin1 = pq_margin(
                PqParams::new(b_minus_sup, xi * c_sup_dp, zeta, s_exp, t_exp).unwrap(),
            );
            // lhs scales as θ^{−q}: θ < (rhs/lhs_at_1)^{1/(−q)}
            let m1 = (margin1.rhs / margin1.lhs).powf(1.0 / (-t_exp));
            (m1, m2)
        }
        SuperBranch::CZero => (f64::INFINITY, power(zeta / b_minus_sup, 1.0 / s_exp) / 2.0),
        SuperBranch::BMinusZero => (f64::INFINITY, branch_eta(1.0)),
    };

    let mut mu = (2.0 * lambda_0).max(1.0);
    let mut escalations = 0u32;
    let mut last_worst: Option<usize> = None;
    let mut last_detail;
    loop {
        let w = assemble_candidate(domain, &psi, &u1_global, mu)?;
        // measured ramp constants; the ramp holds every node whose stencil
        // sees the cutoff vary, so H, ε, E are exact discrete bounds there
        let mut h_const = 0.0f64;
        let mut epsilon = f64::INFINITY;
        let mut e_const = 0.0f64;
        for &i in &parts.ramp {
            let lw = domain.laplacian_at(w.values(), i) + spec.a.get(i) * w.get(i);
            h_const = h_const.max(lw);
            epsilon = epsilon.min(spec.b.get(i) * power(w.get(i), e.sigma));
            e_const = e_const.max(spec.c.get(i) * power(w.get(i), e.tau));
        }
        if parts.ramp.is_empty() {
            epsilon = 1.0;
        }
        if !(epsilon > 0.0) {
            return Err(CoreError::HypothesisFailure {
                condition: "b > 0 off B0".into(),
                detail: "b not strictly positive on the cutoff ramp".into(),
            });
        }
        let lambda_1 =
            decreasing_root(|t| h_const - epsilon * power(t, s_exp) + e_const * power(t, t_exp))?;
        // the ∂₁ fix-up makes ∂_ν w ≥ 0 exactly, so K = 0 and the boundary
        // requirement reduces to g(x, ηw) ≤ 0, i.e. η ≥ γ̄/ρ
        let k_const = 0.0;
        let lambda_2 = 0.0;
        let rho = if boundary1.is_empty() {
            1.0
        } else {
            boundary1
                .iter()
                .map(|&i| w.get(i))
                .fold(f64::INFINITY, f64::min)
        };
        if !(rho > 0.0) {
            return Err(CoreError::NumericError("candidate vanished on ∂₁".into()));
        }
        let eta_req = 1.0f64.max(lambda_1).max(lambda_2).max(gamma_bar / rho);

        let feasible_eta = |theta: f64| -> Option<f64> {
            if theta >= m1 {
                return None;
            }
            let eta = branch_eta(theta).max(eta_req);
            if f_theta(theta, eta) <= 0.0 {
                Some(eta)
            } else {
                None
            }
        };
        let theta_0 = opts
            .theta_grid
            .iter()
            .cloned()
            .find(|&t| feasible_eta(t).is_some());

        let theta = spec.theta;
        if let Some(eta) = feasible_eta(theta) {
            let u_plus = ScalarField::new(domain, w.values().iter().map(|&v| eta * v).collect())?;
            let (ok, res, worst) = check_super(spec, &u_plus, opts.tol)?;
            if ok {
                let theta_0 = theta_0.unwrap_or(theta);
                let ledger = ConstantLedger {
                    theta_0,
                    theta,
                    eta,
                    mu,
                    xi,
                    rho,
                    gamma_bar,
                    lambda_0,
                    lambda_1,
                    lambda_2,
                    h_const,
                    k_const,
                    m1,
                    m2,
                    epsilon,
                    e_const,
                    zeta_d: zeta,
                    zeta_d_dirichlet: pick.zeta_d_dirichlet,
                    branch,
                    heuristic,
                    escalations,
                };
                return Ok(SupersolutionBuild {
                    u_plus,
                    theta_0,
                    ledger,
                    residual: res,
                    d_prime,
                    d_region,
                });
            }
            last_worst = worst;
            last_detail = format!(
                "certificate failed at node {:?} (interior max {:.3e}, boundary min {:.3e})",
                worst,
                res.interior_max(),
                res.boundary_min()
            );
        } else {
            last_detail = format!(
                "theta = {theta} infeasible (theta_0 on current grid: {:?}, eta_req = {eta_req:.3e})",
                theta_0
            );
        }
        escalations += 1;
        if escalations > ESCALATION_CAP {
            return Err(CoreError::ConstructionFailure {
                detail: format!("supersolution escalation cap reached: {last_detail}"),
                worst_node: last_worst,
            });
        }
        mu *= 2.0;
    }
}

/// The spec with `b` replaced by `b₊`: a subsolution certificate against it
/// serves every `b_θ` since `b₊ ≥ b_θ`.
fn b_plus_spec(spec: &ProblemSpec) -> Result<ProblemSpec> {
    ProblemSpec::new(
        spec.domain.clone(),
        spec.a.clone(),
        spec.b.positive_part(),
        spec.c.clone(),
        spec.exponents,
        spec.theta,
        spec.g.clone(),
    )
}

pub fn build_subsolution(
    spec: &ProblemSpec,
    exhaustion: &Exhaustion,
    opts: &BarrierOptions,
) -> Result<SubsolutionBuild> {
    let dual = dual_problem(spec)?;
    let dual_build = build_supersolution(&dual, exhaustion, opts)?;
    let plus = b_plus_spec(spec)?;
    let mut u_minus = dual_build.u_plus.map(|v| 1.0 / v);
    // halving preserves the subsolution property exactly (σ > 1 > τ and
    // non-increasing g/t), and strictly fattens the certificate where
    // b₊ > 0 or c > 0; it absorbs the discrete chain-rule error of 1/v
    for _ in 0..=ESCALATION_CAP {
        let (ok, res, worst) = check_sub(&plus, &u_minus, opts.tol)?;
        if ok {
            return Ok(SubsolutionBuild {
                u_minus,
                dual: dual_build,
                residual: res,
            });
        }
        if worst.is_none() {
            break;
        }
        u_minus = u_minus.map(|v| 0.5 * v);
    }
    let (_, res, worst) = check_sub(&plus, &u_minus, opts.tol)?;
    Err(CoreError::ConstructionFailure {
        detail: format!(
            "subsolution certificate unreachable (interior min {:.3e}, boundary max {:.3e})",
            res.interior_min(),
            res.boundary_max()
        ),
        worst_node: worst,
    })
}

/// `s·u⁻` with a re-verified certificate against the b₊ problem.
pub fn scale_subsolution(
    u_minus: &ScalarField,
    s: f64,
    spec: &ProblemSpec,
    tol: f64,
) -> Result<ScalarField> {
    if !(s > 0.0 && s < 1.0) {
        return Err(CoreError::invalid("scaling factor must lie in (0, 1)"));
    }
    let scaled = u_minus.map(|v| s * v);
    let plus = b_plus_spec(spec)?;
    let (ok, res, worst) = check_sub(&plus, &scaled, tol)?;
    if !ok {
        return Err(CoreError::ConstructionFailure {
            detail: format!(
                "scaled subsolution certificate failed (interior min {:.3e}, boundary max {:.3e})",
                res.interior_min(),
                res.boundary_max()
            ),
            worst_node: worst,
        });
    }
    Ok(scaled)
}

/// Scale the subsolution below the supersolution: `s = min(0.5·m/sup u⁻, 0.9)`
/// with `m = inf u⁺`.
pub fn order_barriers(
    sub: &SubsolutionBuild,
    sup: &SupersolutionBuild,
    spec: &ProblemSpec,
    tol: f64,
) -> Result<BarrierPair> {
    let m = sup.u_plus.min();
    if !(m > 0.0) {
        return Err(CoreError::invalid(
            "supersolution must be bounded below by a positive constant",
        ));
    }
    let sup_minus = sub.u_minus.max();
    let s = (0.5 * m / sup_minus).min(0.9);
    let u_minus = scale_subsolution(&sub.u_minus, s, spec, tol)?;
    for i in 0..u_minus.len() {
        if !(0.0 < u_minus.get(i) && u_minus.get(i) < sup.u_plus.get(i)) {
            return Err(CoreError::ConstructionFailure {
                detail: format!(
                    "barriers not strictly ordered at node {i}: {} vs {}",
                    u_minus.get(i),
                    sup.u_plus.get(i)
                ),
                worst_node: Some(i),
            });
        }
    }
    let plus = b_plus_spec(spec)?;
    let sub_residual = residual(&plus, &u_minus)?;
    Ok(BarrierPair {
        u_minus,
        u_plus: sup.u_plus.clone(),
        s,
        ledger: sup.ledger.clone(),
        sub_residual,
        super_residual: sup.residual.clone(),
        d_prime: sup.d_prime.clone(),
        d_region: sup.d_region.clone(),
    })
}
