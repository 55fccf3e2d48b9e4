//! Coefficient fields, exponents, boundary nonlinearities, and the
//! hypothesis checkers: θ-modulation, the duality transform, defocusing
//! checks, and tail ratio estimates.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::mesh::{DiscreteDomain, Exhaustion};

/// One value per node of a referenced domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: &DiscreteDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(CoreError::invalid(format!(
                "field length {} does not match node count {}",
                values.len(),
                domain.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::invalid(format!("non-finite field value at node {i}")));
        }
        Ok(ScalarField { values })
    }

    pub fn constant(domain: &DiscreteDomain, value: f64) -> Self {
        ScalarField {
            values: vec![value; domain.node_count()],
        }
    }

    pub fn from_fn(domain: &DiscreteDomain, #[allow(unused_mut)] mut f: impl FnMut(usize) -> f64) -> Self {
        ScalarField {
            values: (0..domain.node_count()).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    /// Restrict to a node subset given the old→new map from `mesh::restrict`.
    pub fn restricted(&self, subset: &[usize]) -> Self {
        ScalarField {
            values: subset.iter().map(|&i| self.values[i]).collect(),
        }
    }

    /// CSV dump with columns (node id, coordinate(s), value).
    pub fn to_csv(&self, domain: &DiscreteDomain) -> String {
        let dim = domain.coords(0).map(|c| c.len()).unwrap_or(0);
        let mut out = String::from("node");
        for d in 0..dim {
            out.push_str(&format!(",x{d}"));
        }
        out.push_str(",value\n");
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&i.to_string());
            if let Some(c) = domain.coords(i) {
                for x in c {
                    out.push_str(&format!(",{x:.17e}"));
                }
            }
            out.push_str(&format!(",{v:.17e}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub sigma: f64,
    pub tau: f64,
}

impl Exponents {
    pub fn new(sigma: f64, tau: f64) -> Result<Self> {
        if !(tau < 1.0 && 1.0 < sigma) {
            return Err(CoreError::invalid(format!(
                "exponents must satisfy tau < 1 < sigma, got tau={tau}, sigma={sigma}"
            )));
        }
        Ok(Exponents { sigma, tau })
    }

    /// Dual exponents (σ̄, τ̄) = (2−τ, 2−σ); preserves τ̄ < 1 < σ̄.
    pub fn dual(self) -> Exponents {
        Exponents {
            sigma: 2.0 - self.tau,
            tau: 2.0 - self.sigma,
        }
    }
}

/// `t^p` specialized to integer exponents: the monotone loop evaluates
/// millions of powers and `powi` is much cheaper than `powf`.
#[inline]
pub fn power(t: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

#[derive(Debug, Clone)]
pub struct PowerTerm {
    pub coeff: ScalarField,
    pub exponent: f64,
}

type TabulatedEval = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Boundary nonlinearity `g(x, t)`, `t > 0`, evaluated at boundary nodes.
#[derive(Clone)]
pub enum BoundaryNonlinearity {
    /// `g(x,t) = Σ g_i(x) t^{q_i}` with strictly increasing exponents.
    PowerSum(Vec<PowerTerm>),
    /// Opaque evaluation contract `(node, t) → value`.
    Tabulated(TabulatedEval),
}

impl std::fmt::Debug for BoundaryNonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryNonlinearity::PowerSum(terms) => f
                .debug_struct("PowerSum")
                .field("exponents", &terms.iter().map(|t| t.exponent).collect::<Vec<_>>())
                .finish(),
            BoundaryNonlinearity::Tabulated(_) => f.write_str("Tabulated(..)"),
        }
    }
}

impl BoundaryNonlinearity {
    pub fn zero() -> Self {
        BoundaryNonlinearity::PowerSum(Vec::new())
    }

    pub fn power_sum(terms: Vec<PowerTerm>) -> Result<Self> {
        for w in terms.windows(2) {
            if !(w[0].exponent < w[1].exponent) {
                return Err(CoreError::invalid(
                    "power-sum exponents must be strictly increasing",
                ));
            }
        }
        Ok(BoundaryNonlinearity::PowerSum(terms))
    }

    pub fn eval(&self, node: usize, t: f64) -> f64 {
        match self {
            BoundaryNonlinearity::PowerSum(terms) => terms
                .iter()
                .map(|term| term.coeff.get(node) * power(t, term.exponent))
                .sum(),
            BoundaryNonlinearity::Tabulated(f) => f(node, t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BoundaryNonlinearity::PowerSum(terms) => terms
                .iter()
                .all(|t| t.coeff.values().iter().all(|&v| v == 0.0)),
            BoundaryNonlinearity::Tabulated(_) => false,
        }
    }

    /// Dual transform `ḡ(x,t) = −t² g(x, 1/t)`. Power sums map term by term
    /// to `(−g_i, 2−q_i)`, re-sorted by exponent.
    pub fn dual(&self) -> Self {
        match self {
            BoundaryNonlinearity::PowerSum(terms) => {
                let mut mapped: Vec<PowerTerm> = terms
                    .iter()
                    .map(|t| PowerTerm {
                        coeff: t.coeff.map(|v| -v),
                        exponent: 2.0 - t.exponent,
                    })
                    .collect();
                mapped.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
                BoundaryNonlinearity::PowerSum(mapped)
            }
            BoundaryNonlinearity::Tabulated(f) => {
                let f = f.clone();
                BoundaryNonlinearity::Tabulated(Arc::new(move |node, t| {
                    -t * t * f(node, 1.0 / t)
                }))
            }
        }
    }

    /// Closed-form slope of `t ↦ g(x,t)/t` for power sums:
    /// `Σ (q_i − 1) g_i(x) t^{q_i − 2}`.
    pub fn gt_slope_closed_form(&self, node: usize, t: f64) -> Option<f64> {
        match self {
            BoundaryNonlinearity::PowerSum(terms) => Some(
                terms
                    .iter()
                    .map(|term| (term.exponent - 1.0) * term.coeff.get(node) * power(t, term.exponent - 2.0))
                    .sum(),
            ),
            BoundaryNonlinearity::Tabulated(_) => None,
        }
    }
}

/// The full data of the boundary value problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub domain: Arc<DiscreteDomain>,
    pub a: ScalarField,
    pub b: ScalarField,
    pub c: ScalarField,
    pub exponents: Exponents,
    pub theta: f64,
    pub g: BoundaryNonlinearity,
}

impl ProblemSpec {
    pub fn new(
        domain: Arc<DiscreteDomain>,
        a: ScalarField,
        b: ScalarField,
        c: ScalarField,
        exponents: Exponents,
        theta: f64,
        g: BoundaryNonlinearity,
    ) -> Result<Self> {
        let n = domain.node_count();
        for (name, f) in [("a", &a), ("b", &b), ("c", &c)] {
            if f.len() != n {
                return Err(CoreError::invalid(format!(
                    "coefficient {name} length mismatch"
                )));
            }
        }
        if let Some(i) = c.values().iter().position(|&v| v < 0.0) {
            return Err(CoreError::invalid(format!("c must be nonnegative (node {i})")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(CoreError::invalid("theta must lie in (0, 1]"));
        }
        Ok(ProblemSpec {
            domain,
            a,
            b,
            c,
            exponents,
            theta,
            g,
        })
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(CoreError::invalid("theta must lie in (0, 1]"));
        }
        let mut s = self.clone();
        s.theta = theta;
        Ok(s)
    }

    /// `b_θ = b₊ − θ·b₋` for this spec's θ.
    pub fn effective_b(&self) -> ScalarField {
        b_theta(&self.b, self.theta).expect("theta validated at construction")
    }

    /// `B₀ = {b ≤ 0}`
    pub fn b0_set(&self) -> Vec<usize> {
        (0..self.b.len()).filter(|&i| self.b.get(i) <= 0.0).collect()
    }

    /// `C₀ = {c = 0}`
    pub fn c0_set(&self) -> Vec<usize> {
        (0..self.c.len()).filter(|&i| self.c.get(i) == 0.0).collect()
    }

    /// Interior reaction term `f(x, u) = a·u − b_θ·u^σ + c·u^τ` at one node.
    pub fn reaction(&self, b_theta: &ScalarField, node: usize, u: f64) -> f64 {
        let e = self.exponents;
        self.a.get(node) * u - b_theta.get(node) * power(u, e.sigma)
            + self.c.get(node) * power(u, e.tau)
    }
}

/// `b_θ(x) = b₊(x) − θ·b₋(x)`
pub fn b_theta(b: &ScalarField, theta: f64) -> Result<ScalarField> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(CoreError::invalid("theta must lie in (0, 1]"));
    }
    Ok(b.map(|v| v.max(0.0) - theta * (-v).max(0.0)))
}

/// The §-duality: (a, b, c, σ, τ, g) → (−a, c, b₊, 2−τ, 2−σ, −t²g(x,1/t)).
/// Supersolutions of the dual problem map to subsolutions of the primal via
/// reciprocals.
pub fn dual_problem(spec: &ProblemSpec) -> Result<ProblemSpec> {
    let dual_exp = spec.exponents.dual();
    debug_assert!(dual_exp.tau < 1.0 && 1.0 < dual_exp.sigma);
    ProblemSpec::new(
        spec.domain.clone(),
        spec.a.map(|v| -v),
        spec.c.clone(),
        spec.b.positive_part(),
        dual_exp,
        spec.theta,
        spec.g.dual(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The sampled evidence was inconclusive; never promoted to Pass.
    Unverified,
}

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub status: CheckStatus,
    /// True when the verdict relies on extrapolation beyond the samples.
    pub heuristic: bool,
    pub witness: Option<f64>,
    pub detail: String,
}

impl ConditionCheck {
    fn new(status: CheckStatus, heuristic: bool, witness: Option<f64>, detail: impl Into<String>) -> Self {
        ConditionCheck {
            status,
            heuristic,
            witness,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// Report for the strongly-defocusing conditions on a power sum.
#[derive(Debug, Clone)]
pub struct DefocusingReport {
    pub cond_i: bool,
    pub cond_i_witness: Option<(usize, usize)>,
    pub cond_ii: bool,
    pub cond_iii: bool,
    pub k_index: Option<usize>,
    pub h_index: Option<usize>,
    pub offending_node: Option<usize>,
    /// sup-norms of g_i/g_k for q_i ≤ 1 and g_i/g_h for q_i ≥ 1
    pub ratio_sups: Vec<(usize, f64)>,
}

impl DefocusingReport {
    pub fn strongly_defocusing(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_iii
    }
}

pub fn check_defocusing(
    g: &BoundaryNonlinearity,
    boundary_nodes: &[usize],
) -> Result<DefocusingReport> {
    let terms = match g {
        BoundaryNonlinearity::PowerSum(t) => t,
        BoundaryNonlinearity::Tabulated(_) => {
            return Err(CoreError::invalid(
                "defocusing check requires power-sum form",
            ))
        }
    };
    let mut cond_i = true;
    let mut cond_i_witness = None;
    for (ti, term) in terms.iter().enumerate() {
        for &x in boundary_nodes {
            if (term.exponent - 1.0) * term.coeff.get(x) > 0.0 {
                cond_i = false;
                cond_i_witness = Some((ti, x));
                break;
            }
        }
        if !cond_i {
            break;
        }
    }
    let nonzero_everywhere = |ti: usize| -> Option<usize> {
        boundary_nodes
            .iter()
            .find(|&&x| terms[ti].coeff.get(x) == 0.0)
            .copied()
    };
    let mut offending_node = None;
    let mut pick = |pred: &dyn Fn(f64) -> bool| -> Option<usize> {
        for (ti, term) in terms.iter().enumerate() {
            if pred(term.exponent) {
                match nonzero_everywhere(ti) {
                    None => return Some(ti),
                    Some(x) => offending_node = Some(x),
                }
            }
        }
        None
    };
    let k_index = pick(&|q| q > 1.0);
    let h_index = pick(&|q| q < 1.0);
    let mut ratio_sups = Vec::new();
    let ratio_sup = |num: usize, den: usize| -> f64 {
        boundary_nodes
            .iter()
            .map(|&x| (terms[num].coeff.get(x) / terms[den].coeff.get(x)).abs())
            .fold(0.0f64, f64::max)
    };
    let cond_ii = k_index.is_some();
    let cond_iii = h_index.is_some();
    if let Some(k) = k_index {
        for (ti, term) in terms.iter().enumerate() {
            if term.exponent <= 1.0 {
                ratio_sups.push((ti, ratio_sup(ti, k)));
            }
        }
    }
    if let Some(h) = h_index {
        for (ti, term) in terms.iter().enumerate() {
            if term.exponent >= 1.0 {
                ratio_sups.push((ti, ratio_sup(ti, h)));
            }
        }
    }
    Ok(DefocusingReport {
        cond_i,
        cond_i_witness,
        cond_ii,
        cond_iii,
        k_index,
        h_index,
        offending_node,
        ratio_sups,
    })
}

/// Sampled verification of the four growth conditions on `g` plus nodewise
/// non-increase of `t ↦ g(x,t)/t`.
#[derive(Debug, Clone)]
pub struct GConditionReport {
    /// g(x,ω) ≥ 0 for all small ω, witness ω̄
    pub cond_i: ConditionCheck,
    /// g(x,γ) ≤ 0 for all large γ, witness γ̄
    pub cond_ii: ConditionCheck,
    /// g(x,s)/s → +∞ as s → 0⁺
    pub cond_iii: ConditionCheck,
    /// g(x,t)/t → −∞ as t → ∞
    pub cond_iv: ConditionCheck,
    pub gt_non_increasing: bool,
    pub gt_violation: Option<(usize, f64)>,
}

pub fn check_g_conditions(
    g: &BoundaryNonlinearity,
    t_grid: &[f64],
    boundary_nodes: &[usize],
) -> Result<GConditionReport> {
    if t_grid.len() < 3 {
        return Err(CoreError::invalid("t grid needs at least 3 points"));
    }
    for w in t_grid.windows(2) {
        if !(w[0] > 0.0 && w[0] < w[1]) {
            return Err(CoreError::invalid("t grid must be positive and strictly increasing"));
        }
    }
    if boundary_nodes.is_empty() {
        return Err(CoreError::invalid("no boundary nodes to check g on"));
    }
    let min_g = |t: f64| -> f64 {
        boundary_nodes
            .iter()
            .map(|&x| g.eval(x, t))
            .fold(f64::INFINITY, f64::min)
    };
    let max_g = |t: f64| -> f64 {
        boundary_nodes
            .iter()
            .map(|&x| g.eval(x, t))
            .fold(f64::NEG_INFINITY, f64::max)
    };

    // i: nonnegative on a prefix of the grid
    let prefix_end = t_grid.iter().take_while(|&&t| min_g(t) >= 0.0).count();
    let cond_i = if prefix_end > 0 {
        ConditionCheck::new(
            CheckStatus::Pass,
            true,
            Some(t_grid[prefix_end - 1]),
            format!("g >= 0 on the {prefix_end} smallest samples"),
        )
    } else {
        ConditionCheck::new(
            CheckStatus::Unverified,
            true,
            None,
            "g negative already at the smallest sample",
        )
    };

    // ii: nonpositive on a suffix of the grid
    let suffix_len = t_grid.iter().rev().take_while(|&&t| max_g(t) <= 0.0).count();
    let cond_ii = if suffix_len > 0 {
        ConditionCheck::new(
            CheckStatus::Pass,
            true,
            Some(t_grid[t_grid.len() - suffix_len]),
            format!("g <= 0 on the {suffix_len} largest samples"),
        )
    } else {
        ConditionCheck::new(
            CheckStatus::Unverified,
            true,
            None,
            "g positive at the largest sample",
        )
    };

    // iii: g/s blowing up at 0⁺ — judged from the trend on the smallest samples
    let small: Vec<f64> = t_grid.iter().take(3).map(|&t| min_g(t) / t).collect();
    let cond_iii = if small[0] > small[1] && small[1] > small[2] && small[0] > 0.0 {
        ConditionCheck::new(CheckStatus::Pass, true, Some(small[0]), "g/s increasing toward 0+")
    } else if small[0] <= small[1] && small[1] <= small[2] {
        ConditionCheck::new(CheckStatus::Fail, true, None, "g/s not increasing toward 0+")
    } else {
        ConditionCheck::new(CheckStatus::Unverified, true, None, "mixed trend near 0+")
    };

    // iv: g/t diverging to −∞ — trend on the largest samples
    let m = t_grid.len();
    let large: Vec<f64> = t_grid[m - 3..].iter().map(|&t| max_g(t) / t).collect();
    let cond_iv = if large[0] > large[1] && large[1] > large[2] && large[2] < 0.0 {
        ConditionCheck::new(CheckStatus::Pass, true, Some(large[2]), "g/t decreasing at infinity")
    } else if large[0] <= large[1] && large[1] <= large[2] {
        ConditionCheck::new(CheckStatus::Fail, true, None, "g/t not decreasing at infinity")
    } else {
        ConditionCheck::new(CheckStatus::Unverified, true, None, "mixed trend at infinity")
    };

    // nodewise non-increase of g/t on every consecutive grid pair
    let mut gt_non_increasing = true;
    let mut gt_violation = None;
    'outer: for &x in boundary_nodes {
        for w in t_grid.windows(2) {
            let r0 = g.eval(x, w[0]) / w[0];
            let r1 = g.eval(x, w[1]) / w[1];
            let scale = 1.0 + r0.abs().max(r1.abs());
            if r1 > r0 + 1e-12 * scale {
                gt_non_increasing = false;
                gt_violation = Some((x, w[1]));
                break 'outer;
            }
        }
    }

    Ok(GConditionReport {
        cond_i,
        cond_ii,
        cond_iii,
        cond_iv,
        gt_non_increasing,
        gt_violation,
    })
}

/// Tail suprema of the coefficient ratios on each exhaustion complement.
#[derive(Debug, Clone)]
pub struct TailRatioReport {
    /// sup over the tail of (a₊ + c)/b₊, one entry per member
    pub ratio_iii: Vec<f64>,
    /// sup over the tail of (a₋ + b₊)/c
    pub ratio_iv: Vec<f64>,
}

pub fn asymptotic_ratio_report(spec: &ProblemSpec, exhaustion: &Exhaustion) -> TailRatioReport {
    let n = spec.domain.node_count();
    let sup_ratio = |tail: &[usize], num: &dyn Fn(usize) -> f64, den: &dyn Fn(usize) -> f64| -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for &i in tail {
            let d = den(i);
            if d <= 0.0 {
                return f64::INFINITY;
            }
            sup = sup.max(num(i) / d);
        }
        sup
    };
    let mut ratio_iii = Vec::new();
    let mut ratio_iv = Vec::new();
    for k in 0..exhaustion.member_count() {
        let tail = exhaustion.tail(k, n);
        ratio_iii.push(sup_ratio(
            &tail,
            &|i| spec.a.get(i).max(0.0) + spec.c.get(i),
            &|i| spec.b.get(i).max(0.0),
        ));
        ratio_iv.push(sup_ratio(
            &tail,
            &|i| (-spec.a.get(i)).max(0.0) + spec.b.get(i).max(0.0),
            &|i| spec.c.get(i),
        ));
    }
    TailRatioReport { ratio_iii, ratio_iv }
}
