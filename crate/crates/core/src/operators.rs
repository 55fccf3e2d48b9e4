//! The discrete Schrödinger operator `L = Δ + a(x)`, residual evaluation
//! for the semilinear problem, and the H/K-shifted linear solves driving
//! the monotone iteration.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::fields::{power, ProblemSpec, ScalarField};
use crate::linalg::{self, Factorized, Triplets};
use crate::mesh::{BoundaryClass, DiscreteDomain};

/// `L = Δ + a(x)` with row metadata. Interior rows apply the weighted-graph
/// Laplacian plus the diagonal; boundary rows carry the outward normal
/// stencil.
pub struct SchrodingerOperator {
    domain: Arc<DiscreteDomain>,
    a: ScalarField,
}

impl SchrodingerOperator {
    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn coefficient(&self) -> &ScalarField {
        &self.a
    }

    /// Row-wise action: `(Δ + a)u` at interior rows, `∂_ν u` at boundary
    /// rows.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.domain.node_count();
        if u.len() != n {
            return Err(CoreError::invalid("field length mismatch"));
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = match self.domain.class(i) {
                BoundaryClass::Interior => {
                    self.domain.laplacian_at(u, i) + self.a.get(i) * u[i]
                }
                _ => self.domain.normal_derivative(u, i)?,
            };
        }
        Ok(out)
    }

    /// Coordinate-list text dump of the interior operator rows.
    pub fn to_coo_text(&self) -> String {
        let mut t = Triplets::new(self.domain.node_count());
        for i in 0..self.domain.node_count() {
            if self.domain.class(i) != BoundaryClass::Interior {
                continue;
            }
            let v = self.domain.volume(i);
            let mut diag = self.a.get(i);
            for &(j, w) in self.domain.neighbors(i) {
                t.push(i, j, w / v);
                diag -= w / v;
            }
            t.push(i, i, diag);
        }
        t.to_coo_text()
    }
}

pub fn assemble_schrodinger(
    domain: Arc<DiscreteDomain>,
    a: ScalarField,
) -> Result<SchrodingerOperator> {
    if a.len() != domain.node_count() {
        return Err(CoreError::invalid("coefficient length does not match domain"));
    }
    Ok(SchrodingerOperator { domain, a })
}

/// Interior and boundary residuals of the semilinear problem, carried as
/// (node, value) pairs over the Interior and ∂₁ node sets.
#[derive(Debug, Clone)]
pub struct ResidualPair {
    pub interior: Vec<(usize, f64)>,
    pub boundary: Vec<(usize, f64)>,
}

impl ResidualPair {
    pub fn interior_sup(&self) -> f64 {
        self.interior.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()))
    }

    pub fn boundary_sup(&self) -> f64 {
        self.boundary.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()))
    }

    pub fn interior_min(&self) -> f64 {
        self.interior.iter().fold(f64::INFINITY, |m, &(_, v)| m.min(v))
    }

    pub fn interior_max(&self) -> f64 {
        self.interior.iter().fold(f64::NEG_INFINITY, |m, &(_, v)| m.max(v))
    }

    pub fn boundary_min(&self) -> f64 {
        self.boundary.iter().fold(f64::INFINITY, |m, &(_, v)| m.min(v))
    }

    pub fn boundary_max(&self) -> f64 {
        self.boundary.iter().fold(f64::NEG_INFINITY, |m, &(_, v)| m.max(v))
    }
}

/// Residual of `u` under the spec's equation: `Lu − b_θ u^σ + c u^τ` at
/// interior nodes and `∂_ν u − g(x,u)` at ∂₁ nodes. ∂₀ nodes are excluded.
pub fn residual(spec: &ProblemSpec, u: &ScalarField) -> Result<ResidualPair> {
    let domain = &spec.domain;
    let n = domain.node_count();
    if u.len() != n {
        return Err(CoreError::invalid("field length mismatch"));
    }
    if let Some(i) = u.values().iter().position(|&v| v <= 0.0) {
        return Err(CoreError::DomainError {
            node: i,
            reason: format!("residual requires u > 0, got {}", u.get(i)),
        });
    }
    let bt = spec.effective_b();
    let e = spec.exponents;
    let uv = u.values();
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for i in 0..n {
        match domain.class(i) {
            BoundaryClass::Interior => {
                let lu = domain.laplacian_at(uv, i) + spec.a.get(i) * uv[i];
                let r = lu - bt.get(i) * power(uv[i], e.sigma) + spec.c.get(i) * power(uv[i], e.tau);
                interior.push((i, r));
            }
            BoundaryClass::Boundary1 => {
                let dn = domain.normal_derivative(uv, i)?;
                boundary.push((i, dn - spec.g.eval(i, uv[i])));
            }
            BoundaryClass::Boundary0 => {}
        }
    }
    Ok(ResidualPair { interior, boundary })
}

/// Factored H/K-shifted linear problem:
///   (Δ + a − H)v = −interior_rhs   at Interior rows,
///   (∂_ν + K)v  = boundary_rhs    at ∂₁ rows,
///   v = dirichlet                  at ∂₀ rows.
/// The factorization is reusable across right-hand sides.
pub struct ShiftedSolve {
    domain: Arc<DiscreteDomain>,
    triplets: Triplets,
    factor: Factorized,
}

impl ShiftedSolve {
    pub fn new(
        domain: Arc<DiscreteDomain>,
        a: &ScalarField,
        shift_h: f64,
        shift_k: f64,
    ) -> Result<Self> {
        let n = domain.node_count();
        if a.len() != n {
            return Err(CoreError::invalid("coefficient length does not match domain"));
        }
        if shift_h < 0.0 || shift_k < 0.0 {
            return Err(CoreError::invalid("shifts H, K must be nonnegative"));
        }
        let mut t = Triplets::new(n);
        for i in 0..n {
            match domain.class(i) {
                BoundaryClass::Interior => {
                    let v = domain.volume(i);
                    let mut diag = a.get(i) - shift_h;
                    for &(j, w) in domain.neighbors(i) {
                        t.push(i, j, w / v);
                        diag -= w / v;
                    }
                    t.push(i, i, diag);
                }
                BoundaryClass::Boundary1 => {
                    let s = domain.normal_stencil(i).ok_or_else(|| {
                        CoreError::invalid(format!("∂₁ node {i} lacks a normal stencil"))
                    })?;
                    for &(j, c) in &s.coeffs {
                        t.push(i, j, c);
                    }
                    t.push(i, i, shift_k);
                }
                BoundaryClass::Boundary0 => {
                    t.push(i, i, 1.0);
                }
            }
        }
        let factor = linalg::factor(&t).map_err(|e| match e {
            CoreError::NumericError(msg) => CoreError::NumericError(format!(
                "shifted system singular (H={shift_h}, K={shift_k}): {msg}"
            )),
            other => other,
        })?;
        Ok(ShiftedSolve {
            domain,
            triplets: t,
            factor,
        })
    }

    /// Solve for the given right-hand sides. `interior_rhs` is read at
    /// Interior nodes, `boundary_rhs` at ∂₁ nodes, `dirichlet` at ∂₀ nodes.
    pub fn solve(
        &self,
        interior_rhs: &[f64],
        boundary_rhs: &[f64],
        dirichlet: &[f64],
    ) -> Result<Vec<f64>> {
        let n = self.domain.node_count();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            rhs[i] = match self.domain.class(i) {
                BoundaryClass::Interior => -interior_rhs[i],
                BoundaryClass::Boundary1 => boundary_rhs[i],
                BoundaryClass::Boundary0 => dirichlet[i],
            };
        }
        self.factor.solve(&rhs)
    }

    /// Relative residual of a candidate solution, for post-hoc certification.
    pub fn relative_residual(
        &self,
        v: &[f64],
        interior_rhs: &[f64],
        boundary_rhs: &[f64],
        dirichlet: &[f64],
    ) -> f64 {
        let n = self.domain.node_count();
        let mut ax = vec![0.0; n];
        for &(i, j, w) in &self.triplets.entries {
            ax[i] += w * v[j];
        }
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in 0..n {
            let b = match self.domain.class(i) {
                BoundaryClass::Interior => -interior_rhs[i],
                BoundaryClass::Boundary1 => boundary_rhs[i],
                BoundaryClass::Boundary0 => dirichlet[i],
            };
            num = num.max((ax[i] - b).abs());
            den = den.max(b.abs()).max(ax[i].abs());
        }
        num / (1.0 + den)
    }
}

/// One-shot shifted solve with a residual certificate.
#[allow(clippy::too_many_arguments)]
pub fn solve_shifted(
    domain: Arc<DiscreteDomain>,
    a: &ScalarField,
    shift_h: f64,
    shift_k: f64,
    interior_rhs: &ScalarField,
    boundary_rhs: &ScalarField,
    dirichlet: &ScalarField,
) -> Result<ScalarField> {
    let solver = ShiftedSolve::new(domain.clone(), a, shift_h, shift_k)?;
    let v = solver.solve(interior_rhs.values(), boundary_rhs.values(), dirichlet.values())?;
    let rel = solver.relative_residual(
        &v,
        interior_rhs.values(),
        boundary_rhs.values(),
        dirichlet.values(),
    );
    if rel > 1e-10 {
        return Err(CoreError::NumericError(format!(
            "linear solve residual {rel:.3e} exceeds 1e-10"
        )));
    }
    ScalarField::new(&domain, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BoundaryNonlinearity, Exponents};
    use crate::mesh::{build_interval_mesh, BoundaryClass};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn interval(n: usize) -> Arc<DiscreteDomain> {
        Arc::new(
            build_interval_mesh(1.0, n, BoundaryClass::Boundary0, BoundaryClass::Boundary1)
                .unwrap(),
        )
    }

    #[test]
    fn constant_annihilation_and_diagonal_action() {
        let d = interval(21);
        let zero = ScalarField::constant(&d, 0.0);
        let op = assemble_schrodinger(d.clone(), zero).unwrap();
        let u = vec![4.2; 21];
        let lu = op.apply(&u).unwrap();
        for i in d.interior_nodes() {
            assert!(lu[i].abs() < 1e-12);
        }
        let three = ScalarField::constant(&d, 3.0);
        let op3 = assemble_schrodinger(d.clone(), three).unwrap();
        let ones = vec![1.0; 21];
        let lu3 = op3.apply(&ones).unwrap();
        for i in d.interior_nodes() {
            assert!((lu3[i] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_second_derivative() {
        let n = 201;
        let d = interval(n);
        let zero = ScalarField::constant(&d, 0.0);
        let op = assemble_schrodinger(d.clone(), zero).unwrap();
        let pi = std::f64::consts::PI;
        let u: Vec<f64> = (0..n).map(|i| (pi * i as f64 / (n - 1) as f64).sin()).collect();
        let lu = op.apply(&u).unwrap();
        let h = 1.0 / (n - 1) as f64;
        for i in d.interior_nodes() {
            let exact = -pi * pi * u[i];
            assert!((lu[i] - exact).abs() < 2.0 * pi.powi(4) * h * h, "node {i}");
        }
    }

    #[test]
    fn self_adjointness_under_volume_inner_product() {
        let n = 40;
        let d = interval(n);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = ScalarField::from_fn(&d, |_| rng.gen_range(-2.0..2.0));
        let op = assemble_schrodinger(d.clone(), a).unwrap();
        for _ in 0..20 {
            // interior-supported fields
            let mut u = vec![0.0; n];
            let mut w = vec![0.0; n];
            for i in d.interior_nodes() {
                u[i] = rng.gen_range(-1.0..1.0);
                w[i] = rng.gen_range(-1.0..1.0);
            }
            let lu = op.apply(&u).unwrap();
            let lw = op.apply(&w).unwrap();
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for i in d.interior_nodes() {
                lhs += d.volume(i) * lu[i] * w[i];
                rhs += d.volume(i) * u[i] * lw[i];
            }
            assert!((lhs - rhs).abs() <= 1e-10, "asymmetry {}", (lhs - rhs).abs());
        }
    }

    fn const_spec(d: Arc<DiscreteDomain>, a: f64, b: f64, c: f64) -> ProblemSpec {
        let af = ScalarField::constant(&d, a);
        let bf = ScalarField::constant(&d, b);
        let cf = ScalarField::constant(&d, c);
        ProblemSpec::new(
            d,
            af,
            bf,
            cf,
            Exponents::new(5.0, -7.0).unwrap(),
            1.0,
            BoundaryNonlinearity::zero(),
        )
        .unwrap()
    }

    #[test]
    fn residual_of_exact_constant_solution() {
        let d = interval(11);
        let spec = const_spec(d.clone(), 0.0, 1.0, 1.0);
        let u = ScalarField::constant(&d, 1.0);
        let r = residual(&spec, &u).unwrap();
        assert!(r.interior_sup() < 1e-12);
        assert!(r.boundary_sup() < 1e-12);
    }

    #[test]
    fn residual_constant_formula_value() {
        let d = interval(11);
        let spec = const_spec(d.clone(), 0.0, 1.0, 1.0);
        let u = ScalarField::constant(&d, 2.0);
        let r = residual(&spec, &u).unwrap();
        let expected = -(2.0f64.powi(5)) + 2.0f64.powi(-7);
        assert!((expected - (-31.9921875)).abs() < 1e-12);
        for &(_, v) in &r.interior {
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_rejects_nonpositive_field() {
        let d = interval(11);
        let spec = const_spec(d.clone(), 0.0, 1.0, 1.0);
        let mut vals = vec![1.0; 11];
        vals[4] = -0.5;
        let u = ScalarField::new(&d, vals).unwrap();
        match residual(&spec, &u) {
            Err(CoreError::DomainError { node, .. }) => assert_eq!(node, 4),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn shifted_solve_constant_dirichlet() {
        // a≡0, H=1: (Δ−1)v = −1 with v=1 on ∂₀ → v ≡ 1
        let d = Arc::new(
            build_interval_mesh(1.0, 21, BoundaryClass::Boundary0, BoundaryClass::Boundary0)
                .unwrap(),
        );
        let a = ScalarField::constant(&d, 0.0);
        let one = ScalarField::constant(&d, 1.0);
        let v = solve_shifted(d.clone(), &a, 1.0, 0.0, &one, &ScalarField::constant(&d, 0.0), &one)
            .unwrap();
        for i in 0..21 {
            assert!((v.get(i) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shifted_solve_constant_robin() {
        // K=1, boundary_rhs = 1 at ∂₁, right Dirichlet 1, interior rhs 0 → v ≡ 1
        let d = Arc::new(
            build_interval_mesh(1.0, 21, BoundaryClass::Boundary1, BoundaryClass::Boundary0)
                .unwrap(),
        );
        let a = ScalarField::constant(&d, 0.0);
        let zero = ScalarField::constant(&d, 0.0);
        let one = ScalarField::constant(&d, 1.0);
        let v = solve_shifted(d.clone(), &a, 0.0, 1.0, &zero, &one, &one).unwrap();
        for i in 0..21 {
            assert!((v.get(i) - 1.0).abs() < 1e-10, "node {i}: {}", v.get(i));
        }
    }

    #[test]
    fn manufactured_solution_recovery() {
        // v*(x) = 1 + x²: build the rhs by applying the operator, solve, recover
        let n = 101;
        let d = Arc::new(
            build_interval_mesh(1.0, n, BoundaryClass::Boundary0, BoundaryClass::Boundary1)
                .unwrap(),
        );
        let a = ScalarField::from_fn(&d, |i| 0.5 + 0.1 * d.coords(i).unwrap()[0]);
        let h_shift = 2.0;
        let k_shift = 0.7;
        let vstar: Vec<f64> = (0..n)
            .map(|i| {
                let x = d.coords(i).unwrap()[0];
                1.0 + x * x
            })
            .collect();
        let mut interior_rhs = vec![0.0; n];
        let mut boundary_rhs = vec![0.0; n];
        for i in 0..n {
            match d.class(i) {
                BoundaryClass::Interior => {
                    interior_rhs[i] = -(d.laplacian_at(&vstar, i)
                        + (a.get(i) - h_shift) * vstar[i]);
                }
                BoundaryClass::Boundary1 => {
                    boundary_rhs[i] =
                        d.normal_derivative(&vstar, i).unwrap() + k_shift * vstar[i];
                }
                BoundaryClass::Boundary0 => {}
            }
        }
        let v = solve_shifted(
            d.clone(),
            &a,
            h_shift,
            k_shift,
            &ScalarField::new(&d, interior_rhs).unwrap(),
            &ScalarField::new(&d, boundary_rhs).unwrap(),
            &ScalarField::new(&d, vstar.clone()).unwrap(),
        )
        .unwrap();
        for i in 0..n {
            assert!((v.get(i) - vstar[i]).abs() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn comparison_property_randomized() {
        // interior_rhs ≥ 0, boundary_rhs ≥ 0, dirichlet ≥ 0 ⇒ v ≥ 0.
        // A violation means loss of inverse positivity and is build-breaking.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..100 {
            let n = rng.gen_range(8..60);
            let d = Arc::new(
                build_interval_mesh(
                    rng.gen_range(0.5..3.0),
                    n,
                    BoundaryClass::Boundary1,
                    BoundaryClass::Boundary0,
                )
                .unwrap(),
            );
            let a = ScalarField::from_fn(&d, |_| rng.gen_range(-1.0..0.5));
            let h_shift = rng.gen_range(1.0..5.0);
            let k_shift = rng.gen_range(0.0..2.0);
            let interior_rhs = ScalarField::from_fn(&d, |_| rng.gen::<f64>());
            let boundary_rhs = ScalarField::from_fn(&d, |_| rng.gen::<f64>());
            let dirichlet = ScalarField::from_fn(&d, |_| rng.gen::<f64>());
            let v = solve_shifted(d.clone(), &a, h_shift, k_shift, &interior_rhs, &boundary_rhs, &dirichlet);
            let v = match v {
                Ok(v) => v,
                Err(e) => panic!("trial {trial}: {e}"),
            };
            for i in 0..n {
                assert!(
                    v.get(i) >= -1e-10,
                    "trial {trial}: comparison property violated at node {i}: {}",
                    v.get(i)
                );
            }
        }
    }
}
