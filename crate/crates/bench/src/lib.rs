//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use lichsolve_core::mesh::{build_exhaustion, build_radial_mesh, GrowthPolicy};
use lichsolve_core::{
    BoundaryClass, BoundaryNonlinearity, DiscreteDomain, Exhaustion, Exponents, ProblemSpec,
    ScalarField,
};
use lichsolve_core::fields::PowerTerm;
use lichsolve_core::mesh::build_interval_mesh;

/// Unit interval, Dirichlet left / Neumann right, a ≡ 0.
pub fn interval_fixture(n: usize) -> (Arc<DiscreteDomain>, ScalarField) {
    let d = Arc::new(
        build_interval_mesh(1.0, n, BoundaryClass::Boundary0, BoundaryClass::Boundary1).unwrap(),
    );
    let a = ScalarField::constant(&d, 0.0);
    (d, a)
}

/// All-Neumann interval with a ≡ 0, b ≡ 1, c ≡ 1, σ = 5, τ = −7, g ≡ 0:
/// the exact solution is u ≡ 1.
pub fn constant_spec(n: usize) -> (Arc<DiscreteDomain>, ProblemSpec) {
    let d = Arc::new(
        build_interval_mesh(1.0, n, BoundaryClass::Boundary1, BoundaryClass::Boundary1).unwrap(),
    );
    let spec = ProblemSpec::new(
        d.clone(),
        ScalarField::constant(&d, 0.0),
        ScalarField::constant(&d, 1.0),
        ScalarField::constant(&d, 1.0),
        Exponents::new(5.0, -7.0).unwrap(),
        1.0,
        BoundaryNonlinearity::zero(),
    )
    .unwrap();
    (d, spec)
}

/// Radial 3-manifold fixture with boundary nonlinearity g(t) = t^{1/2} − t³
/// on the inner sphere, with a 4-member exhaustion.
pub fn radial_fixture(n: usize) -> (Arc<DiscreteDomain>, ProblemSpec, Exhaustion) {
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
