//! Discrete domains: weighted graphs with node volumes, boundary classes,
//! and outward normal-derivative stencils.
//!
//! The discretization convention is measure-weighted: each node carries a
//! volume `v_i`, each edge a conductance `w_ij`, and the Laplacian acts as
//! `(Δu)_i = (1/v_i) Σ_j w_ij (u_j − u_i)`. This keeps the operator
//! symmetric under the volume inner product and nonpositive off the
//! diagonal, which is what the ordering arguments of the monotone scheme
//! need.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryClass {
    Interior,
    /// Artificial Dirichlet boundary (cuts through the interior of the
    /// underlying manifold).
    Boundary0,
    /// True manifold boundary, where the Neumann data lives.
    Boundary1,
}

/// One-sided stencil approximating the outward normal derivative at a
/// boundary node: `∂_ν u ≈ Σ (coeff · u_node)`. Coefficients sum to zero.
#[derive(Debug, Clone)]
pub struct NormalStencil {
    pub coeffs: Vec<(usize, f64)>,
}

impl NormalStencil {
    pub fn apply(&self, u: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * u[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StencilOrder {
    First,
    #[default]
    Second,
}

#[derive(Debug, Clone)]
pub struct DiscreteDomain {
    volumes: Vec<f64>,
    /// adjacency[i] = list of (neighbor, weight), symmetric
    adjacency: Vec<Vec<(usize, f64)>>,
    class: Vec<BoundaryClass>,
    /// boundary area weight, 0 at interior nodes
    area: Vec<f64>,
    normal: Vec<Option<NormalStencil>>,
    coords: Option<Vec<Vec<f64>>>,
}

impl DiscreteDomain {
    pub fn node_count(&self) -> usize {
        self.volumes.len()
    }

    pub fn volume(&self, i: usize) -> f64 {
        self.volumes[i]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn class(&self, i: usize) -> BoundaryClass {
        self.class[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn area_weight(&self, i: usize) -> f64 {
        self.area[i]
    }

    pub fn normal_stencil(&self, i: usize) -> Option<&NormalStencil> {
        self.normal[i].as_ref()
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.coords.as_ref().map(|c| c[i].as_slice())
    }

    pub fn nodes_of_class(&self, class: BoundaryClass) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.class[i] == class)
            .collect()
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        self.nodes_of_class(BoundaryClass::Interior)
    }

    pub fn boundary0_nodes(&self) -> Vec<usize> {
        self.nodes_of_class(BoundaryClass::Boundary0)
    }

    pub fn boundary1_nodes(&self) -> Vec<usize> {
        self.nodes_of_class(BoundaryClass::Boundary1)
    }

    /// `(Δu)_i = (1/v_i) Σ_j w_ij (u_j − u_i)`
    pub fn laplacian_at(&self, u: &[f64], i: usize) -> f64 {
        let mut acc = 0.0;
        for &(j, w) in &self.adjacency[i] {
            acc += w * (u[j] - u[i]);
        }
        acc / self.volumes[i]
    }

    /// Outward normal derivative at a boundary node.
    pub fn normal_derivative(&self, u: &[f64], i: usize) -> Result<f64> {
        self.normal[i]
            .as_ref()
            .map(|s| s.apply(u))
            .ok_or_else(|| CoreError::invalid(format!("node {i} has no normal stencil")))
    }

    /// A scalar "radius" per node used by threshold exhaustions: the
    /// first coordinate in 1D, the max coordinate in 2D.
    pub fn radius(&self, i: usize) -> Option<f64> {
        self.coords(i).map(|c| {
            c.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
        })
    }

    /// Clamp the manifold boundary too: turn every ∂₁ node into ∂₀.
    /// Used to pose the pure Dirichlet eigenproblem on the same mesh.
    pub fn reclass_boundary1_to_boundary0(&mut self) {
        for c in &mut self.class {
            if *c == BoundaryClass::Boundary1 {
                *c = BoundaryClass::Boundary0;
            }
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.node_count();
        for i in 0..n {
            if !(self.volumes[i] > 0.0) {
                return Err(CoreError::invalid(format!("nonpositive volume at node {i}")));
            }
            for &(j, w) in &self.adjacency[i] {
                if !(w > 0.0) {
                    return Err(CoreError::invalid(format!(
                        "nonpositive edge weight between {i} and {j}"
                    )));
                }
            }
            if self.class[i] != BoundaryClass::Interior {
                // corners of product meshes may only touch other boundary
                // nodes; the normal stencil still couples them inward
                if self.adjacency[i].is_empty() {
                    return Err(CoreError::invalid(format!(
                        "boundary node {i} is isolated"
                    )));
                }
                if let Some(s) = &self.normal[i] {
                    let csum: f64 = s.coeffs.iter().map(|&(_, c)| c).sum();
                    if csum.abs() > 1e-10 {
                        return Err(CoreError::invalid(format!(
                            "normal stencil at node {i} does not annihilate constants"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn one_sided_stencil(
    nodes: [usize; 3],
    h: f64,
    _outward_sign: f64,
    order: StencilOrder,
) -> NormalStencil {
    // nodes[0] is the boundary node, nodes[1], nodes[2] march inward, so
    // the outward derivative is the negated inward one-sided difference
    // regardless of which side of the domain the node sits on
    let coeffs = match order {
        StencilOrder::First => vec![(nodes[0], 1.0 / h), (nodes[1], -1.0 / h)],
        StencilOrder::Second => vec![
            (nodes[0], 3.0 / (2.0 * h)),
            (nodes[1], -4.0 / (2.0 * h)),
            (nodes[2], 1.0 / (2.0 * h)),
        ],
    };
    NormalStencil { coeffs }
}

/// Uniform 1D grid on `[0, length]`.
pub fn build_interval_mesh(
    length: f64,
    n: usize,
    left_class: BoundaryClass,
    right_class: BoundaryClass,
) -> Result<DiscreteDomain> {
    build_interval_mesh_with(length, n, left_class, right_class, StencilOrder::default())
}

pub fn build_interval_mesh_with(
    length: f64,
    n: usize,
    left_class: BoundaryClass,
    right_class: BoundaryClass,
    order: StencilOrder,
) -> Result<DiscreteDomain> {
    if n < 3 {
        return Err(CoreError::invalid("interval mesh needs n >= 3"));
    }
    if !(length > 0.0) {
        return Err(CoreError::invalid("interval length must be positive"));
    }
    if left_class == BoundaryClass::Interior || right_class == BoundaryClass::Interior {
        return Err(CoreError::invalid("endpoint class must be a boundary class"));
    }
    build_line_mesh(0.0, length, n, left_class, right_class, |_| 1.0, order)
}

/// Radial mesh for a rotationally symmetric `m`-manifold with metric
/// `dr² + warp(r)²·(unit sphere)`; the measure weight is `warp(r)^{m−1}`.
/// The node at `r0` is the manifold boundary (Boundary1), the node at `R`
/// an artificial Dirichlet cut (Boundary0).
pub fn build_radial_mesh(
    r0: f64,
    r_outer: f64,
    n: usize,
    warp: &dyn Fn(f64) -> f64,
    m: usize,
) -> Result<DiscreteDomain> {
    build_radial_mesh_with(r0, r_outer, n, warp, m, StencilOrder::default())
}

pub fn build_radial_mesh_with(
    r0: f64,
    r_outer: f64,
    n: usize,
    warp: &dyn Fn(f64) -> f64,
    m: usize,
    order: StencilOrder,
) -> Result<DiscreteDomain> {
    if n < 3 {
        return Err(CoreError::invalid("radial mesh needs n >= 3"));
    }
    if !(0.0 < r0 && r0 < r_outer) {
        return Err(CoreError::invalid("need 0 < r0 < R"));
    }
    if m < 2 {
        return Err(CoreError::invalid("manifold dimension m must be >= 2"));
    }
    let p = (m - 1) as i32;
    let weight = move |r: f64| -> Result<f64> {
        let w = warp(r);
        if !(w > 0.0) || !w.is_finite() {
            return Err(CoreError::invalid(format!(
                "warp function nonpositive at r = {r}"
            )));
        }
        Ok(w.powi(p))
    };
    build_line_mesh_checked(
        r0,
        r_outer,
        n,
        BoundaryClass::Boundary1,
        BoundaryClass::Boundary0,
        &weight,
        order,
    )
}

fn build_line_mesh(
    x0: f64,
    x1: f64,
    n: usize,
    left_class: BoundaryClass,
    right_class: BoundaryClass,
    weight: impl Fn(f64) -> f64,
    order: StencilOrder,
) -> Result<DiscreteDomain> {
    let w = |x: f64| -> Result<f64> { Ok(weight(x)) };
    build_line_mesh_checked(x0, x1, n, left_class, right_class, &w, order)
}

fn build_line_mesh_checked(
    x0: f64,
    x1: f64,
    n: usize,
    left_class: BoundaryClass,
    right_class: BoundaryClass,
    weight: &dyn Fn(f64) -> Result<f64>,
    order: StencilOrder,
) -> Result<DiscreteDomain> {
    let h = (x1 - x0) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| x0 + i as f64 * h).collect();
    let mut volumes = vec![0.0; n];
    for i in 0..n {
        let phi = weight(xs[i])?;
        volumes[i] = if i == 0 || i == n - 1 { phi * h / 2.0 } else { phi * h };
    }
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n - 1 {
        let phi_mid = weight(xs[i] + h / 2.0)?;
        let w = phi_mid / h;
        adjacency[i].push((i + 1, w));
        adjacency[i + 1].push((i, w));
    }
    let mut class = vec![BoundaryClass::Interior; n];
    class[0] = left_class;
    class[n - 1] = right_class;
    let mut area = vec![0.0; n];
    area[0] = weight(xs[0])?;
    area[n - 1] = weight(xs[n - 1])?;
    let mut normal = vec![None; n];
    normal[0] = Some(one_sided_stencil([0, 1, 2], h, -1.0, order));
    normal[n - 1] = Some(one_sided_stencil([n - 1, n - 2, n - 3], h, 1.0, order));
    let domain = DiscreteDomain {
        volumes,
        adjacency,
        class,
        area,
        normal,
        coords: Some(xs.into_iter().map(|x| vec![x]).collect()),
    };
    domain.check_invariants()?;
    Ok(domain)
}

/// Structured rectangle mesh on `[0,lx]×[0,ly]`, side classes given as
/// `[left, right, bottom, top]`. Corners take Boundary0 when either
/// adjacent side does.
pub fn build_rectangle_mesh(
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
    side_classes: [BoundaryClass; 4],
) -> Result<DiscreteDomain> {
    if nx < 3 || ny < 3 {
        return Err(CoreError::invalid("rectangle mesh needs nx, ny >= 3"));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(CoreError::invalid("rectangle sides must be positive"));
    }
    if side_classes.contains(&BoundaryClass::Interior) {
        return Err(CoreError::invalid("side class must be a boundary class"));
    }
    let hx = lx / (nx - 1) as f64;
    let hy = ly / (ny - 1) as f64;
    let n = nx * ny;
    let id = |i: usize, j: usize| j * nx + i;
    let extent_x = |i: usize| if i == 0 || i == nx - 1 { hx / 2.0 } else { hx };
    let extent_y = |j: usize| if j == 0 || j == ny - 1 { hy / 2.0 } else { hy };
    let mut volumes = vec![0.0; n];
    let mut coords = vec![Vec::new(); n];
    for j in 0..ny {
        for i in 0..nx {
            volumes[id(i, j)] = extent_x(i) * extent_y(j);
            coords[id(i, j)] = vec![i as f64 * hx, j as f64 * hy];
        }
    }
    let mut adjacency = vec![Vec::new(); n];
    for j in 0..ny {
        for i in 0..nx - 1 {
            let w = extent_y(j) / hx;
            adjacency[id(i, j)].push((id(i + 1, j), w));
            adjacency[id(i + 1, j)].push((id(i, j), w));
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            let w = extent_x(i) / hy;
            adjacency[id(i, j)].push((id(i, j + 1), w));
            adjacency[id(i, j + 1)].push((id(i, j), w));
        }
    }
    let [left, right, bottom, top] = side_classes;
    let merge = |a: BoundaryClass, b: BoundaryClass| {
        if a == BoundaryClass::Boundary0 || b == BoundaryClass::Boundary0 {
            BoundaryClass::Boundary0
        } else {
            BoundaryClass::Boundary1
        }
    };
    let mut class = vec![BoundaryClass::Interior; n];
    let mut area = vec![0.0; n];
    let mut normal: Vec<Option<NormalStencil>> = vec![None; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = id(i, j);
            let on_l = i == 0;
            let on_r = i == nx - 1;
            let on_b = j == 0;
            let on_t = j == ny - 1;
            if !(on_l || on_r || on_b || on_t) {
                continue;
            }
            let mut c: Option<BoundaryClass> = None;
            let mut stencils: Vec<NormalStencil> = Vec::new();
            if on_l {
                c = Some(left);
                stencils.push(one_sided_stencil([k, id(1, j), id(2, j)], hx, -1.0, StencilOrder::Second));
                area[k] += extent_y(j);
            }
            if on_r {
                c = Some(match c {
                    Some(prev) => merge(prev, right),
                    None => right,
                });
                stencils.push(one_sided_stencil(
                    [k, id(nx - 2, j), id(nx - 3, j)],
                    hx,
                    1.0,
                    StencilOrder::Second,
                ));
                area[k] += extent_y(j);
            }
            if on_b {
                c = Some(match c {
                    Some(prev) => merge(prev, bottom),
                    None => bottom,
                });
                stencils.push(one_sided_stencil([k, id(i, 1), id(i, 2)], hy, -1.0, StencilOrder::Second));
                area[k] += extent_x(i);
            }
            if on_t {
                c = Some(match c {
                    Some(prev) => merge(prev, top),
                    None => top,
                });
                stencils.push(one_sided_stencil(
                    [k, id(i, ny - 2), id(i, ny - 3)],
                    hy,
                    1.0,
                    StencilOrder::Second,
                ));
                area[k] += extent_x(i);
            }
            class[k] = c.unwrap();
            // corner nodes average the two side stencils
            let scale = 1.0 / stencils.len() as f64;
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for s in stencils {
                for (node, coeff) in s.coeffs {
                    if let Some(e) = coeffs.iter_mut().find(|(nn, _)| *nn == node) {
                        e.1 += coeff * scale;
                    } else {
                        coeffs.push((node, coeff * scale));
                    }
                }
            }
            normal[k] = Some(NormalStencil { coeffs });
        }
    }
    let domain = DiscreteDomain {
        volumes,
        adjacency,
        class,
        area,
        normal,
        coords: Some(coords),
    };
    domain.check_invariants()?;
    Ok(domain)
}

fn connected(domain: &DiscreteDomain, subset: &[usize]) -> bool {
    if subset.is_empty() {
        return false;
    }
    let n = domain.node_count();
    let mut in_set = vec![false; n];
    for &i in subset {
        in_set[i] = true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![subset[0]];
    seen[subset[0]] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        for &(j, _) in domain.neighbors(i) {
            if in_set[j] && !seen[j] {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == subset.len()
}

/// Restriction of a domain to a node subset. Retained nodes adjacent to an
/// excluded node become Boundary0; original Boundary1 nodes keep their
/// class. Returns the restricted domain and the old→new index map.
pub fn restrict(domain: &DiscreteDomain, subset: &[usize]) -> Result<(DiscreteDomain, Vec<usize>)> {
    let n = domain.node_count();
    let mut sorted: Vec<usize> = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(CoreError::invalid("empty restriction subset"));
    }
    if *sorted.last().unwrap() >= n {
        return Err(CoreError::invalid("restriction subset out of range"));
    }
    if !connected(domain, &sorted) {
        return Err(CoreError::invalid("restriction subset is disconnected"));
    }
    let mut old_to_new = vec![usize::MAX; n];
    for (new, &old) in sorted.iter().enumerate() {
        old_to_new[old] = new;
    }
    let m = sorted.len();
    let mut volumes = vec![0.0; m];
    let mut adjacency = vec![Vec::new(); m];
    let mut class = vec![BoundaryClass::Interior; m];
    let mut area = vec![0.0; m];
    let mut normal: Vec<Option<NormalStencil>> = vec![None; m];
    let coords = domain
        .coords
        .as_ref()
        .map(|c| sorted.iter().map(|&i| c[i].clone()).collect::<Vec<_>>());
    for (new, &old) in sorted.iter().enumerate() {
        volumes[new] = domain.volumes[old];
        area[new] = domain.area[old];
        let mut frontier = false;
        for &(j, w) in domain.neighbors(old) {
            if old_to_new[j] != usize::MAX {
                adjacency[new].push((old_to_new[j], w));
            } else {
                frontier = true;
            }
        }
        class[new] = match domain.class[old] {
            BoundaryClass::Boundary1 => BoundaryClass::Boundary1,
            BoundaryClass::Boundary0 => BoundaryClass::Boundary0,
            BoundaryClass::Interior if frontier => BoundaryClass::Boundary0,
            BoundaryClass::Interior => BoundaryClass::Interior,
        };
    }
    for (new, &old) in sorted.iter().enumerate() {
        if class[new] == BoundaryClass::Interior {
            continue;
        }
        // inherit the stencil when all of its nodes survive, otherwise fall
        // back to a first-order difference toward the strongest retained
        // neighbor
        let inherited = domain.normal[old].as_ref().and_then(|s| {
            let mut coeffs = Vec::with_capacity(s.coeffs.len());
            for &(j, c) in &s.coeffs {
                if old_to_new[j] == usize::MAX {
                    return None;
                }
                coeffs.push((old_to_new[j], c));
            }
            Some(NormalStencil { coeffs })
        });
        normal[new] = inherited.or_else(|| {
            let best = adjacency[new]
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|&(j, _)| j)?;
            let d = match (&coords, best) {
                (Some(cs), b) => {
                    let dist: f64 = cs[new]
                        .iter()
                        .zip(&cs[b])
                        .map(|(a, c)| (a - c) * (a - c))
                        .sum::<f64>()
                        .sqrt();
                    if dist > 0.0 { dist } else { 1.0 }
                }
                _ => 1.0,
            };
            Some(NormalStencil {
                coeffs: vec![(new, 1.0 / d), (best, -1.0 / d)],
            })
        });
    }
    let restricted = DiscreteDomain {
        volumes,
        adjacency,
        class,
        area,
        normal,
        coords,
    };
    Ok((restricted, old_to_new))
}

/// Growth policy for threshold exhaustions.
#[derive(Debug, Clone)]
pub enum GrowthPolicy {
    /// Radius thresholds at `k·r_max/count`, `k = 1..count`.
    UniformRadius,
    /// Explicit radius thresholds, strictly increasing; the last must cover
    /// the whole mesh.
    Thresholds(Vec<f64>),
}

/// Nested node subsets exhausting the domain, with nesting ∂₁ parts.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    members: Vec<Vec<usize>>,
}

impl Exhaustion {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn member(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    /// Complement of member `k` in the full node set.
    pub fn tail(&self, k: usize, node_count: usize) -> Vec<usize> {
        let mut in_member = vec![false; node_count];
        for &i in &self.members[k] {
            in_member[i] = true;
        }
        (0..node_count).filter(|&i| !in_member[i]).collect()
    }
}

pub fn build_exhaustion(
    domain: &DiscreteDomain,
    count: usize,
    policy: GrowthPolicy,
) -> Result<Exhaustion> {
    if count < 2 {
        return Err(CoreError::invalid("exhaustion needs count >= 2"));
    }
    let n = domain.node_count();
    let radii: Vec<f64> = (0..n)
        .map(|i| {
            domain
                .radius(i)
                .ok_or_else(|| CoreError::invalid("exhaustion needs node coordinates"))
        })
        .collect::<Result<_>>()?;
    let rmax = radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let thresholds: Vec<f64> = match policy {
        GrowthPolicy::UniformRadius => (1..=count)
            .map(|k| rmax * k as f64 / count as f64)
            .collect(),
        GrowthPolicy::Thresholds(t) => {
            if t.len() != count {
                return Err(CoreError::invalid("threshold list length != count"));
            }
            t
        }
    };
    let mut members = Vec::with_capacity(count);
    for (k, &t) in thresholds.iter().enumerate() {
        let t = if k + 1 == thresholds.len() { t.max(rmax) } else { t };
        let member: Vec<usize> = (0..n).filter(|&i| radii[i] <= t + 1e-12).collect();
        members.push(member);
    }
    // strict nesting; equal consecutive members mean there were not enough
    // distinguishable shells for the requested count
    for k in 0..members.len() - 1 {
        if members[k].len() >= members[k + 1].len() {
            return Err(CoreError::invalid(format!(
                "exhaustion members {k} and {} are not strictly nested (too few shells for count {count})",
                k + 1
            )));
        }
    }
    if members.last().unwrap().len() != n {
        return Err(CoreError::invalid("last exhaustion member must cover the domain"));
    }
    // members must be restrictable (connected)
    for m in &members {
        if !connected(domain, m) {
            return Err(CoreError::invalid("exhaustion member is disconnected"));
        }
    }
    // ∂₁ parts must nest: since members nest as sets and ∂₁ classes are
    // inherited, it suffices that each member contains the previous one.
    for k in 0..members.len() - 1 {
        let inner: std::collections::HashSet<usize> = members[k].iter().cloned().collect();
        if !members[k + 1].iter().any(|i| !inner.contains(i)) {
            return Err(CoreError::invalid("exhaustion nesting violated"));
        }
        if !inner.iter().all(|i| members[k + 1].contains(i)) {
            return Err(CoreError::invalid("exhaustion nesting violated"));
        }
    }
    Ok(Exhaustion { members })
}
