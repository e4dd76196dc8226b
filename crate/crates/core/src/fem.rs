//! Piecewise-linear finite elements for plane elasticity with a clamped part,
//! a loaded part and a contact part of the boundary.
//!
//! Unknowns are nodal displacements, two per node (`2 * node + component`).
//! Dirichlet dofs are eliminated, so every vector handled by the solvers lives
//! in the reduced space of free dofs; [`DiscreteSystem::expand`] maps back to
//! nodal fields.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, energy_norm, BandCholesky, CsrMatrix};
use crate::mesh::{contact_weights, BoundaryTag, Mesh};

/// Symmetric 2x2 tensor stored as a full matrix.
pub type Tensor2 = [[f64; 2]; 2];

pub fn tensor_dot(a: &Tensor2, b: &Tensor2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Constitutive map from strains to stresses. Assembly assumes the map is
/// linear.
pub trait Elasticity {
    fn stress(&self, strain: &Tensor2) -> Tensor2;
}

/// Isotropic material with Young modulus `e` and Poisson ratio `kappa`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub e: f64,
    pub kappa: f64,
}

impl Material {
    pub fn new(e: f64, kappa: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::Material(format!("Young modulus must be positive, got {e}")));
        }
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(Error::Material(format!(
                "Poisson ratio must lie in (0, 1/2), got {kappa}"
            )));
        }
        Ok(Material { e, kappa })
    }

    /// Coefficient of the trace term, `E k / ((1 + k)(1 - 2k))`.
    pub fn trace_coefficient(&self) -> f64 {
        self.e * self.kappa / ((1.0 + self.kappa) * (1.0 - 2.0 * self.kappa))
    }

    /// Coefficient of the identity term, `E / (1 + k)`.
    pub fn shear_coefficient(&self) -> f64 {
        self.e / (1.0 + self.kappa)
    }

    /// Strong monotonicity constant of the elasticity tensor.
    pub fn monotonicity_constant(&self) -> f64 {
        self.shear_coefficient()
    }

    /// Lipschitz constant of the elasticity tensor (its largest eigenvalue,
    /// attained on spherical tensors).
    pub fn lipschitz_constant(&self) -> f64 {
        self.shear_coefficient() + 2.0 * self.trace_coefficient()
    }
}

impl Elasticity for Material {
    fn stress(&self, w: &Tensor2) -> Tensor2 {
        elasticity_apply(self, w)
    }
}

/// `(F w)_ij = E k / ((1+k)(1-2k)) (w_11 + w_22) d_ij + E / (1+k) w_ij`
pub fn elasticity_apply(material: &Material, w: &Tensor2) -> Tensor2 {
    let tr = material.trace_coefficient() * (w[0][0] + w[1][1]);
    let g = material.shear_coefficient();
    [
        [tr + g * w[0][0], g * w[0][1]],
        [g * w[1][0], tr + g * w[1][1]],
    ]
}

/// Identity on tensors; assembling with it yields the V-inner-product matrix.
struct StrainInner;

impl Elasticity for StrainInner {
    fn stress(&self, w: &Tensor2) -> Tensor2 {
        *w
    }
}

/// Gradients of the three barycentric basis functions of triangle `t`.
pub fn basis_gradients(mesh: &Mesh, t: usize) -> Result<([[f64; 2]; 3], f64)> {
    let area = mesh.signed_area(t);
    if !(area > 0.0) {
        return Err(Error::DegenerateElement { element: t, area });
    }
    let [p0, p1, p2] = mesh.triangles[t].map(|n| mesh.nodes[n]);
    let pts = [p0, p1, p2];
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let (pj, pk) = (pts[(i + 1) % 3], pts[(i + 2) % 3]);
        grads[i] = [(pj[1] - pk[1]) / (2.0 * area), (pk[0] - pj[0]) / (2.0 * area)];
    }
    Ok((grads, area))
}

/// Constant strain of a P1 field given its element dof values
/// `[u0x, u0y, u1x, u1y, u2x, u2y]`.
pub fn element_strain(grads: &[[f64; 2]; 3], dofs: &[f64; 6]) -> Tensor2 {
    let mut du = [[0.0; 2]; 2]; // du[c][d] = d u_c / d x_d
    for (i, g) in grads.iter().enumerate() {
        for c in 0..2 {
            for d in 0..2 {
                du[c][d] += dofs[2 * i + c] * g[d];
            }
        }
    }
    let off = 0.5 * (du[0][1] + du[1][0]);
    [[du[0][0], off], [off, du[1][1]]]
}

fn element_matrix(grads: &[[f64; 2]; 3], area: f64, op: &impl Elasticity) -> [[f64; 6]; 6] {
    let strains: [Tensor2; 6] = std::array::from_fn(|a| {
        let mut unit = [0.0; 6];
        unit[a] = 1.0;
        element_strain(grads, &unit)
    });
    let stresses = strains.map(|s| op.stress(&s));
    let mut ke = [[0.0; 6]; 6];
    for a in 0..6 {
        for b in 0..6 {
            ke[a][b] = area * tensor_dot(&stresses[a], &strains[b]);
        }
    }
    ke
}

fn element_dofs(tri: &[usize; 3]) -> [usize; 6] {
    std::array::from_fn(|k| 2 * tri[k / 2] + k % 2)
}

/// Assembles `int_Omega F eps(u) : eps(v)` over all nodal dofs (no
/// elimination).
pub fn assemble_full_matrix(mesh: &Mesh, op: &impl Elasticity) -> Result<CsrMatrix> {
    let n = 2 * mesh.num_nodes();
    let mut triplets = Vec::with_capacity(36 * mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (grads, area) = basis_gradients(mesh, t)?;
        let ke = element_matrix(&grads, area, op);
        let dofs = element_dofs(tri);
        for a in 0..6 {
            for b in 0..6 {
                triplets.push((dofs[a], dofs[b], ke[a][b]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Consistent L2 mass matrix of the trace on the edges with the given tags,
/// over all nodal dofs.
pub fn assemble_boundary_mass(mesh: &Mesh, tags: &[BoundaryTag]) -> CsrMatrix {
    let n = 2 * mesh.num_nodes();
    let mut triplets = Vec::new();
    for e in mesh.boundary_edges.iter().filter(|e| tags.contains(&e.tag)) {
        let len = mesh.edge_length(e.nodes);
        for (a, &na) in e.nodes.iter().enumerate() {
            for (b, &nb) in e.nodes.iter().enumerate() {
                let m = if a == b { len / 3.0 } else { len / 6.0 };
                for c in 0..2 {
                    triplets.push((2 * na + c, 2 * nb + c, m));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Kinematic data of one node on the contact boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactNode {
    pub node: usize,
    /// Lumped quadrature weight (length).
    pub weight: f64,
    /// Reduced dof carrying the normal displacement, if not clamped.
    pub normal_dof: Option<usize>,
    /// `u_nu = normal_sign * u[normal_dof]`.
    pub normal_sign: f64,
    pub tangent_dof: Option<usize>,
    /// `u_tau = tangent_sign * u[tangent_dof]` (signed scalar along the edge).
    pub tangent_sign: f64,
}

/// Assembled linear-algebra form of the contact problem.
#[derive(Clone, Debug)]
pub struct DiscreteSystem {
    /// Elastic stiffness over free dofs.
    pub stiffness: CsrMatrix,
    /// Matrix of the V inner product `(eps(u), eps(v))` over free dofs.
    pub v_metric: CsrMatrix,
    pub load: Vec<f64>,
    /// L2 mass of the trace on the whole boundary, over free dofs.
    pub boundary_mass: CsrMatrix,
    /// Full nodal dof -> free dof.
    pub free_index: Vec<Option<usize>>,
    pub dirichlet_dofs: Vec<usize>,
    pub contact: Vec<ContactNode>,
    pub friction_bound: f64,
    /// Outward unit normal of the (straight) contact boundary.
    pub normal: [f64; 2],
    pub contact_measure: f64,
}

/// Outward normal shared by all contact edges; it must be axis aligned so the
/// normal and tangential components are single dofs.
fn contact_normal(mesh: &Mesh) -> Result<[f64; 2]> {
    let mut normal: Option<[f64; 2]> = None;
    for e in mesh.edges_tagged(BoundaryTag::Contact) {
        let (p, q) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
        let len = mesh.edge_length(e.nodes);
        let n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
        let n = n.map(|c| if c.abs() < 1e-12 { 0.0 } else { c.round() });
        if n[0].abs() + n[1].abs() != 1.0 {
            return Err(Error::Parameter(format!(
                "contact edge {:?} is not axis aligned",
                e.nodes
            )));
        }
        match normal {
            None => normal = Some(n),
            Some(m) if m != n => {
                return Err(Error::Parameter("contact boundary must be a single straight side".into()))
            }
            _ => {}
        }
    }
    normal.ok_or_else(|| Error::Parameter("mesh has no contact boundary".into()))
}

/// Assembles the system for the linear elastic material.
pub fn assemble(
    mesh: &Mesh,
    material: &Material,
    body_force: [f64; 2],
    traction: [f64; 2],
    friction_bound: f64,
) -> Result<DiscreteSystem> {
    assemble_with(mesh, material, body_force, traction, friction_bound)
}

pub fn assemble_with(
    mesh: &Mesh,
    op: &impl Elasticity,
    body_force: [f64; 2],
    traction: [f64; 2],
    friction_bound: f64,
) -> Result<DiscreteSystem> {
    if !(friction_bound >= 0.0 && friction_bound.is_finite()) {
        return Err(Error::Parameter(format!(
            "friction bound must be nonnegative, got {friction_bound}"
        )));
    }
    let n_full = 2 * mesh.num_nodes();
    let k_full = assemble_full_matrix(mesh, op)?;
    let m_full = assemble_full_matrix(mesh, &StrainInner)?;
    let b_full = assemble_boundary_mass(
        mesh,
        &[BoundaryTag::Dirichlet, BoundaryTag::Neumann, BoundaryTag::Contact],
    );

    let mut load_full = vec![0.0; n_full];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t);
        for &n in tri {
            for c in 0..2 {
                load_full[2 * n + c] += body_force[c] * area / 3.0;
            }
        }
    }
    for e in mesh.edges_tagged(BoundaryTag::Neumann) {
        let len = mesh.edge_length(e.nodes);
        for &n in &e.nodes {
            for c in 0..2 {
                load_full[2 * n + c] += traction[c] * len / 2.0;
            }
        }
    }

    let mut dirichlet_dofs: Vec<usize> = mesh
        .nodes_tagged(BoundaryTag::Dirichlet)
        .into_iter()
        .flat_map(|n| [2 * n, 2 * n + 1])
        .collect();
    dirichlet_dofs.sort_unstable();
    let mut free_index = vec![None; n_full];
    let mut n_free = 0;
    for (dof, slot) in free_index.iter_mut().enumerate() {
        if dirichlet_dofs.binary_search(&dof).is_err() {
            *slot = Some(n_free);
            n_free += 1;
        }
    }

    let normal = contact_normal(mesh)?;
    let tangent = [-normal[1], normal[0]];
    let axis = |v: [f64; 2]| if v[0] != 0.0 { (0, v[0]) } else { (1, v[1]) };
    let (n_axis, n_sign) = axis(normal);
    let (t_axis, t_sign) = axis(tangent);
    let contact = contact_weights(mesh)
        .into_iter()
        .map(|(node, weight)| ContactNode {
            node,
            weight,
            normal_dof: free_index[2 * node + n_axis],
            normal_sign: n_sign,
            tangent_dof: free_index[2 * node + t_axis],
            tangent_sign: t_sign,
        })
        .collect();

    let load = (0..n_full)
        .filter_map(|d| free_index[d].map(|_| load_full[d]))
        .collect();

    Ok(DiscreteSystem {
        stiffness: k_full.restrict(&free_index, n_free),
        v_metric: m_full.restrict(&free_index, n_free),
        load,
        boundary_mass: b_full.restrict(&free_index, n_free),
        free_index,
        dirichlet_dofs,
        contact,
        friction_bound,
        normal,
        contact_measure: mesh.boundary_measure(BoundaryTag::Contact),
    })
}

impl DiscreteSystem {
    /// Number of free dofs.
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.free_index.len() / 2
    }

    /// Nodal displacement field (clamped dofs zero) from a reduced vector.
    pub fn expand(&self, u: &[f64]) -> Vec<[f64; 2]> {
        assert_eq!(u.len(), self.dim());
        (0..self.num_nodes())
            .map(|n| [0, 1].map(|c| self.free_index[2 * n + c].map_or(0.0, |k| u[k])))
            .collect()
    }

    /// Reduced vector from a nodal field; clamped values are dropped.
    pub fn restrict(&self, field: &[[f64; 2]]) -> Result<Vec<f64>> {
        if field.len() != self.num_nodes() {
            return Err(Error::Dimension {
                expected: self.num_nodes(),
                found: field.len(),
            });
        }
        let mut u = vec![0.0; self.dim()];
        for (n, d) in field.iter().enumerate() {
            for c in 0..2 {
                if let Some(k) = self.free_index[2 * n + c] {
                    u[k] = d[c];
                }
            }
        }
        Ok(u)
    }

    pub fn v_norm(&self, u: &[f64]) -> f64 {
        energy_norm(&self.v_metric, u)
    }

    pub fn load_norm(&self) -> f64 {
        dot(&self.load, &self.load).sqrt()
    }

    pub fn normal_displacement(&self, u: &[f64], c: &ContactNode) -> f64 {
        c.normal_dof.map_or(0.0, |k| c.normal_sign * u[k])
    }

    pub fn tangential_displacement(&self, u: &[f64], c: &ContactNode) -> f64 {
        c.tangent_dof.map_or(0.0, |k| c.tangent_sign * u[k])
    }

    /// Largest positive normal displacement on the contact boundary.
    pub fn max_penetration(&self, u: &[f64]) -> f64 {
        self.contact
            .iter()
            .map(|c| self.normal_displacement(u, c))
            .fold(0.0, f64::max)
    }

    /// Box bounds `lower <= u <= upper` describing `u_nu <= 0` at every
    /// contact node.
    pub fn feasible_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![f64::NEG_INFINITY; self.dim()];
        let mut upper = vec![f64::INFINITY; self.dim()];
        for c in &self.contact {
            if let Some(k) = c.normal_dof {
                if c.normal_sign > 0.0 {
                    upper[k] = 0.0;
                } else {
                    lower[k] = 0.0;
                }
            }
        }
        (lower, upper)
    }

    /// Euclidean projection onto the discrete constraint set (nodal clamp).
    pub fn project_feasible(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        for c in &self.contact {
            if let Some(k) = c.normal_dof {
                if c.normal_sign * v[k] > 0.0 {
                    v[k] = 0.0;
                }
            }
        }
        v
    }

    pub fn is_feasible(&self, u: &[f64], tol: f64) -> bool {
        self.contact
            .iter()
            .all(|c| self.normal_displacement(u, c) <= tol)
    }

    /// Friction functional `sum_i w_i F_b |u_tau,i|`.
    pub fn friction_functional(&self, u: &[f64]) -> f64 {
        self.contact
            .iter()
            .map(|c| c.weight * self.friction_bound * self.tangential_displacement(u, c).abs())
            .sum()
    }
}

/// Normal and tangential displacement at one contact node of a nodal field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalTangential {
    pub node: usize,
    pub normal: f64,
    /// Euclidean norm of the tangential part.
    pub tangential: f64,
}

/// `u_nu = u . nu` and `|u_tau| = |u - u_nu nu|` at every contact node.
pub fn normal_tangential(system: &DiscreteSystem, field: &[[f64; 2]]) -> Result<Vec<NormalTangential>> {
    system
        .contact
        .iter()
        .map(|c| normal_tangential_at(system, field, c.node))
        .collect()
}

pub fn normal_tangential_at(
    system: &DiscreteSystem,
    field: &[[f64; 2]],
    node: usize,
) -> Result<NormalTangential> {
    if field.len() != system.num_nodes() {
        return Err(Error::Dimension {
            expected: system.num_nodes(),
            found: field.len(),
        });
    }
    if !system.contact.iter().any(|c| c.node == node) {
        return Err(Error::NotContactNode(node));
    }
    let u = field[node];
    let nu = system.normal;
    let un = u[0] * nu[0] + u[1] * nu[1];
    let tau = [u[0] - un * nu[0], u[1] - un * nu[1]];
    Ok(NormalTangential {
        node,
        normal: un,
        tangential: tau[0].hypot(tau[1]),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PowerIterationOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for PowerIterationOptions {
    fn default() -> Self {
        PowerIterationOptions {
            rel_tol: 1e-8,
            max_iters: 100_000,
        }
    }
}

/// Best discrete constant `d0` in `|v|_{L2(Gamma)} <= d0 |v|_V`: the square
/// root of the largest eigenvalue of `B x = mu M_V x`, by power iteration on
/// `M_V^{-1} B`.
pub fn estimate_trace_constant(system: &DiscreteSystem, opts: PowerIterationOptions) -> Result<f64> {
    let chol = BandCholesky::factor(&system.v_metric)?;
    let b = &system.boundary_mass;
    let mut x = vec![1.0; system.dim()];
    let mut mu_prev = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iters {
        let bx = b.mul_vec(&x);
        let mut y = bx.clone();
        chol.solve_in_place(&mut y);
        // Rayleigh quotient of the current iterate
        let mx = system.v_metric.mul_vec(&x);
        let mu = dot(&x, &bx) / dot(&x, &mx);
        let scale = energy_norm(&system.v_metric, &y);
        if scale == 0.0 {
            return Ok(0.0);
        }
        x = y.into_iter().map(|v| v / scale).collect();
        change = ((mu - mu_prev) / mu).abs();
        if change <= opts.rel_tol {
            return Ok(mu.sqrt());
        }
        mu_prev = mu;
    }
    Err(Error::PowerIteration {
        iterations: opts.max_iters,
        change,
    })
}

/// Outcome of the uniqueness (smallness) check `d0^2 |F_b|_{L2(Gamma_3)} < m_F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallnessReport {
    pub d0: f64,
    pub friction_l2: f64,
    pub lhs: f64,
    pub m_f: f64,
    pub passes: bool,
}

impl fmt::Display for SmallnessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "smallness: d0 = {:.6e}, |F_b|_L2 = {:.6e}, d0^2 |F_b| = {:.6e} {} m_F = {:.6e} => {}",
            self.d0,
            self.friction_l2,
            self.lhs,
            if self.passes { "<" } else { ">=" },
            self.m_f,
            if self.passes { "PASS" } else { "FAIL" }
        )
    }
}

pub fn check_smallness(system: &DiscreteSystem, d0: f64, material: &Material) -> SmallnessReport {
    let friction_l2 = system.friction_bound * system.contact_measure.sqrt();
    let lhs = d0 * d0 * friction_l2;
    let m_f = material.monotonicity_constant();
    SmallnessReport {
        d0,
        friction_l2,
        lhs,
        m_f,
        passes: lhs < m_f,
    }
}
