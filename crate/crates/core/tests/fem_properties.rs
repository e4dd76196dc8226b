use contact_penalty::fem::{
    assemble, assemble_full_matrix, assemble_with, basis_gradients, check_smallness, element_strain,
    elasticity_apply, estimate_trace_constant, Elasticity, Material, PowerIterationOptions, Tensor2,
};
use contact_penalty::linalg::{dot, BandCholesky};
use contact_penalty::mesh::rect_mesh;
use contact_penalty::energy::dual_norm_ratio;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_material() -> Material {
    Material::new(12_000.0, 0.42).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `E * omega`, the tensor for `kappa = 0`.
struct Scaled(f64);

impl Elasticity for Scaled {
    fn stress(&self, w: &Tensor2) -> Tensor2 {
        [[self.0 * w[0][0], self.0 * w[0][1]], [self.0 * w[1][0], self.0 * w[1][1]]]
    }
}

fn dense(m: &contact_penalty::CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j))
}

#[test]
fn elasticity_tensor_closed_forms() {
    let m = default_material();
    let c1 = 12_000.0 * 0.42 / (1.42 * (1.0 - 0.84));
    let c2 = 12_000.0 / 1.42;
    let id = elasticity_apply(&m, &[[1.0, 0.0], [0.0, 1.0]]);
    assert!((id[0][0] - (2.0 * c1 + c2)).abs() <= 1e-12 * id[0][0]);
    assert!((id[0][0] - 52_816.90).abs() <= 1e-6 * 52_816.90);
    assert_eq!(id[0][1], 0.0);
    let dev = elasticity_apply(&m, &[[1.0, 0.0], [0.0, -1.0]]);
    assert!((dev[0][0] - c2).abs() <= 1e-12 * c2);
    assert!((dev[1][1] + c2).abs() <= 1e-12 * c2);
    assert!((m.monotonicity_constant() - 8450.704225352113).abs() < 1e-9);
    assert!((m.lipschitz_constant() - (2.0 * c1 + c2)).abs() <= 1e-12 * m.lipschitz_constant());
}

#[test]
fn matrices_are_symmetric() {
    let sys = assemble(&rect_mesh(2.0, 1.0, 1.0 / 16.0).unwrap(), &default_material(), [-200.0, -800.0], [0.0; 2], 10.0).unwrap();
    for m in [&sys.stiffness, &sys.v_metric, &sys.boundary_mass] {
        assert!(m.asymmetry() <= 1e-12 * m.max_abs());
    }
}

#[test]
fn reduced_stiffness_is_positive_definite() {
    let sys = assemble(&rect_mesh(2.0, 1.0, 1.0 / 16.0).unwrap(), &default_material(), [0.0; 2], [0.0; 2], 0.0).unwrap();
    assert!(BandCholesky::factor(&sys.stiffness).is_ok());
    assert!(BandCholesky::factor(&sys.v_metric).is_ok());
}

#[test]
fn unit_square_spectrum() {
    // E = 1, kappa = 0: the tensor is the identity
    let mesh = rect_mesh(1.0, 1.0, 0.5).unwrap();
    let full = dense(&assemble_full_matrix(&mesh, &Scaled(1.0)).unwrap());
    assert_eq!(full.nrows(), 18);
    let eig = full.symmetric_eigen().eigenvalues;
    // three rigid motions
    assert_eq!(eig.iter().filter(|v| v.abs() < 1e-12).count(), 3);
    assert!(eig.iter().all(|v| *v > -1e-12));

    let sys = assemble_with(&mesh, &Scaled(1.0), [0.0; 2], [0.0; 2], 0.0).unwrap();
    assert_eq!(sys.dim(), 12);
    let eig = dense(&sys.stiffness).symmetric_eigen().eigenvalues;
    assert!(eig.iter().all(|v| *v > 1e-6), "{eig}");
}

#[test]
fn patch_test_reproduces_constant_strain() {
    let mesh = rect_mesh(2.0, 1.0, 0.25).unwrap();
    let b = [[0.3, -0.7], [1.1, 0.4]];
    let sym = [[0.3, 0.2], [0.2, 0.4]];
    let u: Vec<f64> = mesh
        .nodes
        .iter()
        .flat_map(|p| [b[0][0] * p[0] + b[0][1] * p[1], b[1][0] * p[0] + b[1][1] * p[1]])
        .collect();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, _) = basis_gradients(&mesh, t).unwrap();
        let dofs = std::array::from_fn(|k| u[2 * tri[k / 2] + k % 2]);
        let eps = element_strain(&g, &dofs);
        for i in 0..2 {
            for j in 0..2 {
                assert!((eps[i][j] - sym[i][j]).abs() <= 1e-12, "triangle {t}");
            }
        }
    }
    // constant stress is in equilibrium at interior nodes
    let k = assemble_full_matrix(&mesh, &default_material()).unwrap();
    let ku = k.mul_vec(&u);
    let scale = k.max_abs();
    let on_boundary: std::collections::BTreeSet<usize> =
        mesh.boundary_edges.iter().flat_map(|e| e.nodes).collect();
    for node in (0..mesh.num_nodes()).filter(|n| !on_boundary.contains(n)) {
        assert!(ku[2 * node].abs() <= 1e-12 * scale);
        assert!(ku[2 * node + 1].abs() <= 1e-12 * scale);
    }
}

#[test]
fn monotonicity_and_lipschitz_bounds() {
    let m = default_material();
    let sys = assemble(&rect_mesh(2.0, 1.0, 1.0 / 16.0).unwrap(), &m, [0.0; 2], [0.0; 2], 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (u, v) = (random_vec(&mut rng, sys.dim()), random_vec(&mut rng, sys.dim()));
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let kw = sys.stiffness.quad_form(&w);
        let mw = sys.v_metric.quad_form(&w);
        assert!(kw >= m.monotonicity_constant() * mw - 1e-9 * kw);
        assert!(kw <= m.lipschitz_constant() * mw * (1.0 + 1e-12));
        assert!(dual_norm_ratio(&sys, &w).unwrap() <= m.lipschitz_constant() * (1.0 + 1e-9));
    }
}

#[test]
fn trace_constant_matches_dense_eigenproblem() {
    let sys = assemble(&rect_mesh(2.0, 1.0, 0.25).unwrap(), &default_material(), [0.0; 2], [0.0; 2], 0.0).unwrap();
    let d0 = estimate_trace_constant(&sys, PowerIterationOptions::default()).unwrap();
    let l = dense(&sys.v_metric).cholesky().unwrap().l();
    let linv = l.clone().try_inverse().unwrap();
    let c = &linv * dense(&sys.boundary_mass) * linv.transpose();
    let top = c.symmetric_eigen().eigenvalues.max();
    assert!((d0 - top.sqrt()).abs() <= 1e-4 * d0, "{d0} vs {}", top.sqrt());
}

#[test]
fn trace_constant_bounds_random_fields() {
    let mesh = rect_mesh(2.0, 1.0, 1.0 / 16.0).unwrap();
    let sys = assemble(&mesh, &default_material(), [0.0; 2], [0.0; 2], 10.0).unwrap();
    let d0 = estimate_trace_constant(&sys, PowerIterationOptions::default()).unwrap();
    assert!(d0 > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let v = random_vec(&mut rng, sys.dim());
        let bv = sys.boundary_mass.mul_vec(&v);
        assert!(dot(&v, &bv) <= d0 * d0 * sys.v_metric.quad_form(&v) * (1.0 + 1e-6));
    }
    let stiffer = assemble(&mesh, &Material::new(24_000.0, 0.42).unwrap(), [0.0; 2], [0.0; 2], 10.0).unwrap();
    let d0_stiffer = estimate_trace_constant(&stiffer, PowerIterationOptions::default()).unwrap();
    assert_eq!(d0, d0_stiffer);
}

#[test]
fn smallness_verdicts() {
    let m = default_material();
    let mesh = rect_mesh(2.0, 1.0, 0.25).unwrap();
    let frictionless = assemble(&mesh, &m, [0.0; 2], [0.0; 2], 0.0).unwrap();
    assert!(check_smallness(&frictionless, 5.0, &m).passes);
    let sys = assemble(&mesh, &m, [0.0; 2], [0.0; 2], 10.0).unwrap();
    let rep = check_smallness(&sys, 5.0, &m);
    assert!((rep.lhs - 25.0 * 10.0 * 2f64.sqrt()).abs() < 1e-9);
    assert!(rep.passes);
    let huge = assemble(&mesh, &m, [0.0; 2], [0.0; 2], 1e6).unwrap();
    assert!(!check_smallness(&huge, 5.0, &m).passes);
}

proptest! {
    #[test]
    fn body_force_total_is_preserved(fx in -1e3f64..1e3, fy in -1e3f64..1e3) {
        let mesh = rect_mesh(2.0, 1.0, 0.25).unwrap();
        let sys = assemble(&mesh, &default_material(), [fx, fy], [0.0; 2], 0.0).unwrap();
        let total = |c: usize| -> f64 {
            sys.free_index
                .iter()
                .enumerate()
                .filter(|(d, k)| d % 2 == c && k.is_some())
                .map(|(_, k)| sys.load[k.unwrap()])
                .sum()
        };
        let clamped_area = {
            // each clamped node gets a third of its adjacent triangle areas
            let h = 0.25;
            let per_tri = h * h / 2.0 / 3.0;
            let count: usize = mesh
                .triangles
                .iter()
                .map(|t| t.iter().filter(|&&n| mesh.nodes[n][0] == 0.0).count())
                .sum();
            per_tri * count as f64
        };
        let expect = |f: f64| f * (2.0 - clamped_area);
        prop_assert!((total(0) - expect(fx)).abs() <= 1e-9 * (1.0 + fx.abs()));
        prop_assert!((total(1) - expect(fy)).abs() <= 1e-9 * (1.0 + fy.abs()));
    }
}
