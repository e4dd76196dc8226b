//! Fixtures shared by the solver benchmarks.

use contact_penalty::{assemble, rect_mesh, DiscreteSystem, Material, Mesh};

/// Default geometry, material and loads at mesh size `h`.
pub fn default_problem(h: f64) -> (Mesh, Material, DiscreteSystem) {
    let mesh = rect_mesh(2.0, 1.0, h).expect("mesh");
    let material = Material::new(12_000.0, 0.42).expect("material");
    let system = assemble(&mesh, &material, [-200.0, -800.0], [0.0; 2], 10.0).expect("assembly");
    (mesh, material, system)
}
