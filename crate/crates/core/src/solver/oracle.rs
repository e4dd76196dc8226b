//! Exact frictionless reference by enumeration of active sets.
//!
//! For `min 1/2 u^T K u - f^T u` subject to `u_nu <= 0` at every contact node,
//! each candidate active set `S` fixes `u_nu = 0` on `S`. With `G = K^{-1}`
//! and `u0 = K^{-1} f`, the reactions `mu_S` on `S` solve
//! `G_SS mu_S = u0_S` and `u = u0 - G_{:,S} mu_S`. The KKT point is the one
//! with `u_nu <= 0` off `S` and nonnegative multipliers on `S`. All of this
//! uses dense factorizations, independent of the iterative solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;

pub const ORACLE_MAX_CONSTRAINTS: usize = 12;

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub solution: Vec<f64>,
    /// Contact nodes (indices into `system.contact`) with a free normal dof,
    /// in the order used below.
    pub constrained: Vec<usize>,
    pub active: Vec<bool>,
    /// Multiplier of `u_nu <= 0` per constrained node (zero when inactive).
    pub multipliers: Vec<f64>,
}

pub fn active_set_oracle(system: &DiscreteSystem) -> Result<OracleSolution> {
    if system.friction_bound != 0.0 {
        return Err(Error::Oracle("only frictionless systems are supported".into()));
    }
    let constrained: Vec<usize> = system
        .contact
        .iter()
        .enumerate()
        .filter(|(_, c)| c.normal_dof.is_some())
        .map(|(i, _)| i)
        .collect();
    let m = constrained.len();
    if m > ORACLE_MAX_CONSTRAINTS {
        return Err(Error::Oracle(format!(
            "{m} constrained dofs exceed the limit of {ORACLE_MAX_CONSTRAINTS}"
        )));
    }
    let dofs: Vec<usize> = constrained
        .iter()
        .map(|&i| system.contact[i].normal_dof.unwrap())
        .collect();
    let signs: Vec<f64> = constrained.iter().map(|&i| system.contact[i].normal_sign).collect();

    let n = system.dim();
    let k = DMatrix::from_fn(n, n, |i, j| system.stiffness.get(i, j));
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::Oracle("stiffness matrix is not positive definite".into()))?;
    let u0 = chol.solve(&DVector::from_column_slice(&system.load));
    let mut cols = DMatrix::zeros(n, m);
    for (c, &d) in dofs.iter().enumerate() {
        cols[(d, c)] = 1.0;
    }
    let g = chol.solve(&cols);

    let scale = 1.0 + u0.amax();
    let primal_tol = 1e-10 * scale;
    let dual_tol = 1e-10 * (1.0 + system.load.iter().fold(0.0f64, |a, v| a.max(v.abs())));

    for mask in 0u32..(1u32 << m) {
        let set: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let mut u = u0.clone();
        let mut mu = vec![0.0; m];
        if !set.is_empty() {
            let gss = DMatrix::from_fn(set.len(), set.len(), |a, b| g[(dofs[set[a]], set[b])]);
            let rhs = DVector::from_iterator(set.len(), set.iter().map(|&i| u0[dofs[i]]));
            let Some(sol) = gss.cholesky().map(|c| c.solve(&rhs)) else {
                continue;
            };
            for (a, &i) in set.iter().enumerate() {
                mu[i] = sol[a];
                u -= g.column(i) * sol[a];
            }
        }
        // reaction mu is the load applied on the dof; the constraint multiplier
        // is its component along the normal
        let multipliers: Vec<f64> = (0..m).map(|i| signs[i] * mu[i]).collect();
        let active: Vec<bool> = (0..m).map(|i| mask & (1 << i) != 0).collect();
        let primal_ok = (0..m).all(|i| active[i] || signs[i] * u[dofs[i]] <= primal_tol);
        let dual_ok = (0..m).all(|i| !active[i] || multipliers[i] >= -dual_tol);
        if primal_ok && dual_ok {
            return Ok(OracleSolution {
                solution: u.iter().copied().collect(),
                constrained,
                active,
                multipliers,
            });
        }
    }
    Err(Error::Oracle("no KKT point found".into()))
}
