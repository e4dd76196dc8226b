//! Descent methods for energies of the form
//!
//! ```text
//! E(u) = 1/2 u^T A u - b^T u + sum_k g_k(u_k)
//! ```
//!
//! with `A` symmetric positive definite and each `g_k` a C1 scalar function of a
//! single dof (contact terms are nodal, so their Hessian is diagonal). Optional
//! box bounds `lower <= u <= upper` are handled by projection; the constraint
//! `u_nu <= 0` of the contact problem is such a box.
//!
//! Two step rules are available. [`Method::ProjectedNewton`] scales the
//! projected gradient with the (convexified) Hessian on the free variables;
//! [`Method::ProjectedGradient`] uses Barzilai-Borwein step lengths. Both
//! accept a step only under an Armijo condition along the projection arc, so
//! the energy never increases and iterates stay feasible.

pub mod oracle;

use std::fmt;

use crate::energy::{ConstrainedProblem, PenaltyProblem};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, BandCholesky, CsrMatrix};

pub use oracle::{active_set_oracle, OracleSolution, ORACLE_MAX_CONSTRAINTS};

/// Quadratic part plus separable C1 terms.
pub trait SeparableEnergy {
    fn quadratic(&self) -> &CsrMatrix;
    fn linear(&self) -> &[f64];

    /// `sum_k g_k(u_k)`
    fn separable_value(&self, u: &[f64]) -> f64;
    /// Adds `g_k'(u_k)` into `grad`.
    fn add_separable_gradient(&self, u: &[f64], grad: &mut [f64]);
    /// Adds `g_k''(u_k)` into `diag` (may be negative for nonconvex terms).
    fn add_separable_curvature(&self, u: &[f64], diag: &mut [f64]);
    /// `sum_k g_k(u_k + step_k) - g_k(u_k)`, evaluated without cancellation.
    fn separable_change(&self, u: &[f64], step: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.linear().len()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        let au = self.quadratic().mul_vec(u);
        0.5 * dot(u, &au) - dot(self.linear(), u) + self.separable_value(u)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.quadratic().mul_vec(u);
        for (gi, bi) in g.iter_mut().zip(self.linear()) {
            *gi -= bi;
        }
        self.add_separable_gradient(u, &mut g);
        g
    }

    /// `E(u + step) - E(u)`; accurate when the change is tiny relative to `E`.
    fn energy_change(&self, u: &[f64], step: &[f64]) -> f64 {
        let a = self.quadratic();
        let au = a.mul_vec(u);
        let astep = a.mul_vec(step);
        let mut lin = 0.0;
        let mut quad = 0.0;
        for k in 0..u.len() {
            lin += (au[k] - self.linear()[k]) * step[k];
            quad += astep[k] * step[k];
        }
        lin + 0.5 * quad + self.separable_change(u, step)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Newton steps on the free variables with a convexified diagonal
    /// correction for the separable terms and a banded Cholesky solve.
    ProjectedNewton,
    /// Jacobi-scaled Barzilai-Borwein steps with monotone backtracking. Cheap
    /// per iteration but slow on ill-conditioned instances (soft foundations,
    /// fine meshes); kept as an independent cross-check.
    ProjectedGradient,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Stationarity tolerance relative to `1 + |b|`.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub max_backtracks: usize,
    pub warm_start: Option<Vec<f64>>,
    pub method: Method,
    /// Abort when the energy drops below this value.
    pub energy_floor: f64,
    pub record_history: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grad_tol: 1e-9,
            max_iters: 200_000,
            backtrack: 0.5,
            armijo: 1e-4,
            max_backtracks: 80,
            warm_start: None,
            method: Method::ProjectedNewton,
            energy_floor: f64::NEG_INFINITY,
            record_history: false,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Parameter(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Parameter("line-search constants must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn with_warm_start(mut self, u: Vec<f64>) -> Self {
        self.warm_start = Some(u);
        self
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub energy: f64,
    pub projected_gradient_norm: f64,
    /// Absolute stationarity threshold that was applied.
    pub tolerance: f64,
    pub converged: bool,
    /// Energy after every accepted step (only with `record_history`).
    pub history: Vec<f64>,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} after {} iterations: energy = {:.12e}, |proj grad| = {:.3e} (tol {:.3e})",
            if self.converged { "converged" } else { "NOT converged" },
            self.iterations,
            self.energy,
            self.projected_gradient_norm,
            self.tolerance
        )
    }
}

/// Box `lower <= u <= upper`.
#[derive(Clone, Copy, Debug)]
pub struct Bounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Bounds<'_> {
    fn clamp(&self, k: usize, v: f64) -> f64 {
        v.max(self.lower[k]).min(self.upper[k])
    }

    fn project(&self, u: &mut [f64]) {
        for (k, v) in u.iter_mut().enumerate() {
            *v = self.clamp(k, *v);
        }
    }
}

fn projected_gradient(u: &[f64], g: &[f64], bounds: Option<Bounds>) -> Vec<f64> {
    match bounds {
        None => g.to_vec(),
        Some(b) => (0..u.len()).map(|k| u[k] - b.clamp(k, u[k] - g[k])).collect(),
    }
}

/// Minimizes `energy` over the box (or the whole space when `bounds` is
/// `None`).
pub fn minimize(
    energy: &impl SeparableEnergy,
    bounds: Option<Bounds>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let n = energy.dim();
    let mut u = match &opts.warm_start {
        Some(w) if w.len() != n => {
            return Err(Error::Dimension {
                expected: n,
                found: w.len(),
            })
        }
        Some(w) => w.clone(),
        None => vec![0.0; n],
    };
    if let Some(b) = bounds {
        b.project(&mut u);
    }
    let tol = opts.grad_tol * (1.0 + norm2(energy.linear()));
    let mut e = energy.energy(&u);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(e);
    }
    let base_diag = energy.quadratic().diagonal();

    // Barzilai-Borwein memory for the gradient method, in the metric of the
    // Jacobi preconditioner `D = diag(A)`
    let mut bb_step = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    let mut pg_norm = f64::INFINITY;
    let mut iterations = 0;
    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let g = energy.gradient(&u);
        pg_norm = norm2(&projected_gradient(&u, &g, bounds));
        if pg_norm <= tol {
            return Ok(SolveReport {
                energy: energy.energy(&u),
                solution: u,
                iterations: iter + 1,
                projected_gradient_norm: pg_norm,
                tolerance: tol,
                converged: true,
                history,
            });
        }

        if opts.method == Method::ProjectedGradient {
            if let Some((u_old, g_old)) = &prev {
                let s: Vec<f64> = u.iter().zip(u_old).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(g_old).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                let sds: f64 = s.iter().zip(&base_diag).map(|(si, di)| si * si * di).sum();
                if sy > 0.0 {
                    bb_step = sds / sy;
                }
            }
            prev = Some((u.clone(), g.clone()));
        }

        let direction = match opts.method {
            Method::ProjectedNewton => newton_direction(energy, &u, &g, bounds, pg_norm.min(1e-6), &base_diag),
            Method::ProjectedGradient => g.iter().zip(&base_diag).map(|(gi, di)| -bb_step * gi / di).collect(),
        };

        let step = line_search(energy, &u, &g, &direction, bounds, opts).or_else(|| {
            // scaled steepest descent as a fallback
            let d: Vec<f64> = g
                .iter()
                .zip(&base_diag)
                .map(|(gi, di)| -gi / di.max(f64::MIN_POSITIVE))
                .collect();
            line_search(energy, &u, &g, &d, bounds, opts)
        });
        let Some((new_u, delta)) = step else {
            break;
        };
        u = new_u;
        e += delta;
        if opts.record_history {
            history.push(e);
        }
        if e < opts.energy_floor {
            return Err(Error::Diverged {
                iteration: iter,
                energy: e,
                floor: opts.energy_floor,
            });
        }
    }

    Ok(SolveReport {
        energy: energy.energy(&u),
        solution: u,
        iterations,
        projected_gradient_norm: pg_norm,
        tolerance: tol,
        converged: false,
        history,
    })
}

/// Newton direction on the free variables, scaled gradient on the variables
/// held at a bound.
fn newton_direction(
    energy: &impl SeparableEnergy,
    u: &[f64],
    g: &[f64],
    bounds: Option<Bounds>,
    eps: f64,
    base_diag: &[f64],
) -> Vec<f64> {
    let n = u.len();
    let pinned: Vec<bool> = match bounds {
        None => vec![false; n],
        Some(b) => (0..n)
            .map(|k| (u[k] <= b.lower[k] + eps && g[k] > 0.0) || (u[k] >= b.upper[k] - eps && g[k] < 0.0))
            .collect(),
    };
    let mut curvature = vec![0.0; n];
    energy.add_separable_curvature(u, &mut curvature);

    let chol = BandCholesky::factor_modified(energy.quadratic(), &curvature, &pinned).or_else(|_| {
        let convex: Vec<f64> = curvature.iter().map(|c| c.max(0.0)).collect();
        BandCholesky::factor_modified(energy.quadratic(), &convex, &pinned)
    });
    let mut d: Vec<f64> = (0..n).map(|k| if pinned[k] { 0.0 } else { -g[k] }).collect();
    match chol {
        Ok(chol) => chol.solve_in_place(&mut d),
        Err(_) => {
            for k in 0..n {
                d[k] = -g[k] / (base_diag[k] + curvature[k].max(0.0));
            }
        }
    }
    for k in 0..n {
        if pinned[k] {
            d[k] = -g[k] / (base_diag[k] + curvature[k].max(0.0));
        }
    }
    d
}

/// Backtracking along `P(u + alpha d)`; returns the new point and the energy
/// change, or `None` if no acceptable step was found.
fn line_search(
    energy: &impl SeparableEnergy,
    u: &[f64],
    g: &[f64],
    d: &[f64],
    bounds: Option<Bounds>,
    opts: &SolveOptions,
) -> Option<(Vec<f64>, f64)> {
    let mut alpha = 1.0;
    let mut trial = vec![0.0; u.len()];
    let mut step = vec![0.0; u.len()];
    for _ in 0..opts.max_backtracks {
        for k in 0..u.len() {
            trial[k] = u[k] + alpha * d[k];
        }
        if let Some(b) = bounds {
            b.project(&mut trial);
        }
        for k in 0..u.len() {
            step[k] = trial[k] - u[k];
        }
        let slope = dot(g, &step);
        if slope < 0.0 {
            let delta = energy.energy_change(u, &step);
            if delta <= opts.armijo * slope {
                return Some((trial, delta));
            }
        } else if step.iter().all(|&s| s == 0.0) {
            return None;
        }
        alpha *= opts.backtrack;
    }
    None
}

/// Minimizes the friction energy over `u_nu <= 0` (the rigid-foundation
/// reference problem).
pub fn solve_constrained(prob: &ConstrainedProblem, opts: &SolveOptions) -> Result<SolveReport> {
    let (lower, upper) = prob.system.feasible_bounds();
    minimize(
        prob,
        Some(Bounds {
            lower: &lower,
            upper: &upper,
        }),
        opts,
    )
}

/// Minimizes the penalized energy without constraints.
pub fn solve_penalty(prob: &PenaltyProblem, opts: &SolveOptions) -> Result<SolveReport> {
    prob.validate()?;
    minimize(prob, None, opts)
}
