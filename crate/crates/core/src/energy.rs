//! Total energies of the discrete contact problems and the residuals used to
//! check convergence towards the constrained solution.
//!
//! With `K` the stiffness, `f` the load and `w_i` the contact weights:
//!
//! ```text
//! E_pen(u) = 1/2 u^T K u - f^T u + sum_i w_i F_b psi(u_tau,i) + 1/lambda sum_i w_i j(u_nu,i)
//! E_con(u) = 1/2 u^T K u - f^T u + sum_i w_i F_b psi(u_tau,i),   u_nu,i <= 0
//! ```
//!
//! where `psi(t) = sqrt(t^2 + rho^2) - rho` smooths `|t|`. The residuals in
//! [`vi_residual`] use the exact friction functional `sum_i w_i F_b |u_tau,i|`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact_laws::ContactLaw;
use crate::error::{Error, Result};
use crate::fem::DiscreteSystem;
use crate::linalg::{dot, energy_norm, norm2, CsrMatrix};
use crate::solver::{minimize, Bounds, SeparableEnergy, SolveOptions};

pub const DEFAULT_RHO: f64 = 1e-8;

/// Smoothed absolute value `sqrt(t^2 + rho^2) - rho`, written to stay accurate
/// for `|t| << rho`.
pub fn smooth_abs(t: f64, rho: f64) -> f64 {
    t * t / ((t * t + rho * rho).sqrt() + rho)
}

pub fn smooth_abs_derivative(t: f64, rho: f64) -> f64 {
    t / (t * t + rho * rho).sqrt()
}

fn smooth_abs_curvature(t: f64, rho: f64) -> f64 {
    let s = (t * t + rho * rho).sqrt();
    rho * rho / (s * s * s)
}

/// `smooth_abs(t + d) - smooth_abs(t)` without cancellation.
fn smooth_abs_change(t: f64, d: f64, rho: f64) -> f64 {
    let s0 = (t * t + rho * rho).sqrt();
    let s1 = ((t + d) * (t + d) + rho * rho).sqrt();
    d * (2.0 * t + d) / (s0 + s1)
}

/// Contact problem with a deformable foundation of stiffness `1 / lambda`.
#[derive(Clone, Copy, Debug)]
pub struct PenaltyProblem<'a> {
    pub system: &'a DiscreteSystem,
    pub law: ContactLaw,
    pub lambda: f64,
    pub rho: f64,
}

/// Contact problem with a rigid foundation (`u_nu <= 0`).
#[derive(Clone, Copy, Debug)]
pub struct ConstrainedProblem<'a> {
    pub system: &'a DiscreteSystem,
    pub rho: f64,
}

impl<'a> PenaltyProblem<'a> {
    pub fn new(system: &'a DiscreteSystem, law: ContactLaw, lambda: f64, rho: f64) -> Result<Self> {
        let prob = PenaltyProblem {
            system,
            law,
            lambda,
            rho,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        validate_rho(self.rho)
    }
}

impl<'a> ConstrainedProblem<'a> {
    pub fn new(system: &'a DiscreteSystem, rho: f64) -> Result<Self> {
        validate_rho(rho)?;
        Ok(ConstrainedProblem { system, rho })
    }
}

fn validate_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Parameter(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

fn friction_value(sys: &DiscreteSystem, rho: f64, u: &[f64]) -> f64 {
    sys.contact
        .iter()
        .map(|c| c.weight * sys.friction_bound * smooth_abs(sys.tangential_displacement(u, c), rho))
        .sum()
}

fn add_friction_gradient(sys: &DiscreteSystem, rho: f64, u: &[f64], grad: &mut [f64]) {
    for c in &sys.contact {
        if let Some(k) = c.tangent_dof {
            let t = c.tangent_sign * u[k];
            grad[k] += c.tangent_sign * c.weight * sys.friction_bound * smooth_abs_derivative(t, rho);
        }
    }
}

fn add_friction_curvature(sys: &DiscreteSystem, rho: f64, u: &[f64], diag: &mut [f64]) {
    for c in &sys.contact {
        if let Some(k) = c.tangent_dof {
            let t = c.tangent_sign * u[k];
            diag[k] += c.weight * sys.friction_bound * smooth_abs_curvature(t, rho);
        }
    }
}

fn friction_change(sys: &DiscreteSystem, rho: f64, u: &[f64], step: &[f64]) -> f64 {
    sys.contact
        .iter()
        .filter_map(|c| {
            c.tangent_dof.map(|k| {
                let (t, d) = (c.tangent_sign * u[k], c.tangent_sign * step[k]);
                c.weight * sys.friction_bound * smooth_abs_change(t, d, rho)
            })
        })
        .sum()
}

impl SeparableEnergy for PenaltyProblem<'_> {
    fn quadratic(&self) -> &CsrMatrix {
        &self.system.stiffness
    }

    fn linear(&self) -> &[f64] {
        &self.system.load
    }

    fn separable_value(&self, u: &[f64]) -> f64 {
        let sys = self.system;
        let normal: f64 = sys
            .contact
            .iter()
            .map(|c| c.weight * self.law.j(sys.normal_displacement(u, c)))
            .sum();
        friction_value(sys, self.rho, u) + normal / self.lambda
    }

    fn add_separable_gradient(&self, u: &[f64], grad: &mut [f64]) {
        let sys = self.system;
        add_friction_gradient(sys, self.rho, u, grad);
        for c in &sys.contact {
            if let Some(k) = c.normal_dof {
                let r = c.normal_sign * u[k];
                grad[k] += c.normal_sign * c.weight * self.law.p(r) / self.lambda;
            }
        }
    }

    fn add_separable_curvature(&self, u: &[f64], diag: &mut [f64]) {
        let sys = self.system;
        add_friction_curvature(sys, self.rho, u, diag);
        for c in &sys.contact {
            if let Some(k) = c.normal_dof {
                let r = c.normal_sign * u[k];
                diag[k] += c.weight * self.law.dp(r) / self.lambda;
            }
        }
    }

    fn separable_change(&self, u: &[f64], step: &[f64]) -> f64 {
        let sys = self.system;
        let normal: f64 = sys
            .contact
            .iter()
            .filter_map(|c| {
                c.normal_dof.map(|k| {
                    let r = c.normal_sign * u[k];
                    let r1 = c.normal_sign * (u[k] + step[k]);
                    c.weight * (self.law.j(r1) - self.law.j(r))
                })
            })
            .sum();
        friction_change(sys, self.rho, u, step) + normal / self.lambda
    }
}

impl SeparableEnergy for ConstrainedProblem<'_> {
    fn quadratic(&self) -> &CsrMatrix {
        &self.system.stiffness
    }

    fn linear(&self) -> &[f64] {
        &self.system.load
    }

    fn separable_value(&self, u: &[f64]) -> f64 {
        friction_value(self.system, self.rho, u)
    }

    fn add_separable_gradient(&self, u: &[f64], grad: &mut [f64]) {
        add_friction_gradient(self.system, self.rho, u, grad);
    }

    fn add_separable_curvature(&self, u: &[f64], diag: &mut [f64]) {
        add_friction_curvature(self.system, self.rho, u, diag);
    }

    fn separable_change(&self, u: &[f64], step: &[f64]) -> f64 {
        friction_change(self.system, self.rho, u, step)
    }
}

pub fn energy_penalty(prob: &PenaltyProblem, u: &[f64]) -> f64 {
    prob.energy(u)
}

pub fn gradient_penalty(prob: &PenaltyProblem, u: &[f64]) -> Vec<f64> {
    prob.gradient(u)
}

pub fn energy_constrained(prob: &ConstrainedProblem, u: &[f64]) -> f64 {
    prob.energy(u)
}

pub fn gradient_constrained(prob: &ConstrainedProblem, u: &[f64]) -> Vec<f64> {
    prob.gradient(u)
}

/// Inequality bracket `<f - K u, v - u> - phi(v) + phi(u)` for one feasible
/// `v`, with the exact friction functional `phi`.
pub fn vi_bracket(system: &DiscreteSystem, u: &[f64], v: &[f64]) -> f64 {
    let ku = system.stiffness.mul_vec(u);
    let mut s = 0.0;
    for k in 0..u.len() {
        s += (system.load[k] - ku[k]) * (v[k] - u[k]);
    }
    s - system.friction_functional(v) + system.friction_functional(u)
}

/// Smallest `eps >= 0` such that
/// `<K u, v - u> + phi(v) - phi(u) + eps (1 + |v - u|_V) >= <f, v - u>`
/// holds for every probe `v`. Over a finite probe set this is a lower bound of
/// the residual over the whole constraint set.
pub fn vi_residual(system: &DiscreteSystem, u: &[f64], probes: &[Vec<f64>]) -> Result<f64> {
    if probes.is_empty() {
        return Err(Error::EmptyProbes);
    }
    let n = system.dim();
    if u.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: u.len(),
        });
    }
    let ku = system.stiffness.mul_vec(u);
    let phi_u = system.friction_functional(u);
    let mut eps: f64 = 0.0;
    for v in probes {
        if v.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: v.len(),
            });
        }
        let diff: Vec<f64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
        let lin: f64 = (0..n).map(|k| (system.load[k] - ku[k]) * diff[k]).sum();
        let bracket = lin - system.friction_functional(v) + phi_u;
        eps = eps.max(bracket / (1.0 + system.v_norm(&diff)));
    }
    Ok(eps)
}

/// Feasible probe points for [`vi_residual`]: the origin, the nodal clamp of
/// `u`, the reference solution when given, and `n_random` seeded random
/// points (half near `u`, half spread over the scale of `u`).
pub fn probe_set(
    system: &DiscreteSystem,
    u: &[f64],
    reference: Option<&[f64]>,
    n_random: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let n = system.dim();
    let mut probes = vec![vec![0.0; n], system.project_feasible(u)];
    if let Some(r) = reference {
        probes.push(system.project_feasible(r));
    }
    let scale = u
        .iter()
        .chain(reference.unwrap_or(&[]))
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..n_random {
        let v: Vec<f64> = if k % 2 == 0 {
            let radius = scale * 10f64.powi(-((k / 2 % 4) as i32 + 1));
            u.iter().map(|x| x + radius * rng.gen_range(-1.0..1.0)).collect()
        } else {
            (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
        };
        probes.push(system.project_feasible(&v));
    }
    probes
}

/// `min_v 1/2 |v - u|_M^2` over a box, for a symmetric positive definite `M`.
struct MetricProjection<'a> {
    metric: &'a CsrMatrix,
    target: Vec<f64>,
}

impl SeparableEnergy for MetricProjection<'_> {
    fn quadratic(&self) -> &CsrMatrix {
        self.metric
    }
    fn linear(&self) -> &[f64] {
        &self.target
    }
    fn separable_value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn add_separable_gradient(&self, _: &[f64], _: &mut [f64]) {}
    fn add_separable_curvature(&self, _: &[f64], _: &mut [f64]) {}
    fn separable_change(&self, _: &[f64], _: &[f64]) -> f64 {
        0.0
    }
}

/// Distance `inf { |u - v|_M : lower <= v <= upper }` by a bound-constrained
/// quadratic program in the `M` metric.
pub fn metric_distance_to_box(metric: &CsrMatrix, u: &[f64], lower: &[f64], upper: &[f64]) -> Result<f64> {
    let start: Vec<f64> = (0..u.len()).map(|k| u[k].max(lower[k]).min(upper[k])).collect();
    if start == u {
        return Ok(0.0);
    }
    let qp = MetricProjection {
        metric,
        target: metric.mul_vec(u),
    };
    let opts = SolveOptions {
        grad_tol: 1e-10,
        max_iters: 10_000,
        ..SolveOptions::default()
    }
    .with_warm_start(start);
    let report = minimize(&qp, Some(Bounds { lower, upper }), &opts)?;
    if !report.converged {
        return Err(Error::QpNotConverged(report.to_string()));
    }
    let diff: Vec<f64> = u.iter().zip(&report.solution).map(|(a, b)| a - b).collect();
    Ok(energy_norm(metric, &diff))
}

/// V-norm distance from `u` to the discrete constraint set.
pub fn distance_to_k(system: &DiscreteSystem, u: &[f64]) -> Result<f64> {
    let (lower, upper) = system.feasible_bounds();
    metric_distance_to_box(&system.v_metric, u, &lower, &upper)
}

/// `|Ku|_* / |u|_V` with the dual norm taken in the V metric.
pub fn dual_norm_ratio(system: &DiscreteSystem, u: &[f64]) -> Result<f64> {
    let chol = crate::linalg::BandCholesky::factor(&system.v_metric)?;
    let ku = system.stiffness.mul_vec(u);
    let z = chol.solve(&ku);
    Ok(dot(&ku, &z).max(0.0).sqrt() / system.v_norm(u))
}

/// Euclidean norm helper re-exported for reports.
pub fn euclidean(u: &[f64]) -> f64 {
    norm2(u)
}
