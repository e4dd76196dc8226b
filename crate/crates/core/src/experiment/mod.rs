//! The penalty convergence experiment: reference (rigid foundation) solve,
//! single penalty solves, the lambda sweep and residual checks of arbitrary
//! displacement fields.

mod config;
mod io;

use std::fmt;

pub use config::{default_lambdas, ExperimentConfig};
pub use io::{
    displacement_from_text, displacement_to_text, read_displacement, rows_from_csv, rows_to_csv, write_displacement,
    SweepRow, CSV_HEADER,
};

use crate::energy::{distance_to_k, probe_set, vi_residual, ConstrainedProblem, PenaltyProblem};
use crate::error::{Error, Result};
use crate::fem::{assemble, check_smallness, estimate_trace_constant, DiscreteSystem, PowerIterationOptions};
use crate::fem::SmallnessReport;
use crate::linalg::sub;
use crate::mesh::{rect_mesh, Mesh};
use crate::solver::{solve_constrained, solve_penalty, SolveReport};

/// Mesh and assembled system of a configuration.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub mesh: Mesh,
    pub system: DiscreteSystem,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mesh = rect_mesh(config.width, config.height, config.h)?;
        let system = assemble(
            &mesh,
            &config.material()?,
            config.body_force,
            config.traction,
            config.friction_bound,
        )?;
        Ok(Setup {
            config: config.clone(),
            mesh,
            system,
        })
    }

    /// Solution tolerance scale `grad_tol (1 + |f|)` used by the solver.
    pub fn tolerance(&self) -> f64 {
        self.config.grad_tol * (1.0 + self.system.load_norm())
    }

    pub fn constrained(&self) -> Result<ConstrainedProblem<'_>> {
        ConstrainedProblem::new(&self.system, self.config.rho)
    }

    pub fn penalty(&self, lambda: f64) -> Result<PenaltyProblem<'_>> {
        PenaltyProblem::new(&self.system, self.config.law, lambda, self.config.rho)
    }
}

/// Signorini data at one contact node of a constrained solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplementarityRow {
    pub node: usize,
    pub x: f64,
    pub u_nu: f64,
    pub u_tau: f64,
    /// Nodal normal contact force, the discrete counterpart of `sigma_nu`
    /// times the node weight. Compressive values are negative.
    pub reaction: f64,
}

impl ComplementarityRow {
    pub fn product(&self) -> f64 {
        self.reaction * self.u_nu
    }
}

pub fn complementarity(setup: &Setup, u: &[f64]) -> Vec<ComplementarityRow> {
    let sys = &setup.system;
    let ku = sys.stiffness.mul_vec(u);
    sys.contact
        .iter()
        .map(|c| ComplementarityRow {
            node: c.node,
            x: setup.mesh.nodes[c.node][0],
            u_nu: sys.normal_displacement(u, c),
            u_tau: sys.tangential_displacement(u, c),
            reaction: c.normal_dof.map_or(0.0, |k| c.normal_sign * (ku[k] - sys.load[k])),
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SignoriniResult {
    pub report: SolveReport,
    pub field: Vec<[f64; 2]>,
    pub contact: Vec<ComplementarityRow>,
    pub tolerance: f64,
}

impl SignoriniResult {
    pub fn max_complementarity(&self) -> f64 {
        self.contact.iter().fold(0.0, |m, r| m.max(r.product().abs()))
    }

    pub fn max_penetration(&self) -> f64 {
        self.contact.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.u_nu))
    }

    pub fn max_slip(&self) -> f64 {
        self.contact.iter().fold(0.0, |m, r| m.max(r.u_tau.abs()))
    }

    /// Per-node table: `node x u_nu u_tau reaction reaction*u_nu`.
    pub fn complementarity_text(&self) -> String {
        let mut s = String::from("# node x u_nu u_tau reaction reaction*u_nu\n");
        for r in &self.contact {
            s += &format!(
                "{} {:e} {:e} {:e} {:e} {:e}\n",
                r.node,
                r.x,
                r.u_nu,
                r.u_tau,
                r.reaction,
                r.product()
            );
        }
        s += &format!(
            "# max |reaction*u_nu| = {:e}, max u_nu = {:e}, max |u_tau| = {:e}\n",
            self.max_complementarity(),
            self.max_penetration(),
            self.max_slip()
        );
        s
    }
}

/// Solves the rigid-foundation problem.
pub fn run_signorini(setup: &Setup) -> Result<SignoriniResult> {
    let report = solve_constrained(&setup.constrained()?, &setup.config.solve_options())?;
    Ok(SignoriniResult {
        field: setup.system.expand(&report.solution),
        contact: complementarity(setup, &report.solution),
        tolerance: report.tolerance,
        report,
    })
}

/// Solves one penalty problem, starting from zero unless `warm` is given.
pub fn run_penalty(setup: &Setup, lambda: f64, warm: Option<&[f64]>) -> Result<SolveReport> {
    let mut opts = setup.config.solve_options();
    if let Some(w) = warm {
        opts = opts.with_warm_start(w.to_vec());
    }
    solve_penalty(&setup.penalty(lambda)?, &opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceInfo {
    pub converged: bool,
    pub iterations: usize,
    pub energy: f64,
    pub v_norm: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `|u_n|_V` per row.
    pub solution_norms: Vec<f64>,
    pub reference: ReferenceInfo,
    pub smallness: SmallnessReport,
}

impl SweepResult {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }

    /// First lambda whose relative error is below half of the first row's.
    pub fn knee(&self) -> Option<f64> {
        let first = self.rows.first()?.error_v_rel;
        self.rows
            .iter()
            .find(|r| r.converged && r.error_v_rel < 0.5 * first)
            .map(|r| r.lambda)
    }

    /// Converged rows with `lambda <= lambda_max` whose absolute error exceeds
    /// that of the previous such row by more than `slack`.
    pub fn tail_increases(&self, lambda_max: f64, slack: f64) -> Vec<f64> {
        let tail: Vec<&SweepRow> = self
            .rows
            .iter()
            .filter(|r| r.converged && r.lambda <= lambda_max)
            .collect();
        tail.windows(2)
            .filter(|w| w[1].error_v_abs > w[0].error_v_abs + slack)
            .map(|w| w[1].lambda)
            .collect()
    }

    /// Converged rows whose penetration exceeds that of the previous converged
    /// row by more than `slack`.
    pub fn penetration_increases(&self, slack: f64) -> Vec<f64> {
        let rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.converged).collect();
        rows.windows(2)
            .filter(|w| w[1].max_penetration > w[0].max_penetration + slack)
            .map(|w| w[1].lambda)
            .collect()
    }

    /// `max_n |u_n|_V / |u|_V`.
    pub fn boundedness_ratio(&self) -> f64 {
        self.solution_norms.iter().fold(0.0f64, |m, v| m.max(*v)) / self.reference.v_norm
    }

    /// Human readable summary: reference data, smallness verdict and knee.
    pub fn summary(&self) -> String {
        let r = &self.reference;
        let knee = self.knee().map_or("none".to_string(), |k| format!("{k:e}"));
        format!(
            "reference: converged = {}, iterations = {}, energy = {:e}, |u|_V = {:e}, tolerance = {:e}\n\
             {}\n\
             rows = {}, converged rows = {}\n\
             knee (half of the first relative error) at lambda = {knee}\n\
             max |u_n|_V / |u|_V = {:e}\n",
            r.converged,
            r.iterations,
            r.energy,
            r.v_norm,
            r.tolerance,
            self.smallness,
            self.rows.len(),
            self.rows.iter().filter(|x| x.converged).count(),
            self.boundedness_ratio()
        )
    }
}

/// Reference solve followed by penalty solves along the lambda grid, each
/// warm started from the previous one.
pub fn run_sweep(setup: &Setup) -> Result<SweepResult> {
    let cfg = &setup.config;
    let sys = &setup.system;
    if cfg.lambdas.is_empty() {
        return Err(Error::Parameter("lambda grid is empty".into()));
    }
    let reference = solve_constrained(&setup.constrained()?, &cfg.solve_options())?;
    let u = &reference.solution;
    let u_norm = sys.v_norm(u);
    let d0 = estimate_trace_constant(sys, PowerIterationOptions::default())?;
    let smallness = check_smallness(sys, d0, &cfg.material()?);

    let mut rows = Vec::with_capacity(cfg.lambdas.len());
    let mut norms = Vec::with_capacity(cfg.lambdas.len());
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in &cfg.lambdas {
        let rep = run_penalty(setup, lambda, warm.as_deref())?;
        let un = &rep.solution;
        let err = sys.v_norm(&sub(un, u));
        let probes = probe_set(sys, un, Some(u), cfg.probes, cfg.seed);
        rows.push(SweepRow {
            lambda,
            converged: rep.converged,
            iterations: rep.iterations,
            energy: rep.energy,
            error_v_abs: err,
            error_v_rel: if u_norm > 0.0 { err / u_norm } else { err },
            max_penetration: sys.max_penetration(un),
            eps_residual: vi_residual(sys, un, &probes)?,
            dist_to_k: distance_to_k(sys, un)?,
        });
        norms.push(sys.v_norm(un));
        warm = Some(rep.solution);
    }
    Ok(SweepResult {
        rows,
        solution_norms: norms,
        reference: ReferenceInfo {
            converged: reference.converged,
            iterations: reference.iterations,
            energy: reference.energy,
            v_norm: u_norm,
            tolerance: reference.tolerance,
        },
        smallness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionReport {
    pub eps_residual: f64,
    pub dist_to_k: f64,
    pub probes: usize,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eps_residual = {:e}\ndist_to_K = {:e}\nprobes = {}",
            self.eps_residual, self.dist_to_k, self.probes
        )
    }
}

/// Residuals of a nodal displacement field against the configured problem.
/// The probe set includes the reference solution, which is solved here.
pub fn check_criterion(setup: &Setup, field: &[[f64; 2]], n_probes: usize, seed: u64) -> Result<CriterionReport> {
    let sys = &setup.system;
    let u = sys.restrict(field)?;
    let reference = solve_constrained(&setup.constrained()?, &setup.config.solve_options())?;
    let probes = probe_set(sys, &u, Some(&reference.solution), n_probes, seed);
    Ok(CriterionReport {
        eps_residual: vi_residual(sys, &u, &probes)?,
        dist_to_k: distance_to_k(sys, &u)?,
        probes: probes.len(),
    })
}
