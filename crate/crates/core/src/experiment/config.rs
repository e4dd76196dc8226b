//! Flat `key = value` configuration files.
//!
//! ```text
//! # comments start with '#'
//! geometry.width = 2
//! geometry.height = 1
//! geometry.h = 0.03125
//! material.E = 12000
//! material.kappa = 0.42
//! load.f0 = -200, -800
//! load.f2 = 0, 0
//! friction.F_b = 10
//! law = softening
//! law.a = 0.1
//! law.b = 0.1
//! lambdas = default          # or a comma separated list
//! rho = 1e-8
//! solver.method = newton     # or gradient
//! solver.grad_tol = 1e-9
//! solver.max_iters = 200000
//! probes = 32
//! seed = 0
//! output = out
//! ```
//!
//! Every key is optional; missing keys keep the defaults above. Unknown keys
//! are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::contact_laws::ContactLaw;
use crate::energy::DEFAULT_RHO;
use crate::error::{Error, Result};
use crate::fem::Material;
use crate::solver::{Method, SolveOptions};

/// `10^0, 10^-0.5, ..., 10^-8`.
pub fn default_lambdas() -> Vec<f64> {
    (0..=16).map(|k| 10f64.powf(-0.5 * k as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub width: f64,
    pub height: f64,
    pub h: f64,
    pub youngs_modulus: f64,
    pub kappa: f64,
    pub body_force: [f64; 2],
    pub traction: [f64; 2],
    pub friction_bound: f64,
    pub law: ContactLaw,
    pub lambdas: Vec<f64>,
    pub rho: f64,
    pub method: Method,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub probes: usize,
    pub seed: u64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            width: 2.0,
            height: 1.0,
            h: 1.0 / 32.0,
            youngs_modulus: 12_000.0,
            kappa: 0.42,
            body_force: [-200.0, -800.0],
            traction: [0.0, 0.0],
            friction_bound: 10.0,
            law: ContactLaw::Softening { a: 0.1, b: 0.1 },
            lambdas: default_lambdas(),
            rho: DEFAULT_RHO,
            method: Method::ProjectedNewton,
            grad_tol: 1e-9,
            max_iters: 200_000,
            probes: 32,
            seed: 0,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum LawKind {
    Linear,
    Plastic,
    Softening,
}

impl ExperimentConfig {
    pub fn material(&self) -> Result<Material> {
        Material::new(self.youngs_modulus, self.kappa)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            method: self.method,
            ..SolveOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("geometry.width", self.width), ("geometry.height", self.height), ("geometry.h", self.h)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        self.material()?;
        if self.body_force.iter().chain(&self.traction).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("loads must be finite".into()));
        }
        if !(self.friction_bound >= 0.0 && self.friction_bound.is_finite()) {
            return Err(Error::Parameter(format!(
                "friction.F_b must be nonnegative, got {}",
                self.friction_bound
            )));
        }
        self.law.validate()?;
        if self.lambdas.is_empty() {
            return Err(Error::Parameter("lambda grid is empty".into()));
        }
        if let Some(bad) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Parameter(format!("lambda must be positive, got {bad}")));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Parameter("lambda grid must be strictly decreasing".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Parameter(format!("rho must be positive, got {}", self.rho)));
        }
        self.solve_options().validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut kind: Option<LawKind> = None;
        let (mut a, mut b, mut l) = (None, None, None);

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| Error::Config { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || parse_f64(value).map_err(err);
            match key {
                "geometry.width" => cfg.width = num()?,
                "geometry.height" => cfg.height = num()?,
                "geometry.h" => cfg.h = num()?,
                "material.E" => cfg.youngs_modulus = num()?,
                "material.kappa" => cfg.kappa = num()?,
                "load.f0" => cfg.body_force = parse_pair(value).map_err(err)?,
                "load.f2" => cfg.traction = parse_pair(value).map_err(err)?,
                "friction.F_b" => cfg.friction_bound = num()?,
                "law" | "law.kind" => {
                    kind = Some(match value {
                        "linear" => LawKind::Linear,
                        "plastic" | "perfect_plastic" => LawKind::Plastic,
                        "softening" => LawKind::Softening,
                        other => return Err(err(format!("unknown contact law `{other}`"))),
                    })
                }
                "law.a" => a = Some(num()?),
                "law.b" => b = Some(num()?),
                "law.l" => l = Some(num()?),
                "lambdas" => {
                    cfg.lambdas = if value == "default" {
                        default_lambdas()
                    } else {
                        value
                            .split(',')
                            .map(|s| parse_f64(s.trim()))
                            .collect::<std::result::Result<_, _>>()
                            .map_err(err)?
                    }
                }
                "rho" => cfg.rho = num()?,
                "solver.method" => {
                    cfg.method = match value {
                        "newton" => Method::ProjectedNewton,
                        "gradient" => Method::ProjectedGradient,
                        other => return Err(err(format!("unknown solver method `{other}`"))),
                    }
                }
                "solver.grad_tol" => cfg.grad_tol = num()?,
                "solver.max_iters" => cfg.max_iters = parse_int(value).map_err(err)? as usize,
                "probes" => cfg.probes = parse_int(value).map_err(err)? as usize,
                "seed" => cfg.seed = parse_int(value).map_err(err)?,
                "output" => cfg.output = PathBuf::from(value),
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        if kind.is_some() || a.is_some() || b.is_some() || l.is_some() {
            cfg.law = build_law(kind, cfg.law, a, b, l)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes to the format read by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "geometry.width = {}", self.width);
        let _ = writeln!(s, "geometry.height = {}", self.height);
        let _ = writeln!(s, "geometry.h = {}", self.h);
        let _ = writeln!(s, "material.E = {}", self.youngs_modulus);
        let _ = writeln!(s, "material.kappa = {}", self.kappa);
        let _ = writeln!(s, "load.f0 = {}, {}", self.body_force[0], self.body_force[1]);
        let _ = writeln!(s, "load.f2 = {}, {}", self.traction[0], self.traction[1]);
        let _ = writeln!(s, "friction.F_b = {}", self.friction_bound);
        match self.law {
            ContactLaw::Linear { a } => {
                let _ = writeln!(s, "law = linear\nlaw.a = {a}");
            }
            ContactLaw::PerfectPlastic { a, l } => {
                let _ = writeln!(s, "law = plastic\nlaw.a = {a}\nlaw.l = {l}");
            }
            ContactLaw::Softening { a, b } => {
                let _ = writeln!(s, "law = softening\nlaw.a = {a}\nlaw.b = {b}");
            }
        }
        let lambdas: Vec<String> = self.lambdas.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "lambdas = {}", lambdas.join(", "));
        let _ = writeln!(s, "rho = {}", self.rho);
        let method = match self.method {
            Method::ProjectedNewton => "newton",
            Method::ProjectedGradient => "gradient",
        };
        let _ = writeln!(s, "solver.method = {method}");
        let _ = writeln!(s, "solver.grad_tol = {}", self.grad_tol);
        let _ = writeln!(s, "solver.max_iters = {}", self.max_iters);
        let _ = writeln!(s, "probes = {}", self.probes);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {}", self.output.display());
        s
    }
}

/// Missing parameters are taken from `current` when the law kind is unchanged.
fn build_law(
    kind: Option<LawKind>,
    current: ContactLaw,
    a: Option<f64>,
    b: Option<f64>,
    l: Option<f64>,
) -> Result<ContactLaw> {
    let (current_kind, ca, cb, cl) = match current {
        ContactLaw::Linear { a } => (LawKind::Linear, Some(a), None, None),
        ContactLaw::PerfectPlastic { a, l } => (LawKind::Plastic, Some(a), None, Some(l)),
        ContactLaw::Softening { a, b } => (LawKind::Softening, Some(a), Some(b), None),
    };
    let kind = kind.unwrap_or(current_kind);
    let (a, b, l) = if kind == current_kind {
        (a.or(ca), b.or(cb), l.or(cl))
    } else {
        (a, b, l)
    };
    let missing = |name: &str| Error::Parameter(format!("contact law needs `law.{name}`"));
    let law = match kind {
        LawKind::Linear => ContactLaw::Linear {
            a: a.ok_or_else(|| missing("a"))?,
        },
        LawKind::Plastic => ContactLaw::PerfectPlastic {
            a: a.ok_or_else(|| missing("a"))?,
            l: l.ok_or_else(|| missing("l"))?,
        },
        LawKind::Softening => ContactLaw::Softening {
            a: a.ok_or_else(|| missing("a"))?,
            b: b.ok_or_else(|| missing("b"))?,
        },
    };
    law.validate()?;
    Ok(law)
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))
}

fn parse_int(s: &str) -> std::result::Result<u64, String> {
    s.parse::<u64>().map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok([parse_f64(x)?, parse_f64(y)?]),
        _ => Err(format!("expected two comma separated numbers, got `{s}`")),
    }
}
