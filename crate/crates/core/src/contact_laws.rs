//! Normal-compliance laws of a deformable foundation.
//!
//! Each law gives the normal pressure `p(r)` as a function of the penetration
//! `r` (before scaling by the foundation stiffness `1 / lambda`), its potential
//! `j(r) = int_0^r p(s) ds` and the directional derivative `j0(r; s)`. All
//! three laws are continuous in `r`, so `j` is C1 and `j0(r; s) = p(r) s`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactLaw {
    /// `p(r) = a r_+`: linearly elastic foundation.
    Linear { a: f64 },
    /// `p(r) = a min(r_+, l)`: elastic-perfectly plastic foundation.
    PerfectPlastic { a: f64, l: f64 },
    /// Linear up to `b`, then decaying as `e^{-r} + a`: softening foundation.
    Softening { a: f64, b: f64 },
}

impl ContactLaw {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        match *self {
            ContactLaw::Linear { a } if !(a >= 0.0 && a.is_finite()) => {
                bad(format!("linear law needs a >= 0, got {a}"))
            }
            ContactLaw::PerfectPlastic { a, l } if !(a >= 0.0 && l > 0.0) => {
                bad(format!("plastic law needs a >= 0 and l > 0, got a = {a}, l = {l}"))
            }
            ContactLaw::Softening { a, b } if !(a >= 0.0 && b > 0.0) => {
                bad(format!("softening law needs a >= 0 and b > 0, got a = {a}, b = {b}"))
            }
            _ => Ok(()),
        }
    }

    /// Normal pressure for penetration `r`.
    pub fn p(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match *self {
            ContactLaw::Linear { a } => a * r,
            ContactLaw::PerfectPlastic { a, l } => {
                if r <= l {
                    a * r
                } else {
                    a * l
                }
            }
            ContactLaw::Softening { a, b } => {
                if r <= b {
                    (a + (-b).exp()) / b * r
                } else {
                    (-r).exp() + a
                }
            }
        }
    }

    /// Potential `j(r) = int_0^r p(s) ds` in closed form.
    pub fn j(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match *self {
            ContactLaw::Linear { a } => 0.5 * a * r * r,
            ContactLaw::PerfectPlastic { a, l } => {
                if r <= l {
                    0.5 * a * r * r
                } else {
                    a * l * r - 0.5 * a * l * l
                }
            }
            ContactLaw::Softening { a, b } => {
                let eb = (-b).exp();
                if r <= b {
                    (a + eb) / (2.0 * b) * r * r
                } else {
                    a * r - (-r).exp() + ((b + 2.0) * eb - a * b) / 2.0
                }
            }
        }
    }

    /// Directional derivative of `j` at `r` in direction `s`.
    pub fn j0(&self, r: f64, s: f64) -> f64 {
        self.p(r) * s
    }

    /// Derivative of `p`, taking the right derivative at break points.
    pub fn dp(&self, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        match *self {
            ContactLaw::Linear { a } => a,
            ContactLaw::PerfectPlastic { a, l } => {
                if r < l {
                    a
                } else {
                    0.0
                }
            }
            ContactLaw::Softening { a, b } => {
                if r < b {
                    (a + (-b).exp()) / b
                } else {
                    -(-r).exp()
                }
            }
        }
    }

    /// Points where the pieces of `p` meet.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            ContactLaw::Linear { .. } => vec![0.0],
            ContactLaw::PerfectPlastic { l, .. } => vec![0.0, l],
            ContactLaw::Softening { b, .. } => vec![0.0, b],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ContactLaw::Linear { .. } => "linear",
            ContactLaw::PerfectPlastic { .. } => "plastic",
            ContactLaw::Softening { .. } => "softening",
        }
    }
}

impl fmt::Display for ContactLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ContactLaw::Linear { a } => write!(f, "linear(a = {a})"),
            ContactLaw::PerfectPlastic { a, l } => write!(f, "plastic(a = {a}, l = {l})"),
            ContactLaw::Softening { a, b } => write!(f, "softening(a = {a}, b = {b})"),
        }
    }
}

/// Uniform sampling of `r in [-radius, radius]` and `s in [-radius, 0]`.
#[derive(Clone, Copy, Debug)]
pub struct SamplingGrid {
    pub radius: f64,
    pub step: f64,
}

impl SamplingGrid {
    fn points(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
    }

    /// `r` samples, including the law's break points.
    pub fn r_values(&self, law: &ContactLaw) -> Vec<f64> {
        let mut r = Self::points(-self.radius, self.radius, self.step);
        r.extend(law.breakpoints().into_iter().filter(|b| b.abs() <= self.radius));
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }

    pub fn s_values(&self) -> Vec<f64> {
        Self::points(-self.radius, 0.0, self.step)
    }
}

/// Sampled verification of the structural conditions on a law.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub law: ContactLaw,
    /// Fitted growth bound `|p(r)| <= c0 + c1 |r|`.
    pub c0: f64,
    pub c1: f64,
    /// Fitted `d` in `j0(r; -r) <= d (1 + |r|)`.
    pub d: f64,
    /// `max p(r) (s - r)` over the grid; must be `<= 0`.
    pub j1_margin: f64,
    /// Sample points `r > 0` at which `p(r)(s - r) >= 0` for every grid `s`
    /// (each one violates the implication).
    pub j2_violations: Vec<f64>,
    /// Minimum of `p` over the grid; must be `>= 0`.
    pub min_pressure: f64,
}

impl ConditionReport {
    pub fn j1_holds(&self) -> bool {
        self.j1_margin <= 0.0
    }

    pub fn j2_holds(&self) -> bool {
        self.j2_violations.is_empty()
    }

    pub fn all_hold(&self) -> bool {
        self.j1_holds() && self.j2_holds() && self.min_pressure >= 0.0
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "law {}", self.law)?;
        writeln!(f, "  growth: |p(r)| <= {:.6e} + {:.6e} |r|", self.c0, self.c1)?;
        writeln!(f, "  j0(r;-r) <= {:.6e} (1 + |r|)", self.d)?;
        writeln!(
            f,
            "  (j1) max p(r)(s-r) = {:.3e} [{}]",
            self.j1_margin,
            if self.j1_holds() { "ok" } else { "VIOLATED" }
        )?;
        write!(
            f,
            "  (j2) implication {} ({} violations)",
            if self.j2_holds() { "holds" } else { "VIOLATED" },
            self.j2_violations.len()
        )
    }
}

pub fn verify_conditions(law: &ContactLaw, grid: SamplingGrid) -> ConditionReport {
    let rs = grid.r_values(law);
    let ss = grid.s_values();

    let mut j1_margin = f64::NEG_INFINITY;
    let mut j2_violations = Vec::new();
    let mut min_pressure = f64::INFINITY;
    let mut d: f64 = 0.0;
    for &r in &rs {
        let p = law.p(r);
        min_pressure = min_pressure.min(p);
        d = d.max(law.j0(r, -r) / (1.0 + r.abs()));
        let mut all_nonneg = true;
        for &s in &ss {
            let v = law.j0(r, s - r);
            j1_margin = j1_margin.max(v);
            all_nonneg &= v >= 0.0;
        }
        if all_nonneg && r > 0.0 {
            j2_violations.push(r);
        }
    }

    // asymptotic slope from the upper half of the positive range, then the
    // smallest intercept that makes the bound hold on the grid
    let r_hi = grid.radius;
    let c1 = ((law.p(r_hi) - law.p(0.5 * r_hi)) / (0.5 * r_hi)).max(0.0);
    let c0 = rs
        .iter()
        .map(|&r| law.p(r).abs() - c1 * r.abs())
        .fold(0.0, f64::max);

    ConditionReport {
        law: *law,
        c0,
        c1,
        d,
        j1_margin,
        j2_violations,
        min_pressure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOFT: ContactLaw = ContactLaw::Softening { a: 0.1, b: 0.1 };

    #[test]
    fn pressure_point_values() {
        assert_eq!(ContactLaw::Linear { a: 2.0 }.p(3.0), 6.0);
        assert_eq!(ContactLaw::PerfectPlastic { a: 1.0, l: 0.5 }.p(2.0), 0.5);
        assert!((SOFT.p(0.05) - 0.5024187).abs() < 1e-7);
        assert!((SOFT.p(0.2) - 0.9187308).abs() < 1e-7);
        for law in [ContactLaw::Linear { a: 2.0 }, ContactLaw::PerfectPlastic { a: 1.0, l: 0.5 }, SOFT] {
            assert_eq!(law.p(-1.0), 0.0);
            assert_eq!(law.j(0.0), 0.0);
            assert_eq!(law.j0(0.7, 0.0), 0.0);
        }
    }

    #[test]
    fn potential_point_values() {
        assert_eq!(ContactLaw::Linear { a: 2.0 }.j(3.0), 9.0);
        assert_eq!(ContactLaw::PerfectPlastic { a: 1.0, l: 0.5 }.j(2.0), 0.875);
        assert_eq!(ContactLaw::Linear { a: 1.0 }.j0(2.0, -1.0), -2.0);
    }

    #[test]
    fn pieces_match_at_breakpoints() {
        for law in [ContactLaw::PerfectPlastic { a: 1.3, l: 0.4 }, SOFT, ContactLaw::Softening { a: 0.0, b: 2.0 }] {
            for b in law.breakpoints() {
                let eps = 1e-12;
                assert!((law.p(b + eps) - law.p(b - eps)).abs() < 1e-9, "{law} p at {b}");
                assert!((law.j(b + eps) - law.j(b - eps)).abs() < 1e-9, "{law} j at {b}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(ContactLaw::Linear { a: -1.0 }.validate().is_err());
        assert!(ContactLaw::PerfectPlastic { a: 1.0, l: 0.0 }.validate().is_err());
        assert!(ContactLaw::Softening { a: 0.1, b: 0.0 }.validate().is_err());
        assert!(SOFT.validate().is_ok());
    }

    #[test]
    fn softening_potential_is_not_convex() {
        let (r1, r2) = (0.5, 3.0);
        assert!(SOFT.j(0.5 * (r1 + r2)) > 0.5 * (SOFT.j(r1) + SOFT.j(r2)));
    }

    #[test]
    fn softening_growth_fit_is_bounded() {
        let report = verify_conditions(&SOFT, SamplingGrid { radius: 5.0, step: 1e-2 });
        assert_eq!(report.c1, 0.0);
        assert!((report.c0 - (0.1 + (-0.1f64).exp())).abs() < 1e-12);
        assert!(report.all_hold());
        assert_eq!(report.d, 0.0);
    }

    #[test]
    fn linear_growth_fit() {
        let report = verify_conditions(&ContactLaw::Linear { a: 2.0 }, SamplingGrid { radius: 5.0, step: 1e-2 });
        assert!((report.c1 - 2.0).abs() < 1e-12);
        assert!(report.c0 < 1e-12);
        assert_eq!(report.j1_margin, 0.0);
    }

    #[test]
    fn degenerate_law_violates_j2() {
        // a = 0 gives no reaction to penetration, so penetrating states pass
        // the premise of the implication
        let report = verify_conditions(&ContactLaw::Linear { a: 0.0 }, SamplingGrid { radius: 1.0, step: 0.1 });
        assert!(!report.j2_holds());
        assert!(report.j1_holds());
    }
}
