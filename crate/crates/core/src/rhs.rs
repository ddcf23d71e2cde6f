//! Right-hand sides `ψ(ξ, u, τ)` of the curvature equation.
//!
//! Only closed-form families are admitted so that the growth hypothesis
//! `ψ_τ τ − 2ψ ≥ 0` can be certified rather than sampled.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Which growth hypothesis a run must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `ψ_τ τ − 2ψ ≥ 0`.
    Theorem1,
    /// `ψ_τ τ − 2ψ > 0`.
    Theorem2,
    #[default]
    Permissive,
}

impl Mode {
    pub fn accepts(&self, growth_margin: f64) -> bool {
        match self {
            Mode::Theorem1 => growth_margin >= 0.0,
            Mode::Theorem2 => growth_margin > 0.0,
            Mode::Permissive => true,
        }
    }
}

/// Positive base factor `φ₀(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsiBase {
    Constant { value: f64 },
    /// `value · (1 + amplitude · sin θ)`, a bump peaking on the equator.
    CosineBump { value: f64, amplitude: f64 },
}

impl PsiBase {
    pub fn validate(&self) -> Result<()> {
        let (value, amplitude) = match *self {
            PsiBase::Constant { value } => (value, 0.0),
            PsiBase::CosineBump { value, amplitude } => (value, amplitude),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidModel(format!("base value {value} must be positive")));
        }
        if !(amplitude.abs() < 1.0) {
            return Err(Error::InvalidModel(format!("amplitude {amplitude} must satisfy |amplitude| < 1")));
        }
        Ok(())
    }

    pub fn at(&self, theta: f64) -> f64 {
        match *self {
            PsiBase::Constant { value } => value,
            PsiBase::CosineBump { value, amplitude } => value * (1.0 + amplitude * (theta - FRAC_PI_2).cos()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PsiModel {
    /// `ψ = φ₀(ξ) τ^p`.
    Power { base: PsiBase, p: f64 },
    /// Frozen per-node values, independent of `u` and `τ`. Indexed like the
    /// grid nodes.
    CustomTable { values: Vec<f64> },
}

/// `ψ` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEval {
    pub psi: f64,
    pub psi_u: f64,
    pub psi_tau: f64,
    pub psi_tautau: f64,
    /// `ψ_τ τ − 2ψ`.
    pub growth_margin: f64,
}

/// Where `ψ` is evaluated: graph coordinates plus the grid index used by
/// tabulated models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiPoint {
    pub theta: f64,
    pub phi: f64,
    pub u: f64,
    pub index: usize,
}

/// Largest roundoff shortfall below `τ = 1` that is still accepted.
const TAU_ROUNDOFF: f64 = 1e-12;

impl PsiModel {
    pub fn power(base: PsiBase, p: f64) -> Result<Self> {
        let m = PsiModel::Power { base, p };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PsiModel::Power { base, p } => {
                base.validate()?;
                if !p.is_finite() {
                    return Err(Error::InvalidModel(format!("exponent p = {p} is not finite")));
                }
                Ok(())
            }
            PsiModel::CustomTable { values } => match values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                Some(i) => Err(Error::InvalidModel(format!("table entry {i} = {} is not positive", values[i]))),
                None => Ok(()),
            },
        }
    }

    /// Checks the model against a growth hypothesis before any solve. The
    /// power family has margin `(p − 2)ψ`, so its sign is decided by `p`; a
    /// table has `ψ_τ = 0` and margin `−2ψ < 0`.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        self.validate()?;
        if mode == Mode::Permissive {
            return Ok(());
        }
        match self {
            PsiModel::Power { p, .. } => {
                let ok = match mode {
                    Mode::Theorem1 => *p >= 2.0,
                    _ => *p > 2.0,
                };
                if !ok {
                    return Err(Error::InvalidModel(format!(
                        "p = {p} violates the growth condition required by {mode:?} mode"
                    )));
                }
                Ok(())
            }
            PsiModel::CustomTable { .. } => {
                Err(Error::InvalidModel(format!("tabulated right-hand sides are not allowed in {mode:?} mode")))
            }
        }
    }

    pub fn eval(&self, at: PsiPoint, tau: f64) -> Result<PsiEval> {
        if !(tau >= 1.0 - TAU_ROUNDOFF) {
            return Err(Error::Domain(format!("tilt tau = {tau} is below 1")));
        }
        match self {
            PsiModel::Power { base, p } => {
                let b = base.at(at.theta);
                let psi = b * tau.powf(*p);
                let psi_tau = p * b * tau.powf(p - 1.0);
                let psi_tautau = p * (p - 1.0) * b * tau.powf(p - 2.0);
                Ok(PsiEval { psi, psi_u: 0.0, psi_tau, psi_tautau, growth_margin: psi_tau * tau - 2.0 * psi })
            }
            PsiModel::CustomTable { values } => {
                let psi = *values.get(at.index).ok_or_else(|| {
                    Error::Domain(format!("table has {} entries, index {} requested", values.len(), at.index))
                })?;
                Ok(PsiEval { psi, psi_u: 0.0, psi_tau: 0.0, psi_tautau: 0.0, growth_margin: -2.0 * psi })
            }
        }
    }
}

/// Base value that makes the slice `u ≡ c` an exact solution of the power
/// family with zero amplitude: on the slice `τ = cosh c` and `f = tanh c`.
pub fn calibrated_base_value(c: f64, p: f64) -> f64 {
    c.tanh() / c.cosh().powf(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt() -> PsiPoint {
        PsiPoint { theta: 1.2, phi: 0.4, u: 0.3, index: 0 }
    }

    fn unit_power(p: f64) -> PsiModel {
        PsiModel::Power { base: PsiBase::Constant { value: 1.0 }, p }
    }

    #[test]
    fn power_examples() {
        let e = unit_power(2.0).eval(pt(), 2.0).unwrap();
        assert_eq!((e.psi, e.psi_tau, e.growth_margin), (4.0, 4.0, 0.0));
        let e = unit_power(3.0).eval(pt(), 2.0).unwrap();
        assert_eq!((e.psi, e.growth_margin), (8.0, 8.0));
        let e = unit_power(1.0).eval(pt(), 2.0).unwrap();
        assert_eq!(e.growth_margin, -e.psi);
    }

    #[test]
    fn mode_gating() {
        assert!(unit_power(1.0).check_mode(Mode::Theorem1).is_err());
        assert!(unit_power(2.0).check_mode(Mode::Theorem1).is_ok());
        assert!(unit_power(2.0).check_mode(Mode::Theorem2).is_err());
        assert!(unit_power(3.0).check_mode(Mode::Theorem2).is_ok());
        assert!(unit_power(1.0).check_mode(Mode::Permissive).is_ok());
        let table = PsiModel::CustomTable { values: vec![0.5; 4] };
        assert!(table.check_mode(Mode::Theorem1).is_err());
        assert!(table.check_mode(Mode::Permissive).is_ok());
    }

    #[test]
    fn tau_below_one_is_a_domain_error() {
        assert!(matches!(unit_power(3.0).eval(pt(), 0.9), Err(Error::Domain(_))));
    }

    #[test]
    fn base_validation() {
        assert!(PsiBase::Constant { value: -1.0 }.validate().is_err());
        assert!(PsiBase::CosineBump { value: 1.0, amplitude: 1.0 }.validate().is_err());
        let b = PsiBase::CosineBump { value: 2.0, amplitude: 0.1 };
        assert!((b.at(FRAC_PI_2) - 2.2).abs() < 1e-15);
    }

    #[test]
    fn calibration_reproduces_slice() {
        for c in [0.25, 0.5, 1.0] {
            let m = unit_power(3.0);
            let PsiModel::Power { p, .. } = m else { unreachable!() };
            let b = calibrated_base_value(c, p);
            let m = PsiModel::Power { base: PsiBase::Constant { value: b }, p };
            let e = m.eval(pt(), f64::cosh(c)).unwrap();
            assert!((e.psi - f64::tanh(c)).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn power_family_properties(p in 2.0f64..6.0, tau in 1.0f64..10.0, v in 0.1f64..3.0, amp in -0.9f64..0.9, theta in 0.8f64..2.3) {
            let m = PsiModel::Power { base: PsiBase::CosineBump { value: v, amplitude: amp }, p };
            let at = PsiPoint { theta, ..pt() };
            let e = m.eval(at, tau).unwrap();
            prop_assert!(e.psi > 0.0);
            prop_assert!(e.psi_tautau >= 0.0);
            prop_assert!((e.growth_margin - (p - 2.0) * e.psi).abs() <= 1e-12 * e.psi.abs().max(1.0) * p);
            let h = 1e-5 * tau;
            let fd = (m.eval(at, tau + h).unwrap().psi - m.eval(at, tau - h).unwrap().psi) / (2.0 * h);
            prop_assert!((fd - e.psi_tau).abs() <= 1e-8 * e.psi_tau.abs());
        }
    }
}
