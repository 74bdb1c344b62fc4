//! Model constants and the constitutive laws `P`, `mu`, `kappa`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants of the pressure, viscosity and drag laws.
///
/// The struct itself admits degenerate values such as `kappa0 = 0` or `a = 0`,
/// which the test oracles rely on. [`ModelParams::validate`] enforces the
/// admissible parameter range and is applied to every loaded scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Pressure constant `A` in `P = A rho^gamma`.
    pub a: f64,
    pub gamma: f64,
    pub mu0: f64,
    pub mu1: f64,
    pub beta: f64,
    /// Drag constant in `kappa(rho) = kappa0 rho`.
    pub kappa0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            a: 1.0,
            gamma: 1.4,
            mu0: 1.0,
            mu1: 1.0,
            beta: 1.0,
            kappa0: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation(msg.to_string()))
            }
        };
        check(self.a > 0.0 && self.a.is_finite(), "params.a must be > 0")?;
        check(self.gamma > 1.0 && self.gamma.is_finite(), "params.gamma must be > 1")?;
        check(self.mu0 > 0.0 && self.mu0.is_finite(), "params.mu0 must be > 0")?;
        check(self.mu1 >= 0.0 && self.mu1.is_finite(), "params.mu1 must be >= 0")?;
        check(self.beta >= 0.0 && self.beta.is_finite(), "params.beta must be >= 0")?;
        check(
            self.kappa0 > 0.0 && self.kappa0.is_finite(),
            "params.kappa0 must be > 0",
        )?;
        Ok(())
    }

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else {
            self.a * rho.powf(self.gamma)
        }
    }

    #[inline]
    pub(crate) fn mu(&self, rho: f64) -> f64 {
        // powf(0, 0) is 1, which is the convention we want for beta = 0
        self.mu0 + self.mu1 * rho.powf(self.beta)
    }

    #[inline]
    pub(crate) fn kappa(&self, rho: f64) -> f64 {
        self.kappa0 * rho
    }

    /// Internal-energy density `P(rho) / (gamma - 1)`.
    #[inline]
    pub(crate) fn internal_energy(&self, rho: f64) -> f64 {
        self.p(rho) / (self.gamma - 1.0)
    }

    /// Sound speed `sqrt(gamma P / rho)` evaluated at a density already floored.
    #[inline]
    pub(crate) fn sound_speed(&self, rho_floored: f64) -> f64 {
        (self.gamma * self.p(rho_floored) / rho_floored).max(0.0).sqrt()
    }
}

fn check_density(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("density", "nonnegative and finite", rho))
    }
}

/// `P(rho) = A rho^gamma`.
pub fn pressure(rho: f64, params: &ModelParams) -> Result<f64> {
    check_density(rho)?;
    Ok(params.p(rho))
}

/// `mu(rho) = mu0 + mu1 rho^beta`, with `0^0 = 1`.
pub fn viscosity(rho: f64, params: &ModelParams) -> Result<f64> {
    check_density(rho)?;
    Ok(params.mu(rho))
}

/// `kappa(rho) = kappa0 rho`.
pub fn drag_coefficient(rho: f64, params: &ModelParams) -> Result<f64> {
    check_density(rho)?;
    Ok(params.kappa(rho))
}
