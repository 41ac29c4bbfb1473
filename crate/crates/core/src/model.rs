//! Parameters of the perturbed Harper Hamiltonian and torus coordinates.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Dimensionless Harper parameters.
///
/// `H = a(1 - cos p) - eps cos(phi) - mu cos(phi - tau) - mu' cos(phi + tau)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub mu_prime: f64,
}

impl ModelParams {
    pub fn new(a: f64, epsilon: f64, mu: f64, mu_prime: f64) -> Self {
        ModelParams {
            a,
            epsilon,
            mu,
            mu_prime,
        }
    }

    /// Same kinetic and potential amplitudes, perturbation switched off.
    pub fn unperturbed(&self) -> Self {
        ModelParams {
            mu: 0.0,
            mu_prime: 0.0,
            ..*self
        }
    }

    /// Small-oscillation frequency about the stable point (0, 0).
    pub fn omega0(&self) -> f64 {
        (self.epsilon * self.a).sqrt()
    }

    pub fn is_unperturbed(&self) -> bool {
        self.mu == 0.0 && self.mu_prime == 0.0
    }

    /// Width estimates need strictly positive amplitudes.
    pub fn check_positive(&self) -> Result<()> {
        if self.a > 0.0 && self.epsilon > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "a and epsilon must be positive (a={}, epsilon={})",
                self.a, self.epsilon
            )))
        }
    }
}

/// Converts dimensional amplitudes (energies) to model units by dividing by `L0 * nu`.
pub fn params_from_physical(
    a_k: f64,
    eps_k: f64,
    mu_k: f64,
    mu_k_prime: f64,
    l0: f64,
    nu: f64,
) -> Result<ModelParams> {
    if !(l0 > 0.0) || !(nu > 0.0) {
        return Err(Error::Domain(format!(
            "L0 and nu must be positive (L0={l0}, nu={nu})"
        )));
    }
    let s = l0 * nu;
    Ok(ModelParams::new(a_k / s, eps_k / s, mu_k / s, mu_k_prime / s))
}

/// Point on the phase-space torus, both coordinates in `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub phi: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(phi: f64, p: f64) -> Self {
        PhasePoint {
            phi: wrap_angle(phi),
            p: wrap_angle(p),
        }
    }
}

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Unperturbed energy `a(1 - cos p) - eps cos phi`.
pub fn h0_classical(params: &ModelParams, pt: PhasePoint) -> f64 {
    h0_at(params, pt.phi, pt.p)
}

#[inline]
pub(crate) fn h0_at(params: &ModelParams, phi: f64, p: f64) -> f64 {
    params.a * (1.0 - p.cos()) - params.epsilon * phi.cos()
}
