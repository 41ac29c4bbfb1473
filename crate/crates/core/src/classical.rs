//! Classical dynamics: orbit integration, sections, separatrices and chaotic-layer widths.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{h0_at, wrap_angle, ModelParams, PhasePoint};
use crate::quadrature::integrate_adaptive;

pub const DEFAULT_STEPS_PER_PERIOD: usize = 512;

// Blanes-Moan optimized 4th-order splitting, 7 drifts / 6 kicks (palindromic).
const A1: f64 = 0.0792036964311957;
const A2: f64 = 0.353172906049774;
const A3: f64 = -0.0420650803577195;
const A4: f64 = 1.0 - 2.0 * (A1 + A2 + A3);
const B1: f64 = 0.209515106613362;
const B2: f64 = -0.143851773179818;
const B3: f64 = 0.5 - B1 - B2;
const DRIFT: [f64; 7] = [A1, A2, A3, A4, A3, A2, A1];
const KICK: [f64; 6] = [B1, B2, B3, B3, B2, B1];

/// Time offsets (in units of dt) at which the six kicks of one step are evaluated.
fn kick_offsets() -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut t = 0.0;
    for i in 0..6 {
        t += DRIFT[i];
        out[i] = t;
    }
    out
}

#[inline]
fn force(params: &ModelParams, sphi: f64, cphi: f64, stau: f64, ctau: f64) -> f64 {
    // -eps sin(phi) - mu sin(phi - tau) - mu' sin(phi + tau)
    let s_minus = sphi * ctau - cphi * stau;
    let s_plus = sphi * ctau + cphi * stau;
    -params.epsilon * sphi - params.mu * s_minus - params.mu_prime * s_plus
}

/// Integrates Hamilton's equations for `n_steps` steps of size `dt` (negative `dt` runs backwards).
///
/// Returns the final point (unwrapped) and time.
pub fn evolve(params: &ModelParams, phi: f64, p: f64, tau: f64, n_steps: usize, dt: f64) -> (f64, f64, f64) {
    let (mut phi, mut p, mut tau) = (phi, p, tau);
    for _ in 0..n_steps {
        for i in 0..6 {
            phi += DRIFT[i] * dt * params.a * p.sin();
            tau += DRIFT[i] * dt;
            let (sp, cp) = phi.sin_cos();
            let (st, ct) = tau.sin_cos();
            p += KICK[i] * dt * force(params, sp, cp, st, ct);
        }
        phi += DRIFT[6] * dt * params.a * p.sin();
        tau += DRIFT[6] * dt;
    }
    (phi, p, tau)
}

/// Stroboscopic record of one orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub samples: Vec<PhasePoint>,
    pub energies: Vec<f64>,
    pub mean_h0: f64,
    pub sigma_h0: f64,
}

impl OrbitRecord {
    fn from_samples(params: &ModelParams, samples: Vec<PhasePoint>) -> Self {
        let energies: Vec<f64> = samples.iter().map(|s| h0_at(params, s.phi, s.p)).collect();
        let (mean_h0, sigma_h0) = mean_std(&energies);
        OrbitRecord {
            samples,
            energies,
            mean_h0,
            sigma_h0,
        }
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Integrates one orbit from time `tau_s`, sampling once per period at `tau = tau_s (mod 2pi)`.
///
/// The perturbation phase at every kick is taken from a per-period table, so the
/// result depends only on `(params, init, steps_per_period, tau_s)`.
pub fn integrate_orbit(
    params: &ModelParams,
    init: PhasePoint,
    n_periods: usize,
    steps_per_period: usize,
    tau_s: f64,
) -> Result<OrbitRecord> {
    if n_periods < 1 {
        return Err(Error::Domain("n_periods must be >= 1".into()));
    }
    if steps_per_period < 16 {
        return Err(Error::Domain(format!(
            "steps_per_period must be >= 16 (got {steps_per_period})"
        )));
    }
    let dt = TAU / steps_per_period as f64;
    let offs = kick_offsets();
    let table: Vec<[(f64, f64); 6]> = (0..steps_per_period)
        .map(|n| {
            let t0 = tau_s + n as f64 * dt;
            let mut row = [(0.0, 0.0); 6];
            for i in 0..6 {
                row[i] = (t0 + offs[i] * dt).sin_cos();
            }
            row
        })
        .collect();
    let drift: [f64; 7] = DRIFT.map(|c| c * dt * params.a);
    let kick: [f64; 6] = KICK.map(|c| c * dt);

    let (mut phi, mut p) = (init.phi, init.p);
    let mut samples = Vec::with_capacity(n_periods);
    for _ in 0..n_periods {
        for row in &table {
            for i in 0..6 {
                phi += drift[i] * p.sin();
                let (sp, cp) = phi.sin_cos();
                let (st, ct) = row[i];
                p += kick[i] * force(params, sp, cp, st, ct);
            }
            phi += drift[6] * p.sin();
        }
        phi = wrap_angle(phi);
        p = wrap_angle(p);
        samples.push(PhasePoint { phi, p });
    }
    Ok(OrbitRecord::from_samples(params, samples))
}

/// Initial conditions drawn uniformly on the torus from a ChaCha8 stream seeded with `seed`.
///
/// Each point consumes two consecutive `f64` draws in `[0, 1)`, scaled by 2pi (phi first).
pub fn uniform_initial_conditions(n: usize, seed: u64) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let phi = TAU * rng.random::<f64>();
            let p = TAU * rng.random::<f64>();
            PhasePoint::new(phi, p)
        })
        .collect()
}

/// Poincare section of `n_orbits` random orbits with `n_points` section points each.
pub fn poincare_section(
    params: &ModelParams,
    n_orbits: usize,
    n_points: usize,
    seed: u64,
    tau_s: f64,
) -> Result<Vec<OrbitRecord>> {
    poincare_section_with_steps(params, n_orbits, n_points, DEFAULT_STEPS_PER_PERIOD, seed, tau_s)
}

pub fn poincare_section_with_steps(
    params: &ModelParams,
    n_orbits: usize,
    n_points: usize,
    steps_per_period: usize,
    seed: u64,
    tau_s: f64,
) -> Result<Vec<OrbitRecord>> {
    if n_orbits < 1 {
        return Err(Error::Domain("n_orbits must be >= 1".into()));
    }
    let inits = uniform_initial_conditions(n_orbits, seed);
    integrate_many(params, &inits, n_points, steps_per_period, tau_s)
}

/// Parallel map over initial conditions, collected in input order.
pub fn integrate_many(
    params: &ModelParams,
    inits: &[PhasePoint],
    n_periods: usize,
    steps_per_period: usize,
    tau_s: f64,
) -> Result<Vec<OrbitRecord>> {
    inits
        .par_iter()
        .map(|&pt| integrate_orbit(params, pt, n_periods, steps_per_period, tau_s))
        .collect()
}

/// The two separatrix energies `(eps, 2a - eps)`.
pub fn separatrix_energies(params: &ModelParams) -> (f64, f64) {
    (params.epsilon, 2.0 * params.a - params.epsilon)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeparatrixBranch {
    /// `E = eps`: `sin(p/2) = s sqrt(eps/a) cos(phi/2)`
    Low { positive: bool },
    /// `E = 2a - eps`: `cos(p/2) = s sqrt(eps/a) sin(phi/2)`
    High { positive: bool },
}

impl SeparatrixBranch {
    pub fn energy(&self, params: &ModelParams) -> f64 {
        let (lo, hi) = separatrix_energies(params);
        match self {
            SeparatrixBranch::Low { .. } => lo,
            SeparatrixBranch::High { .. } => hi,
        }
    }
}

/// Momentum on the requested separatrix branch at angle `phi`, in `[0, 2pi)`.
pub fn separatrix_curve(params: &ModelParams, phi: f64, branch: SeparatrixBranch) -> Result<f64> {
    params.check_positive()?;
    let r = (params.epsilon / params.a).sqrt();
    let half = 0.5 * wrap_angle(phi);
    let (arg, sign) = match branch {
        SeparatrixBranch::Low { positive } => (r * half.cos(), positive),
        SeparatrixBranch::High { positive } => (r * half.sin(), positive),
    };
    let arg = if sign { arg } else { -arg };
    if arg.abs() > 1.0 {
        return Err(Error::Domain(format!(
            "phi={phi} outside the solvable range of the {branch:?} separatrix branch"
        )));
    }
    let p = match branch {
        SeparatrixBranch::Low { .. } => 2.0 * arg.asin(),
        SeparatrixBranch::High { .. } => 2.0 * arg.acos(),
    };
    Ok(wrap_angle(p))
}

/// Angle along the separatrix orbit `2 arctan(exp(sign a tau))`, available only for `a = eps`.
pub fn separatrix_trajectory(params: &ModelParams, tau: f64, sign: f64) -> Result<f64> {
    let scale = params.a.abs().max(params.epsilon.abs());
    if (params.a - params.epsilon).abs() > 1e-12 * scale {
        return Err(Error::Unsupported(format!(
            "closed-form separatrix orbit needs a = epsilon (a={}, epsilon={})",
            params.a, params.epsilon
        )));
    }
    Ok(2.0 * (sign.signum() * params.a * tau).exp().atan())
}

/// `A1(lambda) = 2pi e^{pi lambda/2} / sinh(pi lambda)`.
pub fn melnikov_a1(lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain(format!("Melnikov-Arnold integral undefined at lambda={lambda}")));
    }
    if lambda > 0.0 {
        let x = PI * lambda;
        Ok(4.0 * PI * (-0.5 * x).exp() / (-(-2.0 * x).exp_m1()))
    } else {
        Ok(2.0 * PI * (0.5 * PI * lambda).exp() / (PI * lambda).sinh())
    }
}

/// `A2(lambda) = 2 lambda A1(lambda)`.
pub fn melnikov_a2(lambda: f64) -> Result<f64> {
    Ok(2.0 * lambda * melnikov_a1(lambda)?)
}

/// Numerical Melnikov-Arnold integral `int cos(m phi_s(t)/2 - lambda t) dt` along
/// `phi_s(t) = 4 arctan(e^t) - pi`, for `m` in {1, 2}.
///
/// The integral converges only conditionally; the non-decaying parts are split off and
/// summed in closed form (Abel limit), the rest is integrated adaptively on `[-40, 40]`.
pub fn melnikov_quadrature(m: u32, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("quadrature needs lambda > 0 (got {lambda})")));
    }
    let l = lambda;
    let sign = |t: f64| if t > 0.0 { 1.0 } else if t < 0.0 { -1.0 } else { 0.0 };
    let (v, _) = match m {
        1 => integrate_adaptive(
            |t: f64| {
                let (s, c) = (l * t).sin_cos();
                c / t.cosh() + (t.tanh() - sign(t)) * s
            },
            -40.0,
            40.0,
            1e-15,
            1e-13,
        ),
        2 => integrate_adaptive(
            |t: f64| {
                let (s, c) = (l * t).sin_cos();
                let sech = 1.0 / t.cosh();
                2.0 * sech * sech * c + 2.0 * (sech * t.tanh()) * s
            },
            -40.0,
            40.0,
            1e-15,
            1e-13,
        ),
        _ => return Err(Error::Domain(format!("m must be 1 or 2 (got {m})"))),
    };
    // int sign(t) sin(lt) dt -> 2/l; int cos(lt) dt -> 0
    Ok(if m == 1 { v + 2.0 / l } else { v })
}

// e^{x/2}/sinh(x) = 2 e^{-x/2}/(1 - e^{-2x}) for x > 0
fn exp_over_sinh(x: f64) -> f64 {
    2.0 * (-0.5 * x).exp() / (-(-2.0 * x).exp_m1())
}

fn check_width_args(mu: f64, omega0: f64) -> Result<()> {
    if !(omega0 > 0.0) {
        return Err(Error::Domain(format!("omega0 must be positive (got {omega0})")));
    }
    if mu < 0.0 {
        return Err(Error::Domain(format!("mu must be non-negative (got {mu})")));
    }
    Ok(())
}

/// First-order half width of the chaotic layer of a periodically driven pendulum.
pub fn chaotic_halfwidth_pendulum(mu: f64, omega0: f64) -> Result<f64> {
    check_width_args(mu, omega0)?;
    Ok(4.0 * PI * mu / (omega0 * omega0) * exp_over_sinh(PI / omega0))
}

/// First-order half width of the chaotic layer of the Harper model with `a = eps`.
pub fn chaotic_halfwidth_harper(mu: f64, omega0: f64) -> Result<f64> {
    check_width_args(mu, omega0)?;
    Ok(2.0 * PI * mu / omega0 * exp_over_sinh(PI / omega0))
}

/// Numerically measured width of the layer around a separatrix energy.
#[derive(Clone, Debug, PartialEq)]
pub struct WidthMeasurement {
    pub separatrix_energy: f64,
    /// `(max H0 - min H0)/2` over all section points of the seeded orbits.
    pub half_range: f64,
    /// Largest per-orbit `sigma_H0`.
    pub max_sigma: f64,
    pub n_orbits: usize,
}

/// Seeds `n_orbits` orbits with `|H0 - e_s| < window` (rejection sampling on the torus)
/// and measures how far their section energies spread.
pub fn measure_layer_width(
    params: &ModelParams,
    e_s: f64,
    window: f64,
    n_orbits: usize,
    n_periods: usize,
    steps_per_period: usize,
    seed: u64,
) -> Result<WidthMeasurement> {
    if n_orbits < 1 || !(window > 0.0) {
        return Err(Error::Domain("need n_orbits >= 1 and window > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inits = Vec::with_capacity(n_orbits);
    let mut tries = 0usize;
    while inits.len() < n_orbits {
        tries += 1;
        if tries > 10_000_000 {
            return Err(Error::Domain(format!(
                "no phase-space points within {window} of energy {e_s}"
            )));
        }
        let phi = TAU * rng.random::<f64>();
        let p = TAU * rng.random::<f64>();
        if (h0_at(params, phi, p) - e_s).abs() < window {
            inits.push(PhasePoint::new(phi, p));
        }
    }
    let orbits = integrate_many(params, &inits, n_periods, steps_per_period, 0.0)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut max_sigma: f64 = 0.0;
    for o in &orbits {
        for &e in &o.energies {
            lo = lo.min(e);
            hi = hi.max(e);
        }
        max_sigma = max_sigma.max(o.sigma_h0);
    }
    Ok(WidthMeasurement {
        separatrix_energy: e_s,
        half_range: 0.5 * (hi - lo),
        max_sigma,
        n_orbits,
    })
}
