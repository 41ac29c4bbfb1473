//! Interaction-picture perturbation analysis: averaged first Magnus term, the V matrix,
//! dispersion estimates and the second-order dispersion identity.
//!
//! With `mu = mu'` the perturbation is `-mu_M cos(phi) cos(tau)` where `mu_M = mu + mu'`;
//! `mu_M` is the strength every estimate here is proportional to.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::state_energy_stats;
use crate::linalg::{hermitian_eigen, HermitianEigen, OperatorMatrix};
use crate::model::ModelParams;
use crate::quantum::{angle_function, build_h1, QuantumSpace};

/// Strength of `-mu_M cos(phi) cos(tau)`; requires `mu = mu'`.
pub fn single_strength(params: &ModelParams) -> Result<f64> {
    if params.mu != params.mu_prime {
        return Err(Error::Unsupported(format!(
            "interaction-picture analysis needs mu = mu' (mu={}, mu'={})",
            params.mu, params.mu_prime
        )));
    }
    Ok(params.mu + params.mu_prime)
}

/// Sorted eigenbasis of the unperturbed Hamiltonian.
#[derive(Clone, Debug)]
pub struct EigenBasis {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    v: OperatorMatrix,
}

impl EigenBasis {
    pub fn new(h0: &OperatorMatrix) -> Result<Self> {
        let HermitianEigen { values, vectors } = hermitian_eigen(h0)?;
        let v = OperatorMatrix::from_columns(&vectors);
        Ok(EigenBasis {
            energies: values,
            vectors,
            v,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V^dagger op V`: matrix elements `<v_j|op|v_k>`.
    pub fn to_eigenbasis(&self, op: &OperatorMatrix) -> OperatorMatrix {
        self.v.adjoint().matmul(op).matmul(&self.v)
    }

    /// Inverse of `to_eigenbasis`.
    pub fn from_eigenbasis(&self, m: &OperatorMatrix) -> OperatorMatrix {
        self.v.matmul(m).matmul(&self.v.adjoint())
    }

    /// `exp(i (N/2pi) h0 tau)`.
    pub fn rotation(&self, space: &QuantumSpace, tau: f64) -> OperatorMatrix {
        let c = space.n_dim as f64 / TAU * tau;
        let d = OperatorMatrix::from_diagonal(
            &self.energies.iter().map(|&e| C64::from_polar(1.0, c * e)).collect::<Vec<_>>(),
        );
        self.from_eigenbasis(&d)
    }

    /// Index of the eigenstate whose energy is closest to `e` (lower index on ties).
    pub fn nearest_state(&self, e: f64) -> usize {
        let mut best = 0;
        for (j, &ej) in self.energies.iter().enumerate() {
            if (ej - e).abs() < (self.energies[best] - e).abs() {
                best = j;
            }
        }
        best
    }

    /// `<v_j| cos(phi) |v_k>`.
    pub fn cos_phi_elements(&self, space: &QuantumSpace) -> OperatorMatrix {
        self.to_eigenbasis(&angle_function(space, f64::cos))
    }
}

/// `exp(i(N/2pi) h0 tau) h1(tau) exp(-i(N/2pi) h0 tau)` in the angle basis.
pub fn interaction_h1(basis: &EigenBasis, params: &ModelParams, space: &QuantumSpace, tau: f64) -> Result<OperatorMatrix> {
    single_strength(params)?;
    let w = basis.rotation(space, tau);
    let h1 = build_h1(params, space, tau);
    let out = w.matmul(&h1).matmul(&w.adjoint());
    let n = out.dim();
    OperatorMatrix::from_fn(n, |r, c| 0.5 * (out.get(r, c) + out.get(c, r).conj())).into_hermitian()
}

/// Matrix `V_jk` of the period-averaged interaction perturbation per unit strength.
#[derive(Clone, Debug)]
pub struct VMatrix {
    pub entries: OperatorMatrix,
}

impl VMatrix {
    /// `sum_k |V_jk|^2` for every row.
    pub fn row_mass(&self) -> Vec<f64> {
        let n = self.entries.dim();
        (0..n)
            .map(|j| self.entries.row(j).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.entries.data().iter().map(|z| z.norm()).collect()
    }
}

const RESONANCE_TOL: f64 = 1e-9;

// (i/2pi)(e^{iNE} - 1) w C / (w^2 - 1), w = N E / 2pi: the tau-average of
// e^{iNE tau/2pi} cos(tau) C, times -1 (the perturbation sign)
fn averaged_elements(basis: &EigenBasis, space: &QuantumSpace, extra_phase: bool) -> Result<OperatorMatrix> {
    let n = basis.dim();
    let nf = space.n_dim as f64;
    let c = basis.cos_phi_elements(space);
    let e = &basis.energies;
    let mut resonant = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let w = nf * (e[j] - e[k]) / TAU;
                if (w * w - 1.0).abs() < RESONANCE_TOL {
                    resonant.push((j, k));
                }
            }
        }
    }
    if !resonant.is_empty() {
        return Err(Error::Resonance { pairs: resonant });
    }
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            (0..n)
                .map(|k| {
                    if j == k {
                        return C64::new(0.0, 0.0);
                    }
                    let ne = nf * (e[j] - e[k]);
                    let w = ne / TAU;
                    let ph = C64::from_polar(1.0, ne);
                    let v = C64::new(0.0, 1.0 / TAU) * (ph - 1.0) * (w / (w * w - 1.0)) * c.get(j, k);
                    if extra_phase {
                        v * ph.conj()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    Ok(OperatorMatrix::from_fn(n, |r, col| rows[r][col]))
}

/// `V_jk = (i/2pi)(e^{iNE_jk} - 1) w C_jk / (w^2 - 1) e^{-iNE_jk}`, `w = N E_jk/2pi`,
/// `C_jk = <v_j|cos phi|v_k>`. The diagonal is exactly zero.
pub fn v_matrix(basis: &EigenBasis, space: &QuantumSpace) -> Result<VMatrix> {
    Ok(VMatrix {
        entries: averaged_elements(basis, space, true)?,
    })
}

/// Period average of the interaction-picture perturbation, in the eigenbasis of `h0`.
pub fn averaged_interaction(basis: &EigenBasis, params: &ModelParams, space: &QuantumSpace) -> Result<OperatorMatrix> {
    let mu = single_strength(params)?;
    Ok(averaged_elements(basis, space, false)?.scale_real(mu))
}

/// `sigma_j = mu sqrt(sum_{k != j} |V_jk|^2)`.
pub fn dispersion_estimate(v: &VMatrix, mu: f64) -> Vec<f64> {
    v.row_mass().into_iter().map(|m| mu.abs() * m.sqrt()).collect()
}

/// Width of the ergodic band: root-sum-square of the averaged perturbation's
/// off-diagonal elements in the row of the state closest to `e_s`.
pub fn ergodic_width_estimate(basis: &EigenBasis, params: &ModelParams, space: &QuantumSpace, e_s: f64) -> Result<f64> {
    let avg = averaged_interaction(basis, params, space)?;
    let s = basis.nearest_state(e_s);
    Ok(avg
        .row(s)
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != s)
        .map(|(_, z)| z.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `(1/j!) int_0^{2pi} tau^j cos(tau) dtau`.
pub fn magnus_coefficient(j: usize) -> f64 {
    let sin_quarter = |k: usize| [0.0, 1.0, 0.0, -1.0][k % 4];
    let mut s = 0.0;
    let mut fact = 1.0;
    // term k uses (2pi)^{j-k}/(j-k)!; walk k downward so the factorial accumulates
    let mut pow = 1.0;
    for m in 0..=j {
        // m = j - k
        if m > 0 {
            pow *= TAU;
            fact *= m as f64;
        }
        s += pow / fact * sin_quarter(j - m);
    }
    s - sin_quarter(j)
}

/// Partial sum up to `j_max` of
/// `-(mu_M/2pi) sum_j (iN/2pi)^j c_j ad_{h0}^j(cos phi)` (angle basis).
pub fn magnus_omega1_series(h0: &OperatorMatrix, space: &QuantumSpace, mu_m: f64, j_max: usize) -> OperatorMatrix {
    let n = h0.dim();
    let cos_phi = angle_function(space, f64::cos);
    let mut term = cos_phi;
    let mut sum = OperatorMatrix::zeros(n);
    let k = C64::new(0.0, space.n_dim as f64 / TAU);
    let mut kp = C64::new(1.0, 0.0);
    for j in 0..=j_max {
        if j > 0 {
            term = h0.commutator(&term);
            kp *= k;
        }
        let c = magnus_coefficient(j);
        if c != 0.0 {
            sum = sum.add(&term.scale(kp * c));
        }
    }
    sum.scale_real(-mu_m / TAU)
}

/// `(N/2pi) int_0^{2pi} ||h1_I(tau)||_2 dtau` and whether it is below `pi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub integral: f64,
    pub bound: f64,
    pub converges: bool,
}

/// The spectral norm is unchanged by the interaction-picture rotation, so the integrand
/// is the largest diagonal entry of the (diagonal) perturbation.
pub fn convergence_report(params: &ModelParams, space: &QuantumSpace) -> Result<ConvergenceReport> {
    let mu = single_strength(params)?;
    let nodes = crate::quadrature::composite_gauss_legendre(0.0, TAU, 64, 8);
    let integral: f64 = nodes
        .iter()
        .map(|&(t, w)| {
            let d = crate::quantum::h1_diagonal(params, space, t);
            w * d.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        })
        .sum::<f64>()
        * space.n_dim as f64
        / TAU;
    Ok(ConvergenceReport {
        integral,
        bound: space.n_dim as f64 * mu.abs(),
        converges: integral < PI,
    })
}

/// Exact and second-order dispersions of the eigenstates of `h0 + mu A`.
#[derive(Clone, Debug)]
pub struct DispersionComparison {
    /// From eigenstates of `h0 + mu A`, ordered by `<h0>`.
    pub exact: Vec<f64>,
    /// `mu sqrt(sum_{k != j} |<v_j|A|v_k>|^2)`, ordered by `E_j`.
    pub formula: Vec<f64>,
    /// Smallest gap of `h0` fell below 1e-8.
    pub near_degenerate: bool,
}

pub fn perturbative_dispersion_check(h0: &OperatorMatrix, a: &OperatorMatrix, mu: f64) -> Result<DispersionComparison> {
    if h0.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            got: a.dim(),
        });
    }
    let a = a.clone().into_hermitian()?;
    let basis = EigenBasis::new(h0)?;
    let near_degenerate = basis.energies.windows(2).any(|w| w[1] - w[0] < 1e-8);
    let ab = basis.to_eigenbasis(&a);
    let n = h0.dim();
    let formula: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = (0..n).filter(|&k| k != j).map(|k| ab.get(j, k).norm_sqr()).sum();
            mu.abs() * s.sqrt()
        })
        .collect();
    let full = h0.add(&a.scale_real(mu)).into_hermitian()?;
    let eig = hermitian_eigen(&full)?;
    let mut stats: Vec<(f64, f64)> = eig
        .vectors
        .iter()
        .map(|v| state_energy_stats(h0, v))
        .collect::<Result<_>>()?;
    stats.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(DispersionComparison {
        exact: stats.into_iter().map(|s| s.1).collect(),
        formula,
        near_degenerate,
    })
}
