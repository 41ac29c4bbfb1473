//! Discrete coherent states and Husimi phase-space grids.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{norm, StateVector};
use crate::quantum::{half_phase, QuantumSpace};
use crate::render::write_gray_png;

/// Number of periodic images on each side in the theta sum.
pub const THETA_TERMS: i64 = 3;

fn fiducial_raw(space: &QuantumSpace) -> Vec<f64> {
    let n = space.n_dim as f64;
    (0..space.n_dim)
        .map(|m| {
            (-THETA_TERMS..=THETA_TERMS)
                .map(|j| {
                    let x = m as f64 + j as f64 * n;
                    (-(PI / n) * x * x).exp()
                })
                .sum()
        })
        .collect()
}

/// Normalization constant of the theta-sum fiducial (close to `(2/N)^{1/4}`).
pub fn fiducial_normalization(space: &QuantumSpace) -> f64 {
    let raw = fiducial_raw(space);
    1.0 / raw.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian-like fiducial, an eigenvector of the DFT with eigenvalue 1, peaked at index 0.
pub fn fiducial_state(space: &QuantumSpace) -> StateVector {
    let b = fiducial_normalization(space);
    let amps = fiducial_raw(space).into_iter().map(|x| C64::new(b * x, 0.0)).collect();
    StateVector::from_unit(amps).expect("fiducial is normalized by construction")
}

/// Coherent state `D(k,l)|eta>`: component `n` is `omega^{-kl/2} omega^{kn} eta[n-l]`.
pub fn coherent_state(space: &QuantumSpace, k: usize, l: usize) -> Result<StateVector> {
    let n = space.n_dim;
    if k >= n || l >= n {
        return Err(Error::Domain(format!("coherent state indices ({k},{l}) out of range for N={n}")));
    }
    let eta = fiducial_state(space);
    let ph = half_phase(space, (k * l) as i64);
    let amps: Vec<C64> = (0..n)
        .map(|j| ph * space.omega_pow((k * j) as i64) * eta.amplitudes()[(j + n - l) % n])
        .collect();
    StateVector::normalized(amps)
}

/// `H(k,l) = |<psi|k,l>|^2` on the full lattice. `values[k * N + l]`; `k` is the
/// momentum index and `l` the angle index.
#[derive(Clone, Debug, PartialEq)]
pub struct HusimiGrid {
    pub dim: usize,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.dim + l]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Lattice cell holding the largest value (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.dim, best % self.dim)
    }

    /// Centered phase-space coordinates `(phi, p)` in `(-pi, pi]` of cell `(k, l)`.
    pub fn centered_coordinates(&self, k: usize, l: usize) -> (f64, f64) {
        let c = |i: usize| {
            let i = i as f64;
            let n = self.dim as f64;
            if 2.0 * i <= n {
                TAU * i / n
            } else {
                TAU * (i - n) / n
            }
        };
        (c(l), c(k))
    }

    /// Image pixels, top row first: column `c` shows angle index `(c - N/2) mod N`,
    /// row `r` shows momentum index `(N - 1 - r - N/2) mod N`, so `(0,0)` sits at the
    /// image centre and momentum grows upwards.
    pub fn display_values(&self) -> Vec<f64> {
        let n = self.dim;
        let c0 = n / 2;
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            let k = (2 * n - 1 - r - c0) % n;
            for c in 0..n {
                let l = (c + n - c0) % n;
                out.push(self.get(k, l));
            }
        }
        out
    }

    /// Grayscale PNG with values clipped at `1/sqrt(N)`: 0 is black, the clip level white.
    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let clip = 1.0 / (self.dim as f64).sqrt();
        write_gray_png(path, self.dim, self.dim, &self.display_values(), clip)
    }

    /// `exp(entropy)` of the normalized grid: how many grid cells the mass effectively occupies.
    pub fn effective_cells(&self) -> f64 {
        let total = self.total();
        let s: f64 = self
            .values
            .iter()
            .map(|&v| v / total)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        s.exp()
    }

    /// [`effective_cells`](Self::effective_cells) as a fraction of the `N^2` grid.
    pub fn spread_fraction(&self) -> f64 {
        self.effective_cells() / (self.dim * self.dim) as f64
    }
}

/// Husimi grid of `psi`, one FFT per angle index `l`.
pub fn husimi_grid(space: &QuantumSpace, psi: &StateVector) -> Result<HusimiGrid> {
    let n = space.n_dim;
    if psi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: psi.dim(),
        });
    }
    let nrm = norm(psi.amplitudes());
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("state norm {nrm} deviates from 1")));
    }
    let eta = fiducial_state(space);
    let eta = eta.amplitudes();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let psi = psi.amplitudes();
    // cols[l][k] = sum_j conj(psi_j) eta[j-l] omega^{kj}
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut f: Vec<C64> = (0..n).map(|j| psi[j].conj() * eta[(j + n - l) % n]).collect();
            fft.process(&mut f);
            f.into_iter().map(|z| z.norm_sqr()).collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (l, col) in cols.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            values[k * n + l] = *v;
        }
    }
    Ok(HusimiGrid { dim: n, values })
}
