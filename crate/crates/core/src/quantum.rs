//! The discrete N-state quantum space: Fourier transform, angle/momentum, clock/shift,
//! the Harper Hamiltonian and Wigner-Weyl point operators.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{OperatorMatrix, Tags};
use crate::model::{h0_at, ModelParams};

/// Dimension `N`, effective Planck constant `2pi/N` and `omega = exp(2pi i/N)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumSpace {
    pub n_dim: usize,
    pub h_tilde: f64,
    pub omega: C64,
}

impl QuantumSpace {
    pub fn new(n_dim: usize) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2 (got {n_dim})")));
        }
        Ok(QuantumSpace {
            n_dim,
            h_tilde: TAU / n_dim as f64,
            omega: C64::from_polar(1.0, TAU / n_dim as f64),
        })
    }

    /// `omega^m`, with the exponent reduced mod N before evaluating.
    #[inline]
    pub fn omega_pow(&self, m: i64) -> C64 {
        let n = self.n_dim as i64;
        let r = m.rem_euclid(n);
        C64::from_polar(1.0, TAU * r as f64 / n as f64)
    }

    /// Lattice angle `2pi j / N`.
    #[inline]
    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_dim as f64
    }

    /// N divisible by 4: the unperturbed spectrum may contain exact degeneracies.
    pub fn degeneracy_warning(&self) -> bool {
        self.n_dim % 4 == 0
    }
}

fn hermitize(m: OperatorMatrix) -> Result<OperatorMatrix> {
    let m = m.into_hermitian()?;
    let n = m.dim();
    let sym = OperatorMatrix::from_fn(n, |r, c| 0.5 * (m.get(r, c) + m.get(c, r).conj()));
    Ok(sym.with_tags(Tags {
        hermitian: true,
        unitary: false,
    }))
}

/// `Q[j,k] = omega^{jk} / sqrt(N)`.
pub fn dft_matrix(space: &QuantumSpace) -> Result<OperatorMatrix> {
    let n = space.n_dim;
    let s = 1.0 / (n as f64).sqrt();
    OperatorMatrix::from_fn(n, |j, k| space.omega_pow((j * k) as i64) * s).into_unitary()
}

/// Diagonal angle operator, entries `2pi j/N`.
pub fn angle_operator(space: &QuantumSpace) -> OperatorMatrix {
    let d: Vec<f64> = (0..space.n_dim).map(|j| space.angle(j)).collect();
    OperatorMatrix::from_real_diagonal(&d)
}

/// Momentum operator `Q diag(2pi m/N) Q^dagger`.
pub fn momentum_operator(space: &QuantumSpace) -> Result<OperatorMatrix> {
    let q = dft_matrix(space)?;
    let d = angle_operator(space);
    hermitize(q.matmul(&d).matmul(&q.adjoint()))
}

/// Function of the angle operator, `diag(f(2pi j/N))`.
pub fn angle_function(space: &QuantumSpace, f: impl Fn(f64) -> f64) -> OperatorMatrix {
    let d: Vec<f64> = (0..space.n_dim).map(|j| f(space.angle(j))).collect();
    OperatorMatrix::from_real_diagonal(&d)
}

/// Shift `X = sum |n+1><n|` and clock `Z = diag(omega^n)`.
pub fn clock_shift(space: &QuantumSpace) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let n = space.n_dim;
    let x = OperatorMatrix::from_fn(n, |r, c| {
        if r == (c + 1) % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .into_unitary()?;
    let z: Vec<C64> = (0..n).map(|j| space.omega_pow(j as i64)).collect();
    let z = OperatorMatrix::from_diagonal(&z).into_unitary()?;
    Ok((x, z))
}

/// Unperturbed Harper operator: cyclic tridiagonal in the angle basis with diagonal
/// `a - eps cos(2pi j/N)` and off-diagonal `-a/2`.
pub fn build_h0(params: &ModelParams, space: &QuantumSpace) -> Result<OperatorMatrix> {
    let n = space.n_dim;
    if n < 3 {
        return Err(Error::Domain(format!("build_h0 needs N >= 3 (got {n})")));
    }
    let mut h = OperatorMatrix::zeros(n);
    let beta = C64::new(-0.5 * params.a, 0.0);
    for j in 0..n {
        h.set(j, j, C64::new(params.a - params.epsilon * space.angle(j).cos(), 0.0));
        h.set(j, (j + 1) % n, beta);
        h.set((j + 1) % n, j, beta);
    }
    h.into_hermitian()
}

/// Diagonal of the perturbation `-mu cos(phi - tau) - mu' cos(phi + tau)` in the angle basis.
pub fn h1_diagonal(params: &ModelParams, space: &QuantumSpace, tau: f64) -> Vec<f64> {
    (0..space.n_dim)
        .map(|j| {
            let phi = space.angle(j);
            -params.mu * (phi - tau).cos() - params.mu_prime * (phi + tau).cos()
        })
        .collect()
}

pub fn build_h1(params: &ModelParams, space: &QuantumSpace, tau: f64) -> OperatorMatrix {
    OperatorMatrix::from_real_diagonal(&h1_diagonal(params, space, tau))
}

/// Parity `P = sum |x><-x|`.
pub fn parity_operator(space: &QuantumSpace) -> OperatorMatrix {
    let n = space.n_dim;
    OperatorMatrix::from_fn(n, |r, c| {
        if r == (n - c) % n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
    .with_tags(Tags {
        hermitian: true,
        unitary: true,
    })
}

/// `exp(-pi i m / N)`, the fixed square-root branch `omega^{-m/2}`.
#[inline]
pub(crate) fn half_phase(space: &QuantumSpace, m: i64) -> C64 {
    let n = space.n_dim as i64;
    let r = m.rem_euclid(2 * n);
    C64::from_polar(1.0, -PI * r as f64 / n as f64)
}

/// Displacement `D(k,l) = omega^{-kl/2} Z^k X^l`.
pub fn displacement(space: &QuantumSpace, k: usize, l: usize) -> Result<OperatorMatrix> {
    let n = space.n_dim;
    if k >= n || l >= n {
        return Err(Error::Domain(format!("displacement indices ({k},{l}) out of range for N={n}")));
    }
    let ph = half_phase(space, (k * l) as i64);
    let m = OperatorMatrix::from_fn(n, |r, c| {
        if r == (c + l) % n {
            ph * space.omega_pow((k * r) as i64)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(m.with_tags(Tags {
        hermitian: false,
        unitary: true,
    }))
}

/// Point operator `A_nk = (1/N) sum_x |n+x><n-x| omega^{2xk}`.
pub fn point_operator(space: &QuantumSpace, n: usize, k: usize) -> Result<OperatorMatrix> {
    let dim = space.n_dim;
    if n >= dim || k >= dim {
        return Err(Error::Domain(format!("point operator indices ({n},{k}) out of range for N={dim}")));
    }
    let mut a = OperatorMatrix::zeros(dim);
    let inv = 1.0 / dim as f64;
    for x in 0..dim {
        let r = (n + x) % dim;
        let c = (n + dim - x) % dim;
        a.add_at(r, c, space.omega_pow((2 * x * k) as i64) * inv);
    }
    hermitize(a)
}

/// Lattice samples of the classical `H0`, row index = momentum `k`, column = angle `n`.
pub fn h0_grid(params: &ModelParams, space: &QuantumSpace) -> Vec<f64> {
    let n = space.n_dim;
    let mut g = Vec::with_capacity(n * n);
    for k in 0..n {
        for j in 0..n {
            g.push(h0_at(params, space.angle(j), space.angle(k)));
        }
    }
    g
}

/// Weyl transform `sum_{k,n} a(k,n) A_nk` of a lattice function (row = k, column = n).
///
/// Only defined for odd N, where the point operators form an orthonormal basis.
pub fn weyl_quantize(space: &QuantumSpace, grid: &[f64]) -> Result<OperatorMatrix> {
    let dim = space.n_dim;
    if dim % 2 == 0 {
        return Err(Error::Unsupported(format!(
            "Weyl quantization needs odd N (got {dim})"
        )));
    }
    if grid.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            got: grid.len(),
        });
    }
    let inv = 1.0 / dim as f64;
    let mut out = OperatorMatrix::zeros(dim);
    for n in 0..dim {
        for x in 0..dim {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..dim {
                s += space.omega_pow((2 * x * k) as i64) * grid[k * dim + n];
            }
            out.add_at((n + x) % dim, (n + dim - x) % dim, s * inv);
        }
    }
    hermitize(out)
}

/// Unitary Fourier transform of vectors through FFT plans; agrees with `dft_matrix`.
#[derive(Clone)]
pub struct FourierTransform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl FourierTransform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FourierTransform {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place `v <- Q^dagger v` (angle basis to momentum basis). `v` may hold several blocks of length N.
    pub fn to_momentum(&self, v: &mut [C64]) {
        self.forward.process(v);
        for z in v.iter_mut() {
            *z *= self.scale;
        }
    }

    /// In place `v <- Q v` (momentum basis to angle basis).
    pub fn to_angle(&self, v: &mut [C64]) {
        self.inverse.process(v);
        for z in v.iter_mut() {
            *z *= self.scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_invariants() {
        let s = QuantumSpace::new(100).unwrap();
        assert!((s.h_tilde * 100.0 - TAU).abs() < 1e-13);
        let mut w = C64::new(1.0, 0.0);
        for _ in 0..100 {
            w *= s.omega;
        }
        assert!((w - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(QuantumSpace::new(1).is_err());
        assert!(s.degeneracy_warning());
    }

    #[test]
    fn dft_n2() {
        let q = dft_matrix(&QuantumSpace::new(2).unwrap()).unwrap();
        let s = 0.5f64.sqrt();
        assert!((q.get(1, 1) - C64::new(-s, 0.0)).norm() < 1e-15);
        assert!((q.get(0, 1) - C64::new(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn h0_too_small() {
        let s = QuantumSpace::new(2).unwrap();
        assert!(build_h0(&ModelParams::new(1.0, 1.0, 0.0, 0.0), &s).is_err());
    }

    #[test]
    fn fft_matches_matrix() {
        let s = QuantumSpace::new(12).unwrap();
        let q = dft_matrix(&s).unwrap();
        let v: Vec<C64> = (0..12).map(|j| C64::new((j as f64).sin(), (j as f64 * 0.3).cos())).collect();
        let ft = FourierTransform::new(12);
        let mut w = v.clone();
        ft.to_momentum(&mut w);
        let want = q.adjoint().mul_vec(&v);
        assert!(w.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-12));
        ft.to_angle(&mut w);
        assert!(w.iter().zip(&v).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn index_checks() {
        let s = QuantumSpace::new(5).unwrap();
        assert!(displacement(&s, 5, 0).is_err());
        assert!(point_operator(&s, 0, 7).is_err());
        assert!(weyl_quantize(&s, &[0.0; 3]).is_err());
    }
}
