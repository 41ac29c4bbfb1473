//! Trotterized Floquet propagator and its eigensystem.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{inner, norm, unitary_eigen, OperatorMatrix, StateVector, Tags};
use crate::model::ModelParams;
use crate::quantum::{dft_matrix, h1_diagonal, QuantumSpace};

/// Columns propagated together through each FFT batch.
const BLOCK: usize = 32;

pub fn default_trotter_steps(space: &QuantumSpace) -> usize {
    5 * space.n_dim
}

/// One symmetric step `A(h/2) B(t, h) A(h/2)` of duration `h` starting at time `t`.
#[derive(Clone, Copy, Debug)]
struct Step {
    t: f64,
    h: f64,
}

fn full_steps(n_tau: usize, tau_s: f64) -> Vec<Step> {
    let h = TAU / n_tau as f64;
    (0..n_tau)
        .map(|j| Step {
            t: tau_s + TAU * j as f64 / n_tau as f64,
            h,
        })
        .collect()
}

fn kinetic(params: &ModelParams, space: &QuantumSpace, m: usize) -> f64 {
    params.a * (1.0 - space.angle(m).cos())
}

// exp(-i (N/2pi) h (-eps cos phi + h1(t))) in the angle basis
fn potential_phases(params: &ModelParams, space: &QuantumSpace, step: Step) -> Vec<C64> {
    let c = space.n_dim as f64 / TAU * step.h;
    h1_diagonal(params, space, step.t)
        .into_iter()
        .enumerate()
        .map(|(j, v1)| {
            let v = -params.epsilon * space.angle(j).cos() + v1;
            C64::from_polar(1.0, -c * v)
        })
        .collect()
}

// exp(-i (N/2pi) dur A_p) in the momentum basis, times `scale`
fn kinetic_phases(params: &ModelParams, space: &QuantumSpace, dur: f64, scale: f64) -> Vec<C64> {
    let c = space.n_dim as f64 / TAU * dur;
    (0..space.n_dim)
        .map(|m| C64::from_polar(scale, -c * kinetic(params, space, m)))
        .collect()
}

/// Applies the product of `steps` (earliest first) to every column of the identity,
/// moving between angle and momentum bases with FFTs. Returns column-major data.
fn trotter_columns(params: &ModelParams, space: &QuantumSpace, steps: &[Step]) -> Vec<C64> {
    let n = space.n_dim;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let inv_n = 1.0 / n as f64;

    // kinetic multipliers between consecutive potential kicks (merged halves), 1/N folded in
    let mut kin: Vec<Vec<C64>> = Vec::with_capacity(steps.len() + 1);
    for i in 0..=steps.len() {
        let left = if i > 0 { 0.5 * steps[i - 1].h } else { 0.0 };
        let right = if i < steps.len() { 0.5 * steps[i].h } else { 0.0 };
        kin.push(kinetic_phases(params, space, left + right, inv_n));
    }

    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for c in 0..n {
        data[c * n + c] = C64::new(1.0, 0.0);
    }
    data.par_chunks_mut(BLOCK * n).for_each(|block| {
        let mut scratch = vec![C64::new(0.0, 0.0); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
        let apply_kin = |block: &mut [C64], k: &[C64], scratch: &mut [C64]| {
            fwd.process_with_scratch(block, scratch);
            for col in block.chunks_exact_mut(n) {
                for (z, f) in col.iter_mut().zip(k) {
                    *z *= f;
                }
            }
            inv.process_with_scratch(block, scratch);
        };
        for (i, step) in steps.iter().enumerate() {
            apply_kin(block, &kin[i], &mut scratch);
            let d = potential_phases(params, space, *step);
            for col in block.chunks_exact_mut(n) {
                for (z, f) in col.iter_mut().zip(&d) {
                    *z *= f;
                }
            }
        }
        apply_kin(block, &kin[steps.len()], &mut scratch);
    });
    data
}

fn columns_to_matrix(n: usize, cols: &[C64]) -> OperatorMatrix {
    OperatorMatrix::from_fn(n, |r, c| cols[c * n + r])
}

/// Floquet propagator over one period starting at `tau_s`, with `n_tau` symmetric
/// second-order steps; the potential of step `j` is evaluated at `tau_s + 2pi j/n_tau`.
pub fn trotter_propagator(
    params: &ModelParams,
    space: &QuantumSpace,
    n_tau: usize,
    tau_s: f64,
) -> Result<OperatorMatrix> {
    if n_tau < 1 {
        return Err(Error::Domain("n_tau must be >= 1".into()));
    }
    let cols = trotter_columns(params, space, &full_steps(n_tau, tau_s));
    columns_to_matrix(space.n_dim, &cols).into_unitary()
}

/// Same product built from dense matrices (`Q diag Q^dagger` for the kinetic factors).
pub fn trotter_propagator_dense(
    params: &ModelParams,
    space: &QuantumSpace,
    n_tau: usize,
    tau_s: f64,
) -> Result<OperatorMatrix> {
    if n_tau < 1 {
        return Err(Error::Domain("n_tau must be >= 1".into()));
    }
    let n = space.n_dim;
    let q = dft_matrix(space)?;
    let qd = q.adjoint();
    let h = TAU / n_tau as f64;
    let half = OperatorMatrix::from_diagonal(&kinetic_phases(params, space, 0.5 * h, 1.0));
    let a_half = q.matmul(&half).matmul(&qd);
    let mut u = OperatorMatrix::identity(n);
    for step in full_steps(n_tau, tau_s) {
        let b = OperatorMatrix::from_diagonal(&potential_phases(params, space, step));
        u = a_half.matmul(&b).matmul(&a_half).matmul(&u);
    }
    u.into_unitary()
}

/// Propagator from 0 to `tau_end` on the `n_tau` step grid; a trailing fractional
/// step uses the same symmetric splitting with the shortened duration.
pub fn partial_propagator(
    params: &ModelParams,
    space: &QuantumSpace,
    n_tau: usize,
    tau_end: f64,
) -> Result<OperatorMatrix> {
    if !(0.0..=TAU * (1.0 + 1e-14)).contains(&tau_end) {
        return Err(Error::Domain(format!("tau_end={tau_end} outside [0, 2pi]")));
    }
    if n_tau < 1 {
        return Err(Error::Domain("n_tau must be >= 1".into()));
    }
    let h = TAU / n_tau as f64;
    let whole = ((tau_end / h) * (1.0 + 1e-13)).floor() as usize;
    let whole = whole.min(n_tau);
    let mut steps: Vec<Step> = full_steps(n_tau, 0.0).into_iter().take(whole).collect();
    let rest = tau_end - whole as f64 * h;
    if rest > 1e-12 * h {
        steps.push(Step {
            t: whole as f64 * h,
            h: rest,
        });
    }
    if steps.is_empty() {
        return Ok(OperatorMatrix::identity(space.n_dim));
    }
    let cols = trotter_columns(params, space, &steps);
    columns_to_matrix(space.n_dim, &cols).into_unitary()
}

/// Mean and standard deviation of `h0` in a normalized state.
pub fn state_energy_stats(h0: &OperatorMatrix, state: &[C64]) -> Result<(f64, f64)> {
    let nrm = norm(state);
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("state norm {nrm} deviates from 1 by more than 1e-8")));
    }
    let hv = h0.mul_vec(state);
    let mu = inner(state, &hv).re;
    // residual form avoids the <h^2> - <h>^2 cancellation
    let var: f64 = hv.iter().zip(state).map(|(h, v)| (h - v * mu).norm_sqr()).sum();
    Ok((mu, var.max(0.0).sqrt()))
}

/// One Floquet eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetRecord {
    pub index: usize,
    pub state: StateVector,
    /// Eigenvalue phase in `(-pi, pi]`.
    pub quasi_energy: f64,
    pub mu_h0: f64,
    pub sigma_h0: f64,
}

/// Eigenstates of `u`, ordered by `<h0>` (ties by quasi-energy).
pub fn floquet_eigensystem(u: &OperatorMatrix, h0: &OperatorMatrix) -> Result<Vec<FloquetRecord>> {
    if u.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: h0.dim(),
        });
    }
    let eig = unitary_eigen(u)?;
    let mut recs: Vec<FloquetRecord> = eig
        .vectors
        .into_par_iter()
        .zip(eig.phases.into_par_iter())
        .map(|(v, q)| {
            let (mu, sigma) = state_energy_stats(h0, &v)?;
            Ok(FloquetRecord {
                index: 0,
                state: StateVector::from_unit(v)?,
                quasi_energy: q,
                mu_h0: mu,
                sigma_h0: sigma,
            })
        })
        .collect::<Result<_>>()?;
    recs.sort_by(|a, b| {
        a.mu_h0
            .total_cmp(&b.mu_h0)
            .then(a.quasi_energy.total_cmp(&b.quasi_energy))
    });
    for (i, r) in recs.iter_mut().enumerate() {
        r.index = i;
    }
    Ok(recs)
}

/// Splits records by `sigma_h0 <= threshold` (regular) and `> threshold` (ergodic), order kept.
pub fn subspace_split(records: &[FloquetRecord], threshold: f64) -> (Vec<FloquetRecord>, Vec<FloquetRecord>) {
    records.iter().cloned().partition(|r| r.sigma_h0 <= threshold)
}

/// Matrix whose column `j` is the state of record `j`.
pub fn eigenvector_matrix(records: &[FloquetRecord]) -> OperatorMatrix {
    let cols: Vec<Vec<C64>> = records.iter().map(|r| r.state.amplitudes().to_vec()).collect();
    OperatorMatrix::from_columns(&cols).with_tags(Tags {
        hermitian: false,
        unitary: true,
    })
}
