//! Quasi-energy spacing statistics and reference spacing distributions.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::floquet::FloquetRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpacingSource {
    Full,
    Regular,
    Ergodic,
}

impl SpacingSource {
    pub fn label(&self) -> &'static str {
        match self {
            SpacingSource::Full => "full",
            SpacingSource::Regular => "regular",
            SpacingSource::Ergodic => "ergodic",
        }
    }
}

/// Nearest-neighbour spacings on the circle, normalized to unit mean.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingSample {
    pub spacings: Vec<f64>,
    pub source: SpacingSource,
    /// Mean raw spacing (`2pi / count`).
    pub mean_raw: f64,
}

/// Spacings of phases on the circle, including the gap across `+-pi`.
pub fn spacings_from_phases(phases: &[f64], source: SpacingSource) -> Result<SpacingSample> {
    if phases.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 quasi-energies (got {})",
            phases.len()
        )));
    }
    let mut p = phases.to_vec();
    p.sort_by(f64::total_cmp);
    let mut raw: Vec<f64> = p.windows(2).map(|w| w[1] - w[0]).collect();
    raw.push(p[0] + TAU - p[p.len() - 1]);
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(SpacingSample {
        spacings: raw.iter().map(|s| s / mean).collect(),
        source,
        mean_raw: mean,
    })
}

pub fn quasi_energy_spacings(records: &[FloquetRecord], source: SpacingSource) -> Result<SpacingSample> {
    let q: Vec<f64> = records.iter().map(|r| r.quasi_energy).collect();
    spacings_from_phases(&q, source)
}

pub fn poisson_pdf(s: f64) -> f64 {
    (-s).exp()
}

/// Wigner surmise `(pi/2) s exp(-pi s^2/4)` (unit norm and mean).
pub fn wigner_dyson_pdf(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

fn brody_b(beta: f64) -> f64 {
    gamma((beta + 2.0) / (beta + 1.0)).powf(beta + 1.0)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("Brody beta must lie in [0, 1] (got {beta})")));
    }
    Ok(())
}

/// `(beta+1) b s^beta exp(-b s^{beta+1})`.
pub fn brody_pdf(s: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let b = brody_b(beta);
    Ok((beta + 1.0) * b * s.powf(beta) * (-b * s.powf(beta + 1.0)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Poisson,
    Goe,
}

impl ComponentKind {
    // gap probability E(x) and its first two derivatives, unit mean spacing
    fn gap(&self, x: f64) -> (f64, f64, f64) {
        match self {
            ComponentKind::Poisson => {
                let e = (-x).exp();
                (e, -e, e)
            }
            ComponentKind::Goe => {
                let g = (-0.25 * PI * x * x).exp();
                (erfc(0.5 * PI.sqrt() * x), -g, 0.5 * PI * x * g)
            }
        }
    }
}

/// Spacing law of independent superposed level sequences with fractional densities `rho_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BerryRobnik {
    components: Vec<(f64, ComponentKind)>,
}

impl BerryRobnik {
    pub fn new(weights: &[f64], kinds: &[ComponentKind]) -> Result<Self> {
        if weights.is_empty() || weights.len() != kinds.len() {
            return Err(Error::Domain("need one kind per weight and at least one component".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Domain("component densities must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("component densities sum to {total}, not 1")));
        }
        Ok(BerryRobnik {
            components: weights.iter().copied().zip(kinds.iter().copied()).collect(),
        })
    }

    // (E, E', E'') of the product prod_i E_i(rho_i s)
    fn gap(&self, s: f64) -> (f64, f64, f64) {
        let parts: Vec<(f64, f64, f64)> = self
            .components
            .iter()
            .map(|&(r, k)| {
                let (e, d1, d2) = k.gap(r * s);
                (e, r * d1, r * r * d2)
            })
            .collect();
        let m = parts.len();
        let prod_except = |skip: &[usize]| -> f64 {
            (0..m).filter(|i| !skip.contains(i)).map(|i| parts[i].0).product()
        };
        let e = prod_except(&[]);
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for i in 0..m {
            let rest = prod_except(&[i]);
            d1 += parts[i].1 * rest;
            d2 += parts[i].2 * rest;
            for j in 0..m {
                if j != i {
                    d2 += parts[i].1 * parts[j].1 * prod_except(&[i, j]);
                }
            }
        }
        (e, d1, d2)
    }

    pub fn pdf(&self, s: f64) -> f64 {
        self.gap(s).2
    }

    pub fn cdf(&self, s: f64) -> f64 {
        1.0 + self.gap(s).1
    }
}

/// Reference spacing distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum Reference {
    Poisson,
    WignerDyson,
    Brody(f64),
    BerryRobnik(BerryRobnik),
}

impl Reference {
    pub fn pdf(&self, s: f64) -> f64 {
        match self {
            Reference::Poisson => poisson_pdf(s),
            Reference::WignerDyson => wigner_dyson_pdf(s),
            Reference::Brody(beta) => brody_pdf(s, *beta).unwrap_or(f64::NAN),
            Reference::BerryRobnik(br) => br.pdf(s),
        }
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self {
            Reference::Poisson => -(-s).exp_m1(),
            Reference::WignerDyson => -(-0.25 * PI * s * s).exp_m1(),
            Reference::Brody(beta) => -(-brody_b(*beta) * s.powf(beta + 1.0)).exp_m1(),
            Reference::BerryRobnik(br) => br.cdf(s),
        }
    }

    /// Inverse-CDF draw from a uniform `u` in `(0, 1]`; not available for superpositions.
    fn invert(&self, u: f64) -> Option<f64> {
        let l = -u.ln();
        match self {
            Reference::Poisson => Some(l),
            Reference::WignerDyson => Some((4.0 * l / PI).sqrt()),
            Reference::Brody(beta) => Some((l / brody_b(*beta)).powf(1.0 / (beta + 1.0))),
            Reference::BerryRobnik(_) => None,
        }
    }
}

/// Kolmogorov-Smirnov distance between the sample's empirical CDF and the reference CDF.
pub fn ks_statistic(sample: &SpacingSample, reference: &Reference) -> Result<f64> {
    ks_distance(&sample.spacings, reference)
}

pub fn ks_distance(values: &[f64], reference: &Reference) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("empty sample".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = reference.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// `n` seeded draws from a reference law by CDF inversion.
pub fn sample_reference(reference: &Reference, n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // 1 - U lies in (0, 1]
            let u = 1.0 - rng.random::<f64>();
            reference
                .invert(u)
                .ok_or_else(|| Error::Unsupported("sampling a superposition law".into()))
        })
        .collect()
}

/// Density histogram with `bins` uniform bins on `[lo, hi)`: `(centre, density)` pairs.
/// Values outside the range still count towards the normalization.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v < hi {
            let b = (((v - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        }
    }
    let n = values.len().max(1) as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + w * (i as f64 + 0.5), c as f64 / (n * w)))
        .collect()
}
