use std::f64::consts::{PI, TAU};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use qharper::classical::{
    chaotic_halfwidth_harper, integrate_many, measure_layer_width, poincare_section_with_steps, separatrix_energies,
    uniform_initial_conditions, OrbitRecord,
};
use qharper::floquet::{eigenvector_matrix, floquet_eigensystem, partial_propagator, subspace_split, trotter_propagator, FloquetRecord};
use qharper::husimi::{husimi_grid, HusimiGrid};
use qharper::io::encode_matrix;
use qharper::linalg::expm_hermitian;
use qharper::magnus::{dispersion_estimate, ergodic_width_estimate, single_strength, v_matrix, EigenBasis};
use qharper::quantum::{build_h0, h0_grid, weyl_quantize};
use qharper::render::write_gray_png;
use qharper::spectral::{
    histogram, ks_statistic, quasi_energy_spacings, BerryRobnik, ComponentKind, Reference, SpacingSample, SpacingSource,
};
use qharper::{C64, ModelParams, OperatorMatrix, QuantumSpace};

use crate::config::RunConfig;
use crate::output::{num, Csv, Outputs};

const SOS_IMAGE: usize = 512;
const HIST_BINS: usize = 40;
const HIST_MAX: f64 = 4.0;

struct FloquetRun {
    space: QuantumSpace,
    h0: OperatorMatrix,
    u: OperatorMatrix,
    records: Vec<FloquetRecord>,
}

fn floquet_run(model: &ModelParams, n: usize, trotter_steps: usize, tau_s: f64) -> Result<FloquetRun> {
    let space = QuantumSpace::new(n)?;
    let h0 = build_h0(model, &space)?;
    // without driving the period map is exactly exp(-i N h0)
    let u = if model.is_unperturbed() {
        expm_hermitian(&h0, n as f64)?.into_unitary()?
    } else {
        trotter_propagator(model, &space, trotter_steps, tau_s)?
    };
    let records = floquet_eigensystem(&u, &h0)?;
    Ok(FloquetRun { space, h0, u, records })
}

fn guard_dimension(out: &mut Outputs, n: usize) {
    if n % 4 == 0 {
        out.warn(format!(
            "N={n} is a multiple of 4: the unperturbed spectrum has exact degeneracies and eigenvector choice within them is arbitrary"
        ));
    }
}

fn separatrices(model: &ModelParams) -> Vec<f64> {
    let (lo, hi) = separatrix_energies(model);
    if (hi - lo).abs() < 1e-12 {
        vec![lo]
    } else {
        vec![lo, hi]
    }
}

fn floquet_csv(records: &[FloquetRecord]) -> Vec<u8> {
    let mut csv = Csv::new(&["j", "quasi_energy", "mu_h0", "sigma_h0"]);
    for r in records {
        csv.row(&[r.index.to_string(), num(r.quasi_energy), num(r.mu_h0), num(r.sigma_h0)]);
    }
    csv.into_bytes()
}

fn orbit_stats_csv(orbits: &[OrbitRecord]) -> Vec<u8> {
    let mut csv = Csv::new(&["orbit_id", "mean_h0", "sigma_h0"]);
    for (i, o) in orbits.iter().enumerate() {
        csv.row(&[i.to_string(), num(o.mean_h0), num(o.sigma_h0)]);
    }
    csv.into_bytes()
}

fn grid_matrix(g: &HusimiGrid) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_row_major(
        g.dim,
        g.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
    )?)
}

fn write_grid(out: &mut Outputs, cfg: &RunConfig, g: &HusimiGrid, stem: &str) -> Result<()> {
    if cfg.emit.png {
        let rel = format!("{stem}.png");
        g.write_png(out.path(&rel)?)?;
        out.register(&rel)?;
    }
    if cfg.emit.bin {
        out.write(&format!("{stem}.qhrp"), &encode_matrix(&grid_matrix(g)?))?;
    }
    Ok(())
}

fn max_sigma(records: &[FloquetRecord]) -> f64 {
    records.iter().map(|r| r.sigma_h0).fold(0.0, f64::max)
}

pub fn classical_sos(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let m = &cfg.model;
    let orbits = poincare_section_with_steps(m, cfg.sos_orbits, cfg.sos_points, cfg.steps_per_period, cfg.seed, cfg.tau_s)?;
    if cfg.emit.csv {
        let mut csv = Csv::new(&["orbit_id", "period_index", "phi", "p", "H0"]);
        for (i, o) in orbits.iter().enumerate() {
            for (t, (pt, e)) in o.samples.iter().zip(&o.energies).enumerate() {
                csv.row(&[i.to_string(), t.to_string(), num(pt.phi), num(pt.p), num(*e)]);
            }
        }
        out.write("sos.csv", &csv.into_bytes())?;
        out.write("orbit_stats.csv", &orbit_stats_csv(&orbits))?;
        let mut kv = Csv::new(&["key", "value"]);
        for (i, e) in separatrices(m).into_iter().enumerate() {
            kv.row(&[format!("separatrix_energy_{i}"), num(e)]);
        }
        if m.check_positive().is_ok() && m.mu != 0.0 {
            kv.row(&["omega0".into(), num(m.omega0())]);
            kv.row(&["halfwidth_estimate".into(), num(chaotic_halfwidth_harper(m.mu, m.omega0())?)]);
        }
        out.write("width_estimates.csv", &kv.into_bytes())?;
    }
    if cfg.emit.png {
        // point density, angle to the right and momentum upwards
        let mut img = vec![0.0; SOS_IMAGE * SOS_IMAGE];
        for o in &orbits {
            for pt in &o.samples {
                let c = ((pt.phi / TAU) * SOS_IMAGE as f64) as usize % SOS_IMAGE;
                let r = SOS_IMAGE - 1 - ((pt.p / TAU) * SOS_IMAGE as f64) as usize % SOS_IMAGE;
                img[r * SOS_IMAGE + c] += 1.0;
            }
        }
        write_gray_png(out.path("sos.png")?, SOS_IMAGE, SOS_IMAGE, &img, 1.0)?;
        out.register("sos.png")?;
    }
    Ok(json!({
        "orbits": orbits.len(),
        "max_sigma_h0": orbits.iter().map(|o| o.sigma_h0).fold(0.0, f64::max),
    }))
}

pub fn quantum_floquet(cfg: &RunConfig, out: &mut Outputs, weyl_check: bool, classical_stats: bool) -> Result<Value> {
    guard_dimension(out, cfg.n_dim);
    let run = floquet_run(&cfg.model, cfg.n_dim, cfg.trotter_steps, cfg.tau_s)?;
    let mut res = json!({
        "n_dim": cfg.n_dim,
        "max_sigma_h0": max_sigma(&run.records),
        "unitarity_defect": run.u.unitarity_defect(),
        "propagator": if cfg.model.is_unperturbed() { "exact" } else { "trotter" },
    });
    if weyl_check {
        let w = weyl_quantize(&run.space, &h0_grid(&cfg.model, &run.space)).context("weyl check")?;
        res["weyl_max_abs_diff"] = json!(w.max_abs_diff(&run.h0));
    }
    if cfg.emit.csv {
        out.write("floquet.csv", &floquet_csv(&run.records))?;
    }
    if cfg.emit.bin {
        out.write("propagator.qhrp", &encode_matrix(&run.u))?;
        out.write("eigenvectors.qhrp", &encode_matrix(&eigenvector_matrix(&run.records)))?;
    }
    if classical_stats {
        let inits = uniform_initial_conditions(cfg.stats_orbits, cfg.seed);
        let orbits = integrate_many(&cfg.model, &inits, cfg.stats_periods, cfg.steps_per_period, cfg.tau_s)?;
        res["classical_max_sigma_h0"] = json!(orbits.iter().map(|o| o.sigma_h0).fold(0.0, f64::max));
        if cfg.emit.csv {
            out.write("classical_stats.csv", &orbit_stats_csv(&orbits))?;
        }
    }
    Ok(res)
}

pub fn husimi_gallery(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    guard_dimension(out, cfg.n_dim);
    let run = floquet_run(&cfg.model, cfg.n_dim, cfg.trotter_steps, cfg.tau_s)?;
    let grids: Vec<HusimiGrid> = run
        .records
        .par_iter()
        .map(|r| husimi_grid(&run.space, &r.state))
        .collect::<qharper::Result<_>>()?;
    let mut csv = Csv::new(&["j", "mu_h0", "sigma_h0", "effective_cells", "spread_fraction", "image"]);
    for (r, g) in run.records.iter().zip(&grids) {
        let stem = format!("husimi/state_{:04}", r.index);
        write_grid(out, cfg, g, &stem)?;
        csv.row(&[
            r.index.to_string(),
            num(r.mu_h0),
            num(r.sigma_h0),
            num(g.effective_cells()),
            num(g.spread_fraction()),
            if cfg.emit.png { format!("{stem}.png") } else { String::new() },
        ]);
    }
    if cfg.emit.csv {
        out.write("husimi_index.csv", &csv.into_bytes())?;
    }
    Ok(json!({"states": grids.len()}))
}

pub fn vjk_analysis(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    guard_dimension(out, cfg.n_dim);
    let m = &cfg.model;
    let space = QuantumSpace::new(cfg.n_dim)?;
    let h0 = build_h0(m, &space)?;
    let basis = EigenBasis::new(&h0)?;
    let v = v_matrix(&basis, &space)?;
    let n = cfg.n_dim;
    let profile = dispersion_estimate(&v, 1.0);
    if cfg.emit.csv {
        let mut csv = Csv::new(&["j", "j_over_n", "E_j", "sigma_over_mu"]);
        for (j, s) in profile.iter().enumerate() {
            csv.row(&[j.to_string(), num(j as f64 / n as f64), num(basis.energies[j]), num(*s)]);
        }
        out.write("vjk_profile.csv", &csv.into_bytes())?;
        // off-diagonal weight of U(tau) in the unperturbed eigenbasis, rows j
        let mut mass = Csv::new(&["tau", "j", "E_j", "offdiag_mass"]);
        for q in 1..=4 {
            let tau = 0.5 * PI * q as f64;
            let ut = partial_propagator(m, &space, cfg.trotter_steps, tau)?;
            let ub = basis.to_eigenbasis(&ut);
            for j in 0..n {
                let w: f64 = (0..n).filter(|&k| k != j).map(|k| ub.get(j, k).norm_sqr()).sum();
                mass.row(&[num(tau), j.to_string(), num(basis.energies[j]), num(w)]);
            }
        }
        out.write("vjk_mass.csv", &mass.into_bytes())?;
    }
    if cfg.emit.bin {
        out.write("vjk.qhrp", &encode_matrix(&v.entries))?;
    }
    if cfg.emit.png {
        let abs = v.abs_values();
        let clip = abs.iter().cloned().fold(0.0, f64::max);
        write_gray_png(out.path("vjk_abs.png")?, n, n, &abs, clip)?;
        out.register("vjk_abs.png")?;
    }
    let j = (0..n).max_by(|&a, &b| profile[a].total_cmp(&profile[b])).unwrap_or(0);
    let mut widths = Vec::new();
    if single_strength(m).is_ok() {
        for e in separatrices(m) {
            widths.push(json!({"separatrix_energy": e, "ergodic_width_estimate": ergodic_width_estimate(&basis, m, &space, e)?}));
        }
    }
    Ok(json!({
        "peak_sigma_over_mu": profile[j],
        "peak_energy": basis.energies[j],
        "ergodic_widths": widths,
    }))
}

fn spacing_row(csv: &mut Csv, sample: &SpacingSample, refs: &[(String, Reference)]) -> Result<Vec<f64>> {
    let ks: Vec<f64> = refs.iter().map(|(_, r)| ks_statistic(sample, r)).collect::<qharper::Result<_>>()?;
    let mut row = vec![sample.source.label().to_string(), sample.spacings.len().to_string()];
    row.extend(ks.iter().map(|&k| num(k)));
    csv.row(&row);
    Ok(ks)
}

pub fn spectrum_stats(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    guard_dimension(out, cfg.n_dim);
    let run = floquet_run(&cfg.model, cfg.n_dim, cfg.trotter_steps, cfg.tau_s)?;
    let (regular, ergodic) = subspace_split(&run.records, cfg.threshold);
    let n = run.records.len() as f64;
    // regular levels as a Poisson component, ergodic ones as GOE, weighted by their share
    let parts: Vec<(f64, ComponentKind)> = [
        (regular.len() as f64 / n, ComponentKind::Poisson),
        (ergodic.len() as f64 / n, ComponentKind::Goe),
    ]
    .into_iter()
    .filter(|p| p.0 > 0.0)
    .collect();
    let weights: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let kinds: Vec<ComponentKind> = parts.iter().map(|p| p.1).collect();
    let br = BerryRobnik::new(&weights, &kinds)?;
    let mut refs = vec![
        ("poisson".to_string(), Reference::Poisson),
        ("wigner_dyson".to_string(), Reference::WignerDyson),
    ];
    if let Some(b) = cfg.brody_beta {
        refs.push((format!("brody_{b}"), Reference::Brody(b)));
    }
    refs.push(("berry_robnik".to_string(), Reference::BerryRobnik(br.clone())));
    let mut header = vec!["source".to_string(), "count".to_string()];
    header.extend(refs.iter().map(|(name, _)| format!("ks_{name}")));
    let mut ks_csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut res = json!({"regular_states": regular.len(), "ergodic_states": ergodic.len()});
    for (source, recs) in [
        (SpacingSource::Full, &run.records),
        (SpacingSource::Regular, &regular),
        (SpacingSource::Ergodic, &ergodic),
    ] {
        let sample = match quasi_energy_spacings(recs, source) {
            Ok(s) => s,
            Err(e) => {
                out.warn(format!("{} subspace skipped: {e}", source.label()));
                continue;
            }
        };
        let ks = spacing_row(&mut ks_csv, &sample, &refs)?;
        res[source.label()] = Value::Object(refs.iter().map(|r| r.0.clone()).zip(ks.into_iter().map(Value::from)).collect());
        if cfg.emit.csv {
            let beta = cfg.brody_beta.unwrap_or(0.5);
            let mut h = Csv::new(&["s_bin_center", "empirical_density", "poisson", "wigner_dyson", "brody_beta", "berry_robnik"]);
            for (s, d) in histogram(&sample.spacings, HIST_BINS, 0.0, HIST_MAX) {
                h.row(&[
                    num(s),
                    num(d),
                    num(Reference::Poisson.pdf(s)),
                    num(Reference::WignerDyson.pdf(s)),
                    num(Reference::Brody(beta).pdf(s)),
                    num(br.pdf(s)),
                ]);
            }
            out.write(&format!("spacing_hist_{}.csv", source.label()), &h.into_bytes())?;
        }
    }
    if cfg.emit.csv {
        out.write("spectrum_ks.csv", &ks_csv.into_bytes())?;
        out.write("floquet.csv", &floquet_csv(&run.records))?;
    }
    Ok(res)
}

pub fn width_compare(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    guard_dimension(out, cfg.n_dim);
    let m = &cfg.model;
    m.check_positive()?;
    let seps = separatrices(m);
    let run = floquet_run(m, cfg.n_dim, cfg.trotter_steps, cfg.tau_s)?;
    let basis = EigenBasis::new(&run.h0)?;
    let mut csv = Csv::new(&[
        "separatrix_energy",
        "classical_estimate",
        "classical_measured",
        "classical_half_range",
        "quantum_estimate",
        "quantum_measured",
    ]);
    let mut rows = Vec::new();
    for (i, &e) in seps.iter().enumerate() {
        let est = chaotic_halfwidth_harper(m.mu, m.omega0())?;
        let w = measure_layer_width(m, e, 0.05, cfg.stats_orbits, cfg.stats_periods, cfg.steps_per_period, cfg.seed.wrapping_add(i as u64))?;
        let q_est = ergodic_width_estimate(&basis, m, &run.space, e)?;
        // each Floquet state counts towards the separatrix its <h0> is closest to
        let q_meas = run
            .records
            .iter()
            .filter(|r| {
                seps.iter()
                    .enumerate()
                    .min_by(|a, b| (r.mu_h0 - a.1).abs().total_cmp(&(r.mu_h0 - b.1).abs()))
                    .map(|(k, _)| k)
                    == Some(i)
            })
            .map(|r| r.sigma_h0)
            .fold(0.0, f64::max);
        csv.row(&[num(e), num(est), num(w.max_sigma), num(w.half_range), num(q_est), num(q_meas)]);
        rows.push(json!({
            "separatrix_energy": e,
            "classical_estimate": est,
            "classical_measured": w.max_sigma,
            "quantum_estimate": q_est,
            "quantum_measured": q_meas,
        }));
    }
    if cfg.emit.csv {
        out.write("width_compare.csv", &csv.into_bytes())?;
    }
    Ok(json!({"rows": rows}))
}

struct SweepCell {
    n: usize,
    record: FloquetRecord,
    grid: HusimiGrid,
    records: Vec<FloquetRecord>,
}

pub fn sweep_n(cfg: &RunConfig, out: &mut Outputs) -> Result<Value> {
    let m = cfg.model;
    let e_s = separatrices(&m)[0];
    if cfg.n_list.iter().any(|&n| n % 4 == 0) {
        for &n in cfg.n_list.iter().filter(|&&n| n % 4 == 0) {
            guard_dimension(out, n);
        }
    }
    let cells: Vec<SweepCell> = cfg
        .n_list
        .par_iter()
        .map(|&n| -> Result<SweepCell> {
            let run = floquet_run(&m, n, 5 * n, cfg.tau_s)?;
            let record = run
                .records
                .iter()
                .min_by(|a, b| (a.mu_h0 - e_s).abs().total_cmp(&(b.mu_h0 - e_s).abs()))
                .cloned()
                .context("empty spectrum")?;
            let grid = husimi_grid(&run.space, &record.state)?;
            Ok(SweepCell {
                n,
                record,
                grid,
                records: run.records,
            })
        })
        .collect::<Result<_>>()?;
    let mut csv = Csv::new(&["n_dim", "j", "mu_h0", "sigma_h0", "effective_cells", "spread_fraction"]);
    for c in &cells {
        let dir = format!("n_{:04}", c.n);
        if cfg.emit.csv {
            out.write(&format!("{dir}/floquet.csv"), &floquet_csv(&c.records))?;
        }
        write_grid(out, cfg, &c.grid, &format!("{dir}/separatrix_state"))?;
        csv.row(&[
            c.n.to_string(),
            c.record.index.to_string(),
            num(c.record.mu_h0),
            num(c.record.sigma_h0),
            num(c.grid.effective_cells()),
            num(c.grid.spread_fraction()),
        ]);
    }
    if cfg.emit.csv {
        out.write("sweep.csv", &csv.into_bytes())?;
    }
    if cells.is_empty() {
        bail!("n_list is empty");
    }
    Ok(json!({
        "separatrix_energy": e_s,
        "effective_cells": cells.iter().map(|c| c.grid.effective_cells()).collect::<Vec<_>>(),
    }))
}
