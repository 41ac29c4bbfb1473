use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn qharper(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qharper"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("QHARPER_THREADS", "1")
        .output()
        .expect("spawn qharper")
}

fn ok(args: &[&str], out: &Path) {
    let o = qharper(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn csv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

const MODEL: &[&str] = &["--a", "1.5", "--epsilon", "0.5", "--mu", "0.05", "--mu-prime", "0.05"];

fn with(extra: &[&'static str]) -> Vec<&'static str> {
    let mut v: Vec<&str> = MODEL.to_vec();
    v.extend_from_slice(extra);
    v
}

#[test]
fn unperturbed_floquet_table_has_zero_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["quantum-floquet", "--a", "1.5", "--epsilon", "0.5", "--mu", "0", "--mu-prime", "0", "--n-dim", "101", "--weyl-check"],
        dir.path(),
    );
    let sig = csv_column(&dir.path().join("floquet.csv"), "sigma_h0");
    assert_eq!(sig.len(), 101);
    assert!(sig.iter().all(|&s| s < 1e-8));
    let m = manifest(dir.path());
    assert!(m["results"]["weyl_max_abs_diff"].as_f64().unwrap() < 1e-10);
    assert_eq!(m["warnings"].as_array().unwrap().len(), 0);
    assert_eq!(m["config"]["quantum"]["trotter_steps"], 505);
}

#[test]
fn manifest_hashes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with(&["quantum-floquet", "--n-dim", "12", "--emit", "csv,bin"]), dir.path());
    let m = manifest(dir.path());
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["floquet.csv", "propagator.qhrp", "eigenvectors.qhrp"]);
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), digest);
    }
    assert_eq!(m["seed"], 0);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].is_string());
    // N = 12 is a multiple of 4
    assert!(m["warnings"][0].as_str().unwrap().contains("multiple of 4"));
    let u = qharper::io::load_matrix(dir.path().join("propagator.qhrp")).unwrap();
    assert_eq!(u.dim(), 12);
    assert!(u.unitarity_defect() < 1e-10);
}

#[test]
fn identical_runs_give_identical_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = with(&["classical-sos", "--seed", "9"]);
    let mut args = args.clone();
    args.extend_from_slice(&["--config"]);
    let cfg = a.path().join("small.ini");
    fs::write(&cfg, "[classical]\nn_orbits = 6\nn_points = 20\nsteps_per_period = 64\n").unwrap();
    let cfg_s = cfg.to_str().unwrap().to_string();
    let mut full: Vec<&str> = args.clone();
    full.push(&cfg_s);
    ok(&full, &a.path().join("run"));
    ok(&full, &b.path().join("run"));
    for f in ["sos.csv", "orbit_stats.csv", "width_estimates.csv", "sos.png"] {
        assert_eq!(fs::read(a.path().join("run").join(f)).unwrap(), fs::read(b.path().join("run").join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(a.path().join("run/sos.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "orbit_id,period_index,phi,p,H0");
    assert_eq!(text.lines().count(), 1 + 6 * 20);
    // every float field carries 17 significant digits
    let field = text.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.len(), 18, "{field}");
    let phi = csv_column(&a.path().join("run/sos.csv"), "phi");
    assert!(phi.iter().all(|&x| (0.0..std::f64::consts::TAU).contains(&x)));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    fs::write(
        &cfg,
        "# driven, mixed phase space\n[model]\na = 1.5\nepsilon = 0.5\nmu = 0.05\nmu_prime = 0.05\n[quantum]\nn_dim = 100\n[run]\nseed = 3\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["quantum-floquet", "--config", cfg.to_str().unwrap(), "--n-dim", "9", "--seed", "4"], &out);
    let m = manifest(&out);
    assert_eq!(m["config"]["quantum"]["n_dim"], 9);
    assert_eq!(m["config"]["quantum"]["trotter_steps"], 45);
    assert_eq!(m["config"]["model"]["a"], 1.5);
    assert_eq!(m["seed"], 4);
}

#[test]
fn config_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[model]\na = 1.5\nepsilonn = 0.5\n").unwrap();
    let o = qharper(&["quantum-floquet", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("epsilonn") && err.contains("did you mean 'epsilon'"), "{err}");

    let o = qharper(&with(&["quantum-floquet", "--n-dim", "0"]), &dir.path().join("o"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_dim"));

    let o = qharper(&["quantum-floquet", "--a", "1", "--epsilon", "1", "--n-dim", "9"], &dir.path().join("o"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu: missing required key"));

    fs::write(&cfg, "[model]\na = fast\nepsilon = 1\nmu = 0\nmu_prime = 0\n[quantum]\nn_dim = 9\n").unwrap();
    let o = qharper(&["quantum-floquet", "--config", cfg.to_str().unwrap()], &dir.path().join("o"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2: a: expected a number"));
}

#[test]
fn weyl_check_refuses_even_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let o = qharper(&with(&["quantum-floquet", "--n-dim", "10", "--weyl-check"]), dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("odd N"));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = qharper(&with(&["quantum-floquet", "--n-dim", "9"]), &blocker.join("sub"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("output directory"));
}

#[test]
fn sweep_writes_one_image_per_dimension() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["sweep-n", "--a", "1", "--epsilon", "1", "--mu", "0.1", "--mu-prime", "0.05", "--n-list", "16,32", "--emit", "csv,png,bin"],
        dir.path(),
    );
    for n in ["0016", "0032"] {
        assert!(dir.path().join(format!("n_{n}/separatrix_state.png")).exists());
        let g = qharper::io::load_matrix(dir.path().join(format!("n_{n}/separatrix_state.qhrp"))).unwrap();
        let total: f64 = g.data().iter().map(|z| z.re).sum();
        assert!((total - g.dim() as f64).abs() < 1e-8);
    }
    let mu = csv_column(&dir.path().join("sweep.csv"), "mu_h0");
    assert!(mu.iter().all(|m| (m - 1.0).abs() < 0.3));
    assert_eq!(manifest(dir.path())["warnings"].as_array().unwrap().len(), 2);
}

#[test]
fn width_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("w.ini");
    fs::write(&cfg, "[stats]\nn_orbits = 4\nn_periods = 20\n[classical]\nsteps_per_period = 64\n").unwrap();
    ok(
        &["width-compare", "--config", cfg.to_str().unwrap(), "--a", "2", "--epsilon", "2", "--mu", "0.05", "--mu-prime", "0.05", "--n-dim", "50"],
        &dir.path().join("o"),
    );
    let text = fs::read_to_string(dir.path().join("o/width_compare.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "separatrix_energy,classical_estimate,classical_measured,classical_half_range,quantum_estimate,quantum_measured"
    );
    // a = eps leaves a single separatrix
    assert_eq!(text.lines().count(), 2);
    let est = csv_column(&dir.path().join("o/width_compare.csv"), "quantum_estimate")[0];
    assert!(est > 0.0);
}

#[test]
fn spectrum_and_vjk_products() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with(&["spectrum-stats", "--n-dim", "51", "--threshold", "0.18", "--brody-beta", "0.4"]), dir.path());
    let text = fs::read_to_string(dir.path().join("spectrum_ks.csv")).unwrap();
    assert!(text.starts_with("source,count,ks_poisson,ks_wigner_dyson,ks_brody_0.4,ks_berry_robnik\n"));
    assert!(text.contains("\nfull,51,"));
    let hist = fs::read_to_string(dir.path().join("spacing_hist_full.csv")).unwrap();
    assert_eq!(
        hist.lines().next().unwrap(),
        "s_bin_center,empirical_density,poisson,wigner_dyson,brody_beta,berry_robnik"
    );

    let v = tempfile::tempdir().unwrap();
    ok(&["vjk-analysis", "--a", "2", "--epsilon", "2", "--mu", "0.05", "--mu-prime", "0.05", "--n-dim", "50", "--emit", "csv,png"], v.path());
    let prof = csv_column(&v.path().join("vjk_profile.csv"), "sigma_over_mu");
    let peak = prof.iter().cloned().fold(0.0, f64::max);
    assert!((0.2..=0.8).contains(&peak), "{peak}");
    assert!(v.path().join("vjk_abs.png").exists());
    assert_eq!(csv_column(&v.path().join("vjk_mass.csv"), "tau").len(), 4 * 50);
}

#[test]
fn gallery_has_one_image_per_state() {
    let dir = tempfile::tempdir().unwrap();
    ok(&with(&["husimi-gallery", "--n-dim", "9"]), dir.path());
    let imgs = fs::read_dir(dir.path().join("husimi")).unwrap().count();
    assert_eq!(imgs, 9);
    assert!(dir.path().join("husimi/state_0008.png").exists());
    assert_eq!(manifest(dir.path())["files"].as_array().unwrap().len(), 10);
}
