use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Fixed 17-significant-digit text for every float written to disk.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text builder; one header line, rows joined with commas.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

struct FileEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

/// Output directory plus the list of files written into it, in write order.
pub struct Outputs {
    root: PathBuf,
    files: Vec<FileEntry>,
    warnings: Vec<String>,
    started: Instant,
}

impl Outputs {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        let probe = root.join(".qharper-write-test");
        fs::write(&probe, b"").with_context(|| format!("output directory {} is not writable", root.display()))?;
        fs::remove_file(&probe).ok();
        Ok(Outputs {
            root: root.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: hex(&Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Registers a file some library call already wrote at `self.path(rel)`.
    pub fn register(&mut self, rel: &str) -> Result<()> {
        let p = self.root.join(rel);
        let bytes = fs::read(&p).with_context(|| format!("reading back {}", p.display()))?;
        self.files.push(FileEntry {
            path: rel.to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let m = msg.into();
        if !self.warnings.contains(&m) {
            self.warnings.push(m);
        }
    }

    pub fn finish(self, command: &str, cfg: &RunConfig, extra: Value) -> Result<PathBuf> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|f| json!({"path": f.path, "sha256": f.sha256, "bytes": f.bytes}))
            .collect();
        let manifest = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.seed,
            "config": config_json(cfg),
            "threads": rayon::current_num_threads(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "warnings": self.warnings,
            "results": extra,
            "files": files,
        });
        let p = self.root.join("manifest.json");
        fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(p)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn config_json(cfg: &RunConfig) -> Value {
    json!({
        "model": {
            "a": cfg.model.a,
            "epsilon": cfg.model.epsilon,
            "mu": cfg.model.mu,
            "mu_prime": cfg.model.mu_prime,
        },
        "quantum": {
            "n_dim": cfg.n_dim,
            "trotter_steps": cfg.trotter_steps,
            "tau_s": cfg.tau_s,
        },
        "classical": {
            "n_orbits": cfg.sos_orbits,
            "n_points": cfg.sos_points,
            "steps_per_period": cfg.steps_per_period,
        },
        "stats": {
            "n_orbits": cfg.stats_orbits,
            "n_periods": cfg.stats_periods,
            "threshold": cfg.threshold,
            "brody_beta": cfg.brody_beta,
        },
        "run": {
            "seed": cfg.seed,
            "out": cfg.output_dir.display().to_string(),
            "emit": cfg.emit.label(),
            "n_list": cfg.n_list,
        },
    })
}
