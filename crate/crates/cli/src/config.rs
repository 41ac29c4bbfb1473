use std::fmt;
use std::path::PathBuf;

use qharper::ModelParams;

/// Which product kinds a subcommand writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub bin: bool,
    pub png: bool,
}

impl Emit {
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut e = Emit {
            csv: false,
            bin: false,
            png: false,
        };
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "csv" => e.csv = true,
                "bin" => e.bin = true,
                "png" => e.png = true,
                other => return Err(format!("unknown emit kind '{other}' (expected csv, bin, png)")),
            }
        }
        Ok(e)
    }

    pub fn label(&self) -> String {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.bin {
            v.push("bin");
        }
        if self.png {
            v.push("png");
        }
        v.join(",")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams,
    pub n_dim: usize,
    pub trotter_steps: usize,
    pub tau_s: f64,
    pub sos_orbits: usize,
    pub sos_points: usize,
    pub steps_per_period: usize,
    pub stats_orbits: usize,
    pub stats_periods: usize,
    pub threshold: f64,
    pub brody_beta: Option<f64>,
    pub n_list: Vec<usize>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit: Emit,
}

#[derive(Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.message),
            None => write!(f, "{}: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["a", "epsilon", "mu", "mu_prime"]),
    ("quantum", &["n_dim", "trotter_steps", "tau_s"]),
    ("classical", &["n_orbits", "n_points", "steps_per_period"]),
    ("stats", &["n_orbits", "n_periods", "threshold", "brody_beta"]),
    ("run", &["seed", "out", "emit", "n_list"]),
];

const REQUIRED: &[&str] = &["model.a", "model.epsilon", "model.mu", "model.mu_prime"];

/// Dimension used by subcommands that do not build a single quantum model.
const FALLBACK_N_DIM: usize = 100;

/// Raw `section.key = value` entries in file order, later entries winning.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: Vec<(String, String, Option<usize>)>,
}

impl RawConfig {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into(), None));
    }

    fn get(&self, key: &str) -> Option<(&str, Option<usize>)> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.0 == key)
            .map(|e| (e.1.as_str(), e.2))
    }
}

fn all_keys() -> Vec<String> {
    SECTIONS
        .iter()
        .flat_map(|(s, ks)| ks.iter().map(move |k| format!("{s}.{k}")))
        .collect()
}

fn suggestion(key: &str, candidates: &[String]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::levenshtein(key, c), c))
        .filter(|(d, _)| *d <= 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, c)| c.clone())
}

/// Parses `[section]` headers and `key = value` lines; `#` and `;` start comments.
pub fn parse_text(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').map(str::trim).ok_or_else(|| ConfigError {
                line: Some(lineno),
                key: line.to_string(),
                message: "unterminated section header".into(),
            })?;
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                let names: Vec<String> = SECTIONS.iter().map(|(s, _)| s.to_string()).collect();
                let hint = suggestion(name, &names).map(|s| format!("; did you mean [{s}]?")).unwrap_or_default();
                return Err(ConfigError {
                    line: Some(lineno),
                    key: format!("[{name}]"),
                    message: format!("unknown section{hint}"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError {
            line: Some(lineno),
            key: line.to_string(),
            message: "expected 'key = value'".into(),
        })?;
        let k = k.trim();
        let sec = section.as_deref().ok_or_else(|| ConfigError {
            line: Some(lineno),
            key: k.to_string(),
            message: "key outside of any [section]".into(),
        })?;
        let full = format!("{sec}.{k}");
        let keys = all_keys();
        if !keys.contains(&full) {
            let hint = suggestion(&full, &keys)
                .map(|s| format!("; did you mean '{}'?", s.split_once('.').map_or(s.as_str(), |p| p.1)))
                .unwrap_or_default();
            return Err(ConfigError {
                line: Some(lineno),
                key: k.to_string(),
                message: format!("unknown key in [{sec}]{hint}"),
            });
        }
        raw.entries.push((full, v.trim().to_string(), Some(lineno)));
    }
    Ok(raw)
}

struct Reader<'a> {
    raw: &'a RawConfig,
}

impl Reader<'_> {
    fn err(&self, key: &str, line: Option<usize>, message: String) -> ConfigError {
        ConfigError {
            line,
            key: key.rsplit('.').next().unwrap_or(key).to_string(),
            message,
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, kind: &str) -> Result<Option<T>, ConfigError> {
        match self.raw.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(key, line, format!("expected {kind}, got '{v}'"))),
        }
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let v: Option<f64> = self.parse(key, "a number")?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(self.err(key, self.raw.get(key).and_then(|e| e.1), "must be finite".into()));
            }
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        let v: usize = self.parse(key, "a non-negative integer")?.unwrap_or(default);
        if v == 0 {
            return Err(self.err(key, self.raw.get(key).and_then(|e| e.1), "must be positive".into()));
        }
        Ok(v)
    }
}

/// `needs_dim`: whether `quantum.n_dim` is required (every subcommand with a single quantum model).
pub fn build(raw: &RawConfig, needs_dim: bool) -> Result<RunConfig, ConfigError> {
    let dim_key: &[&str] = if needs_dim { &["quantum.n_dim"] } else { &[] };
    for key in REQUIRED.iter().chain(dim_key) {
        if raw.get(key).is_none() {
            return Err(ConfigError {
                line: None,
                key: key.split_once('.').unwrap().1.to_string(),
                message: format!("missing required key in [{}]", key.split_once('.').unwrap().0),
            });
        }
    }
    let r = Reader { raw };
    let model = ModelParams::new(
        r.real("model.a")?.unwrap(),
        r.real("model.epsilon")?.unwrap(),
        r.real("model.mu")?.unwrap(),
        r.real("model.mu_prime")?.unwrap(),
    );
    let n_dim = r.count("quantum.n_dim", FALLBACK_N_DIM)?;
    let line_of = |k: &str| raw.get(k).and_then(|e| e.1);
    if n_dim < 2 {
        return Err(r.err("quantum.n_dim", line_of("quantum.n_dim"), "must be at least 2".into()));
    }
    let threshold = r.real("stats.threshold")?.unwrap_or(0.18);
    if threshold < 0.0 {
        return Err(r.err("stats.threshold", line_of("stats.threshold"), "must be non-negative".into()));
    }
    let brody_beta = r.real("stats.brody_beta")?;
    if let Some(b) = brody_beta {
        if !(0.0..=1.0).contains(&b) {
            return Err(r.err("stats.brody_beta", line_of("stats.brody_beta"), "must lie in [0, 1]".into()));
        }
    }
    let n_list = match raw.get("run.n_list") {
        None => vec![16, 32, 64, 128],
        Some((v, line)) => {
            let list: Result<Vec<usize>, _> = v.split(',').map(|x| x.trim().parse::<usize>()).collect();
            match list {
                Ok(l) if !l.is_empty() && l.iter().all(|&n| n >= 2) => l,
                _ => return Err(r.err("run.n_list", line, format!("expected comma-separated dimensions >= 2, got '{v}'"))),
            }
        }
    };
    let emit = match raw.get("run.emit") {
        None => Emit {
            csv: true,
            bin: false,
            png: true,
        },
        Some((v, line)) => Emit::parse(v).map_err(|m| r.err("run.emit", line, m))?,
    };
    Ok(RunConfig {
        model,
        n_dim,
        trotter_steps: r.count("quantum.trotter_steps", 5 * n_dim)?,
        tau_s: r.real("quantum.tau_s")?.unwrap_or(0.0),
        sos_orbits: r.count("classical.n_orbits", 100)?,
        sos_points: r.count("classical.n_points", 400)?,
        steps_per_period: r.count("classical.steps_per_period", qharper::classical::DEFAULT_STEPS_PER_PERIOD)?,
        stats_orbits: r.count("stats.n_orbits", 500)?,
        stats_periods: r.count("stats.n_periods", 400)?,
        threshold,
        brody_beta,
        n_list,
        seed: r.parse("run.seed", "an unsigned integer")?.unwrap_or(0),
        output_dir: raw.get("run.out").map_or_else(|| PathBuf::from("out"), |v| PathBuf::from(v.0)),
        emit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build_q(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
        build(raw, true)
    }

    const MINIMAL: &str = "[model]\na = 1.5\nepsilon = 0.5\nmu = 0.05\nmu_prime = 0.05\n[quantum]\nn_dim = 100\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = build_q(&parse_text(MINIMAL).unwrap()).unwrap();
        assert_eq!(c.model, ModelParams::new(1.5, 0.5, 0.05, 0.05));
        assert_eq!(c.trotter_steps, 500);
        assert_eq!((c.stats_orbits, c.stats_periods), (500, 400));
        assert_eq!(c.steps_per_period, 512);
        assert_eq!(c.threshold, 0.18);
        assert_eq!(c.n_list, vec![16, 32, 64, 128]);
    }

    #[test]
    fn zero_dimension_is_a_range_error() {
        let text = MINIMAL.replace("n_dim = 100", "n_dim = 0");
        let e = build_q(&parse_text(&text).unwrap()).unwrap_err();
        assert_eq!(e.key, "n_dim");
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn typo_gets_a_suggestion() {
        let text = MINIMAL.replace("epsilon =", "epsilonn =");
        let e = parse_text(&text).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().contains("did you mean 'epsilon'"), "{e}");
    }

    #[test]
    fn non_numeric_and_missing() {
        let e = build_q(&parse_text(&MINIMAL.replace("0.05\nmu_prime", "fast\nmu_prime")).unwrap()).unwrap_err();
        assert_eq!((e.key.as_str(), e.line), ("mu", Some(4)));
        let e = build_q(&parse_text(&MINIMAL.replace("mu_prime = 0.05\n", "")).unwrap()).unwrap_err();
        assert_eq!(e.key, "mu_prime");
        let no_dim = MINIMAL.replace("n_dim = 100\n", "");
        assert_eq!(build_q(&parse_text(&no_dim).unwrap()).unwrap_err().key, "n_dim");
        assert!(build(&parse_text(&no_dim).unwrap(), false).is_ok());
        assert!(parse_text("a = 1\n").is_err());
        assert!(parse_text("[modle]\n").unwrap_err().to_string().contains("[model]"));
    }

    #[test]
    fn later_values_override() {
        let mut raw = parse_text(MINIMAL).unwrap();
        raw.set("quantum.n_dim", "64");
        raw.set("run.emit", "bin");
        let c = build_q(&raw).unwrap();
        assert_eq!((c.n_dim, c.trotter_steps), (64, 320));
        assert_eq!(c.emit, Emit { csv: false, bin: true, png: false });
    }
}
