//! Flat key-value configuration with typed sections.
//!
//! ```text
//! # comment
//! [domain]
//! domain = polydisk(1,1)
//!
//! [symbols]
//! symbol = qh(twist=(1,0), radial="r1")
//! symbol = qh(twist=(0,0), radial="1")
//!
//! [lattice]
//! kmax = (10,10)
//!
//! [tolerances]
//! quad_tol = 1e-10
//! zero_tol = 1e-6
//!
//! [experiment]
//! kind = proposition1
//! seed = 42
//! out = report.json
//! ```
//!
//! Keys may repeat inside a section (`symbol = ...` lines are ordered,
//! `phi_1` first). The only environment variable the tools read is
//! `RT_CACHE_DIR` for the moment cache.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rtz_core::domain::DomainSpec;
use rtz_core::symbols::SymbolSpec;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Raw parsed config: ordered `(section, key, value)` entries.
#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: Vec<(String, String, String)>,
    pub base_dir: PathBuf,
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError(format!("line {}: unclosed section", lineno + 1)))?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected key = value, got '{line}'", lineno + 1))
            })?;
            let mut value = value.trim();
            // strip one layer of surrounding quotes on plain string values
            if value.starts_with('"') && value.ends_with('"') && value.len() >= 2 && !value.contains('(') {
                value = &value[1..value.len() - 1];
            }
            entries.push((section.clone(), key.trim().to_string(), value.to_string()));
        }
        Ok(Self {
            entries,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
    }

    pub fn get_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(s, k, _)| s == section && k == key)
            .map(|(_, _, v)| v.as_str())
            .collect()
    }

    /// All `(key, value)` pairs of a section, in order.
    pub fn section(&self, section: &str) -> Vec<(&str, &str)> {
        self.entries
            .iter()
            .filter(|(s, _, _)| s == section)
            .map(|(_, k, v)| (k.as_str(), v.as_str()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Proposition1,
    Corollary1,
    Theorem1BoxReduction,
    MomentVanishing,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposition1" => Ok(Self::Proposition1),
            "corollary1" => Ok(Self::Corollary1),
            "theorem1_box_reduction" | "box_reduction" => Ok(Self::Theorem1BoxReduction),
            "moment_vanishing" => Ok(Self::MomentVanishing),
            other => Err(ConfigError(format!(
                "unknown experiment kind '{other}' (expected proposition1, corollary1, theorem1_box_reduction, moment_vanishing)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Proposition1 => "proposition1",
            Self::Corollary1 => "corollary1",
            Self::Theorem1BoxReduction => "theorem1_box_reduction",
            Self::MomentVanishing => "moment_vanishing",
        }
    }
}

/// Everything an experiment run needs; deterministic given `(spec, seed)`.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub domain: DomainSpec,
    pub domain_text: String,
    /// Ordered `phi_1` first.
    pub symbols: Vec<SymbolSpec>,
    pub kmax: Vec<i64>,
    pub quad_tol: Option<f64>,
    pub zero_tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Box-reduction axis, 0-based (config uses 1-based).
    pub axis: usize,
    pub probes: usize,
    /// Index-set expression for moment_vanishing.
    pub index_set: Option<String>,
    /// Declared symbolic hulls per factor (1-based indices in config keys
    /// `zhull_1`, `zhull_2`, ...).
    pub hulls: BTreeMap<usize, String>,
    pub base_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_config(config: &Config, kind_override: Option<ExperimentKind>) -> Result<Self, ConfigError> {
        let kind = match kind_override {
            Some(k) => k,
            None => ExperimentKind::parse(
                config
                    .get("experiment", "kind")
                    .ok_or_else(|| ConfigError("missing [experiment] kind".into()))?,
            )?,
        };
        let domain_text = config
            .get("domain", "domain")
            .ok_or_else(|| ConfigError("missing [domain] domain".into()))?
            .to_string();
        let domain =
            DomainSpec::parse(&domain_text).map_err(|e| ConfigError(e.to_string()))?;
        let mut symbols = Vec::new();
        for s in config.get_all("symbols", "symbol") {
            symbols.push(SymbolSpec::parse(s).map_err(|e| ConfigError(e.to_string()))?);
        }
        let kmax_text = config
            .get("lattice", "kmax")
            .ok_or_else(|| ConfigError("missing [lattice] kmax".into()))?;
        let kmax = parse_tuple(kmax_text)?;
        if kmax.iter().any(|k| *k < 0) {
            return Err(ConfigError("kmax entries must be nonnegative".into()));
        }
        let quad_tol = parse_opt_f64(config.get("tolerances", "quad_tol"))?;
        let zero_tol = parse_opt_f64(config.get("tolerances", "zero_tol"))?;
        let seed = match config.get("experiment", "seed") {
            Some(s) => s
                .parse::<u64>()
                .map_err(|e| ConfigError(format!("bad seed '{s}': {e}")))?,
            None => 0,
        };
        let out = config
            .get("experiment", "out")
            .map(|s| config.base_dir.join(s));
        let axis = match config.get("experiment", "axis") {
            Some(s) => {
                let a = s
                    .parse::<usize>()
                    .map_err(|e| ConfigError(format!("bad axis '{s}': {e}")))?;
                if a < 1 || a > kmax.len() {
                    return Err(ConfigError(format!(
                        "axis {a} out of range 1..={}",
                        kmax.len()
                    )));
                }
                a - 1
            }
            None => 0,
        };
        let probes = match config.get("experiment", "probes") {
            Some(s) => s
                .parse::<usize>()
                .map_err(|e| ConfigError(format!("bad probes '{s}': {e}")))?,
            None => 20,
        };
        let index_set = config.get("experiment", "set").map(|s| s.to_string());
        let mut hulls = BTreeMap::new();
        for (key, value) in config.section("experiment") {
            if let Some(idx) = key.strip_prefix("zhull_") {
                let j: usize = idx
                    .parse()
                    .map_err(|e| ConfigError(format!("bad hull key '{key}': {e}")))?;
                if j < 1 {
                    return Err(ConfigError("hull indices are 1-based".into()));
                }
                hulls.insert(j, value.to_string());
            }
        }
        Ok(Self {
            kind,
            domain,
            domain_text,
            symbols,
            kmax,
            quad_tol,
            zero_tol,
            seed,
            out,
            axis,
            probes,
            index_set,
            hulls,
            base_dir: config.base_dir.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.kmax.len()
    }
}

/// Parse `(a,b,...)` or `a,b,...` into integers.
pub fn parse_tuple(s: &str) -> Result<Vec<i64>, ConfigError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|v| v.strip_suffix(')'))
        .unwrap_or(s.trim());
    let vals: Result<Vec<i64>, _> = inner
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<i64>())
        .collect();
    let vals = vals.map_err(|e| ConfigError(format!("bad tuple '{s}': {e}")))?;
    if vals.is_empty() {
        return Err(ConfigError(format!("empty tuple '{s}'")));
    }
    Ok(vals)
}

fn parse_opt_f64(v: Option<&str>) -> Result<Option<f64>, ConfigError> {
    match v {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse::<f64>()
            .map(Some)
            .map_err(|e| ConfigError(format!("bad number '{s}': {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# proposition 1 at desk scale
[domain]
domain = polydisk(1,1)

[symbols]
symbol = qh(twist=(1,0), radial="r1")
symbol = qh(twist=(0,0), radial="1")

[lattice]
kmax = (6,6)

[tolerances]
quad_tol = 1e-10
zero_tol = 1e-6

[experiment]
kind = proposition1
seed = 42
out = report.json
zhull_1 = FULL x FULL
"#;

    #[test]
    fn parses_sections_and_repeated_keys() {
        let c = Config::parse(SAMPLE, Path::new("/tmp")).unwrap();
        assert_eq!(c.get("domain", "domain"), Some("polydisk(1,1)"));
        assert_eq!(c.get_all("symbols", "symbol").len(), 2);
        let spec = ExperimentSpec::from_config(&c, None).unwrap();
        assert_eq!(spec.kind, ExperimentKind::Proposition1);
        assert_eq!(spec.kmax, vec![6, 6]);
        assert_eq!(spec.seed, 42);
        assert_eq!(spec.symbols.len(), 2);
        assert_eq!(spec.hulls.get(&1).map(|s| s.as_str()), Some("FULL x FULL"));
        assert_eq!(spec.out, Some(PathBuf::from("/tmp/report.json")));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[oops", Path::new(".")).is_err());
        assert!(Config::parse("keyonly", Path::new(".")).is_err());
        let c = Config::parse("[lattice]\nkmax = (2,-2)", Path::new(".")).unwrap();
        let err = ExperimentSpec::from_config(&c, Some(ExperimentKind::Proposition1));
        assert!(err.is_err());
    }

    #[test]
    fn tuple_forms() {
        assert_eq!(parse_tuple("(10,10)").unwrap(), vec![10, 10]);
        assert_eq!(parse_tuple("10,10").unwrap(), vec![10, 10]);
        assert_eq!(parse_tuple("(3)").unwrap(), vec![3]);
        assert!(parse_tuple("()").is_err());
    }
}
