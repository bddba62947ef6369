//! Run configuration: documented defaults, a key=value config-file format
//! mirroring the command-line flags, and the flags > file > defaults merge.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Default deformation parameter.
pub const DEFAULT_Q: f64 = 1.3;
/// Default number of chain sites.
pub const DEFAULT_SITES: usize = 2;
/// Default Hamiltonian-tower depth.
pub const DEFAULT_TOWER_DEPTH: usize = 3;
/// Default evaluation times.
pub const DEFAULT_TIMES: [f64; 3] = [0.1, 0.5, 1.0];
/// Default residual tolerance for cross-checks without a pinned threshold.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Times are capped to keep the matrix exponentials well-conditioned.
pub const MAX_ABS_TIME: f64 = 2.0;

/// Output formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Parameter(format!("format '{other}' (known: json, csv)"))),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct CliConfig {
    pub q: f64,
    pub n_sites: usize,
    pub tower_depth: usize,
    pub times: Vec<f64>,
    pub tolerance: f64,
    pub suite: String,
    pub observable: String,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            q: DEFAULT_Q,
            n_sites: DEFAULT_SITES,
            tower_depth: DEFAULT_TOWER_DEPTH,
            times: DEFAULT_TIMES.to_vec(),
            tolerance: DEFAULT_TOLERANCE,
            suite: "all".to_string(),
            observable: "lax-residual".to_string(),
            out: None,
            format: None,
        }
    }
}

/// A partially specified configuration layer (flags, or a config file).
#[derive(Clone, Debug, Default)]
pub struct ConfigLayer {
    pub q: Option<f64>,
    pub n_sites: Option<usize>,
    pub tower_depth: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub tolerance: Option<f64>,
    pub suite: Option<String>,
    pub observable: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl ConfigLayer {
    /// Parse the key=value config-file format. Keys mirror the long flags:
    /// `q`, `sites`, `tower-depth`, `t` (comma-separated), `tol`, `suite`,
    /// `observable`, `out`, `format`. Blank lines and `#` comments are
    /// ignored.
    pub fn from_file(path: &Path) -> Result<ConfigLayer> {
        let text = std::fs::read_to_string(path)?;
        let mut layer = ConfigLayer::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parameter(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                Error::Parameter(format!(
                    "{}:{}: invalid {what} '{value}'",
                    path.display(),
                    lineno + 1
                ))
            };
            match key {
                "q" => layer.q = Some(value.parse().map_err(|_| bad("q"))?),
                "sites" => layer.n_sites = Some(value.parse().map_err(|_| bad("sites"))?),
                "tower-depth" => {
                    layer.tower_depth = Some(value.parse().map_err(|_| bad("tower-depth"))?)
                }
                "t" => {
                    let times = value
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad("time list"))?;
                    layer.times = Some(times);
                }
                "tol" => layer.tolerance = Some(value.parse().map_err(|_| bad("tol"))?),
                "suite" => layer.suite = Some(value.to_string()),
                "observable" => layer.observable = Some(value.to_string()),
                "out" => layer.out = Some(PathBuf::from(value)),
                "format" => layer.format = Some(Format::parse(value)?),
                other => {
                    return Err(Error::Parameter(format!(
                        "{}:{}: unknown key '{other}'",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(layer)
    }

    /// Merge `self` over `lower`: values present here win.
    pub fn over(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            q: self.q.or(lower.q),
            n_sites: self.n_sites.or(lower.n_sites),
            tower_depth: self.tower_depth.or(lower.tower_depth),
            times: self.times.or(lower.times),
            tolerance: self.tolerance.or(lower.tolerance),
            suite: self.suite.or(lower.suite),
            observable: self.observable.or(lower.observable),
            out: self.out.or(lower.out),
            format: self.format.or(lower.format),
        }
    }

    /// Fill the remaining fields from the documented defaults.
    pub fn finish(self) -> CliConfig {
        let defaults = CliConfig::default();
        CliConfig {
            q: self.q.unwrap_or(defaults.q),
            n_sites: self.n_sites.unwrap_or(defaults.n_sites),
            tower_depth: self.tower_depth.unwrap_or(defaults.tower_depth),
            times: self.times.unwrap_or(defaults.times),
            tolerance: self.tolerance.unwrap_or(defaults.tolerance),
            suite: self.suite.unwrap_or(defaults.suite),
            observable: self.observable.unwrap_or(defaults.observable),
            out: self.out.or(defaults.out),
            format: self.format.or(defaults.format),
        }
    }
}

impl CliConfig {
    /// Validate parameter ranges, naming the offending flag.
    pub fn validate(&self) -> Result<()> {
        if self.q == 0.0 || !self.q.is_finite() {
            return Err(Error::Parameter(format!("--q must be nonzero and finite, got {}", self.q)));
        }
        if self.n_sites == 0 {
            return Err(Error::Parameter("--sites must be at least 1".into()));
        }
        if self.tower_depth == 0 {
            return Err(Error::Parameter("--tower-depth must be at least 1".into()));
        }
        if self.times.is_empty() {
            return Err(Error::Parameter("--t needs at least one time".into()));
        }
        for &t in &self.times {
            if !t.is_finite() || t.abs() > MAX_ABS_TIME {
                return Err(Error::Parameter(format!(
                    "--t values must satisfy |t| <= {MAX_ABS_TIME}, got {t}"
                )));
            }
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Parameter(format!(
                "--tol must be positive and finite, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    /// The single-point grid this configuration describes.
    pub fn grid(&self) -> crate::report::Grid {
        crate::report::Grid::single(self.q, self.n_sites, self.times.clone(), self.tower_depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_documented_values() {
        let c = CliConfig::default();
        assert_eq!(c.q, 1.3);
        assert_eq!(c.n_sites, 2);
        assert_eq!(c.tower_depth, 3);
        assert_eq!(c.times, vec![0.1, 0.5, 1.0]);
        assert_eq!(c.tolerance, 1e-9);
        assert_eq!(c.suite, "all");
        assert!(c.validate().is_ok());
    }

    #[test]
    fn file_layer_parses_and_merges_under_flags() {
        let dir = std::env::temp_dir().join("qlax-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(
            &path,
            "# comment\nq = 0.7\nsites = 3\nt = 0.1, 0.2\nsuite = prop1\n",
        )
        .unwrap();
        let file = ConfigLayer::from_file(&path).unwrap();
        let flags = ConfigLayer { q: Some(1.3), ..ConfigLayer::default() };
        let merged = flags.over(file).finish();
        assert_eq!(merged.q, 1.3, "flag wins over file");
        assert_eq!(merged.n_sites, 3, "file wins over default");
        assert_eq!(merged.times, vec![0.1, 0.2]);
        assert_eq!(merged.suite, "prop1");
        assert_eq!(merged.tower_depth, 3, "default fills the rest");
    }

    #[test]
    fn file_errors_name_the_line() {
        let dir = std::env::temp_dir().join("qlax-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.conf");
        std::fs::write(&path, "q = not-a-number\n").unwrap();
        let err = ConfigLayer::from_file(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"));
        std::fs::write(&path, "mystery = 3\n").unwrap();
        let err = ConfigLayer::from_file(&path).unwrap_err();
        assert!(err.to_string().contains("unknown key"));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = CliConfig { q: 0.0, ..CliConfig::default() };
        assert!(c.validate().unwrap_err().to_string().contains("--q"));
        c.q = 1.3;
        c.times = vec![5.0];
        assert!(c.validate().unwrap_err().to_string().contains("--t"));
        c.times = vec![0.5];
        c.tolerance = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("--tol"));
    }
}
