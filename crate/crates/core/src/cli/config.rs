//! Flat `key = value` configuration files.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment that runs
//! to the end of the line; blank lines are ignored; a key may appear once.
//! List values are comma separated. `--set key=value` flags are applied on
//! top of the file and may replace keys it defines.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::linops::{c, DensityMatrix};

/// A configuration problem tied to a key (or to a file line).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let where_ = format!("line {}", index + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(&where_, format!("expected `key = value`, found `{line}`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::new(where_, "empty key"));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::new(key, format!("duplicate key on {where_}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                ConfigError::new("--set", format!("expected key=value, found `{item}`"))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::new("--set", "empty key"));
            }
            self.entries
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => parse_f64(key, &v),
        }
    }

    fn take_usize(&mut self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                ConfigError::new(key, format!("expected a nonnegative integer, found `{v}`"))
            }),
        }
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.take(key)
            .map(|v| {
                v.split(',')
                    .map(|item| parse_f64(key, item.trim()))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .transpose()
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(key) => Err(ConfigError::new(key, "unknown key")),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("expected a number, found `{value}`")))?;
    if !v.is_finite() {
        return Err(ConfigError::new(
            key,
            format!("value must be finite, found `{value}`"),
        ));
    }
    Ok(v)
}

fn require(key: &str, ok: bool, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(key, message))
    }
}

fn initial_state(rho11: f64, re: f64, im: f64) -> Result<DensityMatrix, ConfigError> {
    require(
        "rho11_0",
        (0.0..=1.0).contains(&rho11),
        "must lie in [0, 1]",
    )?;
    DensityMatrix::qubit(rho11, c(re, im)).map_err(|e| {
        ConfigError::new(
            "rho01_re/rho01_im",
            format!(
                "initial state is not a valid density matrix ({e}); need |rho01|² ≤ rho00·rho11"
            ),
        )
    })
}

fn grid_keys(t_max: f64, dt: f64) -> Result<(), ConfigError> {
    require("t_max", t_max > 0.0, "must be positive")?;
    require("dt", dt > 0.0, "must be positive")?;
    let ratio = t_max / dt;
    require(
        "dt",
        (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0),
        "must divide t_max",
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Convention {
    Local,
    Elb,
    Lp,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Self::Local => "local",
            Self::Elb => "elb",
            Self::Lp => "lp",
        }
    }
}

/// Parameters of a model run; defaults are the Fig.-1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub omega0: f64,
    pub alpha: f64,
    pub cutoff: f64,
    pub beta: f64,
    pub rho11_0: f64,
    pub rho01_re: f64,
    pub rho01_im: f64,
    pub t_max: f64,
    pub dt: f64,
    pub conventions: Vec<Convention>,
    pub cutoff_sweep: Option<Vec<f64>>,
    /// Optional `omega,J` table replacing the Ohmic density.
    pub spectral_file: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            alpha: 1.0,
            cutoff: 1.0,
            beta: 1.0,
            rho11_0: 0.75,
            rho01_re: 0.25,
            rho01_im: 0.0,
            t_max: 20.0,
            dt: 0.01,
            conventions: vec![Convention::Local, Convention::Elb, Convention::Lp],
            cutoff_sweep: None,
            spectral_file: None,
        }
    }
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 12] = [
        "omega0",
        "alpha",
        "cutoff",
        "beta",
        "rho11_0",
        "rho01_re",
        "rho01_im",
        "t_max",
        "dt",
        "conventions",
        "cutoff_sweep",
        "spectral_file",
    ];

    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, ConfigError> {
        let d = Self::default();
        let conventions = match kv.take("conventions") {
            None => d.conventions.clone(),
            Some(v) => {
                let mut list = Vec::new();
                for item in v.split(',').map(str::trim) {
                    let conv = match item {
                        "local" => Convention::Local,
                        "elb" => Convention::Elb,
                        "lp" => Convention::Lp,
                        other => {
                            return Err(ConfigError::new(
                                "conventions",
                                format!("unknown convention `{other}` (expected local, elb, lp)"),
                            ))
                        }
                    };
                    if !list.contains(&conv) {
                        list.push(conv);
                    }
                }
                list.sort();
                list
            }
        };
        let cfg = Self {
            omega0: kv.take_f64("omega0", d.omega0)?,
            alpha: kv.take_f64("alpha", d.alpha)?,
            cutoff: kv.take_f64("cutoff", d.cutoff)?,
            beta: kv.take_f64("beta", d.beta)?,
            rho11_0: kv.take_f64("rho11_0", d.rho11_0)?,
            rho01_re: kv.take_f64("rho01_re", d.rho01_re)?,
            rho01_im: kv.take_f64("rho01_im", d.rho01_im)?,
            t_max: kv.take_f64("t_max", d.t_max)?,
            dt: kv.take_f64("dt", d.dt)?,
            conventions,
            cutoff_sweep: kv.take_list("cutoff_sweep")?,
            spectral_file: kv.take("spectral_file").map(PathBuf::from),
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require("alpha", self.alpha >= 0.0, "must be nonnegative")?;
        require("cutoff", self.cutoff > 0.0, "must be positive")?;
        require("beta", self.beta > 0.0, "must be positive")?;
        require(
            "conventions",
            !self.conventions.is_empty(),
            "must name at least one convention",
        )?;
        if let Some(sweep) = &self.cutoff_sweep {
            require("cutoff_sweep", !sweep.is_empty(), "must not be empty")?;
            require(
                "cutoff_sweep",
                sweep.iter().all(|w| *w > 0.0),
                "values must be positive",
            )?;
        }
        grid_keys(self.t_max, self.dt)?;
        self.initial_state().map(|_| ())
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, ConfigError> {
        initial_state(self.rho11_0, self.rho01_re, self.rho01_im)
    }

    /// `key = value` lines describing this configuration.
    pub fn describe(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut lines = vec![
            format!("omega0 = {}", self.omega0),
            format!("alpha = {}", self.alpha),
            format!("cutoff = {}", self.cutoff),
            format!("beta = {}", self.beta),
            format!("rho11_0 = {}", self.rho11_0),
            format!("rho01_re = {}", self.rho01_re),
            format!("rho01_im = {}", self.rho01_im),
            format!("t_max = {}", self.t_max),
            format!("dt = {}", self.dt),
            format!(
                "conventions = {}",
                self.conventions
                    .iter()
                    .map(|c| c.name())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        ];
        if let Some(sweep) = &self.cutoff_sweep {
            lines.push(format!("cutoff_sweep = {}", list(sweep)));
        }
        if let Some(path) = &self.spectral_file {
            lines.push(format!("spectral_file = {}", path.display()));
        }
        lines
    }
}

/// Parameters of a finite-bath comparison run.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub omega0: f64,
    pub beta: f64,
    pub rho11_0: f64,
    pub rho01_re: f64,
    pub rho01_im: f64,
    pub n_max: usize,
    pub bath_omegas: Vec<f64>,
    pub bath_couplings: Vec<f64>,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            beta: 2.0,
            rho11_0: 0.75,
            rho01_re: 0.25,
            rho01_im: 0.0,
            n_max: 8,
            bath_omegas: vec![1.5, 2.5],
            bath_couplings: vec![0.2, 0.25],
            t_max: 10.0,
            dt: 0.5,
        }
    }
}

impl OracleConfig {
    pub fn from_key_values(mut kv: KeyValues) -> Result<Self, ConfigError> {
        let d = Self::default();
        let cfg = Self {
            omega0: kv.take_f64("omega0", d.omega0)?,
            beta: kv.take_f64("beta", d.beta)?,
            rho11_0: kv.take_f64("rho11_0", d.rho11_0)?,
            rho01_re: kv.take_f64("rho01_re", d.rho01_re)?,
            rho01_im: kv.take_f64("rho01_im", d.rho01_im)?,
            n_max: kv.take_usize("n_max", d.n_max)?,
            bath_omegas: kv.take_list("bath_omegas")?.unwrap_or(d.bath_omegas),
            bath_couplings: kv.take_list("bath_couplings")?.unwrap_or(d.bath_couplings),
            t_max: kv.take_f64("t_max", d.t_max)?,
            dt: kv.take_f64("dt", d.dt)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require("beta", self.beta > 0.0, "must be positive")?;
        require(
            "bath_couplings",
            self.bath_couplings.len() == self.bath_omegas.len(),
            "needs one coupling per entry of bath_omegas",
        )?;
        require(
            "bath_omegas",
            !self.bath_omegas.is_empty(),
            "must list at least one mode",
        )?;
        grid_keys(self.t_max, self.dt)?;
        self.initial_state().map(|_| ())
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, ConfigError> {
        initial_state(self.rho11_0, self.rho01_re, self.rho01_im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_comments() {
        let kv = KeyValues::parse("# header\nalpha = 0.5 # weak\n\n beta=2\n").unwrap();
        let cfg = ScenarioConfig::from_key_values(kv).unwrap();
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.beta, 2.0);
        assert_eq!(cfg.omega0, 1.0);
    }

    #[test]
    fn overrides_win() {
        let mut kv = KeyValues::parse("alpha = 0.5").unwrap();
        kv.apply_overrides(&["alpha=0.25".into(), "cutoff_sweep=1, 3".into()])
            .unwrap();
        let cfg = ScenarioConfig::from_key_values(kv).unwrap();
        assert_eq!(cfg.alpha, 0.25);
        assert_eq!(cfg.cutoff_sweep, Some(vec![1.0, 3.0]));
    }

    #[test]
    fn field_level_errors() {
        let err =
            ScenarioConfig::from_key_values(KeyValues::parse("alpha = x").unwrap()).unwrap_err();
        assert_eq!(err.key, "alpha");
        let err =
            ScenarioConfig::from_key_values(KeyValues::parse("gamma = 1").unwrap()).unwrap_err();
        assert_eq!(
            (err.key.as_str(), err.message.as_str()),
            ("gamma", "unknown key")
        );
        let err = ScenarioConfig::from_key_values(KeyValues::parse("rho11_0 = 1.5").unwrap())
            .unwrap_err();
        assert_eq!(err.key, "rho11_0");
        let err = ScenarioConfig::from_key_values(KeyValues::parse("rho01_re = 0.9").unwrap())
            .unwrap_err();
        assert!(err.key.contains("rho01"));
        let err =
            ScenarioConfig::from_key_values(KeyValues::parse("dt = 0.3").unwrap()).unwrap_err();
        assert_eq!(err.key, "dt");
        let err = KeyValues::parse("a = 1\na = 2").unwrap_err();
        assert_eq!(err.key, "a");
        assert!(KeyValues::parse("novalue").is_err());
    }

    #[test]
    fn conventions_are_parsed() {
        let kv = KeyValues::parse("conventions = lp, local").unwrap();
        let cfg = ScenarioConfig::from_key_values(kv).unwrap();
        assert_eq!(cfg.conventions, vec![Convention::Local, Convention::Lp]);
        let kv = KeyValues::parse("conventions = global").unwrap();
        assert!(ScenarioConfig::from_key_values(kv).is_err());
    }

    #[test]
    fn oracle_defaults_and_lengths() {
        let cfg = OracleConfig::from_key_values(KeyValues::default()).unwrap();
        assert_eq!(cfg, OracleConfig::default());
        let kv = KeyValues::parse("bath_omegas = 1, 2, 3").unwrap();
        assert_eq!(
            OracleConfig::from_key_values(kv).unwrap_err().key,
            "bath_couplings"
        );
    }
}
