//! `key = value` experiment files.
//!
//! ```text
//! # comment
//! [experiment]
//! experiment = rof-ball
//! [parameters]
//! R = 1.0
//! [grid]
//! alpha_min = 1e-4
//! ```
//!
//! Sections only group keys; every key is global. Unknown keys and
//! sections are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const SECTIONS: &[&str] = &["experiment", "parameters", "grid", "solver", "output"];

pub const KEYS: &[&str] = &[
    "experiment",
    "R",
    "R_star",
    "n",
    "support",
    "mu",
    "nu",
    "alpha_min",
    "alpha_max",
    "alpha_points",
    "delta_min",
    "delta_max",
    "delta_points",
    "seed",
    "tol",
    "replicates",
    "max_iter",
    "out",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Quadratic,
    RofBall,
    RofSquare,
    L1Sparse,
    L1Dense,
    Singular,
    Identities,
    Conjugates,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Quadratic,
        ExperimentKind::RofBall,
        ExperimentKind::RofSquare,
        ExperimentKind::L1Sparse,
        ExperimentKind::L1Dense,
        ExperimentKind::Singular,
        ExperimentKind::Identities,
        ExperimentKind::Conjugates,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Quadratic => "quadratic",
            ExperimentKind::RofBall => "rof-ball",
            ExperimentKind::RofSquare => "rof-square",
            ExperimentKind::L1Sparse => "l1-sparse",
            ExperimentKind::L1Dense => "l1-dense",
            ExperimentKind::Singular => "singular",
            ExperimentKind::Identities => "identities",
            ExperimentKind::Conjugates => "conjugates",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: malformed section header", lineno + 1)))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", lineno + 1)));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            insert(&mut values, key.trim(), value.trim())?;
        }
        let experiment = values
            .get("experiment")
            .ok_or_else(|| Error::Config("missing key 'experiment'".into()))?
            .parse()?;
        let cfg = Self { experiment, values };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) =
            spec.split_once('=').ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        if key == "experiment" {
            self.experiment = value.parse()?;
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.apply_override(&format!("{key}={value}"))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::Config(format!("{key} = '{s}' is not a number"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::Config(format!("{key} = '{s}' is not a nonnegative integer"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| Error::Config(format!("{key} = '{s}' is not a nonnegative integer"))),
        }
    }

    pub fn positive_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64_or(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{key} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn validate(&self) -> Result<()> {
        for key in ["R", "R_star", "mu", "nu", "alpha_min", "alpha_max", "tol"] {
            self.positive_or(key, 1.0)?;
        }
        for key in ["delta_min", "delta_max"] {
            let v = self.f64_or(key, 1.0)?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{key} must be nonnegative, got {v}")));
            }
        }
        for key in ["n", "support", "alpha_points", "replicates", "max_iter"] {
            if self.usize_or(key, 1)? == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        self.usize_or("delta_points", 0)?;
        self.u64_or("seed", 0)?;
        if self.f64_or("alpha_min", 1e-4)? > self.f64_or("alpha_max", 1e-1)? {
            return Err(Error::Config("alpha_min exceeds alpha_max".into()));
        }
        if self.f64_or("delta_min", 1e-4)? > self.f64_or("delta_max", 1e-1)? {
            return Err(Error::Config("delta_min exceeds delta_max".into()));
        }
        Ok(())
    }
}

fn insert(values: &mut BTreeMap<String, String>, key: &str, value: &str) -> Result<()> {
    if !KEYS.contains(&key) {
        return Err(Error::Config(format!("unknown key '{key}'")));
    }
    if value.is_empty() {
        return Err(Error::Config(format!("key '{key}' has no value")));
    }
    values.insert(key.to_string(), value.to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# ball\n[experiment]\nexperiment = rof-ball\n[parameters]\nR = 2.0 # radius\n[grid]\nalpha_points = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::RofBall);
        assert_eq!(cfg.f64_or("R", 1.0).unwrap(), 2.0);
        assert_eq!(cfg.usize_or("alpha_points", 12).unwrap(), 4);
        assert_eq!(cfg.f64_or("R_star", 1.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("experiment = rof-ball\ncolour = red\n").is_err());
        assert!(ExperimentConfig::parse("[plots]\nexperiment = rof-ball\n").is_err());
        assert!(ExperimentConfig::parse("R = 1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = nope\n").is_err());
        assert!(ExperimentConfig::parse("experiment = rof-ball\nR = -1\n").is_err());
        assert!(ExperimentConfig::parse("experiment = rof-ball\nR\n").is_err());
        assert!(ExperimentConfig::parse("experiment = rof-ball\nalpha_min = 1\nalpha_max = 0.1\n").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::parse("experiment = quadratic\n").unwrap();
        cfg.apply_override("n=10").unwrap();
        assert_eq!(cfg.usize_or("n", 50).unwrap(), 10);
        assert!(cfg.apply_override("bogus=1").is_err());
        assert!(cfg.apply_override("n").is_err());
        cfg.apply_override("experiment=singular").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Singular);
    }
}
