use crate::error::{CliError, CliResult};
use nahm_core::nahm::Solver;
use nahm_core::spectral::MonopoleConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SGrid {
    pub fn single(s: f64) -> Self {
        SGrid { start: s, stop: s, count: 1, spacing: Spacing::Linear }
    }

    /// Parses `a:b:k`.
    pub fn parse(text: &str) -> CliResult<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Config(format!("s-grid must look like start:stop:count, got {text:?}")));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad number {t:?} in s-grid")));
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("bad count {:?} in s-grid", parts[2])))?;
        Ok(SGrid { start: num(parts[0])?, stop: num(parts[1])?, count, spacing: Spacing::Linear })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.count < 1 {
            return Err(CliError::Config("s_grid.count must be at least 1".into()));
        }
        if !(self.start > 0.0) || !self.start.is_finite() {
            return Err(CliError::Config(format!("s_grid.start must be positive, got {}", self.start)));
        }
        if !self.stop.is_finite() || self.stop < self.start {
            return Err(CliError::Config(format!("s_grid.stop must be finite and at least start, got {}", self.stop)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let k = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / k;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }
}

impl Default for SGrid {
    fn default() -> Self {
        SGrid { start: 0.5, stop: 5.0, count: 10, spacing: Spacing::Linear }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub nahm: f64,
    pub lax: f64,
    pub reality: f64,
    pub gram: f64,
    pub spread: f64,
    pub spectrum: f64,
    pub degree: f64,
    pub solver: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            nahm: 1e-6,
            lax: 1e-6,
            reality: 1e-9,
            gram: 1e-10,
            spread: 1e-9,
            spectrum: 1e-8,
            degree: 1e-8,
            solver: 1e-8,
            oracle: 1e-9,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> CliResult<()> {
        let all = [
            ("nahm", self.nahm),
            ("lax", self.lax),
            ("reality", self.reality),
            ("gram", self.gram),
            ("spread", self.spread),
            ("spectrum", self.spectrum),
            ("degree", self.degree),
            ("solver", self.solver),
            ("oracle", self.oracle),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CliError::Config(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Direct,
    Lagrange,
    Both,
}

impl SolverChoice {
    pub fn primary(self) -> Solver {
        match self {
            SolverChoice::Lagrange => Solver::Lagrange,
            _ => Solver::Direct,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    #[default]
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub s_grid: SGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub precision: Precision,
    /// Evaluate the s-grid on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
    /// Record wall time per record. Off by default so output is reproducible.
    #[serde(default)]
    pub timing: bool,
    /// Central-difference step; defaults to `1e-5·max(1, s)`.
    #[serde(default)]
    pub fd_step: Option<f64>,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<MonopoleConfig> {
        self.s_grid.validate()?;
        self.tolerances.validate()?;
        if let Some(h) = self.fd_step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(CliError::Config(format!("fd_step must be positive, got {h}")));
            }
        }
        Ok(MonopoleConfig::new(self.points.clone())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = SGrid::parse("0.5:2:4").unwrap();
        assert_eq!(g.values(), vec![0.5, 1.0, 1.5, 2.0]);
        assert!(SGrid::parse("1:2").is_err());
        assert!(SGrid::parse("0:2:3").unwrap().validate().is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = SGrid { start: 0.1, stop: 10.0, count: 3, spacing: Spacing::Log };
        let v = g.values();
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!((v[2] - 10.0).abs() < 1e-13);
    }

    #[test]
    fn minimal_config() {
        let cfg: RunConfig = serde_json::from_str(r#"{"points": [[1,0,0],[-1,0,0]]}"#).unwrap();
        assert_eq!(cfg.solver, SolverChoice::Direct);
        assert_eq!(cfg.precision, Precision::Extended);
        cfg.validate().unwrap();
        let bad: Result<RunConfig, _> = serde_json::from_str(r#"{"points": [], "typo": 1}"#);
        assert!(bad.is_err());
    }
}
