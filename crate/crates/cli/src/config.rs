use std::collections::BTreeMap;
use std::path::Path;

use futaki_core::deligne_norms::{WeightVariant, THEOREM5_REL_TOL, THEOREM6_REL_TOL};
use futaki_core::poly_core::Convention;
use futaki_core::variety_numerics::Quadrature;

use crate::error::{CliError, CliResult};

/// Fewest samples a `verify` suite accepts.
pub const MIN_VERIFY_SAMPLES: usize = 1000;

/// Run settings from a flat `key=value` file, overridden by command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub samples: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub richardson: bool,
    pub cond_limit: f64,
    pub reject_limit: f64,
    pub workers: Option<usize>,
    /// Explicit choice; otherwise taken from the calibration file.
    pub convention: Option<Convention>,
    pub variant: Option<WeightVariant>,
    pub theorem5_rel_tol: f64,
    pub theorem6_rel_tol: f64,
    /// Largest accepted `stderr / D` in the volume suite.
    pub volume_rel_stderr: f64,
    pub ricci_rel_tol: f64,
    pub ricci_abs_tol: f64,
    pub adjunction_rel_tol: f64,
    pub futaki_ratio_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let q = Quadrature::default();
        Self {
            samples: q.samples,
            seed: q.seed,
            fd_step: q.fd_step,
            richardson: q.richardson,
            cond_limit: q.cond_limit,
            reject_limit: q.reject_limit,
            workers: None,
            convention: None,
            variant: None,
            theorem5_rel_tol: THEOREM5_REL_TOL,
            theorem6_rel_tol: THEOREM6_REL_TOL,
            volume_rel_stderr: 0.01,
            ricci_rel_tol: 0.02,
            ricci_abs_tol: 0.03,
            adjunction_rel_tol: 1e-5,
            futaki_ratio_tol: 0.05,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse().map_err(|_| CliError::Input(format!("config: bad value `{v}` for `{key}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), i + 1).is_some() {
                return Err(CliError::Input(format!("config line {}: duplicate key `{k}`", i + 1)));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        match key {
            "samples" => self.samples = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "fd_step" => self.fd_step = parse_value(key, v)?,
            "richardson" => self.richardson = parse_value(key, v)?,
            "cond_limit" => self.cond_limit = parse_value(key, v)?,
            "reject_limit" => self.reject_limit = parse_value(key, v)?,
            "workers" => self.workers = Some(parse_value(key, v)?),
            "convention" => {
                self.convention = Some(
                    Convention::from_name(v)
                        .ok_or_else(|| CliError::Input(format!("config: unknown convention `{v}`")))?,
                )
            }
            "variant" => {
                self.variant = Some(
                    WeightVariant::from_name(v)
                        .ok_or_else(|| CliError::Input(format!("config: unknown variant `{v}`")))?,
                )
            }
            "theorem5_rel_tol" => self.theorem5_rel_tol = parse_value(key, v)?,
            "theorem6_rel_tol" => self.theorem6_rel_tol = parse_value(key, v)?,
            "volume_rel_stderr" => self.volume_rel_stderr = parse_value(key, v)?,
            "ricci_rel_tol" => self.ricci_rel_tol = parse_value(key, v)?,
            "ricci_abs_tol" => self.ricci_abs_tol = parse_value(key, v)?,
            "adjunction_rel_tol" => self.adjunction_rel_tol = parse_value(key, v)?,
            "futaki_ratio_tol" => self.futaki_ratio_tol = parse_value(key, v)?,
            _ => return Err(CliError::Input(format!("config: unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn quadrature(&self) -> CliResult<Quadrature> {
        let q = Quadrature {
            samples: self.samples,
            seed: self.seed,
            fd_step: self.fd_step,
            richardson: self.richardson,
            cond_limit: self.cond_limit,
            reject_limit: self.reject_limit,
            workers: self.workers,
        };
        q.validate()?;
        Ok(q)
    }

    /// Echo of every key, in the config file syntax.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("samples={}", self.samples),
            format!("seed={}", self.seed),
            format!("fd_step={:e}", self.fd_step),
            format!("richardson={}", self.richardson),
            format!("cond_limit={:e}", self.cond_limit),
            format!("reject_limit={}", self.reject_limit),
        ];
        if let Some(w) = self.workers {
            lines.push(format!("workers={w}"));
        }
        if let Some(c) = self.convention {
            lines.push(format!("convention={}", c.name()));
        }
        if let Some(v) = self.variant {
            lines.push(format!("variant={}", v.name()));
        }
        lines.extend([
            format!("theorem5_rel_tol={}", self.theorem5_rel_tol),
            format!("theorem6_rel_tol={}", self.theorem6_rel_tol),
            format!("volume_rel_stderr={}", self.volume_rel_stderr),
            format!("ricci_rel_tol={}", self.ricci_rel_tol),
            format!("ricci_abs_tol={}", self.ricci_abs_tol),
            format!("adjunction_rel_tol={:e}", self.adjunction_rel_tol),
            format!("futaki_ratio_tol={}", self.futaki_ratio_tol),
        ]);
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "samples=5000\nseed=7\n# comment\nworkers = 2\nconvention=ComposeInverse\nvariant=derivation\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.samples, 5000);
        assert_eq!(cfg.workers, Some(2));
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(RunConfig::parse("bogus=1"), Err(CliError::Input(_))));
        assert!(matches!(RunConfig::parse("seed=1\nseed=2"), Err(CliError::Input(_))));
        assert!(matches!(RunConfig::parse("samples=many"), Err(CliError::Input(_))));
    }
}
