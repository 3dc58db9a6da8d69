//! Flat key = value configuration with [section] headers, no nesting.
//! Every knob has a default and every flag can override the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;
use fracheat_core::nonlocal::ExteriorRegion;
use fracheat_core::spectral::FracOrder;

/// Initial datum selector.
#[derive(Debug, Clone, PartialEq)]
pub enum DatumSpec {
    /// Basis mode k.
    Phi(usize),
    /// Explicit coefficients.
    Coeffs(Vec<f64>),
    /// Unit-normalized pseudorandom coefficients from the run seed.
    Random,
}

impl DatumSpec {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let text = text.trim();
        if text == "random" {
            return Ok(DatumSpec::Random);
        }
        if let Some(k) = text.strip_prefix("phi:") {
            let k: usize = k
                .parse()
                .map_err(|_| CliError::config(format!("bad mode index in `{text}`")))?;
            if k == 0 {
                return Err(CliError::config("mode indices start at 1".into()));
            }
            return Ok(DatumSpec::Phi(k));
        }
        if let Some(list) = text.strip_prefix("coeffs:") {
            let coeffs: Result<Vec<f64>, _> =
                list.split(',').map(|v| v.trim().parse::<f64>()).collect();
            return coeffs
                .map(DatumSpec::Coeffs)
                .map_err(|_| CliError::config(format!("bad coefficient list in `{text}`")));
        }
        Err(CliError::config(format!(
            "initial datum must be `phi:K`, `coeffs:a,b,...` or `random`, got `{text}`"
        )))
    }

    pub fn realize(&self, n_modes: usize, seed: u64) -> Result<Vec<f64>, CliError> {
        match self {
            DatumSpec::Phi(k) => {
                if *k > n_modes {
                    return Err(CliError::config(format!(
                        "mode {k} exceeds the configured mode count {n_modes}"
                    )));
                }
                let mut c = vec![0.0; n_modes];
                c[k - 1] = 1.0;
                Ok(c)
            }
            DatumSpec::Coeffs(c) => {
                if c.len() > n_modes {
                    return Err(CliError::config(format!(
                        "{} coefficients exceed the configured mode count {n_modes}",
                        c.len()
                    )));
                }
                let mut out = c.clone();
                out.resize(n_modes, 0.0);
                Ok(out)
            }
            DatumSpec::Random => {
                use rand::Rng;
                use rand_chacha::rand_core::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let mut c: Vec<f64> = (0..n_modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    c[0] = 1.0;
                } else {
                    c.iter_mut().for_each(|v| *v /= norm);
                }
                Ok(c)
            }
        }
    }
}

/// Control configured for the plain forward solve.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveControl {
    None,
    /// Spatially constant profile on the region, constant in time.
    Constant(f64),
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub s: f64,
    pub horizon: f64,
    pub grid: usize,
    pub modes: usize,
    pub region: ExteriorRegion,
    pub epsilon: Option<f64>,
    pub u0: DatumSpec,
    pub psi0: DatumSpec,
    pub seed: u64,
    pub muntz_n_max: usize,
    pub eigen_residual_tol: f64,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub trace_points: usize,
    pub t_samples: usize,
    pub dual_t: f64,
    pub solve_control: SolveControl,
    pub profile_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            s: 0.75,
            horizon: fracheat_core::defaults::HORIZON,
            grid: fracheat_core::defaults::GRID,
            modes: fracheat_core::defaults::MODES,
            region: ExteriorRegion::interval(1.5, 2.5).expect("default region is valid"),
            epsilon: None,
            u0: DatumSpec::Phi(1),
            psi0: DatumSpec::Phi(1),
            seed: 0,
            muntz_n_max: 10_000,
            eigen_residual_tol: fracheat_core::defaults::EIGEN_RESIDUAL_TOL,
            out_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from("cache"),
            trace_points: 200,
            t_samples: 11,
            dual_t: 0.5,
            solve_control: SolveControl::None,
            profile_points: 0,
        }
    }
}

/// Parses the flat `key = value` format with `[section]` headers.
/// Returns (section.key -> value) with keys lowercased.
fn parse_flat(text: &str, path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].trim().to_lowercase();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            ))
        })?;
        let full = if section.is_empty() {
            key.trim().to_lowercase()
        } else {
            format!("{section}.{}", key.trim().to_lowercase())
        };
        map.insert(full, value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        let map = parse_flat(&text, path)?;
        let mut cfg = RunConfig::default();
        for (key, value) in &map {
            cfg.apply(key, value)?;
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let parse_f64 = |v: &str| -> Result<f64, CliError> {
            v.parse()
                .map_err(|_| CliError::config(format!("bad number `{v}` for `{key}`")))
        };
        let parse_usize = |v: &str| -> Result<usize, CliError> {
            v.parse()
                .map_err(|_| CliError::config(format!("bad integer `{v}` for `{key}`")))
        };
        match key {
            "problem.s" => self.s = parse_f64(value)?,
            "problem.horizon" => self.horizon = parse_f64(value)?,
            "problem.grid" => self.grid = parse_usize(value)?,
            "problem.modes" => self.modes = parse_usize(value)?,
            "problem.region" => {
                self.region = ExteriorRegion::parse(value)
                    .map_err(|e| CliError::config(e.to_string()))?;
            }
            "control.epsilon" => {
                self.epsilon = if value == "auto" {
                    None
                } else {
                    Some(parse_f64(value)?)
                };
            }
            "control.u0" => self.u0 = DatumSpec::parse(value)?,
            "control.seed" => self.seed = parse_usize(value)? as u64,
            "muntz.n_max" => self.muntz_n_max = parse_usize(value)?,
            "tolerances.eigen_residual" => self.eigen_residual_tol = parse_f64(value)?,
            "output.out_dir" => self.out_dir = PathBuf::from(value),
            "output.cache_dir" => self.cache_dir = PathBuf::from(value),
            "output.trace_points" => self.trace_points = parse_usize(value)?,
            "output.profile_points" => self.profile_points = parse_usize(value)?,
            "solve.t_samples" => self.t_samples = parse_usize(value)?,
            "solve.control" => {
                self.solve_control = if value == "none" {
                    SolveControl::None
                } else if let Some(a) = value.strip_prefix("constant:") {
                    SolveControl::Constant(parse_f64(a)?)
                } else {
                    return Err(CliError::config(format!(
                        "solve control must be `none` or `constant:AMPLITUDE`, got `{value}`"
                    )));
                };
            }
            "dual.psi0" => self.psi0 = DatumSpec::parse(value)?,
            "dual.t" => self.dual_t = parse_f64(value)?,
            _ => {
                return Err(CliError::config(format!("unknown configuration key `{key}`")));
            }
        }
        Ok(())
    }

    /// Validates every parameter domain before any computation starts.
    pub fn validate(&self) -> Result<FracOrder, CliError> {
        let s = FracOrder::new(self.s).map_err(|e| CliError::config(e.to_string()))?;
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(CliError::config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.grid < 4 {
            return Err(CliError::config(format!(
                "grid must have at least 4 cells, got {}",
                self.grid
            )));
        }
        if self.modes == 0 || self.modes >= self.grid {
            return Err(CliError::config(format!(
                "mode count {} must satisfy 1 <= modes < grid",
                self.modes
            )));
        }
        if self.muntz_n_max < 10 {
            return Err(CliError::config("muntz n_max must be at least 10".into()));
        }
        if self.t_samples < 2 {
            return Err(CliError::config("need at least 2 time samples".into()));
        }
        if !(self.dual_t >= 0.0 && self.dual_t < self.horizon) {
            return Err(CliError::config(format!(
                "dual sample time {} must lie in [0, T)",
                self.dual_t
            )));
        }
        if self.trace_points == 0 {
            return Err(CliError::config("trace_points must be positive".into()));
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_overrides() {
        let dir = std::env::temp_dir().join("fracheat-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(
            &path,
            "# comment\n[problem]\ns = 0.6\ngrid = 128\nregion = 1.5:2.5,3:4\n\n[control]\nu0 = coeffs:1,0,0.5\nepsilon = 1e-9\n",
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(cfg.s, 0.6);
        assert_eq!(cfg.grid, 128);
        assert_eq!(cfg.region.intervals().len(), 2);
        assert_eq!(cfg.epsilon, Some(1e-9));
        assert_eq!(cfg.u0, DatumSpec::Coeffs(vec![1.0, 0.0, 0.5]));
        assert!(cfg.validate().is_ok());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_domains() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply("problem.wat", "1").is_err());
        assert!(cfg.apply("problem.s", "1.2").is_ok());
        assert!(cfg.validate().is_err(), "s = 1.2 must fail validation");
        let mut cfg = RunConfig::default();
        cfg.apply("problem.modes", "600").unwrap();
        assert!(cfg.validate().is_err(), "modes >= grid must fail");
    }

    #[test]
    fn datum_specs() {
        assert_eq!(DatumSpec::parse("phi:3").unwrap(), DatumSpec::Phi(3));
        assert!(DatumSpec::parse("phi:0").is_err());
        assert_eq!(DatumSpec::parse("random").unwrap(), DatumSpec::Random);
        let r1 = DatumSpec::Random.realize(8, 42).unwrap();
        let r2 = DatumSpec::Random.realize(8, 42).unwrap();
        assert_eq!(r1, r2, "seeded data must be reproducible");
        let n = r1.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }
}
