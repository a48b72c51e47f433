//! Run configuration: flat key=value files with command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use pfrac_core::bench::{KappaMode, ProblemKind, ProblemOptions};
use pfrac_core::staggered::StaggeredConfig;

/// A fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub refinement: u32,
    pub l_u: f64,
    pub l_phi: f64,
    /// Penalization parameter; per-problem default when absent.
    pub gamma: Option<f64>,
    pub kappa: Option<KappaMode>,
    pub eps_factor: f64,
    pub delta_t: Option<f64>,
    pub n_steps: Option<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub lfi: Option<usize>,
    pub output_dir: PathBuf,
    /// Write field snapshots every this many steps; 0 disables VTK output.
    pub vtk_every: usize,
    /// Accepted for schema compatibility; the solver is single-threaded and
    /// deterministic either way.
    pub deterministic: bool,
}

impl RunConfig {
    pub fn problem_options(&self) -> ProblemOptions {
        ProblemOptions {
            l_u: self.l_u,
            l_phi: self.l_phi,
            gamma: self.gamma,
            kappa: self.kappa,
            eps_factor: self.eps_factor,
            delta_t: self.delta_t,
            n_steps: self.n_steps,
        }
    }

    pub fn staggered_config(&self) -> StaggeredConfig {
        StaggeredConfig {
            tol: self.tol,
            max_iters: self.max_iters,
            lfi: self.lfi,
            ..StaggeredConfig::default()
        }
    }

    /// Output directory, honoring the PFRAC_OUTPUT_ROOT override for
    /// relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if self.output_dir.is_relative() {
            if let Ok(root) = std::env::var("PFRAC_OUTPUT_ROOT") {
                return Path::new(&root).join(&self.output_dir);
            }
        }
        self.output_dir.clone()
    }
}

/// Partially specified configuration; file values and flag overrides merge
/// before finalizing.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    pub problem: Option<ProblemKind>,
    pub refinement: Option<u32>,
    pub l_u: Option<f64>,
    pub l_phi: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub kappa_mode: Option<String>,
    pub eps_factor: Option<f64>,
    pub delta_t: Option<f64>,
    pub n_steps: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub lfi: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub vtk_every: Option<usize>,
    pub deterministic: Option<bool>,
}

pub fn parse_problem(s: &str) -> Result<ProblemKind> {
    match s {
        "tension" => Ok(ProblemKind::Tension),
        "shear" => Ok(ProblemKind::Shear),
        "lshape" => Ok(ProblemKind::LShape),
        other => bail!("unknown problem `{other}` (expected tension, shear, or lshape)"),
    }
}

impl RawConfig {
    /// Parses a flat key=value file; `#` starts a comment, unknown keys are
    /// rejected by name.
    pub fn parse_file(path: &Path) -> Result<RawConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut cfg = RawConfig::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", idx + 1))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)
                .with_context(|| format!("line {}", idx + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::error::Error + Send + Sync + 'static,
        {
            value
                .parse::<T>()
                .with_context(|| format!("key `{key}`: invalid value `{value}`"))
        }
        match key {
            "problem" => self.problem = Some(parse_problem(value)?),
            "refinement" => self.refinement = Some(num(key, value)?),
            "l_u" => self.l_u = Some(num(key, value)?),
            "l_phi" => self.l_phi = Some(num(key, value)?),
            "gamma" => self.gamma = Some(num(key, value)?),
            "kappa" => self.kappa = Some(num(key, value)?),
            "kappa_mode" => match value {
                "absolute" | "h_scaled" => self.kappa_mode = Some(value.to_string()),
                other => bail!("key `kappa_mode`: expected absolute or h_scaled, got `{other}`"),
            },
            "eps_factor" => self.eps_factor = Some(num(key, value)?),
            "delta_t" => self.delta_t = Some(num(key, value)?),
            "n_steps" => self.n_steps = Some(num(key, value)?),
            "tol" => self.tol = Some(num(key, value)?),
            "max_iters" => self.max_iters = Some(num(key, value)?),
            "lfi" => self.lfi = Some(num(key, value)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "vtk_every" => self.vtk_every = Some(num(key, value)?),
            "deterministic" => self.deterministic = Some(num(key, value)?),
            other => bail!("unknown key `{other}`"),
        }
        Ok(())
    }

    /// Overlays `over` on top of `self` (later wins).
    pub fn merged_with(mut self, over: RawConfig) -> RawConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            problem, refinement, l_u, l_phi, gamma, kappa, kappa_mode, eps_factor, delta_t,
            n_steps, tol, max_iters, lfi, output_dir, vtk_every, deterministic
        );
        self
    }

    pub fn finalize(self) -> Result<RunConfig> {
        let problem = self.problem.ok_or_else(|| anyhow!("missing required key `problem`"))?;
        let refinement = self
            .refinement
            .ok_or_else(|| anyhow!("missing required key `refinement`"))?;
        let kappa = match (self.kappa_mode.as_deref(), self.kappa) {
            (None, None) => None,
            (None, Some(v)) | (Some("absolute"), Some(v)) => Some(KappaMode::Absolute(v)),
            (Some("h_scaled"), Some(v)) => Some(KappaMode::HScaled(v)),
            (Some("absolute"), None) => Some(KappaMode::Absolute(1e-10)),
            (Some("h_scaled"), None) => Some(KappaMode::HScaled(1e-10)),
            (Some(other), _) => bail!("unknown kappa_mode `{other}`"),
        };
        let cfg = RunConfig {
            problem,
            refinement,
            l_u: self.l_u.unwrap_or(1e-6),
            l_phi: self.l_phi.unwrap_or(1e-6),
            gamma: self.gamma,
            kappa,
            eps_factor: self.eps_factor.unwrap_or(2.0),
            delta_t: self.delta_t,
            n_steps: self.n_steps,
            tol: self.tol.unwrap_or(1e-6),
            max_iters: self.max_iters.unwrap_or(500),
            lfi: self.lfi,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("output")),
            vtk_every: self.vtk_every.unwrap_or(0),
            deterministic: self.deterministic.unwrap_or(true),
        };
        if !cfg.eps_factor.is_finite() || cfg.eps_factor <= 0.0 {
            bail!("eps_factor must be positive and finite");
        }
        for (name, v) in [("l_u", cfg.l_u), ("l_phi", cfg.l_phi), ("tol", cfg.tol)] {
            if !v.is_finite() {
                bail!("{name} must be finite");
            }
        }
        if let Some(l) = cfg.lfi {
            if l == 0 {
                bail!("lfi must be at least 1");
            }
        }
        Ok(cfg)
    }
}

/// Loads an optional file and applies overrides.
pub fn parse_config(file: Option<&Path>, overrides: RawConfig) -> Result<RunConfig> {
    let base = match file {
        Some(path) => RawConfig::parse_file(path)?,
        None => RawConfig::default(),
    };
    base.merged_with(overrides).finalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_file_fills_defaults() {
        let f = write_tmp("problem = tension\nrefinement = 4\n");
        let cfg = parse_config(Some(f.path()), RawConfig::default()).unwrap();
        assert_eq!(cfg.problem, ProblemKind::Tension);
        assert_eq!(cfg.refinement, 4);
        assert_eq!(cfg.tol, 1e-6);
        assert_eq!(cfg.max_iters, 500);
        assert_eq!(cfg.eps_factor, 2.0);
        assert_eq!(cfg.l_u, 1e-6);
        assert!(cfg.lfi.is_none());
        assert_eq!(cfg.vtk_every, 0);
    }

    #[test]
    fn lfi_and_comments() {
        let f = write_tmp("problem = shear\nrefinement=2 # inline comment\nlfi = 30\n# comment\n");
        let cfg = parse_config(Some(f.path()), RawConfig::default()).unwrap();
        assert_eq!(cfg.lfi, Some(30));
    }

    #[test]
    fn unknown_key_is_named() {
        let f = write_tmp("problem = tension\nrefinement = 4\nbogus_key = 1\n");
        let err = parse_config(Some(f.path()), RawConfig::default()).unwrap_err();
        assert!(format!("{err:#}").contains("bogus_key"), "{err:#}");
    }

    #[test]
    fn missing_required_key() {
        let f = write_tmp("refinement = 4\n");
        let err = parse_config(Some(f.path()), RawConfig::default()).unwrap_err();
        assert!(format!("{err:#}").contains("problem"));
    }

    #[test]
    fn flags_override_file() {
        let f = write_tmp("problem = tension\nrefinement = 4\nl_u = 1e-3\n");
        let overrides = RawConfig { l_u: Some(0.0), refinement: Some(5), ..Default::default() };
        let cfg = parse_config(Some(f.path()), overrides).unwrap();
        assert_eq!(cfg.l_u, 0.0);
        assert_eq!(cfg.refinement, 5);
    }

    #[test]
    fn kappa_modes() {
        let f = write_tmp("problem = lshape\nrefinement = 1\nkappa = 1e-9\nkappa_mode = h_scaled\n");
        let cfg = parse_config(Some(f.path()), RawConfig::default()).unwrap();
        assert!(matches!(cfg.kappa, Some(KappaMode::HScaled(v)) if v == 1e-9));
        let f = write_tmp("problem = lshape\nrefinement = 1\nkappa = 1e-9\n");
        let cfg = parse_config(Some(f.path()), RawConfig::default()).unwrap();
        assert!(matches!(cfg.kappa, Some(KappaMode::Absolute(v)) if v == 1e-9));
    }
}
