use std::path::{Path, PathBuf};

use fracmag_core::nonlinear::{NewtonOptions, Nonlinearity, NonlinearityFamily};
use fracmag_core::prelude::{Domain, KernelQuadratureConfig, MagneticPotential};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const OUTPUT_ROOT_VAR: &str = "FRACMAG_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub resolution: usize,
    pub s: f64,
    #[serde(default = "zero_potential")]
    pub potential: MagneticPotential,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default)]
    pub quadrature: KernelQuadratureConfig,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    /// Fractional orders for `sweep-s`.
    #[serde(default)]
    pub s_list: Vec<f64>,
    #[serde(default = "default_trials")]
    pub courant_trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Sequential, bit-reproducible reductions.
    #[serde(default)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub beta_inf: BetaInf,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default = "one")]
    pub h: usize,
    #[serde(default = "one")]
    pub k: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub newton: NewtonOptions,
    /// Random combinations of all eigenvectors added to the multistart.
    #[serde(default = "default_extra")]
    pub extra_random: usize,
    #[serde(default = "default_samples")]
    pub linking_samples: usize,
    /// Also run the descent solver from a negative-energy start along `f₁`.
    #[serde(default)]
    pub minimize: bool,
}

/// `β∞` as a number or as the midpoint of two computed eigenvalues
/// (1-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum BetaInf {
    Absolute { value: f64 },
    Midpoint { i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub family: NonlinearityFamily,
    #[serde(default)]
    pub beta0: Beta0,
}

/// `β₀` as a number, or `(β_index − β∞) − margin·β_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Beta0 {
    Absolute { value: f64 },
    BelowEigenvalue { index: usize, margin: f64 },
}

impl Default for Beta0 {
    fn default() -> Self {
        Beta0::Absolute { value: 0.0 }
    }
}

fn zero_potential() -> MagneticPotential {
    MagneticPotential::Zero
}
fn default_m_max() -> usize {
    8
}
fn default_trials() -> usize {
    200
}
fn default_output() -> PathBuf {
    PathBuf::from("fracmag-out")
}
fn one() -> usize {
    1
}
fn default_rho() -> f64 {
    0.25
}
fn default_extra() -> usize {
    6
}
fn default_samples() -> usize {
    200
}

/// Command line values that replace fields of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub resolution: Option<usize>,
    pub s: Option<f64>,
    pub m_max: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub reproducible: bool,
    pub beta_inf: Option<f64>,
    pub s_list: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.apply(overrides)?;
        cfg.resolve_output(std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from));
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(v) = o.resolution {
            self.resolution = v;
        }
        if let Some(v) = o.s {
            self.s = v;
        }
        if let Some(v) = o.m_max {
            self.m_max = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if o.reproducible {
            self.reproducible = true;
        }
        if let Some(v) = &o.s_list {
            self.s_list = v.clone();
        }
        if let Some(v) = o.beta_inf {
            match &mut self.problem {
                Some(p) => p.beta_inf = BetaInf::Absolute { value: v },
                None => return Err(CliError::Config("--beta-inf needs a problem block".into())),
            }
        }
        if self.reproducible {
            self.quadrature.sequential = true;
        }
        Ok(())
    }

    fn resolve_output(&mut self, root: Option<PathBuf>) {
        if let Some(root) = root {
            if self.output_dir.is_relative() {
                self.output_dir = root.join(&self.output_dir);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.spatial_dim()
    }

    fn check_s(&self, s: f64) -> Result<(), CliError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(CliError::Config(format!("s = {s} must lie in (0, 1)")));
        }
        if (self.dim() as f64) <= 2.0 * s {
            return Err(CliError::Config(format!(
                "N > 2s violated (N = {}, s = {s})",
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.domain.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.check_s(self.s)?;
        for &s in &self.s_list {
            self.check_s(s)?;
        }
        if self.resolution < 2 {
            return bad(format!("resolution = {} is too small", self.resolution));
        }
        if self.m_max == 0 {
            return bad("m_max must be at least 1".into());
        }
        if matches!(self.potential, MagneticPotential::Landau { .. }) && self.dim() != 2 {
            return bad("the landau potential is only defined in 2D".into());
        }
        self.potential
            .validate(self.dim())
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.quadrature.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = &self.problem {
            if !(1 <= p.h && p.h <= p.k && p.k <= self.m_max) {
                return bad(format!(
                    "need 1 <= h <= k <= m_max, got h = {}, k = {}, m_max = {}",
                    p.h, p.k, self.m_max
                ));
            }
            if !(p.rho > 0.0 && p.rho.is_finite()) {
                return bad(format!("rho = {} must be positive", p.rho));
            }
            match p.beta_inf {
                BetaInf::Absolute { value } if !value.is_finite() => {
                    return bad("beta_inf must be finite".into())
                }
                BetaInf::Midpoint { i, j } if i == 0 || j == 0 || i > self.m_max || j > self.m_max => {
                    return bad(format!("midpoint indices ({i}, {j}) must lie in 1..=m_max"))
                }
                _ => {}
            }
            match p.nonlinearity.beta0 {
                Beta0::Absolute { value } if !value.is_finite() => return bad("beta0 must be finite".into()),
                Beta0::BelowEigenvalue { index, margin }
                    if index == 0 || index > self.m_max || !margin.is_finite() =>
                {
                    return bad(format!("beta0 index {index} must lie in 1..=m_max"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// SHA-256 of the resolved config, with the output directory left out
    /// so that relocating a run keeps its hash.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl ProblemConfig {
    /// `β∞` and the nonlinearity from a computed spectrum.
    pub fn resolve(&self, eigenvalues: &[f64]) -> (f64, Nonlinearity) {
        let beta = |i: usize| eigenvalues[i - 1];
        let beta_inf = match self.beta_inf {
            BetaInf::Absolute { value } => value,
            BetaInf::Midpoint { i, j } => 0.5 * (beta(i) + beta(j)),
        };
        let beta0 = match self.nonlinearity.beta0 {
            Beta0::Absolute { value } => value,
            Beta0::BelowEigenvalue { index, margin } => (beta(index) - beta_inf) - margin * beta(index),
        };
        (beta_inf, Nonlinearity::new(self.nonlinearity.family, beta0))
    }
}
