//! Run configuration persisted as TOML next to every output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::IntegratorSettings;
use crate::rom::{Ansatz, RomConfig, Truncation, MAX_ORDER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Markov model of the full system at half-width `M`.
    Full,
    /// Renormalized reduced model at half-width `N`.
    Rom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub model: ModelKind,
    /// `M` for full runs, `N` for reduced runs.
    pub half_width: usize,
    #[serde(default)]
    pub order: usize,
    #[serde(default = "default_ansatz")]
    pub ansatz: Ansatz,
    #[serde(default)]
    pub truncation: Truncation,
    pub t_end: f64,
    pub snapshot_interval: f64,
    pub initial_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Runs are single-threaded and seed-free, hence reproducible bit for bit.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
    /// File the coefficients were taken from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_source: Option<String>,
}

fn default_ansatz() -> Ansatz {
    Ansatz::Algebraic
}

fn default_true() -> bool {
    true
}

impl RunManifest {
    pub fn full(half_width: usize, settings: &IntegratorSettings) -> Self {
        Self::with_settings(ModelKind::Full, half_width, settings)
    }

    pub fn rom(cfg: &RomConfig, settings: &IntegratorSettings) -> Self {
        Self {
            order: cfg.order,
            ansatz: cfg.ansatz,
            coefficients: cfg.coeffs.clone(),
            ..Self::with_settings(ModelKind::Rom, cfg.resolved_half_width, settings)
        }
    }

    fn with_settings(model: ModelKind, half_width: usize, s: &IntegratorSettings) -> Self {
        Self {
            model,
            half_width,
            order: 0,
            ansatz: Ansatz::Algebraic,
            truncation: Truncation::Symmetric,
            t_end: s.t_end,
            snapshot_interval: s.snapshot_interval,
            initial_step: s.initial_step,
            rel_tol: s.rel_tol,
            abs_tol: s.abs_tol,
            max_step: s.max_step,
            deterministic: true,
            coefficients: Vec::new(),
            coefficient_source: None,
        }
    }

    pub fn settings(&self) -> IntegratorSettings {
        IntegratorSettings {
            initial_step: self.initial_step,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            t_end: self.t_end,
            snapshot_interval: self.snapshot_interval,
        }
    }

    pub fn rom_config(&self) -> Result<RomConfig> {
        RomConfig::new(self.half_width, self.order, self.ansatz, self.coefficients.clone())
    }

    pub fn validate(&self) -> Result<()> {
        self.settings().validate()?;
        if self.half_width == 0 {
            return Err(Error::InvalidManifest("half_width must be at least 1".into()));
        }
        match self.model {
            ModelKind::Full => {
                if self.order != 0 || !self.coefficients.is_empty() {
                    return Err(Error::InvalidManifest("full runs take no memory terms".into()));
                }
                if self.half_width < 2 {
                    return Err(Error::InvalidManifest("full runs need half_width >= 2".into()));
                }
            }
            ModelKind::Rom => {
                if self.order > MAX_ORDER {
                    return Err(Error::InvalidManifest(format!("order {} exceeds {MAX_ORDER}", self.order)));
                }
                self.rom_config()
                    .map_err(|e| Error::InvalidManifest(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_toml().as_bytes()).into()
    }
}
