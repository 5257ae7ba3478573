//! Run configuration: a flat TOML file. Frequencies are ordinary frequencies
//! (kHz or Hz as the key says) and are converted to rad/s here. Times are in
//! units of 1/J_max.

use std::fmt;
use std::path::{Path, PathBuf};

use prethermal::coupling::{power_law_couplings, tuned_trap_couplings, CouplingMatrix};
use prethermal::exact::{ExcitationPattern, Propagation, DEFAULT_FULL_SPACE_CAP};
use prethermal::lattice::{Geometry, TrapConfig};
use prethermal::stochastic::NoiseModel;
use prethermal::units::{hz_to_rad, khz_to_rad};
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(key: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("config key `{key}`: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSource {
    PowerLaw,
    Trap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Exact,
    Xy,
    Spinwave,
}

impl std::str::FromStr for Model {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "exact" => Ok(Model::Exact),
            "xy" => Ok(Model::Xy),
            "spinwave" => Ok(Model::Spinwave),
            other => Err(bad("model", format!("unknown model `{other}` (exact, xy, spinwave)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKey {
    Uniform,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_ions: usize,
    pub coupling: CouplingSource,
    /// Target J_max/2π. Rescales the Rabi frequency for trap couplings.
    #[serde(default)]
    pub j_max_khz: Option<f64>,
    /// Power-law exponent, or the fitted exponent μ is tuned to for traps.
    #[serde(default)]
    pub alpha: Option<f64>,

    #[serde(default = "default_geometry")]
    pub geometry: GeometryKey,
    #[serde(default = "default_omega_x")]
    pub omega_x_khz: f64,
    #[serde(default = "default_omega_z")]
    pub omega_z_khz: f64,
    #[serde(default)]
    pub mu_khz: Option<f64>,
    #[serde(default = "default_rabi")]
    pub rabi_khz: f64,

    #[serde(default = "default_b")]
    pub b_khz: f64,
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default)]
    pub propagation: Propagation,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
    #[serde(default = "default_patterns")]
    pub patterns: Vec<Vec<usize>>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_n_points")]
    pub n_points: usize,

    #[serde(default)]
    pub noise_samples: usize,
    #[serde(default = "default_j_sigma")]
    pub j_sigma: f64,
    #[serde(default = "default_b_offset")]
    pub b_offset_hz: f64,
    #[serde(default = "default_prep")]
    pub prep_fidelity: f64,
    #[serde(default = "default_detection")]
    pub detection_error: f64,
    #[serde(default)]
    pub seed: u64,

    #[serde(default = "default_shots")]
    pub n_shots: usize,
    /// Measurement time for `shots`, defaults to `t_max`.
    #[serde(default)]
    pub shot_time: Option<f64>,

    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_min_weight")]
    pub gap_min_weight: f64,

    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_geometry() -> GeometryKey {
    GeometryKey::Harmonic
}
fn default_omega_x() -> f64 {
    4800.0
}
fn default_omega_z() -> f64 {
    400.0
}
fn default_rabi() -> f64 {
    600.0
}
fn default_b() -> f64 {
    10.0
}
fn default_model() -> Model {
    Model::Exact
}
fn default_cap() -> usize {
    DEFAULT_FULL_SPACE_CAP
}
fn default_patterns() -> Vec<Vec<usize>> {
    vec![vec![1]]
}
fn default_t_max() -> f64 {
    25.0
}
fn default_n_points() -> usize {
    201
}
fn default_j_sigma() -> f64 {
    0.12
}
fn default_b_offset() -> f64 {
    30.0
}
fn default_prep() -> f64 {
    0.97
}
fn default_detection() -> f64 {
    0.05
}
fn default_shots() -> usize {
    1000
}
fn default_alpha_grid() -> Vec<f64> {
    vec![0.55, 0.8, 1.0, 1.33]
}
fn default_min_weight() -> f64 {
    1e-3
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.n_ions < 2 {
            return Err(bad("n_ions", format!("need at least 2 ions, got {}", self.n_ions)));
        }
        if let Some(j) = self.j_max_khz {
            positive("j_max_khz", j)?;
        }
        if let Some(a) = self.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(bad("alpha", format!("must be >= 0, got {a}")));
            }
        }
        match self.coupling {
            CouplingSource::PowerLaw => {
                if self.alpha.is_none() {
                    return Err(bad("alpha", "required for coupling = \"power_law\""));
                }
                if self.mu_khz.is_some() {
                    return Err(bad("mu_khz", "only used with coupling = \"trap\""));
                }
            }
            CouplingSource::Trap => {
                positive("omega_x_khz", self.omega_x_khz)?;
                positive("omega_z_khz", self.omega_z_khz)?;
                positive("rabi_khz", self.rabi_khz)?;
                match (self.mu_khz, self.alpha) {
                    (Some(_), Some(_)) => {
                        return Err(bad("mu_khz", "set either mu_khz or alpha (which tunes mu), not both"))
                    }
                    (None, None) => return Err(bad("mu_khz", "trap couplings need mu_khz or alpha")),
                    (Some(mu), None) => positive("mu_khz", mu)?,
                    (None, Some(_)) => {}
                }
            }
        }
        positive("b_khz", self.b_khz)?;
        if self.exact_cap == 0 {
            return Err(bad("exact_cap", "must be >= 1"));
        }
        if self.model == Model::Exact && self.n_ions > self.exact_cap {
            return Err(bad(
                "n_ions",
                format!(
                    "{} ions exceed exact_cap = {} for model = \"exact\"; use model = \"xy\" or \"spinwave\"",
                    self.n_ions, self.exact_cap
                ),
            ));
        }
        if self.patterns.is_empty() {
            return Err(bad("patterns", "need at least one pattern"));
        }
        for p in &self.patterns {
            ExcitationPattern::new(self.n_ions, p).map_err(|e| bad("patterns", format!("{p:?}: {e}")))?;
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(bad("t_max", format!("must be >= 0, got {}", self.t_max)));
        }
        if self.n_points < 2 {
            return Err(bad("n_points", format!("need at least 2 points, got {}", self.n_points)));
        }
        if !(self.j_sigma.is_finite() && self.j_sigma >= 0.0) {
            return Err(bad("j_sigma", format!("must be >= 0, got {}", self.j_sigma)));
        }
        if !(self.b_offset_hz.is_finite() && self.b_offset_hz >= 0.0) {
            return Err(bad("b_offset_hz", format!("must be >= 0, got {}", self.b_offset_hz)));
        }
        if !(self.prep_fidelity > 0.0 && self.prep_fidelity <= 1.0) {
            return Err(bad("prep_fidelity", format!("must be in (0, 1], got {}", self.prep_fidelity)));
        }
        if !(0.0..0.5).contains(&self.detection_error) {
            return Err(bad("detection_error", format!("must be in [0, 0.5), got {}", self.detection_error)));
        }
        if self.n_shots == 0 {
            return Err(bad("n_shots", "must be >= 1"));
        }
        if let Some(t) = self.shot_time {
            if !(t.is_finite() && t >= 0.0) {
                return Err(bad("shot_time", format!("must be >= 0, got {t}")));
            }
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(bad("alpha_grid", "need a nonempty list of exponents >= 0"));
        }
        if !(0.0..=1.0).contains(&self.gap_min_weight) {
            return Err(bad("gap_min_weight", format!("must be in [0, 1], got {}", self.gap_min_weight)));
        }
        Ok(())
    }

    pub fn b_field(&self) -> f64 {
        khz_to_rad(self.b_khz)
    }

    pub fn pattern_list(&self) -> Vec<ExcitationPattern> {
        self.patterns
            .iter()
            .map(|p| ExcitationPattern::new(self.n_ions, p).expect("validated"))
            .collect()
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            j_relative_sigma: self.j_sigma,
            b_offset_sigma: hz_to_rad(self.b_offset_hz),
            prep_flip_fidelity: self.prep_fidelity,
            detection_error: self.detection_error,
            seed: self.seed,
        }
    }

    /// Trap parameters before any tuning.
    pub fn trap(&self) -> TrapConfig {
        let geometry = match self.geometry {
            GeometryKey::Uniform => Geometry::Uniform,
            GeometryKey::Harmonic => Geometry::HarmonicTrap,
        };
        let omega_x = khz_to_rad(self.omega_x_khz);
        TrapConfig::new(
            self.n_ions,
            geometry,
            omega_x,
            khz_to_rad(self.omega_z_khz),
            self.mu_khz.map_or(omega_x, khz_to_rad),
            khz_to_rad(self.rabi_khz),
        )
    }

    /// Couplings at the configured exponent, with the tuned trap when the
    /// source is a trap.
    pub fn couplings(&self) -> prethermal::Result<(CouplingMatrix, Option<TrapConfig>)> {
        self.couplings_at(self.alpha)
    }

    pub fn couplings_at(&self, alpha: Option<f64>) -> prethermal::Result<(CouplingMatrix, Option<TrapConfig>)> {
        let j_max = self.j_max_khz.map(khz_to_rad);
        match self.coupling {
            CouplingSource::PowerLaw => {
                let jm = power_law_couplings(
                    self.n_ions,
                    j_max.unwrap_or(khz_to_rad(0.6)),
                    alpha.expect("validated"),
                )?;
                // the fit needs at least three ions
                let jm = if self.n_ions >= 3 { jm.with_alpha_fit()? } else { jm };
                Ok((jm, None))
            }
            CouplingSource::Trap => {
                let (cfg, jm) = tuned_trap_couplings(&self.trap(), alpha, j_max)?;
                Ok((jm, Some(cfg)))
            }
        }
    }
}
