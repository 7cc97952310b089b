// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! Time is measured in units of the bath period `T` (so the bath fundamental
//! is `Omega = 2 pi`); `system.omega` and `bath.h` are therefore the
//! dimensionless products `omega T` and `h T`, and `bath.beta` is `beta / T`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::PhaseGrid;
use crate::bath::{BathSpec, CouplingExponent, Modes, Temperature};
use crate::exact::SystemSpec;
use crate::fock::{
    cat_state_with_threshold, coherent_state_with_threshold, density_from_ket, fock_state, vacuum, DensityMatrix,
    FockSpace, Ket, DEFAULT_TAIL_THRESHOLD,
};
use crate::propagate::{PropagationConfig, Scheme};
use crate::Error;

/// Bath fundamental frequency in units where `T = 1`.
pub const OMEGA_BATH: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse(String),
    Validation { field: String, message: String },
    Io(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Validation { field, message } => write!(f, "invalid `{field}`: {message}"),
            ConfigError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn from_core(default_field: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { field, reason } => invalid(field, reason),
        other => invalid(default_field, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub bath: BathSection,
    pub initial_state: InitialState,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub wigner: WignerSection,
    #[serde(default)]
    pub pendulum: PendulumSection,
    #[serde(default)]
    pub divisibility: DivisibilitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// `omega T`.
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub fock_dim: usize,
    /// Largest Poisson tail mass beyond the truncation accepted for
    /// coherent and cat states.
    #[serde(default = "default_tail")]
    pub tail_threshold: f64,
}

fn default_omega() -> f64 {
    2.0 * PI
}

fn default_tail() -> f64 {
    DEFAULT_TAIL_THRESHOLD
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModesSetting {
    Count(usize),
    Keyword(ModesKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModesKeyword {
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSetting {
    /// `g_k = h exp(-z k / 2)`.
    #[default]
    Half,
    /// `g_k = h exp(-z k)`.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    /// `h T`.
    pub h: f64,
    pub z: f64,
    #[serde(default = "default_s")]
    pub s: u32,
    pub modes: ModesSetting,
    /// `beta / T`; absent means zero temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub coupling_exponent: CouplingSetting,
}

fn default_s() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialState {
    Vacuum,
    Fock {
        n: usize,
    },
    Coherent {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    Cat {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    /// CSV of `re,im` rows (one per level), path relative to the config file.
    Amplitudes {
        file: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSetting {
    #[default]
    Magnus4,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationSection {
    pub steps_per_period: usize,
    pub scheme: SchemeSetting,
    pub richardson_check: bool,
}

impl Default for PropagationSection {
    fn default() -> Self {
        PropagationSection {
            steps_per_period: 2000,
            scheme: SchemeSetting::Magnus4,
            richardson_check: true,
        }
    }
}

/// Time grids for `rates` and `evolve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    pub t_max: f64,
    pub t_points: usize,
    pub l_max: u32,
}

impl Default for SeriesSection {
    fn default() -> Self {
        SeriesSection {
            t_max: 3.0,
            t_points: 301,
            l_max: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSection {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
    /// Snapshot times in units of `T`.
    pub times: Vec<f64>,
}

impl Default for WignerSection {
    fn default() -> Self {
        WignerSection {
            q_min: -6.0,
            q_max: 6.0,
            p_min: -6.0,
            p_max: 6.0,
            n_q: 241,
            n_p: 241,
            times: vec![0.0, 1.0, 2.0, 3.0],
        }
    }
}

/// Bath-mode occupation map for the `bath` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumSection {
    /// Defaults to `min(60, bath.modes)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    pub t_max: f64,
    pub t_points: usize,
    /// Replaces `N_k = 0` before taking the logarithm.
    pub log_floor: f64,
}

impl Default for PendulumSection {
    fn default() -> Self {
        PendulumSection {
            k_max: None,
            t_max: 1.0,
            t_points: 201,
            log_floor: 1e-16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivisibilitySection {
    pub m_max: u32,
    /// Rate of the constant dephasing comparison generator, in units of `1/T`.
    pub control_gamma0: f64,
}

impl Default for DivisibilitySection {
    fn default() -> Self {
        DivisibilitySection {
            m_max: 10,
            control_gamma0: 0.1,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / OMEGA_BATH
    }

    pub fn bath_spec(&self) -> Result<BathSpec, ConfigError> {
        let b = &self.bath;
        let modes = match b.modes {
            ModesSetting::Count(n) => Modes::Finite(n),
            ModesSetting::Keyword(ModesKeyword::Infinite) => Modes::InfiniteClosedForm,
        };
        let temperature = match b.beta {
            None => Temperature::Zero,
            Some(beta) => Temperature::Finite { beta },
        };
        let coupling = match b.coupling_exponent {
            CouplingSetting::Half => CouplingExponent::HalfZ,
            CouplingSetting::Full => CouplingExponent::FullZ,
        };
        Ok(BathSpec::new(b.h, b.z, OMEGA_BATH, b.s, modes, temperature)
            .map_err(|e| from_core("bath", e))?
            .with_coupling_exponent(coupling))
    }

    pub fn fock_space(&self) -> Result<FockSpace, ConfigError> {
        FockSpace::new(self.system.fock_dim).map_err(|_| invalid("system.fock_dim", "must be at least 2"))
    }

    pub fn system_spec(&self) -> Result<SystemSpec, ConfigError> {
        let space = self.fock_space()?;
        SystemSpec::new(self.system.omega, space, self.bath_spec()?).map_err(|e| from_core("system.omega", e))
    }

    pub fn propagation_config(&self) -> Result<PropagationConfig, ConfigError> {
        let p = &self.propagation;
        let scheme = match p.scheme {
            SchemeSetting::Magnus4 => Scheme::Magnus4,
            SchemeSetting::Rk4 => Scheme::Rk4,
        };
        PropagationConfig::new(p.steps_per_period, scheme, p.richardson_check)
            .map_err(|e| invalid("propagation.steps_per_period", e.to_string()))
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid, ConfigError> {
        let w = &self.wigner;
        PhaseGrid::new(w.q_min, w.q_max, w.p_min, w.p_max, w.n_q, w.n_p).map_err(|e| match e {
            Error::InvalidParameter { field, reason } => invalid(&format!("wigner.{}", &field[5..]), reason),
            other => invalid("wigner", other.to_string()),
        })
    }

    pub fn pendulum_k_max(&self) -> usize {
        match (self.pendulum.k_max, self.bath.modes) {
            (Some(k), _) => k,
            (None, ModesSetting::Count(n)) => n.min(60),
            (None, ModesSetting::Keyword(_)) => 60,
        }
    }

    /// Initial state; `base_dir` resolves an amplitudes file.
    pub fn initial_ket(&self, base_dir: &Path) -> Result<Ket, ConfigError> {
        let space = self.fock_space()?;
        let thr = self.system.tail_threshold;
        let field = "initial_state";
        match &self.initial_state {
            InitialState::Vacuum => Ok(vacuum(space)),
            InitialState::Fock { n } => fock_state(space, *n).map_err(|e| from_core("initial_state.n", e)),
            InitialState::Coherent { alpha_re, alpha_im } => {
                coherent_state_with_threshold(space, C64::new(*alpha_re, *alpha_im), thr).map_err(|e| from_core(field, e))
            }
            InitialState::Cat { alpha_re, alpha_im } => {
                cat_state_with_threshold(space, C64::new(*alpha_re, *alpha_im), thr).map_err(|e| from_core(field, e))
            }
            InitialState::Amplitudes { file } => {
                let path = base_dir.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
                let amps = parse_amplitudes(&text)?;
                if amps.len() != space.dim() {
                    return Err(invalid(
                        "initial_state.file",
                        format!("{} amplitudes for fock_dim {}", amps.len(), space.dim()),
                    ));
                }
                Ket::new(amps).map_err(|e| from_core("initial_state.file", e))
            }
        }
    }

    pub fn initial_density(&self, base_dir: &Path) -> Result<DensityMatrix, ConfigError> {
        Ok(density_from_ket(&self.initial_ket(base_dir)?))
    }

    /// Checks every cross-field constraint.
    pub fn validate(&self, base_dir: &Path) -> Result<(), ConfigError> {
        self.system_spec()?;
        self.propagation_config()?;
        self.phase_grid()?;
        self.initial_ket(base_dir)?;
        if !(self.system.tail_threshold > 0.0) {
            return Err(invalid("system.tail_threshold", "must be positive"));
        }
        let s = &self.series;
        if !(s.t_max > 0.0 && s.t_max.is_finite()) {
            return Err(invalid("series.t_max", "must be positive"));
        }
        if self.wigner.times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("wigner.times", "times must be finite and non-negative"));
        }
        let p = &self.pendulum;
        if p.k_max == Some(0) {
            return Err(invalid("pendulum.k_max", "need at least one mode"));
        }
        if let (ModesSetting::Count(n), Some(k)) = (self.bath.modes, p.k_max) {
            if k > n {
                return Err(invalid("pendulum.k_max", format!("exceeds bath.modes = {n}")));
            }
        }
        if !(p.t_max > 0.0 && p.t_max.is_finite()) {
            return Err(invalid("pendulum.t_max", "must be positive"));
        }
        if !(p.log_floor > 0.0) {
            return Err(invalid("pendulum.log_floor", "must be positive"));
        }
        if !(self.divisibility.control_gamma0 > 0.0) {
            return Err(invalid("divisibility.control_gamma0", "must be positive"));
        }
        Ok(())
    }
}

fn parse_amplitudes(text: &str) -> Result<Array1<C64>, ConfigError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("re") {
            continue;
        }
        let mut parts = line.split(',').map(str::trim);
        let mut next = || -> Result<f64, ConfigError> {
            parts
                .next()
                .ok_or_else(|| ConfigError::Parse(format!("amplitudes line {}: expected `re,im`", i + 1)))?
                .parse::<f64>()
                .map_err(|e| ConfigError::Parse(format!("amplitudes line {}: {e}", i + 1)))
        };
        let re = next()?;
        let im = next()?;
        out.push(C64::new(re, im));
    }
    Ok(Array1::from(out))
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let cfg = RunConfig::from_toml_str(&text)?;
    cfg.validate(config_dir(path))?;
    Ok(cfg)
}

pub fn config_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new("."))
}
