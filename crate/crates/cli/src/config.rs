//! Experiment configuration.

use std::path::PathBuf;

use m2hs_core::blowup::WeakOptions;
use m2hs_core::connectivity::ShootOptions;
use m2hs_core::grid::{check_size, RealGridFunction};
use m2hs_core::m2hs::{EulerianState, GeometricOptions, PdeOptions, DEFAULT_BLOWUP_CAP};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Sine and cosine coefficients as `[mode, amplitude]` pairs, plus a mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Series {
    pub mean: f64,
    pub sin: Vec<(usize, f64)>,
    pub cos: Vec<(usize, f64)>,
}

impl Series {
    fn grid(&self, n: usize, name: &str) -> Result<RealGridFunction, CliError> {
        for &(k, a) in self.sin.iter().chain(&self.cos) {
            if k == 0 || 2 * k >= n {
                return Err(CliError::Config(format!("{name}: mode {k} outside 1..{}", n / 2)));
            }
            if !a.is_finite() {
                return Err(CliError::Config(format!("{name}: non-finite amplitude")));
            }
        }
        let tau = std::f64::consts::TAU;
        RealGridFunction::from_fn(n, |x| {
            let s: f64 = self.sin.iter().map(|&(k, a)| a * (tau * k as f64 * x).sin()).sum();
            let c: f64 = self.cos.iter().map(|&(k, a)| a * (tau * k as f64 * x).cos()).sum();
            self.mean + s + c
        })
        .map_err(|e| CliError::Config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, output_stride: 100 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Geometric,
    Pde,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eps_mono: f64,
    pub eps_zero: f64,
    pub tol_connect: f64,
    pub blowup_cap: f64,
    pub detect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_mono: 1e-8,
            eps_zero: 1e-10,
            tol_connect: 1e-6,
            blowup_cap: DEFAULT_BLOWUP_CAP,
            detect: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectConfig {
    pub k: Option<f64>,
    pub q0: Option<PathBuf>,
    pub q1: Option<PathBuf>,
    pub lagrangian: bool,
    pub search: ShootOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManeConfig {
    pub k: f64,
    pub loops: usize,
    /// Grid size and time steps of each random loop.
    pub n: usize,
    pub steps: usize,
}

impl Default for ManeConfig {
    fn default() -> Self {
        Self { k: 0.125, loops: 1000, n: 16, steps: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s: f64,
    pub u0: Series,
    pub rho0: Series,
    pub time: TimeGrid,
    pub solver: Solver,
    pub tolerances: Tolerances,
    pub verify: WeakOptions,
    pub seed: u64,
    pub connect: ConnectConfig,
    pub mane: ManeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 256,
            s: 0.0,
            u0: Series::default(),
            rho0: Series::default(),
            time: TimeGrid::default(),
            solver: Solver::default(),
            tolerances: Tolerances::default(),
            verify: WeakOptions::default(),
            seed: 0,
            connect: ConnectConfig::default(),
            mane: ManeConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_size(self.n).map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.time.dt > 0.0 && self.time.dt.is_finite()) {
            return Err(CliError::Config(format!("dt must be positive, got {}", self.time.dt)));
        }
        if !(self.time.t_end > 0.0 && self.time.t_end.is_finite()) {
            return Err(CliError::Config(format!("t_end must be positive, got {}", self.time.t_end)));
        }
        if !self.s.is_finite() {
            return Err(CliError::Config("s must be finite".into()));
        }
        if self.u0.mean != 0.0 {
            return Err(CliError::Config("u0 must have zero mean".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<EulerianState, CliError> {
        let u = self.u0.grid(self.n, "u0")?;
        let rho = self.rho0.grid(self.n, "rho0")?;
        EulerianState::new(u, rho, self.s).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn pde_options(&self) -> PdeOptions {
        PdeOptions {
            dt: self.time.dt,
            t_end: self.time.t_end,
            output_stride: self.time.output_stride.max(1),
            blowup_cap: self.tolerances.blowup_cap,
        }
    }

    pub fn geometric_options(&self) -> GeometricOptions {
        GeometricOptions { eps_mono: self.tolerances.eps_mono, eps_zero: self.tolerances.eps_zero }
    }

    /// Output times of the direct solver: every `output_stride`-th step and
    /// the last one.
    pub fn output_times(&self) -> Vec<f64> {
        let steps = ((self.time.t_end / self.time.dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = self.time.t_end / steps as f64;
        let stride = self.time.output_stride.max(1);
        std::iter::once(0.0)
            .chain((1..=steps).filter(|j| j % stride == 0 || *j == steps).map(|j| j as f64 * dt))
            .collect()
    }
}
