//! Run configuration. Every section is optional; the defaults reproduce the
//! synthetic e = 0.9 experiment on a 40×40 grid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tearfilm::evaporation::{EllipticPeak, EvaporationSpec};
use tearfilm::forward::SolverOptions;
use tearfilm::inverse::{
    ForwardMode, ModelSetup, ModelSpec, OptimizerOptions, Rectangle, StreakAxis,
};
use tearfilm::preprocess::{GuessDefaults, PreprocessOptions};
use tearfilm::rom::RomOptions;
use tearfilm::{derive_nondim, InitialConditions, NondimParams, PhysicalParams};

use crate::Failure;

pub const RESOLVED_NAME: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Accepted for reproducibility records; all work runs on one thread.
    pub threads: usize,
    pub physical: PhysicalParams,
    pub model: ModelConfig,
    pub solver: SolverOptions,
    pub rom: RomOptions,
    pub evaporation: ModelSpec,
    pub synth: SynthConfig,
    pub paths: PathsConfig,
    pub preprocess: PreprocessOptions,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            physical: PhysicalParams::default(),
            model: ModelConfig::default(),
            solver: SolverOptions::default(),
            rom: RomOptions::default(),
            evaporation: ModelSpec::Planar(EvaporationSpec::single_ellipse(
                0.07,
                EllipticPeak {
                    x0: 0.0,
                    y0: 0.0,
                    fx: 0.5,
                    fy: 0.5,
                    e: 0.9,
                    a: 0.8,
                    beta: 0.5,
                },
            )),
            synth: SynthConfig::default(),
            paths: PathsConfig::default(),
            preprocess: PreprocessOptions::default(),
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Initial fluorescein concentration relative to critical.
    pub f0: f64,
    /// Replaces the derived permeability group when set.
    pub pc: Option<f64>,
    pub t_end: f64,
    /// Output frames including t = 0.
    pub frames: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            f0: 1.0,
            pc: None,
            t_end: 1.0,
            frames: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory of PNG frames plus metadata.toml.
    pub frames: Option<PathBuf>,
    /// Processed sequence directory.
    pub processed: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    Ellipse,
    Multi,
    Radial,
    Streak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub mode: FitMode,
    /// Starting vector in layout order; seeded from the last frame if absent.
    pub initial: Option<Vec<f64>>,
    pub peaks: usize,
    pub forward: ForwardMode,
    pub stride: usize,
    pub rectangle: Rectangle,
    pub axis: StreakAxis,
    pub comparison_frames: usize,
    pub optimizer: OptimizerOptions,
    pub guess: GuessDefaults,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mode: FitMode::Ellipse,
            initial: None,
            peaks: 2,
            forward: ForwardMode::Reduced,
            stride: 1,
            rectangle: Rectangle::default(),
            axis: StreakAxis::Horizontal,
            comparison_frames: 3,
            optimizer: OptimizerOptions::default(),
            guess: GuessDefaults::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |e: tearfilm::Error| Failure::Config(e.to_string());
        self.physical.validate().map_err(bad)?;
        self.solver.validate().map_err(bad)?;
        self.rom.validate().map_err(bad)?;
        self.fit.optimizer.validate().map_err(bad)?;
        InitialConditions::new(self.model.f0).map_err(bad)?;
        if !(self.model.t_end > 0.0 && self.model.t_end.is_finite()) {
            return Err(Failure::Config(format!(
                "model.t_end must be positive, got {}",
                self.model.t_end
            )));
        }
        if self.model.frames < 2 {
            return Err(Failure::Config("model.frames must be at least 2".into()));
        }
        if let Some(pc) = self.model.pc {
            if !(pc >= 0.0 && pc.is_finite()) {
                return Err(Failure::Config(format!(
                    "model.pc must be non-negative, got {pc}"
                )));
            }
        }
        if self.synth.noise < 0.0 || !self.synth.noise.is_finite() {
            return Err(Failure::Config("synth.noise must be non-negative".into()));
        }
        if self.threads == 0 {
            return Err(Failure::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn nondim(&self) -> Result<NondimParams, Failure> {
        let nd = derive_nondim(&self.physical).map_err(|e| Failure::Config(e.to_string()))?;
        Ok(match self.model.pc {
            Some(pc) => nd.with_pc(pc),
            None => nd,
        })
    }

    pub fn initial_conditions(&self) -> Result<InitialConditions, Failure> {
        InitialConditions::new(self.model.f0).map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn setup(&self) -> Result<ModelSetup, Failure> {
        Ok(ModelSetup {
            nd: self.nondim()?,
            ic: self.initial_conditions()?,
            solver: self.solver,
            mode: self.fit.forward,
            rom: self.rom,
        })
    }

    /// Writes the fully resolved configuration into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<(), Failure> {
        let text = toml::to_string(self)
            .map_err(|e| Failure::Config(format!("cannot serialize config: {e}")))?;
        std::fs::create_dir_all(dir).map_err(Failure::io)?;
        std::fs::write(dir.join(RESOLVED_NAME), text).map_err(Failure::io)
    }
}
