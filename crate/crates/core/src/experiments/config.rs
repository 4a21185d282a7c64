//! Run-config documents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sample_initial_with, FarField, Field, Grid1D, InitialDatum, SamplingRule};
use crate::nonlinearity::StefanGraph;
use crate::operator::{Order, Stencil};
use crate::stepper::{Monitors, RunConfig};

/// `s` as a number in `(0, 1)` or the word `"local"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Fractional(f64),
    Named(LocalWord),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalWord {
    Local,
}

impl OrderSpec {
    pub fn order(&self) -> Result<Order> {
        match self {
            OrderSpec::Fractional(s) => Order::fractional(*s),
            OrderSpec::Named(LocalWord::Local) => Ok(Order::Local),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    /// Compare with the exact antisymmetric temperature at `T`.
    Oracle,
    /// Interface report of the profile at `T`.
    Interfaces,
    /// Profile CSV at every positive snapshot time.
    Profile,
    /// Temperature positivity on the positivity set of the first snapshot.
    Positivity,
    /// Two-phase run bracketed by the two one-phase runs.
    Sandwich,
    /// Very weak residual against a space-time bump.
    WeakResidual,
}

/// One scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: String,
    pub graph: StefanGraph,
    pub s: OrderSpec,
    pub dx: f64,
    pub window: [f64; 2],
    /// Far-field enthalpies `[b1, b2]`; defaults to the datum's background.
    #[serde(default)]
    pub farfield: Option<[f64; 2]>,
    #[serde(rename = "T")]
    pub final_time: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    pub datum: InitialDatum,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Truncation radius in nodes; defaults to the whole window.
    #[serde(default)]
    pub r_cut: Option<usize>,
    #[serde(default)]
    pub sampling: SamplingRule,
    /// Monitor record stride; defaults to every step.
    #[serde(default)]
    pub monitor_every: Option<usize>,
}

fn default_theta() -> f64 {
    0.9
}

/// Parses JSON, reporting the path of the offending field.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn config_error(path: &str, message: impl Into<String>) -> Error {
        Error::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |path: &str, e: Error| Self::config_error(path, e.to_string());
        self.graph.validate().map_err(|e| wrap("graph", e))?;
        self.s.order().map_err(|e| wrap("s", e))?;
        self.datum.validate().map_err(|e| wrap("datum", e))?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Self::config_error("theta", "must lie in (0, 1]"));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Self::config_error("T", "must be > 0"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0])
            || self
                .snapshot_times
                .iter()
                .any(|t| *t < 0.0 || *t > self.final_time)
        {
            return Err(Self::config_error(
                "snapshot_times",
                "must increase strictly and lie in [0, T]",
            ));
        }
        self.grid().map_err(|e| wrap("window", e))?;
        Ok(())
    }

    pub fn order(&self) -> Result<Order> {
        self.s.order()
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::from_window(self.window[0], self.window[1], self.dx)
    }

    pub fn farfield(&self) -> FarField {
        match self.farfield {
            Some([l, r]) => {
                let split = self.datum.background().split;
                FarField::new(l, r).with_split(split)
            }
            None => self.datum.background(),
        }
    }

    pub fn stencil(&self) -> Result<Stencil> {
        let grid = self.grid()?;
        Stencil::for_order(self.order()?, self.dx, self.r_cut.unwrap_or(grid.len()))
    }

    /// Snapshot times, with `T` appended when missing.
    pub fn times(&self) -> Vec<f64> {
        let mut t = self.snapshot_times.clone();
        if t.last().is_none_or(|last| *last < self.final_time) {
            t.push(self.final_time);
        }
        t
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(
            self.graph,
            self.stencil()?,
            self.grid()?,
            self.farfield(),
            self.final_time,
            self.times(),
        );
        cfg.theta = self.theta;
        cfg.monitors = Monitors {
            log_every: self.monitor_every.unwrap_or(1),
            stability: true,
        };
        Ok(cfg)
    }

    pub fn initial_field(&self) -> Result<Field> {
        sample_initial_with(&self.grid()?, &self.datum, self.farfield(), self.sampling)
    }
}

/// Refinement ladder for the convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderConfig {
    /// Scenario whose `dx` is replaced by each level.
    pub base: ScenarioConfig,
    pub levels: Vec<f64>,
    pub reference_dx: f64,
    #[serde(rename = "K")]
    pub k: [f64; 2],
}

impl LadderConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text)?;
        cfg.base.validate()?;
        if cfg.levels.is_empty() || cfg.levels.iter().any(|d| !(*d > cfg.reference_dx)) {
            return Err(Error::Config {
                path: "levels".into(),
                message: "need at least one level, each coarser than the reference".into(),
            });
        }
        if !(cfg.k[1] > cfg.k[0]) {
            return Err(Error::Config {
                path: "K".into(),
                message: "empty interval".into(),
            });
        }
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// The base scenario at spacing `dx`.
    pub fn at(&self, dx: f64) -> ScenarioConfig {
        let mut c = self.base.clone();
        c.dx = dx;
        c.r_cut = None;
        c
    }
}
