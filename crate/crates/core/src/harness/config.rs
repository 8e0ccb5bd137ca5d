//! Run configuration, read from TOML. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::movement::{PeriodicKind, SchemeKind, SchemeSpec};
use crate::nudging::{NudgeKind, NudgeSpec};
use crate::theory::Constants;

/// Coarse decision grid is always this many nodes per direction.
pub const DECISION_NODES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Nodes per direction.
    pub grid: usize,
    pub nu: f64,
    pub dt: f64,
    pub forcing: ForcingConfig,
    pub assimilation: AssimilationConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub theory: TheoryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default = "default_annulus_lo")]
    pub annulus_lo: f64,
    #[serde(default = "default_annulus_hi")]
    pub annulus_hi: f64,
    /// `‖f‖/(ν²λ1)`
    pub grashof_trad: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_annulus_lo() -> f64 {
    10.0
}

fn default_annulus_hi() -> f64 {
    12.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssimilationConfig {
    pub mu: f64,
    /// Windows per direction.
    #[serde(default = "default_partition")]
    pub partition: usize,
    pub nudge: NudgeConfig,
    pub scheme: SchemeKindConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NudgeConfig {
    Local { p: u32 },
    Spectral { modes: usize },
    Volume { h: f64 },
}

fn default_partition() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeKindConfig {
    FullDomain,
    Periodic {
        path: PathKind,
        frequency: f64,
    },
    Dominant {
        period: f64,
        #[serde(default)]
        delay_frac: f64,
    },
    Random {
        period: f64,
        #[serde(default)]
        delay_frac: f64,
        #[serde(default)]
        seed: u64,
    },
    Hybrid {
        switch_time: f64,
        modes: usize,
        then: Box<SchemeKindConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Discontinuous,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    pub spinup_time: f64,
    /// Step for the spin-up; defaults to `dt`.
    #[serde(default)]
    pub spinup_dt: Option<f64>,
    pub output_stride: usize,
    #[serde(default)]
    pub checkpoint_path: Option<PathBuf>,
    /// Relative error that counts as synchronized in summaries.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// End the twin run as soon as the error is below `tolerance`.
    #[serde(default)]
    pub stop_at_tolerance: bool,
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoryConfig {
    pub c_l: f64,
    pub c_i: f64,
    pub c0: f64,
    pub c_star: f64,
    pub c_psi: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        TheoryConfig { c_l: 1.0, c_i: 1.0, c0: 2.0, c_star: 0.1, c_psi: 1.0 }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Desk-scale profile: 128², ν = 5e-3, G_trad = 2.5e4, μ = 50, δt = 1e-3,
    /// spectral nudging on 32 modes over the whole domain.
    pub fn desk() -> Self {
        SimConfig {
            grid: 128,
            nu: 5e-3,
            dt: 1e-3,
            forcing: ForcingConfig { annulus_lo: 10.0, annulus_hi: 12.0, grashof_trad: 2.5e4, seed: 1 },
            assimilation: AssimilationConfig {
                mu: 50.0,
                nudge: NudgeConfig::Spectral { modes: 32 },
                partition: 4,
                scheme: SchemeKindConfig::FullDomain,
            },
            run: RunConfig {
                t_end: 20.0,
                spinup_time: 500.0,
                spinup_dt: None,
                output_stride: 100,
                checkpoint_path: None,
                tolerance: 1e-6,
                stop_at_tolerance: false,
            },
            theory: TheoryConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.grid < 4 || !self.grid.is_power_of_two() {
            return bad(format!("grid = {} must be a power of two >= 4", self.grid));
        }
        if !(self.nu > 0.0) {
            return bad(format!("nu = {} must be > 0", self.nu));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if let Some(sdt) = self.run.spinup_dt {
            if !(sdt > 0.0) {
                return bad(format!("run.spinup_dt = {sdt} must be > 0"));
            }
        }
        let f = &self.forcing;
        if !(f.grashof_trad >= 0.0) {
            return bad(format!("forcing.grashof_trad = {} must be >= 0", f.grashof_trad));
        }
        if !(f.annulus_lo > 0.0 && f.annulus_lo < f.annulus_hi) {
            return bad(format!("forcing annulus [{}, {}) must satisfy 0 < lo < hi", f.annulus_lo, f.annulus_hi));
        }
        if self.run.output_stride == 0 {
            return bad("run.output_stride must be >= 1".into());
        }
        if !(self.run.t_end >= 0.0) || !(self.run.spinup_time >= 0.0) {
            return bad("run.t_end and run.spinup_time must be >= 0".into());
        }
        if !(self.run.tolerance > 0.0) {
            return bad(format!("run.tolerance = {} must be > 0", self.run.tolerance));
        }
        let t = &self.theory;
        if !(t.c_l > 0.0 && t.c_i > 0.0 && t.c0 > 1.0 && t.c_star > 0.0 && t.c_psi > 0.0) {
            return bad("theory constants must be positive with c0 > 1".into());
        }
        self.nudge_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.scheme_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        if !self.grid.is_multiple_of(self.scheme_spec().partition) {
            return bad(format!("partition {} does not divide grid {}", self.scheme_spec().partition, self.grid));
        }
        Ok(())
    }

    pub fn nudge_spec(&self) -> NudgeSpec {
        let kind = match self.assimilation.nudge {
            NudgeConfig::Local { p } => NudgeKind::LocalFiltered { p },
            NudgeConfig::Spectral { modes } => NudgeKind::SpectralProjection { modes },
            NudgeConfig::Volume { h } => NudgeKind::VolumeElements { h },
        };
        NudgeSpec { mu: self.assimilation.mu, kind }
    }

    pub fn scheme_spec(&self) -> SchemeSpec {
        SchemeSpec { kind: scheme_kind(&self.assimilation.scheme), partition: self.assimilation.partition }
    }

    pub fn spinup_dt(&self) -> f64 {
        self.run.spinup_dt.unwrap_or(self.dt)
    }

    /// Stride from the fine grid to the 32² decision grid.
    pub fn decision_stride(&self) -> usize {
        (self.grid / DECISION_NODES).max(1)
    }

    /// Theory constants for this configuration, with `λ1 = 1` and the
    /// forcing's Grashof number converted to the factor-2 convention.
    pub fn theory_constants(&self) -> Constants {
        Constants {
            nu: self.nu,
            lambda1: 1.0,
            grashof: 2.0 * self.forcing.grashof_trad,
            c_l: self.theory.c_l,
            c_i: self.theory.c_i,
            partition: self.assimilation.partition,
            c0: self.theory.c0,
            c_star: self.theory.c_star,
        }
    }
}

fn scheme_kind(k: &SchemeKindConfig) -> SchemeKind {
    match k {
        SchemeKindConfig::FullDomain => SchemeKind::FullDomain,
        SchemeKindConfig::Periodic { path, frequency } => SchemeKind::Periodic {
            kind: match path {
                PathKind::Discontinuous => PeriodicKind::Discontinuous,
                PathKind::Continuous => PeriodicKind::Continuous,
            },
            frequency: *frequency,
        },
        SchemeKindConfig::Dominant { period, delay_frac } => {
            SchemeKind::Dominant { period: *period, delay_frac: *delay_frac }
        }
        SchemeKindConfig::Random { period, delay_frac, seed } => {
            SchemeKind::Random { period: *period, delay_frac: *delay_frac, seed: *seed }
        }
        SchemeKindConfig::Hybrid { switch_time, modes, then } => {
            SchemeKind::Hybrid { switch_time: *switch_time, modes: *modes, then: Box::new(scheme_kind(then)) }
        }
    }
}

/// Sets a dotted key (e.g. `assimilation.scheme.frequency`) in a config and
/// re-validates. The value is parsed as a TOML literal, falling back to a
/// bare string.
pub fn override_key(cfg: &SimConfig, key: &str, value: &str) -> Result<SimConfig> {
    let mut root = toml::Value::try_from(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let parsed = parse_literal(value);
    let mut node = &mut root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table =
            node.as_table_mut().ok_or_else(|| Error::Config(format!("`{key}`: `{part}` is not inside a table")))?;
        if i + 1 == parts.len() {
            table.insert((*part).to_string(), parsed.clone());
            break;
        }
        node = table.entry((*part).to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
    SimConfig::from_toml_str(&text)
}

fn parse_literal(value: &str) -> toml::Value {
    let wrapped = format!("v = {value}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}
