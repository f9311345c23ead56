//! `key = value` run configuration, validated before anything is allocated.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ader_core::basis::MAX_ORDER;
use ader_core::mesh::{BoundaryKind, TraversalKind};
use ader_core::scenario::{system_by_name, Scenario, ScenarioId, DEFAULT_SPIKE_STEP};
use ader_core::scheduler::{Averaging, SchedulerMode, SimulationConfig, DEFAULT_SAFETY};
use ader_core::kernels::DEFAULT_CFL;
use serde::Serialize;

use crate::CliError;

/// Largest grid depth accepted; `3^(d L)` cells beyond this are not a desk
/// workload.
pub const MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub system: String,
    pub dim: usize,
    pub depth: usize,
    pub order: usize,
    #[serde(serialize_with = "as_display")]
    pub mode: ModeName,
    pub traversal: String,
    /// `None` picks the scenario's boundary.
    pub boundary: Option<String>,
    pub safety: f64,
    pub cfl: f64,
    pub averaging: String,
    pub steps: Option<u64>,
    pub final_time: Option<f64>,
    pub limiter: bool,
    pub parallel: bool,
    pub scenario: String,
    pub out: PathBuf,
    pub force_dt: Option<f64>,
    pub spike_step: u64,
    pub trace: bool,
    /// Grid depths of a convergence study; empty for a plain run.
    pub convergence: Vec<usize>,
}

/// Wrapper so the mode serialises by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeName(pub SchedulerMode);

impl std::fmt::Display for ModeName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.name())
    }
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Default number of steps when neither `steps` nor `final_time` is given.
pub const DEFAULT_STEPS: u64 = 10;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: "euler".into(),
            dim: 2,
            depth: 2,
            order: 3,
            mode: ModeName(SchedulerMode::Fused),
            traversal: "peano".into(),
            boundary: None,
            safety: DEFAULT_SAFETY,
            cfl: DEFAULT_CFL,
            averaging: "creeping".into(),
            steps: None,
            final_time: None,
            limiter: false,
            parallel: false,
            scenario: ScenarioId::SmoothDensityWave.name().into(),
            out: PathBuf::from("out"),
            force_dt: None,
            spike_step: DEFAULT_SPIKE_STEP,
            trace: false,
            convergence: Vec::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected on/off, got '{value}'"))),
    }
}

impl RunConfig {
    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "system" => self.system = value.into(),
            "d" | "dim" => self.dim = parse(key, value)?,
            "L" | "depth" => self.depth = parse(key, value)?,
            "p" | "order" => self.order = parse(key, value)?,
            "mode" => self.mode = ModeName(value.parse().map_err(CliError::Config)?),
            "traversal" => self.traversal = value.into(),
            "boundary" => self.boundary = Some(value.into()),
            "safety" | "C_dt" => self.safety = parse(key, value)?,
            "cfl" | "CFL" => self.cfl = parse(key, value)?,
            "averaging" => self.averaging = value.into(),
            "steps" => self.steps = Some(parse(key, value)?),
            "final_time" | "T" => self.final_time = Some(parse(key, value)?),
            "limiter" => self.limiter = parse_bool(key, value)?,
            "parallel" => self.parallel = parse_bool(key, value)?,
            "scenario" => self.scenario = value.into(),
            "out" => self.out = PathBuf::from(value),
            "force_dt" => self.force_dt = Some(parse(key, value)?),
            "spike_step" => self.spike_step = parse(key, value)?,
            "trace" => self.trace = parse_bool(key, value)?,
            "convergence" => self.convergence = parse_levels(value)?,
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn load(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
        }
        Ok(())
    }

    /// Everything the solver needs, checked up front.
    pub fn validate(&self) -> Result<Validated, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(2..=3).contains(&self.dim) {
            return bad(format!("dimension {} outside the supported range 2..=3", self.dim));
        }
        if self.order > MAX_ORDER {
            return bad(format!("order p = {} outside the supported range 0..={MAX_ORDER}", self.order));
        }
        if !(1..=MAX_DEPTH).contains(&self.depth) {
            return bad(format!("depth L = {} outside the supported range 1..={MAX_DEPTH}", self.depth));
        }
        if let Some(t) = self.final_time {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("final_time {t} must be positive"));
            }
            if self.steps.is_some() {
                return bad("give either steps or final_time, not both".into());
            }
        }
        if self.steps == Some(0) {
            return bad("steps must be at least 1".into());
        }
        let system = system_by_name(&self.system, self.dim).map_err(CliError::Config)?;
        let id: ScenarioId = self.scenario.parse().map_err(CliError::Config)?;
        let scenario = Scenario::new(id, system).map_err(CliError::Config)?.with_spike_step(self.spike_step);
        let boundary = match self.boundary.as_deref() {
            None => scenario.boundary(),
            Some("periodic") => BoundaryKind::Periodic,
            Some("outflow") => BoundaryKind::Outflow,
            Some(other) => return bad(format!("unknown boundary '{other}' (periodic|outflow)")),
        };
        let traversal = match self.traversal.as_str() {
            "peano" => TraversalKind::Peano,
            "lexicographic" => TraversalKind::Lexicographic,
            other => return bad(format!("unknown traversal '{other}' (peano|lexicographic)")),
        };
        let averaging: Averaging = self.averaging.parse().map_err(CliError::Config)?;
        let sim = SimulationConfig {
            mode: self.mode.0,
            traversal,
            parallel: self.parallel,
            safety: self.safety,
            cfl: self.cfl,
            averaging,
            forced_dt: self.force_dt,
            limiter: self.limiter,
            trace: self.trace,
            force_rerun: false,
        };
        sim.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !self.convergence.is_empty() {
            if scenario.exact(&vec![0.5; self.dim], 0.0).is_none() {
                return bad(format!("scenario '{id}' has no exact solution for a convergence study"));
            }
            if let Some(&l) = self.convergence.iter().find(|&&l| !(1..=MAX_DEPTH).contains(&l)) {
                return bad(format!("convergence level {l} outside the supported range 1..={MAX_DEPTH}"));
            }
        }
        Ok(Validated { scenario, boundary, sim })
    }
}

/// Parses `1,2,3`.
pub fn parse_levels(value: &str) -> Result<Vec<usize>, CliError> {
    value.split(',').map(|v| parse("convergence", v.trim())).collect()
}

#[derive(Debug)]
pub struct Validated {
    pub scenario: Scenario,
    pub boundary: BoundaryKind,
    pub sim: SimulationConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn order_range_is_named() {
        let cfg = RunConfig { order: 12, ..Default::default() };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("0..=9"), "{msg}");
    }

    #[test]
    fn keys_and_aliases() {
        let mut cfg = RunConfig::default();
        cfg.set("p", "2").unwrap();
        cfg.set("limiter", "on").unwrap();
        cfg.set("mode", "shifted").unwrap();
        cfg.set("convergence", "1, 2,3").unwrap();
        assert_eq!(cfg.order, 2);
        assert!(cfg.limiter);
        assert_eq!(cfg.mode.0, SchedulerMode::Shifted);
        assert_eq!(cfg.convergence, vec![1, 2, 3]);
        assert!(cfg.set("colour", "blue").is_err());
        assert!(cfg.set("mode", "lazy").is_err());
    }

    #[test]
    fn conflicting_choices() {
        let cfg = RunConfig { steps: Some(3), final_time: Some(0.1), ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { system: "advection".into(), scenario: "speed-spike".into(), ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { scenario: "sod".into(), convergence: vec![1, 2], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { mode: ModeName(SchedulerMode::Shifted), parallel: true, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sod_defaults_to_outflow() {
        let cfg = RunConfig { scenario: "sod".into(), ..Default::default() };
        assert_eq!(cfg.validate().unwrap().boundary, BoundaryKind::Outflow);
    }
}
