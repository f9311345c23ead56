//! Deterministic initial conditions, exact solutions and the convergence
//! study driver.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::mesh::BoundaryKind;
use crate::pde::{Advection, Euler, PdeSystem, System};
use crate::scheduler::{Domain, Injection, SimError, Simulation, SimulationConfig};

/// Realisation step after whose update the speed spike is injected.
pub const DEFAULT_SPIKE_STEP: u64 = 5;

/// Amplitude of the injected velocity bump.
pub const SPIKE_AMPLITUDE: f64 = 0.6;

const BACKGROUND_SPEED: f64 = 0.5;
const GAUSSIAN_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioId {
    Uniform,
    SmoothDensityWave,
    GaussianAdvect,
    Sod,
    SpeedSpike,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [
        ScenarioId::Uniform,
        ScenarioId::SmoothDensityWave,
        ScenarioId::GaussianAdvect,
        ScenarioId::Sod,
        ScenarioId::SpeedSpike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Uniform => "uniform",
            ScenarioId::SmoothDensityWave => "smooth-density-wave",
            ScenarioId::GaussianAdvect => "gaussian-advect",
            ScenarioId::Sod => "sod",
            ScenarioId::SpeedSpike => "speed-spike",
        }
    }

    /// Outflow for the shock tube, periodic otherwise.
    pub fn default_boundary(self) -> BoundaryKind {
        match self {
            ScenarioId::Sod => BoundaryKind::Outflow,
            _ => BoundaryKind::Periodic,
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|id| id.name()).collect();
            format!("unknown scenario '{s}' ({})", names.join("|"))
        })
    }
}

/// Advection velocity used when none is configured.
pub fn default_velocity(dim: usize) -> Vec<f64> {
    [1.0, 0.5, 0.25][..dim].to_vec()
}

/// `euler` or `advection` in `dim` dimensions.
pub fn system_by_name(name: &str, dim: usize) -> Result<System, String> {
    if !(1..=3).contains(&dim) {
        return Err(format!("dimension {dim} outside 1..=3"));
    }
    match name {
        "euler" => Ok(System::Euler(Euler::new(dim))),
        "advection" => Ok(System::Advection(Advection::new(default_velocity(dim)))),
        other => Err(format!("unknown system '{other}' (euler|advection)")),
    }
}

fn wave(x: &[f64]) -> f64 {
    (2.0 * PI * x.iter().sum::<f64>()).sin()
}

fn gaussian(x: &[f64]) -> f64 {
    let r2: f64 = x
        .iter()
        .map(|xi| {
            let d = (xi - 0.5 + 0.5).rem_euclid(1.0) - 0.5;
            d * d
        })
        .sum();
    (-r2 / (2.0 * GAUSSIAN_WIDTH * GAUSSIAN_WIDTH)).exp()
}

/// Initial data plus (where available) the exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub system: System,
    pub spike_step: u64,
}

impl Scenario {
    pub fn new(id: ScenarioId, system: System) -> Result<Self, String> {
        if id == ScenarioId::SpeedSpike && matches!(system, System::Advection(_)) {
            return Err("speed-spike needs the euler system".into());
        }
        Ok(Self { id, system, spike_step: DEFAULT_SPIKE_STEP })
    }

    pub fn with_spike_step(mut self, step: u64) -> Self {
        self.spike_step = step;
        self
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.id.default_boundary()
    }

    /// Scalar profile carried by the advection system and by the Euler
    /// density.
    fn profile(&self, x: &[f64]) -> f64 {
        match self.id {
            ScenarioId::Uniform => 1.0,
            ScenarioId::SmoothDensityWave | ScenarioId::SpeedSpike => wave(x),
            ScenarioId::GaussianAdvect => gaussian(x),
            ScenarioId::Sod => {
                if x[0] < 0.5 {
                    1.0
                } else {
                    0.125
                }
            }
        }
    }

    pub fn initial(&self, x: &[f64]) -> Vec<f64> {
        match &self.system {
            System::Advection(_) => vec![self.profile(x)],
            System::Euler(e) => {
                let d = e.dim();
                match self.id {
                    ScenarioId::Uniform => e.conserved(1.0, &vec![0.0; d], 1.0),
                    ScenarioId::SmoothDensityWave | ScenarioId::SpeedSpike => {
                        e.conserved(1.0 + 0.2 * wave(x), &vec![BACKGROUND_SPEED; d], 1.0)
                    }
                    ScenarioId::GaussianAdvect => {
                        e.conserved(1.0 + 0.5 * gaussian(x), &vec![BACKGROUND_SPEED; d], 1.0)
                    }
                    ScenarioId::Sod => {
                        let (rho, p) = if x[0] < 0.5 { (1.0, 1.0) } else { (0.125, 0.1) };
                        e.conserved(rho, &vec![0.0; d], p)
                    }
                }
            }
        }
    }

    /// Exact solution on the periodic unit cube; `None` for the shock tube
    /// and once the spike has been injected.
    pub fn exact(&self, x: &[f64], t: f64) -> Option<Vec<f64>> {
        match (&self.system, self.id) {
            (_, ScenarioId::Sod) | (_, ScenarioId::SpeedSpike) => None,
            (System::Advection(a), _) => Some(vec![a.exact(|y| self.profile(y), x, t)]),
            (System::Euler(_), ScenarioId::Uniform) => Some(self.initial(x)),
            (System::Euler(_), _) => {
                let back: Vec<f64> = x.iter().map(|xi| (xi - BACKGROUND_SPEED * t).rem_euclid(1.0)).collect();
                Some(self.initial(&back))
            }
        }
    }

    /// Velocity bump along the first axis, keeping density and pressure.
    pub fn injection(&self) -> Option<(u64, Injection)> {
        if self.id != ScenarioId::SpeedSpike {
            return None;
        }
        let System::Euler(e) = self.system.clone() else { return None };
        let f: Injection = Box::new(move |x: &[f64], q: &mut [f64]| {
            let d = e.dim();
            let rho = q[0];
            let Ok(p) = e.pressure(q) else { return };
            let mut u: Vec<f64> = q[1..=d].iter().map(|j| j / rho).collect();
            u[0] += SPIKE_AMPLITUDE * gaussian(x);
            q.copy_from_slice(&e.conserved(rho, &u, p));
        });
        Some((self.spike_step, f))
    }

    /// Builds a simulation of this scenario, injection included.
    pub fn simulation(&self, depth: usize, order: usize, cfg: SimulationConfig) -> Result<Simulation<System>, SimError> {
        let domain = Domain { dim: self.system.dim(), depth, order, boundary: self.boundary() };
        let mut sim = Simulation::new(self.system.clone(), domain, cfg, |x| self.initial(x))?;
        if let Some((step, f)) = self.injection() {
            sim.set_injection(step, f);
        }
        Ok(sim)
    }
}

/// Template of a convergence study on the periodic unit cube.
pub struct StudyTemplate<'a> {
    pub system: System,
    pub order: usize,
    pub final_time: f64,
    pub safety: f64,
    pub initial: &'a (dyn Fn(&[f64]) -> Vec<f64> + Sync),
    pub exact: &'a (dyn Fn(&[f64], f64) -> Vec<f64> + Sync),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub depth: usize,
    pub cells: usize,
    pub h: f64,
    pub steps: u64,
    pub dt: f64,
    pub error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
}

/// Runs the template on each level with a forced uniform step `T / N`, `N`
/// the smallest count respecting `safety` times the initial admissible step.
pub fn convergence_study(template: &StudyTemplate<'_>, levels: &[usize]) -> Result<Vec<ConvergenceLevel>, SimError> {
    let mut out: Vec<ConvergenceLevel> = Vec::with_capacity(levels.len());
    for &depth in levels {
        let domain = Domain {
            dim: template.system.dim(),
            depth,
            order: template.order,
            boundary: BoundaryKind::Periodic,
        };
        let probe = Simulation::new(template.system.clone(), domain, SimulationConfig::default(), template.initial)?;
        let limit = template.safety * probe.time().dt_adm;
        let cells = probe.grid().cell_count();
        let h = probe.grid().mesh_width();
        drop(probe);
        let steps = (template.final_time / limit).ceil().max(1.0) as u64;
        let dt = template.final_time / steps as f64;
        let cfg = SimulationConfig { forced_dt: Some(dt), ..SimulationConfig::default() };
        let mut sim = Simulation::new(template.system.clone(), domain, cfg, template.initial)?;
        sim.run(steps)?;
        let error = sim.l2_error(template.exact);
        let order = out.last().map(|prev| (prev.error / error).ln() / (prev.h / h).ln());
        out.push(ConvergenceLevel { depth, cells, h, steps, dt, error, order });
    }
    Ok(out)
}
