//! Time-stepping drivers: the three-sweep baseline, the shifted scheme, and
//! the fused single-touch scheme with optimistic step sizes and reruns.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::basis::BasisError;
use crate::kernels::{self, KernelError, Operators, SpaceTimePolynomial};
use crate::limiter::{self, LimiterError, SubcellOperators};
use crate::mesh::{BoundaryKind, Grid, GridSpec, MeshError, StorageLayout, TraversalKind};
use crate::metrics::{FootprintMode, Ledger, MemoryContext, MemoryGroup, Shape, StepRecord, TaskKind, Trace};
use crate::pde::PdeSystem;

/// Default safety factor on the admissible step.
pub const DEFAULT_SAFETY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerMode {
    Straightforward,
    Shifted,
    Fused,
}

impl SchedulerMode {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerMode::Straightforward => "straightforward",
            SchedulerMode::Shifted => "shifted",
            SchedulerMode::Fused => "fused",
        }
    }

    pub fn footprint(self) -> FootprintMode {
        match self {
            SchedulerMode::Straightforward => FootprintMode::Straightforward,
            _ => FootprintMode::Fused,
        }
    }
}

impl std::str::FromStr for SchedulerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straightforward" => Ok(Self::Straightforward),
            "shifted" => Ok(Self::Shifted),
            "fused" => Ok(Self::Fused),
            other => Err(format!("unknown mode '{other}' (straightforward|shifted|fused)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// `dt_new = C dt_adm`
    Strict,
    /// `dt_new = (dt_old + C dt_adm) / 2`
    Creeping,
}

impl std::str::FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Self::Strict),
            "creeping" => Ok(Self::Creeping),
            other => Err(format!("unknown averaging '{other}' (strict|creeping)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("step {step}: {source}")]
    Kernel { step: u64, source: KernelError },
    #[error("step {step}: {source}")]
    Limiter { step: u64, source: LimiterError },
    #[error("step {step}: no admissible time step ({reason})")]
    TimeStep { step: u64, reason: String },
    #[error("step {step}: a second rerun was requested within one realisation step")]
    RerunInvariant { step: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl SimError {
    /// Failures of the numerics rather than of the set-up.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, SimError::Mesh(_) | SimError::Basis(_) | SimError::Config(_))
    }

    /// Realisation step the failure happened in, if any.
    pub fn step(&self) -> Option<u64> {
        match self {
            SimError::Kernel { step, .. }
            | SimError::Limiter { step, .. }
            | SimError::TimeStep { step, .. }
            | SimError::RerunInvariant { step } => Some(*step),
            _ => None,
        }
    }
}

/// Step-size bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControl {
    pub t: f64,
    pub dt_old: f64,
    pub dt_new: f64,
    pub dt_adm: f64,
    pub safety: f64,
    pub averaging: Averaging,
}

impl TimeControl {
    pub fn new(safety: f64, averaging: Averaging) -> Self {
        Self { t: 0.0, dt_old: 0.0, dt_new: 0.0, dt_adm: f64::INFINITY, safety, averaging }
    }

    /// Step size following `dt_old` under the averaging rule.
    pub fn next_step_size(&self, dt_old: f64) -> f64 {
        match self.averaging {
            Averaging::Strict => self.safety * self.dt_adm,
            Averaging::Creeping => 0.5 * (dt_old + self.safety * self.dt_adm),
        }
    }

    /// `dt_old <- dt_new`, then a fresh `dt_new`.
    pub fn update_time_step_sizes(&mut self) -> Result<(), String> {
        if !(self.dt_adm.is_finite() && self.dt_adm > 0.0) {
            return Err(format!("admissible step is {}", self.dt_adm));
        }
        self.dt_old = self.dt_new;
        self.dt_new = self.next_step_size(self.dt_old);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub mode: SchedulerMode,
    pub traversal: TraversalKind,
    pub parallel: bool,
    /// Safety factor `C` on the admissible step, in `(0, 1]`.
    pub safety: f64,
    pub cfl: f64,
    pub averaging: Averaging,
    /// Pins every step to this size.
    pub forced_dt: Option<f64>,
    pub limiter: bool,
    pub trace: bool,
    /// Test hook: every fused or shifted step reruns its predictions once.
    pub force_rerun: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            mode: SchedulerMode::Fused,
            traversal: TraversalKind::Peano,
            parallel: false,
            safety: DEFAULT_SAFETY,
            cfl: kernels::DEFAULT_CFL,
            averaging: Averaging::Creeping,
            forced_dt: None,
            limiter: false,
            trace: false,
            force_rerun: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(SimError::Config(format!("safety factor {} outside (0, 1]", self.safety)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SimError::Config(format!("CFL number {} outside (0, 1]", self.cfl)));
        }
        if let Some(dt) = self.forced_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(SimError::Config(format!("forced time step {dt} must be positive")));
            }
        }
        if self.parallel && self.mode == SchedulerMode::Shifted {
            return Err(SimError::Config("the shifted mode runs sequentially only".into()));
        }
        if self.parallel && self.limiter {
            return Err(SimError::Config("the limiter runs sequentially only".into()));
        }
        Ok(())
    }
}

/// Grid parameters of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub dim: usize,
    pub depth: usize,
    pub order: usize,
    pub boundary: BoundaryKind,
}

/// Per-node state modification applied after the update of one step:
/// `(position, state)`.
pub type Injection = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Summary of one realisation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub t: f64,
    pub dt_old: f64,
    pub dt_new: f64,
    pub dt_adm: f64,
    /// The step size this realisation step advanced by.
    pub dt: f64,
    pub reruns: u64,
    pub sweeps: u64,
    pub troubled: usize,
    pub wall: Duration,
    pub record: StepRecord,
}

pub struct Simulation<S: PdeSystem> {
    sys: S,
    grid: Grid,
    ops: Operators,
    sub: Option<SubcellOperators>,
    cfg: SimulationConfig,
    time: TimeControl,
    ledger: Ledger,
    trace: Trace,
    order: Vec<usize>,
    node_offsets: Vec<Vec<f64>>,
    dts: Vec<Option<f64>>,
    sweeps: u64,
    steps: u64,
    reruns: u64,
    primed: bool,
    injection: Option<(u64, Injection)>,
    troubled: usize,
}

impl<S: PdeSystem> std::fmt::Debug for Simulation<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("grid", &self.grid)
            .field("cfg", &self.cfg)
            .field("time", &self.time)
            .field("steps", &self.steps)
            .field("sweeps", &self.sweeps)
            .finish()
    }
}

impl<S: PdeSystem> Simulation<S> {
    /// Builds the grid, samples `initial` at every node and computes the
    /// first admissible step.
    pub fn new(
        sys: S,
        domain: Domain,
        cfg: SimulationConfig,
        initial: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        if sys.dim() != domain.dim {
            return Err(SimError::Config(format!(
                "system is {}-dimensional, grid is {}-dimensional",
                sys.dim(),
                domain.dim
            )));
        }
        let layout = match cfg.mode {
            SchedulerMode::Straightforward => StorageLayout {
                space_time_polynomial: true,
                update_buffer: false,
                rollback: cfg.limiter,
            },
            _ => StorageLayout { space_time_polynomial: false, update_buffer: true, rollback: cfg.limiter },
        };
        let m = sys.components();
        let spec = GridSpec::new(domain.dim, domain.depth, domain.order, m, domain.boundary).with_layout(layout);
        let grid = Grid::build(&spec)?;
        let h = grid.mesh_width();
        let ops = Operators::new(domain.dim, domain.order, m, h)?;
        let order = grid.traversal_order(&cfg.traversal)?;
        let node_offsets: Vec<Vec<f64>> = (0..ops.spatial_nodes())
            .map(|n| ops.node_position(n).into_iter().map(|x| x * h).collect())
            .collect();

        for c in 0..grid.cell_count() {
            let origin = grid.cell_origin(c);
            let mut cell = grid.cells[c].lock();
            for (n, off) in node_offsets.iter().enumerate() {
                let x: Vec<f64> = origin.iter().zip(off).map(|(o, d)| o + d).collect();
                let q = initial(&x);
                if q.len() != m {
                    return Err(SimError::Config(format!("initial state has {} components, expected {m}", q.len())));
                }
                cell.q[n * m..(n + 1) * m].copy_from_slice(&q);
            }
        }

        let sub = cfg.limiter.then(|| SubcellOperators::new(ops.basis(), domain.dim, m));
        let mut troubled = 0;
        if let Some(sub) = &sub {
            let n = sub.resolution();
            let samples: Vec<Vec<f64>> = (0..grid.cell_count())
                .map(|c| {
                    let origin = grid.cell_origin(c);
                    (0..n.pow(domain.dim as u32))
                        .flat_map(|s| {
                            let x: Vec<f64> = (0..domain.dim)
                                .map(|a| origin[a] + h * (((s / n.pow(a as u32)) % n) as f64 + 0.5) / n as f64)
                                .collect();
                            initial(&x)
                        })
                        .collect()
                })
                .collect();
            troubled = limiter::initial_troubled(&grid, &sys, sub, &samples).len();
        }

        let shape = Shape { dim: domain.dim, order: domain.order, components: m };
        let mut sim = Self {
            sys,
            grid,
            ops,
            sub,
            time: TimeControl::new(cfg.safety, cfg.averaging),
            ledger: Ledger::new(shape),
            trace: Trace::new(cfg.trace),
            order,
            node_offsets,
            dts: Vec::new(),
            sweeps: 0,
            steps: 0,
            reruns: 0,
            primed: false,
            injection: None,
            troubled,
            cfg,
        };
        sim.dts = (0..sim.grid.cell_count())
            .map(|c| kernels::calc_time_step(&sim.ops, &sim.sys, &sim.grid.cells[c].lock().q, sim.cfg.cfl))
            .collect();
        sim.time.dt_adm = sim.reduce_dt(0)?;
        if sim.cfg.mode == SchedulerMode::Straightforward {
            sim.time.dt_new = sim.cfg.forced_dt.unwrap_or(sim.time.safety * sim.time.dt_adm);
        }
        Ok(sim)
    }

    /// Adds `f` to every node right after the update of realisation step
    /// `step`.
    pub fn set_injection(&mut self, step: u64, f: Injection) {
        self.injection = Some((step, f));
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    pub fn time(&self) -> &TimeControl {
        &self.time
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn traversal(&self) -> &[usize] {
        &self.order
    }

    /// Grid sweeps so far, priming included.
    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    /// Realisation steps completed.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn reruns(&self) -> u64 {
        self.reruns
    }

    /// Cells currently handled by the subcell limiter.
    pub fn troubled_cells(&self) -> usize {
        self.troubled
    }

    /// Persistent doubles actually allocated, divided by the cell count.
    pub fn allocated_doubles_per_cell(&self) -> num_rational::Ratio<u64> {
        num_rational::Ratio::new(self.grid.allocated_doubles() as u64, self.grid.cell_count() as u64)
    }

    pub fn solution(&self) -> Vec<Vec<f64>> {
        self.grid.solution_snapshot()
    }

    /// Physical position of node `n` of `cell`.
    pub fn node_position(&self, cell: usize, n: usize) -> Vec<f64> {
        self.grid.cell_origin(cell).iter().zip(&self.node_offsets[n]).map(|(o, d)| o + d).collect()
    }

    /// Quadrature L2 norm of the difference to `exact` at the current time.
    pub fn l2_error(&self, exact: impl Fn(&[f64], f64) -> Vec<f64>) -> f64 {
        let m = self.sys.components();
        let b = self.ops.basis();
        let n1 = b.len();
        let vol = self.grid.mesh_width().powi(self.grid.dim() as i32);
        let mut sum = 0.0;
        for c in 0..self.grid.cell_count() {
            let cell = self.grid.cells[c].lock();
            for n in 0..self.ops.spatial_nodes() {
                let w: f64 = (0..self.grid.dim()).map(|a| b.weights()[(n / n1.pow(a as u32)) % n1]).product();
                let e = exact(&self.node_position(c, n), self.time.t);
                for k in 0..m {
                    let diff = cell.q[n * m + k] - e[k];
                    sum += vol * w * diff * diff;
                }
            }
        }
        sum.sqrt()
    }

    /// Runs `n` realisation steps.
    pub fn run(&mut self, n: u64) -> Result<Vec<StepReport>, SimError> {
        (0..n).map(|_| self.step()).collect()
    }

    /// Advances one realisation step in the configured mode.
    pub fn step(&mut self) -> Result<StepReport, SimError> {
        let start = Instant::now();
        let step = self.steps + 1;
        let sweeps_before = self.sweeps;
        let (dt, reruns) = match self.cfg.mode {
            SchedulerMode::Straightforward => (self.step_straightforward(step)?, 0),
            SchedulerMode::Shifted | SchedulerMode::Fused => self.step_shifted_or_fused(step)?,
        };
        let mut sweeps = self.sweeps - sweeps_before;
        if step == 1 && self.cfg.mode != SchedulerMode::Straightforward {
            sweeps -= 1;
        }
        self.steps = step;
        self.reruns += reruns;
        let record = self.ledger.close_step(step, sweeps, reruns);
        Ok(StepReport {
            step,
            t: self.time.t,
            dt_old: self.time.dt_old,
            dt_new: self.time.dt_new,
            dt_adm: self.time.dt_adm,
            dt,
            reruns,
            sweeps,
            troubled: self.troubled,
            wall: start.elapsed(),
            record,
        })
    }

    fn forced_or(&self, dt: f64) -> f64 {
        self.cfg.forced_dt.unwrap_or(dt)
    }

    fn rollover(&mut self, step: u64) -> Result<(), SimError> {
        self.time.update_time_step_sizes().map_err(|reason| SimError::TimeStep { step, reason })?;
        if let Some(dt) = self.cfg.forced_dt {
            if self.primed {
                self.time.dt_old = dt;
            }
            self.time.dt_new = dt;
        }
        Ok(())
    }

    fn step_straightforward(&mut self, step: u64) -> Result<f64, SimError> {
        let dt = self.time.dt_new;
        let cold = MemoryContext::default();

        let sweep = self.open_sweep();
        if self.cfg.parallel {
            self.order.par_iter().try_for_each(|&c| self.stp(c, dt, step, sweep, cold))?;
        } else {
            for &c in &self.order {
                self.stp(c, dt, step, sweep, cold)?;
            }
        }
        self.close_sweep();

        let sweep = self.open_sweep();
        if self.cfg.parallel {
            (0..self.grid.face_count()).into_par_iter().try_for_each(|f| {
                if self.claim(f, step)? {
                    self.solve(f, step, sweep)?;
                }
                Ok::<_, SimError>(())
            })?;
        } else {
            for &c in &self.order {
                for &f in self.grid.cell_faces(c) {
                    if self.claim(f, step)? {
                        self.solve(f, step, sweep)?;
                    }
                }
            }
        }
        self.close_sweep();

        let sweep = self.open_sweep();
        let dts: Vec<(usize, Option<f64>)> = if self.cfg.parallel {
            self.order
                .par_iter()
                .map(|&c| self.corrector(c, dt, step, sweep, cold).map(|d| (c, d)))
                .collect::<Result<_, _>>()?
        } else {
            let mut v = Vec::with_capacity(self.order.len());
            for &c in &self.order {
                v.push((c, self.corrector(c, dt, step, sweep, cold)?));
            }
            v
        };
        self.close_sweep();
        for (c, d) in dts {
            self.dts[c] = d;
        }
        self.apply_limiter(step, dt, None)?;
        self.time.t += dt;
        self.time.dt_adm = self.reduce_dt(step)?;
        self.time.dt_old = dt;
        self.time.dt_new = self.forced_or(self.time.safety * self.time.dt_adm);
        Ok(dt)
    }

    /// Returns the step size used and the number of reruns.
    fn step_shifted_or_fused(&mut self, step: u64) -> Result<(f64, u64), SimError> {
        let fused = self.cfg.mode == SchedulerMode::Fused;
        if !self.primed {
            self.rollover(step)?;
            self.primed = true;
            // the degenerate Riemann/Corrector pass with dt_old = 0 is the
            // identity, so the priming sweep only predicts
            let sweep = self.open_sweep();
            let dt = self.time.dt_new;
            for &c in &self.order {
                self.stp(c, dt, step, sweep, MemoryContext::default())?;
            }
            self.close_sweep();
            self.ledger.close_priming();
        }

        let mut reruns = 0;
        if self.cfg.force_rerun || (self.cfg.forced_dt.is_none() && self.time.dt_adm < self.time.dt_new) {
            if self.cfg.forced_dt.is_none() {
                let dt = self.time.safety * self.time.dt_adm;
                self.time.dt_old = dt;
                self.time.dt_new = dt;
            }
            let sweep = self.open_sweep();
            let dt = self.time.dt_new;
            if self.cfg.parallel {
                self.order.par_iter().try_for_each(|&c| self.stp(c, dt, step, sweep, MemoryContext::default()))?;
            } else {
                for &c in &self.order {
                    self.stp(c, dt, step, sweep, MemoryContext::default())?;
                }
            }
            self.close_sweep();
            reruns = 1;
            if self.cfg.forced_dt.is_none() && self.time.dt_adm < self.time.dt_new {
                return Err(SimError::RerunInvariant { step });
            }
        }

        self.rollover(step)?;
        let (dt_old, dt_new) = (self.time.dt_old, self.time.dt_new);
        let sweep = self.open_sweep();
        if fused {
            let hot = MemoryContext { faces_resident: true, solution_resident: true };
            let dts: Vec<(usize, Option<f64>)> = if self.cfg.parallel {
                self.order
                    .par_iter()
                    .map(|&c| self.fused_cell(c, dt_old, dt_new, step, sweep, hot).map(|d| (c, d)))
                    .collect::<Result<_, _>>()?
            } else {
                let mut v = Vec::with_capacity(self.order.len());
                for &c in &self.order {
                    v.push((c, self.fused_cell(c, dt_old, dt_new, step, sweep, hot)?));
                }
                v
            };
            self.close_sweep();
            for (c, d) in dts {
                self.dts[c] = d;
            }
            self.apply_limiter(step, dt_old, Some(dt_new))?;
        } else {
            let ctx = MemoryContext { faces_resident: true, solution_resident: false };
            for &c in &self.order {
                self.solve_faces_of(c, step, sweep)?;
                self.dts[c] = self.corrector(c, dt_old, step, sweep, ctx)?;
            }
            self.apply_limiter(step, dt_old, None)?;
            for &c in &self.order {
                self.stp(c, dt_new, step + 1, sweep, ctx)?;
            }
            self.close_sweep();
        }
        self.time.t += dt_old;
        self.time.dt_adm = self.reduce_dt(step)?;
        Ok((dt_old, reruns))
    }

    fn fused_cell(
        &self,
        c: usize,
        dt_old: f64,
        dt_new: f64,
        step: u64,
        sweep: u64,
        ctx: MemoryContext,
    ) -> Result<Option<f64>, SimError> {
        self.solve_faces_of(c, step, sweep)?;
        let d = self.corrector(c, dt_old, step, sweep, ctx)?;
        self.stp(c, dt_new, step + 1, sweep, ctx)?;
        Ok(d)
    }

    fn open_sweep(&mut self) -> u64 {
        self.grid.begin_sweep();
        let s = self.sweeps;
        self.sweeps += 1;
        s
    }

    fn close_sweep(&self) {
        self.grid.end_sweep();
    }

    fn claim(&self, f: usize, step: u64) -> Result<bool, SimError> {
        self.grid.claim_first_touch(f).map_err(|e| SimError::Kernel {
            step,
            source: KernelError::SchedulingOrder(e.to_string()),
        })
    }

    /// Touch-first: solves every face of `c` nobody has claimed yet and
    /// waits for faces another executor is solving.
    fn solve_faces_of(&self, c: usize, step: u64, sweep: u64) -> Result<(), SimError> {
        for &f in self.grid.cell_faces(c) {
            if self.claim(f, step)? {
                self.solve(f, step, sweep)?;
            } else {
                while !self.grid.is_solved(f) {
                    std::thread::yield_now();
                }
            }
        }
        Ok(())
    }

    fn solve(&self, f: usize, step: u64, sweep: u64) -> Result<(), SimError> {
        let slot = &self.grid.faces[f];
        {
            let mut hull = slot.hull.lock();
            kernels::solve_riemann(&self.ops, &self.sys, slot.face.axis, &mut hull, step)
                .map_err(|source| SimError::Kernel { step, source })?;
        }
        self.grid.mark_solved(f);
        self.ledger.task(TaskKind::SolveRiemann);
        self.ledger.memory(MemoryGroup::Riemann, MemoryContext::default());
        self.trace.push(sweep, step, TaskKind::SolveRiemann, f);
        Ok(())
    }

    fn record(&self, sweep: u64, step: u64, task: TaskKind, c: usize) {
        self.ledger.task(task);
        self.trace.push(sweep, step, task, c);
    }

    /// predict, extrapolate and (outside the baseline) integrateVolume.
    fn stp(&self, c: usize, dt: f64, step: u64, sweep: u64, ctx: MemoryContext) -> Result<(), SimError> {
        let mut cell = self.grid.cells[c].lock();
        let mut fell_back = false;
        let mut poly = match kernels::predict(&self.ops, &self.sys, &cell.q, dt, c) {
            Ok(p) => p,
            Err(e) if !self.cfg.limiter => return Err(SimError::Kernel { step, source: e }),
            Err(_) => {
                fell_back = true;
                self.mean_prediction(&cell.q, dt)
            }
        };
        self.record(sweep, step, TaskKind::Predict, c);
        let mut traces = kernels::extrapolate(&self.ops, &poly);
        if self.cfg.limiter && !fell_back {
            let m = self.sys.components();
            let ok = poly.q.chunks_exact(m).all(|s| self.sys.is_admissible(s))
                && traces.iter().all(|t| t.q.chunks_exact(m).all(|s| self.sys.is_admissible(s)));
            if !ok {
                fell_back = true;
                poly = self.mean_prediction(&cell.q, dt);
                traces = kernels::extrapolate(&self.ops, &poly);
            }
        }
        if fell_back {
            cell.fallback_step = Some(step);
        }
        self.record(sweep, step, TaskKind::Extrapolate, c);
        for t in &traces {
            let f = self.grid.cell_face(c, t.axis, t.end);
            let slot = &self.grid.faces[f];
            let own = if t.end == 1 { 0 } else { 1 };
            let mut hull = slot.hull.lock();
            kernels::store_trace(&mut hull.sides[own], t, step);
            if slot.face.is_boundary() {
                kernels::store_ghost(&mut hull.sides[1 - own], t, step);
            }
        }
        if self.cfg.mode == SchedulerMode::Straightforward {
            cell.poly = Some(poly);
        } else {
            kernels::integrate_volume(&self.ops, &poly, &mut cell.update);
            self.record(sweep, step, TaskKind::IntegrateVolume, c);
        }
        self.ledger.memory(MemoryGroup::Stp, ctx);
        Ok(())
    }

    fn mean_prediction(&self, q: &[f64], dt: f64) -> SpaceTimePolynomial {
        let m = self.sys.components();
        let b = self.ops.basis();
        let n1 = b.len();
        let mut mean = vec![0.0; m];
        for n in 0..self.ops.spatial_nodes() {
            let w: f64 = (0..self.grid.dim()).map(|a| b.weights()[(n / n1.pow(a as u32)) % n1]).product();
            for k in 0..m {
                mean[k] += w * q[n * m + k];
            }
        }
        kernels::constant_prediction(&self.ops, &self.sys, &mean, dt)
    }

    /// integrateFace, update and calcTimeStep (plus integrateVolume in the
    /// baseline). Returns the admissible step, `None` if troubled.
    fn corrector(&self, c: usize, dt: f64, step: u64, sweep: u64, ctx: MemoryContext) -> Result<Option<f64>, SimError> {
        let mut guard = self.grid.cells[c].lock();
        let cell = &mut *guard;
        let mut delta = match &cell.poly {
            Some(poly) if self.cfg.mode == SchedulerMode::Straightforward => {
                let mut d = vec![0.0; cell.q.len()];
                kernels::integrate_volume(&self.ops, poly, &mut d);
                self.record(sweep, step, TaskKind::IntegrateVolume, c);
                d
            }
            _ => std::mem::take(&mut cell.update),
        };
        for a in 0..self.grid.dim() {
            for end in 0..2 {
                let f = self.grid.cell_face(c, a, end);
                let hull = self.grid.faces[f].hull.lock();
                let own = if end == 1 { 0 } else { 1 };
                kernels::integrate_hull_face(&self.ops, &hull, own, a, end, step, dt, &mut delta)
                    .map_err(|source| SimError::Kernel { step, source })?;
            }
        }
        self.record(sweep, step, TaskKind::IntegrateFace, c);
        let previous = if cell.previous.is_empty() { None } else { Some(cell.previous.as_mut_slice()) };
        kernels::update(&mut cell.q, &delta, previous);
        if self.cfg.mode != SchedulerMode::Straightforward {
            cell.update = delta;
        }
        self.record(sweep, step, TaskKind::Update, c);
        if let Some((at, f)) = &self.injection {
            if *at == step {
                let m = self.sys.components();
                for n in 0..self.ops.spatial_nodes() {
                    f(&self.node_position(c, n), &mut cell.q[n * m..(n + 1) * m]);
                }
            }
        }
        let d = kernels::calc_time_step(&self.ops, &self.sys, &cell.q, self.cfg.cfl);
        self.record(sweep, step, TaskKind::CalcTimeStep, c);
        self.ledger.memory(MemoryGroup::Corrector, ctx);
        Ok(d)
    }

    /// Runs the subcell limiter after the correctors of `step`; in the fused
    /// mode the limited cells then predict again with `restp`.
    fn apply_limiter(&mut self, step: u64, dt: f64, restp: Option<f64>) -> Result<(), SimError> {
        let Some(sub) = &self.sub else { return Ok(()) };
        let forced: Vec<usize> = (0..self.grid.cell_count())
            .filter(|&c| {
                let cell = self.grid.cells[c].lock();
                self.dts[c].is_none() || cell.fallback_step == Some(step)
            })
            .collect();
        let report = limiter::limit_step(&self.grid, &self.sys, sub, dt, self.cfg.cfl, &forced)
            .map_err(|source| SimError::Limiter { step, source })?;
        self.ledger.limiter_cells(report.limited.len() as u64);
        self.troubled = report.troubled.len();
        for &c in &report.limited {
            let q = self.grid.cells[c].lock().q.clone();
            self.dts[c] = kernels::calc_time_step(&self.ops, &self.sys, &q, self.cfg.cfl);
        }
        if let Some(dt_new) = restp {
            let sweep = self.sweeps.saturating_sub(1);
            for &c in &report.limited {
                self.stp(c, dt_new, step + 1, sweep, MemoryContext::default())?;
            }
        }
        Ok(())
    }

    /// Exact minimum over the per-cell admissible steps.
    fn reduce_dt(&self, step: u64) -> Result<f64, SimError> {
        let mut min = f64::INFINITY;
        for (c, d) in self.dts.iter().enumerate() {
            match d {
                Some(v) => min = min.min(*v),
                None => {
                    return Err(SimError::TimeStep { step, reason: format!("cell {c} is inadmissible") });
                }
            }
        }
        if !(min.is_finite() && min > 0.0) {
            return Err(SimError::TimeStep { step, reason: format!("admissible step is {min}") });
        }
        Ok(min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_rules() {
        let mut t = TimeControl::new(0.99, Averaging::Strict);
        t.dt_adm = 0.1;
        t.update_time_step_sizes().unwrap();
        assert!((t.dt_new - 0.099).abs() < 1e-15);

        let mut t = TimeControl::new(0.9, Averaging::Creeping);
        t.dt_adm = 0.1;
        assert!((t.next_step_size(0.08) - 0.085).abs() < 1e-15);

        // creeping converges monotonically to C dt_adm
        let mut t = TimeControl::new(0.9, Averaging::Creeping);
        t.dt_adm = 0.1;
        let mut prev = 0.0;
        for _ in 0..60 {
            t.update_time_step_sizes().unwrap();
            assert!(t.dt_new >= prev && t.dt_new <= 0.09 + 1e-15);
            prev = t.dt_new;
        }
        assert!((prev - 0.09).abs() < 1e-15);

        t.dt_adm = f64::NAN;
        assert!(t.update_time_step_sizes().is_err());
        t.dt_adm = 0.0;
        assert!(t.update_time_step_sizes().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimulationConfig { mode: SchedulerMode::Shifted, parallel: true, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.parallel = false;
        assert!(cfg.validate().is_ok());
        cfg.safety = 1.5;
        assert!(cfg.validate().is_err());
        cfg.safety = 0.5;
        cfg.forced_dt = Some(-1.0);
        assert!(cfg.validate().is_err());
    }
}
