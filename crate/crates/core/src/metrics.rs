//! Access ledger, closed-form footprint and traffic models, and trace
//! analytics.
//!
//! The ledger keeps two views of the same run:
//! - the *task* view charges every kernel invocation with the doubles it
//!   logically reads and writes (one fixed charge per task kind);
//! - the *memory* view charges the main-memory traffic a cache model sees,
//!   grouped by STP / Riemann / Corrector, with reads dropped when the
//!   schedule keeps the input resident (see [`MemoryContext`]).

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_rational::Ratio;
use parking_lot::Mutex;
use thiserror::Error;

use crate::mesh::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskKind {
    Predict,
    Extrapolate,
    SolveRiemann,
    IntegrateVolume,
    IntegrateFace,
    Update,
    CalcTimeStep,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Predict,
        TaskKind::Extrapolate,
        TaskKind::SolveRiemann,
        TaskKind::IntegrateVolume,
        TaskKind::IntegrateFace,
        TaskKind::Update,
        TaskKind::CalcTimeStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Predict => "predict",
            TaskKind::Extrapolate => "extrapolate",
            TaskKind::SolveRiemann => "solveRiemann",
            TaskKind::IntegrateVolume => "integrateVolume",
            TaskKind::IntegrateFace => "integrateFace",
            TaskKind::Update => "update",
            TaskKind::CalcTimeStep => "calcTimeStep",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Coarse phase for concurrency analysis. `integrateVolume` has no
    /// phase of its own: it runs inside whichever phase the scheduler put
    /// it in.
    pub fn phase(self) -> Option<Phase> {
        match self {
            TaskKind::Predict | TaskKind::Extrapolate => Some(Phase::Stp),
            TaskKind::SolveRiemann => Some(Phase::Riemann),
            TaskKind::IntegrateFace | TaskKind::Update | TaskKind::CalcTimeStep => Some(Phase::Corrector),
            TaskKind::IntegrateVolume => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Stp,
    Riemann,
    Corrector,
}

/// Problem size a ledger is charged for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub dim: usize,
    pub order: usize,
    pub components: usize,
}

impl Shape {
    /// `m (p+1)^d`
    pub fn block(&self) -> u64 {
        (self.components * (self.order + 1).pow(self.dim as u32)) as u64
    }

    /// Per-invocation `(in, out)` doubles of each task.
    ///
    /// `solveRiemann` is charged per face; on a periodic grid (d faces per
    /// cell) that sums to `4d B` in and `2d B` out per cell.
    pub fn task_charge(&self, task: TaskKind) -> (u64, u64) {
        let b = self.block();
        let d = self.dim as u64;
        let st = (self.order as u64 + 1) * b;
        match task {
            TaskKind::Predict => (b, (d + 1) * st),
            TaskKind::Extrapolate => ((d + 1) * st, 4 * d * b),
            TaskKind::SolveRiemann => (4 * b, 2 * b),
            TaskKind::IntegrateVolume => (d * st, b),
            TaskKind::IntegrateFace => (2 * d * b, b),
            TaskKind::Update => (b, b),
            TaskKind::CalcTimeStep => (b, 1),
        }
    }
}

/// Which inputs the schedule keeps cache-resident for a task group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MemoryContext {
    /// The cell's faces were solved in the same touch-first pass that runs
    /// its corrector, so their Riemann output is still in cache.
    pub faces_resident: bool,
    /// The STP directly follows the cell's own update.
    pub solution_resident: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemoryGroup {
    /// Per face.
    Riemann,
    /// Per cell.
    Corrector,
    /// Per cell.
    Stp,
}

/// Main-memory `(reads, writes, solution reads)` of one task group.
///
/// Riemann moves `8B` in and `4B` out per face. The corrector reads the
/// solution and, unless resident, the `2d` Riemann blocks; it writes the
/// solution. The STP reads the solution unless resident and writes the
/// `4d B` hull plus the `B` volume seed.
pub fn memory_charge(shape: Shape, group: MemoryGroup, ctx: MemoryContext) -> (u64, u64, u64) {
    let b = shape.block();
    let d = shape.dim as u64;
    match group {
        MemoryGroup::Riemann => (8 * b, 4 * b, 0),
        MemoryGroup::Corrector => {
            let faces = if ctx.faces_resident { 0 } else { 2 * d * b };
            (faces + b, b, 1)
        }
        MemoryGroup::Stp => {
            if ctx.solution_resident {
                (0, (4 * d + 1) * b, 0)
            } else {
                (b, (4 * d + 1) * b, 1)
            }
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    calls: [AtomicU64; 7],
    reads: [AtomicU64; 7],
    writes: [AtomicU64; 7],
    mem_reads: AtomicU64,
    mem_writes: AtomicU64,
    q_reads: AtomicU64,
    limiter_cells: AtomicU64,
}

impl Counters {
    fn take(&self) -> Totals {
        let grab = |a: &AtomicU64| a.swap(0, Ordering::AcqRel);
        let mut t = Totals::default();
        for i in 0..7 {
            t.calls[i] = grab(&self.calls[i]);
            t.reads[i] = grab(&self.reads[i]);
            t.writes[i] = grab(&self.writes[i]);
        }
        t.memory_reads = grab(&self.mem_reads);
        t.memory_writes = grab(&self.mem_writes);
        t.q_reads = grab(&self.q_reads);
        t.limiter_cells = grab(&self.limiter_cells);
        t
    }
}

/// Counter snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Totals {
    pub calls: [u64; 7],
    pub reads: [u64; 7],
    pub writes: [u64; 7],
    pub memory_reads: u64,
    pub memory_writes: u64,
    /// Cell-solution loads from memory (one per cell per load).
    pub q_reads: u64,
    /// Cells handled by the subcell limiter.
    pub limiter_cells: u64,
}

impl Totals {
    pub fn task_calls(&self, t: TaskKind) -> u64 {
        self.calls[t.index()]
    }

    pub fn task_reads(&self, t: TaskKind) -> u64 {
        self.reads[t.index()]
    }

    pub fn task_writes(&self, t: TaskKind) -> u64 {
        self.writes[t.index()]
    }

    pub fn memory_traffic(&self) -> u64 {
        self.memory_reads + self.memory_writes
    }

    fn add(&mut self, o: &Totals) {
        for i in 0..7 {
            self.calls[i] += o.calls[i];
            self.reads[i] += o.reads[i];
            self.writes[i] += o.writes[i];
        }
        self.memory_reads += o.memory_reads;
        self.memory_writes += o.memory_writes;
        self.q_reads += o.q_reads;
        self.limiter_cells += o.limiter_cells;
    }
}

/// One closed realisation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub sweeps: u64,
    pub reruns: u64,
    pub totals: Totals,
}

/// Contention-safe traffic accumulator.
#[derive(Debug)]
pub struct Ledger {
    shape: Shape,
    current: Counters,
    steps: Mutex<Vec<StepRecord>>,
    priming: Mutex<Totals>,
}

impl Ledger {
    pub fn new(shape: Shape) -> Self {
        Self {
            shape,
            current: Counters::default(),
            steps: Mutex::new(Vec::new()),
            priming: Mutex::new(Totals::default()),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn task(&self, t: TaskKind) {
        let (r, w) = self.shape.task_charge(t);
        let i = t.index();
        self.current.calls[i].fetch_add(1, Ordering::Relaxed);
        self.current.reads[i].fetch_add(r, Ordering::Relaxed);
        self.current.writes[i].fetch_add(w, Ordering::Relaxed);
    }

    pub fn memory(&self, group: MemoryGroup, ctx: MemoryContext) {
        let (r, w, q) = memory_charge(self.shape, group, ctx);
        self.current.mem_reads.fetch_add(r, Ordering::Relaxed);
        self.current.mem_writes.fetch_add(w, Ordering::Relaxed);
        self.current.q_reads.fetch_add(q, Ordering::Relaxed);
    }

    pub fn limiter_cells(&self, n: u64) {
        self.current.limiter_cells.fetch_add(n, Ordering::Relaxed);
    }

    /// Moves everything counted since the last close into a step record.
    pub fn close_step(&self, step: u64, sweeps: u64, reruns: u64) -> StepRecord {
        let rec = StepRecord { step, sweeps, reruns, totals: self.current.take() };
        self.steps.lock().push(rec.clone());
        rec
    }

    /// Moves the counters into the priming bucket, which is not a
    /// realisation step.
    pub fn close_priming(&self) {
        let t = self.current.take();
        self.priming.lock().add(&t);
    }

    pub fn steps(&self) -> Vec<StepRecord> {
        self.steps.lock().clone()
    }

    pub fn priming(&self) -> Totals {
        *self.priming.lock()
    }

    /// Sum over all closed steps.
    pub fn totals(&self) -> Totals {
        let mut t = Totals::default();
        for s in self.steps.lock().iter() {
            t.add(&s.totals);
        }
        t
    }
}

/// Persistent doubles per cell of a scheduler family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FootprintMode {
    /// Keeps the space-time polynomial between sweeps, no update buffer.
    Straightforward,
    /// Keeps only the solution, the update buffer and the hull.
    Fused,
}

pub fn persistent_footprint(mode: FootprintMode, dim: usize, order: usize, components: usize) -> u64 {
    let b = Shape { dim, order, components }.block();
    let d = dim as u64;
    match mode {
        FootprintMode::Straightforward => (d + 1) * (order as u64 + 1) * b + (1 + 6 * d) * b,
        FootprintMode::Fused => (2 + 6 * d) * b,
    }
}

/// Fused over straightforward footprint, `(2+6d) / ((d+1)(p+1) + 1 + 6d)`.
pub fn footprint_ratio(dim: usize, order: usize) -> Ratio<u64> {
    let d = dim as u64;
    Ratio::new(2 + 6 * d, (d + 1) * (order as u64 + 1) + 1 + 6 * d)
}

/// Expected memory-view doubles per cell per realisation step.
///
/// `c_rerun` is the mean number of STP executions per step.
pub fn traffic_model(mode: FootprintMode, dim: usize, order: usize, components: usize, c_rerun: f64) -> f64 {
    let b = Shape { dim, order, components }.block() as f64;
    let d = dim as f64;
    match mode {
        FootprintMode::Straightforward => (18.0 * d + 4.0) * b,
        FootprintMode::Fused => ((4.0 * d + 2.0) * c_rerun + 12.0 * d + 1.0) * b,
    }
}

/// Integer form of [`traffic_model`] for a whole number of STP passes.
pub fn traffic_model_exact(mode: FootprintMode, dim: usize, order: usize, components: usize, stp_passes: u64) -> u64 {
    let b = Shape { dim, order, components }.block();
    let d = dim as u64;
    match mode {
        FootprintMode::Straightforward => (18 * d + 4) * b,
        FootprintMode::Fused => ((4 * d + 2) * stp_passes + 12 * d + 1) * b,
    }
}

/// Largest `C_rerun` for which fused time stepping still beats the
/// three-sweep scheme: `1 + (T_3 C - T_f) / T_stp`.
pub fn rerun_upper_bound(t_three_steps: f64, t_stp: f64, t_fused: f64, safety: f64) -> f64 {
    1.0 + (t_three_steps * safety - t_fused) / t_stp
}

/// Amortised cell-solution loads per cell per realisation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleTouchAudit {
    pub q_reads: u64,
    pub cells: u64,
    pub steps: u64,
    pub per_cell_step: Ratio<u64>,
    pub c_rerun: Ratio<u64>,
}

impl SingleTouchAudit {
    pub fn as_f64(&self) -> f64 {
        *self.per_cell_step.numer() as f64 / *self.per_cell_step.denom() as f64
    }
}

/// `None` when no step has been closed.
pub fn single_touch_audit(ledger: &Ledger, cells: usize) -> Option<SingleTouchAudit> {
    let steps = ledger.steps();
    if steps.is_empty() || cells == 0 {
        return None;
    }
    let n = steps.len() as u64;
    let q_reads: u64 = steps.iter().map(|s| s.totals.q_reads).sum();
    let reruns: u64 = steps.iter().map(|s| s.reruns).sum();
    Some(SingleTouchAudit {
        q_reads,
        cells: cells as u64,
        steps: n,
        per_cell_step: Ratio::new(q_reads, cells as u64 * n),
        c_rerun: Ratio::new(n + reruns, n),
    })
}

/// One executed task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskRecord {
    pub sweep: u64,
    /// Realisation step the task belongs to.
    pub step: u64,
    pub task: TaskKind,
    /// Cell index, or face index for `solveRiemann`.
    pub entity: usize,
}

/// Ordered task log; disabled traces drop records.
#[derive(Debug, Default)]
pub struct Trace {
    enabled: bool,
    records: Mutex<Vec<TaskRecord>>,
}

impl Trace {
    pub fn new(enabled: bool) -> Self {
        Self { enabled, records: Mutex::new(Vec::new()) }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&self, sweep: u64, step: u64, task: TaskKind, entity: usize) {
        if self.enabled {
            self.records.lock().push(TaskRecord { sweep, step, task, entity });
        }
    }

    pub fn records(&self) -> Vec<TaskRecord> {
        self.records.lock().clone()
    }

    pub fn len(&self) -> usize {
        self.records.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceViolation {
    #[error("step {step}: face {face} solved before predict of cell {cell}")]
    RiemannBeforePredict { step: u64, face: usize, cell: usize },
    #[error("step {step}: cell {cell} integrated face {face} before it was solved")]
    FaceBeforeRiemann { step: u64, cell: usize, face: usize },
    #[error("step {step}: face {face} solved {count} times")]
    RiemannCount { step: u64, face: usize, count: usize },
    #[error("step {step}: cell {cell} ran {task} {count} times")]
    CellTaskCount { step: u64, cell: usize, task: &'static str, count: usize },
    #[error("cell {cell}: predict of step {step} precedes update of step {prev}")]
    PredictBeforeUpdate { cell: usize, step: u64, prev: u64 },
}

/// Checks the partial order STP < Riemann < Corrector per realisation step:
/// every predict of a cell precedes the solve of each adjacent face, every
/// solve precedes both adjacent cells' face integration, and a cell's next
/// predict follows its update. Only steps whose corrector appears in the
/// trace are checked.
pub fn validate_trace(records: &[TaskRecord], grid: &Grid) -> Result<(), TraceViolation> {
    type Key = (u64, usize);
    let mut last_predict: HashMap<Key, usize> = HashMap::new();
    let mut solves: HashMap<Key, Vec<usize>> = HashMap::new();
    let mut face_int: HashMap<Key, Vec<usize>> = HashMap::new();
    let mut updates: HashMap<Key, Vec<usize>> = HashMap::new();
    let mut first_predict: HashMap<Key, usize> = HashMap::new();
    let mut steps = std::collections::BTreeSet::new();
    for (i, r) in records.iter().enumerate() {
        let key = (r.step, r.entity);
        match r.task {
            TaskKind::Predict => {
                last_predict.insert(key, i);
                first_predict.entry(key).or_insert(i);
            }
            TaskKind::SolveRiemann => solves.entry(key).or_default().push(i),
            TaskKind::IntegrateFace => {
                face_int.entry(key).or_default().push(i);
                steps.insert(r.step);
            }
            TaskKind::Update => updates.entry(key).or_default().push(i),
            _ => {}
        }
    }
    for &step in &steps {
        for (f, slot) in grid.faces.iter().enumerate() {
            let positions = solves.get(&(step, f)).map(Vec::as_slice).unwrap_or(&[]);
            if positions.len() != 1 {
                return Err(TraceViolation::RiemannCount { step, face: f, count: positions.len() });
            }
            let at = positions[0];
            for c in slot.face.cells() {
                match last_predict.get(&(step, c)) {
                    Some(&p) if p < at => {}
                    _ => return Err(TraceViolation::RiemannBeforePredict { step, face: f, cell: c }),
                }
            }
        }
        for c in 0..grid.cell_count() {
            for (task, map) in [("integrateFace", &face_int), ("update", &updates)] {
                let n = map.get(&(step, c)).map_or(0, Vec::len);
                if n != 1 {
                    return Err(TraceViolation::CellTaskCount { step, cell: c, task, count: n });
                }
            }
            let fi = face_int[&(step, c)][0];
            for &f in grid.cell_faces(c) {
                if solves[&(step, f)][0] > fi {
                    return Err(TraceViolation::FaceBeforeRiemann { step, cell: c, face: f });
                }
            }
            let up = updates[&(step, c)][0];
            if let Some(&p) = first_predict.get(&(step + 1, c)) {
                if p < up {
                    return Err(TraceViolation::PredictBeforeUpdate { cell: c, step: step + 1, prev: step });
                }
            }
        }
    }
    Ok(())
}

/// Interleaving statistics of one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepProfile {
    pub sweep: u64,
    /// Changes between STP, Riemann and Corrector phases within the sweep.
    pub transitions: usize,
    /// Contiguous blocks when Riemann and Corrector count as one
    /// correction phase.
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcurrencyProfile {
    pub sweeps: Vec<SweepProfile>,
    /// Phase changes over the whole trace, sweep boundaries included.
    pub transitions: usize,
}

pub fn concurrency_profile(records: &[TaskRecord]) -> ConcurrencyProfile {
    let mut sweeps: Vec<SweepProfile> = Vec::new();
    let mut total = 0;
    let mut prev_global: Option<Phase> = None;
    let mut prev: Option<(u64, Phase)> = None;
    for r in records {
        let Some(phase) = r.task.phase() else { continue };
        if prev_global.is_some_and(|p| p != phase) {
            total += 1;
        }
        prev_global = Some(phase);
        if sweeps.last().map(|s| s.sweep) != Some(r.sweep) {
            sweeps.push(SweepProfile { sweep: r.sweep, transitions: 0, blocks: 1 });
            prev = None;
        }
        let cur = sweeps.last_mut().expect("pushed above");
        if let Some((_, p)) = prev {
            if p != phase {
                cur.transitions += 1;
                if (p == Phase::Stp) != (phase == Phase::Stp) {
                    cur.blocks += 1;
                }
            }
        }
        prev = Some((r.sweep, phase));
    }
    ConcurrencyProfile { sweeps, transitions: total }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footprint_instances() {
        assert_eq!(persistent_footprint(FootprintMode::Fused, 3, 3, 5), 20 * 5 * 64);
        assert_eq!(footprint_ratio(2, 2), Ratio::new(14, 22));
        assert_eq!(footprint_ratio(3, 9), Ratio::new(20, 59));
        for d in 2..=3 {
            for p in 0..=9 {
                let r = Ratio::new(
                    persistent_footprint(FootprintMode::Fused, d, p, 5),
                    persistent_footprint(FootprintMode::Straightforward, d, p, 5),
                );
                assert_eq!(r, footprint_ratio(d, p));
            }
        }
    }

    #[test]
    fn footprint_ratio_bounded_on_valid_range() {
        let max = (2..=3)
            .flat_map(|d| (2..=9).map(move |p| footprint_ratio(d, p)))
            .max()
            .unwrap();
        assert_eq!(max, Ratio::new(20, 31));
        assert!(max <= Ratio::new(7, 8));
    }

    #[test]
    fn traffic_model_endpoints() {
        let sf = traffic_model(FootprintMode::Straightforward, 2, 2, 1, 1.0);
        assert_eq!(traffic_model(FootprintMode::Fused, 2, 2, 1, 1.0) / sf, 0.875);
        assert_eq!(traffic_model(FootprintMode::Fused, 2, 2, 1, 2.0) / sf, 1.125);
        let r3 = traffic_model(FootprintMode::Fused, 3, 2, 1, 1.0)
            / traffic_model(FootprintMode::Straightforward, 3, 2, 1, 1.0);
        assert!((r3 - 51.0 / 58.0).abs() < 1e-15);
    }

    #[test]
    fn memory_charges_sum_to_model() {
        let shape = Shape { dim: 3, order: 2, components: 5 };
        let b = shape.block();
        let cold = MemoryContext::default();
        let hot = MemoryContext { faces_resident: true, solution_resident: true };
        let sum = |parts: &[(u64, u64, u64)]| parts.iter().map(|p| p.0 + p.1).sum::<u64>();
        let riemann = memory_charge(shape, MemoryGroup::Riemann, cold);
        let per_cell_riemann = (3 * riemann.0, 3 * riemann.1, 0);
        let straight = sum(&[
            per_cell_riemann,
            memory_charge(shape, MemoryGroup::Corrector, cold),
            memory_charge(shape, MemoryGroup::Stp, cold),
        ]);
        assert_eq!(straight, traffic_model_exact(FootprintMode::Straightforward, 3, 2, 5, 1));
        assert_eq!(straight, 58 * b);
        let fused = sum(&[
            per_cell_riemann,
            memory_charge(shape, MemoryGroup::Corrector, hot),
            memory_charge(shape, MemoryGroup::Stp, hot),
        ]);
        assert_eq!(fused, traffic_model_exact(FootprintMode::Fused, 3, 2, 5, 1));
    }

    #[test]
    fn rerun_bound_examples() {
        assert_eq!(rerun_upper_bound(3.0, 1.5, 1.2, 0.9), 2.0);
        assert_eq!(rerun_upper_bound(3.0, 1.5, 1.5, 0.5), 1.0);
    }

    #[test]
    fn table_charges() {
        let s = Shape { dim: 3, order: 3, components: 5 };
        assert_eq!(s.task_charge(TaskKind::Extrapolate).1, 4 * 3 * 5 * 64);
        assert_eq!(s.task_charge(TaskKind::Predict), (320, 4 * 5 * 256));
        assert_eq!(s.task_charge(TaskKind::IntegrateVolume), (3 * 5 * 256, 320));
        assert_eq!(s.task_charge(TaskKind::CalcTimeStep), (320, 1));
    }

    #[test]
    fn ledger_steps_and_priming() {
        let shape = Shape { dim: 2, order: 1, components: 1 };
        let l = Ledger::new(shape);
        l.task(TaskKind::Predict);
        l.memory(MemoryGroup::Stp, MemoryContext::default());
        l.close_priming();
        l.task(TaskKind::Update);
        l.task(TaskKind::Update);
        let rec = l.close_step(1, 1, 0);
        assert_eq!(rec.totals.task_calls(TaskKind::Update), 2);
        assert_eq!(rec.totals.task_reads(TaskKind::Update), 8);
        assert_eq!(rec.totals.q_reads, 0);
        assert_eq!(l.priming().q_reads, 1);
        assert_eq!(l.totals().task_calls(TaskKind::Predict), 0);
    }

    fn rec(sweep: u64, task: TaskKind) -> TaskRecord {
        TaskRecord { sweep, step: 1, task, entity: 0 }
    }

    #[test]
    fn profile_counts_phase_changes() {
        use TaskKind::*;
        let straight = vec![
            rec(0, Predict),
            rec(0, Extrapolate),
            rec(1, SolveRiemann),
            rec(2, IntegrateVolume),
            rec(2, IntegrateFace),
            rec(2, Update),
        ];
        let p = concurrency_profile(&straight);
        assert_eq!(p.transitions, 2);
        assert!(p.sweeps.iter().all(|s| s.transitions == 0 && s.blocks == 1));

        let shifted = vec![
            rec(0, SolveRiemann),
            rec(0, IntegrateFace),
            rec(0, SolveRiemann),
            rec(0, IntegrateFace),
            rec(0, Predict),
            rec(0, IntegrateVolume),
            rec(0, Predict),
        ];
        let p = concurrency_profile(&shifted);
        assert_eq!(p.sweeps[0].blocks, 2);
        assert_eq!(p.sweeps[0].transitions, 4);
    }
}
