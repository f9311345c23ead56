//! CSV and manifest writers. Header row, comma separated, '.' decimal,
//! newline terminated; floats use the shortest round-trip representation.

use std::fmt::Write as _;
use std::path::Path;

use ader_core::metrics::{TaskKind, TaskRecord};
use ader_core::scenario::ConvergenceLevel;
use ader_core::scheduler::{Simulation, StepReport};
use ader_core::{PdeSystem, System};

pub fn metrics_header() -> String {
    let mut cols: Vec<String> = ["step", "t", "dt_old", "dt_new", "dt_adm", "dt", "reruns", "sweeps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for t in TaskKind::ALL {
        cols.push(format!("{}_reads", t.name()));
        cols.push(format!("{}_writes", t.name()));
    }
    cols.extend(
        ["memory_reads", "memory_writes", "q_reads_per_cell", "troubled", "wall_seconds"].map(String::from),
    );
    cols.join(",")
}

pub fn metrics_csv(reports: &[StepReport], cells: usize) -> String {
    let mut out = metrics_header();
    out.push('\n');
    for r in reports {
        let t = &r.record.totals;
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.step, r.t, r.dt_old, r.dt_new, r.dt_adm, r.dt, r.reruns, r.sweeps
        );
        for k in TaskKind::ALL {
            let _ = write!(out, ",{},{}", t.task_reads(k), t.task_writes(k));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            t.memory_reads,
            t.memory_writes,
            t.q_reads as f64 / cells as f64,
            r.troubled,
            r.wall.as_secs_f64()
        );
    }
    out
}

pub fn solution_csv(sim: &Simulation<System>) -> String {
    let d = sim.grid().dim();
    let m = sim.system().components();
    let mut cols = vec!["cell".to_string(), "node".to_string()];
    cols.extend((0..d).map(|a| format!("x{a}")));
    cols.extend((0..m).map(|k| format!("q{k}")));
    let mut out = cols.join(",");
    out.push('\n');
    for (c, q) in sim.solution().iter().enumerate() {
        for n in 0..q.len() / m {
            let _ = write!(out, "{c},{n}");
            for x in sim.node_position(c, n) {
                let _ = write!(out, ",{x}");
            }
            for v in &q[n * m..(n + 1) * m] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn trace_csv(records: &[TaskRecord]) -> String {
    let mut out = String::from("sweep,step,task,entity\n");
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.sweep, r.step, r.task.name(), r.entity);
    }
    out
}

pub fn convergence_csv(levels: &[ConvergenceLevel]) -> String {
    let mut out = String::from("depth,cells,h,steps,dt,l2_error,order\n");
    for l in levels {
        let order = l.order.map(|o| o.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{order}", l.depth, l.cells, l.h, l.steps, l.dt, l.error);
    }
    out
}

pub fn write(dir: &Path, name: &str, content: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(name), content)
}
