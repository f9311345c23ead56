use ader_core::metrics::{traffic_model_exact, validate_trace, FootprintMode};
use ader_core::pde::System;
use ader_core::scenario::{system_by_name, Scenario, ScenarioId};
use ader_core::scheduler::{Averaging, SchedulerMode, SimError, SimulationConfig};

fn scenario(id: ScenarioId, system: &str, dim: usize) -> Scenario {
    Scenario::new(id, system_by_name(system, dim).unwrap()).unwrap()
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn smooth_runs_never_rerun() {
    for averaging in [Averaging::Creeping, Averaging::Strict] {
        // below the p = 3 stability limit so the run stays smooth
        let cfg = SimulationConfig { averaging, cfl: 0.6, ..Default::default() };
        let mut sim = scenario(ScenarioId::SmoothDensityWave, "euler", 2).simulation(2, 3, cfg).unwrap();
        let reports = sim.run(50).unwrap();
        assert!(reports.iter().all(|r| r.reruns == 0 && r.sweeps == 1), "{averaging:?}");
        assert_eq!(sim.sweeps(), 51);
    }
}

#[test]
fn step_sizes_stay_below_the_admissible_bound() {
    let mut sim = scenario(ScenarioId::GaussianAdvect, "euler", 2)
        .simulation(2, 2, SimulationConfig::default())
        .unwrap();
    let mut prev_adm = sim.time().dt_adm;
    for r in sim.run(30).unwrap() {
        assert!(r.dt <= prev_adm * (1.0 + 1e-12), "step {}: {} > {}", r.step, r.dt, prev_adm);
        prev_adm = r.dt_adm;
    }
}

#[test]
fn time_advances_by_the_used_steps() {
    let mut sim = scenario(ScenarioId::Uniform, "euler", 2).simulation(1, 2, SimulationConfig::default()).unwrap();
    let reports = sim.run(5).unwrap();
    let total: f64 = reports.iter().map(|r| r.dt).sum();
    assert!((total - sim.time().t).abs() < 1e-15);
    // a uniform state stays uniform
    let first = sim.solution()[0][..4].to_vec();
    for q in sim.solution() {
        for s in q.chunks_exact(4) {
            for (a, b) in s.iter().zip(&first) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn ledger_matches_traffic_model_matrix() {
    for (system, dim, order) in [("advection", 2, 0), ("advection", 3, 2), ("euler", 2, 3), ("euler", 3, 1)] {
        let sc = scenario(ScenarioId::SmoothDensityWave, system, dim);
        let m = if system == "euler" { dim + 2 } else { 1 };
        for (mode, fp) in [
            (SchedulerMode::Straightforward, FootprintMode::Straightforward),
            (SchedulerMode::Fused, FootprintMode::Fused),
        ] {
            for force_rerun in [false, true] {
                if force_rerun && mode == SchedulerMode::Straightforward {
                    continue;
                }
                let cfg = SimulationConfig { mode, force_rerun, ..Default::default() };
                let mut sim = sc.simulation(1, order, cfg).unwrap();
                sim.run(3).unwrap();
                let cells = sim.grid().cell_count() as u64;
                let passes = if force_rerun { 2 } else { 1 };
                for rec in sim.ledger().steps() {
                    assert_eq!(
                        rec.totals.memory_traffic(),
                        cells * traffic_model_exact(fp, dim, order, m, passes),
                        "{system} d={dim} p={order} {mode:?} rerun={force_rerun}"
                    );
                }
            }
        }
    }
}

#[test]
fn shifted_model_sits_between() {
    let sc = scenario(ScenarioId::SmoothDensityWave, "euler", 2);
    let cfg = SimulationConfig { mode: SchedulerMode::Shifted, ..Default::default() };
    let mut sim = sc.simulation(1, 2, cfg).unwrap();
    sim.run(2).unwrap();
    let b = 4 * 9;
    for rec in sim.ledger().steps() {
        assert_eq!(rec.totals.memory_traffic(), 9 * (16 * 2 + 4) * b);
    }
}

#[test]
fn parallel_runs_agree_with_sequential() {
    for mode in [SchedulerMode::Fused, SchedulerMode::Straightforward] {
        let sc = scenario(ScenarioId::SmoothDensityWave, "euler", 3);
        let run = |parallel| {
            let cfg = SimulationConfig { mode, parallel, trace: true, ..Default::default() };
            let mut sim = sc.simulation(2, 2, cfg).unwrap();
            let reports = sim.run(6).unwrap();
            validate_trace(&sim.trace().records(), sim.grid()).unwrap();
            (sim.solution(), reports.iter().map(|r| r.dt).collect::<Vec<_>>())
        };
        let (seq, dts_seq) = run(false);
        let (par, dts_par) = run(true);
        assert!(max_diff(&seq, &par) <= 1e-11, "{mode:?}");
        assert_eq!(dts_seq, dts_par, "{mode:?}");
    }
}

#[test]
fn sequential_runs_are_bitwise_reproducible() {
    let sc = scenario(ScenarioId::SpeedSpike, "euler", 2);
    let run = || {
        let mut sim = sc.simulation(2, 2, SimulationConfig::default()).unwrap();
        sim.run(8).unwrap();
        sim.solution()
    };
    assert_eq!(run(), run());
}

#[test]
fn equivalence_on_advection_and_outflow() {
    for (id, system) in [(ScenarioId::GaussianAdvect, "advection"), (ScenarioId::Sod, "euler")] {
        let sc = scenario(id, system, 2);
        let mut out = Vec::new();
        for mode in [SchedulerMode::Straightforward, SchedulerMode::Shifted, SchedulerMode::Fused] {
            let cfg = SimulationConfig { mode, forced_dt: Some(1e-3), ..Default::default() };
            let mut sim = sc.simulation(2, 2, cfg).unwrap();
            sim.run(5).unwrap();
            out.push(sim.solution());
        }
        assert!(max_diff(&out[0], &out[1]) <= 1e-12, "{id}");
        assert!(max_diff(&out[0], &out[2]) <= 1e-12, "{id}");
    }
}

#[test]
fn shifted_parallel_is_rejected() {
    let cfg = SimulationConfig { mode: SchedulerMode::Shifted, parallel: true, ..Default::default() };
    let err = scenario(ScenarioId::Uniform, "euler", 2).simulation(1, 1, cfg).unwrap_err();
    assert!(matches!(err, SimError::Config(_)));
    assert!(!err.is_numerical());
}

#[test]
fn unlimited_shock_fails_with_step_number() {
    // a violent forced step without the limiter must end in a numerical error
    let cfg = SimulationConfig { forced_dt: Some(0.05), ..Default::default() };
    let mut sim = scenario(ScenarioId::Sod, "euler", 2).simulation(2, 3, cfg).unwrap();
    let err = (0..20).find_map(|_| sim.step().err()).expect("blow-up");
    assert!(err.is_numerical());
    assert!(err.step().is_some());
}

#[test]
fn advection_exact_after_steps() {
    let sc = Scenario::new(ScenarioId::SmoothDensityWave, system_by_name("advection", 2).unwrap()).unwrap();
    let mut sim = sc.simulation(2, 4, SimulationConfig::default()).unwrap();
    sim.run(10).unwrap();
    let err = sim.l2_error(|x, t| sc.exact(x, t).unwrap());
    assert!(err < 1e-3, "{err}");
    assert!(matches!(sim.system(), System::Advection(_)));
}
