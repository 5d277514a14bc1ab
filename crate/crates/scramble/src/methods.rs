//! One function per simulation method. Each returns the tables it produces.

use std::f64::consts::{FRAC_PI_2, PI};

use scramble_core::classical::{
    self, ground_state_point, lyapunov_benettin, occupancy_fraction, poincare_section, BlochVector, FlowParams, KickParams,
};
use scramble_core::closures::{cumulant_closure_states, holstein_primakoff_c, ClosureForm};
use scramble_core::collective::{build_floquet, build_lmg_hamiltonian, build_parity, DickeState};
use scramble_core::dtwa::{dtwa_run, dtwa_sample, DtwaCouplings, DtwaProtocol};
use scramble_core::dynamics::{evolve_kicked, evolve_quench, magnetization_z, qfi, square_commutator, Generator, QuenchPlan};
use scramble_core::entanglement::{tmi, BlockPartition};
use scramble_core::full_ed::{
    contiguous_partitions, full_evolve, full_kicked_square_commutator, full_magnetization, full_qfi, full_square_commutator,
    min_tmi, Boundary, CouplingMatrix, EvolutionMethod, FullFloquet, FullHamiltonian, FullPropagator, FullState,
};
use scramble_core::record::uniform_grid;
use scramble_core::spectral::{floquet_spectrum, level_spacing_ratio, Sector};
use scramble_core::twa::{twa_observable, twa_sample, twa_square_commutator, Protocol};
use scramble_core::{dynamics, TimeSeriesRecord};

use crate::config::{ExperimentConfig, Method};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, Table};

/// Largest integrator step for trajectory methods.
pub const MAX_STEP: f64 = 1e-2;
/// Largest integrator step for the closures.
pub const MAX_CLOSURE_STEP: f64 = 1e-3;
/// Bins per axis of the Poincaré occupancy grid.
pub const OCCUPANCY_BINS: usize = 100;

/// Largest step `≤ cap` that divides `dt` evenly.
pub fn substep(dt: f64, cap: f64) -> f64 {
    dt / (dt / cap).ceil().max(1.0)
}

/// Blocks `(1, ⌈N/10⌉, ⌈N/5⌉)` used for the TMI output of collective runs.
pub fn tmi_blocks(n: usize) -> (usize, usize, usize) {
    (1, n.div_ceil(10), n.div_ceil(5))
}

fn kicked(cfg: &ExperimentConfig) -> bool {
    cfg.physics.k != 0.0
}

fn n_periods(cfg: &ExperimentConfig) -> usize {
    (cfg.numerics.t_max / cfg.physics.tau + 1e-9).floor() as usize
}

fn period_grid(cfg: &ExperimentConfig) -> Vec<f64> {
    (0..=n_periods(cfg)).map(|k| k as f64).collect()
}

fn require_polarized(cfg: &ExperimentConfig) -> RunResult<()> {
    if cfg.physics.h0 != 0.0 {
        return Err(RunError::config(format!(
            "method {} starts from the polarized state; physics.h0 must be 0, got {}",
            cfg.method, cfg.physics.h0
        )));
    }
    Ok(())
}

fn time_grid(cfg: &ExperimentConfig) -> RunResult<Vec<f64>> {
    if kicked(cfg) {
        Ok(period_grid(cfg))
    } else {
        Ok(uniform_grid(cfg.numerics.t_max, cfg.numerics.dt)?)
    }
}

fn time_note(table: Table, cfg: &ExperimentConfig) -> Table {
    if kicked(cfg) {
        table.meta("time_unit", "kick periods")
    } else {
        table
    }
}

pub fn execute(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    cfg.validate()?;
    let tables = match &cfg.method {
        Method::EdQuench => ed_collective(cfg, false)?,
        Method::EdKick => ed_collective(cfg, true)?,
        Method::Twa => twa(cfg)?,
        Method::Dtwa => dtwa(cfg)?,
        Method::Cumulant => cumulant(cfg)?,
        Method::Hp => hp(cfg)?,
        Method::Classical => classical_orbit(cfg)?,
        Method::Poincare => poincare(cfg)?,
        Method::Lyapunov => lyapunov(cfg)?,
        Method::Spectrum => spectrum(cfg)?,
        Method::FullEd => full_ed(cfg)?,
        Method::Figure(name) => return crate::figures::run_recipe(name, cfg),
    };
    Ok(tables.into_iter().map(|t| time_note(t, cfg)).collect())
}

fn state_tables(times: &[f64], states: &[DickeState], cqt: TimeSeriesRecord) -> RunResult<Vec<Table>> {
    let n = states.first().map(|s| s.n_spins()).unwrap_or(0);
    let mut mz = Table::new("mz", &["t", "mz"]);
    let mut qt = Table::new("qfi", &["t", "fq", "fq_x", "fq_y", "fq_z", "fq_optimal"]);
    let (a, b, c) = tmi_blocks(n);
    let part = BlockPartition::new(n, a, b, c)?;
    let mut tt = Table::new("tmi", &["t", "tmi"]).meta("blocks", format!("{a},{b},{c}"));
    for (&t, s) in times.iter().zip(states) {
        mz.push_nums(&[t, magnetization_z(s)]);
        let q = qfi(s);
        qt.push_nums(&[t, q.f_q, q.per_axis[0], q.per_axis[1], q.per_axis[2], q.f_q_optimal]);
        tt.push_nums(&[t, tmi(s, part)?]);
    }
    Ok(vec![mz, Table::from_records("cqt", &[&cqt])?, qt, tt])
}

fn ed_collective(cfg: &ExperimentConfig, force_kick: bool) -> RunResult<Vec<Table>> {
    let p = &cfg.physics;
    if force_kick && !kicked(cfg) {
        return Err(RunError::config("ed-kick needs a non-zero physics.K"));
    }
    let times = time_grid(cfg)?;
    let psi0 = QuenchPlan::new(p.h0, p.hf, p.j, times.clone())?.initial_state(p.n)?;
    if kicked(cfg) {
        let u = build_floquet(p.n, p.j, p.hf, p.k, p.tau)?;
        let states = evolve_kicked(&psi0, &u, n_periods(cfg))?;
        let cqt = square_commutator(&psi0, Generator::Floquet(&u), &times)?;
        state_tables(&times, &states, cqt)
    } else {
        let ham = build_lmg_hamiltonian(p.n, p.j, p.hf)?;
        let states = evolve_quench(&psi0, &ham, &times)?;
        let cqt = square_commutator(&psi0, Generator::Hamiltonian(&ham), &times)?;
        state_tables(&times, &states, cqt)
    }
}

fn twa_protocol(cfg: &ExperimentConfig) -> RunResult<Protocol> {
    let flow = FlowParams::new(cfg.physics.j, cfg.physics.hf);
    Ok(if kicked(cfg) { Protocol::Kicked(flow, KickParams::new(cfg.physics.k, cfg.physics.tau)?) } else { Protocol::Quench(flow) })
}

fn twa(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    require_polarized(cfg)?;
    let times = time_grid(cfg)?;
    let step = substep(cfg.numerics.dt, MAX_STEP);
    let samples = twa_sample(cfg.physics.n, cfg.numerics.n_samples, cfg.numerics.seed)?;
    let protocol = twa_protocol(cfg)?;
    let mut mz = twa_observable(&samples, protocol, &times, step, |m| m.z)?;
    mz.label = "mz".into();
    let mut cqt = twa_square_commutator(&samples, cfg.physics.n, protocol, &times, step, 1.0)?;
    cqt.label = "cqt".into();
    Ok(vec![Table::from_records("mz", &[&mz])?, Table::from_records("cqt", &[&cqt])?])
}

pub fn dtwa_protocol(cfg: &ExperimentConfig) -> RunResult<DtwaProtocol> {
    let p = &cfg.physics;
    let couplings = if p.alpha == 0.0 {
        DtwaCouplings::Uniform { j: p.j }
    } else {
        DtwaCouplings::Matrix(CouplingMatrix::power_law(p.n, p.alpha, p.j, Boundary::Periodic)?)
    };
    let kick = if kicked(cfg) { Some(KickParams::new(p.k, p.tau)?) } else { None };
    Ok(DtwaProtocol { couplings, h: p.hf, kick })
}

fn dtwa(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    require_polarized(cfg)?;
    let times = time_grid(cfg)?;
    let step = substep(cfg.numerics.dt, MAX_STEP);
    let ensemble = dtwa_sample(cfg.physics.n, cfg.numerics.n_samples, cfg.numerics.seed)?;
    let mut s = dtwa_run(&ensemble, &dtwa_protocol(cfg)?, &times, step)?;
    s.cqt.label = "cqt".into();
    s.fq_optimal.label = "fq_optimal".into();
    let boundary = if cfg.physics.alpha == 0.0 { "all-to-all" } else { "periodic" };
    Ok(vec![
        Table::from_records("mz", &[&s.mz])?,
        Table::from_records("cqt", &[&s.cqt])?,
        Table::from_records("qfi", &[&s.fq, &s.fq_optimal])?,
    ]
    .into_iter()
    .map(|t| t.meta("couplings", boundary))
    .collect())
}

fn cumulant(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    if kicked(cfg) {
        return Err(RunError::config("the cumulant closure is defined for quenches only; set physics.K = 0"));
    }
    let p = &cfg.physics;
    let times = uniform_grid(cfg.numerics.t_max, cfg.numerics.dt)?;
    let step = substep(cfg.numerics.dt, MAX_CLOSURE_STEP);
    let m0 = ground_state_point(p.j, p.h0);
    let states = cumulant_closure_states(p.n, FlowParams::new(p.j, p.hf), m0, &times, step, ClosureForm::Derived)?;
    let mut cqt = Table::new("cqt", &["t", "cqt"]);
    let mut moments = Table::new("moments", &["t", "mx", "my", "mz", "c_xx", "c_yy", "c_zz", "c_xy", "c_xz", "c_yz"]);
    for (&t, s) in times.iter().zip(&states) {
        if s.c_zz < -1e-12 {
            return Err(scramble_core::Error::numerical(format!("closure produced c_zz = {} < 0 at t = {t}", s.c_zz)).into());
        }
        cqt.push_nums(&[t, s.c_zz]);
        let c = s.matrix();
        moments.push_nums(&[t, s.m.x, s.m.y, s.m.z, c[0][0], c[1][1], c[2][2], c[0][1], c[0][2], c[1][2]]);
    }
    Ok(vec![cqt, moments])
}

fn hp(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    require_polarized(cfg)?;
    if kicked(cfg) {
        return Err(RunError::config("the spin-wave scheme is defined for quenches only; set physics.K = 0"));
    }
    let p = &cfg.physics;
    let times = uniform_grid(cfg.numerics.t_max, cfg.numerics.dt)?;
    let step = substep(cfg.numerics.dt, MAX_CLOSURE_STEP);
    let mut c = holstein_primakoff_c(p.n, p.j, p.hf, FRAC_PI_2, 0.0, &times, step, ClosureForm::Derived)?;
    c.label = "cqt".into();
    Ok(vec![Table::from_records("cqt", &[&c])?])
}

fn classical_row(t: f64, m: &BlochVector, params: FlowParams) -> Vec<f64> {
    vec![t, m.x, m.y, m.z, m.q(), m.p(), params.energy(m)]
}

const ORBIT_COLUMNS: [&str; 7] = ["t", "mx", "my", "mz", "q", "p", "energy"];

fn classical_orbit(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let p = &cfg.physics;
    let params = FlowParams::new(p.j, p.hf);
    let m0 = ground_state_point(p.j, p.h0);
    let step = substep(cfg.numerics.dt, MAX_STEP);
    let mut table = Table::new("orbit", &ORBIT_COLUMNS);
    if kicked(cfg) {
        let kick = KickParams::new(p.k, p.tau)?;
        let orbit = classical::kicked_orbit(m0, params, kick, n_periods(cfg), substep(p.tau, MAX_STEP))?;
        for (k, m) in orbit.iter().enumerate() {
            table.push_nums(&classical_row(k as f64, m, params));
        }
    } else {
        let times = uniform_grid(cfg.numerics.t_max, cfg.numerics.dt)?;
        let traj = classical::flow_on_grid(m0, params, &times, step)?;
        for (&t, m) in traj.times.iter().zip(&traj.points) {
            table.push_nums(&classical_row(t, m, params));
        }
    }
    Ok(vec![table])
}

/// Deterministic seeds spread over the `(Q, P)` cell.
pub fn poincare_seeds(count: usize) -> RunResult<Vec<BlochVector>> {
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    (0..count)
        .map(|i| {
            let q = -0.9 + 1.8 * (i as f64 + 0.5) / count as f64;
            let frac = (i as f64 * golden + 0.25).fract();
            let p = PI * (frac - 0.5);
            Ok(BlochVector::from_canonical(q, p)?)
        })
        .collect()
}

fn poincare(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let p = &cfg.physics;
    let kick = KickParams::new(p.k, p.tau)?;
    let count = cfg.numerics.n_samples.clamp(1, 256);
    let seeds = poincare_seeds(count)?;
    let clouds = poincare_section(&seeds, n_periods(cfg), FlowParams::new(p.j, p.hf), kick, substep(p.tau, MAX_STEP))?;
    let mut table = Table::new("poincare", &["seed", "period", "q", "p"]);
    let mut union = Vec::new();
    for (s, cloud) in clouds.iter().enumerate() {
        for (k, &(q, pp)) in cloud.iter().enumerate() {
            table.push_nums(&[s as f64, k as f64, q, pp]);
        }
        union.extend_from_slice(cloud);
    }
    let occ = occupancy_fraction(&union, OCCUPANCY_BINS);
    Ok(vec![table.meta("occupancy", occ).meta("occupancy_bins", OCCUPANCY_BINS)])
}

fn lyapunov(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let p = &cfg.physics;
    let params = FlowParams::new(p.j, p.hf);
    let m0 = ground_state_point(p.j, p.h0);
    let (kick, intervals, step) = if kicked(cfg) {
        (Some(KickParams::new(p.k, p.tau)?), n_periods(cfg), substep(p.tau, MAX_STEP))
    } else {
        (None, cfg.numerics.t_max.floor() as usize, MAX_STEP)
    };
    let est = lyapunov_benettin(m0, params, kick, intervals, 1, step)?;
    let mut table = Table::new("lyapunov", &["t", "lambda"]);
    for &(t, l) in &est.trace {
        table.push_nums(&[t, l]);
    }
    Ok(vec![table.meta("lambda", est.lambda).meta("converged", est.converged)])
}

fn spectrum(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let p = &cfg.physics;
    let u = build_floquet(p.n, p.j, p.hf, p.k, p.tau)?;
    let spec = floquet_spectrum(&u, &build_parity(p.n)?, p.tau)?;
    let mut table = Table::new("spectrum", &["index", "quasienergy", "parity"]);
    for (i, (&q, &par)) in spec.quasienergies.iter().zip(&spec.parity_labels).enumerate() {
        table.push_nums(&[i as f64, q, par as f64]);
    }
    for (key, sector) in [("r_even", Sector::Even), ("r_odd", Sector::Odd), ("r_mixed", Sector::Mixed)] {
        let v = level_spacing_ratio(&spec, sector).map(|r| r.to_string()).unwrap_or_else(|e| format!("n/a ({e})"));
        table.metadata.insert(key.into(), v);
    }
    Ok(vec![table])
}

fn full_ed(cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    require_polarized(cfg)?;
    let p = &cfg.physics;
    let couplings = CouplingMatrix::power_law(p.n, p.alpha, p.j, Boundary::Periodic)?;
    let prop = FullPropagator::new(FullHamiltonian::new(&couplings, p.hf)?, EvolutionMethod::Auto)?;
    let psi0 = FullState::polarized_up(p.n)?;
    let times = time_grid(cfg)?;
    let (states, cqt) = if kicked(cfg) {
        let floquet = FullFloquet::new(prop, p.k, p.tau)?;
        let n = n_periods(cfg);
        let states = floquet.evolve(&psi0, n);
        let c = full_kicked_square_commutator(&psi0, &floquet, n)?;
        (states, c)
    } else {
        let states = full_evolve(&psi0, &prop, &times)?;
        let c = full_square_commutator(&psi0, &prop, &times)?.values;
        (states, c)
    };
    let parts = contiguous_partitions(p.n)?;
    let mut mz = Table::new("mz", &["t", "mz"]);
    let mut ct = Table::new("cqt", &["t", "cqt"]);
    let mut qt = Table::new("qfi", &["t", "fq", "fq_x", "fq_y", "fq_z", "fq_optimal"]);
    let mut tt = Table::new("tmi", &["t", "tmi_min", "a", "b", "c"]).meta("partitions", "contiguous blocks, bitmask columns");
    for ((&t, s), &c) in times.iter().zip(&states).zip(&cqt) {
        mz.push_nums(&[t, full_magnetization(s)]);
        ct.push_nums(&[t, c]);
        let q = full_qfi(s);
        qt.push_nums(&[t, q.f_q, q.per_axis[0], q.per_axis[1], q.per_axis[2], q.f_q_optimal]);
        let (v, part) = min_tmi(s, &parts)?;
        tt.push(vec![Cell::Num(t), Cell::Num(v), Cell::Num(part.a as f64), Cell::Num(part.b as f64), Cell::Num(part.c as f64)]);
    }
    Ok([mz, ct, qt, tt].into_iter().map(|t| t.meta("boundary", "periodic")).collect())
}

/// `⟨m_z⟩` along an exact quench, used by several recipes.
pub fn ed_quench_mz(n: usize, j: f64, hf: f64, times: &[f64]) -> RunResult<TimeSeriesRecord> {
    let psi0 = DickeState::polarized_up(n)?;
    Ok(dynamics::magnetization_series(&psi0, &build_lmg_hamiltonian(n, j, hf)?, times)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method, sets: &[&str]) -> ExperimentConfig {
        let mut c = ExperimentConfig { method, ..Default::default() };
        for s in sets {
            c.apply_override(s).unwrap();
        }
        c
    }

    #[test]
    fn substeps_divide_the_grid() {
        assert_eq!(substep(0.05, 0.01), 0.01);
        assert!((substep(0.1, 0.03) - 0.025).abs() < 1e-15);
        assert_eq!(substep(0.001, 0.01), 0.001);
    }

    #[test]
    fn ed_quench_files() {
        let t = execute(&cfg(Method::EdQuench, &["physics.N=20", "numerics.t_max=1", "numerics.dt=0.5"])).unwrap();
        let names: Vec<&str> = t.iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, ["mz", "cqt", "qfi", "tmi"]);
        assert_eq!(t[0].rows.len(), 3);
        assert!((t[0].column("mz").unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kicked_grid_counts_periods() {
        let t = execute(&cfg(Method::EdKick, &["physics.N=10", "physics.K=3", "physics.tau=0.5", "numerics.t_max=2"])).unwrap();
        assert_eq!(t[1].column("t").unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t[1].metadata["time_unit"], "kick periods");
    }

    #[test]
    fn domain_errors_surface() {
        let e = execute(&cfg(Method::FullEd, &["physics.N=20"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = execute(&cfg(Method::Twa, &["physics.h0=0.5"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(execute(&cfg(Method::EdKick, &[])).is_err());
    }

    #[test]
    fn every_method_runs_small() {
        let base = ["physics.N=8", "numerics.t_max=1", "numerics.dt=0.25", "numerics.n_samples=20"];
        for m in Method::SIMPLE {
            let mut sets = base.to_vec();
            if matches!(m, Method::EdKick | Method::Poincare | Method::Spectrum) {
                sets.push("physics.K=2");
            }
            if m == Method::Spectrum {
                sets[0] = "physics.N=120";
            }
            let out = execute(&cfg(m.clone(), &sets)).unwrap_or_else(|e| panic!("{m}: {e}"));
            assert!(!out.is_empty(), "{m}");
            assert!(out.iter().all(|t| !t.rows.is_empty()), "{m}");
        }
    }
}
