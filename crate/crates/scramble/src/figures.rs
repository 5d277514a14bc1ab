//! Named presets that regenerate the data behind each figure.
//!
//! Every table carries a `plot` metadata line naming the abscissa, the
//! ordinates and the axis scaling; the runner also writes these hints to
//! `COLUMNS.txt` next to the data.

use scramble_core::classical::{lyapunov_benettin, occupancy_fraction, poincare_section, FlowParams, KickParams, BlochVector};
use scramble_core::closures::{cumulant_closure_c, holstein_primakoff_c, ClosureForm};
use scramble_core::collective::{build_floquet, build_parity};
use scramble_core::dtwa::{dtwa_run, dtwa_sample, DtwaCouplings, DtwaProtocol};
use scramble_core::entanglement::{ergodic_tmi_reference, phi_q_z};
use scramble_core::fit::fit_exponential;
use scramble_core::full_ed::{
    contiguous_partitions, full_evolve, full_square_commutator, min_tmi, Boundary, CouplingMatrix, EvolutionMethod,
    FullHamiltonian, FullPropagator, FullState,
};
use scramble_core::record::uniform_grid;
use scramble_core::spectral::{floquet_spectrum, level_spacing_ratio, Sector, R_COE, R_POISSON};
use scramble_core::twa::{twa_sample, twa_square_commutator, Protocol};

use crate::analysis::{self, dpt_window};
use crate::config::ExperimentConfig;
use crate::error::{RunError, RunResult};
use crate::methods::{ed_quench_mz, poincare_seeds, substep, MAX_STEP};
use crate::output::{Cell, Table};

pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    build: fn(&ExperimentConfig) -> RunResult<Vec<Table>>,
}

pub const RECIPES: &[Recipe] = &[
    Recipe { name: "table1", description: "fitted growth exponents for the regular, DPT and kicked protocols", build: table1 },
    Recipe { name: "regular-quench", description: "c(t), N^3 c(t) and f_Q(t) after hf = 2, N = 100, 200, 400", build: regular_quench },
    Recipe { name: "dpt-quench", description: "exact and TWA c(t) at the dynamical transition hf = 1/2, N = 400, 800", build: dpt_quench },
    Recipe { name: "kicked-top", description: "c, f_Q, block entropies and TMI of the kicked top at K = 0.2 and 20, N = 100", build: kicked_top },
    Recipe { name: "level-statistics", description: "Floquet level-spacing ratio versus K at N = 1000", build: level_statistics },
    Recipe { name: "semiclassics", description: "exact, DTWA, cumulant and spin-wave m_z and c at N = 100, hf = 2", build: semiclassics },
    Recipe { name: "phase-space", description: "stroboscopic Poincare sections at K = 0.2 and 20", build: phase_space },
    Recipe { name: "qfi-density", description: "long-time z-axis QFI density versus k = J/(2h), closed form and exact", build: qfi_density },
    Recipe { name: "long-range", description: "minimal TMI and c(t) on a 12-site ring for alpha = 0.5 and 2.5", build: long_range },
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}

pub fn run_recipe(name: &str, cfg: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let recipe = find(name).ok_or_else(|| {
        let known: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
        RunError::config(format!("unknown figure {name:?}; known: {}", known.join(", ")))
    })?;
    Ok((recipe.build)(cfg)?.into_iter().map(|t| t.meta("figure", name)).collect())
}

const J: f64 = 1.0;

fn fit_row(table: &mut Table, protocol: &str, n: usize, quantity: &str, window: (f64, f64), value: f64, r2: f64) {
    table.push(vec![
        protocol.into(),
        Cell::Num(n as f64),
        quantity.into(),
        Cell::Num(window.0),
        Cell::Num(window.1),
        Cell::Num(value),
        Cell::Num(r2),
    ]);
}

fn table1(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let mut t = Table::new("table1", &["protocol", "N", "quantity", "t0", "t1", "value", "r2"])
        .meta("plot", "none: tabular")
        .meta("quantities", "power: log-log slope of c(t); rate: log-linear slope of c(t); lambda: classical Benettin exponent");
    for n in [100, 200, 400] {
        let r = analysis::regular_quench(n, J, 2.0)?;
        fit_row(&mut t, "regular hf=2", n, "power early", analysis::EARLY_WINDOW, r.early.exponent, r.early.r2);
        fit_row(&mut t, "regular hf=2", n, "power post-Ehrenfest", r.post_window, r.post.exponent, r.post.r2);
    }
    for n in [400, 800] {
        let w = dpt_window(n);
        let c = analysis::ed_square_commutator(n, J, 0.0, 0.5, &uniform_grid(w.1, 0.05)?)?;
        let f = fit_exponential(&c, w.0, w.1)?;
        fit_row(&mut t, "dpt h0=0 hf=0.5", n, "rate", w, f.exponent, f.r2);
    }
    let n = 100;
    let run = analysis::kicked_run(n, J, 2.0, 20.0, 1.0, 400, &[], (1, 10, 20))?;
    let sat = analysis::saturation(&run.cqt)?;
    let g = analysis::kicked_growth(&run.cqt, &sat)?;
    fit_row(&mut t, "kicked K=20", n, "rate per period", (1.0, (sat.t_sat - 1.0).max(2.0)), g.exponent, g.r2);
    fit_row(&mut t, "kicked K=20", n, "saturation period", (0.0, 400.0), sat.t_sat, f64::NAN);
    let lyap = lyapunov_benettin(
        BlochVector::from_canonical(0.3, 0.4)?,
        FlowParams::new(J, 2.0),
        Some(KickParams::new(20.0, 1.0)?),
        2000,
        1,
        MAX_STEP,
    )?;
    fit_row(&mut t, "kicked K=20", 0, "lambda", (0.0, 2000.0), lyap.lambda, f64::NAN);
    Ok(vec![t])
}

fn regular_quench(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let mut out = Vec::new();
    for n in [100, 200, 400] {
        let r = analysis::regular_quench(n, J, 2.0)?;
        let early_c: Vec<f64> = r.scaled.values.iter().map(|v| v / (n as f64).powi(3)).collect();
        let mut e = Table::new(format!("early_N{n}"), &["t", "cqt", "n3_cqt"]).meta("plot", "x=t y=n3_cqt log-log");
        for ((&t, &c), &s) in r.scaled.times.iter().zip(&early_c).zip(&r.scaled.values) {
            e.push_nums(&[t, c, s]);
        }
        let mut l = Table::from_records(format!("cqt_N{n}"), &[&r.late])?.meta("plot", "x=t y=cqt log-log");
        l.metadata.insert("post_window".into(), format!("{},{}", r.post_window.0, r.post_window.1));
        let fq = analysis::ed_qfi_series(n, J, 2.0, &uniform_grid(10.0 * (n as f64).sqrt(), 0.1)?)?;
        out.extend([e.meta("physics.N", n), l.meta("physics.N", n)]);
        out.push(Table::from_records(format!("fq_N{n}"), &[&fq])?.meta("plot", "x=t y=fq log-x").meta("physics.N", n));
    }
    Ok(out)
}

fn dpt_quench(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let mut out = Vec::new();
    for n in [400, 800] {
        let t_end = 1.5 * (n as f64).ln();
        let times = uniform_grid(t_end, 0.05)?;
        let ed = analysis::ed_square_commutator(n, J, 0.0, 0.5, &times)?;
        let samples = twa_sample(n, 20_000, 1)?;
        let twa = twa_square_commutator(&samples, n, Protocol::Quench(FlowParams::new(J, 0.5)), &times, MAX_STEP, 1.0)?;
        let mut t = Table::new(format!("cqt_N{n}"), &["t", "cqt_ed", "cqt_twa", "e2t_over_n3"])
            .meta("plot", "x=t y=cqt_ed,cqt_twa,e2t_over_n3 log-y")
            .meta("physics.N", n)
            .meta("twa_samples", 20_000);
        for (i, &tm) in times.iter().enumerate() {
            t.push_nums(&[tm, ed.values[i], twa.values[i], (2.0 * tm).exp() / (n as f64).powi(3)]);
        }
        out.push(t);
    }
    Ok(out)
}

fn kicked_top(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let n = 100;
    let mut out = Vec::new();
    for k in [0.2, 20.0] {
        let run = analysis::kicked_run(n, J, 2.0, k, 1.0, 400, &[2, 5, 10], (1, 10, 20))?;
        let mut cols = vec!["t", "cqt", "fq"];
        let names: Vec<String> = run.entropies.iter().map(|(l, _)| format!("s_{l}")).collect();
        cols.extend(names.iter().map(String::as_str));
        cols.push("tmi");
        let mut t = Table::new(format!("kicked_K{k}"), &cols)
            .meta("plot", "x=t y=cqt log-y; x=t y=fq,s_2,s_5,s_10,tmi")
            .meta("physics.K", k)
            .meta("time_unit", "kick periods")
            .meta("fq_ergodic", 1.0 + n as f64 / 3.0)
            .meta("tmi_ergodic", ergodic_tmi_reference(1, 10, 20)?);
        for i in 0..run.cqt.len() {
            let mut row = vec![run.cqt.times[i], run.cqt.values[i], run.fq.values[i]];
            row.extend(run.entropies.iter().map(|(_, r)| r.values[i]));
            row.push(run.i3.values[i]);
            t.push_nums(&row);
        }
        out.push(t);
    }
    Ok(out)
}

/// Kick strengths of the level-statistics sweep.
pub const LEVEL_SWEEP: [f64; 8] = [0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0];

fn level_statistics(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let n = 1000;
    let parity = build_parity(n)?;
    let mut t = Table::new("spacing_ratio", &["K", "r_even", "r_odd"])
        .meta("plot", "x=K y=r_even,r_odd log-x")
        .meta("r_poisson", R_POISSON)
        .meta("r_coe", R_COE)
        .meta("physics.N", n);
    for k in LEVEL_SWEEP {
        let spec = floquet_spectrum(&build_floquet(n, J, 2.0, k, 1.0)?, &parity, 1.0)?;
        t.push_nums(&[k, level_spacing_ratio(&spec, Sector::Even)?, level_spacing_ratio(&spec, Sector::Odd)?]);
    }
    Ok(vec![t])
}

fn semiclassics(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let n = 100;
    let hf = 2.0;
    let long = uniform_grid(400.0, 0.1)?;
    let ed_mz = ed_quench_mz(n, J, hf, &long)?;
    let ensemble = dtwa_sample(n, 5000, 1)?;
    let protocol = DtwaProtocol { couplings: DtwaCouplings::Uniform { j: J }, h: hf, kick: None };
    let dtwa_long = dtwa_run(&ensemble, &protocol, &long, substep(0.1, MAX_STEP))?;
    let mut mz = Table::new("mz", &["t", "mz_ed", "mz_dtwa"]).meta("plot", "x=t y=mz_ed,mz_dtwa").meta("dtwa_samples", 5000);
    for i in 0..long.len() {
        mz.push_nums(&[long[i], ed_mz.values[i], dtwa_long.mz.values[i]]);
    }
    let short = uniform_grid(30.0, 0.05)?;
    let ed_c = analysis::ed_square_commutator(n, J, 0.0, hf, &short)?;
    let dtwa_c = dtwa_run(&ensemble, &protocol, &short, substep(0.05, MAX_STEP))?.cqt;
    let params = FlowParams::new(J, hf);
    let cum = cumulant_closure_c(n, params, BlochVector::NORTH, &short, 1e-3, ClosureForm::Derived)?;
    let hp = holstein_primakoff_c(n, J, hf, std::f64::consts::FRAC_PI_2, 0.0, &short, 1e-3, ClosureForm::Derived)?;
    let mut c = Table::new("cqt", &["t", "cqt_ed", "cqt_dtwa", "cqt_cumulant", "cqt_hp"]).meta("plot", "x=t y=cqt_ed,cqt_dtwa,cqt_cumulant,cqt_hp log-log");
    for i in 0..short.len() {
        c.push_nums(&[short[i], ed_c.values[i], dtwa_c.values[i], cum.values[i], hp.values[i]]);
    }
    Ok(vec![mz, c])
}

fn phase_space(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let seeds = poincare_seeds(24)?;
    let mut out = Vec::new();
    for k in [0.2, 20.0] {
        let clouds = poincare_section(&seeds, 500, FlowParams::new(J, 2.0), KickParams::new(k, 1.0)?, MAX_STEP)?;
        let mut t = Table::new(format!("poincare_K{k}"), &["seed", "period", "q", "p"]).meta("plot", "x=q y=p points, colour=seed");
        let mut union = Vec::new();
        for (s, cloud) in clouds.iter().enumerate() {
            for (i, &(q, p)) in cloud.iter().enumerate() {
                t.push_nums(&[s as f64, i as f64, q, p]);
            }
            union.extend_from_slice(cloud);
        }
        out.push(t.meta("occupancy", occupancy_fraction(&union, 100)).meta("physics.K", k));
    }
    Ok(out)
}

fn qfi_density(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let mut curve = Table::new("phi_closed_form", &["k", "phi"]).meta("plot", "x=k y=phi");
    for i in 0..=180 {
        let k = 1.0 + 0.05 * i as f64;
        curve.push_nums(&[k, phi_q_z(J, 1.0 / (2.0 * k))?]);
    }
    let n = 400;
    let mut ed = Table::new("phi_exact", &["k", "phi_ed"]).meta("plot", "x=k y=phi_ed points").meta("physics.N", n).meta("window", "t in [150, 400]");
    for k in [1.5, 2.0, 4.0] {
        ed.push_nums(&[k, analysis::qfi_z_plateau(n, J, 1.0 / (2.0 * k), 150.0, 400.0, 0.25)?]);
    }
    Ok(vec![curve, ed])
}

fn long_range(_: &ExperimentConfig) -> RunResult<Vec<Table>> {
    let n = 12;
    let times = uniform_grid(40.0, 0.5)?;
    let parts = contiguous_partitions(n)?;
    let mut out = Vec::new();
    for alpha in [0.5, 2.5] {
        let c = CouplingMatrix::power_law(n, alpha, J, Boundary::Periodic)?;
        let prop = FullPropagator::new(FullHamiltonian::new(&c, 0.75)?, EvolutionMethod::Auto)?;
        let psi = FullState::polarized_up(n)?;
        let states = full_evolve(&psi, &prop, &times)?;
        let cqt = full_square_commutator(&psi, &prop, &times)?;
        let mut t = Table::new(format!("alpha{alpha}"), &["t", "cqt", "tmi_min"])
            .meta("plot", "x=t y=tmi_min; x=t y=cqt log-log")
            .meta("physics.alpha", alpha)
            .meta("boundary", "periodic");
        for (i, s) in states.iter().enumerate() {
            t.push_nums(&[times[i], cqt.values[i], min_tmi(s, &parts)?.0]);
        }
        out.push(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), RECIPES.len());
    }

    #[test]
    fn unknown_recipe_is_a_config_error() {
        let e = run_recipe("nope", &ExperimentConfig::default()).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
