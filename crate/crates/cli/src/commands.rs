use iontc_core::lindblad::TRACE_DRIFT_LIMIT;
use iontc_core::{
    adiabatic_sweep, evolve_master, fixed_point, integrate, scan_phase_transition, sde_integrate, DensityOp,
    EvolveConfig, HeatingParams, MasterEquation, PhasePoint, RampConfig, ScanConfig, SweepConfig, TrackConfig,
};
use serde_json::json;

use crate::table::{Cell, Table};
use crate::{Failure, Global, HeatArgs, ScanArgs, SemiclassicalArgs, SweepArgs};

pub const SCAN_COLUMNS: &[&str] = &[
    "x",
    "jx_num",
    "jy_num",
    "jz_num",
    "jx_an",
    "jy_an",
    "jz_an",
    "var_min",
    "r_ansatz",
    "residual",
    "eigenvalue",
    "overlap",
];
pub const TRAJECTORY_COLUMNS: &[&str] = &["t", "X", "Y", "jx", "jy", "jz", "energy", "spin_norm2"];
pub const ENSEMBLE_COLUMNS: &[&str] = &["t", "mean_X", "mean_Y", "var_X", "var_Y", "stderr_X", "stderr_Y"];
pub const HEAT_COLUMNS: &[&str] = &["t", "n_mean", "re_a_mean", "im_a_mean", "jz_mean", "trace", "purity", "min_eig"];
pub const SWEEP_COLUMNS: &[&str] = &["t", "x", "fidelity", "energy", "var_min", "leak"];

/// Converts time-valued flags to physical time and back for the t column.
struct Clock {
    factor: f64,
    scaled: bool,
}

impl Clock {
    fn new(g: &Global, omega: f64) -> Result<Self, Failure> {
        if g.scaled && !(omega.abs() > 0.0) {
            return Err(Failure::usage("--scaled needs a nonzero --omega"));
        }
        Ok(Clock { factor: if g.scaled { omega.abs() } else { 1.0 }, scaled: g.scaled })
    }

    fn to_physical(&self, t: f64) -> f64 {
        t / self.factor
    }

    fn to_output(&self, t: f64) -> f64 {
        t * self.factor
    }

    fn units(&self) -> &'static str {
        if self.scaled {
            "scaled: Omega t (dimensionless)"
        } else {
            "physical: 1/[energy], Omega explicit"
        }
    }
}

/// Grid x_min, x_min + step, ... up to x_max inclusive, rounded to 12 decimals.
pub fn x_grid(x_min: f64, x_max: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0) || !(x_max >= x_min) || !(x_min >= 0.0) || !x_max.is_finite() {
        return Err(Failure::usage("need 0 <= --x-min <= --x-max and --x-step > 0"));
    }
    let n = ((x_max - x_min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| ((x_min + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn finish(table: &Table, g: &Global, out: Option<&std::path::Path>, failure: Option<Failure>) -> Result<(), Failure> {
    table.write(out, g.format)?;
    failure.map_or(Ok(()), Err)
}

pub fn scan(a: &ScanArgs, g: &Global) -> Result<(), Failure> {
    let track = TrackConfig { max_step: a.max_step, min_overlap: a.min_overlap, ..TrackConfig::default() };
    let cfg = ScanConfig {
        n_ions: a.n_ions,
        omega: a.omega,
        x_grid: x_grid(a.x_min, a.x_max, a.x_step)?,
        n_max: a.n_max,
        track,
    };
    let out = scan_phase_transition(&cfg)?;
    let mut t = Table::new(SCAN_COLUMNS, "scan", a);
    t.meta("track", track);
    t.meta("seed", serde_json::Value::Null);
    t.meta("time_units", "none");
    t.meta("numeric_unavailable_from", out.numeric_unavailable_from);
    let warned: Vec<f64> = out.rows.iter().filter(|r| r.truncation_warning).map(|r| r.x).collect();
    t.meta("truncation_warnings", warned);
    let failure = out.failure.map(|e| {
        t.meta("failure", e.to_string());
        Failure::runtime(format!("{e}; partial table written"))
    });
    for r in &out.rows {
        t.push(vec![
            Some(r.x),
            r.jx_num,
            r.jy_num,
            r.jz_num,
            Some(r.jx_an),
            Some(r.jy_an),
            Some(r.jz_an),
            r.var_min,
            r.r_ansatz,
            r.residual,
            r.eigenvalue,
            r.overlap,
        ]);
    }
    finish(&t, g, a.out.as_deref(), failure)
}

pub fn semiclassical(a: &SemiclassicalArgs, g: &Global) -> Result<(), Failure> {
    let p0 = if a.fixed_point {
        fixed_point(a.chi, a.n_ions)?
    } else {
        PhasePoint::new(a.x0, a.y0, a.jx0, a.jy0, a.jz0.unwrap_or(-a.n_ions / 2.0))
    };
    let cfg = SweepConfig {
        chi: a.chi,
        n_ions_equiv: a.n_ions,
        t_end: a.t_end,
        rel_tol: a.rel_tol,
        abs_tol: a.abs_tol,
        seed: a.seed,
        gamma: a.gamma,
        n_traj: a.n_traj,
        dt: a.dt,
        sample_dt: a.sample_dt,
        spin_frozen: a.spin_frozen,
    };
    let deterministic = a.gamma == 0.0 && a.n_traj == 1;
    let columns = if deterministic { TRAJECTORY_COLUMNS } else { ENSEMBLE_COLUMNS };
    let mut t = Table::new(columns, "semiclassical", a);
    t.meta("resolved", cfg);
    t.meta("initial_point", p0);
    t.meta("seed", a.seed);
    t.meta("time_units", "scaled semiclassical time");
    if deterministic {
        let tr = integrate(&p0, &cfg)?;
        t.meta("mode", "deterministic DOP853");
        t.meta("max_spin_norm2_drift", tr.max_spin_drift);
        t.meta("max_energy_drift", tr.max_energy_drift);
        t.meta("steps", tr.stats);
        for (time, p) in tr.times.iter().zip(&tr.points) {
            t.push(vec![
                Some(*time),
                Some(p.x_pos),
                Some(p.y_mom),
                Some(p.jx),
                Some(p.jy),
                Some(p.jz),
                Some(p.energy(a.chi)),
                Some(p.spin_norm2()),
            ]);
        }
    } else {
        let st = sde_integrate(&p0, &cfg)?;
        t.meta("mode", "Euler-Maruyama ensemble");
        t.meta("n_traj", st.n_traj);
        for k in 0..st.times.len() {
            t.push(vec![
                Some(st.times[k]),
                Some(st.mean_x[k]),
                Some(st.mean_y[k]),
                Some(st.var_x[k]),
                Some(st.var_y[k]),
                Some(st.stderr_x[k]),
                Some(st.stderr_y[k]),
            ]);
        }
    }
    finish(&t, g, a.out.as_deref(), None)
}

pub fn heat(a: &HeatArgs, g: &Global) -> Result<(), Failure> {
    let clock = Clock::new(g, a.omega)?;
    let hp = HeatingParams { gamma: a.gamma, coupling: a.omega, drive: a.drive, include_drive: a.drive != 0.0 };
    let sys = MasterEquation::new(a.n_ions, a.n_max, hp)?;
    let cfg = EvolveConfig {
        t_end: clock.to_physical(a.t_end),
        dt: a.dt.map(|d| clock.to_physical(d)),
        sample_every: a.sample_every,
        track_min_eig: !a.no_min_eig,
    };
    let w0 = DensityOp::pure(&sys.space.ground_state().view());
    let ev = evolve_master(&w0, &sys, &cfg)?;
    let mut t = Table::new(HEAT_COLUMNS, "heat", a);
    t.meta("resolved", json!({ "heating": hp, "evolve": cfg, "dt": cfg.dt.unwrap_or_else(|| hp.default_dt()) }));
    t.meta("initial_state", "all ions down, motional vacuum");
    t.meta("seed", serde_json::Value::Null);
    t.meta("time_units", clock.units());
    t.meta("trace_drift", ev.trace_drift);
    t.meta("trace_drift_limit", TRACE_DRIFT_LIMIT);
    t.meta("min_eig_excursion", ev.min_eig_excursion);
    t.meta("max_hermiticity_error", ev.max_hermiticity_error);
    for s in &ev.samples {
        let min_eig: Cell = if a.no_min_eig { None } else { Some(s.min_eig) };
        t.push(vec![
            Some(clock.to_output(s.t)),
            Some(s.n_mean),
            Some(s.a_mean.re),
            Some(s.a_mean.im),
            Some(s.jz_mean),
            Some(s.trace),
            Some(s.purity),
            min_eig,
        ]);
    }
    finish(&t, g, a.out.as_deref(), None)
}

pub fn sweep(a: &SweepArgs, g: &Global) -> Result<(), Failure> {
    let clock = Clock::new(g, a.omega)?;
    let dt = clock.to_physical(a.dt);
    let ramp_time = clock.to_physical(a.ramp_time);
    if !(dt > 0.0) {
        return Err(Failure::usage("--dt must be > 0"));
    }
    let t_end = match a.t_end {
        Some(te) => clock.to_physical(te),
        None => (ramp_time / dt - 1e-9).ceil().max(0.0) * dt,
    };
    let track = TrackConfig { max_step: a.max_step, ..TrackConfig::default() };
    let cfg = RampConfig {
        n_ions: a.n_ions,
        omega: a.omega,
        x_final: a.x_final,
        ramp_time,
        t_end: Some(t_end),
        dt,
        n_max: a.n_max,
        track,
        leak_tol: a.leak_tol,
    };
    let out = adiabatic_sweep(&cfg)?;
    let mut t = Table::new(SWEEP_COLUMNS, "sweep", a);
    t.meta("resolved", cfg);
    t.meta("initial_state", "all ions down, motional vacuum");
    t.meta("seed", serde_json::Value::Null);
    t.meta("time_units", clock.units());
    t.meta("leak_warnings", &out.leak_warnings);
    let failure = out.failure.map(|e| {
        t.meta("failure", e.to_string());
        Failure::runtime(format!("{e}; partial table written"))
    });
    for s in &out.samples {
        t.push(vec![
            Some(clock.to_output(s.t)),
            Some(s.x),
            Some(s.fidelity),
            Some(s.energy),
            Some(s.var_min),
            Some(s.leak),
        ]);
    }
    finish(&t, g, a.out.as_deref(), failure)
}
