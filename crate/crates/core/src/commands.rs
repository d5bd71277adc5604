//! Subcommand bodies: each turns a configuration into CSV plus a short
//! human-readable summary.

use std::fmt::Write as _;

use crate::ac_phase::{field_for_phase, segment_phase, total_rectified_phase};
use crate::config::{Auto, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::DiskTrajectory;
use crate::holonomy::{path_dependence, path_ordered_propagator, PathSampling};
use crate::linalg::wrap_angle;
use crate::physics::{SpinOperators, IDX_PLUS};
use crate::sequence::{echo_cancellation_check, stark_shift, sweep_signal, SignalSweep};
use crate::stats::{contrast, monte_carlo_experiment, sensitivity_report};

pub const CSV_HEADER: &str = "# ac-diamond csv v1";

/// Tolerance on `|p1 − ½|` for counting a grid point as a fringe zero.
pub const CROSSING_TOL: f64 = 1e-9;

pub const DEFAULT_GRID: usize = 201;
pub const DEFAULT_HOLONOMY_STEPS: [usize; 7] = [1_000, 2_000, 5_000, 10_000, 20_000, 50_000, 100_000];
pub const DEFAULT_SHOTS: [u64; 3] = [2_500, 10_000, 40_000];
pub const ECHO_DETUNINGS_HZ: [f64; 6] = [0.0, 1e3, 1e4, 1e5, 1e6, 1e7];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Output {
    pub csv: String,
    pub summary: String,
}

struct Csv(String);

impl Csv {
    fn new(columns: &[&str]) -> Self {
        Self(format!("{CSV_HEADER}\n{}\n", columns.join(",")))
    }

    fn row(&mut self, values: &[String]) {
        self.0.push_str(&values.join(","));
        self.0.push('\n');
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn phase(cfg: &ExperimentConfig) -> Result<Output> {
    let sys = cfg.system()?;
    let n = cfg.phase_rotations()?;
    let phi = total_rectified_phase(cfg.r, cfg.e0, n, &sys)?;
    let mut csv = Csv::new(&["r_m", "E_V_per_m", "n", "phase_rad"]);
    csv.row(&[num(cfg.r), num(cfg.e0), num(n), num(phi)]);
    let summary = format!(
        "total A-C phase: {phi:.4} rad\n  r = {} m, E = {} V/m, n = {n} rotations, coupling = {:.6e} s/m^2\n",
        cfg.r,
        cfg.e0,
        sys.ac_coupling()
    );
    Ok(Output { csv: csv.0, summary })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepOptions {
    pub grid: usize,
    /// Overrides `E0` with the field reaching this phase.
    pub phi_max: Option<f64>,
}

/// Sweep from zero field to `E0`, returning the curve and the config it ran
/// with.
pub fn sweep_curve(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<(SignalSweep, ExperimentConfig)> {
    let mut cfg = cfg.clone();
    if let Some(phi) = opts.phi_max {
        cfg.e0 = field_for_phase(phi, cfg.r, cfg.run_rotations()? as f64, &cfg.system()?)?;
    }
    if opts.grid < 2 {
        return Err(Error::invalid("grid", "need at least 2 points"));
    }
    let setup = cfg.run_setup()?;
    let schedule = cfg.schedule()?;
    let last = (opts.grid - 1) as f64;
    let grid: Vec<f64> = (0..opts.grid).map(|k| cfg.e0 * k as f64 / last).collect();
    Ok((sweep_signal(&grid, &setup, &schedule)?, cfg))
}

pub fn sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<Output> {
    let (curve, used) = sweep_curve(cfg, opts)?;
    let mut csv = Csv::new(&["E_V_per_m", "phase_rad", "p1", "p1_with_decoherence"]);
    for p in &curve.points {
        csv.row(&[num(p.field), num(p.phase), num(p.p1), num(p.p1_decohered)]);
    }
    let schedule = used.schedule()?;
    let top = curve.points.last().expect("grid has points");
    let mut summary = String::new();
    let _ = writeln!(summary, "fringe sweep, {} points from 0 to {:.6e} V/m", curve.points.len(), used.e0);
    let _ = writeln!(summary, "  rotations n = {}, run time = {:.6e} s", schedule.rotations(), schedule.duration());
    let _ = writeln!(
        summary,
        "  max phase = {:.6} rad, readout lag = {:.6} rad{}",
        top.phase,
        schedule.lag(),
        if used.lag == Auto::Auto { " (auto)" } else { "" }
    );
    let _ = writeln!(
        summary,
        "  max |dp1/dE| at row {} of {} (E = {:.6e} V/m)",
        curve.max_slope_index + 1,
        curve.points.len(),
        curve.points[curve.max_slope_index].field
    );
    let _ = writeln!(summary, "  zero crossings of p1 - 1/2: {}", curve.half_crossings(CROSSING_TOL));
    Ok(Output { csv: csv.0, summary })
}

/// gnuplot script plotting a sweep CSV stored at `data_path`.
pub fn gnuplot_script(data_path: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'E (V/m)'\n\
         set ylabel 'p_1'\n\
         set yrange [0:1]\n\
         plot '{data_path}' every ::1 using 1:3 with lines title 'T2 = inf', \\\n\
         \x20    '' every ::1 using 1:4 with lines title 'with dephasing'\n"
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolonomyRow {
    pub steps: usize,
    pub planar_phase_error: f64,
    pub offdiag_norm: f64,
    pub unitarity_residual: f64,
    pub path_dep_norm: f64,
    pub dyson_ratio: f64,
}

/// Half-turn propagators from station A at the configured field. The planar
/// columns use the untilted disk; the path-dependence columns use `tilt`.
pub fn holonomy_rows(cfg: &ExperimentConfig, steps: &[usize]) -> Result<Vec<HolonomyRow>> {
    let sys = cfg.system()?;
    let ops = SpinOperators::nv();
    let tilted = cfg.trajectory()?;
    let planar = DiskTrajectory { tilt: 0.0, ..tilted };
    let half = planar.period() / 2.0;
    let exact = segment_phase(0.0, half, &planar, &cfg.field()?, &sys)?;
    steps
        .iter()
        .map(|&n| {
            let s = PathSampling::new(0.0, half, n, planar, cfg.field()?)?;
            let u = path_ordered_propagator(&s, &ops, &sys)?;
            let err = wrap_angle(u.element(IDX_PLUS, IDX_PLUS).arg() + exact).abs();
            let dep = path_dependence(&s.with_trajectory(tilted), &ops, &sys)?;
            Ok(HolonomyRow {
                steps: n,
                planar_phase_error: err,
                offdiag_norm: u.offdiag_norm(),
                unitarity_residual: u.unitarity_residual(),
                path_dep_norm: dep.difference_norm,
                dyson_ratio: if dep.second_order_norm > 0.0 { dep.dyson_ratio() } else { f64::NAN },
            })
        })
        .collect()
}

pub fn holonomy(cfg: &ExperimentConfig, steps: Option<usize>) -> Result<Output> {
    let steps: Vec<usize> = match steps {
        Some(n) => vec![n],
        None => DEFAULT_HOLONOMY_STEPS.to_vec(),
    };
    let rows = holonomy_rows(cfg, &steps)?;
    let mut csv = Csv::new(&["steps", "planar_phase_error", "offdiag_norm", "path_dep_norm"]);
    for r in &rows {
        csv.row(&[r.steps.to_string(), num(r.planar_phase_error), num(r.offdiag_norm), num(r.path_dep_norm)]);
    }
    let mut summary = String::new();
    let _ = writeln!(summary, "half-turn propagator from station A, E = {:e} V/m, tilt = {} rad", cfg.e0, cfg.tilt);
    for r in &rows {
        let _ = writeln!(
            summary,
            "  steps {:>7}: phase error {:.3e}, unitarity {:.3e}, fwd/rev {:.4e}, fwd/rev over 2|M| {:.4}",
            r.steps, r.planar_phase_error, r.unitarity_residual, r.path_dep_norm, r.dyson_ratio
        );
    }
    let at = |n| rows.iter().find(|r| r.steps == n);
    if let (Some(a), Some(b)) = (at(10_000), at(20_000)) {
        let _ = writeln!(
            summary,
            "  error ratio 1e4/2e4 steps: {:.4}",
            a.planar_phase_error / b.planar_phase_error
        );
    }
    Ok(Output { csv: csv.0, summary })
}

pub fn sensitivity(cfg: &ExperimentConfig) -> Result<Output> {
    let rep = sensitivity_report(cfg.c, cfg.t2, cfg.ensemble)?;
    let mut csv = Csv::new(&["C", "T2_s", "eta_rad_per_sqrt_Hz", "N", "eta_ensemble_rad_per_sqrt_Hz", "T_to_1rad_s"]);
    csv.row(&[num(rep.c), num(rep.t2), num(rep.eta), num(rep.n), num(rep.eta_ensemble), num(rep.t_to_1rad)]);
    let readout = contrast(&cfg.readout_model()?)?;
    let summary = format!(
        "sensitivity, C = {}, T2 = {} s\n  eta = {:.1} rad/sqrt(Hz)\n  ensemble N = {:e}: eta = {:.4e} rad/sqrt(Hz) ({:.3} mrad/sqrt(Hz))\n  time to 1 rad: {:.4e} s ({:.2} h)\n  contrast implied by alpha0 = {}, alpha1 = {}: {:.4}\n",
        rep.c,
        rep.t2,
        rep.eta,
        rep.n,
        rep.eta_ensemble,
        rep.eta_ensemble * 1e3,
        rep.t_to_1rad,
        rep.t_to_1rad / 3600.0,
        cfg.alpha0,
        cfg.alpha1,
        readout
    );
    Ok(Output { csv: csv.0, summary })
}

pub fn montecarlo(cfg: &ExperimentConfig, shots: Option<u64>) -> Result<Output> {
    let shots: Vec<u64> = match shots {
        Some(n) => vec![n],
        None => DEFAULT_SHOTS.to_vec(),
    };
    let setup = cfg.run_setup()?;
    let schedule = cfg.schedule()?;
    let model = cfg.readout_model()?;
    let mut csv = Csv::new(&["shots", "phase_mean_rad", "phase_std_rad"]);
    let mut summary = format!(
        "Monte Carlo phase estimate at E = {:e} V/m, lag = {:.6} rad, seed = {}\n",
        cfg.e0,
        schedule.lag(),
        cfg.seed
    );
    for n in shots {
        let r = monte_carlo_experiment(cfg.e0, &setup, &schedule, &model, n, cfg.seed)?;
        csv.row(&[n.to_string(), num(r.phase_mean), num(r.phase_std_error)]);
        let _ = writeln!(
            summary,
            "  {n:>7} shots: {:.6} +/- {:.6} rad (true {:.6}, single-shot std {:.4})",
            r.phase_mean, r.phase_std_error, r.true_phase, r.phase_std
        );
    }
    Ok(Output { csv: csv.0, summary })
}

pub fn stark(cfg: &ExperimentConfig) -> Result<Output> {
    let rep = stark_shift(cfg.e0, &cfg.system()?, &cfg.stark_model()?, cfg.f)?;
    let mut csv = Csv::new(&["E_V_per_cm", "coupling_Hz", "zeeman_Hz", "shift_Hz", "modulation_Hz", "adiabatic"]);
    csv.row(&[
        num(cfg.e0 / 100.0),
        num(rep.coupling_hz),
        num(rep.zeeman_hz),
        num(rep.shift_hz),
        num(rep.modulation_hz),
        rep.adiabatic.to_string(),
    ]);
    let summary = format!(
        "ground-state Stark coupling at E = {:e} V/cm, R2E = {}\n  coupling R2E*E = {:.4} MHz\n  Zeeman splitting = {:.4} MHz (B_z = {} T)\n  adiabatic shift = {:.4} MHz\n  modulation 3f = {:.1} kHz, adiabatic: {}\n",
        cfg.e0 / 100.0,
        cfg.r2e,
        rep.coupling_hz / 1e6,
        rep.zeeman_hz / 1e6,
        cfg.b_z,
        rep.shift_hz / 1e6,
        rep.modulation_hz / 1e3,
        rep.adiabatic
    );
    Ok(Output { csv: csv.0, summary })
}

pub fn echo_check(cfg: &ExperimentConfig) -> Result<Output> {
    let setup = cfg.run_setup()?;
    let schedule = cfg.schedule()?;
    let shift = stark_shift(cfg.e0, &cfg.system()?, &cfg.stark_model()?, cfg.f)?;
    let mut detunings = ECHO_DETUNINGS_HZ.to_vec();
    detunings.push(shift.shift_hz);
    let mut csv = Csv::new(&["detuning_Hz", "residual_phase_rad", "p1", "p1_change"]);
    let mut summary = format!("echo cancellation, n = {} rotations\n", schedule.rotations());
    let mut worst: f64 = 0.0;
    for d in detunings {
        let r = echo_cancellation_check(d, &schedule, &setup)?;
        worst = worst.max(r.residual_phase.abs()).max(r.p1_change().abs());
        csv.row(&[num(d), num(r.residual_phase), num(r.p1), num(r.p1_change())]);
    }
    let _ = writeln!(summary, "  Stark shift {:.4} MHz included as a detuning", shift.shift_hz / 1e6);
    let _ = writeln!(summary, "  largest |residual| or |p1 change|: {worst:.3e}");
    Ok(Output { csv: csv.0, summary })
}
