//! Spin-echo experiment engine.
//!
//! A run pumps into `|0⟩` at station A, applies a π/2 pulse, then a π pulse
//! at every station crossing, and closes with a phase-shifted π/2 pulse and
//! a fluorescence readout. The π pulses cancel static precession and
//! rectify the sign-alternating A-C phase.
//!
//! Two evolution routes are provided. `ClosedForm` composes the analytic
//! segment phases in the `{|0⟩, |+1⟩}` subspace of the rotating frame.
//! `Oracle` integrates the full three-level Schrödinger equation in the lab
//! frame, including `H_s`, with pulse phases referenced to the drive.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ac_phase::{segment_phase, PhaseAccumulator};
use crate::error::{Error, Result};
use crate::geometry::{DiskTrajectory, FieldConfig};
use crate::holonomy::{effective_hamiltonian_evolve, static_generator, EvolveOptions, Frame, PathSampling};
use crate::linalg::{wrap_angle, CMatrix, ONE, ZERO};
use crate::physics::{NvSystem, PhysicalConstants, QubitRotation, SpinState, IDX_MINUS, IDX_PLUS, IDX_ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PulseKind {
    Pump,
    HalfPi { phase: f64 },
    Pi { phase: f64 },
    Readout,
}

impl PulseKind {
    fn rotation(&self) -> Option<QubitRotation> {
        match *self {
            PulseKind::HalfPi { phase } => Some(QubitRotation::new(FRAC_PI_2, phase)),
            PulseKind::Pi { phase } => Some(QubitRotation::new(PI, phase)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseEvent {
    pub time: f64,
    pub kind: PulseKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EchoSchedule {
    events: Vec<PulseEvent>,
    half_turns: u32,
    frequency: f64,
    lag: f64,
}

impl EchoSchedule {
    /// Schedule spanning `half_turns` station-to-station legs. With
    /// `pi_pulses` a π pulse sits at the end of every leg. The final π/2
    /// pulse has phase `−lag` (it lags the earlier pulses).
    pub fn with_half_turns(half_turns: u32, frequency: f64, lag: f64, pi_pulses: bool) -> Result<Self> {
        if half_turns == 0 {
            return Err(Error::invalid("n", "need at least one half turn"));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid("f", "must be positive"));
        }
        if !lag.is_finite() {
            return Err(Error::invalid("lag", "must be finite"));
        }
        let leg = 1.0 / (2.0 * frequency);
        let mut events = vec![
            PulseEvent { time: 0.0, kind: PulseKind::Pump },
            PulseEvent { time: 0.0, kind: PulseKind::HalfPi { phase: 0.0 } },
        ];
        if pi_pulses {
            events.extend((1..=half_turns).map(|k| PulseEvent {
                time: k as f64 * leg,
                kind: PulseKind::Pi { phase: 0.0 },
            }));
        }
        let end = half_turns as f64 * leg;
        events.push(PulseEvent { time: end, kind: PulseKind::HalfPi { phase: -lag } });
        events.push(PulseEvent { time: end, kind: PulseKind::Readout });
        Ok(Self {
            events,
            half_turns,
            frequency,
            lag,
        })
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub fn half_turns(&self) -> u32 {
        self.half_turns
    }

    pub fn rotations(&self) -> f64 {
        self.half_turns as f64 / 2.0
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn lag(&self) -> f64 {
        self.lag
    }

    /// Run duration `t_r`, s.
    pub fn duration(&self) -> f64 {
        self.half_turns as f64 / (2.0 * self.frequency)
    }

    pub fn pi_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, PulseKind::Pi { .. }))
            .count()
    }

    /// Same timing with every π pulse removed (control run).
    pub fn without_pi_pulses(&self) -> Self {
        Self::with_half_turns(self.half_turns, self.frequency, self.lag, false)
            .expect("parameters already validated")
    }

    pub fn with_lag(&self, lag: f64) -> Result<Self> {
        Self::with_half_turns(self.half_turns, self.frequency, lag, self.pi_count() > 0)
    }
}

/// Standard echo schedule: `n` full rotations, `2n` π pulses.
pub fn build_echo_schedule(n: u32, f: f64, lag: f64) -> Result<EchoSchedule> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    EchoSchedule::with_half_turns(2 * n, f, lag, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SimulationMode {
    #[default]
    ClosedForm,
    Oracle,
}

/// Everything a run needs besides the schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSetup {
    pub trajectory: DiskTrajectory,
    pub field: FieldConfig,
    pub system: NvSystem,
    /// Constant extra precession of `|+1⟩` in the rotating frame, Hz.
    pub detuning_hz: f64,
    /// See [`EvolveOptions::quadratic_mass`].
    pub quadratic_mass: Option<f64>,
    /// Integration steps per inter-pulse interval in oracle mode.
    pub oracle_steps: usize,
}

impl RunSetup {
    pub const DEFAULT_ORACLE_STEPS: usize = 50_000;

    pub fn new(trajectory: DiskTrajectory, field: FieldConfig, system: NvSystem) -> Self {
        Self {
            trajectory,
            field,
            system,
            detuning_hz: 0.0,
            quadratic_mass: None,
            oracle_steps: Self::DEFAULT_ORACLE_STEPS,
        }
    }

    pub fn with_field(&self, magnitude: f64) -> Result<Self> {
        Ok(Self {
            field: self.field.with_magnitude(magnitude)?,
            ..*self
        })
    }

    pub fn with_detuning(&self, detuning_hz: f64) -> Self {
        Self { detuning_hz, ..*self }
    }

    pub fn without_dephasing(&self) -> Self {
        let mut s = *self;
        s.system.nv = s.system.nv.without_dephasing();
        s
    }

    fn evolve_options(&self, frame: Frame) -> EvolveOptions {
        EvolveOptions {
            frame,
            detuning_hz: self.detuning_hz,
            quadratic_mass: self.quadratic_mass,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunResult {
    /// Population of `|+1⟩` at readout.
    pub p1: f64,
    /// Net A-C phase seen by the readout pulse, rad. Unwrapped in closed-form
    /// mode; wrapped to (−π, π] in oracle mode.
    pub ac_phase: f64,
    /// Net non-A-C (static) phase at readout, rad.
    pub static_phase: f64,
    /// `exp(−t_r/T2)`
    pub coherence: f64,
}

/// Fringe `½(1 + coherence·cos(Φ − lag))`.
pub fn fringe_signal(phi: f64, lag: f64, coherence: f64) -> f64 {
    0.5 * (1.0 + coherence * (phi - lag).cos())
}

/// Readout lag putting the fringe at maximum slope for phase `phi_max`.
pub fn optimal_readout_lag(phi_max: f64) -> Result<f64> {
    if !(phi_max.is_finite() && phi_max >= 0.0) {
        return Err(Error::invalid("phi_max", "must be non-negative"));
    }
    Ok((phi_max - FRAC_PI_2).rem_euclid(PI))
}

struct Interval {
    t0: f64,
    t1: f64,
    /// π pulses applied before this interval
    pis_before: usize,
}

fn intervals(schedule: &EchoSchedule) -> (Vec<Interval>, usize) {
    let mut out = Vec::new();
    let mut pis = 0;
    let mut t_prev = 0.0;
    for ev in schedule.events() {
        if ev.time > t_prev {
            out.push(Interval { t0: t_prev, t1: ev.time, pis_before: pis });
            t_prev = ev.time;
        }
        if matches!(ev.kind, PulseKind::Pi { .. }) {
            pis += 1;
        }
    }
    (out, pis)
}

fn last_rotation_index(schedule: &EchoSchedule) -> Result<usize> {
    schedule
        .events()
        .iter()
        .rposition(|e| e.kind.rotation().is_some())
        .ok_or_else(|| Error::invalid("schedule", "contains no rotation pulses"))
}

fn check_consistency(schedule: &EchoSchedule, setup: &RunSetup) -> Result<()> {
    let f = setup.trajectory.frequency.abs();
    if ((f - schedule.frequency()) / schedule.frequency()).abs() > 1e-12 {
        return Err(Error::invalid("f", "trajectory and schedule frequencies differ"));
    }
    Ok(())
}

/// Signed phase sums seen at readout: each interval contributes with sign
/// `(−1)^(π pulses after it)`.
fn bookkeeping(
    schedule: &EchoSchedule,
    setup: &RunSetup,
    static_rate: f64,
    ac: bool,
) -> Result<(PhaseAccumulator, PhaseAccumulator)> {
    let (ivals, total_pis) = intervals(schedule);
    let mut ac_acc = PhaseAccumulator::new();
    let mut static_acc = PhaseAccumulator::new();
    for iv in &ivals {
        let sign = if (total_pis - iv.pis_before).is_multiple_of(2) { 1.0 } else { -1.0 };
        if ac {
            let phi = segment_phase(iv.t0, iv.t1, &setup.trajectory, &setup.field, &setup.system)?;
            ac_acc.push(iv.t0, iv.t1, sign * phi);
        }
        static_acc.push(iv.t0, iv.t1, sign * static_rate * (iv.t1 - iv.t0));
    }
    Ok((ac_acc, static_acc))
}

fn rotating_static_rate(setup: &RunSetup) -> f64 {
    let w = static_generator(&setup.system, &setup.field, &setup.evolve_options(Frame::Rotating));
    w[IDX_PLUS] - w[IDX_ZERO]
}

fn coherence_factor(schedule: &EchoSchedule, system: &NvSystem) -> f64 {
    (-schedule.duration() / system.nv.t2).exp()
}

pub fn simulate_run(schedule: &EchoSchedule, setup: &RunSetup, mode: SimulationMode) -> Result<RunResult> {
    check_consistency(schedule, setup)?;
    match mode {
        SimulationMode::ClosedForm => closed_form_run(schedule, setup),
        SimulationMode::Oracle => oracle_run(schedule, setup),
    }
}

fn closed_form_run(schedule: &EchoSchedule, setup: &RunSetup) -> Result<RunResult> {
    if setup.trajectory.tilt != 0.0 || setup.field.direction.z != 0.0 {
        return Err(Error::TiltedTrajectory);
    }
    let static_rate = rotating_static_rate(setup);
    let last = last_rotation_index(schedule)?;
    let coherence = coherence_factor(schedule, &setup.system);

    // qubit amplitudes (|0⟩, |+1⟩)
    let mut c = [ONE, ZERO];
    let mut t_prev = 0.0;
    let mut p1 = None;
    for (idx, ev) in schedule.events().iter().enumerate() {
        if ev.time > t_prev {
            let phi = segment_phase(t_prev, ev.time, &setup.trajectory, &setup.field, &setup.system)?;
            c[1] *= Complex64::from_polar(1.0, -(phi + static_rate * (ev.time - t_prev)));
            t_prev = ev.time;
        }
        match ev.kind {
            PulseKind::Pump => c = [ONE, ZERO],
            PulseKind::Readout => {}
            kind => {
                let q = kind.rotation().expect("rotation pulse").qubit_matrix();
                if idx == last {
                    // dephase the coherence, then rotate the density matrix
                    let rho01 = c[0] * c[1].conj() * coherence;
                    let (p0, p1_pre) = (c[0].norm_sqr(), c[1].norm_sqr());
                    let r10 = q[1][0];
                    let r11 = q[1][1];
                    let pop = r10.norm_sqr() * p0
                        + r11.norm_sqr() * p1_pre
                        + 2.0 * (r10 * rho01 * r11.conj()).re;
                    p1 = Some(pop);
                } else {
                    c = [q[0][0] * c[0] + q[0][1] * c[1], q[1][0] * c[0] + q[1][1] * c[1]];
                }
            }
        }
    }
    let (ac_acc, static_acc) = bookkeeping(schedule, setup, static_rate, true)?;
    Ok(RunResult {
        p1: p1.expect("schedule has a final rotation").clamp(0.0, 1.0),
        ac_phase: ac_acc.phase(),
        static_phase: static_acc.phase(),
        coherence,
    })
}

fn oracle_run(schedule: &EchoSchedule, setup: &RunSetup) -> Result<RunResult> {
    let omega = setup.system.transition_angular_frequency();
    let opts = setup.evolve_options(Frame::Lab);
    let last = last_rotation_index(schedule)?;
    let coherence = coherence_factor(schedule, &setup.system);
    let mut psi = SpinState::nv_level(0)?;
    let mut t_prev = 0.0;
    let mut pis = 0usize;
    let mut out = None;
    for (idx, ev) in schedule.events().iter().enumerate() {
        if ev.time > t_prev {
            let sampling = PathSampling::new(t_prev, ev.time, setup.oracle_steps, setup.trajectory, setup.field)?;
            psi = effective_hamiltonian_evolve(&sampling, &setup.system, &psi, &opts)?;
            t_prev = ev.time;
        }
        match ev.kind {
            PulseKind::Pump => psi = SpinState::nv_level(0)?,
            PulseKind::Readout => {}
            kind => {
                let rot = kind.rotation().expect("rotation pulse");
                // drive phase referenced to the |0⟩-|+1⟩ transition
                let lab = QubitRotation::new(rot.theta, rot.phi - omega * ev.time);
                if idx == last {
                    let a = psi.amplitudes();
                    let rel = wrap_angle((a[IDX_PLUS] / a[IDX_ZERO]).arg() + omega * ev.time);
                    let reference = if pis.is_multiple_of(2) { -FRAC_PI_2 } else { FRAC_PI_2 };
                    let mut rho: CMatrix = a * a.adjoint();
                    for i in 0..3 {
                        for j in 0..3 {
                            if i != j {
                                rho[(i, j)] *= coherence;
                            }
                        }
                    }
                    let r = lab.matrix();
                    let rho = &r * rho * r.adjoint();
                    out = Some((rho[(IDX_PLUS, IDX_PLUS)].re, wrap_angle(-(rel - reference))));
                } else {
                    psi = crate::physics::apply_rotation(&psi, &lab)?;
                    if matches!(kind, PulseKind::Pi { .. }) {
                        pis += 1;
                    }
                }
            }
        }
    }
    let (p1, ac_phase) = out.expect("schedule has a final rotation");
    let (_, static_acc) = bookkeeping(schedule, setup, rotating_static_rate(setup), false)?;
    Ok(RunResult {
        p1: p1.clamp(0.0, 1.0),
        ac_phase,
        static_phase: static_acc.phase(),
        coherence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    /// V/m
    pub field: f64,
    pub phase: f64,
    /// Without dephasing.
    pub p1: f64,
    pub p1_decohered: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalSweep {
    pub points: Vec<SweepPoint>,
    /// Index of the grid point with the largest `|dp1/dE|`.
    pub max_slope_index: usize,
}

impl SignalSweep {
    /// `dp1/dE` by second-order finite differences (central inside,
    /// three-point one-sided at the ends).
    pub fn slopes(&self) -> Vec<f64> {
        let p: Vec<(f64, f64)> = self.points.iter().map(|q| (q.field, q.p1)).collect();
        let n = p.len();
        if n < 2 {
            return vec![0.0; n];
        }
        if n == 2 {
            let s = (p[1].1 - p[0].1) / (p[1].0 - p[0].0);
            return vec![s; 2];
        }
        // derivative at x[i] of the parabola through three neighbouring samples
        let three = |a: usize, b: usize, c: usize, at: usize| {
            let (x0, y0) = p[a];
            let (x1, y1) = p[b];
            let (x2, y2) = p[c];
            let x = p[at].0;
            y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
                + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
                + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
        };
        (0..n)
            .map(|i| match i {
                0 => three(0, 1, 2, 0),
                i if i == n - 1 => three(n - 3, n - 2, n - 1, n - 1),
                i => three(i - 1, i, i + 1, i),
            })
            .collect()
    }

    /// Number of zeros of `p1 − ½` along the grid. Samples within `tol` of
    /// ½ count as a zero (runs of them count once); otherwise each sign
    /// change between neighbours counts.
    pub fn half_crossings(&self, tol: f64) -> usize {
        let mut count = 0;
        let mut prev_sign = 0i8;
        let mut in_zero = false;
        for pt in &self.points {
            let d = pt.p1 - 0.5;
            if d.abs() <= tol {
                if !in_zero {
                    count += 1;
                    in_zero = true;
                }
                prev_sign = 0;
                continue;
            }
            in_zero = false;
            let s = if d > 0.0 { 1 } else { -1 };
            if prev_sign != 0 && s != prev_sign {
                count += 1;
            }
            prev_sign = s;
        }
        count
    }
}

/// Fluorescence signal over a field grid (closed-form mode, parallel over
/// grid points).
pub fn sweep_signal(grid: &[f64], setup: &RunSetup, schedule: &EchoSchedule) -> Result<SignalSweep> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, w) in grid.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NonMonotoneGrid(i + 1));
        }
    }
    if !(grid[0] >= 0.0) {
        return Err(Error::NonMonotoneGrid(0));
    }
    let points = grid
        .par_iter()
        .map(|&e| {
            let s = setup.with_field(e)?;
            let ideal = simulate_run(schedule, &s.without_dephasing(), SimulationMode::ClosedForm)?;
            let real = simulate_run(schedule, &s, SimulationMode::ClosedForm)?;
            Ok(SweepPoint {
                field: e,
                phase: ideal.ac_phase,
                p1: ideal.p1,
                p1_decohered: real.p1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sweep = SignalSweep { points, max_slope_index: 0 };
    let slopes = sweep.slopes();
    sweep.max_slope_index = slopes
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, s)| if s.abs() >= best.1 { (i, s.abs()) } else { best })
        .0;
    Ok(sweep)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkModel {
    /// Hz per (V/cm)
    pub r2e: f64,
    /// Offset of the field from a crystal symmetry plane, rad.
    pub theta0: f64,
}

impl StarkModel {
    pub fn new(r2e: f64, theta0: f64) -> Result<Self> {
        if !(r2e.is_finite() && r2e >= 0.0) {
            return Err(Error::invalid("R2E", "must be non-negative"));
        }
        Ok(Self { r2e, theta0 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkReport {
    /// `R2E·E`, Hz
    pub coupling_hz: f64,
    /// `|+1⟩ − |−1⟩` Zeeman splitting, Hz
    pub zeeman_hz: f64,
    /// Adiabatic level shift `coupling²/zeeman`, Hz
    pub shift_hz: f64,
    /// Rate at which the coupling phase turns, `3·f_disk`, Hz
    pub modulation_hz: f64,
    /// `3·f_disk < zeeman/100`
    pub adiabatic: bool,
}

/// Second-order ground-state Stark shift of the `|±1⟩` levels.
pub fn stark_shift(field_v_per_m: f64, system: &NvSystem, stark: &StarkModel, disk_frequency: f64) -> Result<StarkReport> {
    let nv = &system.nv;
    if !(nv.b_z > 0.0) {
        return Err(Error::invalid("B_z", "must be positive; |+1> and |-1> are degenerate"));
    }
    let coupling_hz = stark.r2e * field_v_per_m / 100.0;
    let zeeman_hz = 2.0 * nv.g * system.constants.mu_b * nv.b_z / system.constants.h;
    let modulation_hz = 3.0 * disk_frequency.abs();
    Ok(StarkReport {
        coupling_hz,
        zeeman_hz,
        shift_hz: coupling_hz * coupling_hz / zeeman_hz,
        modulation_hz,
        adiabatic: modulation_hz < zeeman_hz / 100.0,
    })
}

/// `−h·E·R2E·(e^{−3iθ}|−1⟩⟨+1| + e^{3iθ}|+1⟩⟨−1|)` in joules.
pub fn stark_hamiltonian(field_v_per_m: f64, theta: f64, stark: &StarkModel, constants: &PhysicalConstants) -> CMatrix {
    let amp = -constants.h * stark.r2e * field_v_per_m / 100.0;
    let mut m = CMatrix::zeros(3, 3);
    m[(IDX_MINUS, IDX_PLUS)] = Complex64::from_polar(amp, -3.0 * theta);
    m[(IDX_PLUS, IDX_MINUS)] = Complex64::from_polar(amp, 3.0 * theta);
    m
}

/// Effect of a constant detuning on an echo run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoResidual {
    pub detuning_hz: f64,
    /// Net static phase at readout, rad.
    pub residual_phase: f64,
    pub p1: f64,
    pub p1_reference: f64,
}

impl EchoResidual {
    pub fn p1_change(&self) -> f64 {
        self.p1 - self.p1_reference
    }
}

pub fn echo_cancellation_check(detuning_hz: f64, schedule: &EchoSchedule, setup: &RunSetup) -> Result<EchoResidual> {
    let reference = simulate_run(schedule, setup, SimulationMode::ClosedForm)?;
    let run = simulate_run(schedule, &setup.with_detuning(setup.detuning_hz + detuning_hz), SimulationMode::ClosedForm)?;
    Ok(EchoResidual {
        detuning_hz,
        residual_phase: run.static_phase - reference.static_phase,
        p1: run.p1,
        p1_reference: reference.p1,
    })
}

/// Times of the π pulses in a schedule.
pub fn station_crossing_times(schedule: &EchoSchedule) -> Vec<f64> {
    schedule
        .events()
        .iter()
        .filter(|e| matches!(e.kind, PulseKind::Pi { .. }))
        .map(|e| e.time)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ac_phase::total_rectified_phase;
    use crate::linalg;
    use crate::physics::NVParameters;
    use std::f64::consts::TAU;

    fn setup(r: f64, f: f64, e: f64) -> RunSetup {
        RunSetup::new(
            DiskTrajectory::from_station_a(r, f, 0.0).unwrap(),
            FieldConfig::along_x(e).unwrap(),
            NvSystem::default(),
        )
    }

    #[test]
    fn schedule_examples() {
        let s = build_echo_schedule(1, 4000.0, 0.0).unwrap();
        assert_eq!(station_crossing_times(&s), vec![125e-6, 250e-6]);
        let last = s.events()[s.events().len() - 2];
        assert_eq!(last.time, 250e-6);
        assert!(matches!(last.kind, PulseKind::HalfPi { .. }));
        assert_eq!(build_echo_schedule(3, 4000.0, 0.0).unwrap().pi_count(), 6);
        assert!((build_echo_schedule(7, 4000.0, 0.0).unwrap().duration() - 1.75e-3).abs() < 1e-15);
        assert!(build_echo_schedule(0, 4000.0, 0.0).is_err());
        assert!(build_echo_schedule(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn schedule_structure() {
        let s = build_echo_schedule(4, 4000.0, 1.0).unwrap();
        let ev = s.events();
        assert!(matches!(ev[0].kind, PulseKind::Pump));
        assert!(matches!(ev[1].kind, PulseKind::HalfPi { phase } if phase == 0.0));
        assert!(matches!(ev[ev.len() - 2].kind, PulseKind::HalfPi { phase } if phase == -1.0));
        assert!(matches!(ev[ev.len() - 1].kind, PulseKind::Readout));
        assert!(ev.windows(2).all(|w| w[0].time <= w[1].time));
        assert_eq!(s.duration(), 4.0 / 4000.0);
    }

    #[test]
    fn zero_field_echo_ends_in_plus_one() {
        for n in [1, 2, 5] {
            let sched = build_echo_schedule(n, 4000.0, 0.0).unwrap();
            let st = setup(0.01, 4000.0, 0.0).without_dephasing();
            let r = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
            assert!((r.p1 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn default_parameters_fringe() {
        let sched = build_echo_schedule(7, 4000.0, 0.0).unwrap();
        let st = setup(0.01, 4000.0, 3e7).without_dephasing();
        let r = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
        let phi = total_rectified_phase(0.01, 3e7, 7.0, &st.system).unwrap();
        assert!((r.ac_phase - phi).abs() < 1e-9 * phi);
        assert!((r.p1 - 0.5 * (1.0 + phi.cos())).abs() < 1e-12);
    }

    #[test]
    fn signal_contract_with_lag_and_dephasing() {
        let st = setup(0.012, 3000.0, 2.2e7);
        for lag in [0.0, 0.4, 2.146, -1.0] {
            let sched = build_echo_schedule(5, 3000.0, lag).unwrap();
            let r = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
            let phi = total_rectified_phase(0.012, 2.2e7, 5.0, &st.system).unwrap();
            let expected = fringe_signal(phi, lag, (-sched.duration() / st.system.nv.t2).exp());
            assert!((r.p1 - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_matches_closed_form_small_case() {
        let mut st = setup(0.01, 4000.0, 1.5e7).without_dephasing();
        st.oracle_steps = 20_000;
        let sched = build_echo_schedule(1, 4000.0, 0.3).unwrap();
        let a = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
        let b = simulate_run(&sched, &st, SimulationMode::Oracle).unwrap();
        assert!((a.p1 - b.p1).abs() < 1e-7, "{} vs {}", a.p1, b.p1);
        assert!((wrap_angle(a.ac_phase) - b.ac_phase).abs() < 1e-6);
    }

    #[test]
    fn closed_form_rejects_tilt() {
        let mut st = setup(0.01, 4000.0, 1e7);
        st.trajectory.tilt = 0.2;
        let sched = build_echo_schedule(1, 4000.0, 0.0).unwrap();
        assert!(matches!(
            simulate_run(&sched, &st, SimulationMode::ClosedForm),
            Err(Error::TiltedTrajectory)
        ));
    }

    #[test]
    fn mismatched_frequency_rejected() {
        let st = setup(0.01, 4000.0, 1e7);
        let sched = build_echo_schedule(1, 3000.0, 0.0).unwrap();
        assert!(simulate_run(&sched, &st, SimulationMode::ClosedForm).is_err());
    }

    #[test]
    fn lag_examples() {
        assert!((optimal_readout_lag(10.0).unwrap() - 2.146).abs() < 1e-3);
        assert!((optimal_readout_lag(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!(optimal_readout_lag(FRAC_PI_2).unwrap().abs() < 1e-15);
        assert!(optimal_readout_lag(-1.0).is_err());
    }

    fn fig2b() -> (RunSetup, EchoSchedule, f64) {
        let st = setup(0.01, 4000.0, 0.0);
        let e0 = crate::ac_phase::field_for_phase(10.0, 0.01, 7.0, &st.system).unwrap();
        let lag = optimal_readout_lag(10.0).unwrap();
        (st, build_echo_schedule(7, 4000.0, lag).unwrap(), e0)
    }

    #[test]
    fn sweep_examples() {
        let (st, sched, e0) = fig2b();
        let grid: Vec<f64> = (0..=200).map(|k| e0 * k as f64 / 200.0).collect();
        let sweep = sweep_signal(&grid, &st, &sched).unwrap();
        // ½(1 + cos(−2.146018…)) evaluated independently
        assert!((sweep.points[0].p1 - 0.22798944455531495).abs() < 1e-12);
        assert!((sweep.points[200].p1 - 0.5).abs() < 1e-9);
        assert_eq!(sweep.max_slope_index, 200);
        assert_eq!(sweep.half_crossings(1e-9), 4);
        assert!(sweep.points.iter().all(|p| (p.p1_decohered - 0.5).abs() <= (p.p1 - 0.5).abs() + 1e-15));
    }

    #[test]
    fn sweep_errors() {
        let (st, sched, _) = fig2b();
        assert!(matches!(sweep_signal(&[], &st, &sched), Err(Error::EmptyGrid)));
        assert!(matches!(sweep_signal(&[0.0, 2.0, 1.0], &st, &sched), Err(Error::NonMonotoneGrid(2))));
        assert!(matches!(sweep_signal(&[0.0, 1.0, 1.0], &st, &sched), Err(Error::NonMonotoneGrid(2))));
    }

    #[test]
    fn slopes_match_analytic_derivative() {
        let (st, sched, e0) = fig2b();
        for n in [11usize, 41, 201] {
            let grid: Vec<f64> = (0..n).map(|k| e0 * k as f64 / (n - 1) as f64).collect();
            let sweep = sweep_signal(&grid, &st, &sched).unwrap();
            assert_eq!(sweep.max_slope_index, n - 1, "grid {n}");
        }
        let grid: Vec<f64> = (0..=400).map(|k| e0 * k as f64 / 400.0).collect();
        let sweep = sweep_signal(&grid, &st, &sched).unwrap();
        let dphi_de = 10.0 / e0;
        for (p, s) in sweep.points.iter().zip(sweep.slopes()) {
            let exact = -0.5 * (p.phase - sched.lag()).sin() * dphi_de;
            assert!((s - exact).abs() < 1e-3 * dphi_de);
        }
    }

    #[test]
    fn stark_examples() {
        let sys = NvSystem::default();
        let model = StarkModel::new(20.0, 0.0).unwrap();
        let rep = stark_shift(3e7, &sys, &model, 4000.0).unwrap();
        assert!((rep.coupling_hz - 6e6).abs() < 1e-6);
        // 2·g·μ_B·(1 mT)/h and 36e12/f_z from an independent evaluation
        assert!((rep.zeeman_hz - 55984979.74429082).abs() < 1e-4);
        assert!((rep.shift_hz - 643029.6155223879).abs() < 1e-6);
        assert_eq!(rep.modulation_hz, 12_000.0);
        assert!(rep.adiabatic);
        let zero_b = NvSystem { nv: NVParameters { b_z: 0.0, ..Default::default() }, ..sys };
        assert!(stark_shift(3e7, &zero_b, &model, 4000.0).is_err());
    }

    #[test]
    fn stark_shift_matches_exact_diagonalization() {
        let sys = NvSystem::default();
        let model = StarkModel::new(20.0, 0.3).unwrap();
        let e = 3e7;
        let h = sys.hamiltonian() + stark_hamiltonian(e, 0.3, &model, &sys.constants);
        assert!(linalg::hermiticity_residual(&h) < 1e-40);
        let (vals, _) = linalg::hermitian_eigen(&h);
        let mut vals: Vec<f64> = vals.iter().map(|v| v / sys.constants.h).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let h0 = sys.hamiltonian();
        let e_plus = h0[(IDX_PLUS, IDX_PLUS)].re / sys.constants.h;
        let exact = vals[2] - e_plus;
        let rep = stark_shift(e, &sys, &model, 4000.0).unwrap();
        assert!(exact > 0.0);
        assert!((exact - rep.shift_hz).abs() / rep.shift_hz < 0.02, "{exact} vs {}", rep.shift_hz);
    }

    #[test]
    fn echo_cancels_constant_detuning() {
        let st = setup(0.01, 4000.0, 2e7);
        let sched = build_echo_schedule(5, 4000.0, 0.7).unwrap();
        let r = echo_cancellation_check(1e6, &sched, &st).unwrap();
        assert!(r.residual_phase.abs() < 1e-9);
        assert!(r.p1_change().abs() < 1e-9);
        let zero = echo_cancellation_check(0.0, &sched, &st).unwrap();
        assert_eq!(zero.residual_phase, 0.0);
    }

    #[test]
    fn odd_pulse_count_leaves_one_interval() {
        let st = setup(0.01, 4000.0, 0.0);
        let sched = EchoSchedule::with_half_turns(9, 4000.0, 0.0, true).unwrap();
        assert_eq!(sched.pi_count(), 9);
        let delta = 1e6;
        let r = echo_cancellation_check(delta, &sched, &st).unwrap();
        let expected = TAU * delta / (2.0 * 4000.0);
        // odd count: the first and last legs share a sign, so one leg survives
        assert!((r.residual_phase.abs() - expected).abs() < 1e-9 * expected, "{}", r.residual_phase);
    }

    #[test]
    fn no_pi_control_accumulates_nothing() {
        let st = setup(0.01, 4000.0, 3e7);
        for n in 1..=8 {
            let sched = build_echo_schedule(n, 4000.0, 0.0).unwrap();
            let ctl = simulate_run(&sched.without_pi_pulses(), &st, SimulationMode::ClosedForm).unwrap();
            assert!(ctl.ac_phase.abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_terms_cancel_in_echo() {
        let sched = build_echo_schedule(2, 4000.0, 0.5).unwrap();
        let st = setup(0.01, 4000.0, 2e7);
        let mut heavy = st;
        // unphysically light mass so the shift is large
        heavy.quadratic_mass = Some(1e-40);
        let rate = rotating_static_rate(&heavy);
        assert!(rate.abs() > 1e5, "{rate}");
        let a = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
        let b = simulate_run(&sched, &heavy, SimulationMode::ClosedForm).unwrap();
        assert!((a.p1 - b.p1).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn detuning_invariance(delta in 0.0f64..1e7, e in 0.0f64..3e7, n in 1u32..10, lag in 0.0f64..3.0) {
                let st = setup(0.01, 4000.0, e);
                let sched = build_echo_schedule(n, 4000.0, lag).unwrap();
                let r = echo_cancellation_check(delta, &sched, &st).unwrap();
                prop_assert!(r.p1_change().abs() < 1e-9);
            }

            #[test]
            fn fringe_periodic_in_phase(phi in 0.0f64..50.0, lag in 0.0f64..3.2, coh in 0.0f64..1.0) {
                let a = fringe_signal(phi, lag, coh);
                let b = fringe_signal(phi + TAU, lag, coh);
                prop_assert!((a - b).abs() < 1e-10);
            }

            #[test]
            fn coherence_scales_fringe_only(e in 0.0f64..3e7, n in 1u32..10, t2 in 1e-4f64..1e-2) {
                let mut st = setup(0.01, 4000.0, e);
                st.system.nv.t2 = t2;
                let sched = build_echo_schedule(n, 4000.0, 0.3).unwrap();
                let real = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
                let ideal = simulate_run(&sched, &st.without_dephasing(), SimulationMode::ClosedForm).unwrap();
                let expected = 0.5 + real.coherence * (ideal.p1 - 0.5);
                prop_assert!((real.p1 - expected).abs() < 1e-12);
            }

            #[test]
            fn p1_within_unit_interval(e in 0.0f64..3e7, n in 1u32..10, lag in -4.0f64..4.0) {
                let st = setup(0.01, 4000.0, e);
                let sched = build_echo_schedule(n, 4000.0, lag).unwrap();
                let r = simulate_run(&sched, &st, SimulationMode::ClosedForm).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.p1));
            }
        }
    }
}
