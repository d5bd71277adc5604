//! Readout statistics: contrast, sensitivity and a photon-counting Monte
//! Carlo of the phase estimate.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sequence::{simulate_run, EchoSchedule, RunSetup, SimulationMode};

/// Mean detected photons per shot for each projected state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutModel {
    pub alpha0: f64,
    pub alpha1: f64,
}

impl ReadoutModel {
    pub fn new(alpha0: f64, alpha1: f64) -> Result<Self> {
        if !(alpha1.is_finite() && alpha1 >= 0.0) {
            return Err(Error::invalid("alpha1", "must be non-negative"));
        }
        if !(alpha0.is_finite() && alpha0 > alpha1) {
            return Err(Error::invalid("alpha0", "must exceed alpha1"));
        }
        Ok(Self { alpha0, alpha1 })
    }
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self {
            alpha0: 0.075,
            alpha1: 0.05,
        }
    }
}

/// `C = [1 + 2(α0+α1)/(α0−α1)²]^(−1/2)`
pub fn contrast(model: &ReadoutModel) -> Result<f64> {
    let ReadoutModel { alpha0, alpha1 } = *model;
    let diff = alpha0 - alpha1;
    if !(diff > 0.0) || alpha1 < 0.0 {
        return Err(Error::invalid("alpha0", "must exceed alpha1"));
    }
    Ok((1.0 + 2.0 * (alpha0 + alpha1) / (diff * diff)).powf(-0.5))
}

/// `η = √2/(C√T2)` in rad·Hz^(−1/2), used as `ΔΦ(T) = η/√T`.
pub fn analytic_sensitivity(c: f64, t2: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid("C", "must lie in (0, 1]"));
    }
    if !(t2.is_finite() && t2 > 0.0) {
        return Err(Error::invalid("T2", "must be positive"));
    }
    Ok(std::f64::consts::SQRT_2 / (c * t2.sqrt()))
}

/// Averaging time `(η/ΔΦ)²` to reach phase precision `delta_phi`.
pub fn time_to_precision(eta: f64, delta_phi: f64) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if !(delta_phi.is_finite() && delta_phi > 0.0) {
        return Err(Error::invalid("delta_phi", "must be positive"));
    }
    Ok((eta / delta_phi).powi(2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityReport {
    pub c: f64,
    pub t2: f64,
    pub eta: f64,
    pub n: f64,
    pub eta_ensemble: f64,
    /// Time to reach 1 rad with a single centre, s.
    pub t_to_1rad: f64,
}

pub fn sensitivity_report(c: f64, t2: f64, n: f64) -> Result<SensitivityReport> {
    if !(n.is_finite() && n >= 1.0) {
        return Err(Error::invalid("N", "must be at least 1"));
    }
    let eta = analytic_sensitivity(c, t2)?;
    Ok(SensitivityReport {
        c,
        t2,
        eta,
        n,
        eta_ensemble: eta / n.sqrt(),
        t_to_1rad: time_to_precision(eta, 1.0)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarloResult {
    pub shots: u64,
    pub true_phase: f64,
    /// Mean single-shot phase estimate, rad.
    pub phase_mean: f64,
    /// Single-shot standard deviation, rad.
    pub phase_std: f64,
    /// `phase_std/√shots`
    pub phase_std_error: f64,
    pub p1: f64,
    /// `dp1/dΦ` at the bias point.
    pub slope: f64,
}

fn photon_count(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng)
}

/// Fringe value and `dp1/dΦ` at field `e` by central differences in field.
fn fringe_and_slope(e: f64, setup: &RunSetup, schedule: &EchoSchedule) -> Result<(f64, f64, f64)> {
    let centre = simulate_run(schedule, &setup.with_field(e)?, SimulationMode::ClosedForm)?;
    let h = 1e-4 * e.max(1e3);
    let lo = (e - h).max(0.0);
    let hi = e + h;
    let a = simulate_run(schedule, &setup.with_field(lo)?, SimulationMode::ClosedForm)?;
    let b = simulate_run(schedule, &setup.with_field(hi)?, SimulationMode::ClosedForm)?;
    let dphi = b.ac_phase - a.ac_phase;
    if dphi == 0.0 {
        return Err(Error::ZeroSlope);
    }
    Ok((centre.p1, centre.ac_phase, (b.p1 - a.p1) / dphi))
}

/// Simulated shot-by-shot phase estimation at bias field `e_bias`.
///
/// Each shot projects onto `|+1⟩` with probability `p1`, then draws a
/// Poisson photon count. The count is converted to a population estimate
/// and inverted through the local fringe slope. Shot `i` uses stream `i` of
/// a ChaCha8 generator seeded with `seed`, so results do not depend on
/// thread scheduling.
pub fn monte_carlo_experiment(
    e_bias: f64,
    setup: &RunSetup,
    schedule: &EchoSchedule,
    model: &ReadoutModel,
    shots: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
    if shots == 0 {
        return Err(Error::invalid("shots", "must be at least 1"));
    }
    let model = ReadoutModel::new(model.alpha0, model.alpha1)?;
    let (p1, true_phase, slope) = fringe_and_slope(e_bias, setup, schedule)?;
    if slope.abs() < 1e-9 {
        return Err(Error::ZeroSlope);
    }
    let bright = Bernoulli::new(p1).map_err(|e| Error::invalid("p1", e.to_string()))?;
    let span = model.alpha0 - model.alpha1;
    let estimates: Vec<f64> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let mean = if bright.sample(&mut rng) { model.alpha1 } else { model.alpha0 };
            let k = photon_count(&mut rng, mean);
            let p_hat = (model.alpha0 - k) / span;
            true_phase + (p_hat - p1) / slope
        })
        .collect();
    let n = shots as f64;
    let phase_mean = estimates.iter().sum::<f64>() / n;
    let var = if shots > 1 {
        estimates.iter().map(|x| (x - phase_mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let phase_std = var.sqrt();
    Ok(MonteCarloResult {
        shots,
        true_phase,
        phase_mean,
        phase_std,
        phase_std_error: phase_std / n.sqrt(),
        p1,
        slope,
    })
}
