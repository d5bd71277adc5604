//! Closed-form (Abelian) A-C phase for planar motion in a uniform field.
//!
//! The phase picked up by `|+1⟩` relative to `|0⟩` is
//! `Φ_AC = (gμ_B/ħc²) ∫ (ẑ × E)·dx`, entering the `|+1⟩` amplitude as
//! `exp(−iΦ_AC)`. For a uniform in-plane field the line integral only
//! depends on the endpoints.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::{DiskTrajectory, FieldConfig};
use crate::physics::NvSystem;

fn check_planar(traj: &DiskTrajectory, field: &FieldConfig) -> Result<Vector3<f64>> {
    if traj.tilt != 0.0 || field.direction.z != 0.0 {
        return Err(Error::TiltedTrajectory);
    }
    // ẑ × E
    let e = field.vector();
    Ok(Vector3::new(-e.y, e.x, 0.0))
}

/// Instantaneous A-C phase rate, rad/s.
pub fn phase_rate(t: f64, traj: &DiskTrajectory, field: &FieldConfig, sys: &NvSystem) -> Result<f64> {
    let k_cross_e = check_planar(traj, field)?;
    Ok(sys.ac_coupling() * k_cross_e.dot(&traj.velocity(t)))
}

/// A-C phase accumulated between `t0` and `t1`, rad.
pub fn segment_phase(
    t0: f64,
    t1: f64,
    traj: &DiskTrajectory,
    field: &FieldConfig,
    sys: &NvSystem,
) -> Result<f64> {
    let k_cross_e = check_planar(traj, field)?;
    Ok(sys.ac_coupling() * k_cross_e.dot(&(traj.position(t1) - traj.position(t0))))
}

/// Total phase of `n` echo-rectified rotations: `4·g·μ_B·r·E·n/(ħc²)`.
pub fn total_rectified_phase(r: f64, e: f64, n: f64, sys: &NvSystem) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::invalid("r", "must be non-negative"));
    }
    if !(e >= 0.0) {
        return Err(Error::invalid("E", "must be non-negative"));
    }
    if !(n >= 0.0) {
        return Err(Error::invalid("n", "must be non-negative"));
    }
    Ok(4.0 * sys.ac_coupling() * r * e * n)
}

/// Inverse of [`total_rectified_phase`] in the field: the `E` giving `phi`.
pub fn field_for_phase(phi: f64, r: f64, n: f64, sys: &NvSystem) -> Result<f64> {
    if !(phi >= 0.0 && r > 0.0 && n > 0.0) {
        return Err(Error::invalid("phi", "needs phi >= 0, r > 0, n > 0"));
    }
    Ok(phi / (4.0 * sys.ac_coupling() * r * n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSegment {
    pub t0: f64,
    pub t1: f64,
    pub delta: f64,
}

/// Running signed phase with a per-segment log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseAccumulator {
    phase: f64,
    segments: Vec<PhaseSegment>,
}

impl PhaseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t0: f64, t1: f64, delta: f64) {
        self.phase += delta;
        self.segments.push(PhaseSegment { t0, t1, delta });
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn segments(&self) -> &[PhaseSegment] {
        &self.segments
    }
}
