//! Disk trajectory, pulse stations and the plate field.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};

/// Classical path of the diamond on the edge of a spinning disk.
///
/// The untilted path lies in the x-y plane centred on the origin. `tilt`
/// rotates the disk plane rigidly about the y axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskTrajectory {
    /// m
    pub radius: f64,
    /// Rotations per second; positive is counterclockwise seen from +z.
    pub frequency: f64,
    /// rad
    pub initial_angle: f64,
    /// rad
    pub tilt: f64,
}

impl DiskTrajectory {
    pub fn new(radius: f64, frequency: f64, initial_angle: f64, tilt: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("radius", "must be positive"));
        }
        if !frequency.is_finite() || frequency == 0.0 {
            return Err(Error::invalid("frequency", "must be finite and non-zero"));
        }
        if !initial_angle.is_finite() || !tilt.is_finite() {
            return Err(Error::invalid("angle", "must be finite"));
        }
        Ok(Self {
            radius,
            frequency,
            initial_angle,
            tilt,
        })
    }

    /// Trajectory starting at station A (bottom of the disk).
    pub fn from_station_a(radius: f64, frequency: f64, tilt: f64) -> Result<Self> {
        Self::new(radius, frequency, PulseStations::default().angle_a, tilt)
    }

    pub fn angle(&self, t: f64) -> f64 {
        self.initial_angle + TAU * self.frequency * t
    }

    pub fn angular_velocity(&self) -> f64 {
        TAU * self.frequency
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency.abs()
    }

    pub fn speed(&self) -> f64 {
        TAU * self.frequency.abs() * self.radius
    }

    /// Same circle traversed in the opposite sense.
    pub fn reversed(&self) -> Self {
        Self {
            frequency: -self.frequency,
            ..*self
        }
    }

    fn tilt_rotation(&self) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), self.tilt)
    }

    fn tilted(&self, v: Vector3<f64>) -> Vector3<f64> {
        if self.tilt == 0.0 {
            v
        } else {
            self.tilt_rotation() * v
        }
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        let (s, c) = self.angle(t).sin_cos();
        self.tilted(Vector3::new(self.radius * c, self.radius * s, 0.0))
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        let (s, c) = self.angle(t).sin_cos();
        let w = self.angular_velocity() * self.radius;
        self.tilted(Vector3::new(-w * s, w * c, 0.0))
    }
}

/// Uniform field between idealized infinite plates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldConfig {
    /// V/m
    pub magnitude: f64,
    pub direction: Vector3<f64>,
}

impl FieldConfig {
    pub fn new(magnitude: f64, direction: Vector3<f64>) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::invalid("E", "magnitude must be non-negative"));
        }
        if (direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("direction", "must be a unit vector"));
        }
        Ok(Self {
            magnitude,
            direction,
        })
    }

    pub fn along_x(magnitude: f64) -> Result<Self> {
        Self::new(magnitude, Vector3::x())
    }

    pub fn with_magnitude(&self, magnitude: f64) -> Result<Self> {
        Self::new(magnitude, self.direction)
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.direction * self.magnitude
    }

    /// Field at `x`; the plates are idealized, so `x` does not matter.
    pub fn field_at(&self, _x: &Vector3<f64>) -> Vector3<f64> {
        self.vector()
    }
}

/// Angular positions of the microwave stations A and B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseStations {
    pub angle_a: f64,
    pub angle_b: f64,
}

impl PulseStations {
    pub fn new(angle_a: f64) -> Self {
        Self {
            angle_a,
            angle_b: angle_a + PI,
        }
    }

    pub fn position_a(&self, radius: f64) -> Vector3<f64> {
        Vector3::new(radius * self.angle_a.cos(), radius * self.angle_a.sin(), 0.0)
    }

    pub fn position_b(&self, radius: f64) -> Vector3<f64> {
        Vector3::new(radius * self.angle_b.cos(), radius * self.angle_b.sin(), 0.0)
    }
}

/// A at the bottom of the disk `(0, −r)`, B at the top `(0, +r)`.
pub fn default_stations() -> PulseStations {
    PulseStations::new(-FRAC_PI_2)
}

impl Default for PulseStations {
    fn default() -> Self {
        default_stations()
    }
}
