//! Path-ordered spin propagator along a prescribed trajectory.
//!
//! The moving dipole sees the generator `G(t) = κ·(Ŝ × E)·ṙ(t)` with
//! `κ = gμ_B/(ħc²)`, and the spin propagator solves `dU/dt = −i·G(t)·U`.
//! For planar motion in an in-plane field `G ∝ Sz` at all times and `U`
//! reduces to the Abelian phase `exp(−iΦ_AC·Sz)`; tilting the disk adds an
//! `Sy` component and the ordering starts to matter.
//!
//! Integration uses one exponential per step of the generator sampled at the
//! step midpoint. Each factor is exactly unitary and the scheme is second
//! order in the step size.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{DiskTrajectory, FieldConfig};
use crate::linalg::{self, commutator, hermitian_exp, CMatrix, CVector};
use crate::physics::{NvSystem, SpinOperators, SpinState, IDX_PLUS};

/// Largest allowed `dt·‖G‖` per step, rad.
pub const MAX_STEP_PHASE: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSampling {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    pub trajectory: DiskTrajectory,
    pub field: FieldConfig,
}

impl PathSampling {
    pub fn new(
        t_start: f64,
        t_end: f64,
        steps: usize,
        trajectory: DiskTrajectory,
        field: FieldConfig,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("steps", "must be at least 1"));
        }
        if !(t_end > t_start) {
            return Err(Error::invalid("t_end", "must be later than t_start"));
        }
        Ok(Self {
            t_start,
            t_end,
            steps,
            trajectory,
            field,
        })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    fn midpoint(&self, k: usize) -> f64 {
        self.t_start + (k as f64 + 0.5) * self.dt()
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(self.t_start, self.t_end, steps, self.trajectory, self.field)
    }

    pub fn with_trajectory(&self, trajectory: DiskTrajectory) -> Self {
        Self { trajectory, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Propagator {
    matrix: CMatrix,
}

impl Propagator {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn unitarity_residual(&self) -> f64 {
        linalg::unitarity_residual(&self.matrix)
    }

    pub fn offdiag_norm(&self) -> f64 {
        linalg::offdiag_norm(&self.matrix)
    }

    /// `U_later · U_self`
    pub fn then(&self, later: &Propagator) -> Propagator {
        Propagator {
            matrix: &later.matrix * &self.matrix,
        }
    }
}

/// `G(t) = κ·Ŝ·(E × v)` in rad/s, in the basis of `ops`.
pub fn coupling_generator(t: f64, sampling: &PathSampling, ops: &SpinOperators, sys: &NvSystem) -> CMatrix {
    generator_at(t, &sampling.trajectory, &sampling.field, ops, sys.ac_coupling())
}

fn generator_at(
    t: f64,
    traj: &DiskTrajectory,
    field: &FieldConfig,
    ops: &SpinOperators,
    kappa: f64,
) -> CMatrix {
    let e = field.field_at(&traj.position(t));
    let v = traj.velocity(t);
    ops.dot(&(e.cross(&v) * kappa))
}

fn checked_generator(
    k: usize,
    sampling: &PathSampling,
    ops: &SpinOperators,
    kappa: f64,
) -> Result<CMatrix> {
    let t = sampling.midpoint(k);
    let g = generator_at(t, &sampling.trajectory, &sampling.field, ops, kappa);
    let step_phase = sampling.dt() * linalg::norm_inf(&g);
    if step_phase >= MAX_STEP_PHASE {
        return Err(Error::StepTooCoarse { step_phase, time: t });
    }
    Ok(g)
}

/// Ordered product of midpoint step exponentials, later steps on the left.
pub fn path_ordered_propagator(
    sampling: &PathSampling,
    ops: &SpinOperators,
    sys: &NvSystem,
) -> Result<Propagator> {
    let kappa = sys.ac_coupling();
    let dt = sampling.dt();
    let mut u = linalg::identity(ops.dimension());
    for k in 0..sampling.steps {
        let g = checked_generator(k, sampling, ops, kappa)?;
        u = hermitian_exp(&g, dt) * u;
    }
    Ok(Propagator { matrix: u })
}

/// `∫ G dt` (midpoint rule), the first-order Dyson/Magnus term up to `−i`.
pub fn integrated_generator(sampling: &PathSampling, ops: &SpinOperators, sys: &NvSystem) -> Result<CMatrix> {
    let kappa = sys.ac_coupling();
    let dt = Complex64::new(sampling.dt(), 0.0);
    let mut acc = CMatrix::zeros(ops.dimension(), ops.dimension());
    for k in 0..sampling.steps {
        acc += checked_generator(k, sampling, ops, kappa)? * dt;
    }
    Ok(acc)
}

/// Leading ordering correction `½ ∬_{t'<t} [G(t), G(t')] dt' dt`.
///
/// With `Θ = ∫G dt` and this term `M`, the propagator is
/// `U ≈ exp(−iΘ − M)`. `M` vanishes whenever the generators commute.
pub fn dyson_second_order(sampling: &PathSampling, ops: &SpinOperators, sys: &NvSystem) -> Result<CMatrix> {
    let kappa = sys.ac_coupling();
    let dt = Complex64::new(sampling.dt(), 0.0);
    let n = ops.dimension();
    let mut running = CMatrix::zeros(n, n);
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..sampling.steps {
        let g = checked_generator(k, sampling, ops, kappa)? * dt;
        acc += commutator(&g, &running);
        running += g;
    }
    Ok(acc * Complex64::new(0.5, 0.0))
}

/// Propagators for the sampled path and for the same circle traversed in
/// the opposite sense over the same time window.
#[derive(Clone, Debug)]
pub struct PathDependence {
    pub forward: Propagator,
    pub reverse: Propagator,
    /// `‖U_fwd − U_rev‖_F`, equal to `‖U_fwd·U_rev† − I‖_F`.
    pub difference_norm: f64,
    /// `‖M_fwd‖_F` from [`dyson_second_order`].
    pub second_order_norm: f64,
}

impl PathDependence {
    /// `difference_norm / (2·second_order_norm)`; 1 at leading order.
    pub fn dyson_ratio(&self) -> f64 {
        self.difference_norm / (2.0 * self.second_order_norm)
    }
}

/// Compares the propagator for the sampled path with the one for the same
/// circle traversed in the opposite sense. For a half turn from station A
/// both paths end at station B, so any difference is path dependence.
pub fn path_dependence(sampling: &PathSampling, ops: &SpinOperators, sys: &NvSystem) -> Result<PathDependence> {
    let reversed = sampling.with_trajectory(sampling.trajectory.reversed());
    let forward = path_ordered_propagator(sampling, ops, sys)?;
    let reverse = path_ordered_propagator(&reversed, ops, sys)?;
    let difference_norm = (forward.matrix() - reverse.matrix()).norm();
    let second_order_norm = dyson_second_order(sampling, ops, sys)?.norm();
    Ok(PathDependence {
        forward,
        reverse,
        difference_norm,
        second_order_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Frame {
    /// Static `H_s` evolution included.
    #[default]
    Lab,
    /// Interaction picture with respect to `H_s`.
    Rotating,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvolveOptions {
    pub frame: Frame,
    /// Extra constant precession of `|+1⟩`, Hz (not removed by the frame).
    pub detuning_hz: f64,
    /// When set, adds the diagonal part of the field-quadratic terms
    /// `μ²E²/(2mc⁴) − [μŜ×E]²/(2mc⁴)` for effective mass `m` (kg).
    pub quadratic_mass: Option<f64>,
}

/// Static diagonal generator (rad/s) in the NV basis.
pub(crate) fn static_generator(sys: &NvSystem, field: &FieldConfig, opts: &EvolveOptions) -> [f64; 3] {
    let c = &sys.constants;
    let mut w = [0.0; 3];
    if opts.frame == Frame::Lab {
        let h = sys.hamiltonian();
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = h[(k, k)].re / c.hbar;
        }
    }
    w[IDX_PLUS] += std::f64::consts::TAU * opts.detuning_hz;
    if let Some(mass) = opts.quadratic_mass {
        let ops = SpinOperators::nv();
        let mu = sys.nv.g * c.mu_b;
        let e = field.vector();
        let scale = 1.0 / (2.0 * mass * c.c.powi(4) * c.hbar);
        let cross = spin_cross(&ops, &e);
        let sq = &cross[0] * &cross[0] + &cross[1] * &cross[1] + &cross[2] * &cross[2];
        for (k, wk) in w.iter_mut().enumerate() {
            *wk += scale * mu * mu * (e.norm_squared() - sq[(k, k)].re);
        }
    }
    w
}

/// Components of the operator vector `Ŝ × E`.
fn spin_cross(ops: &SpinOperators, e: &Vector3<f64>) -> [CMatrix; 3] {
    let c = |x: f64| Complex64::new(x, 0.0);
    [
        &ops.sy * c(e.z) - &ops.sz * c(e.y),
        &ops.sz * c(e.x) - &ops.sx * c(e.z),
        &ops.sx * c(e.y) - &ops.sy * c(e.x),
    ]
}

/// Integrates `iħ d|ψ⟩/dt = [H_s + ħG(t)]|ψ⟩` for the NV spin along the
/// sampled path.
///
/// Uses symmetric splitting: half a step of the (diagonal) static part, a
/// full midpoint step of `G`, another half static step.
pub fn effective_hamiltonian_evolve(
    sampling: &PathSampling,
    sys: &NvSystem,
    initial: &SpinState,
    opts: &EvolveOptions,
) -> Result<SpinState> {
    if initial.dimension() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: initial.dimension(),
        });
    }
    let ops = SpinOperators::nv();
    let kappa = sys.ac_coupling();
    let dt = sampling.dt();
    let w = static_generator(sys, &sampling.field, opts);
    let half: Vec<Complex64> = w.iter().map(|&wk| Complex64::from_polar(1.0, -0.5 * wk * dt)).collect();
    let mut psi: CVector = initial.amplitudes().clone();
    for k in 0..sampling.steps {
        let g = checked_generator(k, sampling, &ops, kappa)?;
        for (a, h) in psi.iter_mut().zip(&half) {
            *a *= h;
        }
        psi = hermitian_exp(&g, dt) * psi;
        for (a, h) in psi.iter_mut().zip(&half) {
            *a *= h;
        }
    }
    Ok(SpinState::from_raw(psi))
}
