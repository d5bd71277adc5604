//! Constants, NV ground-state parameters, spin operators and the static
//! spin Hamiltonian.
//!
//! Spin-1 NV states use the fixed basis order `(|−1⟩, |0⟩, |+1⟩)`. Generic
//! spin operators from [`SpinOperators::new`] are in the conventional
//! descending-`m` order; [`SpinOperators::nv`] gives the spin-1 set in the NV
//! basis order.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, I, ONE};

/// Index of each NV sublevel in state vectors and matrices.
pub const IDX_MINUS: usize = 0;
pub const IDX_ZERO: usize = 1;
pub const IDX_PLUS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    /// Bohr magneton, J/T.
    pub mu_b: f64,
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Planck constant, J·s.
    pub h: f64,
}

impl PhysicalConstants {
    /// CODATA 2018 values. ħ is derived from the exact SI value of h.
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        mu_b: 9.274_010_078_3e-24,
        hbar: 6.626_070_15e-34 / TAU,
        c: 299_792_458.0,
        h: 6.626_070_15e-34,
    };

    pub fn new(mu_b: f64, hbar: f64, c: f64, h: f64) -> Result<Self> {
        for (name, v) in [("mu_b", mu_b), ("hbar", hbar), ("c", c), ("h", h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be finite and positive"));
            }
        }
        if ((h - TAU * hbar) / h).abs() > 1e-12 {
            return Err(Error::invalid("h", "must equal 2*pi*hbar"));
        }
        Ok(Self { mu_b, hbar, c, h })
    }

    /// A-C coupling `g·μ_B/(ħc²)` in rad per (V/m · m).
    pub fn ac_coupling(&self, g: f64) -> f64 {
        g * self.mu_b / (self.hbar * self.c * self.c)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

/// NV ground-state parameters. Frequencies are ordinary (Hz), not angular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NVParameters {
    /// Zero-field splitting, Hz.
    pub d: f64,
    pub g: f64,
    /// Ground-state Stark coefficient, Hz per (V/cm).
    pub r2e: f64,
    /// Homogeneous dephasing time, s. `f64::INFINITY` disables dephasing.
    pub t2: f64,
    /// Axial magnetic field, T.
    pub b_z: f64,
}

impl NVParameters {
    pub fn new(d: f64, g: f64, r2e: f64, t2: f64, b_z: f64) -> Result<Self> {
        let p = Self { d, g, r2e, t2, b_z };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::invalid("D", "must be positive"));
        }
        if !(self.g.is_finite() && self.g > 0.0) {
            return Err(Error::invalid("g", "must be positive"));
        }
        if !(self.r2e.is_finite() && self.r2e >= 0.0) {
            return Err(Error::invalid("R2E", "must be non-negative"));
        }
        if !(self.t2 > 0.0) || self.t2.is_nan() {
            return Err(Error::invalid("T2", "must be positive"));
        }
        if !(self.b_z.is_finite() && self.b_z >= 0.0) {
            return Err(Error::invalid("B_z", "must be non-negative"));
        }
        Ok(())
    }

    pub fn without_dephasing(mut self) -> Self {
        self.t2 = f64::INFINITY;
        self
    }
}

impl Default for NVParameters {
    fn default() -> Self {
        Self {
            d: 2.88e9,
            g: 2.0,
            r2e: 20.0,
            t2: 1.8e-3,
            b_z: 1e-3,
        }
    }
}

/// Parameters plus the constants they are evaluated with.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NvSystem {
    pub nv: NVParameters,
    pub constants: PhysicalConstants,
}

impl NvSystem {
    pub fn new(nv: NVParameters, constants: PhysicalConstants) -> Self {
        Self { nv, constants }
    }

    pub fn ac_coupling(&self) -> f64 {
        self.constants.ac_coupling(self.nv.g)
    }

    pub fn hamiltonian(&self) -> CMatrix {
        ground_state_hamiltonian(&self.nv, &self.constants)
    }

    /// Angular frequency of the |0⟩ → |+1⟩ transition, rad/s.
    pub fn transition_angular_frequency(&self) -> f64 {
        let e = level_energies(&self.nv, &self.constants);
        e[IDX_PLUS] / self.constants.hbar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisOrder {
    /// `m = +S, …, −S`
    Descending,
    /// `m = −S, …, +S` (the NV convention)
    Ascending,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperators {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub order: BasisOrder,
}

impl SpinOperators {
    /// Angular-momentum matrices (units of ħ) for spin 1/2 (`dimension = 2`)
    /// or spin 1 (`dimension = 3`), descending-`m` order.
    pub fn new(dimension: usize) -> Result<Self> {
        if !(dimension == 2 || dimension == 3) {
            return Err(Error::UnsupportedDimension(dimension));
        }
        let s = (dimension as f64 - 1.0) / 2.0;
        let m = |i: usize| s - i as f64;
        // S+ raises m: row i-1, column i.
        let mut raise = CMatrix::zeros(dimension, dimension);
        for i in 1..dimension {
            let mi = m(i);
            raise[(i - 1, i)] = Complex64::new((s * (s + 1.0) - mi * (mi + 1.0)).sqrt(), 0.0);
        }
        let lower = raise.adjoint();
        let sx = (&raise + &lower) * Complex64::new(0.5, 0.0);
        let sy = (&raise - &lower) * Complex64::new(0.0, -0.5);
        let sz = linalg::real_diagonal(&(0..dimension).map(m).collect::<Vec<_>>());
        Ok(Self {
            sx,
            sy,
            sz,
            order: BasisOrder::Descending,
        })
    }

    /// Spin-1 operators in the NV basis order `(|−1⟩, |0⟩, |+1⟩)`.
    pub fn nv() -> Self {
        Self::new(3).expect("spin-1 is supported").reversed()
    }

    pub fn reversed(&self) -> Self {
        let flip = |a: &CMatrix| {
            let n = a.nrows();
            CMatrix::from_fn(n, n, |i, j| a[(n - 1 - i, n - 1 - j)])
        };
        Self {
            sx: flip(&self.sx),
            sy: flip(&self.sy),
            sz: flip(&self.sz),
            order: match self.order {
                BasisOrder::Descending => BasisOrder::Ascending,
                BasisOrder::Ascending => BasisOrder::Descending,
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.sz.nrows()
    }

    pub fn spin(&self) -> f64 {
        (self.dimension() as f64 - 1.0) / 2.0
    }

    /// `a·Ŝ` for a real 3-vector `a`.
    pub fn dot(&self, a: &Vector3<f64>) -> CMatrix {
        &self.sx * Complex64::new(a.x, 0.0)
            + &self.sy * Complex64::new(a.y, 0.0)
            + &self.sz * Complex64::new(a.z, 0.0)
    }

    pub fn casimir(&self) -> CMatrix {
        &self.sx * &self.sx + &self.sy * &self.sy + &self.sz * &self.sz
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinState {
    amplitudes: CVector,
}

impl SpinState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.len();
        if !(n == 2 || n == 3) {
            return Err(Error::UnsupportedDimension(n));
        }
        let norm2 = amplitudes.norm_squared();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("amplitudes", format!("squared norm {norm2} != 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes before constructing.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::invalid("amplitudes", "zero vector"));
        }
        Self::new(amplitudes / Complex64::new(norm, 0.0))
    }

    pub(crate) fn from_raw(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// NV sublevel `|m⟩`, `m ∈ {−1, 0, +1}`.
    pub fn nv_level(m: i8) -> Result<Self> {
        if !(-1..=1).contains(&m) {
            return Err(Error::invalid("m", "NV sublevel must be -1, 0 or 1"));
        }
        let mut v = CVector::zeros(3);
        v[(m + 1) as usize] = ONE;
        Ok(Self { amplitudes: v })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// `|⟨self|other⟩|`
    pub fn overlap(&self, other: &SpinState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm()
    }
}

/// Resonant microwave rotation within the `{|0⟩, |+1⟩}` subspace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitRotation {
    pub theta: f64,
    pub phi: f64,
}

impl QubitRotation {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// 2x2 block acting on `(|0⟩, |+1⟩)`.
    pub fn qubit_matrix(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        [
            [c, -I * Complex64::from_polar(s, -self.phi)],
            [-I * Complex64::from_polar(s, self.phi), c],
        ]
    }

    /// Full 3x3 matrix in the NV basis; `|−1⟩` is left untouched.
    pub fn matrix(&self) -> CMatrix {
        let q = self.qubit_matrix();
        let mut m = CMatrix::zeros(3, 3);
        m[(IDX_MINUS, IDX_MINUS)] = ONE;
        m[(IDX_ZERO, IDX_ZERO)] = q[0][0];
        m[(IDX_ZERO, IDX_PLUS)] = q[0][1];
        m[(IDX_PLUS, IDX_ZERO)] = q[1][0];
        m[(IDX_PLUS, IDX_PLUS)] = q[1][1];
        m
    }
}

pub fn apply_rotation(state: &SpinState, rot: &QubitRotation) -> Result<SpinState> {
    if state.dimension() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: state.dimension(),
        });
    }
    let q = rot.qubit_matrix();
    let a = state.amplitudes();
    let mut out = a.clone();
    out[IDX_ZERO] = q[0][0] * a[IDX_ZERO] + q[0][1] * a[IDX_PLUS];
    out[IDX_PLUS] = q[1][0] * a[IDX_ZERO] + q[1][1] * a[IDX_PLUS];
    Ok(SpinState::from_raw(out))
}

/// `H_s = h·D·(Sz² − ⅔) + g·μ_B·B_z·Sz` in joules, NV basis order.
pub fn ground_state_hamiltonian(params: &NVParameters, constants: &PhysicalConstants) -> CMatrix {
    let ops = SpinOperators::nv();
    let zfs = constants.h * params.d;
    let zeeman = params.g * constants.mu_b * params.b_z;
    let sz2 = &ops.sz * &ops.sz;
    (sz2 - linalg::identity(3) * Complex64::new(2.0 / 3.0, 0.0)) * Complex64::new(zfs, 0.0)
        + &ops.sz * Complex64::new(zeeman, 0.0)
}

/// Level energies (J) of `(|−1⟩, |0⟩, |+1⟩)` relative to `|0⟩`.
pub fn level_energies(params: &NVParameters, constants: &PhysicalConstants) -> [f64; 3] {
    let h = ground_state_hamiltonian(params, constants);
    let e0 = h[(IDX_ZERO, IDX_ZERO)].re;
    [
        h[(IDX_MINUS, IDX_MINUS)].re - e0,
        0.0,
        h[(IDX_PLUS, IDX_PLUS)].re - e0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ZERO, commutator, hermiticity_residual, max_abs_entry};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn spin_half_sz() {
        let ops = SpinOperators::new(2).unwrap();
        assert_eq!(ops.sz[(0, 0)].re, 0.5);
        assert_eq!(ops.sz[(1, 1)].re, -0.5);
    }

    #[test]
    fn spin_one_sz_descending() {
        let ops = SpinOperators::new(3).unwrap();
        let d: Vec<f64> = ops.sz.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![1.0, 0.0, -1.0]);
        let nv = SpinOperators::nv();
        let d: Vec<f64> = nv.sz.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(SpinOperators::new(4), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn angular_momentum_algebra() {
        for ops in [
            SpinOperators::new(2).unwrap(),
            SpinOperators::new(3).unwrap(),
            SpinOperators::nv(),
        ] {
            for m in [&ops.sx, &ops.sy, &ops.sz] {
                assert!(hermiticity_residual(m) < 1e-14);
            }
            let cyc = [
                (&ops.sx, &ops.sy, &ops.sz),
                (&ops.sy, &ops.sz, &ops.sx),
                (&ops.sz, &ops.sx, &ops.sy),
            ];
            for (a, b, c) in cyc {
                assert!(max_abs_entry(&(commutator(a, b) - c * I)) < 1e-14);
            }
            let s = ops.spin();
            let n = ops.dimension();
            let expected = linalg::identity(n) * Complex64::new(s * (s + 1.0), 0.0);
            assert!(max_abs_entry(&(ops.casimir() - expected)) < 1e-14);
        }
    }

    #[test]
    fn zero_field_splitting() {
        let p = NVParameters { b_z: 0.0, ..Default::default() };
        let c = PhysicalConstants::default();
        let e = level_energies(&p, &c);
        assert!(((e[IDX_PLUS] - c.h * 2.88e9) / e[IDX_PLUS]).abs() < 1e-14);
        assert_eq!(e[IDX_PLUS], e[IDX_MINUS]);
    }

    #[test]
    fn zeeman_splitting_one_millitesla() {
        let p = NVParameters { b_z: 1e-3, g: 2.0, ..Default::default() };
        let c = PhysicalConstants::default();
        let e = level_energies(&p, &c);
        let split = e[IDX_PLUS] - e[IDX_MINUS];
        // 2·g·μ_B·B = 4 · 9.2740100783e-24 · 1e-3
        assert!((split - 3.709_604_031_32e-26).abs() < 1e-36);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_linear_in_field() {
        let c = PhysicalConstants::default();
        let at = |b| ground_state_hamiltonian(&NVParameters { b_z: b, ..Default::default() }, &c);
        let h = at(2e-3);
        assert!(hermiticity_residual(&h) < 1e-14 * max_abs_entry(&h));
        let lhs = at(1e-3) + at(2.5e-3) - at(0.0);
        let rhs = at(3.5e-3);
        // entries are O(1e-24) J; compare relative to that scale
        assert!(max_abs_entry(&(lhs - rhs)) / max_abs_entry(&h) < 1e-14);
    }

    #[test]
    fn rotation_examples() {
        let zero = SpinState::nv_level(0).unwrap();
        let half = apply_rotation(&zero, &QubitRotation::new(PI / 2.0, 0.0)).unwrap();
        let a = half.amplitudes();
        assert!((a[0] - ZERO).norm() < 1e-15);
        assert!((a[1] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((a[2] - Complex64::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);

        let pi = QubitRotation::new(PI, 0.0);
        let back = apply_rotation(&apply_rotation(&zero, &pi).unwrap(), &pi).unwrap();
        assert!((back.overlap(&zero) - 1.0).abs() < 1e-15);

        let r = QubitRotation::new(PI / 2.0, 0.7);
        let one = apply_rotation(&apply_rotation(&zero, &r).unwrap(), &r).unwrap();
        assert!((one.population(IDX_PLUS) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_matrix_matches_apply() {
        let r = QubitRotation::new(1.1, -0.4);
        let psi = SpinState::normalized(CVector::from_vec(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.6, -0.3),
        ]))
        .unwrap();
        let via_matrix = r.matrix() * psi.amplitudes();
        let via_apply = apply_rotation(&psi, &r).unwrap();
        assert!((via_matrix - via_apply.amplitudes()).norm() < 1e-15);
        assert!(crate::linalg::unitarity_residual(&r.matrix()) < 1e-15);
    }

    #[test]
    fn constants_consistency() {
        let c = PhysicalConstants::CODATA_2018;
        assert!(((c.h - TAU * c.hbar) / c.h).abs() < 1e-12);
        assert!(PhysicalConstants::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, 1.0, 1.0, TAU).is_ok());
        assert!(PhysicalConstants::new(-1.0, 1.0, 1.0, TAU).is_err());
    }

    #[test]
    fn state_normalization_checked() {
        let v = CVector::from_vec(vec![ONE, ONE, ZERO]);
        assert!(SpinState::new(v.clone()).is_err());
        assert!((SpinState::normalized(v).unwrap().norm_sqr() - 1.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rotation_preserves_norm_and_minus_level(
                re in proptest::collection::vec(-1.0f64..1.0, 3),
                im in proptest::collection::vec(-1.0f64..1.0, 3),
                theta in -10.0f64..10.0,
                phi in -10.0f64..10.0,
            ) {
                let v = CVector::from_iterator(3, re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)));
                prop_assume!(v.norm() > 1e-3);
                let psi = SpinState::normalized(v).unwrap();
                let out = apply_rotation(&psi, &QubitRotation::new(theta, phi)).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
                prop_assert_eq!(out.amplitude(IDX_MINUS), psi.amplitude(IDX_MINUS));
            }
        }
    }
}
