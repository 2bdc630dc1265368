//! Dense finite-dimensional quantum state algebra.
//!
//! States live on a [`RegisterLayout`], an ordered list of named registers.
//! Basis indices are row-major over the layout: the first register is the
//! most significant digit.

mod haar;
mod memory;
mod ops;

pub use haar::{haar_unitary, random_density};
pub use memory::{CqState, QuantumMemory};
pub use ops::{
    canonical_purification, fidelity, measure_computational, partial_trace, schmidt_purification,
    trace_distance, Apply, Tensor,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest total dimension any layout may reach.
pub const DIMENSION_CAP: usize = 4096;
/// Tolerance for state invariants (norm, trace, Hermiticity, unitarity).
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for pure algebraic identities checked against oracles.
pub const ALGEBRA_TOL: f64 = 1e-12;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new(registers: Vec<(String, usize)>) -> Result<Self> {
        Self::with_cap(registers, DIMENSION_CAP)
    }

    pub fn with_cap(registers: Vec<(String, usize)>, cap: usize) -> Result<Self> {
        let mut total: usize = 1;
        for (i, (name, dim)) in registers.iter().enumerate() {
            if *dim < 2 {
                return Err(Error::Layout(format!("register `{name}` has dimension {dim} < 2")));
            }
            if registers[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Layout(format!("duplicate register `{name}`")));
            }
            total = total
                .checked_mul(*dim)
                .filter(|&t| t <= cap)
                .ok_or(Error::DimensionCap { requested: total.saturating_mul(*dim), cap })?;
        }
        Ok(RegisterLayout { registers })
    }

    /// A layout of named qubits.
    pub fn qubits<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| (n.as_ref().to_string(), 2)).collect())
    }

    pub fn single(name: &str, dim: usize) -> Result<Self> {
        Self::new(vec![(name.to_string(), dim)])
    }

    /// The empty layout (dimension 1); used as the unit of tensor products.
    pub fn empty() -> Self {
        RegisterLayout { registers: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.registers.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.registers
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.registers.iter().map(|(n, _)| n.as_str())
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|(n, _)| n == name)
    }

    pub fn local_dim(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.position(name)?].1)
    }

    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut regs = self.registers.clone();
        regs.extend(other.registers.iter().cloned());
        Self::new(regs)
    }

    pub fn renamed(&self, f: impl Fn(&str) -> String) -> Result<Self> {
        Self::new(self.registers.iter().map(|(n, d)| (f(n), *d)).collect())
    }

    /// Digits of a basis index, one per register.
    pub(crate) fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.registers.len()];
        for (slot, (_, d)) in out.iter_mut().zip(&self.registers).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub(crate) fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.registers)
            .fold(0, |acc, (&x, (_, d))| acc * d + x)
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    layout: RegisterLayout,
    amps: CVector,
}

impl PureState {
    pub fn new(layout: RegisterLayout, amps: CVector) -> Result<Self> {
        let s = Self::new_unchecked(layout, amps)?;
        s.check()?;
        Ok(s)
    }

    /// Shape-checked but not normalization-checked; for intermediate
    /// branch vectors.
    pub(crate) fn new_unchecked(layout: RegisterLayout, amps: CVector) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: amps.len() });
        }
        Ok(PureState { layout, amps })
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(layout: RegisterLayout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::DimensionMismatch { expected: layout.len(), got: digits.len() });
        }
        let mut amps = CVector::zeros(layout.dim());
        amps[layout.index_of(digits)] = ONE;
        Ok(PureState { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > STATE_TOL {
            return Err(Error::Invariant(format!("squared norm {n} differs from 1")));
        }
        Ok(())
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { layout: self.layout.clone(), mat: &self.amps * self.amps.adjoint() }
    }

    pub fn with_layout(self, layout: RegisterLayout) -> Result<Self> {
        Self::new_unchecked(layout, self.amps)
    }

    pub(crate) fn into_parts(self) -> (RegisterLayout, CVector) {
        (self.layout, self.amps)
    }
}

/// A density operator. Construction through [`DensityMatrix::new`] validates
/// Hermiticity, unit trace and positivity.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: RegisterLayout,
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(layout: RegisterLayout, mat: CMatrix) -> Result<Self> {
        let d = Self::new_unchecked(layout, mat)?;
        d.check()?;
        Ok(d)
    }

    /// Shape check only; used for unnormalized conditional states and for
    /// operators that are transiently outside the state space.
    pub fn new_unchecked(layout: RegisterLayout, mat: CMatrix) -> Result<Self> {
        let dim = layout.dim();
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: mat.nrows() });
        }
        Ok(DensityMatrix { layout, mat })
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.dim();
        DensityMatrix { layout, mat: CMatrix::identity(d, d) / C64::from(d as f64) }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.mat + self.mat.adjoint()) * C64::from(0.5);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn check(&self) -> Result<()> {
        let h = self.hermiticity_error();
        if h > STATE_TOL {
            return Err(Error::Invariant(format!("not Hermitian (max deviation {h:e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Invariant(format!("trace {tr} differs from 1")));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -STATE_TOL {
            return Err(Error::Invariant(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// `⟨i|ρ|i⟩` for every basis index.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }

    pub fn scale(&self, factor: f64) -> DensityMatrix {
        DensityMatrix { layout: self.layout.clone(), mat: &self.mat * C64::from(factor) }
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(DensityMatrix { layout: self.layout.clone(), mat: &self.mat + &other.mat })
    }

    /// Row-major `[re, im]` pairs for debug dumps.
    pub fn to_json(&self) -> serde_json::Value {
        matrix_to_json(&self.mat)
    }
}

pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    serde_json::Value::Array(
        (0..m.nrows())
            .map(|i| {
                serde_json::Value::Array(
                    (0..m.ncols())
                        .map(|j| serde_json::json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

/// A unitary operator on a `dim`-dimensional space.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    mat: CMatrix,
}

impl UnitaryOp {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let u = UnitaryOp { mat };
        let err = u.unitarity_error();
        if u.mat.nrows() != u.mat.ncols() || err > STATE_TOL {
            return Err(Error::Invariant(format!("not unitary (deviation {err:e})")));
        }
        Ok(u)
    }

    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        UnitaryOp { mat }
    }

    /// Upper bound on `‖U U† − I‖_op` (Frobenius norm).
    pub fn unitarity_error(&self) -> f64 {
        if self.mat.nrows() != self.mat.ncols() {
            return f64::INFINITY;
        }
        let d = self.mat.nrows();
        (&self.mat * self.mat.adjoint() - CMatrix::identity(d, d)).norm()
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryOp { mat: CMatrix::identity(dim, dim) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        UnitaryOp { mat: self.mat.adjoint() }
    }

    pub fn compose(&self, after: &UnitaryOp) -> Self {
        UnitaryOp { mat: &after.mat * &self.mat }
    }

    pub fn x() -> Self {
        Self::from_real(&[0.0, 1.0, 1.0, 0.0])
    }

    pub fn z() -> Self {
        Self::from_real(&[1.0, 0.0, 0.0, -1.0])
    }

    pub fn y() -> Self {
        UnitaryOp { mat: CMatrix::from_row_slice(2, 2, &[ZERO, -C64::i(), C64::i(), ZERO]) }
    }

    pub fn h() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(&[s, s, s, -s])
    }

    pub fn s() -> Self {
        UnitaryOp { mat: CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::i()]) }
    }

    /// `X^x Z^z`.
    pub fn pauli(x: bool, z: bool) -> Self {
        let mut m = CMatrix::identity(2, 2);
        if z {
            m = Self::z().mat * m;
        }
        if x {
            m = Self::x().mat * m;
        }
        UnitaryOp { mat: m }
    }

    /// CNOT with the first tensor factor as control.
    pub fn cnot() -> Self {
        let mut m = CMatrix::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(r, c)] = ONE;
        }
        UnitaryOp { mat: m }
    }

    fn from_real(entries: &[f64]) -> Self {
        let n = (entries.len() as f64).sqrt() as usize;
        UnitaryOp { mat: CMatrix::from_row_slice(n, n, &entries.iter().map(|&r| C64::from(r)).collect::<Vec<_>>()) }
    }
}
