//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is sized for three-qubit registers (dimension 8) and the
//! truncated Fock spaces used by the photonic model, so storage is dense and
//! backed by `nalgebra`. Multi-partite spaces follow a fixed ordering: the
//! leftmost factor of a tensor product is the most significant subsystem
//! (for the cloner that is S, then A, then B).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;

/// Absolute tolerance for entrywise exactness checks.
pub const TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A ket on a finite-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, LinalgError> {
        if amplitudes.is_empty() {
            return Err(LinalgError::Empty);
        }
        Ok(Self { amps: DVector::from_vec(amplitudes) })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self, LinalgError> {
        Self::new(amplitudes.iter().map(|&a| c(a, 0.0)).collect())
    }

    /// Computational basis vector `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amps = DVector::from_element(dim, ZERO);
        amps[index] = ONE;
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { amps: DVector::from_element(dim, ZERO) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self, LinalgError> {
        let n = self.norm_sqr().sqrt();
        if n < f64::EPSILON {
            return Err(LinalgError::ZeroNorm);
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { amps: &self.amps * factor }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        check_dim(self.dim(), other.dim(), "vector addition")?;
        Ok(Self { amps: &self.amps + &other.amps })
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Result<C64, LinalgError> {
        check_dim(self.dim(), other.dim(), "inner product")?;
        Ok(self.amps.dotc(&other.amps))
    }

    /// Kronecker product with `self` as the most significant factor.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { amps: self.amps.kronecker(&other.amps) }
    }

    /// `|ψ⟩⟨ψ|` for the normalized ket.
    pub fn density(&self) -> Result<DensityOperator, LinalgError> {
        let n = self.normalize()?;
        Ok(DensityOperator { matrix: &n.amps * n.amps.adjoint() })
    }

    /// Equality modulo global phase: `|⟨a|b⟩| = ‖a‖‖b‖` within `tol`.
    pub fn equals_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let overlap = self.amps.dotc(&other.amps).norm();
        let na = self.norm_sqr().sqrt();
        let nb = other.norm_sqr().sqrt();
        (na - nb).abs() <= tol && (overlap - na * nb).abs() <= tol
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

/// A linear operator `dim_out × dim_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<C64>,
}

impl LinearMap {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }

    /// Row-major construction.
    pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<Self, LinalgError> {
        check_dim(rows * cols, entries.len(), "matrix entries")?;
        Ok(Self { matrix: DMatrix::from_row_slice(rows, cols, entries) })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { matrix: DMatrix::from_element(rows, cols, ZERO) }
    }

    pub fn pauli_x() -> Self {
        Self::from_rows(2, 2, &[ZERO, ONE, ONE, ZERO]).unwrap()
    }

    pub fn pauli_y() -> Self {
        Self::from_rows(2, 2, &[ZERO, -I, I, ZERO]).unwrap()
    }

    pub fn pauli_z() -> Self {
        Self::from_rows(2, 2, &[ONE, ZERO, ZERO, -ONE]).unwrap()
    }

    /// Sum of `|v⟩⟨v|` over the given kets. Orthonormality is the caller's job.
    pub fn projector_onto(kets: &[StateVector]) -> Result<Self, LinalgError> {
        let first = kets.first().ok_or(LinalgError::Empty)?;
        let dim = first.dim();
        let mut matrix = DMatrix::from_element(dim, dim, ZERO);
        for k in kets {
            check_dim(dim, k.dim(), "projector ket")?;
            matrix += &k.amps * k.amps.adjoint();
        }
        Ok(Self { matrix })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { matrix: &self.matrix * factor }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        check_dim(self.rows(), other.rows(), "operator addition (rows)")?;
        check_dim(self.cols(), other.cols(), "operator addition (cols)")?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self, LinalgError> {
        check_dim(self.cols(), other.rows(), "operator product")?;
        Ok(Self { matrix: &self.matrix * &other.matrix })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector, LinalgError> {
        check_dim(self.cols(), state.dim(), "operator application")?;
        Ok(StateVector { amps: &self.matrix * &state.amps })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.matrix.shape(), other.matrix.shape());
        self.matrix.iter().zip(other.matrix.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows() == self.cols() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `P² = P` and `P† = P` within `tol`.
    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol)
            && self.max_abs_diff(&Self { matrix: &self.matrix * &self.matrix }) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.rows() == self.cols()
            && Self { matrix: self.matrix.adjoint() * &self.matrix }.max_abs_diff(&Self::identity(self.rows()))
                <= tol
    }

    /// Embeds a single-subsystem operator at position `target` of a register with the given dims.
    pub fn embed(&self, target: usize, dims: &[usize]) -> Result<Self, LinalgError> {
        if target >= dims.len() {
            return Err(LinalgError::InvalidSubsystem { index: target, count: dims.len() });
        }
        check_dim(dims[target], self.rows(), "embedded operator")?;
        check_dim(dims[target], self.cols(), "embedded operator")?;
        let mut out = Self::identity(1);
        for (k, &d) in dims.iter().enumerate() {
            let factor = if k == target { self.clone() } else { Self::identity(d) };
            out = out.tensor(&factor);
        }
        Ok(out)
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotDensity("matrix is not square".into()));
        }
        let rho = Self { matrix };
        let as_map = LinearMap { matrix: rho.matrix.clone() };
        if !as_map.is_hermitian(TOL) {
            return Err(LinalgError::NotDensity("matrix is not Hermitian".into()));
        }
        let tr = rho.matrix.trace();
        if (tr - ONE).norm() > TOL {
            return Err(LinalgError::NotDensity(format!("trace is {tr}, expected 1")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < PSD_FLOOR {
            return Err(LinalgError::NotDensity(format!("negative eigenvalue {min_eig}")));
        }
        Ok(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) / c(dim as f64, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self { matrix: self.matrix.kronecker(&other.matrix) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        LinearMap { matrix: self.matrix.clone() }.max_abs_diff(&LinearMap { matrix: other.matrix.clone() })
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, unitary: &LinearMap) -> Result<Self, LinalgError> {
        check_dim(unitary.cols(), self.dim(), "conjugation")?;
        check_dim(unitary.rows(), self.dim(), "conjugation")?;
        Ok(Self { matrix: &unitary.matrix * &self.matrix * unitary.matrix.adjoint() })
    }

    /// Operator-sum channel `ρ ↦ Σ K ρ K†` acting on subsystem `target`.
    pub fn apply_channel(&self, kraus: &[LinearMap], target: usize, dims: &[usize]) -> Result<Self, LinalgError> {
        check_dim(dims.iter().product(), self.dim(), "channel register")?;
        let mut acc = DMatrix::from_element(self.dim(), self.dim(), ZERO);
        for k in kraus {
            let full = k.embed(target, dims)?;
            acc += &full.matrix * &self.matrix * full.matrix.adjoint();
        }
        Ok(Self { matrix: acc })
    }

    /// Applies `P ρ P` and renormalizes. Returns the conditional state and
    /// the success probability `tr(P ρ P)`; `None` when that probability is
    /// below `tol`.
    pub fn project(&self, projector: &LinearMap, tol: f64) -> Result<Option<(Self, f64)>, LinalgError> {
        check_dim(projector.cols(), self.dim(), "projection")?;
        let m = &projector.matrix * &self.matrix * projector.matrix.adjoint();
        let p = m.trace().re;
        if p <= tol {
            return Ok(None);
        }
        Ok(Some((Self { matrix: m / c(p, 0.0) }, p)))
    }

    /// Reduced state on the subsystems listed in `keep`.
    ///
    /// `dims` gives the dimension of each subsystem, most significant first.
    /// The kept subsystems retain their relative order.
    pub fn partial_trace(&self, keep: &[usize], dims: &[usize]) -> Result<Self, LinalgError> {
        let total: usize = dims.iter().product();
        if total != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                context: "partial trace: product of subsystem dims vs operator dimension",
                expected: self.dim(),
                found: total,
            });
        }
        if keep.is_empty() {
            return Err(LinalgError::Empty);
        }
        let mut keep_sorted = keep.to_vec();
        keep_sorted.sort_unstable();
        keep_sorted.dedup();
        if let Some(&bad) = keep_sorted.iter().find(|&&k| k >= dims.len()) {
            return Err(LinalgError::InvalidSubsystem { index: bad, count: dims.len() });
        }
        let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
        let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced_dims.iter().product();

        // Full index from (kept digits, traced digits).
        let compose = |kept_idx: usize, traced_idx: usize| -> usize {
            let mut digits = vec![0usize; dims.len()];
            let mut r = kept_idx;
            for (pos, &k) in keep_sorted.iter().enumerate().rev() {
                digits[k] = r % kept_dims[pos];
                r /= kept_dims[pos];
            }
            let mut r = traced_idx;
            for (pos, &k) in traced.iter().enumerate().rev() {
                digits[k] = r % traced_dims[pos];
                r /= traced_dims[pos];
            }
            digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
        };

        let mut out = DMatrix::from_element(dk, dk, ZERO);
        for i in 0..dk {
            for j in 0..dk {
                let mut s = ZERO;
                for t in 0..dt {
                    s += self.matrix[(compose(i, t), compose(j, t))];
                }
                out[(i, j)] = s;
            }
        }
        Ok(Self { matrix: out })
    }

    /// `⟨φ|ρ|φ⟩`, clamped to `[0, 1]`.
    pub fn fidelity(&self, phi: &StateVector) -> Result<f64, LinalgError> {
        fidelity(phi, self)
    }
}

/// `⟨φ|ρ|φ⟩` for a normalized `φ`, clamped to `[0, 1]`.
pub fn fidelity(phi: &StateVector, rho: &DensityOperator) -> Result<f64, LinalgError> {
    check_dim(phi.dim(), rho.dim(), "fidelity")?;
    let v = phi.amps.dotc(&(&rho.matrix * &phi.amps));
    debug_assert!(v.im.abs() < 1e-9, "fidelity has imaginary part {}", v.im);
    Ok(v.re.clamp(0.0, 1.0))
}

fn check_dim(expected: usize, found: usize, context: &'static str) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { context, expected, found })
    }
}
