//! Qubit-level cloning pipelines and closed-form fidelity bounds.
//!
//! The phase-covariant 1→3 cloner is built from the output of a universal
//! 1→2 cloner `|Σ⟩_SAB`: the anti-clone B is flipped by a fixed unitary and
//! the three qubits are projected onto the symmetric subspace. Registers are
//! ordered S, A, B with S the most significant qubit.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::CloningError;
use crate::linalg::{c, fidelity, DensityOperator, LinearMap, StateVector, C64, ONE, TOL, ZERO};

const DIMS: [usize; 3] = [2, 2, 2];

/// Arbitrary pure qubit `a|0⟩ + b|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Qubit {
    a: C64,
    b: C64,
}

impl Qubit {
    pub fn new(a: C64, b: C64) -> Result<Self, CloningError> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > 1e-10 {
            return Err(CloningError::NotNormalized(n));
        }
        Ok(Self { a, b })
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self { a: c((theta / 2.0).cos(), 0.0), b: C64::from_polar((theta / 2.0).sin(), phi) }
    }

    pub fn zero() -> Self {
        Self { a: ONE, b: ZERO }
    }

    pub fn one() -> Self {
        Self { a: ZERO, b: ONE }
    }

    pub fn plus() -> Self {
        Self { a: c(FRAC_1_SQRT_2, 0.0), b: c(FRAC_1_SQRT_2, 0.0) }
    }

    pub fn minus() -> Self {
        Self { a: c(FRAC_1_SQRT_2, 0.0), b: c(-FRAC_1_SQRT_2, 0.0) }
    }

    pub fn amplitudes(&self) -> (C64, C64) {
        (self.a, self.b)
    }

    /// The orthogonal state `-b*|0⟩ + a*|1⟩`. For real qubits this is
    /// `-β|0⟩ + α|1⟩`, so `|0⟩⊥ = |1⟩`.
    pub fn orthogonal(&self) -> Self {
        Self { a: -self.b.conj(), b: self.a.conj() }
    }

    pub fn ket(&self) -> StateVector {
        StateVector::new(vec![self.a, self.b]).expect("two amplitudes")
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let cross = self.a.conj() * self.b;
        [2.0 * cross.re, 2.0 * cross.im, self.a.norm_sqr() - self.b.norm_sqr()]
    }
}

/// `α|0⟩ + β|1⟩` with real coefficients: the x–z plane of the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealQubit {
    alpha: f64,
    beta: f64,
}

impl RealQubit {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, CloningError> {
        let n = alpha * alpha + beta * beta;
        if (n - 1.0).abs() > TOL {
            return Err(CloningError::NotNormalized(n));
        }
        Ok(Self { alpha, beta })
    }

    /// `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`; θ ranges over the whole great circle.
    pub fn from_angle(theta: f64) -> Self {
        Self { alpha: (theta / 2.0).cos(), beta: (theta / 2.0).sin() }
    }

    pub fn horizontal() -> Self {
        Self { alpha: 1.0, beta: 0.0 }
    }

    pub fn vertical() -> Self {
        Self { alpha: 0.0, beta: 1.0 }
    }

    pub fn plus() -> Self {
        Self { alpha: FRAC_1_SQRT_2, beta: FRAC_1_SQRT_2 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn qubit(&self) -> Qubit {
        Qubit { a: c(self.alpha, 0.0), b: c(self.beta, 0.0) }
    }
}

impl From<RealQubit> for Qubit {
    fn from(q: RealQubit) -> Self {
        q.qubit()
    }
}

/// `2^{-1/2}(|0⟩ + e^{iφ}|1⟩)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquatorialQubit {
    pub phase: f64,
}

impl EquatorialQubit {
    pub fn qubit(&self) -> Qubit {
        Qubit::from_bloch(std::f64::consts::FRAC_PI_2, self.phase)
    }
}

impl From<EquatorialQubit> for Qubit {
    fn from(q: EquatorialQubit) -> Self {
        q.qubit()
    }
}

/// Unitary applied to the anti-clone B. Each Pauli maps every state of one
/// great circle onto its orthogonal state, which fixes the covariant plane
/// of the resulting cloner.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlipAxis {
    /// Covariant plane y–z.
    X,
    /// Covariant plane x–z (real coefficients).
    #[default]
    Y,
    /// Covariant plane x–y (the equator).
    Z,
}

impl FlipAxis {
    pub fn unitary(self) -> LinearMap {
        match self {
            FlipAxis::X => LinearMap::pauli_x(),
            FlipAxis::Y => LinearMap::pauli_y(),
            FlipAxis::Z => LinearMap::pauli_z(),
        }
    }
}

/// Output of a 1→3 cloner.
#[derive(Clone, Debug)]
pub enum CloneState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl CloneState {
    pub fn density(&self) -> DensityOperator {
        match self {
            CloneState::Pure(v) => v.density().expect("clone output is normalized"),
            CloneState::Mixed(rho) => rho.clone(),
        }
    }

    pub fn pure(&self) -> Option<&StateVector> {
        match self {
            CloneState::Pure(v) => Some(v),
            CloneState::Mixed(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CloneTriple {
    pub state: CloneState,
    pub success_probability: f64,
    /// Fidelities of S, A and B against the input.
    pub per_qubit_fidelity: [f64; 3],
}

impl CloneTriple {
    pub fn mean_fidelity(&self) -> f64 {
        self.per_qubit_fidelity.iter().sum::<f64>() / 3.0
    }
}

fn three(a: &Qubit, b: &Qubit, d: &Qubit) -> StateVector {
    a.ket().tensor(&b.ket()).tensor(&d.ket())
}

fn combine(terms: &[(f64, StateVector)]) -> StateVector {
    let mut out = StateVector::zeros(8);
    for (w, v) in terms {
        out = out.add(&v.scale(c(*w, 0.0))).expect("8-dim terms");
    }
    out
}

/// Output of the universal 1→2 cloner on register SAB:
/// `√(2/3)|φφφ⊥⟩ − (1/√6)(|φφ⊥⟩ + |φ⊥φ⟩)|φ⟩`.
pub fn uqcm_1to2(input: &Qubit) -> StateVector {
    let p = *input;
    let q = input.orthogonal();
    combine(&[
        ((2.0f64 / 3.0).sqrt(), three(&p, &p, &q)),
        (-1.0 / 6f64.sqrt(), three(&p, &q, &p)),
        (-1.0 / 6f64.sqrt(), three(&q, &p, &p)),
    ])
}

/// Applies a single-qubit unitary to qubit B.
pub fn apply_on_b(state: &StateVector, unitary: &LinearMap) -> Result<StateVector, CloningError> {
    let full = unitary.embed(2, &DIMS)?;
    Ok(full.apply(state)?)
}

/// `I ⊗ I ⊗ σ_Y`
pub fn flip_b(state: &StateVector) -> Result<StateVector, CloningError> {
    apply_on_b(state, &LinearMap::pauli_y())
}

/// Projector onto the permutation-symmetric subspace of three qubits,
/// built from the Dicke states of the computational basis.
pub fn symmetric_projector() -> LinearMap {
    symmetric_projector_in_basis(&Qubit::zero())
}

/// The same projector assembled from `|Π₁⟩..|Π₄⟩` of the basis `{φ, φ⊥}`.
pub fn symmetric_projector_in_basis(phi: &Qubit) -> LinearMap {
    let p = *phi;
    let q = phi.orthogonal();
    let s3 = 1.0 / 3f64.sqrt();
    let pi1 = three(&p, &p, &p);
    let pi2 = three(&q, &q, &q);
    let pi3 = combine(&[(s3, three(&p, &q, &q)), (s3, three(&q, &p, &q)), (s3, three(&q, &q, &p))]);
    let pi4 = combine(&[(s3, three(&p, &p, &q)), (s3, three(&q, &p, &p)), (s3, three(&p, &q, &p))]);
    LinearMap::projector_onto(&[pi1, pi2, pi3, pi4]).expect("four 8-dim kets")
}

/// Single-qubit reduced states of S, A and B.
pub fn reduced_states(rho: &DensityOperator) -> Result<[DensityOperator; 3], CloningError> {
    Ok([
        rho.partial_trace(&[0], &DIMS)?,
        rho.partial_trace(&[1], &DIMS)?,
        rho.partial_trace(&[2], &DIMS)?,
    ])
}

fn per_qubit_fidelity(rho: &DensityOperator, target: &Qubit) -> Result<[f64; 3], CloningError> {
    let t = target.ket();
    let [s, a, b] = reduced_states(rho)?;
    Ok([fidelity(&t, &s)?, fidelity(&t, &a)?, fidelity(&t, &b)?])
}

/// Phase-covariant 1→3 cloner for real-coefficient inputs (σ_Y flip).
pub fn pqcm_1to3(input: &RealQubit) -> Result<CloneTriple, CloningError> {
    pqcm_1to3_with(&input.qubit(), FlipAxis::Y)
}

/// Flip-then-symmetrize pipeline for any input and flip unitary. The clone
/// fidelity is only optimal when the input lies in the flip's covariant plane.
pub fn pqcm_1to3_with(input: &Qubit, flip: FlipAxis) -> Result<CloneTriple, CloningError> {
    let flipped = apply_on_b(&uqcm_1to2(input), &flip.unitary())?;
    let projected = symmetric_projector().apply(&flipped)?;
    let p = projected.norm_sqr();
    if p < TOL {
        return Err(CloningError::ZeroProjection);
    }
    let state = projected.normalize()?;
    let per_qubit_fidelity = per_qubit_fidelity(&state.density()?, input)?;
    Ok(CloneTriple { state: CloneState::Pure(state), success_probability: p, per_qubit_fidelity })
}

/// Kraus operators of the fully depolarizing channel
/// `ρ ↦ ¼(ρ + XρX + YρY + ZρZ)`.
pub fn depolarizing_kraus() -> [LinearMap; 4] {
    let h = c(0.5, 0.0);
    [
        LinearMap::identity(2).scale(h),
        LinearMap::pauli_x().scale(h),
        LinearMap::pauli_y().scale(h),
        LinearMap::pauli_z().scale(h),
    ]
}

pub fn depolarize(rho: &DensityOperator) -> Result<DensityOperator, CloningError> {
    Ok(rho.apply_channel(&depolarizing_kraus(), 0, &[2])?)
}

/// Universal 1→3 cloner: the flipped anti-clone is fully depolarized before
/// the symmetric projection.
pub fn universal_1to3(input: &Qubit) -> Result<CloneTriple, CloningError> {
    let flipped = flip_b(&uqcm_1to2(input))?;
    let rho = flipped.density()?.apply_channel(&depolarizing_kraus(), 2, &DIMS)?;
    let (out, p) = rho.project(&symmetric_projector(), TOL)?.ok_or(CloningError::ZeroProjection)?;
    let per_qubit_fidelity = per_qubit_fidelity(&out, input)?;
    Ok(CloneTriple { state: CloneState::Mixed(out), success_probability: p, per_qubit_fidelity })
}

/// Amplitudes of a three-qubit ket in the product basis built from
/// `{φ, φ⊥}`. Index bit 2 is S, bit 0 is B; a set bit means `φ⊥`.
pub fn amplitudes_in_basis(state: &StateVector, phi: &Qubit) -> Result<[C64; 8], CloningError> {
    let basis = [*phi, phi.orthogonal()];
    let mut out = [ZERO; 8];
    for (idx, slot) in out.iter_mut().enumerate() {
        let ket = three(&basis[(idx >> 2) & 1], &basis[(idx >> 1) & 1], &basis[idx & 1]);
        *slot = ket.inner(state)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Universal,
    PhaseCovariant,
    Estimation,
    PhaseEstimation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityBound {
    pub n: u32,
    pub m: u32,
    pub kind: BoundKind,
    pub value: f64,
}

/// Optimal fidelity for the given machine.
///
/// The estimation kinds ignore `m` (they are the `m → ∞` limits of the
/// corresponding cloners) but still record it.
pub fn bound(kind: BoundKind, n: u32, m: u32) -> Result<FidelityBound, CloningError> {
    if n == 0 {
        return Err(CloningError::Unsupported("N must be at least 1".into()));
    }
    let clone_kind = matches!(kind, BoundKind::Universal | BoundKind::PhaseCovariant);
    if clone_kind && m < n {
        return Err(CloningError::Unsupported(format!("M = {m} is smaller than N = {n}")));
    }
    let nf = f64::from(n);
    let mf = f64::from(m);
    let value = match kind {
        BoundKind::Universal => (nf + 1.0 + nf / mf) / (nf + 2.0),
        BoundKind::PhaseCovariant => {
            if n != 1 {
                return Err(CloningError::Unsupported("phase-covariant bounds are only available for N = 1".into()));
            }
            if m % 2 == 1 {
                0.25 * (3.0 + 1.0 / mf)
            } else {
                0.5 * (1.0 + 0.5 * (1.0 + 2.0 / mf).sqrt())
            }
        }
        BoundKind::Estimation => (nf + 1.0) / (nf + 2.0),
        BoundKind::PhaseEstimation => {
            if n != 1 {
                return Err(CloningError::Unsupported("phase-estimation fidelity is only available for N = 1".into()));
            }
            0.75
        }
    };
    Ok(FidelityBound { n, m, kind, value })
}

/// Mean clone fidelity of the σ_Y machine over a (θ, φ) grid of inputs
/// `cos(θ/2)|0⟩ + e^{iφ}sin(θ/2)|1⟩`. Rows follow `thetas`, columns `phis`.
/// Points where the projection fails are reported as NaN.
pub fn bloch_fidelity_map(thetas: &[f64], phis: &[f64]) -> Vec<Vec<f64>> {
    thetas
        .iter()
        .map(|&t| {
            phis.iter()
                .map(|&p| match pqcm_1to3_with(&Qubit::from_bloch(t, p), FlipAxis::Y) {
                    Ok(out) => out.mean_fidelity(),
                    Err(_) => f64::NAN,
                })
                .collect()
        })
        .collect()
}
