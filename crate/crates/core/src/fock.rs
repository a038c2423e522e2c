//! Photonic realization of the cloner on occupation-number states.
//!
//! A [`FockVector`] maps occupation patterns to amplitudes. Every mode is a
//! (spatial mode, polarization, temporal tag) triple. Polarizations are
//! labelled relative to whatever basis the state is currently expressed in
//! (`Par` = φ, `Perp` = φ⊥), and photons with different tags never
//! interfere. Linear optics acts by substituting creation operators and
//! expanding the resulting polynomial, so bosonic `√n!` factors are handled
//! in one place.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::cloning::{amplitudes_in_basis, pqcm_1to3, RealQubit};
use crate::error::FockError;
use crate::linalg::{c, LinearMap, C64, I, ONE, ZERO};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE: f64 = 1e-14;
/// Photon-number cutoff of the first-order protocol path.
pub const DEFAULT_CUTOFF: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Spatial {
    K1,
    K2,
    K3,
    K4,
    /// The single spatial mode of the collinear amplifier.
    K,
}

impl fmt::Display for Spatial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Spatial::K1 => "k1",
            Spatial::K2 => "k2",
            Spatial::K3 => "k3",
            Spatial::K4 => "k4",
            Spatial::K => "k",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    Par,
    Perp,
}

impl Pol {
    fn index(self) -> usize {
        match self {
            Pol::Par => 0,
            Pol::Perp => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub spatial: Spatial,
    pub pol: Pol,
    pub tag: u8,
}

impl Mode {
    pub const fn new(spatial: Spatial, pol: Pol) -> Self {
        Self { spatial, pol, tag: 0 }
    }

    pub const fn tagged(spatial: Spatial, pol: Pol, tag: u8) -> Self {
        Self { spatial, pol, tag }
    }
}

/// Photon counts per mode. Modes with zero photons are not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(BTreeMap<Mode, u32>);

impl Occupation {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: &[(Mode, u32)]) -> Self {
        let mut occ = Self::default();
        for &(m, n) in counts {
            if n > 0 {
                *occ.0.entry(m).or_insert(0) += n;
            }
        }
        occ
    }

    pub fn count(&self, mode: Mode) -> u32 {
        self.0.get(&mode).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn modes(&self) -> impl Iterator<Item = (Mode, u32)> + '_ {
        self.0.iter().map(|(&m, &n)| (m, n))
    }

    /// Photons in the given polarization, summed over spatial modes and tags.
    pub fn polarization_count(&self, pol: Pol) -> u32 {
        self.0.iter().filter(|(m, _)| m.pol == pol).map(|(_, &n)| n).sum()
    }

    pub fn spatial_modes(&self) -> Vec<Spatial> {
        let mut s: Vec<Spatial> = self.0.keys().map(|m| m.spatial).collect();
        s.dedup();
        s
    }

    fn with_delta(&self, mode: Mode, delta: i32) -> Option<Self> {
        let n = self.count(mode) as i32 + delta;
        if n < 0 {
            return None;
        }
        let mut out = self.clone();
        if n == 0 {
            out.0.remove(&mode);
        } else {
            out.0.insert(mode, n as u32);
        }
        Some(out)
    }

    fn factorial_norm(&self) -> f64 {
        self.0.values().map(|&n| (1..=n).map(f64::from).product::<f64>()).product::<f64>().sqrt()
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("|vac⟩");
        }
        let mut groups: BTreeMap<(Spatial, u8), [u32; 2]> = BTreeMap::new();
        for (m, n) in self.modes() {
            groups.entry((m.spatial, m.tag)).or_default()[m.pol.index()] += n;
        }
        for ((s, tag), [p, q]) in groups {
            let primes = "'".repeat(tag as usize);
            write!(f, "|{p},{q}⟩_{s}{primes}")?;
        }
        Ok(())
    }
}

/// Superposition of occupation states with a total-photon cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    terms: BTreeMap<Occupation, C64>,
    cutoff: u32,
}

impl FockVector {
    pub fn vacuum(cutoff: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::vacuum(), ONE);
        Self { terms, cutoff }
    }

    pub fn empty(cutoff: u32) -> Self {
        Self { terms: BTreeMap::new(), cutoff }
    }

    pub fn from_terms(cutoff: u32, terms: impl IntoIterator<Item = (Occupation, C64)>) -> Result<Self, FockError> {
        let mut v = Self::empty(cutoff);
        for (occ, amp) in terms {
            v.check_cutoff(occ.total())?;
            *v.terms.entry(occ).or_insert(ZERO) += amp;
        }
        v.prune();
        Ok(v)
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn with_cutoff(mut self, cutoff: u32) -> Result<Self, FockError> {
        if let Some(max) = self.terms.keys().map(Occupation::total).max() {
            if max > cutoff {
                return Err(FockError::CutoffExceeded { cutoff, found: max });
            }
        }
        self.cutoff = cutoff;
        Ok(self)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, C64)> {
        self.terms.iter().map(|(o, &a)| (o, a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, occ: &Occupation) -> C64 {
        self.terms.get(occ).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self, FockError> {
        let n = self.norm_sqr().sqrt();
        if n < PRUNE {
            return Err(FockError::EmptyBranch);
        }
        Ok(self.scale(c(1.0 / n, 0.0)))
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut v = Self { terms: self.terms.iter().map(|(o, &a)| (o.clone(), a * factor)).collect(), cutoff: self.cutoff };
        v.prune();
        v
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.cutoff = self.cutoff.max(other.cutoff);
        for (o, &a) in &other.terms {
            *out.terms.entry(o.clone()).or_insert(ZERO) += a;
        }
        out.prune();
        out
    }

    /// Keeps only terms with exactly `n` photons.
    pub fn photon_sector(&self, n: u32) -> Self {
        Self {
            terms: self.terms.iter().filter(|(o, _)| o.total() == n).map(|(o, &a)| (o.clone(), a)).collect(),
            cutoff: self.cutoff,
        }
    }

    /// `a†|ψ⟩`
    pub fn create(&self, mode: Mode) -> Result<Self, FockError> {
        let mut out = Self::empty(self.cutoff);
        for (o, &a) in &self.terms {
            let n = o.count(mode);
            out.check_cutoff(o.total() + 1)?;
            let next = o.with_delta(mode, 1).expect("creation never underflows");
            *out.terms.entry(next).or_insert(ZERO) += a * f64::from(n + 1).sqrt();
        }
        out.prune();
        Ok(out)
    }

    /// `a|ψ⟩`
    pub fn annihilate(&self, mode: Mode) -> Self {
        let mut out = Self::empty(self.cutoff);
        for (o, &a) in &self.terms {
            let n = o.count(mode);
            if let Some(prev) = o.with_delta(mode, -1) {
                *out.terms.entry(prev).or_insert(ZERO) += a * f64::from(n).sqrt();
            }
        }
        out.prune();
        out
    }

    /// Replaces every creation operator `a†_m` by `Σ u·a†_{m'}` as given by
    /// `map` (modes for which `map` returns `None` are left alone) and
    /// expands the product.
    pub fn substitute<F>(&self, map: F) -> Result<Self, FockError>
    where
        F: Fn(Mode) -> Option<Vec<(Mode, C64)>>,
    {
        let mut out = Self::empty(self.cutoff);
        for (occ, &amp) in &self.terms {
            // amplitude of |n⟩ is coefficient of Π a†^n / √(n!)
            let mut poly: BTreeMap<Occupation, C64> = BTreeMap::new();
            poly.insert(Occupation::vacuum(), amp / occ.factorial_norm());
            for (mode, n) in occ.modes() {
                let image = map(mode).unwrap_or_else(|| vec![(mode, ONE)]);
                for _ in 0..n {
                    let mut next: BTreeMap<Occupation, C64> = BTreeMap::new();
                    for (mono, &coef) in &poly {
                        for &(target, u) in &image {
                            if u == ZERO {
                                continue;
                            }
                            let m = mono.with_delta(target, 1).expect("creation never underflows");
                            *next.entry(m).or_insert(ZERO) += coef * u;
                        }
                    }
                    poly = next;
                }
            }
            for (mono, coef) in poly {
                out.check_cutoff(mono.total())?;
                let norm = mono.factorial_norm();
                *out.terms.entry(mono).or_insert(ZERO) += coef * norm;
            }
        }
        out.prune();
        Ok(out)
    }

    /// Applies a 2×2 polarization transform on one spatial mode (all tags).
    pub fn transform_polarization(&self, spatial: Spatial, m: &PolarizationMap) -> Result<Self, FockError> {
        self.substitute(|mode| {
            (mode.spatial == spatial).then(|| {
                let row = m.matrix[mode.pol.index()];
                vec![
                    (Mode::tagged(spatial, Pol::Par, mode.tag), row[0]),
                    (Mode::tagged(spatial, Pol::Perp, mode.tag), row[1]),
                ]
            })
        })
    }

    /// Applies a two-port spatial mode map to both polarizations and all tags.
    pub fn transform_spatial(&self, m: &ModeMap) -> Result<Self, FockError> {
        self.substitute(|mode| {
            let i = m.inputs.iter().position(|&s| s == mode.spatial)?;
            let row = m.matrix[i];
            Some(vec![
                (Mode::tagged(m.outputs[0], mode.pol, mode.tag), row[0]),
                (Mode::tagged(m.outputs[1], mode.pol, mode.tag), row[1]),
            ])
        })
    }

    /// Multiplies by a global phase so the largest amplitude (first in
    /// occupation order on ties) is real and positive.
    pub fn fix_global_phase(&self) -> Self {
        let max = self.terms.values().map(|a| a.norm()).fold(0.0, f64::max);
        match self.terms.values().find(|a| a.norm() >= max - 1e-12) {
            Some(lead) if lead.norm() > 0.0 => self.scale(lead.conj() / lead.norm()),
            _ => self.clone(),
        }
    }

    fn check_cutoff(&self, total: u32) -> Result<(), FockError> {
        if total > self.cutoff {
            Err(FockError::CutoffExceeded { cutoff: self.cutoff, found: total })
        } else {
            Ok(())
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE);
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (occ, a)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if a.im.abs() < 1e-12 {
                write!(f, "({:.6}){occ}", a.re)?;
            } else {
                write!(f, "({:.6}{:+.6}i){occ}", a.re, a.im)?;
            }
        }
        Ok(())
    }
}

/// `a†_{in_i} = Σ_j matrix[i][j] a†_{out_j}`, applied identically to each
/// polarization.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMap {
    pub inputs: [Spatial; 2],
    pub outputs: [Spatial; 2],
    pub matrix: [[C64; 2]; 2],
}

impl ModeMap {
    /// The symmetrizing 50:50 beam splitter:
    /// `a†_1 = (a†_3 + i a†_4)/√2`, `a†_2 = (i a†_3 + a†_4)/√2`.
    pub fn balanced_splitter() -> Self {
        let h = c(FRAC_1_SQRT_2, 0.0);
        Self { inputs: [Spatial::K1, Spatial::K2], outputs: [Spatial::K3, Spatial::K4], matrix: [[h, I * h], [I * h, h]] }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let flat: Vec<C64> = self.matrix.iter().flatten().copied().collect();
        LinearMap::from_rows(2, 2, &flat).map(|m| m.is_unitary(tol)).unwrap_or(false)
    }
}

/// `a†_{pol_i} = Σ_j matrix[i][j] a†_{pol_j}` on one spatial mode.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationMap {
    pub matrix: [[C64; 2]; 2],
}

impl PolarizationMap {
    /// Swap of the two polarizations (half-wave plate pair).
    pub fn swap() -> Self {
        Self { matrix: [[ZERO, ONE], [ONE, ZERO]] }
    }

    /// Re-expresses H/V operators in the basis `{φ, φ⊥}` of a real qubit
    /// `φ = αH + βV`, `φ⊥ = −βH + αV`.
    pub fn to_real_basis(q: &RealQubit) -> Self {
        let (a, b) = (c(q.alpha(), 0.0), c(q.beta(), 0.0));
        Self { matrix: [[a, -b], [b, a]] }
    }

    /// Re-expresses H/V operators in the basis
    /// `a†_ψ = (a†_H + e^{iψ}a†_V)/√2`, `a†_ψ⊥ = (−e^{−iψ}a†_H + a†_V)/√2`.
    pub fn to_phase_basis(psi: f64) -> Self {
        let h = FRAC_1_SQRT_2;
        let e = C64::from_polar(1.0, psi);
        Self { matrix: [[c(h, 0.0), -e * h], [e.conj() * h, c(h, 0.0)]] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Geometry {
    #[default]
    TwoMode,
    Collinear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpaConfig {
    /// Gain `g = χt`.
    pub gain: f64,
    pub geometry: Geometry,
    pub collinear_phase: f64,
    pub cutoff: u32,
}

impl Default for OpaConfig {
    fn default() -> Self {
        Self { gain: 0.1, geometry: Geometry::TwoMode, collinear_phase: 0.0, cutoff: DEFAULT_CUTOFF }
    }
}

impl OpaConfig {
    pub fn collinear(psi: f64) -> Self {
        Self { geometry: Geometry::Collinear, collinear_phase: psi, ..Self::default() }
    }

    fn validate(&self, geometry: Geometry) -> Result<(), FockError> {
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(FockError::Config(format!("gain must be positive, got {}", self.gain)));
        }
        if self.geometry != geometry {
            return Err(FockError::Config(format!("expected {geometry:?} geometry, got {:?}", self.geometry)));
        }
        if self.cutoff < 3 {
            return Err(FockError::CutoffExceeded { cutoff: self.cutoff, found: 3 });
        }
        Ok(())
    }
}

/// `(K − K†)|ψ⟩` with `K = a†_{1,Par} a†_{2,Perp} − a†_{1,Perp} a†_{2,Par}`
/// acting on untagged modes. `−iH_int t/ħ = g(K − K†)`.
pub fn two_mode_generator(state: &FockVector) -> Result<FockVector, FockError> {
    let m = |s, p| Mode::new(s, p);
    let (p1, q1, p2, q2) = (m(Spatial::K1, Pol::Par), m(Spatial::K1, Pol::Perp), m(Spatial::K2, Pol::Par), m(Spatial::K2, Pol::Perp));
    let k = state.create(q2)?.create(p1)?.add(&state.create(p2)?.create(q1)?.scale(-ONE));
    let kd = state.annihilate(q2).annihilate(p1).add(&state.annihilate(p2).annihilate(q1).scale(-ONE));
    Ok(k.add(&kd.scale(-ONE)))
}

/// `(a†_H a†_V − a_H a_V)|ψ⟩` on the collinear mode; `−iH_coll t/ħ = g·(this)`.
pub fn collinear_generator(state: &FockVector) -> Result<FockVector, FockError> {
    let h = Mode::new(Spatial::K, Pol::Par);
    let v = Mode::new(Spatial::K, Pol::Perp);
    Ok(state.create(v)?.create(h)?.add(&state.annihilate(v).annihilate(h).scale(-ONE)))
}

/// First-order output of the two-mode amplifier injected with one photon in
/// polarization `input` on k1, expressed in the `{φ, φ⊥}` basis:
/// `√(2/3)|2,0⟩_k1|0,1⟩_k2 − √(1/3)|1,1⟩_k1|1,0⟩_k2`.
///
/// The evolution is computed in the H/V basis and rotated afterwards, so the
/// result exercises the rotational invariance of the interaction.
pub fn opa_first_order(input: &RealQubit, cfg: &OpaConfig) -> Result<FockVector, FockError> {
    cfg.validate(Geometry::TwoMode)?;
    let injected = FockVector::vacuum(cfg.cutoff)
        .create(Mode::new(Spatial::K1, Pol::Par))?
        .scale(c(input.alpha(), 0.0))
        .add(&FockVector::vacuum(cfg.cutoff).create(Mode::new(Spatial::K1, Pol::Perp))?.scale(c(input.beta(), 0.0)));
    let evolved = injected.add(&two_mode_generator(&injected)?.scale(c(cfg.gain, 0.0)));
    let rot = PolarizationMap::to_real_basis(input);
    evolved
        .photon_sector(3)
        .transform_polarization(Spatial::K1, &rot)?
        .transform_polarization(Spatial::K2, &rot)?
        .normalize()
}

/// σ_Y on the k2 polarization with phases absorbed: swaps φ and φ⊥ on k2.
pub fn flip_waveplates(state: &FockVector) -> Result<FockVector, FockError> {
    state.transform_polarization(Spatial::K2, &PolarizationMap::swap())
}

pub fn beamsplitter(state: &FockVector) -> Result<FockVector, FockError> {
    state.transform_spatial(&ModeMap::balanced_splitter())
}

/// Conditions on all `photons` photons leaving through `spatial`. Returns the
/// renormalized, phase-fixed conditional state and the branch probability.
pub fn postselect(state: &FockVector, spatial: Spatial, photons: u32) -> Result<(FockVector, f64), FockError> {
    let total = state.norm_sqr();
    if total < PRUNE {
        return Err(FockError::EmptyBranch);
    }
    let kept = FockVector::from_terms(
        state.cutoff(),
        state
            .terms()
            .filter(|(o, _)| o.total() == photons && o.modes().all(|(m, _)| m.spatial == spatial))
            .map(|(o, a)| (o.clone(), a)),
    )?;
    let p = kept.norm_sqr() / total;
    if p < PRUNE * PRUNE || kept.is_empty() {
        return Err(FockError::EmptyBranch);
    }
    Ok((kept.normalize()?.fix_global_phase(), p))
}

pub fn postselect_k3(state: &FockVector) -> Result<(FockVector, f64), FockError> {
    postselect(state, Spatial::K3, 3)
}

/// Mean fraction of photons in polarization `Par` for a single-spatial-mode state.
pub fn fock_clone_fidelity(state: &FockVector) -> Result<f64, FockError> {
    let mut spatial = None;
    let mut acc = 0.0;
    let norm = state.norm_sqr();
    for (occ, a) in state.terms() {
        for s in occ.spatial_modes() {
            if *spatial.get_or_insert(s) != s {
                return Err(FockError::NotSingleMode);
            }
        }
        let total = occ.total();
        if total == 0 {
            return Err(FockError::NoPhotons);
        }
        acc += a.norm_sqr() * f64::from(occ.polarization_count(Pol::Par)) / f64::from(total);
    }
    if norm < PRUNE {
        return Err(FockError::NoPhotons);
    }
    Ok(acc / norm)
}

/// First-order output of the collinear amplifier injected with
/// `2^{-1/2}(|H⟩ + e^{iψ}|V⟩)`, in the `{ψ, ψ⊥}` basis and phase-fixed:
/// `(√3/2)|3,0⟩ − (e^{2iψ}/2)|1,2⟩`.
pub fn collinear_first_order(psi: f64, cfg: &OpaConfig) -> Result<FockVector, FockError> {
    cfg.validate(Geometry::Collinear)?;
    let h = Mode::new(Spatial::K, Pol::Par);
    let v = Mode::new(Spatial::K, Pol::Perp);
    let vac = FockVector::vacuum(cfg.cutoff);
    let injected = vac.create(h)?.add(&vac.create(v)?.scale(C64::from_polar(1.0, psi))).scale(c(FRAC_1_SQRT_2, 0.0));
    let evolved = injected.add(&collinear_generator(&injected)?.scale(c(cfg.gain, 0.0)));
    Ok(evolved
        .photon_sector(3)
        .transform_polarization(Spatial::K, &PolarizationMap::to_phase_basis(psi))?
        .normalize()?
        .fix_global_phase())
}

/// Number basis of two modes with total photon number ≤ `cutoff`, and the
/// matrices of `a†_H`, `a†_V` on it.
fn two_mode_creation_matrices(cutoff: u32) -> (LinearMap, LinearMap) {
    let basis: Vec<(u32, u32)> = (0..=cutoff).flat_map(|t| (0..=t).map(move |h| (h, t - h))).collect();
    let index = |h: u32, v: u32| basis.iter().position(|&b| b == (h, v));
    let dim = basis.len();
    let mut ah = vec![ZERO; dim * dim];
    let mut av = vec![ZERO; dim * dim];
    for (col, &(h, v)) in basis.iter().enumerate() {
        if let Some(row) = index(h + 1, v) {
            ah[row * dim + col] = c(f64::from(h + 1).sqrt(), 0.0);
        }
        if let Some(row) = index(h, v + 1) {
            av[row * dim + col] = c(f64::from(v + 1).sqrt(), 0.0);
        }
    }
    (LinearMap::from_rows(dim, dim, &ah).unwrap(), LinearMap::from_rows(dim, dim, &av).unwrap())
}

fn plus_hc(x: &LinearMap) -> LinearMap {
    x.add(&x.adjoint()).unwrap()
}

/// Max entrywise difference between `H_coll = i a†_H a†_V + h.c.` and its
/// rotated form `½ i e^{−iψ}(a†_ψ² − e^{2iψ} a†_ψ⊥²) + h.c.` on the Fock
/// space truncated at `cutoff` photons (χħ = 1).
pub fn hamiltonian_invariance_residual(psi: f64, cutoff: u32) -> Result<f64, FockError> {
    if cutoff < 2 {
        return Err(FockError::Config(format!("cutoff must be at least 2, got {cutoff}")));
    }
    let (ah, av) = two_mode_creation_matrices(cutoff);
    let direct = plus_hc(&ah.compose(&av).unwrap().scale(I));

    let e = C64::from_polar(1.0, psi);
    let h = c(FRAC_1_SQRT_2, 0.0);
    let a_psi = ah.add(&av.scale(e)).unwrap().scale(h);
    let a_perp = ah.scale(-e.conj()).add(&av).unwrap().scale(h);
    let inner = a_psi.compose(&a_psi).unwrap().add(&a_perp.compose(&a_perp).unwrap().scale(-e * e)).unwrap();
    let rotated = plus_hc(&inner.scale(I * e.conj() * 0.5));
    Ok(direct.max_abs_diff(&rotated))
}

pub fn hamiltonian_invariance_check(psi: f64) -> f64 {
    hamiltonian_invariance_residual(psi, 4).expect("cutoff 4 is valid")
}

/// The full two-mode protocol: amplify, flip k2, beam splitter, post-select
/// three photons on k3.
pub fn two_mode_pipeline(input: &RealQubit, cfg: &OpaConfig) -> Result<(FockVector, f64), FockError> {
    let opa = opa_first_order(input, cfg)?;
    postselect_k3(&beamsplitter(&flip_waveplates(&opa)?)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosscheckReport {
    pub postselected: FockVector,
    pub branch_probability: f64,
    /// `(P|3,0⟩, P|1,2⟩)` of the post-selected Fock state.
    pub fock_probabilities: [f64; 2],
    /// `(|⟨φφφ|ξ⟩|², Σ|⟨φφ⊥φ⊥ perms|ξ⟩|²)` of the qubit-level output.
    pub qubit_probabilities: [f64; 2],
    pub fock_fidelity: f64,
    pub qubit_fidelity: f64,
    /// Sign of `amp|1,2⟩ / amp|3,0⟩` after post-selection.
    pub relative_sign: f64,
}

/// Maps the post-selected Fock state onto the symmetric three-qubit state
/// (`|3,0⟩ ↔ |φφφ⟩`, `|1,2⟩ ↔` symmetrized `|φφ⊥φ⊥⟩`) and checks that both
/// levels agree on occupation probabilities and fidelity within 1e-10.
pub fn qubit_fock_crosscheck(input: &RealQubit) -> Result<CrosscheckReport, FockError> {
    let (state, branch_probability) = two_mode_pipeline(input, &OpaConfig::default())?;
    let m30 = Occupation::from_counts(&[(Mode::new(Spatial::K3, Pol::Par), 3)]);
    let m12 = Occupation::from_counts(&[(Mode::new(Spatial::K3, Pol::Par), 1), (Mode::new(Spatial::K3, Pol::Perp), 2)]);
    let (a30, a12) = (state.amplitude(&m30), state.amplitude(&m12));
    let fock_probabilities = [a30.norm_sqr(), a12.norm_sqr()];
    let fock_fidelity = fock_clone_fidelity(&state)?;

    let clone = pqcm_1to3(input)?;
    let amps = amplitudes_in_basis(clone.state.pure().expect("pure output"), &input.qubit())?;
    let qubit_probabilities = [amps[0].norm_sqr(), amps[0b011].norm_sqr() + amps[0b101].norm_sqr() + amps[0b110].norm_sqr()];
    let qubit_fidelity = clone.mean_fidelity();

    let fock = [fock_probabilities[0], fock_probabilities[1], fock_fidelity];
    let qubit = [qubit_probabilities[0], qubit_probabilities[1], qubit_fidelity];
    if fock.iter().zip(&qubit).any(|(a, b)| (a - b).abs() > 1e-10) {
        return Err(FockError::CrosscheckMismatch { fock: fock.to_vec(), qubit: qubit.to_vec() });
    }
    let ratio = a12 / a30;
    Ok(CrosscheckReport {
        postselected: state,
        branch_probability,
        fock_probabilities,
        qubit_probabilities,
        fock_fidelity,
        qubit_fidelity,
        relative_sign: ratio.re.signum(),
    })
}
