//! Coincidence-counting model of the cloning experiment.
//!
//! A scan moves either the pump mirror (Z, switches stimulated emission on
//! and off) or the symmetrizing beam splitter (X, switches the three-photon
//! interference on and off). Each output component `h` then shows a
//! baseline `b_h` far from the origin and a Gaussian enhancement by `R_h`
//! at the origin. Counts are Poisson samples of that profile; fitting the
//! profile and feeding `(b_h, R_h)` into the estimator yields the clone
//! fidelity.

mod estimate;
mod fit;
mod fock_rates;

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;

pub use estimate::{analyze, bootstrap_error, bootstrap_fidelities, estimate_fidelity, fidelity_from_fit, FidelityReport};
pub use fit::{fit_profile, fit_scan, ComponentFit, FitOptions, ProfileData, ProfileFit, ScanFit};
pub use fock_rates::{derive_enhancements_from_fock, derive_ratios_from_fock, fock_x_scan_rates, fock_z_scan_rates, RateModel};

/// Output components: `h = 1 ↔ |φφ⊥φ⊥⟩`, `2 ↔ |φφφ⊥⟩`, `3 ↔ |φφφ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ComponentLabel {
    H1,
    H2,
    H3,
}

impl ComponentLabel {
    pub const ALL: [ComponentLabel; 3] = [ComponentLabel::H1, ComponentLabel::H2, ComponentLabel::H3];

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    /// Zero-based index into `[h1, h2, h3]` arrays.
    pub fn index(self) -> usize {
        match self {
            ComponentLabel::H1 => 0,
            ComponentLabel::H2 => 1,
            ComponentLabel::H3 => 2,
        }
    }

    pub fn from_number(h: u8) -> Option<Self> {
        match h {
            1 => Some(ComponentLabel::H1),
            2 => Some(ComponentLabel::H2),
            3 => Some(ComponentLabel::H3),
            _ => None,
        }
    }

    /// Component with `n` photons in polarization φ out of three.
    pub fn from_par_count(n: u32) -> Option<Self> {
        match n {
            1 => Some(ComponentLabel::H1),
            2 => Some(ComponentLabel::H2),
            3 => Some(ComponentLabel::H3),
            _ => None,
        }
    }
}

impl TryFrom<u8> for ComponentLabel {
    type Error = String;

    fn try_from(h: u8) -> Result<Self, Self::Error> {
        Self::from_number(h).ok_or_else(|| format!("component label must be 1, 2 or 3, got {h}"))
    }
}

impl From<ComponentLabel> for u8 {
    fn from(h: ComponentLabel) -> u8 {
        h.number()
    }
}

impl fmt::Display for ComponentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h={}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScanVariable {
    /// Pump-mirror delay: stimulated emission on at the origin.
    #[default]
    Z,
    /// Beam-splitter position: three-photon interference on at the origin.
    X,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub scan_variable: ScanVariable,
    /// Scan positions in µm.
    pub points: Vec<f64>,
    /// Width of the Gaussian enhancement profile in µm.
    pub coherence_sigma: f64,
    /// `b_h` for `[h1, h2, h3]`, counts per shot far from the origin.
    pub baselines: [f64; 3],
    /// `R_h` for `[h1, h2, h3]`.
    pub ratios: [f64; 3],
    pub shots_per_point: u64,
    /// Detection efficiencies `η_h` in `(0, 1]`.
    pub efficiencies: [f64; 3],
    pub seed: u64,
}

impl ScanConfig {
    /// Nine points symmetric about the origin out to four widths, ideal
    /// Z-scan ratios and `b_1 = b_3 = baseline`.
    pub fn ideal_z(baseline: f64, shots_per_point: u64, seed: u64) -> Self {
        let sigma = 20.0;
        Self {
            scan_variable: ScanVariable::Z,
            points: (-4..=4).map(|k| f64::from(k) * sigma).collect(),
            coherence_sigma: sigma,
            baselines: [baseline, 0.0, baseline],
            ratios: ratio_array(&ideal_ratios(ScanVariable::Z)),
            shots_per_point,
            efficiencies: [1.0; 3],
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.coherence_sigma > 0.0) || !self.coherence_sigma.is_finite() {
            return bad(format!("coherence sigma must be positive, got {}", self.coherence_sigma));
        }
        if self.shots_per_point < 1 {
            return bad("shots per point must be at least 1".into());
        }
        if self.points.is_empty() || self.points.iter().any(|p| !p.is_finite()) {
            return bad("scan points must be non-empty and finite".into());
        }
        for h in ComponentLabel::ALL {
            let i = h.index();
            if !(self.baselines[i] >= 0.0) || !self.baselines[i].is_finite() {
                return bad(format!("baseline for {h} must be non-negative"));
            }
            if !(self.ratios[i] >= 0.0) || !self.ratios[i].is_finite() {
                return bad(format!("ratio for {h} must be non-negative"));
            }
            let eta = self.efficiencies[i];
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(format!("efficiency for {h} must lie in (0, 1], got {eta}"));
            }
        }
        Ok(())
    }
}

/// `η_h b_h (1 + (R_h − 1) exp(−x²/2σ²))`
pub fn expected_rate(cfg: &ScanConfig, h: ComponentLabel, position: f64) -> f64 {
    let i = h.index();
    profile(cfg.efficiencies[i] * cfg.baselines[i], cfg.ratios[i], cfg.coherence_sigma, position)
}

pub(crate) fn profile(baseline: f64, ratio: f64, sigma: f64, x: f64) -> f64 {
    baseline * (1.0 + (ratio - 1.0) * (-x * x / (2.0 * sigma * sigma)).exp())
}

/// Ideal enhancement ratios. Z-scan: `R_3 = 3`, `R_1 = 1`, `R_2 = 0` (with
/// `b_2 = 0` and `b_3 = b_1`). X-scan: `V*_3 = 3`, `V*_1 = 2`; the absent
/// `h = 2` component is reported as 0 there as well.
pub fn ideal_ratios(kind: ScanVariable) -> BTreeMap<ComponentLabel, f64> {
    let values = match kind {
        ScanVariable::Z => [1.0, 0.0, 3.0],
        ScanVariable::X => [2.0, 0.0, 3.0],
    };
    ComponentLabel::ALL.iter().map(|&h| (h, values[h.index()])).collect()
}

pub fn ratio_array(map: &BTreeMap<ComponentLabel, f64>) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (h, &v) in map {
        out[h.index()] = v;
    }
    out
}

/// One scan datum: integer coincidence counts of one component at one position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    #[serde(rename = "position_um")]
    pub position: f64,
    #[serde(rename = "component_h")]
    pub component: ComponentLabel,
    pub counts: u64,
}

pub(crate) fn poisson_sample(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    let x: f64 = d.sample(rng);
    x as u64
}

/// Poisson counts with mean `expected_rate × shots_per_point` for every
/// position and component, position-major. Deterministic in `cfg.seed`.
pub fn simulate_scan(cfg: &ScanConfig) -> Result<Vec<CountRecord>, ExperimentError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shots = cfg.shots_per_point as f64;
    let mut out = Vec::with_capacity(cfg.points.len() * 3);
    for &x in &cfg.points {
        for h in ComponentLabel::ALL {
            let counts = poisson_sample(&mut rng, expected_rate(cfg, h, x) * shots);
            out.push(CountRecord { position: x, component: h, counts });
        }
    }
    Ok(out)
}
