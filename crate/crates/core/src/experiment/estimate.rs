use num_traits::Num;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_scan, FitOptions, ScanFit};
use super::{poisson_sample, profile, CountRecord};
use crate::error::ExperimentError;

/// Clone fidelity from baselines and enhancement ratios, both indexed
/// `[h1, h2, h3]`:
///
/// `F = (3 b₃R₃ + 2 b₂R₂ + b₁R₁) / (3 b₃R₃ + 3 b₂R₂ + 3 b₁R₁)`
///
/// Generic so it can be evaluated exactly over rationals.
pub fn estimate_fidelity<T>(b: [T; 3], r: [T; 3]) -> Result<T, ExperimentError>
where
    T: Num + PartialOrd + Copy,
{
    let zero = T::zero();
    if b.iter().chain(r.iter()).any(|v| !(*v >= zero)) {
        return Err(ExperimentError::NegativeInput);
    }
    let two = T::one() + T::one();
    let three = two + T::one();
    let (p1, p2, p3) = (b[0] * r[0], b[1] * r[1], b[2] * r[2]);
    let den = three * (p3 + p2 + p1);
    if den == zero {
        return Err(ExperimentError::ZeroDenominator);
    }
    Ok((three * p3 + two * p2 + p1) / den)
}

pub fn fidelity_from_fit(fit: &ScanFit) -> Result<f64, ExperimentError> {
    estimate_fidelity(fit.baselines(), fit.ratios())
}

/// Fitted parameters and fidelity. Serialized with the field names
/// `b, R, b_err, R_err, fidelity, fidelity_err`; arrays are `[h1, h2, h3]`
/// and undefined entries (dark components) are `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub b: [f64; 3],
    #[serde(rename = "R")]
    pub r: [Option<f64>; 3],
    pub b_err: [Option<f64>; 3],
    #[serde(rename = "R_err")]
    pub r_err: [Option<f64>; 3],
    pub fidelity: f64,
    pub fidelity_err: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl FidelityReport {
    pub fn from_fit(fit: &ScanFit, fidelity_err: f64) -> Result<Self, ExperimentError> {
        Ok(Self {
            b: fit.baselines(),
            r: fit.components.each_ref().map(|c| c.ratio),
            b_err: fit.components.each_ref().map(|c| finite(c.baseline_err)),
            r_err: fit.components.each_ref().map(|c| c.ratio_err.and_then(finite)),
            fidelity: fidelity_from_fit(fit)?,
            fidelity_err,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are finite")
    }
}

fn fitted_means(records: &[CountRecord], fit: &ScanFit, opts: &FitOptions) -> Vec<f64> {
    records
        .iter()
        .map(|r| {
            let c = fit.component(r.component);
            match (c.dark, c.ratio, c.sigma) {
                (false, Some(ratio), Some(sigma)) => {
                    opts.shots_per_point * opts.efficiencies[r.component.index()] * profile(c.baseline, ratio, sigma, r.position)
                }
                _ => 0.0,
            }
        })
        .collect()
}

/// Parametric bootstrap: Poisson resamples around the fitted rates, each
/// refitted and turned into a fidelity. Resample `k` draws from stream `k`
/// of a ChaCha generator seeded with `seed`, so the output order and values
/// do not depend on scheduling. Failed refits are dropped; more than 20%
/// failures is an error.
pub fn bootstrap_fidelities(
    records: &[CountRecord],
    opts: &FitOptions,
    n_resamples: usize,
    seed: u64,
) -> Result<Vec<f64>, ExperimentError> {
    if n_resamples < 100 {
        return Err(ExperimentError::TooFewResamples(n_resamples));
    }
    let fit = fit_scan(records, opts)?;
    let means = fitted_means(records, &fit, opts);
    let draws: Vec<Option<f64>> = (0..n_resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let resampled: Vec<CountRecord> = records
                .iter()
                .zip(&means)
                .map(|(r, &mu)| CountRecord { counts: poisson_sample(&mut rng, mu), ..*r })
                .collect();
            fit_scan(&resampled, opts).and_then(|f| fidelity_from_fit(&f)).ok()
        })
        .collect();
    let failed = draws.iter().filter(|d| d.is_none()).count();
    if failed * 5 > n_resamples {
        return Err(ExperimentError::BootstrapFailures { failed, total: n_resamples });
    }
    Ok(draws.into_iter().flatten().collect())
}

/// Standard deviation of the bootstrap fidelity distribution.
pub fn bootstrap_error(records: &[CountRecord], opts: &FitOptions, n_resamples: usize, seed: u64) -> Result<f64, ExperimentError> {
    let f = bootstrap_fidelities(records, opts, n_resamples, seed)?;
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    Ok((f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Fit, estimate and bootstrap in one go.
pub fn analyze(records: &[CountRecord], opts: &FitOptions, n_resamples: usize, seed: u64) -> Result<FidelityReport, ExperimentError> {
    let fit = fit_scan(records, opts)?;
    let err = bootstrap_error(records, opts, n_resamples, seed)?;
    FidelityReport::from_fit(&fit, err)
}
