//! Weighted Gaussian-profile fits of scan data.
//!
//! Each component is fitted to `s·b·(1 + (R − 1)·exp(−x²/2σ²))` where `s`
//! is the known shots-per-point times detection efficiency, so `b` comes out
//! in the same per-shot units as the simulation baselines. Weights are
//! Poisson variances taken from the observed counts (floored at one count).

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::{profile, ComponentLabel, CountRecord, ScanConfig};
use crate::error::ExperimentError;

/// Minimum number of distinct scan positions per component.
pub const MIN_POSITIONS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub shots_per_point: f64,
    pub efficiencies: [f64; 3],
    /// Fit one σ for all non-dark components jointly.
    pub shared_sigma: bool,
    pub max_iterations: usize,
    /// Relative χ² change or relative step size that counts as converged.
    pub tolerance: f64,
    /// Absolute χ² change that counts as converged once χ² has levelled
    /// off (changes by under 0.1% per step). One unit of χ² corresponds to
    /// one standard error, so the default 1e-6 is far below resolution.
    pub chi2_resolution: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { shots_per_point: 1.0, efficiencies: [1.0; 3], shared_sigma: false, max_iterations: 200, tolerance: 1e-10, chi2_resolution: 1e-6 }
    }
}

impl FitOptions {
    pub fn for_config(cfg: &ScanConfig) -> Self {
        Self { shots_per_point: cfg.shots_per_point as f64, efficiencies: cfg.efficiencies, ..Self::default() }
    }
}

/// Data for one profile. `scale` multiplies the model (shots × efficiency).
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileData {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub variances: Vec<f64>,
    pub scale: f64,
}

impl ProfileData {
    /// Poisson weights from the observed values, floored at 1.
    pub fn poisson(xs: Vec<f64>, ys: Vec<f64>, scale: f64) -> Self {
        let variances = ys.iter().map(|&y| y.max(1.0)).collect();
        Self { xs, ys, variances, scale }
    }

    fn distinct_positions(&self) -> usize {
        self.xs.iter().map(|x| x.to_bits()).collect::<BTreeSet<_>>().len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFit {
    pub baseline: f64,
    pub ratio: f64,
    pub sigma: f64,
    pub baseline_err: f64,
    pub ratio_err: f64,
    /// `None` when σ is not identifiable (flat profile).
    pub sigma_err: Option<f64>,
    pub chi2: f64,
    pub iterations: usize,
}

/// Fit result of one component.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentFit {
    pub component: ComponentLabel,
    /// All counts zero: `b̂ = 0` and `R̂` undefined.
    pub dark: bool,
    pub baseline: f64,
    pub baseline_err: f64,
    pub ratio: Option<f64>,
    pub ratio_err: Option<f64>,
    pub sigma: Option<f64>,
    pub sigma_err: Option<f64>,
    pub chi2: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanFit {
    /// Indexed `[h1, h2, h3]`.
    pub components: [ComponentFit; 3],
}

impl ScanFit {
    pub fn component(&self, h: ComponentLabel) -> &ComponentFit {
        &self.components[h.index()]
    }

    /// `b̂_h`, with dark components at 0.
    pub fn baselines(&self) -> [f64; 3] {
        self.components.each_ref().map(|c| c.baseline)
    }

    /// `R̂_h`, with dark components at 0.
    pub fn ratios(&self) -> [f64; 3] {
        self.components.each_ref().map(|c| c.ratio.unwrap_or(0.0))
    }
}

struct Bounds {
    sigma_min: f64,
    sigma_max: f64,
}

impl Bounds {
    fn for_data(sets: &[&ProfileData]) -> Self {
        let mut xs: Vec<f64> = sets.iter().flat_map(|d| d.xs.iter().map(|x| x.abs())).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let span = xs.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let spacing = xs.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).fold(span, f64::min);
        Self { sigma_min: (spacing / 8.0).max(span * 1e-4), sigma_max: 2.0 * span }
    }
}

impl Bounds {
    fn blocks(&self, p: &[f64], k: usize, step: f64) -> bool {
        if k + 1 == p.len() {
            (p[k] <= self.sigma_min && step < 0.0) || (p[k] >= self.sigma_max && step > 0.0)
        } else {
            p[k] <= 0.0 && step < 0.0
        }
    }
}

/// Parameter layout: `[b_0, R_0, b_1, R_1, …, σ]`.
fn evaluate(sets: &[&ProfileData], p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let n: usize = sets.iter().map(|d| d.xs.len()).sum();
    let np = p.len();
    let sigma = p[np - 1];
    let mut r = DVector::zeros(n);
    let mut j = DMatrix::zeros(n, np);
    let mut row = 0;
    for (k, d) in sets.iter().enumerate() {
        let (b, ratio) = (p[2 * k], p[2 * k + 1]);
        for ((&x, &y), &v) in d.xs.iter().zip(&d.ys).zip(&d.variances) {
            let w = 1.0 / v.sqrt();
            let e = (-x * x / (2.0 * sigma * sigma)).exp();
            let f = d.scale * profile(b, ratio, sigma, x);
            r[row] = (y - f) * w;
            j[(row, 2 * k)] = d.scale * (1.0 + (ratio - 1.0) * e) * w;
            j[(row, 2 * k + 1)] = d.scale * b * e * w;
            j[(row, np - 1)] = d.scale * b * (ratio - 1.0) * e * x * x / sigma.powi(3) * w;
            row += 1;
        }
    }
    (r, j)
}

fn clamp(p: &mut [f64], bounds: &Bounds) {
    let np = p.len();
    for v in &mut p[..np - 1] {
        *v = v.max(0.0);
    }
    p[np - 1] = p[np - 1].abs().clamp(bounds.sigma_min, bounds.sigma_max);
}

fn initial_guess(d: &ProfileData, bounds: &Bounds) -> (f64, f64, f64) {
    let span = d.xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rates: Vec<(f64, f64)> = d.xs.iter().zip(&d.ys).map(|(&x, &y)| (x.abs(), y / d.scale)).collect();
    let outer: Vec<f64> = rates.iter().filter(|(ax, _)| *ax >= 0.75 * span).map(|&(_, r)| r).collect();
    let mut b = outer.iter().sum::<f64>() / outer.len().max(1) as f64;
    if b <= 0.0 {
        b = 0.5 / d.scale;
    }
    let inner = rates.iter().fold((f64::INFINITY, 0.0), |acc, &(ax, r)| if ax < acc.0 { (ax, r) } else { acc });
    let ratio = (inner.1 / b).max(0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for &(ax, r) in &rates {
        let excess = (r - b) * (ratio - 1.0).signum();
        if excess > 0.0 {
            num += excess * ax * ax;
            den += excess;
        }
    }
    let sigma = if den > 0.0 && num > 0.0 { (num / den).sqrt() } else { span / 4.0 };
    (b, ratio, sigma.clamp(bounds.sigma_min, bounds.sigma_max))
}

struct Solution {
    params: Vec<f64>,
    chi2: f64,
    iterations: usize,
    normal: DMatrix<f64>,
}

fn levenberg_marquardt(
    sets: &[&ProfileData],
    mut p: Vec<f64>,
    bounds: &Bounds,
    opts: &FitOptions,
) -> Result<Solution, ExperimentError> {
    let np = p.len();
    clamp(&mut p, bounds);
    let (mut r, mut j) = evaluate(sets, &p);
    let mut chi2 = r.norm_squared();
    let mut lambda = 1e-3;
    let mut last_change = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let dmax = jtj.diagonal().max();
        let mut a = jtj.clone();
        for k in 0..np {
            a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12 * dmax + 1e-300);
        }
        let Some(mut step) = a.clone().cholesky().map(|ch| ch.solve(&g)) else {
            lambda *= 10.0;
            continue;
        };
        // parameters pushed against an active bound are held fixed
        let active: Vec<usize> = (0..np).filter(|&k| bounds.blocks(&p, k, step[k])).collect();
        if !active.is_empty() {
            let mut g = g.clone();
            for &k in &active {
                a.row_mut(k).fill(0.0);
                a.column_mut(k).fill(0.0);
                a[(k, k)] = 1.0;
                g[k] = 0.0;
            }
            match a.clone().cholesky() {
                Some(ch) => step = ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            }
        }
        let mut trial = p.clone();
        for k in 0..np {
            trial[k] += step[k];
        }
        clamp(&mut trial, bounds);
        let (rt, jt) = evaluate(sets, &trial);
        let chi2_t = rt.norm_squared();
        if chi2_t.is_finite() && chi2_t <= chi2 {
            let rel_step = (0..np).map(|k| (trial[k] - p[k]).abs() / (p[k].abs() + 1e-300)).fold(0.0, f64::max);
            let drop = chi2 - chi2_t;
            last_change = rel_step;
            p = trial;
            r = rt;
            j = jt;
            chi2 = chi2_t;
            lambda = (lambda * 0.3).max(1e-12);
            let plateau = drop <= opts.chi2_resolution && drop <= 1e-3 * chi2;
            if plateau || drop <= opts.tolerance * chi2 || rel_step <= opts.tolerance || chi2 < 1e-24 {
                let normal = j.transpose() * &j;
                return Ok(Solution { params: p, chi2, iterations: it, normal });
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill step left at any damping: at the minimum
                let normal = j.transpose() * &j;
                return Ok(Solution { params: p, chi2, iterations: it, normal });
            }
        }
    }
    Err(ExperimentError::NonConvergence { iterations: opts.max_iterations, chi2, last_change })
}

/// Standard errors from `(JᵀJ)⁻¹`. Falls back to the block without σ when
/// the full matrix is singular or σ is effectively unconstrained.
fn standard_errors(normal: &DMatrix<f64>) -> (Vec<f64>, Option<f64>) {
    let np = normal.nrows();
    if let Some(inv) = normal.clone().try_inverse() {
        let diag: Vec<f64> = (0..np).map(|k| inv[(k, k)]).collect();
        if diag.iter().all(|v| v.is_finite() && *v >= 0.0) {
            let s = diag[np - 1].sqrt();
            let errs = diag[..np - 1].iter().map(|v| v.sqrt()).collect();
            return (errs, Some(s));
        }
    }
    let sub = normal.view((0, 0), (np - 1, np - 1)).into_owned();
    let errs = match sub.try_inverse() {
        Some(inv) => (0..np - 1).map(|k| inv[(k, k)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; np - 1],
    };
    (errs, None)
}

/// Fits one profile.
pub fn fit_profile(data: &ProfileData, opts: &FitOptions) -> Result<ProfileFit, ExperimentError> {
    let found = data.distinct_positions();
    if found < MIN_POSITIONS {
        return Err(ExperimentError::TooFewPoints { needed: MIN_POSITIONS, found });
    }
    let bounds = Bounds::for_data(&[data]);
    let (b, r, s) = initial_guess(data, &bounds);
    let sol = levenberg_marquardt(&[data], vec![b, r, s], &bounds, opts)?;
    let (errs, sigma_err) = standard_errors(&sol.normal);
    Ok(ProfileFit {
        baseline: sol.params[0],
        ratio: sol.params[1],
        sigma: sol.params[2],
        baseline_err: errs[0],
        ratio_err: errs[1],
        sigma_err,
        chi2: sol.chi2,
        iterations: sol.iterations,
    })
}

fn dark_fit(component: ComponentLabel) -> ComponentFit {
    ComponentFit {
        component,
        dark: true,
        baseline: 0.0,
        baseline_err: 0.0,
        ratio: None,
        ratio_err: None,
        sigma: None,
        sigma_err: None,
        chi2: 0.0,
        iterations: 0,
    }
}

fn profile_data(records: &[CountRecord], h: ComponentLabel, opts: &FitOptions) -> ProfileData {
    let (xs, ys) = records.iter().filter(|r| r.component == h).map(|r| (r.position, r.counts as f64)).unzip();
    ProfileData::poisson(xs, ys, opts.shots_per_point * opts.efficiencies[h.index()])
}

/// Fits every component of a scan. Components whose counts are all zero are
/// flagged dark instead of fitted.
pub fn fit_scan(records: &[CountRecord], opts: &FitOptions) -> Result<ScanFit, ExperimentError> {
    if !(opts.shots_per_point > 0.0) {
        return Err(ExperimentError::Config("shots per point must be positive".into()));
    }
    let data = ComponentLabel::ALL.map(|h| profile_data(records, h, opts));
    for d in &data {
        let found = d.distinct_positions();
        if found < MIN_POSITIONS {
            return Err(ExperimentError::TooFewPoints { needed: MIN_POSITIONS, found });
        }
    }
    let lit: Vec<ComponentLabel> = ComponentLabel::ALL.into_iter().filter(|h| data[h.index()].ys.iter().any(|&y| y > 0.0)).collect();
    let mut out = ComponentLabel::ALL.map(dark_fit);

    if opts.shared_sigma && lit.len() > 1 {
        let sets: Vec<&ProfileData> = lit.iter().map(|h| &data[h.index()]).collect();
        let bounds = Bounds::for_data(&sets);
        let mut p = Vec::with_capacity(2 * sets.len() + 1);
        let mut sigmas = Vec::new();
        for d in &sets {
            let (b, r, s) = initial_guess(d, &bounds);
            p.extend([b, r]);
            sigmas.push(s);
        }
        p.push(sigmas.iter().sum::<f64>() / sigmas.len() as f64);
        let sol = levenberg_marquardt(&sets, p, &bounds, opts)?;
        let (errs, sigma_err) = standard_errors(&sol.normal);
        let sigma = *sol.params.last().unwrap();
        for (k, &h) in lit.iter().enumerate() {
            out[h.index()] = ComponentFit {
                component: h,
                dark: false,
                baseline: sol.params[2 * k],
                baseline_err: errs[2 * k],
                ratio: Some(sol.params[2 * k + 1]),
                ratio_err: Some(errs[2 * k + 1]),
                sigma: Some(sigma),
                sigma_err,
                chi2: sol.chi2,
                iterations: sol.iterations,
            };
        }
        return Ok(ScanFit { components: out });
    }

    for h in lit {
        let f = fit_profile(&data[h.index()], opts)?;
        out[h.index()] = ComponentFit {
            component: h,
            dark: false,
            baseline: f.baseline,
            baseline_err: f.baseline_err,
            ratio: Some(f.ratio),
            ratio_err: Some(f.ratio_err),
            sigma: Some(f.sigma),
            sigma_err: f.sigma_err,
            chi2: f.chi2,
            iterations: f.iterations,
        };
    }
    Ok(ScanFit { components: out })
}
