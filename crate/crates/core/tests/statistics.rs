use pqcm_core::experiment::{
    analyze, bootstrap_error, bootstrap_fidelities, derive_ratios_from_fock, fidelity_from_fit, fit_scan, ratio_array, simulate_scan,
    ComponentLabel, FitOptions, ScanConfig,
};

const FIVE_SIXTHS: f64 = 5.0 / 6.0;

#[test]
fn fock_ratios_drive_the_simulation() {
    let mut cfg = ScanConfig::ideal_z(20.0, 400, 17);
    cfg.ratios = ratio_array(&derive_ratios_from_fock().unwrap());
    assert_eq!(cfg, ScanConfig::ideal_z(20.0, 400, 17));
    let recs = simulate_scan(&cfg).unwrap();
    let report = analyze(&recs, &FitOptions::for_config(&cfg), 200, 3).unwrap();
    assert!((report.fidelity - FIVE_SIXTHS).abs() < 3.0 * report.fidelity_err, "{report:?}");
}

#[test]
fn efficiency_correction_recovers_the_same_fidelity() {
    for seed in 0..5 {
        let plain = ScanConfig::ideal_z(20.0, 400, seed);
        let mut lossy = plain.clone();
        lossy.efficiencies = [0.35, 1.0, 0.8];
        let a = analyze(&simulate_scan(&plain).unwrap(), &FitOptions::for_config(&plain), 200, 1).unwrap();
        let b = analyze(&simulate_scan(&lossy).unwrap(), &FitOptions::for_config(&lossy), 200, 1).unwrap();
        let tol = 3.0 * (a.fidelity_err.powi(2) + b.fidelity_err.powi(2)).sqrt();
        assert!((a.fidelity - b.fidelity).abs() < tol, "seed {seed}: {} vs {}", a.fidelity, b.fidelity);
        assert!((b.fidelity - FIVE_SIXTHS).abs() < 3.0 * b.fidelity_err);
    }
}

#[test]
fn ignoring_efficiencies_biases_the_estimate() {
    let mut cfg = ScanConfig::ideal_z(20.0, 400, 2);
    cfg.efficiencies = [1.0, 1.0, 0.5];
    let recs = simulate_scan(&cfg).unwrap();
    let naive = FitOptions { efficiencies: [1.0; 3], ..FitOptions::for_config(&cfg) };
    let f = fidelity_from_fit(&fit_scan(&recs, &naive).unwrap()).unwrap();
    // b3 halves: F = (9/2 + 1) / (3 (3/2 + 1)) = 11/15
    assert!((f - 11.0 / 15.0).abs() < 0.01, "{f}");
}

#[test]
fn error_shrinks_as_root_shots() {
    let mean_err = |shots: u64| {
        (0..8)
            .map(|seed| {
                let cfg = ScanConfig::ideal_z(20.0, shots, 100 + seed);
                bootstrap_error(&simulate_scan(&cfg).unwrap(), &FitOptions::for_config(&cfg), 200, seed).unwrap()
            })
            .sum::<f64>()
            / 8.0
    };
    let ratio = mean_err(400) / mean_err(800);
    assert!((ratio - 2f64.sqrt()).abs() < 0.15, "ratio {ratio}");
}

#[test]
fn bootstrap_error_matches_the_spread_of_estimates() {
    let estimates: Vec<f64> = (0..60)
        .map(|seed| {
            let cfg = ScanConfig::ideal_z(20.0, 400, 500 + seed);
            fidelity_from_fit(&fit_scan(&simulate_scan(&cfg).unwrap(), &FitOptions::for_config(&cfg)).unwrap()).unwrap()
        })
        .collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let spread = (estimates.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let cfg = ScanConfig::ideal_z(20.0, 400, 500);
    let boot = bootstrap_error(&simulate_scan(&cfg).unwrap(), &FitOptions::for_config(&cfg), 400, 9).unwrap();
    assert!((boot / spread - 1.0).abs() < 0.35, "bootstrap {boot} vs spread {spread}");
    assert!((mean - FIVE_SIXTHS).abs() < 4.0 * spread / n.sqrt(), "mean {mean}");
}

#[test]
fn bootstrap_does_not_depend_on_thread_count() {
    let cfg = ScanConfig::ideal_z(20.0, 400, 4);
    let recs = simulate_scan(&cfg).unwrap();
    let opts = FitOptions::for_config(&cfg);
    let parallel = bootstrap_fidelities(&recs, &opts, 150, 6).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| bootstrap_fidelities(&recs, &opts, 150, 6).unwrap());
    assert_eq!(parallel, serial);
}

#[test]
fn simulation_is_reproducible() {
    let cfg = ScanConfig::ideal_z(20.0, 400, 42);
    assert_eq!(simulate_scan(&cfg).unwrap(), simulate_scan(&cfg).unwrap());
    let other = ScanConfig { seed: 43, ..cfg.clone() };
    assert_ne!(simulate_scan(&cfg).unwrap(), simulate_scan(&other).unwrap());
}

#[test]
fn dark_component_reports_null_ratio() {
    let cfg = ScanConfig::ideal_z(20.0, 400, 8);
    let fit = fit_scan(&simulate_scan(&cfg).unwrap(), &FitOptions::for_config(&cfg)).unwrap();
    assert!(fit.component(ComponentLabel::H2).dark);
    assert_eq!(fit.ratios()[1], 0.0);
}

#[test]
fn calibration_config_bootstrap_error() {
    // Monte-Carlo calibration (200 seeds) of b = 20, R3 = 3, nine points,
    // 400 shots: mean bootstrap error 1.43e-3. About 8000 counts per point
    // keep the error well below one percent.
    for seed in 0..10 {
        let cfg = ScanConfig::ideal_z(20.0, 400, 900 + seed);
        let e = bootstrap_error(&simulate_scan(&cfg).unwrap(), &FitOptions::for_config(&cfg), 200, seed).unwrap();
        assert!((8e-4..2.5e-3).contains(&e), "seed {seed}: {e}");
    }
}
