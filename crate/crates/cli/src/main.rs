//! `pqcm`: command-line front end for the cloning simulations.

mod format;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use pqcm_core::cloning::{amplitudes_in_basis, bound, pqcm_1to3_with, universal_1to3, BoundKind, CloneTriple, EquatorialQubit, FlipAxis};
use pqcm_core::experiment::{analyze, FitOptions};
use pqcm_core::fock::{collinear_first_order, fock_clone_fidelity, qubit_fock_crosscheck, FockVector, Mode, Occupation, OpaConfig, Pol, Spatial};
use pqcm_core::io::{emit_report, parse_scan_config, parse_state_spec, records_to_csv, StateSpec};
use pqcm_core::linalg::C64;
use pqcm_core::{CloningError, ExperimentError, FockError, ParseError};

use format::{sig6, sig6_complex, table};

#[derive(Parser, Debug)]
#[command(name = "pqcm", version, about = "Phase-covariant 1->3 quantum cloning: qubit model, Fock model and scan analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for stdout.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GeometryArg {
    TwoMode,
    Collinear,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the qubit-level 1->3 cloner on one input state.
    Clone {
        /// H, V, plus, minus or "theta=<rad>,phi=<rad>".
        #[arg(long)]
        state: String,
        /// Depolarize the anti-clone before symmetrizing.
        #[arg(long)]
        universal: bool,
    },
    /// Optimal 1->M fidelities, universal and phase-covariant.
    Bounds {
        #[arg(long, default_value_t = 10)]
        max_m: u32,
    },
    /// Photonic realization: post-selected output and the qubit cross-check.
    Fock {
        /// Real-coefficient input state (two-mode geometry only).
        #[arg(long)]
        state: Option<String>,
        #[arg(long, value_enum, default_value_t = GeometryArg::TwoMode)]
        geometry: GeometryArg,
        /// Equatorial phase of the injected photon (collinear geometry only).
        #[arg(long)]
        psi: Option<f64>,
    },
    /// Simulate a coincidence scan, fit it and estimate the clone fidelity.
    Scan {
        /// Flat key = value config file.
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes `<out>.csv` and `<out>.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<CloningError> for Failure {
    fn from(e: CloningError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<FockError> for Failure {
    fn from(e: FockError) -> Self {
        match e {
            FockError::Config(m) => Failure::Validation(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::TooFewPoints { .. } | ExperimentError::TooFewResamples(_) => {
                Failure::Validation(e.to_string())
            }
            other => Failure::Numerical(other.to_string()),
        }
    }
}

fn complex_json(z: C64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn basis_label(idx: usize) -> String {
    (0..3).rev().map(|bit| if (idx >> bit) & 1 == 1 { "φ⊥" } else { "φ" }).collect()
}

fn cmd_clone(state: &str, universal: bool, fmt: Format) -> Result<String, Failure> {
    let spec = parse_state_spec(state)?;
    let input = spec.qubit();
    let covariant = pqcm_1to3_with(&input, FlipAxis::Y)?;
    let univ = universal_1to3(&input)?;
    let shown: &CloneTriple = if universal { &univ } else { &covariant };
    let amplitudes = match shown.state.pure() {
        Some(ket) => Some(amplitudes_in_basis(ket, &input)?),
        None => None,
    };
    let mut nonzero: Vec<(usize, C64)> = amplitudes.iter().flatten().copied().enumerate().filter(|(_, a)| a.norm() > 1e-12).collect();
    // global phase chosen so the leading amplitude is real and positive
    if let Some(&(_, lead)) = nonzero.first() {
        let phase = lead.conj() / lead.norm();
        for (_, a) in &mut nonzero {
            *a *= phase;
        }
    }

    Ok(match fmt {
        Format::Json => {
            let amps: serde_json::Map<String, serde_json::Value> = nonzero.iter().map(|&(i, a)| (basis_label(i), complex_json(a))).collect();
            let v = json!({
                "state": spec.to_string(),
                "machine": if universal { "universal" } else { "phase-covariant" },
                "amplitudes": if amplitudes.is_some() { serde_json::Value::Object(amps) } else { serde_json::Value::Null },
                "success_probability": shown.success_probability,
                "per_qubit_fidelity": shown.per_qubit_fidelity,
                "fidelity": shown.mean_fidelity(),
                "universal_fidelity": univ.mean_fidelity(),
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("finite values"))
        }
        Format::Csv => {
            let mut s = String::from("state,machine,success_probability,fidelity,universal_fidelity\n");
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                spec,
                if universal { "universal" } else { "phase-covariant" },
                sig6(shown.success_probability),
                sig6(shown.mean_fidelity()),
                sig6(univ.mean_fidelity())
            ));
            s
        }
        Format::Table => {
            let mut rows = vec![
                ("state".to_string(), spec.to_string()),
                ("machine".to_string(), if universal { "universal".into() } else { "phase-covariant".into() }),
            ];
            if amplitudes.is_some() {
                for &(i, a) in &nonzero {
                    rows.push((format!("|{}⟩", basis_label(i)), sig6_complex(a)));
                }
            } else {
                rows.push(("output".into(), "mixed".into()));
            }
            rows.push(("success_probability".into(), sig6(shown.success_probability)));
            rows.push(("per_qubit_fidelity".into(), shown.per_qubit_fidelity.map(sig6).join(" ")));
            rows.push(("fidelity".into(), sig6(shown.mean_fidelity())));
            rows.push(("universal_fidelity".into(), sig6(univ.mean_fidelity())));
            table(&rows)
        }
    })
}

fn cmd_bounds(max_m: u32, fmt: Format) -> Result<String, Failure> {
    if max_m < 2 {
        return Err(Failure::Validation(format!("--max-m must be at least 2, got {max_m}")));
    }
    let mut rows = Vec::new();
    for m in 2..=max_m {
        rows.push((m.to_string(), bound(BoundKind::Universal, 1, m)?.value, bound(BoundKind::PhaseCovariant, 1, m)?.value));
    }
    rows.push(("inf".to_string(), bound(BoundKind::Estimation, 1, 0)?.value, bound(BoundKind::PhaseEstimation, 1, 0)?.value));
    Ok(match fmt {
        Format::Json => {
            let v: Vec<_> = rows.iter().map(|(m, u, c)| json!({"M": m, "F_univ": u, "F_cov": c})).collect();
            format!("{}\n", serde_json::to_string_pretty(&v).expect("finite values"))
        }
        Format::Csv => {
            let mut s = String::from("M,F_univ,F_cov\n");
            for (m, u, c) in &rows {
                s.push_str(&format!("{m},{},{}\n", sig6(*u), sig6(*c)));
            }
            s
        }
        Format::Table => {
            let mut s = format!("{:>4}  {:>8}  {:>8}\n", "M", "F_univ", "F_cov");
            for (m, u, c) in &rows {
                s.push_str(&format!("{m:>4}  {:>8}  {:>8}\n", sig6(*u), sig6(*c)));
            }
            s
        }
    })
}

struct FockSummary {
    geometry: &'static str,
    state: FockVector,
    branch_probability: Option<f64>,
    probabilities: [f64; 2],
    fidelity: f64,
    qubit_probabilities: [f64; 2],
    qubit_fidelity: f64,
}

fn probabilities(state: &FockVector, spatial: Spatial) -> [f64; 2] {
    let m30 = Occupation::from_counts(&[(Mode::new(spatial, Pol::Par), 3)]);
    let m12 = Occupation::from_counts(&[(Mode::new(spatial, Pol::Par), 1), (Mode::new(spatial, Pol::Perp), 2)]);
    [state.amplitude(&m30).norm_sqr(), state.amplitude(&m12).norm_sqr()]
}

const CROSSCHECK_TOL: f64 = 1e-10;

fn collinear_summary(psi: f64) -> Result<FockSummary, Failure> {
    let state = collinear_first_order(psi, &OpaConfig::collinear(psi))?;
    let fock_p = probabilities(&state, Spatial::K);
    let fidelity = fock_clone_fidelity(&state)?;
    // the equatorial cloner uses the σ_Z flip
    let input = EquatorialQubit { phase: psi }.qubit();
    let clone = pqcm_1to3_with(&input, FlipAxis::Z)?;
    let amps = amplitudes_in_basis(clone.state.pure().expect("pure output"), &input)?;
    let qubit_p = [amps[0].norm_sqr(), amps[0b011].norm_sqr() + amps[0b101].norm_sqr() + amps[0b110].norm_sqr()];
    let qubit_fidelity = clone.mean_fidelity();
    let fock = [fock_p[0], fock_p[1], fidelity];
    let qubit = [qubit_p[0], qubit_p[1], qubit_fidelity];
    if fock.iter().zip(&qubit).any(|(a, b)| (a - b).abs() > CROSSCHECK_TOL) {
        return Err(FockError::CrosscheckMismatch { fock: fock.to_vec(), qubit: qubit.to_vec() }.into());
    }
    Ok(FockSummary {
        geometry: "collinear",
        state,
        branch_probability: None,
        probabilities: fock_p,
        fidelity,
        qubit_probabilities: qubit_p,
        qubit_fidelity,
    })
}

fn cmd_fock(state: Option<&str>, geometry: GeometryArg, psi: Option<f64>, fmt: Format) -> Result<String, Failure> {
    let spec = state.map(parse_state_spec).transpose()?;
    let summary = match geometry {
        GeometryArg::TwoMode => {
            if psi.is_some() {
                return Err(Failure::Validation("--psi applies to the collinear geometry only".into()));
            }
            let spec = spec.unwrap_or(StateSpec::H);
            let real = spec
                .real()
                .ok_or_else(|| Failure::Validation(format!("state `{spec}` is not a real-coefficient qubit")))?;
            let r = qubit_fock_crosscheck(&real)?;
            FockSummary {
                geometry: "two-mode",
                state: r.postselected,
                branch_probability: Some(r.branch_probability),
                probabilities: r.fock_probabilities,
                fidelity: r.fock_fidelity,
                qubit_probabilities: r.qubit_probabilities,
                qubit_fidelity: r.qubit_fidelity,
            }
        }
        GeometryArg::Collinear => {
            if spec.is_some() {
                return Err(Failure::Validation("the collinear geometry injects an equatorial photon; use --psi instead of --state".into()));
            }
            let psi = psi.unwrap_or(0.0);
            if !psi.is_finite() {
                return Err(Failure::Validation("--psi must be finite".into()));
            }
            collinear_summary(psi)?
        }
    };
    let s = &summary;
    Ok(match fmt {
        Format::Json => {
            let terms: Vec<_> = s.state.terms().map(|(o, a)| json!({"occupation": o.to_string(), "amplitude": complex_json(a)})).collect();
            let v = json!({
                "geometry": s.geometry,
                "state": terms,
                "branch_probability": s.branch_probability,
                "probabilities": s.probabilities,
                "fidelity": s.fidelity,
                "qubit_probabilities": s.qubit_probabilities,
                "qubit_fidelity": s.qubit_fidelity,
                "crosscheck": "agree",
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("finite values"))
        }
        Format::Csv => {
            let mut out = String::from("geometry,branch_probability,p_30,p_12,fidelity,crosscheck\n");
            out.push_str(&format!(
                "{},{},{},{},{},agree\n",
                s.geometry,
                s.branch_probability.map(sig6).unwrap_or_default(),
                sig6(s.probabilities[0]),
                sig6(s.probabilities[1]),
                sig6(s.fidelity)
            ));
            out
        }
        Format::Table => table(&[
            ("geometry".into(), s.geometry.into()),
            ("state".into(), s.state.to_string()),
            ("branch_probability".into(), s.branch_probability.map(sig6).unwrap_or_else(|| "n/a".into())),
            ("probabilities".into(), format!("{} {}", sig6(s.probabilities[0]), sig6(s.probabilities[1]))),
            ("fidelity".into(), sig6(s.fidelity)),
            ("qubit_probabilities".into(), format!("{} {}", sig6(s.qubit_probabilities[0]), sig6(s.qubit_probabilities[1]))),
            ("qubit_fidelity".into(), sig6(s.qubit_fidelity)),
            ("crosscheck".into(), "agree".into()),
        ]),
    })
}

fn with_extension(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn cmd_scan(config: &Path, seed: Option<u64>, out: Option<&Path>, fmt: Format) -> Result<String, Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure::Validation(format!("{}: {e}", config.display())))?;
    let mut file = parse_scan_config(&text)?;
    if let Some(seed) = seed {
        file.config.seed = seed;
    }
    let records = pqcm_core::experiment::simulate_scan(&file.config)?;
    let csv = records_to_csv(&records);
    if let Some(out) = out {
        let path = with_extension(out, "csv");
        fs::write(&path, &csv).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    }
    let opts = FitOptions { shared_sigma: file.shared_sigma, ..FitOptions::for_config(&file.config) };
    // resample streams are seeded independently of the simulation stream
    let report = analyze(&records, &opts, file.bootstrap_resamples, file.config.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let json = emit_report(&report);
    if let Some(out) = out {
        let path = with_extension(out, "json");
        fs::write(&path, format!("{json}\n")).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    }
    Ok(match fmt {
        Format::Json => format!("{json}\n"),
        Format::Csv => csv,
        Format::Table => {
            let opt = |v: Option<f64>| v.map(sig6).unwrap_or_else(|| "-".into());
            let mut rows = Vec::new();
            for (i, h) in ["h1", "h2", "h3"].iter().enumerate() {
                rows.push((format!("b_{h}"), format!("{} ± {}", sig6(report.b[i]), opt(report.b_err[i]))));
                rows.push((format!("R_{h}"), format!("{} ± {}", opt(report.r[i]), opt(report.r_err[i]))));
            }
            rows.push(("fidelity".into(), format!("{} ± {}", sig6(report.fidelity), sig6(report.fidelity_err))));
            table(&rows)
        }
    })
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Clone { state, universal } => cmd_clone(&state, universal, cli.format),
        Command::Bounds { max_m } => cmd_bounds(max_m, cli.format),
        Command::Fock { state, geometry, psi } => cmd_fock(state.as_deref(), geometry, psi, cli.format),
        Command::Scan { config, seed, out } => cmd_scan(&config, seed, out.as_deref(), cli.format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
