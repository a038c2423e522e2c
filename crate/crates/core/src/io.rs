//! Text formats: input-state specs, scan config files, count CSVs and
//! fidelity reports.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use crate::cloning::{Qubit, RealQubit};
use crate::error::ParseError;
use crate::experiment::{ideal_ratios, ratio_array, CountRecord, FidelityReport, ScanConfig, ScanVariable};

/// An input qubit given by name or by Bloch angles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StateSpec {
    H,
    V,
    Plus,
    Minus,
    Angles { theta: f64, phi: f64 },
}

impl StateSpec {
    pub fn qubit(&self) -> Qubit {
        match *self {
            StateSpec::H => Qubit::zero(),
            StateSpec::V => Qubit::one(),
            StateSpec::Plus => Qubit::plus(),
            StateSpec::Minus => Qubit::minus(),
            StateSpec::Angles { theta, phi } => Qubit::from_bloch(theta, phi),
        }
    }

    /// The state as a real-coefficient qubit, if it is one.
    pub fn real(&self) -> Option<RealQubit> {
        let (a, b) = self.qubit().amplitudes();
        if a.im.abs() > 1e-12 || b.im.abs() > 1e-12 {
            return None;
        }
        RealQubit::new(a.re, b.re).ok()
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::H => f.write_str("H"),
            StateSpec::V => f.write_str("V"),
            StateSpec::Plus => f.write_str("plus"),
            StateSpec::Minus => f.write_str("minus"),
            StateSpec::Angles { theta, phi } => write!(f, "theta={theta},phi={phi}"),
        }
    }
}

fn parse_number(key: &str, value: &str) -> Result<f64, ParseError> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|e| ParseError::InvalidValue { key: key.to_string(), message: format!("{e}") })?;
    if !v.is_finite() {
        return Err(ParseError::InvalidValue { key: key.to_string(), message: "must be finite".into() });
    }
    Ok(v)
}

/// Parses `H`, `V`, `plus`, `minus` or `theta=<rad>,phi=<rad>` (`phi`
/// defaults to 0). Names are case-insensitive.
pub fn parse_state_spec(s: &str) -> Result<StateSpec, ParseError> {
    let t = s.trim();
    match t.to_ascii_lowercase().as_str() {
        "h" => return Ok(StateSpec::H),
        "v" => return Ok(StateSpec::V),
        "plus" | "+" => return Ok(StateSpec::Plus),
        "minus" | "-" => return Ok(StateSpec::Minus),
        _ => {}
    }
    if !t.contains('=') {
        return Err(ParseError::UnknownState(t.to_string()));
    }
    let (mut theta, mut phi) = (None, None);
    for part in t.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| ParseError::UnknownState(t.to_string()))?;
        let slot = match k.trim() {
            "theta" => &mut theta,
            "phi" => &mut phi,
            other => return Err(ParseError::UnknownKey(other.to_string())),
        };
        if slot.is_some() {
            return Err(ParseError::InvalidValue { key: k.trim().to_string(), message: "given twice".into() });
        }
        *slot = Some(parse_number(k.trim(), v)?);
    }
    let theta = theta.ok_or(ParseError::MissingKey("theta"))?;
    Ok(StateSpec::Angles { theta, phi: phi.unwrap_or(0.0) })
}

/// Scan config plus the analysis settings that travel with it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanFile {
    pub config: ScanConfig,
    pub bootstrap_resamples: usize,
    pub shared_sigma: bool,
}

pub const SCAN_KEYS: [&str; 10] = [
    "scan_variable",
    "points",
    "coherence_sigma",
    "baselines",
    "ratios",
    "efficiencies",
    "shots_per_point",
    "seed",
    "bootstrap_resamples",
    "shared_sigma",
];

fn parse_list<const N: usize>(key: &str, value: &str) -> Result<[f64; N], ParseError> {
    let vs: Vec<f64> = value.split(',').map(|v| parse_number(key, v)).collect::<Result<_, _>>()?;
    vs.try_into()
        .map_err(|v: Vec<f64>| ParseError::InvalidValue { key: key.to_string(), message: format!("expected {N} values, got {}", v.len()) })
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ParseError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ParseError::InvalidValue { key: key.to_string(), message: e.to_string() })
}

/// Parses a flat `key = value` scan config. `#` starts a comment.
///
/// Required: `points` (comma-separated µm), `coherence_sigma`, `baselines`
/// (three values, h = 1, 2, 3) and `shots_per_point`. Optional:
/// `scan_variable` (`z` or `x`, default `z`), `ratios` (default: the ideal
/// values for the scan variable), `efficiencies` (default 1), `seed`
/// (default 0), `bootstrap_resamples` (default 200), `shared_sigma`
/// (default false). Unknown and repeated keys are errors.
pub fn parse_scan_config(text: &str) -> Result<ScanFile, ParseError> {
    let mut seen = BTreeSet::new();
    let mut scan_variable = ScanVariable::Z;
    let mut points = None;
    let mut sigma = None;
    let mut baselines = None;
    let mut ratios = None;
    let mut efficiencies = [1.0; 3];
    let mut shots = None;
    let mut seed = 0u64;
    let mut bootstrap_resamples = 200usize;
    let mut shared_sigma = false;

    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ParseError::Syntax { line: i + 1, message: format!("expected `key = value`, got `{line}`") })?;
        let (k, v) = (k.trim(), v.trim());
        let Some(&key) = SCAN_KEYS.iter().find(|&&s| s == k) else {
            return Err(ParseError::UnknownKey(k.to_string()));
        };
        if !seen.insert(key) {
            return Err(ParseError::Syntax { line: i + 1, message: format!("`{key}` given twice") });
        }
        match key {
            "scan_variable" => {
                scan_variable = match v.to_ascii_lowercase().as_str() {
                    "z" => ScanVariable::Z,
                    "x" => ScanVariable::X,
                    _ => return Err(ParseError::InvalidValue { key: key.into(), message: format!("expected z or x, got `{v}`") }),
                }
            }
            "points" => points = Some(v.split(',').map(|p| parse_number(key, p)).collect::<Result<Vec<_>, _>>()?),
            "coherence_sigma" => sigma = Some(parse_number(key, v)?),
            "baselines" => baselines = Some(parse_list::<3>(key, v)?),
            "ratios" => ratios = Some(parse_list::<3>(key, v)?),
            "efficiencies" => efficiencies = parse_list::<3>(key, v)?,
            "shots_per_point" => shots = Some(parse_value::<u64>(key, v)?),
            "seed" => seed = parse_value::<u64>(key, v)?,
            "bootstrap_resamples" => bootstrap_resamples = parse_value::<usize>(key, v)?,
            "shared_sigma" => shared_sigma = parse_value::<bool>(key, v)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }

    let config = ScanConfig {
        scan_variable,
        points: points.ok_or(ParseError::MissingKey("points"))?,
        coherence_sigma: sigma.ok_or(ParseError::MissingKey("coherence_sigma"))?,
        baselines: baselines.ok_or(ParseError::MissingKey("baselines"))?,
        ratios: ratios.unwrap_or_else(|| ratio_array(&ideal_ratios(scan_variable))),
        shots_per_point: shots.ok_or(ParseError::MissingKey("shots_per_point"))?,
        efficiencies,
        seed,
    };
    config.validate().map_err(|e| ParseError::InvalidValue { key: "config".into(), message: e.to_string() })?;
    Ok(ScanFile { config, bootstrap_resamples, shared_sigma })
}

fn list(vs: &[f64]) -> String {
    vs.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

/// Inverse of [`parse_scan_config`].
pub fn emit_scan_config(file: &ScanFile) -> String {
    let c = &file.config;
    let var = match c.scan_variable {
        ScanVariable::Z => "z",
        ScanVariable::X => "x",
    };
    format!(
        "scan_variable = {var}\npoints = {}\ncoherence_sigma = {:?}\nbaselines = {}\nratios = {}\nefficiencies = {}\nshots_per_point = {}\nseed = {}\nbootstrap_resamples = {}\nshared_sigma = {}\n",
        list(&c.points),
        c.coherence_sigma,
        list(&c.baselines),
        list(&c.ratios),
        list(&c.efficiencies),
        c.shots_per_point,
        c.seed,
        file.bootstrap_resamples,
        file.shared_sigma,
    )
}

pub const CSV_HEADER: [&str; 3] = ["position_um", "component_h", "counts"];

/// Writes records as CSV with header `position_um,component_h,counts`.
pub fn write_records<W: Write>(w: W, records: &[CountRecord]) -> Result<(), ParseError> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(CSV_HEADER).map_err(|e| ParseError::Csv(e.to_string()))?;
    for r in records {
        wtr.serialize(r).map_err(|e| ParseError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| ParseError::Csv(e.to_string()))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<CountRecord>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(|e| ParseError::Csv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(ParseError::Csv(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<CountRecord>() {
        let rec = rec.map_err(|e| ParseError::Csv(e.to_string()))?;
        if !rec.position.is_finite() {
            return Err(ParseError::Csv("non-finite position".into()));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn records_to_csv(records: &[CountRecord]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn parse_report(text: &str) -> Result<FidelityReport, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))
}

pub fn emit_report(report: &FidelityReport) -> String {
    report.to_json()
}
