use pqcm_core::linalg::C64 as Complex64;

/// Six significant digits, switching to exponent notation for very large or
/// very small magnitudes.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn sig6_complex(z: Complex64) -> String {
    if z.im.abs() < 1e-12 {
        sig6(z.re)
    } else if z.re.abs() < 1e-12 {
        format!("{}i", sig6(z.im))
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!("{}{sign}{}i", sig6(z.re), sig6(z.im.abs()))
    }
}

/// Left-aligned `key  value` rows.
pub fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let pad = width - k.chars().count();
        out.push_str(&format!("{k}{}  {v}\n", " ".repeat(pad)));
    }
    out
}
