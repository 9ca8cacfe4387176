//! Numeric CSV formatting: integer-valued floats print exactly, fractional
//! values with six significant digits, trailing zeros trimmed.

/// Significant digits used for fractional values in CSV output.
pub const CSV_SIG_DIGITS: i32 = 6;

pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (CSV_SIG_DIGITS - 1 - exp).clamp(0, 17) as usize;
    let s = format!("{x:.decimals$}");
    trim_trailing_zeros(s)
}

fn trim_trailing_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}
