//! Fixed 6-significant-digit float formatting for report files.
//!
//! All CSV/JSON numbers go through `sig6` so that identical inputs always
//! produce byte-identical reports, independent of platform printf quirks.

/// Render `v` with 6 significant digits, `%g`-style: decimal notation for
/// exponents in [-4, 5], scientific otherwise, trailing zeros trimmed.
pub fn sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // {:.5e} rounds to 6 significant digits and normalizes the exponent,
    // so everything below is exact string manipulation.
    let sci = format!("{:.5e}", v);
    let (mant, exp) = sci.split_once('e').expect("{:.5e} always has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 6);

    let sign = if neg { "-" } else { "" };
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(&format!("{}.{}", &digits[..1], &digits[1..]));
        return format!("{sign}{m}e{exp}");
    }
    if exp >= 0 {
        let point = (exp + 1) as usize;
        if point >= digits.len() {
            let int: String =
                digits.chars().chain(std::iter::repeat('0')).take(point).collect();
            return format!("{sign}{int}");
        }
        let frac = trim_zeros(&digits[point..]);
        if frac.is_empty() {
            format!("{sign}{}", &digits[..point])
        } else {
            format!("{sign}{}.{frac}", &digits[..point])
        }
    } else {
        let leading = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{leading}{}", trim_zeros(&digits))
    }
}

fn trim_zeros(s: &str) -> String {
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Format an optional value, rendering `None` as an empty field.
pub fn sig6_opt(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}
