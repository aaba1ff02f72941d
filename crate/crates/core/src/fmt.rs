/// Shortest decimal that parses back to the same `f64`, switching to
/// exponent notation for very small or very large magnitudes.
pub(crate) fn float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}
