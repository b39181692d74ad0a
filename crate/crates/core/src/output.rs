//! Shared formatting for files written by the library and the CLI.

/// Formats with 17 significant digits, enough to round-trip any `f64`.
///
/// ```
/// assert_eq!(relaxnn::output::num(0.1), "1.0000000000000001e-1");
/// assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
/// ```
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
