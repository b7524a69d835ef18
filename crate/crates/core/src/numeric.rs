//! Tolerances and small numeric helpers shared by every module.

/// Slack for internal consistency checks on exact inputs (cell sums,
/// Tian–Pearl windows).
pub const EPS_SUM: f64 = 1e-9;

/// Slack for interval ordering and strict-inequality comparisons.
pub const EPS_CMP: f64 = 1e-12;

/// Default slack for tables ingested from files. Published tables are
/// often rounded to three significant digits, which breaks `EPS_SUM`.
pub const INGEST_TOLERANCE: f64 = 5e-3;

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Clamps `value` into `[0, 1]`, logging when the correction exceeds
/// `EPS_SUM` since that only happens on inconsistent input.
pub(crate) fn clamp_unit(value: f64, what: &str) -> f64 {
    let clamped = value.clamp(0.0, 1.0);
    if (clamped - value).abs() > EPS_SUM {
        log::warn!("{what} = {value} clamped to {clamped}; input is inconsistent");
    }
    clamped
}

/// Formats `value` with `digits` significant digits in plain decimal notation.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let magnitude = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let text = format!("{value:.decimals$}");
    // rounding can carry into a new digit (9.999995 -> 10.00000)
    let reparsed: f64 = text.parse().unwrap_or(value);
    if reparsed != 0.0 && reparsed.abs().log10().floor() as i64 > magnitude && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{value:.decimals$}");
    }
    text
}
