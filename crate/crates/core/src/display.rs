//! Display rounding shared by every report and the HTTP API.

/// Rounds half away from zero to `decimals` places.
pub fn round_half_away(value: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (value * scale).round() / scale
}

/// Two-decimal display of a USD amount or a 100×U utility.
pub fn round2(value: f64) -> f64 {
    round_half_away(value, 2)
}

/// `round2` formatted with exactly two decimals.
pub fn fmt2(value: f64) -> String {
    format!("{:.2}", round2(value))
}
