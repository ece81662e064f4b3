//! Formatting helpers shared by reports.

use serde::Serializer;

use crate::scalar::Q;

pub fn serialize_q<S: Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Seventeen significant digits, the fixed float format of all emitted data.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", if x == 0.0 { 0.0 } else { x })
    } else {
        x.to_string()
    }
}
