//! Text rendering of numbers, linear forms, and success/ESS functions.
//!
//! The display grammar for a success function is
//!
//! ```text
//! psi    ::= "0" | term (" + " term)*
//! term   ::= coeff ("*" factor)*
//! factor ::= "N(" linform "; " mean ", " var ")"
//!          | "delta(" var "; " point ")"
//! ```
//!
//! with `{ c1, c2, ... }` appended to a term for its constraint set.
//! Numbers print with up to 9 significant digits, trailing zeros
//! trimmed; integral values keep one decimal (`2.0`, not `2`).

use std::collections::HashMap;

use crate::term::VarId;

/// Human-readable variable names used when rendering functions.
#[derive(Debug, Clone, Default)]
pub struct VarNames {
    map: HashMap<VarId, String>,
}

impl VarNames {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: VarId, name: String) {
        self.map.insert(v, name);
    }

    pub fn get(&self, v: VarId) -> String {
        match self.map.get(&v) {
            Some(n) => n.clone(),
            None => format!("_{v}"),
        }
    }
}

/// Format with at most 9 significant digits, shortest representation;
/// values with no fractional part keep a trailing `.0`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    // round to 9 significant digits, then let the shortest round-trip
    // formatting of the rounded value decide the digits
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    let mut s = format!("{rounded}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

/// Full round-trip precision (used by machine-readable output and data
/// files that get re-parsed).
pub fn fmt_num_exact(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_num_trims_and_keeps_decimal() {
        assert_eq!(fmt_num(0.3), "0.3");
        assert_eq!(fmt_num(2.0), "2.0");
        assert_eq!(fmt_num(1.0), "1.0");
        assert_eq!(fmt_num(0.2890630225), "0.289063023");
        assert_eq!(fmt_num(-1.5), "-1.5");
    }

    #[test]
    fn fmt_num_rounds_log_roundtrip_noise() {
        let k = (0.3f64.ln()).exp();
        assert_eq!(fmt_num(k), "0.3");
    }

    #[test]
    fn fmt_num_exact_roundtrips() {
        let x = 0.1 + 0.2;
        let s = fmt_num_exact(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}
