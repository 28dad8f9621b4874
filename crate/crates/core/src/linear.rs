//! Linear forms over variables and conjunctions of linear equality
//! constraints kept in reduced row-echelon form.

use std::collections::BTreeMap;

use crate::error::EvalError;
use crate::render::{fmt_num, VarNames};
use crate::term::VarId;
use crate::value::{Valuation, Value};

/// Coefficients below this are treated as structural zeros.
pub const COEFF_EPS: f64 = 1e-12;
/// Absolute tolerance on constraint residuals.
pub const SAT_TOL: f64 = 1e-9;

/// `sum(c_i * X_i) + b` with no zero-coefficient entries stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    coeffs: BTreeMap<VarId, f64>,
    pub intercept: f64,
}

impl LinearForm {
    pub fn constant(b: f64) -> Self {
        LinearForm { coeffs: BTreeMap::new(), intercept: b }
    }

    pub fn var(v: VarId) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(v, 1.0);
        LinearForm { coeffs, intercept: 0.0 }
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.coeffs.get(&v).copied().unwrap_or(0.0)
    }

    pub fn set_coeff(&mut self, v: VarId, c: f64) {
        if c.abs() <= COEFF_EPS {
            self.coeffs.remove(&v);
        } else {
            self.coeffs.insert(v, c);
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&VarId, &f64)> {
        self.coeffs.iter()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn mentions(&self, v: VarId) -> bool {
        self.coeffs.contains_key(&v)
    }

    /// First variable by id, if any.
    pub fn leading_var(&self) -> Option<VarId> {
        self.coeffs.keys().next().copied()
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = LinearForm::constant(self.intercept * k);
        for (&v, &c) in &self.coeffs {
            out.set_coeff(v, c * k);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.intercept += other.intercept;
        for (&v, &c) in &other.coeffs {
            out.set_coeff(v, out.coeff(v) + c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn add_assign_scaled(&mut self, other: &Self, k: f64) {
        self.intercept += other.intercept * k;
        for (&v, &c) in &other.coeffs {
            self.set_coeff(v, self.coeff(v) + c * k);
        }
    }

    /// Replace `v` by the given form.
    pub fn substitute_form(&self, v: VarId, form: &LinearForm) -> Self {
        let c = self.coeff(v);
        if c == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.set_coeff(v, 0.0);
        out.add_assign_scaled(form, c);
        out
    }

    /// Replace `v` by a constant.
    pub fn substitute_value(&self, v: VarId, x: f64) -> Self {
        let c = self.coeff(v);
        if c == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.set_coeff(v, 0.0);
        out.intercept += c * x;
        out
    }

    /// Rename a variable (used when importing a tabled answer).
    pub fn rename_var(&self, from: VarId, to: VarId) -> Self {
        let c = self.coeff(from);
        if c == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        out.set_coeff(from, 0.0);
        out.set_coeff(to, out.coeff(to) + c);
        out
    }

    pub fn eval(&self, val: &Valuation) -> Result<f64, EvalError> {
        let mut acc = self.intercept;
        for (&v, &c) in &self.coeffs {
            match val.get(&v) {
                Some(Value::Num(x)) => acc += c * x,
                Some(Value::Atom(a)) => {
                    return Err(EvalError::Type(format!(
                        "atom `{a}` in linear position for variable _{v}"
                    )))
                }
                None => return Err(EvalError::MissingVariable(format!("_{v}"))),
            }
        }
        Ok(acc)
    }

    pub fn render(&self, names: &VarNames) -> String {
        if self.coeffs.is_empty() {
            return fmt_num(self.intercept);
        }
        let mut out = String::new();
        for (i, (&v, &c)) in self.coeffs.iter().enumerate() {
            let name = names.get(v);
            if i == 0 {
                if (c - 1.0).abs() < 1e-15 {
                    out.push_str(&name);
                } else if (c + 1.0).abs() < 1e-15 {
                    out.push_str(&format!("-{name}"));
                } else {
                    out.push_str(&format!("{}*{name}", fmt_num(c)));
                }
            } else {
                let (sign, mag) = if c < 0.0 { (" - ", -c) } else { (" + ", c) };
                out.push_str(sign);
                if (mag - 1.0).abs() < 1e-15 {
                    out.push_str(&name);
                } else {
                    out.push_str(&format!("{}*{name}", fmt_num(mag)));
                }
            }
        }
        if self.intercept != 0.0 {
            let (sign, mag) = if self.intercept < 0.0 {
                (" - ", -self.intercept)
            } else {
                (" + ", self.intercept)
            };
            out.push_str(sign);
            out.push_str(&fmt_num(mag));
        }
        out
    }
}

/// A single linear equality `lhs = rhs`, the surface form constraints
/// take in clause bodies. A `lhs` of `None` is a ground check
/// (`0 = rhs` with constant `rhs`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub lhs: Option<VarId>,
    pub rhs: LinearForm,
}

impl LinearConstraint {
    /// The equality as a row `lhs - rhs = 0`.
    pub fn to_row(&self) -> LinearForm {
        match self.lhs {
            Some(v) => LinearForm::var(v).sub(&self.rhs),
            None => self.rhs.scale(-1.0),
        }
    }

    pub fn render(&self, names: &VarNames) -> String {
        match self.lhs {
            Some(v) => format!("{} = {}", names.get(v), self.rhs.render(names)),
            None => format!("0 = {}", self.rhs.render(names)),
        }
    }
}

/// Outcome of adding rows to a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduced {
    Consistent(ConstraintSet),
    Unsatisfiable,
}

/// A satisfiable conjunction of linear equalities in reduced
/// row-echelon form: each row has a unit-coefficient pivot variable
/// (the smallest variable in the row) that occurs in no other row; rows
/// are ordered by pivot. The empty set is `true`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    rows: Vec<LinearForm>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[LinearForm] {
        &self.rows
    }

    /// Build from arbitrary rows (`row = 0` each), detecting
    /// inconsistency via the rank condition: a reduced row with no
    /// variables and a residual beyond tolerance has no solution.
    pub fn from_rows<I: IntoIterator<Item = LinearForm>>(rows: I) -> Reduced {
        let mut set = ConstraintSet::empty();
        for row in rows {
            match set.add_row(row) {
                Ok(()) => {}
                Err(()) => return Reduced::Unsatisfiable,
            }
        }
        Reduced::Consistent(set)
    }

    fn add_row(&mut self, mut row: LinearForm) -> Result<(), ()> {
        // eliminate existing pivots from the incoming row
        for r in &self.rows {
            let p = r.leading_var().expect("rows always have a pivot");
            let c = row.coeff(p);
            if c != 0.0 {
                row.add_assign_scaled(r, -c);
                row.set_coeff(p, 0.0);
            }
        }
        match row.leading_var() {
            None => {
                if row.intercept.abs() > SAT_TOL {
                    Err(())
                } else {
                    Ok(()) // redundant row
                }
            }
            Some(p) => {
                let row = row.scale(1.0 / row.coeff(p));
                // eliminate the new pivot from existing rows
                for r in &mut self.rows {
                    let c = r.coeff(p);
                    if c != 0.0 {
                        r.add_assign_scaled(&row, -c);
                        r.set_coeff(p, 0.0);
                    }
                }
                self.rows.push(row);
                self.rows.sort_by_key(|r| r.leading_var());
                Ok(())
            }
        }
    }

    pub fn conjoin(&self, other: &Self) -> Reduced {
        let mut set = self.clone();
        for row in &other.rows {
            if set.add_row(row.clone()).is_err() {
                return Reduced::Unsatisfiable;
            }
        }
        Reduced::Consistent(set)
    }

    pub fn mentions(&self, v: VarId) -> bool {
        self.rows.iter().any(|r| r.mentions(v))
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for r in &self.rows {
            for v in r.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Solve for `v` and drop its defining row: returns
    /// `(form, remaining)` with `v = form` and `form` free of `v`.
    /// `None` when no row mentions `v`.
    pub fn solve_for(&self, v: VarId) -> Option<(LinearForm, ConstraintSet)> {
        let idx = self.rows.iter().position(|r| r.mentions(v))?;
        let row = &self.rows[idx];
        let c = row.coeff(v);
        // v = -(row - c*v)/c
        let mut rest = row.clone();
        rest.set_coeff(v, 0.0);
        let solution = rest.scale(-1.0 / c);
        let mut remaining: Vec<LinearForm> = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            if i == idx {
                continue;
            }
            remaining.push(r.substitute_form(v, &solution));
        }
        match ConstraintSet::from_rows(remaining) {
            Reduced::Consistent(set) => Some((solution, set)),
            // rows sharing v were already reduced against each other, so
            // substitution cannot create an inconsistency here
            Reduced::Unsatisfiable => None,
        }
    }

    pub fn substitute_value(&self, v: VarId, x: f64) -> Reduced {
        ConstraintSet::from_rows(self.rows.iter().map(|r| r.substitute_value(v, x)))
    }

    pub fn rename_var(&self, from: VarId, to: VarId) -> Reduced {
        ConstraintSet::from_rows(self.rows.iter().map(|r| r.rename_var(from, to)))
    }

    pub fn satisfied(&self, val: &Valuation) -> Result<bool, EvalError> {
        for r in &self.rows {
            if r.eval(val)?.abs() > SAT_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn render(&self, names: &VarNames) -> String {
        let parts: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let p = r.leading_var().expect("pivot");
                let mut rest = r.clone();
                rest.set_coeff(p, 0.0);
                format!("{} = {}", names.get(p), rest.scale(-1.0).render(names))
            })
            .collect();
        format!("{{{}}}", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pairs: &[(VarId, f64)], b: f64) -> LinearForm {
        let mut f = LinearForm::constant(b);
        for &(v, c) in pairs {
            f.set_coeff(v, c);
        }
        f
    }

    #[test]
    fn rref_detects_inconsistency() {
        // X + Y = 1, X + Y = 2
        let r1 = row(&[(0, 1.0), (1, 1.0)], -1.0);
        let r2 = row(&[(0, 1.0), (1, 1.0)], -2.0);
        assert_eq!(ConstraintSet::from_rows(vec![r1, r2]), Reduced::Unsatisfiable);
    }

    #[test]
    fn rref_drops_redundant_rows() {
        let r1 = row(&[(0, 1.0), (1, -2.0)], 0.0);
        let r2 = row(&[(0, 2.0), (1, -4.0)], 0.0);
        match ConstraintSet::from_rows(vec![r1, r2]) {
            Reduced::Consistent(set) => assert_eq!(set.rows().len(), 1),
            Reduced::Unsatisfiable => panic!("consistent system reported unsatisfiable"),
        }
    }

    #[test]
    fn solve_for_eliminates_variable() {
        // X = 2Y + 1  (row: X - 2Y - 1 = 0)
        let r = row(&[(0, 1.0), (1, -2.0)], -1.0);
        let set = match ConstraintSet::from_rows(vec![r]) {
            Reduced::Consistent(s) => s,
            _ => unreachable!(),
        };
        let (sol, rest) = set.solve_for(0).unwrap();
        assert!(rest.is_empty());
        assert_eq!(sol.coeff(1), 2.0);
        assert_eq!(sol.intercept, 1.0);
    }

    #[test]
    fn satisfied_uses_tolerance() {
        let r = row(&[(0, 1.0)], -1.0); // X = 1
        let set = match ConstraintSet::from_rows(vec![r]) {
            Reduced::Consistent(s) => s,
            _ => unreachable!(),
        };
        let mut val = Valuation::new();
        val.insert(0, Value::Num(1.0 + 1e-10));
        assert!(set.satisfied(&val).unwrap());
        val.insert(0, Value::Num(1.001));
        assert!(!set.satisfied(&val).unwrap());
    }
}
