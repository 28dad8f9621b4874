//! The closed algebra of success functions.
//!
//! A success function is a finite sum of constrained PPDF terms. A PPDF
//! is a nonnegative coefficient times a product of Dirac delta factors
//! `delta(point; V)` and univariate Gaussian densities `N(f; mean, var)`
//! whose arguments `f` are linear forms over variables. Each term pairs
//! a PPDF with a satisfiable conjunction of linear equality constraints.
//!
//! Coefficients are kept in log-space so that long chains of joins (and
//! the normalizer bookkeeping of integration) do not underflow.
//!
//! Gaussian factors are stored canonically: the argument has no
//! intercept (folded into the mean) and unit leading coefficient
//! (scaled, adjusting the coefficient); equal arguments merge by the
//! Gaussian product rule. Delta factors are unique per variable; a
//! clash of points zeroes the term.

use std::collections::BTreeMap;

use crate::error::EvalError;
use crate::linear::{ConstraintSet, LinearConstraint, LinearForm, Reduced, COEFF_EPS, SAT_TOL};
use crate::program::{DomainKind, ParameterSet, Program, SwitchParams};
use crate::render::{fmt_num, VarNames};
use crate::term::{Term, VarId};
use crate::value::{Valuation, Value, VarType, VarTypes};

const LN_2PI: f64 = 1.8378770664093453;
/// Eigen/pivot cutoff for the residual quadratic-form factorization.
const RESIDUAL_CUTOFF: f64 = 1e-12;

pub(crate) fn gauss_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (d * d / var) - 0.5 * (LN_2PI + var.ln())
}

/// `delta(point; var)`: zero everywhere except at `point`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaFactor {
    pub var: VarId,
    pub point: Value,
}

/// `N(arg; mean, var)` with `arg` a linear form. Canonical: no
/// intercept, unit leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFactor {
    pub arg: LinearForm,
    pub mean: f64,
    pub var: f64,
}

/// A product PDF: `k * prod(deltas) * prod(gaussians)` with `k` stored
/// as `log_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ppdf {
    pub log_k: f64,
    pub deltas: Vec<DeltaFactor>,
    pub gaussians: Vec<GaussianFactor>,
}

fn gaussian_sort_key(g: &GaussianFactor) -> Vec<(VarId, u64)> {
    g.arg.coeffs().map(|(&v, &c)| (v, c.to_bits())).collect()
}

impl Ppdf {
    pub fn one() -> Self {
        Ppdf { log_k: 0.0, deltas: Vec::new(), gaussians: Vec::new() }
    }

    pub fn constant(k: f64) -> Self {
        Ppdf { log_k: k.ln(), deltas: Vec::new(), gaussians: Vec::new() }
    }

    pub fn scale_log(&mut self, log_factor: f64) {
        self.log_k += log_factor;
    }

    /// Multiply in a delta factor. Returns false when the product is
    /// identically zero (two deltas pin the variable at different
    /// points: `d_a(M) * d_b(M) = 0`; equal points merge:
    /// `d_a(M) * d_a(M) = d_a(M)`).
    #[must_use]
    pub fn push_delta(&mut self, var: VarId, point: Value) -> bool {
        for d in &self.deltas {
            if d.var == var {
                return d.point == point;
            }
        }
        self.deltas.push(DeltaFactor { var, point });
        self.deltas.sort_by_key(|d| d.var);
        true
    }

    /// Multiply in `N(arg; mean, var)`, canonicalizing and merging.
    pub fn push_gaussian(&mut self, arg: LinearForm, mean: f64, var: f64) {
        debug_assert!(var > 0.0, "gaussian factor needs positive variance");
        // constant argument: the factor is a number
        if arg.is_constant() {
            self.log_k += gauss_logpdf(arg.intercept, mean, var);
            return;
        }
        // fold the intercept into the mean
        let mut mean = mean - arg.intercept;
        let mut arg = arg;
        arg.intercept = 0.0;
        // scale so the leading coefficient is 1
        let lead = arg.coeff(arg.leading_var().expect("non-constant"));
        let mut var = var;
        if lead != 1.0 {
            arg = arg.scale(1.0 / lead);
            arg.intercept = 0.0;
            mean /= lead;
            var /= lead * lead;
            self.log_k -= lead.abs().ln();
        }
        // merge with an existing factor over the same argument:
        // N_f(m1,v1) * N_f(m2,v2) = N(m1; m2, v1+v2) * N_f(m*, v*)
        for g in &mut self.gaussians {
            if g.arg == arg {
                let prec = 1.0 / g.var + 1.0 / var;
                let vstar = 1.0 / prec;
                let mstar = vstar * (g.mean / g.var + mean / var);
                self.log_k += gauss_logpdf(g.mean, mean, g.var + var);
                g.mean = mstar;
                g.var = vstar;
                return;
            }
        }
        self.gaussians.push(GaussianFactor { arg, mean, var });
        self.gaussians.sort_by_key(gaussian_sort_key);
    }

    pub fn mul(&self, other: &Ppdf) -> Option<Ppdf> {
        let mut out = self.clone();
        out.log_k += other.log_k;
        for d in &other.deltas {
            if !out.push_delta(d.var, d.point.clone()) {
                return None;
            }
        }
        for g in &other.gaussians {
            // re-push so equal arguments merge
            out.push_gaussian(g.arg.clone(), g.mean, g.var);
        }
        Some(out)
    }

    pub fn delta_on(&self, v: VarId) -> Option<&DeltaFactor> {
        self.deltas.iter().find(|d| d.var == v)
    }

    pub fn gaussians_mention(&self, v: VarId) -> bool {
        self.gaussians.iter().any(|g| g.arg.mentions(v))
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = Vec::new();
        for d in &self.deltas {
            if !out.contains(&d.var) {
                out.push(d.var);
            }
        }
        for g in &self.gaussians {
            for v in g.arg.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn log_eval(&self, val: &Valuation) -> Result<f64, EvalError> {
        let mut acc = self.log_k;
        for d in &self.deltas {
            let got = val
                .get(&d.var)
                .ok_or_else(|| EvalError::MissingVariable(format!("_{}", d.var)))?;
            let matches = match (&d.point, got) {
                (Value::Num(p), Value::Num(x)) => (x - p).abs() <= SAT_TOL,
                (p, x) => p == x,
            };
            if !matches {
                return Ok(f64::NEG_INFINITY);
            }
        }
        for g in &self.gaussians {
            let x = g.arg.eval(val)?;
            acc += gauss_logpdf(x, g.mean, g.var);
        }
        Ok(acc)
    }
}

/// One constrained PPDF term.
#[derive(Debug, Clone, PartialEq)]
pub struct CTerm {
    pub ppdf: Ppdf,
    pub cons: ConstraintSet,
}

impl CTerm {
    pub fn one() -> Self {
        CTerm { ppdf: Ppdf::one(), cons: ConstraintSet::empty() }
    }

    pub fn mentions(&self, v: VarId) -> bool {
        self.ppdf.delta_on(v).is_some() || self.ppdf.gaussians_mention(v) || self.cons.mentions(v)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = self.ppdf.vars();
        for v in self.cons.vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }
}

/// Where a variable goes under a binding: another variable or a ground
/// scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum BindTarget {
    Var(VarId),
    Val(Value),
}

impl BindTarget {
    pub fn from_term(t: &Term) -> Result<BindTarget, EvalError> {
        match t {
            Term::Var(v) => Ok(BindTarget::Var(*v)),
            Term::Atom(a) => Ok(BindTarget::Val(Value::Atom(a.clone()))),
            Term::Num(x) => Ok(BindTarget::Val(Value::Num(*x))),
            Term::Compound(..) => Err(EvalError::NonScalarBinding(t.to_string())),
        }
    }
}

fn map_form(
    form: &LinearForm,
    bindings: &BTreeMap<VarId, BindTarget>,
) -> Result<LinearForm, EvalError> {
    let mut out = LinearForm::constant(form.intercept);
    for (&v, &c) in form.coeffs() {
        match bindings.get(&v) {
            None => out.set_coeff(v, out.coeff(v) + c),
            Some(BindTarget::Var(u)) => out.set_coeff(*u, out.coeff(*u) + c),
            Some(BindTarget::Val(Value::Num(x))) => out.intercept += c * x,
            Some(BindTarget::Val(Value::Atom(a))) => {
                return Err(EvalError::Type(format!("atom `{a}` in linear position")))
            }
        }
    }
    Ok(out)
}

/// Rebuild a term under a simultaneous variable binding. `Ok(None)`
/// means the term vanished (delta mismatch or unsatisfiable
/// constraints).
fn apply_bindings_term(
    term: &CTerm,
    bindings: &BTreeMap<VarId, BindTarget>,
) -> Result<Option<CTerm>, EvalError> {
    let mut ppdf = Ppdf {
        log_k: term.ppdf.log_k,
        deltas: Vec::new(),
        gaussians: Vec::new(),
    };
    for d in &term.ppdf.deltas {
        match bindings.get(&d.var) {
            None => {
                if !ppdf.push_delta(d.var, d.point.clone()) {
                    return Ok(None);
                }
            }
            Some(BindTarget::Var(u)) => {
                if !ppdf.push_delta(*u, d.point.clone()) {
                    return Ok(None);
                }
            }
            Some(BindTarget::Val(x)) => {
                let matches = match (&d.point, x) {
                    (Value::Num(p), Value::Num(got)) => p == got,
                    (p, got) => p == got,
                };
                if !matches {
                    return Ok(None);
                }
            }
        }
    }
    for g in &term.ppdf.gaussians {
        let arg = map_form(&g.arg, bindings)?;
        ppdf.push_gaussian(arg, g.mean, g.var);
    }
    let rows: Result<Vec<LinearForm>, EvalError> = term
        .cons
        .rows()
        .iter()
        .map(|r| map_form(r, bindings))
        .collect();
    match ConstraintSet::from_rows(rows?) {
        Reduced::Unsatisfiable => Ok(None),
        Reduced::Consistent(cons) => Ok(Some(CTerm { ppdf, cons })),
    }
}

/// A finite sum of constrained PPDF terms. The zero function is the
/// empty sum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuccessFunction {
    pub terms: Vec<CTerm>,
}

impl SuccessFunction {
    pub fn zero() -> Self {
        SuccessFunction { terms: Vec::new() }
    }

    pub fn one() -> Self {
        SuccessFunction { terms: vec![CTerm::one()] }
    }

    pub fn constant(k: f64) -> Self {
        if k <= 0.0 {
            SuccessFunction::zero()
        } else {
            SuccessFunction {
                terms: vec![CTerm { ppdf: Ppdf::constant(k), cons: ConstraintSet::empty() }],
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        for t in &self.terms {
            for v in t.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// Termwise sum (used at OR-branches of a derivation).
    pub fn add(&self, other: &SuccessFunction) -> SuccessFunction {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SuccessFunction { terms }
    }

    /// The join `psi1 * psi2`: cross products of terms with delta
    /// simplification and conjoined constraints; terms whose conjoined
    /// constraints are unsatisfiable (or whose deltas clash) drop out.
    pub fn join(&self, other: &SuccessFunction) -> SuccessFunction {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let ppdf = match a.ppdf.mul(&b.ppdf) {
                    Some(p) => p,
                    None => continue,
                };
                match a.cons.conjoin(&b.cons) {
                    Reduced::Unsatisfiable => continue,
                    Reduced::Consistent(cons) => terms.push(CTerm { ppdf, cons }),
                }
            }
        }
        SuccessFunction { terms }
    }

    pub fn scale_log(&mut self, log_factor: f64) {
        for t in &mut self.terms {
            t.ppdf.scale_log(log_factor);
        }
    }

    pub fn apply_bindings(
        &self,
        bindings: &BTreeMap<VarId, BindTarget>,
    ) -> Result<SuccessFunction, EvalError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if let Some(t2) = apply_bindings_term(t, bindings)? {
                terms.push(t2);
            }
        }
        Ok(SuccessFunction { terms })
    }

    pub fn substitute_value(&self, v: VarId, x: &Value) -> Result<SuccessFunction, EvalError> {
        let mut b = BTreeMap::new();
        b.insert(v, BindTarget::Val(x.clone()));
        self.apply_bindings(&b)
    }

    /// Projection: eliminate linear constraints on `v` by substituting
    /// the solved form into every Gaussian argument; a delta on `v`
    /// becomes the constraint `solution = point`.
    pub fn project(&self, v: VarId) -> Result<SuccessFunction, EvalError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            match project_term(t, v)? {
                Some(t2) => terms.push(t2),
                None => {}
            }
        }
        Ok(SuccessFunction { terms })
    }

    /// Integration over `v` for terms free of constraints and deltas on
    /// `v` (apply [`SuccessFunction::project`] first).
    pub fn integrate_out(&self, v: VarId) -> Result<SuccessFunction, EvalError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.cons.mentions(v) || t.ppdf.delta_on(v).is_some() {
                return Err(EvalError::Type(format!(
                    "integrate_out: variable _{v} still constrained or pinned; project first"
                )));
            }
            terms.push(integrate_term(t, v));
        }
        Ok(SuccessFunction { terms })
    }

    /// Marginalize `v` out of the function. Per term: a delta on `v`
    /// picks its point; a finite-domain variable otherwise sums over
    /// its domain (or scales by the domain size when absent); a
    /// continuous variable is projected then integrated.
    pub fn marginalize(
        &self,
        v: VarId,
        ty: Option<&VarType>,
    ) -> Result<SuccessFunction, EvalError> {
        let mut out = Vec::new();
        for t in &self.terms {
            marginalize_term(t, v, ty, &mut out)?;
        }
        Ok(SuccessFunction { terms: out })
    }

    pub fn marginalize_all(
        &self,
        vars: &[VarId],
        types: &VarTypes,
    ) -> Result<SuccessFunction, EvalError> {
        let mut acc = self.clone();
        for &v in vars {
            acc = acc.marginalize(v, types.get(v))?;
        }
        Ok(acc)
    }

    /// Pointwise evaluation: sum over terms of the indicator of the
    /// constraints times the PPDF value. Deltas on continuous variables
    /// contribute factor 1 on an exact match (within 1e-9): the value
    /// is a density w.r.t. the mixed Lebesgue-plus-counting base
    /// measure.
    pub fn evaluate(&self, val: &Valuation) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for t in &self.terms {
            if !t.cons.satisfied(val)? {
                continue;
            }
            let lk = t.ppdf.log_eval(val)?;
            if lk > f64::NEG_INFINITY {
                acc += lk.exp();
            }
        }
        Ok(acc)
    }

    /// Render in the display grammar, e.g.
    /// `0.3*N(X; 2.0, 1.0) + 0.7*N(X; 3.0, 1.0)`.
    pub fn render(&self, names: &VarNames) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for t in &self.terms {
            parts.push(render_term(t, names));
        }
        parts.join(" + ")
    }

    /// Debug form `<k, [deltas], [gaussians], {constraints}>` per term.
    pub fn debug_render(&self, names: &VarNames) -> String {
        let mut parts = Vec::new();
        for t in &self.terms {
            let deltas: Vec<String> = t
                .ppdf
                .deltas
                .iter()
                .map(|d| format!("delta({}; {})", names.get(d.var), d.point))
                .collect();
            let gaussians: Vec<String> = t
                .ppdf
                .gaussians
                .iter()
                .map(|g| {
                    format!(
                        "N({}; {}, {})",
                        g.arg.render(names),
                        fmt_num(g.mean),
                        fmt_num(g.var)
                    )
                })
                .collect();
            parts.push(format!(
                "<{}, [{}], [{}], {}>",
                fmt_num(t.ppdf.log_k.exp()),
                deltas.join(", "),
                gaussians.join(", "),
                t.cons.render(names)
            ));
        }
        if parts.is_empty() {
            "<zero>".to_string()
        } else {
            parts.join(" + ")
        }
    }

    /// When the function is a single term whose factors all sit on the
    /// single variable `v`, return `(coefficient, mean, variance)` of
    /// the combined Gaussian `k * N(v; mean, var)`.
    pub fn as_single_gaussian(&self, v: VarId) -> Option<(f64, f64, f64)> {
        if self.terms.len() != 1 {
            return None;
        }
        let t = &self.terms[0];
        if !t.cons.is_empty() || !t.ppdf.deltas.is_empty() || t.ppdf.gaussians.len() != 1 {
            return None;
        }
        let g = &t.ppdf.gaussians[0];
        if g.arg.vars().collect::<Vec<_>>() != vec![v] || (g.arg.coeff(v) - 1.0).abs() > 1e-12 {
            return None;
        }
        Some((t.ppdf.log_k.exp(), g.mean, g.var))
    }
}

fn render_term(t: &CTerm, names: &VarNames) -> String {
    let mut factors = Vec::new();
    factors.push(fmt_num(t.ppdf.log_k.exp()));
    for d in &t.ppdf.deltas {
        factors.push(format!("delta({}; {})", names.get(d.var), d.point));
    }
    for g in &t.ppdf.gaussians {
        factors.push(format!(
            "N({}; {}, {})",
            g.arg.render(names),
            fmt_num(g.mean),
            fmt_num(g.var)
        ));
    }
    let body = factors.join("*");
    if t.cons.is_empty() {
        body
    } else {
        format!("{body} {}", t.cons.render(names))
    }
}

fn project_term(t: &CTerm, v: VarId) -> Result<Option<CTerm>, EvalError> {
    if !t.cons.mentions(v) {
        return Ok(Some(t.clone()));
    }
    let (solution, rest) = t.cons.solve_for(v).expect("mentions implies solvable");
    let mut ppdf = Ppdf {
        log_k: t.ppdf.log_k,
        deltas: Vec::new(),
        gaussians: Vec::new(),
    };
    let mut extra_rows: Vec<LinearForm> = Vec::new();
    for d in &t.ppdf.deltas {
        if d.var == v {
            match &d.point {
                Value::Num(p) => {
                    // delta(point; v) with v = solution becomes the
                    // constraint solution = point
                    let mut row = solution.clone();
                    row.intercept -= p;
                    extra_rows.push(row);
                }
                Value::Atom(a) => {
                    return Err(EvalError::Type(format!(
                        "delta at atom `{a}` on a linearly constrained variable"
                    )))
                }
            }
        } else if !ppdf.push_delta(d.var, d.point.clone()) {
            return Ok(None);
        }
    }
    for g in &t.ppdf.gaussians {
        ppdf.push_gaussian(g.arg.substitute_form(v, &solution), g.mean, g.var);
    }
    let all_rows = rest.rows().iter().cloned().chain(extra_rows);
    match ConstraintSet::from_rows(all_rows) {
        Reduced::Unsatisfiable => Ok(None),
        Reduced::Consistent(cons) => Ok(Some(CTerm { ppdf, cons })),
    }
}

/// Integrate one term over `v` (no constraints or deltas on `v`).
///
/// Gathering the factors that mention `v`, the exponent is
/// `-(A v^2 + 2 B v + C)/2` with `A > 0`; the integral contributes
/// `sqrt(2 pi / A)` and the residual `C - B^2/A`, a positive
/// semidefinite quadratic form over the remaining variables, is
/// refactored into squared linear forms by a pivoted Cholesky
/// decomposition, each becoming a Gaussian factor again.
fn integrate_term(t: &CTerm, v: VarId) -> CTerm {
    let (with_v, without): (Vec<&GaussianFactor>, Vec<&GaussianFactor>) =
        t.ppdf.gaussians.iter().partition(|g| g.arg.mentions(v));
    if with_v.is_empty() {
        // nothing to do (callers guard the divergent case)
        return t.clone();
    }
    let mut log_k = t.ppdf.log_k;
    let mut a = 0.0f64;
    let mut b = LinearForm::constant(0.0);
    // homogeneous quadratic form C over (vars, 1)
    let mut c_quad: BTreeMap<(Option<VarId>, Option<VarId>), f64> = BTreeMap::new();
    let mut add_quad = |m: &mut BTreeMap<(Option<VarId>, Option<VarId>), f64>,
                        p: Option<VarId>,
                        q: Option<VarId>,
                        val: f64| {
        let key = if p <= q { (p, q) } else { (q, p) };
        *m.entry(key).or_insert(0.0) += val;
    };
    for g in &with_v {
        let cv = g.arg.coeff(v);
        let mut h = g.arg.clone();
        h.set_coeff(v, 0.0);
        h.intercept -= g.mean;
        let w = 1.0 / g.var;
        log_k += -0.5 * (LN_2PI + g.var.ln());
        a += cv * cv * w;
        b.add_assign_scaled(&h, cv * w);
        // C += h^2 / var, in homogeneous coordinates (const slot = None)
        let entries: Vec<(Option<VarId>, f64)> = h
            .coeffs()
            .map(|(&u, &cc)| (Some(u), cc))
            .chain(std::iter::once((None, h.intercept)))
            .filter(|(_, cc)| *cc != 0.0)
            .collect();
        for (i, &(p, cp)) in entries.iter().enumerate() {
            for &(q, cq) in &entries[i..] {
                let val = if p == q { cp * cq * w } else { 2.0 * cp * cq * w };
                add_quad(&mut c_quad, p, q, val);
            }
        }
    }
    log_k += 0.5 * (LN_2PI - a.ln());
    // residual R = C - B^2/A
    let b_entries: Vec<(Option<VarId>, f64)> = b
        .coeffs()
        .map(|(&u, &cc)| (Some(u), cc))
        .chain(std::iter::once((None, b.intercept)))
        .filter(|(_, cc)| *cc != 0.0)
        .collect();
    for (i, &(p, cp)) in b_entries.iter().enumerate() {
        for &(q, cq) in &b_entries[i..] {
            let val = if p == q { -cp * cq / a } else { -2.0 * cp * cq / a };
            add_quad(&mut c_quad, p, q, val);
        }
    }
    let mut ppdf = Ppdf { log_k, deltas: t.ppdf.deltas.clone(), gaussians: Vec::new() };
    for g in without {
        ppdf.gaussians.push(g.clone());
    }
    ppdf.gaussians.sort_by_key(gaussian_sort_key);
    for piece in factor_psd(&c_quad) {
        if piece.is_constant() {
            ppdf.log_k += -0.5 * piece.intercept * piece.intercept;
        } else {
            // exp(-(l(x))^2/2) = sqrt(2 pi) * N(l(x); 0, 1)
            ppdf.log_k += 0.5 * LN_2PI;
            ppdf.push_gaussian(piece, 0.0, 1.0);
        }
    }
    CTerm { ppdf, cons: t.cons.clone() }
}

/// Pivoted Cholesky of a positive-semidefinite homogeneous quadratic
/// form: returns linear pieces `l_i` with `form = sum(l_i^2)`.
/// Residual mass below the cutoff is dropped.
pub(crate) fn factor_psd(
    quad: &BTreeMap<(Option<VarId>, Option<VarId>), f64>,
) -> Vec<LinearForm> {
    // collect slots
    let mut slots: Vec<Option<VarId>> = Vec::new();
    for &(p, q) in quad.keys() {
        if !slots.contains(&p) {
            slots.push(p);
        }
        if !slots.contains(&q) {
            slots.push(q);
        }
    }
    slots.sort();
    let n = slots.len();
    if n == 0 {
        return Vec::new();
    }
    let idx = |s: Option<VarId>| slots.iter().position(|&x| x == s).unwrap();
    let mut m = vec![vec![0.0f64; n]; n];
    for (&(p, q), &val) in quad {
        let (i, j) = (idx(p), idx(q));
        if i == j {
            m[i][i] += val;
        } else {
            m[i][j] += val / 2.0;
            m[j][i] += val / 2.0;
        }
    }
    let mut out = Vec::new();
    for _ in 0..n {
        // pivot on the largest diagonal entry
        let (pi, &dmax) = match m
            .iter()
            .enumerate()
            .map(|(i, row)| (i, &row[i]))
            .max_by(|x, y| x.1.total_cmp(y.1))
        {
            Some(p) => p,
            None => break,
        };
        if dmax <= RESIDUAL_CUTOFF {
            break;
        }
        let scale = dmax.sqrt();
        let col: Vec<f64> = (0..n).map(|i| m[i][pi] / scale).collect();
        let mut piece = LinearForm::constant(0.0);
        for (i, &cc) in col.iter().enumerate() {
            if cc.abs() <= COEFF_EPS {
                continue;
            }
            match slots[i] {
                Some(u) => piece.set_coeff(u, cc),
                None => piece.intercept = cc,
            }
        }
        out.push(piece);
        for i in 0..n {
            for j in 0..n {
                m[i][j] -= col[i] * col[j];
            }
        }
    }
    out
}

fn marginalize_term(
    t: &CTerm,
    v: VarId,
    ty: Option<&VarType>,
    out: &mut Vec<CTerm>,
) -> Result<(), EvalError> {
    // a delta on v picks its point
    if let Some(d) = t.ppdf.delta_on(v).cloned() {
        let mut b = BTreeMap::new();
        b.insert(v, BindTarget::Val(d.point));
        if let Some(t2) = apply_bindings_term(t, &b)? {
            out.push(t2);
        }
        return Ok(());
    }
    if let Some(VarType::Discrete(dom)) = ty {
        if t.ppdf.gaussians_mention(v) || t.cons.mentions(v) {
            // finite variable in a linear position: sum over the domain
            for val in dom {
                if !val.is_num() {
                    return Err(EvalError::Type(format!(
                        "atom-valued variable _{v} appears in a linear position"
                    )));
                }
                let mut b = BTreeMap::new();
                b.insert(v, BindTarget::Val(val.clone()));
                if let Some(t2) = apply_bindings_term(t, &b)? {
                    out.push(t2);
                }
            }
        } else {
            // free and unconstrained: sum of 1 over the domain
            let mut t2 = t.clone();
            t2.ppdf.scale_log((dom.len() as f64).ln());
            out.push(t2);
        }
        return Ok(());
    }
    // continuous (or untyped-but-linear) variable
    if t.cons.mentions(v) {
        if let Some(t2) = project_term(t, v)? {
            out.push(t2);
        }
        return Ok(());
    }
    if t.ppdf.gaussians_mention(v) {
        out.push(integrate_term(t, v));
        return Ok(());
    }
    // no delta, no density factor, no constraint, no finite domain:
    // the integral of the term over v does not exist
    Err(EvalError::Divergent(format!("_{v}")))
}

// ---------------------------------------------------------------------
// success functions of base predicates

/// Declaration/parameter context for building `msw` base functions.
pub struct MswEnv<'a> {
    pub program: &'a Program,
    pub params: &'a ParameterSet,
}

impl<'a> MswEnv<'a> {
    pub fn new(program: &'a Program) -> Self {
        MswEnv { program, params: &program.params }
    }

    pub fn with_params(program: &'a Program, params: &'a ParameterSet) -> Self {
        MswEnv { program, params }
    }
}

/// Expand the free (family-parameter) variables of a switch term over
/// their finite domains. Yields `(ground switch, prefix deltas)` pairs.
pub(crate) fn expand_switch(
    switch: &Term,
    types: &VarTypes,
) -> Result<Vec<(Term, Vec<(VarId, Value)>)>, EvalError> {
    let free = switch.vars();
    let mut combos: Vec<(Term, Vec<(VarId, Value)>)> = vec![(switch.clone(), Vec::new())];
    for v in free {
        let dom = match types.get(v) {
            Some(VarType::Discrete(dom)) => dom.clone(),
            _ => {
                return Err(EvalError::Type(format!(
                    "family parameter _{v} of `{switch}` has no finite domain"
                )))
            }
        };
        let mut next = Vec::new();
        for (t, prefix) in combos {
            for val in &dom {
                let mut subst = crate::term::Subst::new();
                subst.bind(v, Term::from_value(val));
                let t2 = subst.resolve(&t);
                let mut p2 = prefix.clone();
                p2.push((v, val.clone()));
                next.push((t2, p2));
            }
        }
        combos = next;
    }
    Ok(combos)
}

/// The success function of `msw(switch, outcome)`: the probability mass
/// function for a finite switch (`sum p_v * delta(v; V)`), the Gaussian
/// density for a `real` switch, and for unbound family parameters the
/// sum over their domains with delta prefixes selecting each instance.
pub fn msw_success(
    env: &MswEnv,
    switch: &Term,
    outcome: &Term,
    types: &VarTypes,
) -> Result<SuccessFunction, EvalError> {
    let mut terms = Vec::new();
    for (ground, prefix) in expand_switch(switch, types)? {
        let decl = env
            .program
            .decl_for(&ground)
            .ok_or_else(|| EvalError::Type(format!("undeclared switch `{ground}`")))?;
        let params = env
            .params
            .lookup(&ground)
            .ok_or_else(|| EvalError::MissingParams(ground.to_string()))?;
        match (&decl.kind, params) {
            (DomainKind::Finite(dom), SwitchParams::Probs(ps)) => match outcome {
                Term::Var(ov) => {
                    for (val, &p) in dom.iter().zip(ps) {
                        if p <= 0.0 {
                            continue;
                        }
                        let mut ppdf = Ppdf::constant(p);
                        if !push_prefix(&mut ppdf, &prefix) {
                            continue;
                        }
                        if !ppdf.push_delta(*ov, val.clone()) {
                            continue;
                        }
                        terms.push(CTerm { ppdf, cons: ConstraintSet::empty() });
                    }
                }
                other => {
                    let got = other.as_value().ok_or_else(|| {
                        EvalError::Type(format!("non-scalar outcome `{other}` for `{ground}`"))
                    })?;
                    if let Some(i) = dom.iter().position(|d| *d == got) {
                        if ps[i] > 0.0 {
                            let mut ppdf = Ppdf::constant(ps[i]);
                            if push_prefix(&mut ppdf, &prefix) {
                                terms.push(CTerm { ppdf, cons: ConstraintSet::empty() });
                            }
                        }
                    }
                }
            },
            (DomainKind::Real, SwitchParams::Gaussian { mean, var }) => match outcome {
                Term::Var(ov) => {
                    let mut ppdf = Ppdf::one();
                    if !push_prefix(&mut ppdf, &prefix) {
                        continue;
                    }
                    ppdf.push_gaussian(LinearForm::var(*ov), *mean, *var);
                    terms.push(CTerm { ppdf, cons: ConstraintSet::empty() });
                }
                Term::Num(x) => {
                    let mut ppdf = Ppdf::one();
                    if !push_prefix(&mut ppdf, &prefix) {
                        continue;
                    }
                    ppdf.log_k += gauss_logpdf(*x, *mean, *var);
                    terms.push(CTerm { ppdf, cons: ConstraintSet::empty() });
                }
                other => {
                    return Err(EvalError::Type(format!(
                        "outcome `{other}` of Gaussian switch `{ground}` is not numeric"
                    )))
                }
            },
            (DomainKind::Finite(_), SwitchParams::Gaussian { .. }) => {
                return Err(EvalError::Type(format!(
                    "Gaussian parameters on finite-domain switch `{ground}`"
                )))
            }
            (DomainKind::Real, SwitchParams::Probs(_)) => {
                return Err(EvalError::Type(format!(
                    "probability vector on real-domain switch `{ground}`"
                )))
            }
        }
    }
    Ok(SuccessFunction { terms })
}

pub(crate) fn push_prefix(ppdf: &mut Ppdf, prefix: &[(VarId, Value)]) -> bool {
    for (v, val) in prefix {
        if !ppdf.push_delta(*v, val.clone()) {
            return false;
        }
    }
    true
}

/// The success function of a linear constraint: `<1, {c}>`; a satisfied
/// ground check is `<1, true>` and an unsatisfiable one is zero.
pub fn constraint_success(c: &LinearConstraint) -> SuccessFunction {
    let row = c.to_row();
    if row.is_constant() {
        if row.intercept.abs() <= SAT_TOL {
            SuccessFunction::one()
        } else {
            SuccessFunction::zero()
        }
    } else {
        match ConstraintSet::from_rows(vec![row]) {
            Reduced::Unsatisfiable => SuccessFunction::zero(),
            Reduced::Consistent(cons) => SuccessFunction {
                terms: vec![CTerm { ppdf: Ppdf::one(), cons }],
            },
        }
    }
}

/// A success function built directly from constraint rows (used for
/// recorded derivation steps).
pub fn rows_success(rows: Vec<LinearForm>) -> SuccessFunction {
    match ConstraintSet::from_rows(rows) {
        Reduced::Unsatisfiable => SuccessFunction::zero(),
        Reduced::Consistent(cons) => {
            if cons.is_empty() {
                SuccessFunction::one()
            } else {
                SuccessFunction { terms: vec![CTerm { ppdf: Ppdf::one(), cons }] }
            }
        }
    }
}
