//! Parsed programs: clauses, switch declarations, and distribution
//! parameters.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::linear::LinearConstraint;
use crate::render::VarNames;
use crate::term::{Term, VarId};
use crate::value::{Domain, Value};

/// Default lower bound on Gaussian variances.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;

/// One item of a clause body.
#[derive(Debug, Clone, PartialEq)]
pub enum BodyItem {
    /// Call to a user-defined predicate.
    Call(Term),
    /// `msw(Switch, Outcome)` or `msw(Switch, Instance, Outcome)`.
    /// A missing instance means the single default instance.
    Msw { switch: Term, instance: Option<Term>, outcome: Term },
    /// A linear equality over reals.
    Constraint(LinearConstraint),
    True,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<BodyItem>,
}

impl Clause {
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = self.head.vars();
        let mut push = |v: VarId, out: &mut Vec<VarId>| {
            if !out.contains(&v) {
                out.push(v);
            }
        };
        for item in &self.body {
            match item {
                BodyItem::Call(t) => {
                    for v in t.vars() {
                        push(v, &mut out);
                    }
                }
                BodyItem::Msw { switch, instance, outcome } => {
                    for v in switch.vars() {
                        push(v, &mut out);
                    }
                    if let Some(i) = instance {
                        for v in i.vars() {
                            push(v, &mut out);
                        }
                    }
                    for v in outcome.vars() {
                        push(v, &mut out);
                    }
                }
                BodyItem::Constraint(c) => {
                    if let Some(v) = c.lhs {
                        push(v, &mut out);
                    }
                    for v in c.rhs.vars() {
                        push(v, &mut out);
                    }
                }
                BodyItem::True => {}
            }
        }
        out
    }
}

/// Declared outcome space of a switch family.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    Finite(Domain),
    Real,
}

/// A `values/2` declaration: one per family (functor + arity).
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchDecl {
    pub pattern: Term,
    pub kind: DomainKind,
}

/// Distribution parameters of one ground switch instance.
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchParams {
    Probs(Vec<f64>),
    Gaussian { mean: f64, var: f64 },
}

/// The parameter set: per ground switch instance, a probability
/// vector or Gaussian `(mean, variance)`. Non-ground `set_sw` patterns
/// act as family-wide defaults; ground entries override them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterSet {
    instances: BTreeMap<String, (Term, SwitchParams)>,
    defaults: Vec<(Term, SwitchParams)>,
}

fn matches_pattern(pattern: &Term, ground: &Term) -> bool {
    match (pattern, ground) {
        (Term::Var(_), _) => true,
        (Term::Atom(a), Term::Atom(b)) => a == b,
        (Term::Num(a), Term::Num(b)) => a == b,
        (Term::Compound(f, fa), Term::Compound(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(p, t)| matches_pattern(p, t))
        }
        _ => false,
    }
}

impl ParameterSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, switch: Term, params: SwitchParams) {
        if switch.is_ground() {
            self.instances.insert(switch.canonical_key(), (switch, params));
        } else {
            self.defaults.push((switch, params));
        }
    }

    pub fn lookup(&self, ground: &Term) -> Option<&SwitchParams> {
        if let Some((_, p)) = self.instances.get(&ground.canonical_key()) {
            return Some(p);
        }
        self.defaults
            .iter()
            .find(|(pat, _)| matches_pattern(pat, ground))
            .map(|(_, p)| p)
    }

    pub fn instances(&self) -> impl Iterator<Item = (&Term, &SwitchParams)> {
        self.instances.values().map(|(t, p)| (t, p))
    }

    pub fn defaults(&self) -> &[(Term, SwitchParams)] {
        &self.defaults
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty() && self.defaults.is_empty()
    }
}

/// A parsed program: clauses (standardized apart), switch declarations,
/// initial parameters, and the variable-name table for rendering.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub clauses: Vec<Clause>,
    decls: BTreeMap<String, SwitchDecl>,
    pub params: ParameterSet,
    pub var_names: VarNames,
    pub next_var: VarId,
    index: HashMap<String, Vec<usize>>,
}

fn family_key(name: &str, arity: usize) -> String {
    format!("{name}/{arity}")
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_clause(&mut self, clause: Clause) {
        if let Some((name, arity)) = clause.head.functor() {
            self.index
                .entry(family_key(name, arity))
                .or_default()
                .push(self.clauses.len());
        }
        self.clauses.push(clause);
    }

    pub fn add_decl(&mut self, decl: SwitchDecl) -> Result<(), String> {
        let (name, arity) = decl
            .pattern
            .functor()
            .ok_or_else(|| "switch pattern must be an atom or compound".to_string())?;
        let key = family_key(name, arity);
        if self.decls.contains_key(&key) {
            return Err(key);
        }
        self.decls.insert(key, decl);
        Ok(())
    }

    pub fn clauses_for(&self, name: &str, arity: usize) -> &[usize] {
        self.index
            .get(&family_key(name, arity))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn has_predicate(&self, name: &str, arity: usize) -> bool {
        self.index.contains_key(&family_key(name, arity))
    }

    pub fn decl_for(&self, switch: &Term) -> Option<&SwitchDecl> {
        let (name, arity) = switch.functor()?;
        self.decls.get(&family_key(name, arity))
    }

    pub fn decls(&self) -> impl Iterator<Item = &SwitchDecl> {
        self.decls.values()
    }

    /// Allocate a fresh variable id.
    pub fn fresh_var(&mut self) -> VarId {
        let v = self.next_var;
        self.next_var += 1;
        v
    }
}

/// A parameter-set invariant violation; violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub switch: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.switch, self.message)
    }
}

/// Check every parameter entry against its declaration: kind matches,
/// probability vectors have the domain's length, sum to 1 within 1e-12
/// with nonnegative entries, and variances are at or above the floor.
pub fn validate_parameters(
    prog: &Program,
    params: &ParameterSet,
    variance_floor: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let entries = params
        .instances()
        .map(|(t, p)| (t.clone(), p.clone()))
        .chain(params.defaults().iter().cloned());
    for (switch, p) in entries {
        let name = switch.to_string();
        let decl = match prog.decl_for(&switch) {
            Some(d) => d,
            None => {
                out.push(Violation {
                    switch: name,
                    message: "no values/2 declaration for this switch".into(),
                });
                continue;
            }
        };
        match (&decl.kind, &p) {
            (DomainKind::Finite(dom), SwitchParams::Probs(ps)) => {
                if ps.len() != dom.len() {
                    out.push(Violation {
                        switch: name.clone(),
                        message: format!(
                            "probability vector has {} entries for a {}-value domain",
                            ps.len(),
                            dom.len()
                        ),
                    });
                    continue;
                }
                if ps.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                    out.push(Violation {
                        switch: name.clone(),
                        message: "probabilities must be finite and nonnegative".into(),
                    });
                }
                let sum: f64 = ps.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    out.push(Violation {
                        switch: name,
                        message: format!("probabilities sum to {sum}, not 1"),
                    });
                }
            }
            (DomainKind::Real, SwitchParams::Gaussian { mean, var }) => {
                if !mean.is_finite() || !var.is_finite() {
                    out.push(Violation {
                        switch: name,
                        message: "Gaussian parameters must be finite".into(),
                    });
                } else if *var < variance_floor {
                    out.push(Violation {
                        switch: name,
                        message: format!("variance {var} below floor {variance_floor}"),
                    });
                }
            }
            (DomainKind::Finite(_), SwitchParams::Gaussian { .. }) => out.push(Violation {
                switch: name,
                message: "Gaussian parameters on a finite domain".into(),
            }),
            (DomainKind::Real, SwitchParams::Probs(_)) => out.push(Violation {
                switch: name,
                message: "probability vector on a real domain".into(),
            }),
        }
    }
    out
}

// ---------------------------------------------------------------------
// pretty printing (the inverse of the parser, up to whitespace)

fn render_term(t: &Term, names: &VarNames) -> String {
    match t {
        Term::Var(v) => names.get(*v),
        Term::Atom(a) => a.clone(),
        Term::Num(x) => crate::render::fmt_num_exact(*x),
        Term::Compound(f, args) => {
            let inner: Vec<String> = args.iter().map(|a| render_term(a, names)).collect();
            format!("{f}({})", inner.join(", "))
        }
    }
}

fn render_body_item(item: &BodyItem, names: &VarNames) -> String {
    match item {
        BodyItem::Call(t) => render_term(t, names),
        BodyItem::Msw { switch, instance, outcome } => match instance {
            None => format!(
                "msw({}, {})",
                render_term(switch, names),
                render_term(outcome, names)
            ),
            Some(i) => format!(
                "msw({}, {}, {})",
                render_term(switch, names),
                render_term(i, names),
                render_term(outcome, names)
            ),
        },
        BodyItem::Constraint(c) => c.render(names),
        BodyItem::True => "true".to_string(),
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Atom(a) => a.clone(),
        Value::Num(x) => crate::render::fmt_num_exact(*x),
    }
}

fn render_params(p: &SwitchParams) -> String {
    match p {
        SwitchParams::Probs(ps) => {
            let inner: Vec<String> = ps.iter().map(|x| crate::render::fmt_num_exact(*x)).collect();
            format!("[{}]", inner.join(", "))
        }
        SwitchParams::Gaussian { mean, var } => format!(
            "norm({}, {})",
            crate::render::fmt_num_exact(*mean),
            crate::render::fmt_num_exact(*var)
        ),
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for clause in &self.clauses {
            let head = render_term(&clause.head, &self.var_names);
            if clause.body.is_empty() {
                writeln!(f, "{head}.")?;
            } else {
                let body: Vec<String> = clause
                    .body
                    .iter()
                    .map(|b| render_body_item(b, &self.var_names))
                    .collect();
                writeln!(f, "{head} :- {}.", body.join(", "))?;
            }
        }
        for decl in self.decls.values() {
            let pat = render_term(&decl.pattern, &self.var_names);
            match &decl.kind {
                DomainKind::Real => writeln!(f, "values({pat}, real).")?,
                DomainKind::Finite(dom) => {
                    let vals: Vec<String> = dom.iter().map(render_value).collect();
                    writeln!(f, "values({pat}, [{}]).", vals.join(", "))?;
                }
            }
        }
        for (switch, p) in self.params.instances() {
            writeln!(
                f,
                ":- set_sw({}, {}).",
                render_term(switch, &self.var_names),
                render_params(p)
            )?;
        }
        for (switch, p) in self.params.defaults() {
            writeln!(
                f,
                ":- set_sw({}, {}).",
                render_term(switch, &self.var_names),
                render_params(p)
            )?;
        }
        Ok(())
    }
}
