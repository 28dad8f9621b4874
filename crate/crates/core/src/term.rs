//! Prolog-style terms, substitutions, and unification with occurs check.

use std::collections::HashMap;
use std::fmt;

use crate::value::Value;

/// Variable identifier, unique within a program/derivation after
/// standardization-apart.
pub type VarId = u32;

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Var(VarId),
    Atom(String),
    Num(f64),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn atom(s: &str) -> Term {
        Term::Atom(s.to_string())
    }

    pub fn compound(f: &str, args: Vec<Term>) -> Term {
        Term::Compound(f.to_string(), args)
    }

    /// Functor name and arity; atoms are functors of arity 0.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::Atom(a) => Some((a, 0)),
            Term::Compound(f, args) => Some((f, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Atom(_) | Term::Num(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn as_value(&self) -> Option<Value> {
        match self {
            Term::Atom(a) => Some(Value::Atom(a.clone())),
            Term::Num(x) => Some(Value::Num(*x)),
            _ => None,
        }
    }

    pub fn from_value(v: &Value) -> Term {
        match v {
            Value::Atom(a) => Term::Atom(a.clone()),
            Value::Num(x) => Term::Num(*x),
        }
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Term::Compound(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            _ => {}
        }
    }

    /// Rename all variables via `map`, allocating fresh ids from `next`
    /// for variables not yet mapped.
    pub fn rename(&self, map: &mut HashMap<VarId, VarId>, next: &mut VarId) -> Term {
        match self {
            Term::Var(v) => {
                let nv = *map.entry(*v).or_insert_with(|| {
                    let id = *next;
                    *next += 1;
                    id
                });
                Term::Var(nv)
            }
            Term::Compound(f, args) => Term::Compound(
                f.clone(),
                args.iter().map(|a| a.rename(map, next)).collect(),
            ),
            other => other.clone(),
        }
    }

    /// Canonical text with variables numbered by first occurrence.
    /// Used as a memo key: renamed variants of a goal share a key.
    pub fn canonical_key(&self) -> String {
        let mut map = HashMap::new();
        let mut buf = String::new();
        self.canon_into(&mut map, &mut buf);
        buf
    }

    fn canon_into(&self, map: &mut HashMap<VarId, usize>, buf: &mut String) {
        match self {
            Term::Var(v) => {
                let n = map.len();
                let idx = *map.entry(*v).or_insert(n);
                buf.push_str(&format!("_{idx}"));
            }
            Term::Atom(a) => buf.push_str(a),
            Term::Num(x) => buf.push_str(&format!("{x:?}")),
            Term::Compound(f, args) => {
                buf.push_str(f);
                buf.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        buf.push(',');
                    }
                    a.canon_into(map, buf);
                }
                buf.push(')');
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "_{v}"),
            Term::Atom(a) => write!(f, "{a}"),
            Term::Num(x) => write!(f, "{}", crate::render::fmt_num(*x)),
            Term::Compound(func, args) => {
                write!(f, "{func}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A binding map from variables to terms. Bindings may chain
/// (`X -> Y -> 3`); `resolve` follows chains.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    map: HashMap<VarId, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        self.map.insert(v, t);
    }

    pub fn lookup(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    /// Follow variable chains until a non-variable or unbound variable.
    pub fn walk<'a>(&'a self, t: &'a Term) -> &'a Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.map.get(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur
    }

    /// Apply the substitution fully to a term.
    pub fn resolve(&self, t: &Term) -> Term {
        let w = self.walk(t);
        match w {
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| self.resolve(a)).collect())
            }
            other => other.clone(),
        }
    }

    fn occurs(&self, v: VarId, t: &Term) -> bool {
        let w = self.walk(t);
        match w {
            Term::Var(u) => *u == v,
            Term::Compound(_, args) => args.iter().any(|a| self.occurs(v, a)),
            _ => false,
        }
    }

    /// Unify two terms, extending the substitution in place.
    /// Returns false (leaving self in an undefined extension state) on
    /// failure; callers clone before attempting speculative unification.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let aw = self.walk(a).clone();
        let bw = self.walk(b).clone();
        match (aw, bw) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) => {
                if self.occurs(x, &t) {
                    false
                } else {
                    self.bind(x, t);
                    true
                }
            }
            (t, Term::Var(y)) => {
                if self.occurs(y, &t) {
                    false
                } else {
                    self.bind(y, t);
                    true
                }
            }
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::Num(x), Term::Num(y)) => x == y,
            (Term::Compound(f, fa), Term::Compound(g, ga)) => {
                f == g && fa.len() == ga.len() && fa.iter().zip(&ga).all(|(x, y)| self.unify(x, y))
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unify_binds_and_resolves() {
        let mut s = Subst::new();
        let a = Term::compound("p", vec![Term::Var(0), Term::atom("b")]);
        let b = Term::compound("p", vec![Term::Num(2.5), Term::Var(1)]);
        assert!(s.unify(&a, &b));
        assert_eq!(s.resolve(&Term::Var(0)), Term::Num(2.5));
        assert_eq!(s.resolve(&Term::Var(1)), Term::atom("b"));
    }

    #[test]
    fn occurs_check_rejects_cyclic_binding() {
        let mut s = Subst::new();
        let a = Term::Var(0);
        let b = Term::compound("f", vec![Term::Var(0)]);
        assert!(!s.unify(&a, &b));
    }

    #[test]
    fn canonical_key_ignores_variable_names() {
        let t1 = Term::compound("h", vec![Term::Var(7), Term::Var(7), Term::Var(9)]);
        let t2 = Term::compound("h", vec![Term::Var(1), Term::Var(1), Term::Var(0)]);
        assert_eq!(t1.canonical_key(), t2.canonical_key());
        let t3 = Term::compound("h", vec![Term::Var(1), Term::Var(0), Term::Var(0)]);
        assert_ne!(t1.canonical_key(), t3.canonical_key());
    }

    #[test]
    fn numbers_unify_exactly() {
        let mut s = Subst::new();
        assert!(s.unify(&Term::Num(0.5), &Term::Num(0.5)));
        assert!(!s.clone().unify(&Term::Num(0.5), &Term::Num(0.5 + 1e-12)));
    }
}
