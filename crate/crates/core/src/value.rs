//! Ground scalar values: the elements of switch domains, delta points,
//! and valuations.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::term::VarId;

/// A ground scalar: a symbolic atom or a real number.
///
/// Numbers compare by the exact value of the parsed decimal; no epsilon
/// is applied, so `delta` identities (`d_a * d_b = 0` for `a != b`) are
/// decidable.
#[derive(Debug, Clone)]
pub enum Value {
    Atom(String),
    Num(f64),
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            Value::Atom(_) => None,
        }
    }

    pub fn is_num(&self) -> bool {
        matches!(self, Value::Num(_))
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Atom(a), Value::Atom(b)) => a == b,
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b) == Ordering::Equal,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Atom(a), Value::Atom(b)) => a.cmp(b),
            (Value::Num(a), Value::Num(b)) => a.total_cmp(b),
            (Value::Atom(_), Value::Num(_)) => Ordering::Less,
            (Value::Num(_), Value::Atom(_)) => Ordering::Greater,
        }
    }
}

impl std::hash::Hash for Value {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            Value::Atom(a) => {
                0u8.hash(state);
                a.hash(state);
            }
            Value::Num(x) => {
                1u8.hash(state);
                x.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => write!(f, "{a}"),
            Value::Num(x) => write!(f, "{}", crate::render::fmt_num(*x)),
        }
    }
}

/// A finite switch domain.
pub type Domain = Vec<Value>;

/// Per-variable type information along a derivation path.
#[derive(Debug, Clone, PartialEq)]
pub enum VarType {
    Continuous,
    Discrete(Domain),
}

impl VarType {
    pub fn is_continuous(&self) -> bool {
        matches!(self, VarType::Continuous)
    }
}

/// Map from variable id to its inferred type.
#[derive(Debug, Clone, Default)]
pub struct VarTypes {
    map: HashMap<VarId, VarType>,
}

impl VarTypes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Option<&VarType> {
        self.map.get(&v)
    }

    pub fn insert(&mut self, v: VarId, t: VarType) {
        self.map.insert(v, t);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &VarType)> {
        self.map.iter()
    }

    /// Merge a type assignment for `v`, promoting where compatible.
    ///
    /// A variable standing in a linear position defaults to continuous;
    /// a discrete numeric domain may meet continuous use (its deltas sit
    /// at real points), so that pair promotes to continuous. Two unequal
    /// finite domains, or an atom-valued domain meeting continuous use,
    /// conflict.
    pub fn merge(&mut self, v: VarId, t: VarType) -> Result<(), String> {
        match self.map.get(&v) {
            None => {
                self.map.insert(v, t);
                Ok(())
            }
            Some(old) if *old == t => Ok(()),
            Some(VarType::Discrete(dom)) => {
                let numeric = dom.iter().all(Value::is_num);
                match t {
                    VarType::Continuous if numeric => {
                        self.map.insert(v, VarType::Continuous);
                        Ok(())
                    }
                    VarType::Continuous => {
                        Err("variable used as both discrete (atoms) and continuous".to_string())
                    }
                    VarType::Discrete(d2) if d2.iter().all(Value::is_num) && numeric => {
                        // two numeric domains on one variable: treat as continuous use
                        self.map.insert(v, VarType::Continuous);
                        Ok(())
                    }
                    VarType::Discrete(_) => Err("conflicting finite domains".to_string()),
                }
            }
            Some(VarType::Continuous) => match t {
                VarType::Continuous => Ok(()),
                VarType::Discrete(dom) if dom.iter().all(Value::is_num) => Ok(()),
                VarType::Discrete(_) => {
                    Err("variable used as both continuous and discrete (atoms)".to_string())
                }
            },
        }
    }
}

/// Assignment of ground values to variables, used by pointwise evaluation.
pub type Valuation = HashMap<VarId, Value>;
