//! Error types shared across the crate.

use thiserror::Error;

/// Source position of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("undeclared switch `{0}`")]
    UndeclaredSwitch(String),
    #[error("switch `{switch}`: {msg}")]
    BadSwitchParams { switch: String, msg: String },
    #[error("malformed constraint at {pos}: {msg}")]
    NonlinearConstraint { pos: Pos, msg: String },
    #[error("duplicate declaration for switch family `{0}`")]
    DuplicateDecl(String),
}

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("depth limit {limit} exceeded while deriving `{goal}`")]
    DepthLimit { limit: usize, goal: String },
    #[error("derivation count limit {limit} exceeded for `{goal}`")]
    DerivationLimit { limit: usize, goal: String },
    #[error("infinite recursion detected on goal `{0}`")]
    Cycle(String),
    #[error("switch instance `{0}` used more than once on a derivation path")]
    DuplicateInstance(String),
    #[error("msw instance argument `{0}` is not ground")]
    NonGroundInstance(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("undeclared switch `{0}`")]
    UndeclaredSwitch(String),
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("missing parameters for switch instance `{0}`")]
    MissingParams(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("valuation missing variable `{0}`")]
    MissingVariable(String),
    #[error("marginalizing `{0}` diverges: variable absent from a term with no finite domain")]
    Divergent(String),
    #[error("query leaves free variables {0}; ground or marginalize all query variables")]
    FreeVariables(String),
    #[error("answer binds `{0}` to a non-scalar term; not representable in a success function")]
    NonScalarBinding(String),
}

#[derive(Debug, Error)]
pub enum EmError {
    #[error("training example {index} (`{goal}`) is unprovable (success function is zero)")]
    Unprovable { index: usize, goal: String },
    #[error("non-finite value while evaluating example {index} (`{goal}`)")]
    NonFinite { index: usize, goal: String },
    #[error("log-likelihood decreased by {drop:.3e} at iteration {iteration}; this indicates an internal algebra bug")]
    LikelihoodDecreased { iteration: usize, drop: f64 },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(transparent)]
    Derive(#[from] DeriveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("program is not forward-samplable: {0}")]
    NonGenerative(String),
    #[error("sampling failed after {0} attempts (all paths failed)")]
    Exhausted(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
