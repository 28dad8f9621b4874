//! Probabilistic logic programming with Gaussian random variables and
//! linear equality constraints.
//!
//! Programs are Prolog-like clause sets whose bodies may call `msw`
//! switches (discrete or Gaussian random processes) and state linear
//! equality constraints over the reals. Inference builds *symbolic
//! derivations* — SLD resolution that skips `msw` and constraint subgoals
//! instead of enumerating outcomes — and annotates goals with *success
//! functions*: finite sums of constrained products of Dirac deltas and
//! univariate Gaussian densities over linear forms. Parameter learning
//! runs EM with expected sufficient statistics represented symbolically
//! in the same closed algebra.
//!
//! The main entry points are [`parser::parse_program`],
//! [`engine::derive`], [`engine::goal_success`], and [`em::train`].

pub mod density;
pub mod em;
pub mod engine;
pub mod error;
pub mod ess;
pub mod linear;
pub mod oracles;
pub mod parser;
pub mod program;
pub mod render;
pub mod term;
pub mod value;

pub use density::SuccessFunction;
pub use engine::{derive, goal_ess, goal_success, Derivation, Limits};
pub use error::{DeriveError, EmError, EvalError, ParseError, SampleError};
pub use program::{Program, ParameterSet};
pub use term::Term;
pub use value::Value;
