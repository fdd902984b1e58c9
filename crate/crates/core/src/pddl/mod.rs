//! Typed STRIPS subset of PDDL: data model, parser, printer, and the
//! generalization/grounding maps between ground atoms and schema literals.

mod ground;
mod parse;
mod print;
mod types;

pub use ground::{generalize, ground, GroundSchema};
pub use parse::{ground_atom, parse_action_line, parse_domain, parse_problem, typed_list};
pub use print::{print_domain, print_problem};
pub use types::*;

use thiserror::Error;

use crate::sexpr::{Pos, SyntaxError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("unsupported construct `{construct}` at {pos}")]
    Unsupported { construct: String, pos: Pos },
    #[error("malformed {what} at {pos}")]
    Malformed { what: String, pos: Pos },
    #[error("undeclared type `{0}`")]
    UndeclaredType(String),
    #[error("undeclared predicate `{0}`")]
    UndeclaredPredicate(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("variable `?{var}` is not a parameter of `{action}`")]
    UndeclaredVariable { action: String, var: String },
    #[error("predicate `{predicate}` expects {expected} arguments, found {found}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
    },
    #[error("`{action}` expects {expected} arguments, found {found}")]
    BindingLength {
        action: String,
        expected: usize,
        found: usize,
    },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("duplicate {0}")]
    Duplicate(String),
    #[error("type `{0}` would create a cycle")]
    TypeCycle(String),
    #[error("`{action}` both adds and deletes {atom}")]
    ContradictoryEffect { action: String, atom: String },
    #[error("object `{0}` is not bound by the action")]
    UnboundObject(String),
    #[error("problem is for domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
}
