use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PddlError;

/// Root of every type hierarchy.
pub const OBJECT: &str = "object";

/// Single-inheritance type tree rooted at `object`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeHierarchy {
    parents: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `name` as a subtype of `parent`. Redeclaring a type with the
    /// same parent is a no-op; a different parent or a cycle is an error.
    pub fn declare(&mut self, name: &str, parent: &str) -> Result<(), PddlError> {
        if name == OBJECT {
            return if parent == OBJECT {
                Ok(())
            } else {
                Err(PddlError::TypeCycle(name.to_string()))
            };
        }
        if let Some(existing) = self.parents.get(name) {
            if existing == parent {
                return Ok(());
            }
            if existing != OBJECT {
                return Err(PddlError::Duplicate(format!("type `{name}`")));
            }
        }
        let mut cursor = parent;
        loop {
            if cursor == name {
                return Err(PddlError::TypeCycle(name.to_string()));
            }
            match self.parents.get(cursor) {
                Some(p) => cursor = p,
                None => break,
            }
        }
        self.parents.insert(name.to_string(), parent.to_string());
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        name == OBJECT || self.parents.contains_key(name)
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.parents.get(name).map(String::as_str)
    }

    /// Declared types (excluding the implicit `object` root) with their parents.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parents.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT {
            return self.contains(sub);
        }
        let mut cursor = sub;
        loop {
            if cursor == sup {
                return true;
            }
            match self.parents.get(cursor) {
                Some(p) => cursor = p,
                None => return false,
            }
        }
    }

    /// The more specific of two types when one subsumes the other.
    pub fn meet<'a>(&self, a: &'a str, b: &'a str) -> Option<&'a str> {
        if self.is_subtype(a, b) {
            Some(a)
        } else if self.is_subtype(b, a) {
            Some(b)
        } else {
            None
        }
    }
}

/// A named, typed parameter (`?from - location`). The name is stored without `?`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub ty: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Parameter {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<Parameter>,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    /// Schema variable, stored without the leading `?`.
    Var(String),
    Object(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Object(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Object(o) => f.write_str(o),
        }
    }
}

/// A predicate applied to arguments. `T = String` gives ground atoms,
/// `T = Term` gives lifted atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom<T> {
    pub predicate: String,
    pub args: Vec<T>,
}

pub type GroundAtom = Atom<String>;
pub type LiftedAtom = Atom<Term>;

impl<T> Atom<T> {
    pub fn new(predicate: impl Into<String>, args: Vec<T>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }
}

impl GroundAtom {
    pub fn ground(predicate: &str, args: &[&str]) -> Self {
        Atom::new(predicate, args.iter().map(|s| s.to_string()).collect())
    }
}

impl LiftedAtom {
    /// Builds a lifted atom whose arguments are all variables.
    pub fn lifted(predicate: &str, vars: &[&str]) -> Self {
        Atom::new(predicate, vars.iter().map(|v| Term::var(*v)).collect())
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }
}

impl<T: fmt::Display> fmt::Display for Atom<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal<T> {
    pub positive: bool,
    pub atom: Atom<T>,
}

pub type GroundLiteral = Literal<String>;

impl<T: fmt::Display> fmt::Display for Literal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

/// Closed-world state: the set of true ground atoms.
pub type State = BTreeSet<GroundAtom>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Parameter>,
    pub pre_pos: BTreeSet<LiftedAtom>,
    pub pre_neg: BTreeSet<LiftedAtom>,
    pub eff_add: BTreeSet<LiftedAtom>,
    pub eff_del: BTreeSet<LiftedAtom>,
}

impl ActionSchema {
    pub fn new(name: impl Into<String>, params: Vec<Parameter>) -> Self {
        ActionSchema {
            name: name.into(),
            params,
            pre_pos: BTreeSet::new(),
            pre_neg: BTreeSet::new(),
            eff_add: BTreeSet::new(),
            eff_del: BTreeSet::new(),
        }
    }

    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == var)
    }

    /// Total number of literals over the four precondition/effect sets.
    pub fn literal_count(&self) -> usize {
        self.pre_pos.len() + self.pre_neg.len() + self.eff_add.len() + self.eff_del.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: String,
    pub requirements: BTreeSet<String>,
    pub types: TypeHierarchy,
    pub predicates: BTreeMap<String, Predicate>,
    pub actions: BTreeMap<String, ActionSchema>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain {
            name: name.into(),
            requirements: BTreeSet::new(),
            types: TypeHierarchy::new(),
            predicates: BTreeMap::new(),
            actions: BTreeMap::new(),
        }
    }

    pub fn predicate(&self, name: &str) -> Result<&Predicate, PddlError> {
        self.predicates
            .get(name)
            .ok_or_else(|| PddlError::UndeclaredPredicate(name.to_string()))
    }

    pub fn action(&self, name: &str) -> Result<&ActionSchema, PddlError> {
        self.actions
            .get(name)
            .ok_or_else(|| PddlError::UnknownAction(name.to_string()))
    }

    /// Same signature (types and predicates), no actions.
    pub fn signature(&self) -> Domain {
        Domain {
            name: self.name.clone(),
            requirements: self.requirements.clone(),
            types: self.types.clone(),
            predicates: self.predicates.clone(),
            actions: BTreeMap::new(),
        }
    }

    /// Checks a ground atom against the signature using `objects` for typing.
    pub fn check_atom(&self, atom: &GroundAtom, objects: &Objects) -> Result<(), PddlError> {
        let pred = self.predicate(&atom.predicate)?;
        if pred.arity() != atom.args.len() {
            return Err(PddlError::Arity {
                predicate: pred.name.clone(),
                expected: pred.arity(),
                found: atom.args.len(),
            });
        }
        for (arg, param) in atom.args.iter().zip(&pred.params) {
            let ty = objects
                .get(arg)
                .ok_or_else(|| PddlError::UnknownObject(arg.clone()))?;
            if !self.types.is_subtype(ty, &param.ty) {
                return Err(PddlError::TypeMismatch(format!(
                    "object `{arg}` of type `{ty}` used where `{}` expects `{}` in {atom}",
                    pred.name, param.ty
                )));
            }
        }
        Ok(())
    }

    /// Checks that `action` names a schema and its arguments match the
    /// schema's parameter count and types.
    pub fn check_action(&self, action: &GroundAction, objects: &Objects) -> Result<(), PddlError> {
        let schema = self.action(&action.name)?;
        if schema.params.len() != action.args.len() {
            return Err(PddlError::BindingLength {
                action: schema.name.clone(),
                expected: schema.params.len(),
                found: action.args.len(),
            });
        }
        for (arg, param) in action.args.iter().zip(&schema.params) {
            let ty = objects
                .get(arg)
                .ok_or_else(|| PddlError::UnknownObject(arg.clone()))?;
            if !self.types.is_subtype(ty, &param.ty) {
                return Err(PddlError::TypeMismatch(format!(
                    "object `{arg}` of type `{ty}` bound to ?{} - {} in {action}",
                    param.name, param.ty
                )));
            }
        }
        Ok(())
    }
}

/// Object name → type name.
pub type Objects = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Objects,
    pub init: State,
    pub goal: BTreeSet<GroundLiteral>,
}

impl Problem {
    /// True when every goal literal holds in `state`.
    pub fn goal_satisfied(&self, state: &State) -> bool {
        self.goal
            .iter()
            .all(|l| state.contains(&l.atom) == l.positive)
    }
}

/// An action schema name applied to an ordered list of objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAction {
    pub fn new(name: impl Into<String>, args: Vec<String>) -> Self {
        GroundAction {
            name: name.into(),
            args,
        }
    }

    pub fn parse(name: &str, args: &[&str]) -> Self {
        GroundAction::new(name, args.iter().map(|s| s.to_string()).collect())
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}
