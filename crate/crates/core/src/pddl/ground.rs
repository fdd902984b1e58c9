use std::collections::{BTreeSet, HashMap};

use super::types::*;
use super::PddlError;

/// Lifts ground atoms onto the parameters of `schema` under `binding`.
///
/// Each object is replaced by the variable of the *first* parameter position
/// bound to it, so bindings that repeat an object resolve deterministically.
pub fn generalize<'a>(
    atoms: impl IntoIterator<Item = &'a GroundAtom>,
    schema: &ActionSchema,
    binding: &[String],
) -> Result<BTreeSet<LiftedAtom>, PddlError> {
    let mut first: HashMap<&str, &str> = HashMap::with_capacity(binding.len());
    for (obj, param) in binding.iter().zip(&schema.params) {
        first.entry(obj.as_str()).or_insert(param.name.as_str());
    }
    atoms
        .into_iter()
        .map(|atom| {
            let args = atom
                .args
                .iter()
                .map(|o| {
                    first
                        .get(o.as_str())
                        .map(|v| Term::var(*v))
                        .ok_or_else(|| PddlError::UnboundObject(o.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Atom::new(atom.predicate.clone(), args))
        })
        .collect()
}

/// Ground instantiation of an action schema's four literal sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundSchema {
    pub pre_pos: BTreeSet<GroundAtom>,
    pub pre_neg: BTreeSet<GroundAtom>,
    pub eff_add: BTreeSet<GroundAtom>,
    pub eff_del: BTreeSet<GroundAtom>,
}

impl ActionSchema {
    /// Substitutes `binding` into one lifted atom. `binding` must have one
    /// object per parameter; variables that are not parameters are an error.
    pub fn ground_atom(
        &self,
        atom: &LiftedAtom,
        binding: &[String],
    ) -> Result<GroundAtom, PddlError> {
        let args = atom
            .args
            .iter()
            .map(|t| match t {
                Term::Object(o) => Ok(o.clone()),
                Term::Var(v) => self
                    .param_index(v)
                    .and_then(|i| binding.get(i))
                    .cloned()
                    .ok_or_else(|| PddlError::UndeclaredVariable {
                        action: self.name.clone(),
                        var: v.clone(),
                    }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Atom::new(atom.predicate.clone(), args))
    }

    fn ground_set(
        &self,
        set: &BTreeSet<LiftedAtom>,
        binding: &[String],
    ) -> Result<BTreeSet<GroundAtom>, PddlError> {
        set.iter().map(|a| self.ground_atom(a, binding)).collect()
    }
}

/// Instantiates `schema` with `binding`, checking length and argument types
/// against `objects`.
pub fn ground(
    domain: &Domain,
    schema: &ActionSchema,
    binding: &[String],
    objects: &Objects,
) -> Result<GroundSchema, PddlError> {
    if binding.len() != schema.params.len() {
        return Err(PddlError::BindingLength {
            action: schema.name.clone(),
            expected: schema.params.len(),
            found: binding.len(),
        });
    }
    for (obj, param) in binding.iter().zip(&schema.params) {
        let ty = objects
            .get(obj)
            .ok_or_else(|| PddlError::UnknownObject(obj.clone()))?;
        if !domain.types.is_subtype(ty, &param.ty) {
            return Err(PddlError::TypeMismatch(format!(
                "object `{obj}` of type `{ty}` bound to ?{} - {}",
                param.name, param.ty
            )));
        }
    }
    Ok(GroundSchema {
        pre_pos: schema.ground_set(&schema.pre_pos, binding)?,
        pre_neg: schema.ground_set(&schema.pre_neg, binding)?,
        eff_add: schema.ground_set(&schema.eff_add, binding)?,
        eff_del: schema.ground_set(&schema.eff_del, binding)?,
    })
}
