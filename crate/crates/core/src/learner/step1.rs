use std::collections::{BTreeMap, BTreeSet};

use super::{CandidateModel, LearnError, LearnedAction};
use crate::pddl::{generalize, ActionSchema, Domain, GroundAtom, Objects, State};
use crate::trace::{Trajectory, Transition};

/// Atoms of `s` whose arguments all belong to `objs`.
pub(crate) fn restrict(s: &State, objs: &BTreeSet<&str>) -> State {
    s.iter()
        .filter(|a| a.args.iter().all(|o| objs.contains(o.as_str())))
        .cloned()
        .collect()
}

/// All well-typed groundings of every predicate over `objs`, repetition allowed.
fn groundings(domain: &Domain, objs: &BTreeSet<&str>, objects: &Objects) -> Vec<GroundAtom> {
    let mut out = Vec::new();
    for pred in domain.predicates.values() {
        let choices: Vec<Vec<&str>> = pred
            .params
            .iter()
            .map(|p| {
                objs.iter()
                    .copied()
                    .filter(|o| {
                        objects
                            .get(*o)
                            .is_some_and(|t| domain.types.is_subtype(t, &p.ty))
                    })
                    .collect()
            })
            .collect();
        if choices.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; choices.len()];
        loop {
            let args = idx
                .iter()
                .zip(&choices)
                .map(|(i, c)| c[*i].to_string())
                .collect();
            out.push(GroundAtom::new(pred.name.clone(), args));
            // odometer increment
            let mut k = choices.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
            }
            if idx.iter().all(|i| *i == 0) {
                break;
            }
        }
    }
    out
}

struct Occurrence<'a> {
    trajectory: usize,
    index: usize,
    transition: &'a Transition,
}

/// Step 1: candidate preconditions from the pre-states of successful
/// actions (intersected over occurrences) and effects from their delta
/// states (unioned), followed by a determinism check of the effects.
pub fn step1_successful(
    trajectories: &[Trajectory],
    domain: &Domain,
) -> Result<CandidateModel, LearnError> {
    let mut model = CandidateModel::default();
    let mut occurrences: BTreeMap<&str, Vec<Occurrence>> = BTreeMap::new();

    for (ti, traj) in trajectories.iter().enumerate() {
        for (index, t) in traj.transitions.iter().enumerate() {
            if !t.is_ok() {
                continue;
            }
            let schema = domain.action(&t.action.name)?;
            domain
                .check_action(&t.action, &traj.objects)
                .map_err(|e| match e {
                    crate::pddl::PddlError::UnknownObject(object) => LearnError::UnknownObject {
                        trajectory: ti,
                        index,
                        object,
                    },
                    other => other.into(),
                })?;
            let objs: BTreeSet<&str> = t.action.args.iter().map(String::as_str).collect();
            let pre = restrict(&t.pre, &objs);
            let post = restrict(&t.post, &objs);
            let f = groundings(domain, &objs, &traj.objects);
            let binding = &t.action.args;

            let pos = generalize(f.iter().filter(|g| pre.contains(*g)), schema, binding)?;
            let neg = generalize(f.iter().filter(|g| !pre.contains(*g)), schema, binding)?;
            let add = generalize(post.difference(&pre), schema, binding)?;
            let del = generalize(pre.difference(&post), schema, binding)?;

            let entry = model
                .actions
                .entry(schema.name.clone())
                .or_insert_with(|| LearnedAction::new(schema.params.clone()));
            if entry.successes == 0 {
                entry.candidates_pos = pos;
                entry.candidates_neg = neg;
            } else {
                entry.candidates_pos.retain(|l| pos.contains(l));
                entry.candidates_neg.retain(|l| neg.contains(l));
            }
            entry.eff_add.extend(add);
            entry.eff_del.extend(del);
            entry.successes += 1;
            occurrences
                .entry(&schema.name)
                .or_default()
                .push(Occurrence {
                    trajectory: ti,
                    index,
                    transition: t,
                });
        }
    }

    for (name, action) in model.actions.iter_mut() {
        action.pre_pos = action.candidates_pos.clone();
        action.pre_neg = action.candidates_neg.clone();
        let schema = action.to_schema(name);
        for occ in &occurrences[name.as_str()] {
            check_determinism(&schema, occ)?;
        }
    }
    Ok(model)
}

/// The unioned effects must reproduce every observed post-state.
fn check_determinism(schema: &ActionSchema, occ: &Occurrence) -> Result<(), LearnError> {
    let fail = |detail: String| LearnError::Nondeterministic {
        action: schema.name.clone(),
        trajectory: occ.trajectory,
        index: occ.index,
        detail,
    };
    if let Some(both) = schema.eff_add.intersection(&schema.eff_del).next() {
        return Err(fail(format!("{both} is both added and deleted")));
    }
    let args = &occ.transition.action.args;
    let add: BTreeSet<GroundAtom> = schema
        .eff_add
        .iter()
        .map(|l| schema.ground_atom(l, args))
        .collect::<Result<_, _>>()?;
    for g in &add {
        if !occ.transition.post.contains(g) {
            return Err(fail(format!(
                "learned add effect {g} is absent after the action"
            )));
        }
    }
    for l in &schema.eff_del {
        let g = schema.ground_atom(l, args)?;
        if !add.contains(&g) && occ.transition.post.contains(&g) {
            return Err(fail(format!(
                "learned delete effect {g} still holds after the action"
            )));
        }
    }
    Ok(())
}
