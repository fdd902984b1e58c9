use std::collections::BTreeSet;

use super::{CandidateModel, Diagnostic, LearnError};
use crate::pddl::{Domain, GroundAction, LiftedAtom, PddlError};
use crate::trace::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Confirming,
    Ambiguous,
}

/// Candidate preconditions violated by one failed action, as lifted
/// literals of the action's schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViolationRecord {
    pub action: GroundAction,
    pub trajectory: usize,
    pub index: usize,
    pub r_pos: BTreeSet<LiftedAtom>,
    pub r_neg: BTreeSet<LiftedAtom>,
    pub status: RecordStatus,
}

/// Step 2: confirm single violated candidates of failed actions, then
/// restrict the preconditions of every action that failed at least once to
/// its confirmed literals. Effects are untouched.
pub fn step2_failed(
    trajectories: &[Trajectory],
    domain: &Domain,
    model: &CandidateModel,
) -> Result<(CandidateModel, Vec<ViolationRecord>, Vec<Diagnostic>), LearnError> {
    let mut model = model.clone();
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();

    for (ti, traj) in trajectories.iter().enumerate() {
        for (index, t) in traj.transitions.iter().enumerate() {
            if t.is_ok() {
                continue;
            }
            let schema = domain.action(&t.action.name)?;
            if schema.params.len() != t.action.args.len() {
                return Err(PddlError::BindingLength {
                    action: schema.name.clone(),
                    expected: schema.params.len(),
                    found: t.action.args.len(),
                }
                .into());
            }
            let mut record = ViolationRecord {
                action: t.action.clone(),
                trajectory: ti,
                index,
                r_pos: BTreeSet::new(),
                r_neg: BTreeSet::new(),
                status: RecordStatus::Ambiguous,
            };
            let Some(learned) = model.actions.get_mut(&schema.name) else {
                diagnostics.push(Diagnostic {
                    action: t.action.clone(),
                    message: "failed before any successful execution; nothing to refine".into(),
                });
                records.push(record);
                continue;
            };
            learned.failures += 1;
            let grounded = learned.to_schema(&schema.name);
            let args = &t.action.args;
            for l in &learned.candidates_pos {
                if !t.pre.contains(&grounded.ground_atom(l, args)?) {
                    record.r_pos.insert(l.clone());
                }
            }
            for l in &learned.candidates_neg {
                if t.pre.contains(&grounded.ground_atom(l, args)?) {
                    record.r_neg.insert(l.clone());
                }
            }
            match (record.r_pos.len(), record.r_neg.len()) {
                (1, 0) => {
                    learned.confirmed_pos.extend(record.r_pos.iter().cloned());
                    record.status = RecordStatus::Confirming;
                }
                (0, 1) => {
                    learned.confirmed_neg.extend(record.r_neg.iter().cloned());
                    record.status = RecordStatus::Confirming;
                }
                (0, 0) => diagnostics.push(Diagnostic {
                    action: t.action.clone(),
                    message: "failed although every candidate precondition held".into(),
                }),
                _ => {}
            }
            records.push(record);
        }
    }

    for action in model.actions.values_mut() {
        if action.failures > 0 {
            action.pre_pos = action.confirmed_pos.clone();
            action.pre_neg = action.confirmed_neg.clone();
        }
    }
    Ok((model, records, diagnostics))
}
