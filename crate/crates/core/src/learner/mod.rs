//! The Blackout learner: successful-action analysis, failed-action analysis
//! and invariant extraction over fully observed trajectories.
//!
//! The learner reads only the signature of the supplied domain (types,
//! predicates, and action names with typed parameters). Preconditions and
//! effects in it are ignored.

mod invariants;
mod step1;
mod step2;

pub use invariants::{
    extract_effect_rules, filter_rules, fluents, holds_in, init_invariants, merge, merge_rules,
    resolve, Allowed, Invariant, InvariantKey, Polarity, PrimitiveRule, Relation, Resolution, Slot,
    Source,
};
pub use step1::step1_successful;
pub use step2::{step2_failed, RecordStatus, ViolationRecord};

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::pddl::{ActionSchema, Domain, GroundAction, LiftedAtom, Parameter, PddlError};
use crate::trace::Trajectory;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnError {
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("trajectory {trajectory}, transition {index}: object `{object}` is not declared in the trajectory")]
    UnknownObject {
        trajectory: usize,
        index: usize,
        object: String,
    },
    #[error(
        "`{action}` is not deterministic (trajectory {trajectory}, transition {index}): {detail}"
    )]
    Nondeterministic {
        action: String,
        trajectory: usize,
        index: usize,
        detail: String,
    },
}

/// What the learner believes about one action schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LearnedAction {
    pub params: Vec<Parameter>,
    /// Step-1 precondition candidates; never modified afterwards.
    pub candidates_pos: BTreeSet<LiftedAtom>,
    pub candidates_neg: BTreeSet<LiftedAtom>,
    pub pre_pos: BTreeSet<LiftedAtom>,
    pub pre_neg: BTreeSet<LiftedAtom>,
    pub confirmed_pos: BTreeSet<LiftedAtom>,
    pub confirmed_neg: BTreeSet<LiftedAtom>,
    pub eff_add: BTreeSet<LiftedAtom>,
    pub eff_del: BTreeSet<LiftedAtom>,
    pub successes: usize,
    pub failures: usize,
}

impl LearnedAction {
    pub fn new(params: Vec<Parameter>) -> Self {
        LearnedAction {
            params,
            candidates_pos: BTreeSet::new(),
            candidates_neg: BTreeSet::new(),
            pre_pos: BTreeSet::new(),
            pre_neg: BTreeSet::new(),
            confirmed_pos: BTreeSet::new(),
            confirmed_neg: BTreeSet::new(),
            eff_add: BTreeSet::new(),
            eff_del: BTreeSet::new(),
            successes: 0,
            failures: 0,
        }
    }

    pub fn to_schema(&self, name: &str) -> ActionSchema {
        ActionSchema {
            name: name.to_string(),
            params: self.params.clone(),
            pre_pos: self.pre_pos.clone(),
            pre_neg: self.pre_neg.clone(),
            eff_add: self.eff_add.clone(),
            eff_del: self.eff_del.clone(),
        }
    }
}

/// A learned action model. Actions never executed successfully are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateModel {
    pub actions: BTreeMap<String, LearnedAction>,
}

impl CandidateModel {
    pub fn action(&self, name: &str) -> Option<&LearnedAction> {
        self.actions.get(name)
    }

    /// The model as a PDDL domain over `signature`'s types and predicates.
    pub fn to_domain(&self, signature: &Domain) -> Domain {
        let mut d = signature.signature();
        for (name, a) in &self.actions {
            d.actions.insert(name.clone(), a.to_schema(name));
        }
        if self.actions.values().any(|a| !a.pre_neg.is_empty()) {
            d.requirements.insert(":negative-preconditions".into());
        }
        d
    }
}

/// Non-fatal findings, such as contradicted records or unexplained failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub action: GroundAction,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Successful = 1,
    Failed = 2,
    Invariants = 3,
}

impl Stage {
    pub fn from_number(n: u8) -> Option<Stage> {
        match n {
            1 => Some(Stage::Successful),
            2 => Some(Stage::Failed),
            3 => Some(Stage::Invariants),
            _ => None,
        }
    }
}

/// Every intermediate product of one learning run.
#[derive(Debug, Clone)]
pub struct LearnOutput {
    pub stage1: CandidateModel,
    pub stage2: CandidateModel,
    pub stage3: CandidateModel,
    pub records: Vec<ViolationRecord>,
    pub effect_rules: BTreeSet<PrimitiveRule>,
    pub filtered_rules: BTreeSet<PrimitiveRule>,
    pub effect_invariants: BTreeMap<InvariantKey, Allowed>,
    pub init_invariants: BTreeMap<InvariantKey, Allowed>,
    pub invariants: Vec<Invariant>,
    pub diagnostics: Vec<Diagnostic>,
    pub timings: [Duration; 3],
}

impl LearnOutput {
    pub fn model(&self, stage: Stage) -> &CandidateModel {
        match stage {
            Stage::Successful => &self.stage1,
            Stage::Failed => &self.stage2,
            Stage::Invariants => &self.stage3,
        }
    }
}

/// Runs all three steps, keeping each stage's output.
pub fn learn_stages(
    trajectories: &[Trajectory],
    domain: &Domain,
) -> Result<LearnOutput, LearnError> {
    let t0 = Instant::now();
    let stage1 = step1_successful(trajectories, domain)?;
    let t1 = Instant::now();
    let (stage2, records, mut diagnostics) = step2_failed(trajectories, domain, &stage1)?;
    let t2 = Instant::now();

    let effect_rules = extract_effect_rules(&stage2);
    let filtered_rules = filter_rules(&effect_rules, &stage2);
    let effect_invariants = merge_rules(&filtered_rules);
    let init = init_invariants(trajectories, domain);
    let invariants = merge(&effect_invariants, &init, &fluents(&stage2));
    let mut stage3 = stage2.clone();
    diagnostics.extend(resolve(&records, &invariants, &mut stage3));
    let t3 = Instant::now();

    Ok(LearnOutput {
        stage1,
        stage2,
        stage3,
        records,
        effect_rules,
        filtered_rules,
        effect_invariants,
        init_invariants: init,
        invariants,
        diagnostics,
        timings: [t1 - t0, t2 - t1, t3 - t2],
    })
}

/// The final (step 3) model.
pub fn learn(trajectories: &[Trajectory], domain: &Domain) -> Result<CandidateModel, LearnError> {
    Ok(learn_stages(trajectories, domain)?.stage3)
}

#[cfg(test)]
mod tests;
