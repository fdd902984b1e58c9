//! Ground-truth STRIPS execution: applies ground actions to states, records
//! plans as trajectories, and compiles Sokoban levels into problems.

mod sokoban;

pub use sokoban::{
    compile_level, parse_level, render, resolve_intent, Cell, Direction, Grid, SokobanLevel,
};

use std::collections::BTreeSet;

use thiserror::Error;

use crate::pddl::{
    self, ActionSchema, Domain, GroundAction, GroundAtom, PddlError, Problem, State,
};
use crate::sexpr;
use crate::trace::Trajectory;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("level line {line}: {message}")]
    Level { line: usize, message: String },
    #[error("cannot resolve intent: {0}")]
    Intent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecutionResult {
    Ok(State),
    Failed {
        violated_pos: BTreeSet<GroundAtom>,
        violated_neg: BTreeSet<GroundAtom>,
    },
}

impl ExecutionResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, ExecutionResult::Ok(_))
    }
}

fn instantiate(
    schema: &ActionSchema,
    set: &BTreeSet<pddl::LiftedAtom>,
    args: &[String],
) -> Result<Vec<GroundAtom>, PddlError> {
    set.iter().map(|l| schema.ground_atom(l, args)).collect()
}

/// Applies `a` to `s` under the STRIPS semantics of `d`.
pub fn step(s: &State, a: &GroundAction, d: &Domain) -> Result<ExecutionResult, PddlError> {
    let schema = d.action(&a.name)?;
    if schema.params.len() != a.args.len() {
        return Err(PddlError::BindingLength {
            action: schema.name.clone(),
            expected: schema.params.len(),
            found: a.args.len(),
        });
    }
    let violated_pos: BTreeSet<_> = instantiate(schema, &schema.pre_pos, &a.args)?
        .into_iter()
        .filter(|g| !s.contains(g))
        .collect();
    let violated_neg: BTreeSet<_> = instantiate(schema, &schema.pre_neg, &a.args)?
        .into_iter()
        .filter(|g| s.contains(g))
        .collect();
    if !violated_pos.is_empty() || !violated_neg.is_empty() {
        return Ok(ExecutionResult::Failed {
            violated_pos,
            violated_neg,
        });
    }
    let mut next = s.clone();
    for g in instantiate(schema, &schema.eff_del, &a.args)? {
        next.remove(&g);
    }
    next.extend(instantiate(schema, &schema.eff_add, &a.args)?);
    Ok(ExecutionResult::Ok(next))
}

/// Executes `plan` from `p.init`. Failed actions are recorded with the state
/// unchanged; with `stop_on_failure` the run ends after the first one.
pub fn run_plan(
    p: &Problem,
    plan: &[GroundAction],
    d: &Domain,
    stop_on_failure: bool,
) -> Result<Trajectory, PddlError> {
    let mut t = Trajectory::new(p.objects.clone(), p.init.clone());
    for a in plan {
        d.check_action(a, &p.objects)?;
        match step(t.current(), a, d)? {
            ExecutionResult::Ok(next) => t.push_ok(a.clone(), next),
            ExecutionResult::Failed { .. } => {
                t.push_failed(a.clone());
                if stop_on_failure {
                    break;
                }
            }
        }
    }
    Ok(t)
}

/// Resolves a keypress against the current end of `t`, executes it and
/// records the outcome. Returns the attempted action and whether it succeeded.
pub fn apply_intent(
    t: &mut Trajectory,
    dir: Direction,
    d: &Domain,
    p: &Problem,
) -> Result<(GroundAction, bool), SimError> {
    let a = resolve_intent(t.current(), dir, d, p)?;
    match step(t.current(), &a, d)? {
        ExecutionResult::Ok(next) => {
            t.push_ok(a.clone(), next);
            Ok((a, true))
        }
        ExecutionResult::Failed { .. } => {
            t.push_failed(a.clone());
            Ok((a, false))
        }
    }
}

/// Parses a move string such as `"rrUl"`; whitespace and `;` comment
/// lines are ignored.
pub fn parse_moves(text: &str) -> Result<Vec<Direction>, SimError> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with(';'))
        .flat_map(str::chars)
        .filter(|c| !c.is_whitespace())
        .map(|c| c.to_string().parse())
        .collect()
}

/// Plays a sequence of keypresses from `p.init`.
pub fn play(p: &Problem, d: &Domain, moves: &[Direction]) -> Result<Trajectory, SimError> {
    let mut t = Trajectory::new(p.objects.clone(), p.init.clone());
    for dir in moves {
        apply_intent(&mut t, *dir, d, p)?;
    }
    Ok(t)
}

/// Reads a plan file: one `(name o1 o2 ...)` per line, `;` comments.
pub fn parse_plan(text: &str) -> Result<Vec<GroundAction>, PddlError> {
    sexpr::parse_all(text)?
        .iter()
        .map(pddl::parse_action_line)
        .collect()
}

pub fn write_plan(plan: &[GroundAction]) -> String {
    plan.iter().map(|a| format!("{a}\n")).collect()
}
