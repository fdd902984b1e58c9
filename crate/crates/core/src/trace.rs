//! Play trajectories with fully observed states and successful or failed
//! actions, plus the `.trace` text format.
//!
//! ```text
//! (trajectory
//!   (:objects player-01 - player pos-1-1 pos-1-2 - location ...)
//!   (:init (at player-01 pos-1-1) ...)
//!   (:action (move player-01 pos-1-1 pos-1-2 dir-right) :ok)
//!   (:state (at player-01 pos-1-2) ...)
//!   (:action (move player-01 pos-1-2 pos-0-2 dir-up) :failed)
//!   ...)
//! ```
//!
//! A `:failed` action leaves the state unchanged and is written without a
//! following `:state` block. The reader also accepts the FAMA-style variant
//! produced by [`write_fama`]: `(:state ...)` in place of `:init` and actions
//! without an outcome keyword (read as `:ok`).

use std::fmt::Write;
use std::sync::Arc;

use thiserror::Error;

use crate::pddl::{self, Domain, GroundAction, Objects, PddlError, State};
use crate::sexpr::{self, Pos, Sexpr, SyntaxError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("malformed {what} at {pos}")]
    Malformed { what: String, pos: Pos },
    #[error("partial observations are not supported (`{marker}` at {pos})")]
    PartialObservation { marker: String, pos: Pos },
    #[error("transition {index}: successful action is not followed by a `:state` block")]
    MissingState { index: usize },
    #[error(
        "transition {index}: failed action followed by a state that differs from its pre-state"
    )]
    FailedStateChanged { index: usize },
    #[error("transition {index}: chain inconsistency ({detail})")]
    ChainInconsistency { index: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Ok,
    Failed,
}

impl Outcome {
    pub fn keyword(self) -> &'static str {
        match self {
            Outcome::Ok => ":ok",
            Outcome::Failed => ":failed",
        }
    }
}

/// One `⟨s, a, s'⟩` step. Failed transitions share the same state for
/// `pre` and `post`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub pre: Arc<State>,
    pub action: GroundAction,
    pub outcome: Outcome,
    pub post: Arc<State>,
}

impl Transition {
    pub fn is_ok(&self) -> bool {
        self.outcome == Outcome::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub objects: Objects,
    pub init: Arc<State>,
    pub transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new(objects: Objects, init: State) -> Self {
        Trajectory {
            objects,
            init: Arc::new(init),
            transitions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn current(&self) -> &Arc<State> {
        self.transitions.last().map_or(&self.init, |t| &t.post)
    }

    pub fn push_ok(&mut self, action: GroundAction, post: State) {
        let pre = self.current().clone();
        self.transitions.push(Transition {
            pre,
            action,
            outcome: Outcome::Ok,
            post: Arc::new(post),
        });
    }

    pub fn push_failed(&mut self, action: GroundAction) {
        let pre = self.current().clone();
        self.transitions.push(Transition {
            post: pre.clone(),
            pre,
            action,
            outcome: Outcome::Failed,
        });
    }

    /// Every distinct state in order: `s0, s1, ...` (failed steps add none).
    pub fn states(&self) -> impl Iterator<Item = &State> {
        std::iter::once(self.init.as_ref()).chain(
            self.transitions
                .iter()
                .filter(|t| t.is_ok())
                .map(|t| t.post.as_ref()),
        )
    }

    pub fn failures(&self) -> usize {
        self.transitions.iter().filter(|t| !t.is_ok()).count()
    }

    /// Checks typing, chain consistency, state preservation of failures,
    /// and that each successful step only changes atoms over its own objects.
    pub fn validate(&self, domain: &Domain) -> Result<(), TraceError> {
        for ty in self.objects.values() {
            if !domain.types.contains(ty) {
                return Err(PddlError::UndeclaredType(ty.clone()).into());
            }
        }
        for atom in self.init.iter() {
            domain.check_atom(atom, &self.objects)?;
        }
        let mut prev = &self.init;
        for (index, t) in self.transitions.iter().enumerate() {
            domain.check_action(&t.action, &self.objects)?;
            if t.pre != *prev {
                return Err(TraceError::ChainInconsistency {
                    index,
                    detail: "pre-state differs from the previous post-state".into(),
                });
            }
            match t.outcome {
                Outcome::Failed if t.pre != t.post => {
                    return Err(TraceError::FailedStateChanged { index })
                }
                Outcome::Failed => {}
                Outcome::Ok => {
                    if !Arc::ptr_eq(&t.pre, &t.post) {
                        for atom in t.post.iter() {
                            domain.check_atom(atom, &self.objects)?;
                        }
                    }
                    check_locality(index, t)?;
                }
            }
            prev = &t.post;
        }
        Ok(())
    }
}

/// Schema literals only mention parameters, so a STRIPS step can only
/// change atoms whose objects are all arguments of the action.
fn check_locality(index: usize, t: &Transition) -> Result<(), TraceError> {
    let changed = t.pre.symmetric_difference(&t.post);
    for atom in changed {
        if let Some(stray) = atom.args.iter().find(|o| !t.action.args.contains(o)) {
            let verb = if t.post.contains(atom) {
                "adds"
            } else {
                "drops"
            };
            return Err(TraceError::ChainInconsistency {
                index,
                detail: format!(
                    "state {verb} {atom}, which mentions `{stray}` outside {}",
                    t.action
                ),
            });
        }
    }
    Ok(())
}

fn malformed<T>(what: &str, pos: Pos) -> Result<T, TraceError> {
    Err(TraceError::Malformed {
        what: what.into(),
        pos,
    })
}

const PARTIAL_MARKERS: [&str; 4] = [":partial-state", ":observation", ":obs", ":unknown"];

fn read_state(items: &[Sexpr], domain: &Domain, objects: &Objects) -> Result<State, TraceError> {
    let mut state = State::new();
    for e in items {
        if let Some(m) = e
            .head()
            .filter(|h| PARTIAL_MARKERS.contains(h) || *h == "not")
        {
            return Err(TraceError::PartialObservation {
                marker: m.to_string(),
                pos: e.pos(),
            });
        }
        state.insert(pddl::ground_atom(e, domain, objects)?);
    }
    Ok(state)
}

/// Parses and validates a `.trace` file against `domain`.
pub fn parse_trace(text: &str, domain: &Domain) -> Result<Trajectory, TraceError> {
    let top = sexpr::parse_one(text)?;
    if top.head() != Some("trajectory") {
        return malformed("trace (expected `(trajectory ...)`)", top.pos());
    }
    let blocks = &top.as_list().unwrap_or_default()[1..];
    let mut objects = Objects::new();
    let mut iter = blocks.iter().peekable();

    if let Some(b) = iter.peek() {
        if b.head() == Some(":objects") {
            let items = b.as_list().unwrap_or_default();
            for (o, ty, _) in pddl::typed_list(&items[1..])? {
                if !domain.types.contains(&ty) {
                    return Err(PddlError::UndeclaredType(ty).into());
                }
                if objects.insert(o.clone(), ty).is_some() {
                    return Err(PddlError::Duplicate(format!("object `{o}`")).into());
                }
            }
            iter.next();
        }
    }

    let init = match iter.next() {
        Some(b) if matches!(b.head(), Some(":init") | Some(":state")) => {
            read_state(&b.as_list().unwrap_or_default()[1..], domain, &objects)?
        }
        Some(b) => {
            return classify_block(b).and_then(|_| malformed("initial state block", b.pos()))
        }
        None => return malformed("trace (missing initial state)", top.pos()),
    };
    let mut traj = Trajectory::new(objects, init);

    while let Some(block) = iter.next() {
        classify_block(block)?;
        if block.head() != Some(":action") {
            return malformed("block (expected `(:action ...)`)", block.pos());
        }
        let items = block.as_list().unwrap_or_default();
        let (action, outcome) = match items {
            [_, a] => (a, Outcome::Ok),
            [_, a, kw] => match kw.as_symbol() {
                Some(":ok") => (a, Outcome::Ok),
                Some(":failed") => (a, Outcome::Failed),
                _ => return malformed("action outcome (expected `:ok` or `:failed`)", kw.pos()),
            },
            _ => return malformed("action block", block.pos()),
        };
        let action = pddl::parse_action_line(action)?;
        domain.check_action(&action, &traj.objects)?;
        let index = traj.len();

        let next_state = match iter.next_if(|b| b.head() == Some(":state")) {
            Some(b) => Some(read_state(
                &b.as_list().unwrap_or_default()[1..],
                domain,
                &traj.objects,
            )?),
            None => {
                if let Some(b) = iter.peek() {
                    classify_block(b)?;
                }
                None
            }
        };
        match (outcome, next_state) {
            (Outcome::Ok, Some(post)) => traj.push_ok(action, post),
            (Outcome::Ok, None) => return Err(TraceError::MissingState { index }),
            (Outcome::Failed, Some(post)) if post != **traj.current() => {
                return Err(TraceError::FailedStateChanged { index })
            }
            (Outcome::Failed, _) => traj.push_failed(action),
        }
    }
    traj.validate(domain)?;
    Ok(traj)
}

fn classify_block(b: &Sexpr) -> Result<(), TraceError> {
    match b.head() {
        Some(m) if PARTIAL_MARKERS.contains(&m) => Err(TraceError::PartialObservation {
            marker: m.to_string(),
            pos: b.pos(),
        }),
        _ => Ok(()),
    }
}

fn write_objects(out: &mut String, objects: &Objects) {
    out.push_str("  (:objects");
    let mut by_type: std::collections::BTreeMap<&str, Vec<&str>> = Default::default();
    for (o, t) in objects {
        by_type.entry(t).or_default().push(o);
    }
    for (ty, objs) in by_type {
        write!(out, "\n    {} - {ty}", objs.join(" ")).unwrap();
    }
    out.push_str(")\n");
}

fn write_state(out: &mut String, keyword: &str, state: &State) {
    write!(out, "  ({keyword}").unwrap();
    for atom in state {
        write!(out, "\n    {atom}").unwrap();
    }
    out.push_str(")\n");
}

/// Serializes a trajectory in the `.trace` format.
pub fn write_trace(t: &Trajectory) -> String {
    let mut out = String::from("(trajectory\n");
    write_objects(&mut out, &t.objects);
    write_state(&mut out, ":init", &t.init);
    for tr in &t.transitions {
        writeln!(out, "  (:action {} {})", tr.action, tr.outcome.keyword()).unwrap();
        if tr.is_ok() {
            write_state(&mut out, ":state", &tr.post);
        }
    }
    out.push_str(")\n");
    out
}

/// Removes failed transitions. Failures never change the state, so the
/// remaining transitions still chain.
pub fn strip_failures(t: &Trajectory) -> Trajectory {
    Trajectory {
        objects: t.objects.clone(),
        init: t.init.clone(),
        transitions: t
            .transitions
            .iter()
            .filter(|tr| tr.is_ok())
            .cloned()
            .collect(),
    }
}

/// FAMA-compatible export: failures stripped, alternating full
/// `(:state ...)` and `(:action ...)` blocks.
pub fn write_fama(t: &Trajectory) -> String {
    let stripped = strip_failures(t);
    let mut out = String::from("(trajectory\n");
    write_objects(&mut out, &stripped.objects);
    write_state(&mut out, ":state", &stripped.init);
    for tr in &stripped.transitions {
        writeln!(out, "  (:action {})", tr.action).unwrap();
        write_state(&mut out, ":state", &tr.post);
    }
    out.push_str(")\n");
    out
}
