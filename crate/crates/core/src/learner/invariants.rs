//! Step 3: binary invariants between predicate argument slots, derived from
//! effect co-occurrence and from initial states, and their use to resolve
//! ambiguous failures.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{CandidateModel, Diagnostic, RecordStatus, ViolationRecord};
use crate::pddl::{Domain, LiftedAtom, Objects, State, Term};
use crate::trace::Trajectory;

/// An argument position of a predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub predicate: String,
    pub position: usize,
}

impl Slot {
    pub fn new(predicate: impl Into<String>, position: usize) -> Self {
        Slot {
            predicate: predicate.into(),
            position,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.predicate, self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Added,
    Deleted,
}

/// Two effect literals of one action that share a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimitiveRule {
    pub p: Slot,
    pub q: Slot,
    pub var: String,
    pub pattern: (Polarity, Polarity),
}

/// Unordered slot pair, stored with `p < q`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InvariantKey {
    pub p: Slot,
    pub q: Slot,
}

impl InvariantKey {
    /// Canonical key for `(a, b)` and whether `a` ended up as `q`.
    pub fn new(a: Slot, b: Slot) -> (InvariantKey, bool) {
        if a <= b {
            (InvariantKey { p: a, q: b }, false)
        } else {
            (InvariantKey { p: b, q: a }, true)
        }
    }
}

impl fmt::Display for InvariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Subset of the four presence combinations of `(p, q)` on one object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Allowed(pub u8);

impl Allowed {
    pub const TT: Allowed = Allowed(1);
    pub const TF: Allowed = Allowed(2);
    pub const FT: Allowed = Allowed(4);
    pub const FF: Allowed = Allowed(8);
    pub const NONE: Allowed = Allowed(0);

    pub fn combo(p: bool, q: bool) -> Allowed {
        match (p, q) {
            (true, true) => Allowed::TT,
            (true, false) => Allowed::TF,
            (false, true) => Allowed::FT,
            (false, false) => Allowed::FF,
        }
    }

    pub fn union(self, other: Allowed) -> Allowed {
        Allowed(self.0 | other.0)
    }

    pub fn contains(self, other: Allowed) -> bool {
        self.0 & other.0 == other.0
    }

    /// Same set with the roles of `p` and `q` swapped.
    pub fn transpose(self) -> Allowed {
        Allowed((self.0 & 0b1001) | ((self.0 & 2) << 1) | ((self.0 & 4) >> 1))
    }

    pub fn relation(self) -> Relation {
        Relation::ALL[self.0 as usize & 15]
    }
}

impl fmt::Display for Allowed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (Allowed::TT, "TT"),
            (Allowed::TF, "TF"),
            (Allowed::FT, "FT"),
            (Allowed::FF, "FF"),
        ];
        let parts: Vec<&str> = names
            .iter()
            .filter(|(a, _)| self.contains(*a))
            .map(|(_, n)| *n)
            .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// The sixteen binary relations, indexed by their allowed-combination mask
/// (TT = 1, TF = 2, FT = 4, FF = 8).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Contradiction,
    And,
    PNotQ,
    P,
    QNotP,
    Q,
    Xor,
    Or,
    Nor,
    Xnor,
    NotQ,
    ConverseImplies,
    NotP,
    Implies,
    Nand,
    Tautology,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Error,
    ConfirmP,
    ConfirmQ,
    ConfirmBoth,
    Nothing,
}

impl Relation {
    pub const ALL: [Relation; 16] = [
        Relation::Contradiction,
        Relation::And,
        Relation::PNotQ,
        Relation::P,
        Relation::QNotP,
        Relation::Q,
        Relation::Xor,
        Relation::Or,
        Relation::Nor,
        Relation::Xnor,
        Relation::NotQ,
        Relation::ConverseImplies,
        Relation::NotP,
        Relation::Implies,
        Relation::Nand,
        Relation::Tautology,
    ];

    pub fn allowed(self) -> Allowed {
        Allowed(self as u8)
    }

    pub fn symbol(self) -> &'static str {
        [
            "⊥", "∧", "⇍", "p", "⇏", "q", "⊕", "∨", "↓", "⊙", "¬q", "⇐", "¬p", "⇒", "↑", "⊤",
        ][self as usize]
    }

    pub fn name(self) -> &'static str {
        [
            "contradiction",
            "and",
            "p-not-q",
            "p",
            "q-not-p",
            "q",
            "xor",
            "or",
            "nor",
            "xnor",
            "not-q",
            "converse-implies",
            "not-p",
            "implies",
            "nand",
            "tautology",
        ][self as usize]
    }

    /// What a matching invariant does to an ambiguous failure record.
    pub fn resolution(self) -> Resolution {
        use Relation::*;
        match self {
            Contradiction | And | PNotQ | QNotP | Nor => Resolution::Error,
            P | NotP => Resolution::ConfirmQ,
            Q | NotQ => Resolution::ConfirmP,
            Xor | Xnor => Resolution::ConfirmBoth,
            Or | Implies | ConverseImplies | Nand | Tautology => Resolution::Nothing,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Pairs of effect literals sharing a variable, for every learned action.
pub fn extract_effect_rules(model: &CandidateModel) -> BTreeSet<PrimitiveRule> {
    let mut rules = BTreeSet::new();
    for action in model.actions.values() {
        let effects: Vec<(&LiftedAtom, Polarity)> = action
            .eff_add
            .iter()
            .map(|l| (l, Polarity::Added))
            .chain(action.eff_del.iter().map(|l| (l, Polarity::Deleted)))
            .collect();
        for (i, (l1, pol1)) in effects.iter().enumerate() {
            for (j, (l2, pol2)) in effects.iter().enumerate() {
                if i == j {
                    continue;
                }
                for (pi, t1) in l1.args.iter().enumerate() {
                    for (qj, t2) in l2.args.iter().enumerate() {
                        let (Term::Var(v), Term::Var(w)) = (t1, t2) else {
                            continue;
                        };
                        if v != w {
                            continue;
                        }
                        let p = Slot::new(&l1.predicate, pi);
                        let q = Slot::new(&l2.predicate, qj);
                        if p == q {
                            continue;
                        }
                        rules.insert(PrimitiveRule {
                            p,
                            q,
                            var: v.clone(),
                            pattern: (*pol1, *pol2),
                        });
                    }
                }
            }
        }
    }
    rules
}

/// Drops rules whose `q` predicate is changed by some action that leaves
/// the `p` predicate alone.
pub fn filter_rules(
    rules: &BTreeSet<PrimitiveRule>,
    model: &CandidateModel,
) -> BTreeSet<PrimitiveRule> {
    let touched: Vec<HashSet<&str>> = model
        .actions
        .values()
        .map(|a| {
            a.eff_add
                .iter()
                .chain(&a.eff_del)
                .map(|l| l.predicate.as_str())
                .collect()
        })
        .collect();
    rules
        .iter()
        .filter(|r| {
            !touched.iter().any(|preds| {
                preds.contains(r.q.predicate.as_str()) && !preds.contains(r.p.predicate.as_str())
            })
        })
        .cloned()
        .collect()
}

/// Groups rules by slot pair. A group of four distinct oriented patterns
/// becomes ⊕ if every pattern has opposite polarities and ⊙ if every
/// pattern has equal ones; anything else yields nothing.
pub fn merge_rules(rules: &BTreeSet<PrimitiveRule>) -> BTreeMap<InvariantKey, Allowed> {
    // (orientation swapped, oriented pattern)
    type Entry = (bool, (Polarity, Polarity));
    let mut groups: BTreeMap<InvariantKey, BTreeSet<Entry>> = BTreeMap::new();
    for r in rules {
        let (key, swapped) = InvariantKey::new(r.p.clone(), r.q.clone());
        let pattern = if swapped {
            (r.pattern.1, r.pattern.0)
        } else {
            r.pattern
        };
        groups.entry(key).or_default().insert((swapped, pattern));
    }
    groups
        .into_iter()
        .filter(|(_, g)| g.len() == 4)
        .filter_map(|(key, g)| {
            if g.iter().all(|(_, (a, b))| a != b) {
                Some((key, Relation::Xor.allowed()))
            } else if g.iter().all(|(_, (a, b))| a == b) {
                Some((key, Relation::Xnor.allowed()))
            } else {
                None
            }
        })
        .collect()
}

/// Objects attached to each slot in a state.
struct Attachments<'a>(HashMap<(&'a str, usize), HashSet<&'a str>>);

impl<'a> Attachments<'a> {
    fn of(state: &'a State) -> Self {
        let mut map: HashMap<(&str, usize), HashSet<&str>> = HashMap::new();
        for atom in state {
            for (i, o) in atom.args.iter().enumerate() {
                map.entry((atom.predicate.as_str(), i))
                    .or_default()
                    .insert(o.as_str());
            }
        }
        Attachments(map)
    }

    fn has(&self, slot: &Slot, o: &str) -> bool {
        self.0
            .get(&(slot.predicate.as_str(), slot.position))
            .is_some_and(|s| s.contains(o))
    }

    fn combo(&self, key: &InvariantKey, o: &str) -> Allowed {
        Allowed::combo(self.has(&key.p, o), self.has(&key.q, o))
    }
}

fn slot_type<'d>(domain: &'d Domain, slot: &Slot) -> Option<&'d str> {
    domain
        .predicates
        .get(&slot.predicate)
        .and_then(|p| p.params.get(slot.position))
        .map(|p| p.ty.as_str())
}

/// Objects that can fill both slots of `key`.
fn compatible<'o>(key: &InvariantKey, domain: &Domain, objects: &'o Objects) -> Vec<&'o str> {
    let (Some(tp), Some(tq)) = (slot_type(domain, &key.p), slot_type(domain, &key.q)) else {
        return Vec::new();
    };
    objects
        .iter()
        .filter(|(_, ty)| domain.types.is_subtype(ty, tp) && domain.types.is_subtype(ty, tq))
        .map(|(o, _)| o.as_str())
        .collect()
}

/// Strongest relation consistent with every trajectory's initial state, for
/// each pair of distinct predicates and type-compatible argument positions.
pub fn init_invariants(
    trajectories: &[Trajectory],
    domain: &Domain,
) -> BTreeMap<InvariantKey, Allowed> {
    let mut keys = Vec::new();
    let preds: Vec<_> = domain.predicates.values().collect();
    for (a, pa) in preds.iter().enumerate() {
        for pb in &preds[a + 1..] {
            for i in 0..pa.arity() {
                for j in 0..pb.arity() {
                    if domain
                        .types
                        .meet(&pa.params[i].ty, &pb.params[j].ty)
                        .is_some()
                    {
                        keys.push(
                            InvariantKey::new(Slot::new(&pa.name, i), Slot::new(&pb.name, j)).0,
                        );
                    }
                }
            }
        }
    }
    let mut out: BTreeMap<InvariantKey, Allowed> = BTreeMap::new();
    for traj in trajectories {
        let attached = Attachments::of(&traj.init);
        for key in &keys {
            let objs = compatible(key, domain, &traj.objects);
            if objs.is_empty() {
                continue;
            }
            let seen = objs
                .iter()
                .fold(Allowed::NONE, |acc, o| acc.union(attached.combo(key, o)));
            let entry = out.entry(key.clone()).or_default();
            *entry = entry.union(seen);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Effects,
    Init,
    Both,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub key: InvariantKey,
    pub allowed: Allowed,
    pub relation: Relation,
    pub source: Source,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {}",
            self.key.p, self.relation, self.key.q, self.allowed
        )
    }
}

/// Predicates changed by some learned effect.
pub fn fluents(model: &CandidateModel) -> BTreeSet<String> {
    model
        .actions
        .values()
        .flat_map(|a| a.eff_add.iter().chain(&a.eff_del))
        .map(|l| l.predicate.clone())
        .collect()
}

/// Unions the allowed sets of effect and initial-state invariants per key.
/// An initial-state invariant without an effect counterpart only describes
/// `s0`, so it is kept only when neither predicate is in `fluents`.
pub fn merge(
    effects: &BTreeMap<InvariantKey, Allowed>,
    init: &BTreeMap<InvariantKey, Allowed>,
    fluents: &BTreeSet<String>,
) -> Vec<Invariant> {
    let keys: BTreeSet<&InvariantKey> = effects.keys().chain(init.keys()).collect();
    keys.into_iter()
        .filter_map(|key| {
            let (allowed, source) = match (effects.get(key), init.get(key)) {
                (Some(a), Some(b)) => (a.union(*b), Source::Both),
                (Some(a), None) => (*a, Source::Effects),
                (None, Some(b)) => {
                    if fluents.contains(&key.p.predicate) || fluents.contains(&key.q.predicate) {
                        return None;
                    }
                    (*b, Source::Init)
                }
                (None, None) => unreachable!(),
            };
            Some(Invariant {
                key: key.clone(),
                allowed,
                relation: allowed.relation(),
                source,
            })
        })
        .collect()
}

/// Whether `inv` holds for every compatible object in `state`.
pub fn holds_in(inv: &Invariant, state: &State, objects: &Objects, domain: &Domain) -> bool {
    let attached = Attachments::of(state);
    compatible(&inv.key, domain, objects)
        .into_iter()
        .all(|o| inv.allowed.contains(attached.combo(&inv.key, o)))
}

fn var_at(l: &LiftedAtom, i: usize) -> Option<&Term> {
    l.args.get(i)
}

/// Applies the invariant table to every ambiguous record and reinstates
/// newly confirmed literals into the preconditions. Returns diagnostics for
/// invariants that contradict a failure.
pub fn resolve(
    records: &[ViolationRecord],
    invariants: &[Invariant],
    model: &mut CandidateModel,
) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let mut by_preds: HashMap<(&str, &str), Vec<&Invariant>> = HashMap::new();
    for inv in invariants {
        by_preds
            .entry((inv.key.p.predicate.as_str(), inv.key.q.predicate.as_str()))
            .or_default()
            .push(inv);
    }
    for record in records
        .iter()
        .filter(|r| r.status == RecordStatus::Ambiguous)
    {
        let Some(action) = model.actions.get_mut(&record.action.name) else {
            continue;
        };
        let literals: Vec<(&LiftedAtom, bool)> = record
            .r_pos
            .iter()
            .map(|l| (l, true))
            .chain(record.r_neg.iter().map(|l| (l, false)))
            .collect();
        for (a, (l1, pos1)) in literals.iter().enumerate() {
            for (b, (l2, pos2)) in literals.iter().enumerate() {
                if a == b {
                    continue;
                }
                let Some(candidates) =
                    by_preds.get(&(l1.predicate.as_str(), l2.predicate.as_str()))
                else {
                    continue;
                };
                for inv in candidates {
                    let shared = match (
                        var_at(l1, inv.key.p.position),
                        var_at(l2, inv.key.q.position),
                    ) {
                        (Some(x), Some(y)) => x == y,
                        _ => false,
                    };
                    if !shared {
                        continue;
                    }
                    let mut confirm = |l: &LiftedAtom, positive: bool| {
                        let set = if positive {
                            &mut action.confirmed_pos
                        } else {
                            &mut action.confirmed_neg
                        };
                        set.insert(l.clone());
                    };
                    match inv.relation.resolution() {
                        Resolution::Error => diagnostics.push(Diagnostic {
                            action: record.action.clone(),
                            message: format!(
                                "invariant {inv} rules out failure candidates {}{l1} and {}{l2}",
                                if *pos1 { "" } else { "not " },
                                if *pos2 { "" } else { "not " }
                            ),
                        }),
                        Resolution::ConfirmP => confirm(l1, *pos1),
                        Resolution::ConfirmQ => confirm(l2, *pos2),
                        Resolution::ConfirmBoth => {
                            confirm(l1, *pos1);
                            confirm(l2, *pos2);
                        }
                        Resolution::Nothing => {}
                    }
                }
            }
        }
    }
    for action in model.actions.values_mut() {
        action.pre_pos.extend(action.confirmed_pos.iter().cloned());
        action.pre_neg.extend(action.confirmed_neg.iter().cloned());
    }
    diagnostics
}
