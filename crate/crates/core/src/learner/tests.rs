use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::pddl::{parse_domain, parse_problem, GroundAtom, Problem, State};
use crate::simulator::{
    compile_level, parse_level, parse_plan, resolve_intent, run_plan, Direction,
};

fn sokoban() -> Domain {
    parse_domain(include_str!("../../../../data/sokoban/domain.pddl")).unwrap()
}

fn lits(list: &[(&str, &[&str])]) -> BTreeSet<LiftedAtom> {
    list.iter().map(|(p, v)| LiftedAtom::lifted(p, v)).collect()
}

/// Plays a direction string (`u`, `d`, `l`, `r`) on a level.
fn play(level: &str, moves: &str) -> (Problem, Trajectory) {
    let d = sokoban();
    let p = compile_level(&parse_level(level).unwrap());
    let mut plan = Vec::new();
    let mut state = p.init.clone();
    for c in moves.chars() {
        let dir: Direction = c.to_string().parse().unwrap();
        let a = resolve_intent(&state, dir, &d, &p).unwrap();
        if let crate::simulator::ExecutionResult::Ok(next) =
            crate::simulator::step(&state, &a, &d).unwrap()
        {
            state = next;
        }
        plan.push(a);
    }
    let t = run_plan(&p, &plan, &d, false).unwrap();
    (p, t)
}

#[test]
fn single_move_effects_and_candidates() {
    let (_, t) = play("#####\n#@ $.#\n#####", "r");
    let m = step1_successful(&[t], &sokoban()).unwrap();
    assert_eq!(m.actions.len(), 1);
    let mv = &m.actions["move"];
    assert_eq!(
        mv.eff_add,
        lits(&[("clear", &["from"]), ("at", &["p", "to"])])
    );
    assert_eq!(
        mv.eff_del,
        lits(&[("at", &["p", "from"]), ("clear", &["to"])])
    );
    let truth = lits(&[
        ("at", &["p", "from"]),
        ("clear", &["to"]),
        ("move-dir", &["from", "to", "dir"]),
    ]);
    assert!(mv.pre_pos.is_superset(&truth));
    assert!(mv
        .pre_pos
        .contains(&LiftedAtom::lifted("is-nongoal", &["from"])));
    assert!(mv.pre_neg.contains(&LiftedAtom::lifted("clear", &["from"])));
}

#[test]
fn empty_input_gives_empty_model() {
    let m = step1_successful(&[], &sokoban()).unwrap();
    assert!(m.actions.is_empty());
    let out = learn_stages(&[], &sokoban()).unwrap();
    assert!(out.stage3.actions.is_empty());
}

#[test]
fn intersection_removes_goal_flags() {
    // first move leaves a nongoal cell, second leaves a goal cell
    let (_, t) = play("#######\n#@. $.#\n#######", "rr");
    let m = step1_successful(&[t], &sokoban()).unwrap();
    let mv = &m.actions["move"];
    assert_eq!(mv.successes, 2);
    for flag in ["is-nongoal", "is-goal"] {
        for v in ["from", "to"] {
            let l = LiftedAtom::lifted(flag, &[v]);
            assert!(!mv.pre_pos.contains(&l) && !mv.pre_neg.contains(&l), "{l}");
        }
    }
}

fn engineered() -> Trajectory {
    let d = sokoban();
    let p = parse_problem(include_str!("../../../../data/sokoban/engineered.pddl"), &d).unwrap();
    let plan = parse_plan(include_str!("../../../../data/sokoban/engineered.plan")).unwrap();
    run_plan(&p, &plan, &d, false).unwrap()
}

#[test]
fn single_violation_is_confirmed_and_others_pruned() {
    let d = sokoban();
    let t = engineered();
    assert_eq!(t.failures(), 1);
    let s1 = step1_successful(std::slice::from_ref(&t), &d).unwrap();
    assert!(s1.actions["move"]
        .pre_pos
        .contains(&LiftedAtom::lifted("is-nongoal", &["to"])));
    let (s2, records, _) = step2_failed(&[t], &d, &s1).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].status, RecordStatus::Confirming);
    let mv = &s2.actions["move"];
    assert_eq!(mv.confirmed_pos, lits(&[("clear", &["to"])]));
    assert_eq!(mv.pre_pos, lits(&[("clear", &["to"])]));
    assert!(mv.pre_neg.is_empty());
    assert_eq!(mv.eff_add, s1.actions["move"].eff_add);
    assert_eq!(mv.eff_del, s1.actions["move"].eff_del);
}

#[test]
fn teleport_failure_is_ambiguous() {
    let d = sokoban();
    let (p, mut t) = play("######\n#@  $.#\n######", "r");
    // the player is at pos-02-03; try to move from pos-02-02 to pos-02-04
    // heading up: at(?p,?from) and move-dir(?from,?to,?dir) both fail
    t.push_failed(GroundAction::parse(
        "move",
        &["player-01", "pos-02-02", "pos-02-04", "dir-up"],
    ));
    t.validate(&d).unwrap();
    let s1 = step1_successful(std::slice::from_ref(&t), &d).unwrap();
    let (_, records, _) = step2_failed(&[t], &d, &s1).unwrap();
    let _ = p;
    assert_eq!(records[0].status, RecordStatus::Ambiguous);
    assert_eq!(
        records[0].r_pos,
        lits(&[("at", &["p", "from"]), ("move-dir", &["from", "to", "dir"])])
    );
}

#[test]
fn no_failures_leave_model_unchanged() {
    let d = sokoban();
    let (_, t) = play("#####\n#@ $.#\n#####", "rr");
    let s1 = step1_successful(std::slice::from_ref(&t), &d).unwrap();
    let (s2, records, diags) = step2_failed(&[t], &d, &s1).unwrap();
    assert_eq!(s1, s2);
    assert!(records.is_empty() && diags.is_empty());
}

#[test]
fn failure_of_unknown_schema_is_an_error() {
    let d = sokoban();
    let (_, mut t) = play("#####\n#@ $.#\n#####", "r");
    t.push_failed(GroundAction::parse("jump", &["player-01"]));
    assert!(matches!(
        step2_failed(&[t], &d, &CandidateModel::default()),
        Err(LearnError::Pddl(crate::pddl::PddlError::UnknownAction(_)))
    ));
}

#[test]
fn inconsistent_effects_are_rejected() {
    let d = parse_domain(
        "(define (domain flip) (:predicates (on ?x)) (:action toggle :parameters (?x)))",
    )
    .unwrap();
    let objects: crate::pddl::Objects = [("a".to_string(), "object".to_string())].into();
    let mut t = Trajectory::new(objects, State::new());
    let on: State = [GroundAtom::ground("on", &["a"])].into();
    t.push_ok(GroundAction::parse("toggle", &["a"]), on);
    t.push_ok(GroundAction::parse("toggle", &["a"]), State::new());
    assert!(matches!(
        step1_successful(&[t], &d),
        Err(LearnError::Nondeterministic { .. })
    ));
}

#[test]
fn single_action_trajectory_yields_single_action_model() {
    let (_, t) = play("#####\n#@ $.#\n#####", "r");
    let m = learn(&[t], &sokoban()).unwrap();
    assert_eq!(m.actions.keys().collect::<Vec<_>>(), vec!["move"]);
}

#[test]
fn model_prints_as_parseable_domain() {
    let d = sokoban();
    let (_, t) = play("#######\n#@ $ .#\n#######", "rrr");
    let m = learn(&[t], &d).unwrap();
    let printed = crate::pddl::print_domain(&m.to_domain(&d));
    let reparsed = parse_domain(&printed).unwrap();
    assert_eq!(reparsed.actions["move"].eff_add, m.actions["move"].eff_add);
}

// ---- invariants ----

fn truth_model(d: &Domain) -> CandidateModel {
    let mut m = CandidateModel::default();
    for (name, a) in &d.actions {
        let mut l = LearnedAction::new(a.params.clone());
        l.eff_add = a.eff_add.clone();
        l.eff_del = a.eff_del.clone();
        l.pre_pos = a.pre_pos.clone();
        m.actions.insert(name.clone(), l);
    }
    m
}

fn at_clear() -> InvariantKey {
    InvariantKey::new(Slot::new("at", 1), Slot::new("clear", 0)).0
}

#[test]
fn sokoban_effects_give_xor_on_location_occupancy() {
    let d = sokoban();
    let m = truth_model(&d);
    let rules = extract_effect_rules(&m);
    let filtered = filter_rules(&rules, &m);
    let inv = merge_rules(&filtered);
    assert_eq!(
        inv.get(&at_clear()).map(|a| a.relation()),
        Some(Relation::Xor)
    );
    // at-goal is touched without at by no action, but at is touched without
    // at-goal by move, so (at-goal -> at) rules are filtered
    assert!(filtered
        .iter()
        .all(|r| !(r.p.predicate == "at-goal" && r.q.predicate == "at")));
}

#[test]
fn walls_weaken_xor_to_nand() {
    let d = sokoban();
    let (_, t) = play("#######\n#@ $ .#\n#######", "rrr");
    let j = init_invariants(std::slice::from_ref(&t), &d);
    assert_eq!(j[&at_clear()].relation(), Relation::Nand);
    let i = merge_rules(&filter_rules(
        &extract_effect_rules(&truth_model(&d)),
        &truth_model(&d),
    ));
    let k = merge(&i, &j, &fluents(&truth_model(&d)));
    let inv = k.iter().find(|inv| inv.key == at_clear()).unwrap();
    assert_eq!(inv.relation, Relation::Nand);
    assert_eq!(inv.source, Source::Both);
    let goals = InvariantKey::new(Slot::new("is-goal", 0), Slot::new("is-nongoal", 0)).0;
    assert_eq!(j[&goals].relation(), Relation::Xor);
    for inv in &k {
        for s in t.states() {
            assert!(holds_in(inv, s, &t.objects, &d), "{inv}");
        }
    }
}

#[test]
fn goal_flags_resolve_ambiguous_record() {
    let d = sokoban();
    let (_, t) = play("#######\n#@ $ .#\n#######", "r");
    let mut m = step1_successful(std::slice::from_ref(&t), &d).unwrap();
    let record = ViolationRecord {
        action: GroundAction::parse(
            "move",
            &["player-01", "pos-02-02", "pos-02-03", "dir-right"],
        ),
        trajectory: 0,
        index: 0,
        r_pos: lits(&[("is-goal", &["to"]), ("is-nongoal", &["to"])]),
        r_neg: BTreeSet::new(),
        status: RecordStatus::Ambiguous,
    };
    m.actions.get_mut("move").unwrap().pre_pos.clear();
    let j = init_invariants(&[t], &d);
    let k = merge(&Default::default(), &j, &fluents(&m));
    let diags = resolve(&[record], &k, &mut m);
    assert!(diags.is_empty());
    let mv = &m.actions["move"];
    assert_eq!(
        mv.confirmed_pos,
        lits(&[("is-goal", &["to"]), ("is-nongoal", &["to"])])
    );
    assert_eq!(mv.pre_pos, mv.confirmed_pos);
}

/// Resolution outcome for a record `{p(?x), q(?x)}` under one relation.
fn resolve_with(rel: Relation) -> (BTreeSet<LiftedAtom>, usize) {
    let mut m = CandidateModel::default();
    m.actions.insert(
        "a".into(),
        LearnedAction::new(vec![crate::pddl::Parameter::new("x", "object")]),
    );
    let key = InvariantKey::new(Slot::new("p", 0), Slot::new("q", 0)).0;
    let inv = Invariant {
        key,
        allowed: rel.allowed(),
        relation: rel,
        source: Source::Both,
    };
    let record = ViolationRecord {
        action: GroundAction::parse("a", &["o"]),
        trajectory: 0,
        index: 0,
        r_pos: lits(&[("p", &["x"]), ("q", &["x"])]),
        r_neg: BTreeSet::new(),
        status: RecordStatus::Ambiguous,
    };
    let diags = resolve(&[record], &[inv], &mut m);
    (m.actions["a"].confirmed_pos.clone(), diags.len())
}

#[test]
fn resolution_action_for_every_relation() {
    let p = LiftedAtom::lifted("p", &["x"]);
    let q = LiftedAtom::lifted("q", &["x"]);
    for rel in Relation::ALL {
        let (confirmed, diags) = resolve_with(rel);
        let expected: (BTreeSet<LiftedAtom>, usize) = match rel.symbol() {
            "⊥" | "∧" | "⇍" | "⇏" | "↓" => (BTreeSet::new(), 1),
            "p" | "¬p" => ([q.clone()].into(), 0),
            "q" | "¬q" => ([p.clone()].into(), 0),
            "⊕" | "⊙" => ([p.clone(), q.clone()].into(), 0),
            "∨" | "⇒" | "⇐" | "↑" | "⊤" => (BTreeSet::new(), 0),
            other => panic!("unexpected relation {other}"),
        };
        assert_eq!((confirmed, diags), expected, "{rel}");
    }
}

#[test]
fn relation_names_follow_allowed_sets() {
    use Allowed as A;
    let cases = [
        ("⊥", A::NONE),
        ("∧", A::TT),
        ("⇍", A::TF),
        ("p", A::TT.union(A::TF)),
        ("⇏", A::FT),
        ("q", A::TT.union(A::FT)),
        ("⊕", A::TF.union(A::FT)),
        ("∨", A::TT.union(A::TF).union(A::FT)),
        ("↓", A::FF),
        ("⊙", A::TT.union(A::FF)),
        ("¬q", A::TF.union(A::FF)),
        ("⇐", A::TT.union(A::TF).union(A::FF)),
        ("¬p", A::FT.union(A::FF)),
        ("⇒", A::TT.union(A::FT).union(A::FF)),
        ("↑", A::TF.union(A::FT).union(A::FF)),
        ("⊤", A::TT.union(A::TF).union(A::FT).union(A::FF)),
    ];
    for (sym, allowed) in cases {
        assert_eq!(allowed.relation().symbol(), sym);
    }
}

proptest! {
    #[test]
    fn allowed_relation_bijection(mask in 0u8..16) {
        let a = Allowed(mask);
        prop_assert_eq!(a.relation().allowed(), a);
        prop_assert_eq!(a.transpose().transpose(), a);
        prop_assert_eq!(a.transpose().contains(Allowed::TF), a.contains(Allowed::FT));
        prop_assert_eq!(a.transpose().contains(Allowed::TT), a.contains(Allowed::TT));
    }
}
