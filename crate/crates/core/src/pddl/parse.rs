use std::collections::{BTreeMap, BTreeSet};

use super::types::*;
use super::PddlError;
use crate::sexpr::{self, Pos, Sexpr};

const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

/// Heads that introduce constructs outside the STRIPS subset.
const UNSUPPORTED_HEADS: [&str; 16] = [
    "or",
    "imply",
    "exists",
    "forall",
    "when",
    "preference",
    "=",
    "<",
    ">",
    "<=",
    ">=",
    "increase",
    "decrease",
    "assign",
    "scale-up",
    "scale-down",
];

fn malformed<T>(what: &str, pos: Pos) -> Result<T, PddlError> {
    Err(PddlError::Malformed {
        what: what.to_string(),
        pos,
    })
}

fn unsupported<T>(construct: &str, pos: Pos) -> Result<T, PddlError> {
    Err(PddlError::Unsupported {
        construct: construct.to_string(),
        pos,
    })
}

fn symbol<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_symbol().map_or_else(|| malformed(what, e.pos()), Ok)
}

fn list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list().map_or_else(|| malformed(what, e.pos()), Ok)
}

/// Parses a PDDL typed list (`a b - t c - u d`) into `(name, type, pos)`
/// triples. Untyped trailing names default to `object`.
pub fn typed_list(items: &[Sexpr]) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut iter = items.iter();
    while let Some(item) = iter.next() {
        match item {
            Sexpr::Symbol(s, pos) if s == "-" => {
                let ty = match iter.next() {
                    Some(Sexpr::Symbol(t, _)) => t.clone(),
                    Some(e @ Sexpr::List(..)) if e.head() == Some("either") => {
                        return unsupported("either", e.pos())
                    }
                    Some(e) => return malformed("type name", e.pos()),
                    None => return malformed("type name after `-`", *pos),
                };
                if pending.is_empty() {
                    return malformed("typed list (type without names)", *pos);
                }
                out.extend(pending.drain(..).map(|(n, p)| (n, ty.clone(), p)));
            }
            Sexpr::Symbol(s, pos) => pending.push((s.clone(), *pos)),
            Sexpr::List(_, pos) => return malformed("typed list entry", *pos),
        }
    }
    out.extend(pending.into_iter().map(|(n, p)| (n, OBJECT.to_string(), p)));
    Ok(out)
}

fn parameters(items: &[Sexpr], types: &TypeHierarchy) -> Result<Vec<Parameter>, PddlError> {
    let mut params: Vec<Parameter> = Vec::new();
    for (name, ty, pos) in typed_list(items)? {
        let Some(var) = name.strip_prefix('?') else {
            return malformed("parameter (expected `?name`)", pos);
        };
        if !types.contains(&ty) {
            return Err(PddlError::UndeclaredType(ty));
        }
        if params.iter().any(|p| p.name == var) {
            return Err(PddlError::Duplicate(format!("parameter `?{var}`")));
        }
        params.push(Parameter::new(var, ty));
    }
    Ok(params)
}

/// Flattens a conjunction of literals into `(positive, atom)` pairs.
fn conjunction<'a>(e: &'a Sexpr, out: &mut Vec<(bool, &'a Sexpr)>) -> Result<(), PddlError> {
    let items = list(e, "formula")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        None => malformed("formula", e.pos()),
        Some("and") => {
            for child in &items[1..] {
                conjunction(child, out)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return malformed("negation", e.pos());
            }
            let inner = &items[1];
            match inner.head() {
                Some(h) if UNSUPPORTED_HEADS.contains(&h) || h == "and" || h == "not" => {
                    unsupported(&format!("not ({h} ...)"), inner.pos())
                }
                Some(_) => {
                    out.push((false, inner));
                    Ok(())
                }
                None => malformed("negated atom", inner.pos()),
            }
        }
        Some(h) if UNSUPPORTED_HEADS.contains(&h) => unsupported(h, e.pos()),
        Some(_) => {
            out.push((true, e));
            Ok(())
        }
    }
}

fn lifted_atom(e: &Sexpr, domain: &Domain, schema: &ActionSchema) -> Result<LiftedAtom, PddlError> {
    let items = list(e, "atom")?;
    let name = symbol(&items[0], "predicate name")?;
    let pred = domain.predicate(name)?;
    let args = &items[1..];
    if args.len() != pred.arity() {
        return Err(PddlError::Arity {
            predicate: pred.name.clone(),
            expected: pred.arity(),
            found: args.len(),
        });
    }
    let mut terms = Vec::with_capacity(args.len());
    for (arg, param) in args.iter().zip(&pred.params) {
        let s = symbol(arg, "argument")?;
        let Some(var) = s.strip_prefix('?') else {
            return unsupported(&format!("constant `{s}` in action schema"), arg.pos());
        };
        let idx = schema
            .param_index(var)
            .ok_or_else(|| PddlError::UndeclaredVariable {
                action: schema.name.clone(),
                var: var.to_string(),
            })?;
        let ty = &schema.params[idx].ty;
        if !domain.types.is_subtype(ty, &param.ty) {
            return Err(PddlError::TypeMismatch(format!(
                "?{var} - {ty} used where `{}` expects `{}` in action `{}`",
                pred.name, param.ty, schema.name
            )));
        }
        terms.push(Term::var(var));
    }
    Ok(Atom::new(name, terms))
}

/// Parses and type-checks a ground atom `(pred o1 ...)`.
pub fn ground_atom(e: &Sexpr, domain: &Domain, objects: &Objects) -> Result<GroundAtom, PddlError> {
    let items = list(e, "atom")?;
    if items.is_empty() {
        return malformed("atom", e.pos());
    }
    let name = symbol(&items[0], "predicate name")?;
    if UNSUPPORTED_HEADS.contains(&name) {
        return unsupported(name, e.pos());
    }
    let args = items[1..]
        .iter()
        .map(|a| symbol(a, "object").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let atom = Atom::new(name, args);
    domain.check_atom(&atom, objects)?;
    Ok(atom)
}

fn parse_action(e: &Sexpr, domain: &Domain) -> Result<ActionSchema, PddlError> {
    let items = list(e, "action")?;
    if items.len() < 2 {
        return malformed("action", e.pos());
    }
    let name = symbol(&items[1], "action name")?;
    let mut params = None;
    let mut pre = None;
    let mut eff = None;
    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let k = symbol(key, "action keyword")?;
        let Some(value) = rest.next() else {
            return malformed(&format!("value for {k}"), key.pos());
        };
        match k {
            ":parameters" => params = Some(value),
            ":precondition" => pre = Some(value),
            ":effect" => eff = Some(value),
            other => return unsupported(other, key.pos()),
        }
    }
    let params = match params {
        Some(p) => parameters(list(p, "parameter list")?, &domain.types)?,
        None => Vec::new(),
    };
    let mut schema = ActionSchema::new(name, params);

    if let Some(pre) = pre {
        let mut lits = Vec::new();
        conjunction(pre, &mut lits)?;
        for (positive, atom) in lits {
            let atom = lifted_atom(atom, domain, &schema)?;
            if positive {
                schema.pre_pos.insert(atom);
            } else {
                schema.pre_neg.insert(atom);
            }
        }
    }
    if let Some(eff) = eff {
        let mut lits = Vec::new();
        conjunction(eff, &mut lits)?;
        for (positive, atom) in lits {
            let atom = lifted_atom(atom, domain, &schema)?;
            if positive {
                schema.eff_add.insert(atom);
            } else {
                schema.eff_del.insert(atom);
            }
        }
    }
    if let Some(atom) = schema.eff_add.intersection(&schema.eff_del).next() {
        return Err(PddlError::ContradictoryEffect {
            action: schema.name.clone(),
            atom: atom.to_string(),
        });
    }
    Ok(schema)
}

/// Splits `(define (<kind> NAME) sections...)` into its name and sections.
fn definition<'a>(top: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), PddlError> {
    let items = list(top, "definition")?;
    if top.head() != Some("define") || items.len() < 2 {
        return malformed("`(define ...)`", top.pos());
    }
    let header = list(&items[1], &format!("({kind} NAME)"))?;
    if items[1].head() != Some(kind) || header.len() != 2 {
        return malformed(&format!("({kind} NAME)"), items[1].pos());
    }
    let name = symbol(&header[1], &format!("{kind} name"))?.to_string();
    Ok((name, &items[2..]))
}

fn check_requirements(section: &[Sexpr], out: &mut BTreeSet<String>) -> Result<(), PddlError> {
    for req in &section[1..] {
        let r = symbol(req, "requirement flag")?;
        if !SUPPORTED_REQUIREMENTS.contains(&r) {
            return unsupported(r, req.pos());
        }
        out.insert(r.to_string());
    }
    Ok(())
}

/// Parses a domain in the supported STRIPS subset. Identifiers are
/// canonicalized to lowercase.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let top = sexpr::parse_one(text)?;
    let (name, sections) = definition(&top, "domain")?;
    let mut domain = Domain::new(name);

    let mut type_sections = Vec::new();
    let mut predicate_sections = Vec::new();
    let mut action_sections = Vec::new();
    for section in sections {
        let items = list(section, "domain section")?;
        match section.head() {
            Some(":requirements") => check_requirements(items, &mut domain.requirements)?,
            Some(":types") => type_sections.push(items),
            Some(":predicates") => predicate_sections.push(items),
            Some(":action") => action_sections.push(section),
            Some(other) => return unsupported(other, section.pos()),
            None => return malformed("domain section", section.pos()),
        }
    }

    for items in type_sections {
        let entries = typed_list(&items[1..])?;
        for (name, parent, _) in &entries {
            domain.types.declare(name, parent)?;
        }
        // Parents mentioned only on the right of `-` are implicitly declared.
        for (_, parent, _) in &entries {
            if !domain.types.contains(parent) {
                domain.types.declare(parent, OBJECT)?;
            }
        }
    }

    for items in predicate_sections {
        for p in &items[1..] {
            let pitems = list(p, "predicate declaration")?;
            if pitems.is_empty() {
                return malformed("predicate declaration", p.pos());
            }
            let name = symbol(&pitems[0], "predicate name")?.to_string();
            let params = parameters(&pitems[1..], &domain.types)?;
            if domain.predicates.contains_key(&name) {
                return Err(PddlError::Duplicate(format!("predicate `{name}`")));
            }
            domain
                .predicates
                .insert(name.clone(), Predicate { name, params });
        }
    }

    for a in action_sections {
        let schema = parse_action(a, &domain)?;
        if domain.actions.contains_key(&schema.name) {
            return Err(PddlError::Duplicate(format!("action `{}`", schema.name)));
        }
        domain.actions.insert(schema.name.clone(), schema);
    }
    Ok(domain)
}

/// Parses a problem against `domain`. The init state is closed-world.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let top = sexpr::parse_one(text)?;
    let (name, sections) = definition(&top, "problem")?;
    let mut problem = Problem {
        name,
        domain: domain.name.clone(),
        objects: BTreeMap::new(),
        init: State::new(),
        goal: BTreeSet::new(),
    };

    let mut init = None;
    let mut goal = None;
    for section in sections {
        let items = list(section, "problem section")?;
        match section.head() {
            Some(":domain") => {
                let d = items
                    .get(1)
                    .map(|d| symbol(d, "domain name"))
                    .transpose()?
                    .unwrap_or_default();
                if d != domain.name {
                    return Err(PddlError::DomainMismatch {
                        expected: domain.name.clone(),
                        found: d.to_string(),
                    });
                }
            }
            Some(":requirements") => check_requirements(items, &mut BTreeSet::new())?,
            Some(":objects") => {
                for (obj, ty, _) in typed_list(&items[1..])? {
                    if !domain.types.contains(&ty) {
                        return Err(PddlError::UndeclaredType(ty));
                    }
                    if problem.objects.insert(obj.clone(), ty).is_some() {
                        return Err(PddlError::Duplicate(format!("object `{obj}`")));
                    }
                }
            }
            Some(":init") => init = Some(&items[1..]),
            Some(":goal") => goal = Some(section),
            Some(other) => return unsupported(other, section.pos()),
            None => return malformed("problem section", section.pos()),
        }
    }

    for atom in init.unwrap_or_default() {
        if atom.head() == Some("not") {
            return malformed(
                "init atom (negative literal in closed-world init)",
                atom.pos(),
            );
        }
        problem
            .init
            .insert(ground_atom(atom, domain, &problem.objects)?);
    }
    if let Some(goal) = goal {
        let items = list(goal, "goal")?;
        if items.len() > 2 {
            return malformed("goal (expected a single formula)", goal.pos());
        }
        if let Some(formula) = items.get(1) {
            let mut lits = Vec::new();
            conjunction(formula, &mut lits)?;
            for (positive, atom) in lits {
                let atom = ground_atom(atom, domain, &problem.objects)?;
                problem.goal.insert(Literal { positive, atom });
            }
        }
    }
    Ok(problem)
}

/// Parses a ground action expression `(name o1 o2 ...)`.
pub fn parse_action_line(e: &Sexpr) -> Result<GroundAction, PddlError> {
    let items = list(e, "ground action")?;
    if items.is_empty() {
        return malformed("ground action", e.pos());
    }
    let name = symbol(&items[0], "action name")?.to_string();
    let args = items[1..]
        .iter()
        .map(|a| symbol(a, "object").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundAction { name, args })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOKOBAN: &str = include_str!("../../../../data/sokoban/domain.pddl");
    const SOKOBAN_IPC: &str = include_str!("../../../../data/sokoban/domain-ipc.pddl");

    #[test]
    fn parses_sokoban_signature() {
        let d = parse_domain(SOKOBAN).unwrap();
        assert_eq!(d.name, "sokoban-sequential");
        let actions: Vec<_> = d.actions.keys().map(String::as_str).collect();
        assert_eq!(actions, ["move", "push-to-goal", "push-to-nongoal"]);
        let preds: Vec<_> = d.predicates.keys().map(String::as_str).collect();
        assert_eq!(
            preds,
            [
                "at",
                "at-goal",
                "clear",
                "is-goal",
                "is-nongoal",
                "move-dir"
            ]
        );
        let mv = &d.actions["move"];
        let names: Vec<_> = mv.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["p", "from", "to", "dir"]);
        assert_eq!(mv.params[1].ty, "location");
        assert!(mv
            .pre_pos
            .contains(&LiftedAtom::lifted("move-dir", &["from", "to", "dir"])));
        assert_eq!(mv.eff_del.len(), 2);
        assert!(d.types.is_subtype("stone", "thing"));
    }

    #[test]
    fn empty_domain() {
        let d = parse_domain("(define (domain d) (:predicates))").unwrap();
        assert!(d.predicates.is_empty());
        assert!(d.actions.is_empty());
    }

    #[test]
    fn action_costs_are_rejected() {
        match parse_domain(SOKOBAN_IPC) {
            Err(PddlError::Unsupported { construct, .. }) => assert_eq!(construct, ":action-costs"),
            other => panic!("expected unsupported-construct error, got {other:?}"),
        }
        // With the requirement flag dropped the numeric effect itself is caught.
        let stripped = SOKOBAN_IPC.replace(":action-costs", "");
        let stripped = stripped.replace("(:functions (total-cost) - number)", "");
        match parse_domain(&stripped) {
            Err(PddlError::Unsupported { construct, .. }) => assert_eq!(construct, "increase"),
            other => panic!("expected unsupported-construct error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_other_unsupported_constructs() {
        let cases = [
            ("(define (domain d) (:requirements :adl))", ":adl"),
            ("(define (domain d) (:functions (f)))", ":functions"),
            ("(define (domain d) (:constants a))", ":constants"),
            (
                "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :precondition (or (p ?x) (p ?x)) :effect (p ?x)))",
                "or",
            ),
            (
                "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x ?y) :precondition (= ?x ?y) :effect (p ?x)))",
                "=",
            ),
            (
                "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :effect (when (p ?x) (not (p ?x)))))",
                "when",
            ),
            (
                "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :effect (forall (?y) (p ?y))))",
                "forall",
            ),
        ];
        for (text, construct) in cases {
            match parse_domain(text) {
                Err(PddlError::Unsupported { construct: c, .. }) => assert_eq!(c, construct),
                other => panic!("{text}: expected unsupported `{construct}`, got {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_domain("(define (domain d)\n  (:predicates (p ?x))").unwrap_err();
        match err {
            PddlError::Syntax(e) => assert_eq!((e.pos.line, e.pos.column), (1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undeclared_references() {
        let t = "(define (domain d) (:predicates (p ?x - thing)))";
        assert_eq!(
            parse_domain(t).unwrap_err(),
            PddlError::UndeclaredType("thing".into())
        );
        let t =
            "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :effect (q ?x)))";
        assert_eq!(
            parse_domain(t).unwrap_err(),
            PddlError::UndeclaredPredicate("q".into())
        );
        let t =
            "(define (domain d) (:predicates (p ?x)) (:action a :parameters (?x) :effect (p ?y)))";
        assert!(matches!(
            parse_domain(t),
            Err(PddlError::UndeclaredVariable { .. })
        ));
    }

    #[test]
    fn parameter_type_must_fit_predicate() {
        let t = "(define (domain d) (:types a b) (:predicates (p ?x - a)) (:action act :parameters (?x - b) :effect (p ?x)))";
        assert!(matches!(parse_domain(t), Err(PddlError::TypeMismatch(_))));
    }

    #[test]
    fn forward_type_references_are_declared() {
        let d = parse_domain("(define (domain d) (:types player - thing thing - object))").unwrap();
        assert_eq!(d.types.parent("player"), Some("thing"));
        assert_eq!(d.types.parent("thing"), Some(OBJECT));
    }

    #[test]
    fn problem_arity_and_empty_goal() {
        let d = parse_domain(SOKOBAN).unwrap();
        let ok = "(define (problem p) (:domain sokoban-sequential) (:objects player-01 - player l1 - location) (:init (at player-01 l1)) (:goal (and)))";
        let p = parse_problem(ok, &d).unwrap();
        assert!(p.goal.is_empty());
        assert_eq!(p.init.len(), 1);

        let bad = "(define (problem p) (:domain sokoban-sequential) (:objects p1 - player) (:init (at p1)))";
        assert!(matches!(
            parse_problem(bad, &d),
            Err(PddlError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        let bad_type = "(define (problem p) (:domain sokoban-sequential) (:objects p1 - widget))";
        assert_eq!(
            parse_problem(bad_type, &d).unwrap_err(),
            PddlError::UndeclaredType("widget".into())
        );
    }
}
