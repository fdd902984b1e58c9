use std::collections::BTreeMap;
use std::fmt::Write;

use super::types::*;

fn typed(name: &str, ty: &str) -> String {
    if ty == OBJECT {
        name.to_string()
    } else {
        format!("{name} - {ty}")
    }
}

fn params(params: &[Parameter]) -> String {
    params
        .iter()
        .map(|p| typed(&format!("?{}", p.name), &p.ty))
        .collect::<Vec<_>>()
        .join(" ")
}

fn conjunction<'a>(
    pos: impl IntoIterator<Item = &'a LiftedAtom>,
    neg: impl IntoIterator<Item = &'a LiftedAtom>,
) -> String {
    let mut parts: Vec<String> = pos.into_iter().map(ToString::to_string).collect();
    parts.extend(neg.into_iter().map(|a| format!("(not {a})")));
    format!("(and {})", parts.join(" ")).replace("(and )", "(and)")
}

/// Renders a domain as PDDL. Output re-parses to a structurally equal domain.
pub fn print_domain(d: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", d.name).unwrap();
    if !d.requirements.is_empty() {
        let reqs: Vec<&str> = d.requirements.iter().map(String::as_str).collect();
        writeln!(out, "  (:requirements {})", reqs.join(" ")).unwrap();
    }
    if !d.types.is_empty() {
        let mut by_parent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (name, parent) in d.types.iter() {
            by_parent.entry(parent).or_default().push(name);
        }
        out.push_str("  (:types");
        for (parent, children) in by_parent {
            write!(out, "\n    {} - {parent}", children.join(" ")).unwrap();
        }
        out.push_str(")\n");
    }
    out.push_str("  (:predicates");
    for p in d.predicates.values() {
        write!(out, "\n    ({}", p.name).unwrap();
        if !p.params.is_empty() {
            write!(out, " {}", params(&p.params)).unwrap();
        }
        out.push(')');
    }
    out.push_str(")\n");
    for a in d.actions.values() {
        writeln!(out, "  (:action {}", a.name).unwrap();
        writeln!(out, "    :parameters ({})", params(&a.params)).unwrap();
        writeln!(
            out,
            "    :precondition {}",
            conjunction(&a.pre_pos, &a.pre_neg)
        )
        .unwrap();
        writeln!(out, "    :effect {})", conjunction(&a.eff_add, &a.eff_del)).unwrap();
    }
    out.push_str(")\n");
    out
}

/// Renders a problem as PDDL.
pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {})", p.name).unwrap();
    writeln!(out, "  (:domain {})", p.domain).unwrap();
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (o, t) in &p.objects {
        by_type.entry(t).or_default().push(o);
    }
    out.push_str("  (:objects");
    for (ty, objs) in by_type {
        write!(out, "\n    {}", typed(&objs.join(" "), ty)).unwrap();
    }
    out.push_str(")\n  (:init");
    for atom in &p.init {
        write!(out, "\n    {atom}").unwrap();
    }
    out.push_str(")\n  (:goal (and");
    for lit in &p.goal {
        write!(out, " {lit}").unwrap();
    }
    out.push_str(")))\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_problem};
    use super::*;

    #[test]
    fn empty_domain_is_minimal() {
        let d = parse_domain("(define (domain d) (:predicates))").unwrap();
        assert_eq!(print_domain(&d), "(define (domain d)\n  (:predicates)\n)\n");
    }

    #[test]
    fn negative_precondition_is_emitted_inside_conjunction() {
        let text = "(define (domain d) (:requirements :negative-preconditions) (:predicates (p ?x) (q ?x)) (:action a :parameters (?x) :precondition (and (p ?x) (not (q ?x))) :effect (q ?x)))";
        let d = parse_domain(text).unwrap();
        let printed = print_domain(&d);
        assert!(
            printed.contains(":precondition (and (p ?x) (not (q ?x)))"),
            "{printed}"
        );
        assert_eq!(parse_domain(&printed).unwrap(), d);
    }

    #[test]
    fn bundled_domains_round_trip() {
        for text in [
            include_str!("../../../../data/sokoban/domain.pddl"),
            include_str!("../../../../data/hanoi/domain.pddl"),
            include_str!("../../../../data/npuzzle/domain.pddl"),
        ] {
            let d = parse_domain(text).unwrap();
            let again = parse_domain(&print_domain(&d)).unwrap();
            assert_eq!(again, d);
        }
    }

    #[test]
    fn bundled_problems_round_trip() {
        let cases = [
            (
                include_str!("../../../../data/hanoi/domain.pddl"),
                include_str!("../../../../data/hanoi/p03.pddl"),
            ),
            (
                include_str!("../../../../data/npuzzle/domain.pddl"),
                include_str!("../../../../data/npuzzle/p04.pddl"),
            ),
        ];
        for (dt, pt) in cases {
            let d = parse_domain(dt).unwrap();
            let p = parse_problem(pt, &d).unwrap();
            assert_eq!(parse_problem(&print_problem(&p), &d).unwrap(), p);
        }
    }
}
