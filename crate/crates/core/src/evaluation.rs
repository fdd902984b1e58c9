//! Per-action confusion counts, precision, recall and F1 of a learned model
//! against a ground-truth domain.

use std::collections::BTreeSet;
use std::fmt::Write;

use serde::Serialize;
use thiserror::Error;

use crate::pddl::{ActionSchema, Domain, LiftedAtom, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error(
        "`{action}` has {learned} parameters in the learned model but {truth} in the reference"
    )]
    Arity {
        action: String,
        learned: usize,
        truth: usize,
    },
    #[error("learned action `{0}` does not exist in the reference domain")]
    UnknownAction(String),
    #[error("`{action}`: variable `?{var}` is not a parameter")]
    UnboundVariable { action: String, var: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    /// `tp / (tp + fp)`, or `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        let d = self.tp + self.fp;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    /// `tp / (tp + fn)`, or `None` when the reference has no literals.
    pub fn recall(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn f1(&self) -> f64 {
        f1(
            self.precision().unwrap_or(0.0),
            self.recall().unwrap_or(0.0),
        )
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// A literal with variables replaced by their parameter positions.
type Canonical = (String, Vec<usize>);

fn canonical(
    schema: &ActionSchema,
    set: &BTreeSet<LiftedAtom>,
) -> Result<BTreeSet<Canonical>, EvalError> {
    set.iter()
        .map(|l| {
            let args = l
                .args
                .iter()
                .map(|t| {
                    let v = match t {
                        Term::Var(v) | Term::Object(v) => v,
                    };
                    schema
                        .param_index(v)
                        .ok_or_else(|| EvalError::UnboundVariable {
                            action: schema.name.clone(),
                            var: v.clone(),
                        })
                })
                .collect::<Result<_, _>>()?;
            Ok((l.predicate.clone(), args))
        })
        .collect()
}

fn bucket(
    learned: &ActionSchema,
    ls: &BTreeSet<LiftedAtom>,
    truth: &ActionSchema,
    ts: &BTreeSet<LiftedAtom>,
) -> Result<ConfusionCounts, EvalError> {
    let l = canonical(learned, ls)?;
    let t = canonical(truth, ts)?;
    let tp = l.intersection(&t).count();
    Ok(ConfusionCounts {
        tp,
        fp: l.len() - tp,
        fn_: t.len() - tp,
    })
}

/// Counts over the four buckets (pre⁺, pre⁻, eff⁺, eff⁻), each compared
/// independently by exact literal equality after renaming variables to
/// parameter positions.
pub fn compare_action(
    learned: &ActionSchema,
    truth: &ActionSchema,
) -> Result<ConfusionCounts, EvalError> {
    if learned.params.len() != truth.params.len() {
        return Err(EvalError::Arity {
            action: truth.name.clone(),
            learned: learned.params.len(),
            truth: truth.params.len(),
        });
    }
    Ok(bucket(learned, &learned.pre_pos, truth, &truth.pre_pos)?
        + bucket(learned, &learned.pre_neg, truth, &truth.pre_neg)?
        + bucket(learned, &learned.eff_add, truth, &truth.eff_add)?
        + bucket(learned, &learned.eff_del, truth, &truth.eff_del)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionScore {
    pub action: String,
    pub unobserved: bool,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    /// Set when the learned action has no literals, so precision is 0 by convention.
    pub precision_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProficiencyReport {
    pub actions: Vec<ActionScore>,
}

/// One row per reference action. Actions missing from `learned` are
/// flagged unobserved and carry no scores.
pub fn report(learned: &Domain, truth: &Domain) -> Result<ProficiencyReport, EvalError> {
    if let Some(extra) = learned
        .actions
        .keys()
        .find(|a| !truth.actions.contains_key(*a))
    {
        return Err(EvalError::UnknownAction(extra.clone()));
    }
    let mut actions = Vec::new();
    for (name, t) in &truth.actions {
        let row = match learned.actions.get(name) {
            None => ActionScore {
                action: name.clone(),
                unobserved: true,
                counts: ConfusionCounts::default(),
                precision: None,
                recall: None,
                f1: None,
                precision_undefined: false,
            },
            Some(l) => {
                let counts = compare_action(l, t)?;
                ActionScore {
                    action: name.clone(),
                    unobserved: false,
                    counts,
                    precision: Some(counts.precision().unwrap_or(0.0)),
                    recall: Some(counts.recall().unwrap_or(0.0)),
                    f1: Some(counts.f1()),
                    precision_undefined: counts.precision().is_none(),
                }
            }
        };
        actions.push(row);
    }
    Ok(ProficiencyReport { actions })
}

impl ProficiencyReport {
    pub fn row(&self, action: &str) -> Option<&ActionScore> {
        self.actions.iter().find(|r| r.action == action)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self
            .actions
            .iter()
            .map(|r| r.action.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!(
            "{:<width$}  {:>4} {:>4} {:>4}  {:>9} {:>6} {:>6}\n",
            "action", "tp", "fp", "fn", "precision", "recall", "f1"
        );
        for r in &self.actions {
            if r.unobserved {
                writeln!(
                    out,
                    "{:<width$}  {:>4} {:>4} {:>4}  {:>9} {:>6} {:>6}",
                    r.action, "-", "-", "-", "-", "-", "unobserved"
                )
                .unwrap();
                continue;
            }
            let p = format!(
                "{:.3}{}",
                r.precision.unwrap_or(0.0),
                if r.precision_undefined { "*" } else { "" }
            );
            writeln!(
                out,
                "{:<width$}  {:>4} {:>4} {:>4}  {:>9} {:>6.3} {:>6.3}",
                r.action,
                r.counts.tp,
                r.counts.fp,
                r.counts.fn_,
                p,
                r.recall.unwrap_or(0.0),
                r.f1.unwrap_or(0.0)
            )
            .unwrap();
        }
        if self.actions.iter().any(|r| r.precision_undefined) {
            out.push_str("* no literals learned; precision undefined, reported as 0\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse_domain;
    use proptest::prelude::*;

    fn sokoban() -> Domain {
        parse_domain(include_str!("../../../data/sokoban/domain.pddl")).unwrap()
    }

    #[test]
    fn f1_arithmetic() {
        assert_eq!(f1(0.5, 0.5), 0.5);
        assert_eq!(f1(0.0, 0.0), 0.0);
        let c = ConfusionCounts {
            tp: 7,
            fp: 2,
            fn_: 0,
        };
        assert_eq!(c.precision(), Some(7.0 / 9.0));
        assert_eq!(c.recall(), Some(1.0));
        assert!((c.f1() - 0.875).abs() < 1e-12);
        assert_eq!(
            ConfusionCounts {
                tp: 0,
                fp: 3,
                fn_: 4
            }
            .f1(),
            0.0
        );
    }

    #[test]
    fn self_comparison_is_perfect() {
        let d = sokoban();
        let r = report(&d, &d).unwrap();
        assert_eq!(r.actions.len(), 3);
        for row in &r.actions {
            assert_eq!(row.f1, Some(1.0));
            assert_eq!(row.counts.fp + row.counts.fn_, 0);
        }
    }

    #[test]
    fn empty_learned_action_flags_precision() {
        let d = sokoban();
        let truth = &d.actions["move"];
        let empty = ActionSchema::new("move", truth.params.clone());
        let c = compare_action(&empty, truth).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 0,
                fp: 0,
                fn_: 7
            }
        );
        let mut learned = d.signature();
        learned.actions.insert("move".into(), empty);
        let r = report(&learned, &d).unwrap();
        let row = r.row("move").unwrap();
        assert!(row.precision_undefined);
        assert_eq!(row.precision, Some(0.0));
        assert_eq!(row.f1, Some(0.0));
        assert!(r.row("push-to-goal").unwrap().unobserved);
        assert!(r.to_text().contains("unobserved"));
    }

    #[test]
    fn variables_compare_by_position() {
        let d = sokoban();
        let truth = &d.actions["move"];
        // same schema with renamed parameters
        let text = include_str!("../../../data/sokoban/domain.pddl")
            .replace("?from", "?a")
            .replace("?to", "?b");
        let renamed = parse_domain(&text).unwrap();
        let c = compare_action(&renamed.actions["move"], truth).unwrap();
        assert_eq!(
            c,
            ConfusionCounts {
                tp: 7,
                fp: 0,
                fn_: 0
            }
        );
    }

    #[test]
    fn arity_mismatch_and_unknown_action() {
        let d = sokoban();
        let short = ActionSchema::new("move", d.actions["move"].params[..2].to_vec());
        assert!(matches!(
            compare_action(&short, &d.actions["move"]),
            Err(EvalError::Arity { .. })
        ));
        let mut learned = d.signature();
        learned
            .actions
            .insert("jump".into(), ActionSchema::new("jump", vec![]));
        assert!(matches!(
            report(&learned, &d),
            Err(EvalError::UnknownAction(_))
        ));
    }

    #[test]
    fn json_has_one_record_per_action() {
        let d = sokoban();
        let mut learned = d.signature();
        learned
            .actions
            .insert("move".into(), d.actions["move"].clone());
        let json = report(&learned, &d).unwrap().to_json();
        assert_eq!(json.matches("\"action\"").count(), 3);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["actions"][0]["f1"], serde_json::Value::from(1.0));
        assert!(v["actions"][1]["f1"].is_null());
        assert_eq!(v["actions"][0]["fn"], 0);
    }

    fn arb_subset(truth: &ActionSchema) -> impl Strategy<Value = ActionSchema> {
        let t = truth.clone();
        let n = t.literal_count();
        prop::collection::vec(any::<bool>(), n).prop_map(move |keep| {
            let mut s = ActionSchema::new(t.name.clone(), t.params.clone());
            let mut k = keep.into_iter();
            s.pre_pos = t
                .pre_pos
                .iter()
                .filter(|_| k.next().unwrap())
                .cloned()
                .collect();
            s.pre_neg = t
                .pre_neg
                .iter()
                .filter(|_| k.next().unwrap())
                .cloned()
                .collect();
            s.eff_add = t
                .eff_add
                .iter()
                .filter(|_| k.next().unwrap())
                .cloned()
                .collect();
            s.eff_del = t
                .eff_del
                .iter()
                .filter(|_| k.next().unwrap())
                .cloned()
                .collect();
            s
        })
    }

    proptest! {
        #[test]
        fn adding_literals_is_monotone(learned in arb_subset(&sokoban().actions["push-to-goal"])) {
            let d = sokoban();
            let truth = &d.actions["push-to-goal"];
            let base = compare_action(&learned, truth).unwrap();
            prop_assert_eq!(base.tp + base.fn_, truth.literal_count());
            prop_assert_eq!(base.fp, 0);

            // a correct literal never lowers recall
            if let Some(missing) = truth.pre_pos.iter().find(|l| !learned.pre_pos.contains(*l)) {
                let mut more = learned.clone();
                more.pre_pos.insert(missing.clone());
                let c = compare_action(&more, truth).unwrap();
                prop_assert!(c.recall() >= base.recall());
            }
            // a wrong literal never raises precision
            let mut wrong = learned.clone();
            wrong.pre_pos.insert(LiftedAtom::lifted("is-goal", &["ppos"]));
            let c = compare_action(&wrong, truth).unwrap();
            prop_assert!(c.precision().unwrap_or(0.0) <= base.precision().unwrap_or(0.0) + 1e-12
                || base.precision().is_none());
        }
    }
}
