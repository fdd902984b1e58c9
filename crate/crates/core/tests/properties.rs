use blackout_core::learner;
use blackout_core::pddl::{parse_domain, Domain, Problem};
use blackout_core::simulator::{self, Direction};
use blackout_core::trace::{parse_trace, strip_failures, write_trace};
use proptest::prelude::*;

const LEVEL: &str = "\
#######
#.@ $ #
# $   #
#.    #
#######
";

fn setup() -> (Domain, Problem) {
    let d = parse_domain(include_str!("../../../data/sokoban/domain.pddl")).unwrap();
    let p = simulator::compile_level(&simulator::parse_level(LEVEL).unwrap());
    (d, p)
}

fn moves() -> impl Strategy<Value = Vec<Direction>> {
    prop::collection::vec(prop::sample::select(Direction::ALL.to_vec()), 0..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_play_round_trips(ms in moves()) {
        let (d, p) = setup();
        let t = simulator::play(&p, &d, &ms).unwrap();
        prop_assert_eq!(t.len(), ms.len());
        let parsed = parse_trace(&write_trace(&t), &d).unwrap();
        prop_assert_eq!(&parsed, &t);
    }

    #[test]
    fn stripping_is_idempotent(ms in moves()) {
        let (d, p) = setup();
        let t = simulator::play(&p, &d, &ms).unwrap();
        let once = strip_failures(&t);
        prop_assert_eq!(strip_failures(&once), once.clone());
        prop_assert_eq!(once.current(), t.current());
        prop_assert_eq!(once.len(), t.len() - t.failures());
    }

    // Learned effects are never wrong: whatever was observed, each learned
    // add/delete is in the true schema.
    #[test]
    fn learned_effects_are_sound(ms in moves()) {
        let (d, p) = setup();
        let t = simulator::play(&p, &d, &ms).unwrap();
        let model = learner::learn(&[t], &d).unwrap();
        for (name, a) in &model.actions {
            let truth = d.action(name).unwrap();
            prop_assert!(a.eff_add.is_subset(&truth.eff_add));
            prop_assert!(a.eff_del.is_subset(&truth.eff_del));
            prop_assert!(truth.pre_pos.is_subset(&a.candidates_pos));
        }
    }

    // The stage-1 model reproduces every successful step it was learned
    // from when the model is used as a simulator.
    #[test]
    fn stage_one_model_replays_successes(ms in moves()) {
        let (d, p) = setup();
        let t = simulator::play(&p, &d, &ms).unwrap();
        let out = learner::learn_stages(std::slice::from_ref(&t), &d).unwrap();
        let model = out.stage1.to_domain(&d);
        for tr in t.transitions.iter().filter(|tr| tr.is_ok()) {
            let r = simulator::step(&tr.pre, &tr.action, &model).unwrap();
            prop_assert_eq!(r, simulator::ExecutionResult::Ok(tr.post.as_ref().clone()));
        }
    }
}
