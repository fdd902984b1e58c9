pub mod evaluation;
pub mod learner;
pub mod pddl;
pub mod sexpr;
pub mod simulator;
pub mod trace;
