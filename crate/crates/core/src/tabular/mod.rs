//! Masked TD(0) learning on finite MDPs, plus the masked Bellman operator and
//! value-iteration oracle used to check contraction and convergence.

mod learners;
mod mdp;
mod theory;

pub use learners::{
    masked_expected_sarsa_step, masked_q_step, masked_sarsa_step, run_tabular_training, LearningSchedule,
    QTable, TabularRun, TabularRunConfig, TdAlgorithm, TdSample, TracePoint,
};
pub use mdp::{random_mdp, Outcome, RandomMdpSpec, TabularMdp};
pub use theory::{
    bellman_operator_h, contraction_sample, convergence_schedule, run_contraction_suite, run_convergence_suite, sup_distance,
    value_iteration_oracle, ContractionRow, ContractionSample, ConvergenceRow, ScalarQ, CONVERGENCE_SPEC,
    SUITE_GAMMAS,
};
