//! Experiment driver: variant policies, paired trials, ratio metrics,
//! teammate-model training and reports, plus the LLM-as-actor baseline.

mod actor;
mod experiment;
mod report;
mod training;

use thiserror::Error;

use crate::sim::SimError;

pub use actor::{
    check_action, mock_actor_completion, parse_action, render_action_prompt, LlmActor, FEASIBILITY_RULES,
    MAX_CORRECTIONS, RULES_HEADER,
};
pub use training::{collect_human_traces, train_library, TRAINING_TRACES};
pub use experiment::{
    run_experiment, variant_policy, ExpId, ExperimentConfig, Knobs, ResultsTable, TrialRow, Variant, VariantSummary,
};
pub use report::{summary_csv, text_table, trials_jsonl, write_report, SUMMARY_FILE, TABLE_FILE, TRIALS_FILE};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error("{0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
