//! Task anticipation: prompt building, completion endpoints, routine
//! parsing and validation against the scenario's domain knowledge.

mod endpoint;
mod flags;
mod prompt;
mod routine;

pub use endpoint::{
    prompt_quality, CompletionRequest, CompletionResponse, Endpoint, MockRecord, MockTable, API_KEY_ENV,
    DEFAULT_MODEL, DEFAULT_RETRIES, DEFAULT_TIMEOUT, MODEL_ENV,
};
pub use flags::ContextFlags;
pub use prompt::{
    build_prompt, FewShot, PromptSections, PromptSpec, RenderedPrompt, EXAMPLES_HEADER, FEW_SHOT_EXAMPLES,
    QUERY_HEADER, REASONING_HEADER, SYSTEM_HEADER,
};
pub use routine::{
    next_after, parse_routine, validate, ValidationReport, REASON_DUPLICATE, REASON_NOT_APPLICABLE, REASON_UNKNOWN,
};

use serde::{Deserialize, Serialize};

use crate::sim::{RoutineSource, TaskRoutine, WorldConfig};

#[derive(Debug, thiserror::Error)]
pub enum AnticipationError {
    #[error("endpoint timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("endpoint unreachable after {attempts} attempts: {msg}")]
    Unreachable { attempts: u32, msg: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("mock has no `{quality}` completion for flags {flags:?} and prefix {prefix:?}")]
    MockKeyMissing {
        quality: String,
        flags: [bool; 3],
        prefix: Vec<String>,
    },
    #[error("no candidate task recognised in the completion")]
    EmptyParse,
    #[error("no task left after validation")]
    EmptyAfterValidation,
    #[error("endpoint: {0}")]
    Endpoint(String),
}

/// Prompt and validation switches for one anticipating agent.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnticipationOptions {
    pub sections: PromptSections,
    pub validator: bool,
    pub seed: u64,
}

impl Default for AnticipationOptions {
    fn default() -> Self {
        AnticipationOptions {
            sections: PromptSections::full(),
            validator: true,
            seed: 0,
        }
    }
}

/// Result of one anticipation query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anticipation {
    pub next: Option<String>,
    pub raw: String,
    pub routine: TaskRoutine,
    pub report: Option<ValidationReport>,
}

/// Builds the prompt for the day so far, queries the endpoint, parses and
/// (optionally) validates the routine, and picks the task expected after
/// `current`. The current task is shown to the model as already started.
pub fn anticipate(
    config: &WorldConfig,
    endpoint: &Endpoint,
    context: &ContextFlags,
    done: &[String],
    current: Option<&str>,
    opts: &AnticipationOptions,
) -> Result<Anticipation, AnticipationError> {
    let mut known: Vec<String> = done.to_vec();
    known.extend(current.map(str::to_string));
    let partial = TaskRoutine {
        completed: known.len(),
        tasks: known,
        source: RoutineSource::Generator,
    };
    let spec = build_prompt(config, &config.history, context, &partial, opts.sections, opts.seed);
    if let Some(w) = &spec.warning {
        log::warn!("{w}");
    }
    let raw = endpoint.complete(&spec.render())?;
    let parsed = parse_routine(&raw, &spec.candidate_tasks)?;
    let (routine, report) = if opts.validator {
        let rep = validate(&parsed, context, config)?;
        (rep.accepted.clone(), Some(rep))
    } else {
        (parsed, None)
    };
    let next = next_after(&routine.tasks, done, current);
    Ok(Anticipation {
        next,
        raw,
        routine,
        report,
    })
}
