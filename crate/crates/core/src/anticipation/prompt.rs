use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ContextFlags;
use crate::sim::{PastDay, TaskRoutine, WorldConfig};

pub const SYSTEM_HEADER: &str = "## System message";
pub const EXAMPLES_HEADER: &str = "## Examples";
pub const REASONING_HEADER: &str = "## Reasoning";
pub const QUERY_HEADER: &str = "## Query";

/// Number of few-shot examples by default.
pub const FEW_SHOT_EXAMPLES: usize = 2;

/// Which prompt-engineering sections are included.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptSections {
    pub persona: bool,
    pub few_shot: bool,
    pub cot: bool,
}

impl PromptSections {
    pub fn full() -> Self {
        PromptSections {
            persona: true,
            few_shot: true,
            cot: true,
        }
    }

    pub fn none() -> Self {
        PromptSections {
            persona: false,
            few_shot: false,
            cot: false,
        }
    }
}

/// A past routine shown as a worked example, cut after `completed` tasks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub context: ContextFlags,
    pub routine: Vec<String>,
    pub completed: usize,
    pub explanation: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub system_message: String,
    pub few_shot: Vec<FewShot>,
    pub query: TaskRoutine,
    pub context: ContextFlags,
    pub candidate_tasks: Vec<String>,
    pub sections: PromptSections,
    /// Set when fewer few-shot examples were available than requested.
    pub warning: Option<String>,
}

/// System and user text sent to a completion endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

pub(crate) fn render_tasks(tasks: &[String]) -> String {
    if tasks.is_empty() {
        "(none)".into()
    } else {
        tasks.join(", ")
    }
}

/// Builds the prompt. The seed picks which past days serve as examples.
pub fn build_prompt(
    config: &WorldConfig,
    history: &[PastDay],
    context: &ContextFlags,
    partial: &TaskRoutine,
    sections: PromptSections,
    seed: u64,
) -> PromptSpec {
    let mut system_message = String::new();
    if sections.persona {
        system_message.push_str(&config.persona);
        system_message.push(' ');
    }
    system_message.push_str(&config.objective);
    let mut few_shot = Vec::new();
    let mut warning = None;
    if sections.few_shot {
        let mut idx: Vec<usize> = (0..history.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for i in idx.into_iter().take(FEW_SHOT_EXAMPLES) {
            let day = &history[i];
            let Some(t) = config.day_types.get(&day.day_type) else { continue };
            few_shot.push(FewShot {
                context: t.flags.clone(),
                routine: day.routine.clone(),
                completed: 2.min(day.routine.len()),
                explanation: sections.cot.then(|| day.explanation.clone()),
            });
        }
        if few_shot.len() < FEW_SHOT_EXAMPLES {
            warning = Some(format!(
                "only {} of {FEW_SHOT_EXAMPLES} few-shot examples available",
                few_shot.len()
            ));
        }
    }
    PromptSpec {
        system_message,
        few_shot,
        query: partial.clone(),
        context: context.clone(),
        candidate_tasks: config.candidate_tasks(),
        sections,
        warning,
    }
}

impl PromptSpec {
    pub fn render(&self) -> RenderedPrompt {
        let system = format!("{SYSTEM_HEADER}\n{}", self.system_message);
        let mut user = String::new();
        if !self.few_shot.is_empty() {
            user.push_str(EXAMPLES_HEADER);
            user.push('\n');
            for (i, ex) in self.few_shot.iter().enumerate() {
                user.push_str(&format!(
                    "Example {}:\nContext: {}\nCompleted tasks: {}\n",
                    i + 1,
                    ex.context,
                    render_tasks(&ex.routine[..ex.completed])
                ));
                if let Some(e) = &ex.explanation {
                    user.push_str(&format!("Explanation: {e}\n"));
                }
                user.push_str(&format!("Routine: {}\n\n", render_tasks(&ex.routine)));
            }
        }
        if self.sections.cot {
            user.push_str(REASONING_HEADER);
            user.push_str(
                "\nThink step by step about the context and the tasks already done, explain the order, \
                 then give the routine on a final line starting with `Routine:`.\n\n",
            );
        }
        user.push_str(QUERY_HEADER);
        user.push('\n');
        user.push_str(&format!("Candidate tasks: {}\n", render_tasks(&self.candidate_tasks)));
        user.push_str(&format!("Context: {}\n", self.context));
        user.push_str(&format!("Completed tasks: {}\n", render_tasks(self.query.done())));
        user.push_str("Routine:");
        RenderedPrompt { system, user }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::RoutineSource;

    fn wfh_partial() -> TaskRoutine {
        TaskRoutine {
            tasks: vec!["prepare_breakfast".into()],
            completed: 1,
            source: RoutineSource::Generator,
        }
    }

    #[test]
    fn full_prompt_has_every_section() {
        let cfg = WorldConfig::shipped();
        let ctx = ContextFlags::new(true, false, false);
        let p = build_prompt(&cfg, &cfg.history, &ctx, &wfh_partial(), PromptSections::full(), 1);
        assert_eq!(p.few_shot.len(), 2);
        assert!(p.warning.is_none());
        let text = p.render().text();
        for h in [SYSTEM_HEADER, EXAMPLES_HEADER, REASONING_HEADER, QUERY_HEADER] {
            assert!(text.contains(h), "missing {h}");
        }
        assert!(text.contains("Candidate tasks: clean_kitchen, pack_bag"));
        assert_eq!(text.matches("Explanation:").count(), 2);
    }

    #[test]
    fn empty_history_degrades_with_a_warning() {
        let cfg = WorldConfig::shipped();
        let ctx = ContextFlags::new(true, false, false);
        let p = build_prompt(&cfg, &[], &ctx, &wfh_partial(), PromptSections::full(), 1);
        assert!(p.few_shot.is_empty());
        assert!(p.warning.is_some());
        assert!(!p.render().text().contains(EXAMPLES_HEADER));
    }

    #[test]
    fn same_seed_gives_identical_text() {
        let cfg = WorldConfig::shipped();
        let ctx = ContextFlags::new(false, false, true);
        let a = build_prompt(&cfg, &cfg.history, &ctx, &wfh_partial(), PromptSections::full(), 9);
        let b = build_prompt(&cfg, &cfg.history, &ctx, &wfh_partial(), PromptSections::full(), 9);
        assert_eq!(a.render().text(), b.render().text());
    }
}
