use proptest::prelude::*;

use aht_core::anticipation::{
    anticipate, build_prompt, prompt_quality, validate, AnticipationOptions, ContextFlags, Endpoint, PromptSections,
};
use aht_core::sim::{RoutineSource, TaskRoutine, WorldConfig};

#[test]
fn mock_quality_follows_the_prompt_sections() {
    let cfg = WorldConfig::shipped();
    let flags = ContextFlags::new(true, false, false);
    let partial = TaskRoutine::new(vec!["prepare_breakfast".into()], RoutineSource::Generator);
    let expected = [
        ((false, false), "no_prompting"),
        ((true, false), "few_shot_only"),
        ((false, true), "cot_only"),
        ((true, true), "good"),
    ];
    for ((few_shot, cot), quality) in expected {
        for persona in [false, true] {
            let sections = PromptSections { persona, few_shot, cot };
            let prompt = build_prompt(&cfg, &cfg.history, &flags, &partial, sections, 0).render();
            assert_eq!(prompt_quality(&prompt), quality, "{sections:?}");
        }
    }
}

#[test]
fn noisy_mock_is_worse_without_prompting_but_validation_repairs_it() {
    let cfg = WorldConfig::shipped();
    let ep = Endpoint::shipped_noisy_mock();
    let guests = cfg.day_type("guest_day").unwrap().flags.clone();
    let done = vec!["prepare_breakfast".to_string()];
    let raw = AnticipationOptions {
        sections: PromptSections::none(),
        validator: false,
        seed: 0,
    };
    let a = anticipate(&cfg, &ep, &guests, &done, None, &raw).unwrap();
    let b = anticipate(&cfg, &ep, &guests, &done, None, &AnticipationOptions::default()).unwrap();
    assert_ne!(a.routine.tasks, b.routine.tasks);
    assert_eq!(b.next.as_deref(), Some("prepare_activities"));
}

fn labels() -> Vec<String> {
    let mut l = WorldConfig::shipped().candidate_tasks();
    l.push("walk_the_dog".into());
    l
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn validation_is_idempotent_and_stays_in_the_candidates(
        picks in prop::collection::vec(0usize..64, 1..8),
        flags in 0u8..8,
    ) {
        let cfg = WorldConfig::shipped();
        let all = labels();
        let tasks: Vec<String> = picks.iter().map(|i| all[i % all.len()].clone()).collect();
        let ctx = ContextFlags::new(flags & 1 != 0, flags & 2 != 0, flags & 4 != 0);
        let Ok(rep) = validate(&TaskRoutine::new(tasks.clone(), RoutineSource::Llm), &ctx, &cfg) else {
            return Ok(());
        };
        let candidates = cfg.candidate_tasks();
        prop_assert!(rep.accepted.tasks.iter().all(|t| candidates.contains(t) && tasks.contains(t)));
        let again = validate(&rep.accepted, &ctx, &cfg).unwrap();
        prop_assert_eq!(&again.accepted.tasks, &rep.accepted.tasks);
        prop_assert!(again.removed.is_empty() && !again.reordered);
    }
}
