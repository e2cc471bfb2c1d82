use std::sync::Arc;

use aht_core::behavior::{learn_ensemble, read_traces, write_traces, BehaviorEnsemble, DEFAULT_DEPTH};
use aht_core::data::HOUSE_DOMAIN;
use aht_core::harness::collect_human_traces;
use aht_core::sim::{World, WorldConfig};

fn world() -> World {
    World::new(Arc::new(WorldConfig::shipped()), HOUSE_DOMAIN, &["robot1".to_string()]).unwrap()
}

#[test]
fn traces_round_trip_through_text() {
    let traces = collect_human_traces(&world(), "default", 200, 7).unwrap();
    assert_eq!(traces.len(), 200);
    let back = read_traces(&write_traces(&traces)).unwrap();
    assert_eq!(back, traces);
}

#[test]
fn trace_collection_is_seeded() {
    let w = world();
    let a = collect_human_traces(&w, "tidy", 150, 3).unwrap();
    let b = collect_human_traces(&w, "tidy", 150, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn stored_models_predict_like_the_original() {
    let traces = collect_human_traces(&world(), "default", 400, 11).unwrap();
    let pairs: Vec<_> = traces.into_iter().map(|t| (t.cues, t.observed)).collect();
    let model = learn_ensemble(&pairs, DEFAULT_DEPTH).unwrap();
    let json = serde_json::to_string(&model).unwrap();
    let back: BehaviorEnsemble = serde_json::from_str(&json).unwrap();
    for (cues, _) in &pairs {
        assert_eq!(model.predict_family(cues), back.predict_family(cues));
    }
    assert!(model.accuracy(&pairs) > 0.9);
}
