use std::collections::BTreeMap;

use crate::anticipation::Endpoint;
use crate::behavior::{learn_ensemble, BehaviorEnsemble, TraceRecord, DEFAULT_DEPTH};
use crate::sim::{generate_tasks, run_episode, AgentHandle, EpisodeConfig, PolicyConfig, SimError, World};

/// Trace steps per stored teammate model.
pub const TRAINING_TRACES: usize = 1000;

/// Runs human + one robot episodes (robot without anticipation or
/// behavior models) over the day types in turn and returns the first
/// `count` human trace steps. Episode `i` uses seed `seed + i`.
pub fn collect_human_traces(world: &World, profile: &str, count: usize, seed: u64) -> Result<Vec<TraceRecord>, SimError> {
    if world.team().len() != 2 {
        return Err(SimError::Precondition("trace collection uses a human and one robot".into()));
    }
    let cfg = world.config();
    let day_types: Vec<&String> = cfg.day_types.keys().collect();
    let endpoint = Endpoint::shipped_mock();
    let library = BTreeMap::new();
    let policy = PolicyConfig {
        anticipation: false,
        behavior_models: false,
        ..PolicyConfig::default()
    };
    let team = [
        AgentHandle::human(&world.team()[0]),
        AgentHandle::adhoc(&world.team()[1], policy),
    ];
    let mut out = Vec::with_capacity(count);
    let mut i = 0u64;
    while out.len() < count {
        let dt = day_types[(i as usize) % day_types.len()];
        let flags = cfg.day_type(dt)?.flags.clone();
        let mut ec = EpisodeConfig::new(world, &endpoint, &library, flags);
        ec.human_profile = profile.to_string();
        ec.collect_traces = true;
        ec.episode_id = i;
        let routine = generate_tasks(cfg, dt, seed + i)?;
        let log = run_episode(&ec, &team, &routine, seed + i)?;
        if log.traces.is_empty() {
            return Err(SimError::Precondition("episode produced no traces".into()));
        }
        out.extend(log.traces);
        i += 1;
    }
    out.truncate(count);
    Ok(out)
}

/// Learns one ensemble per human profile from `count` trace steps each.
pub fn train_library(
    world: &World,
    profiles: &[&str],
    count: usize,
    seed: u64,
) -> Result<BTreeMap<String, BehaviorEnsemble>, SimError> {
    let mut lib = BTreeMap::new();
    for p in profiles {
        let traces = collect_human_traces(world, p, count, seed)?;
        let pairs: Vec<_> = traces.into_iter().map(|t| (t.cues, t.observed)).collect();
        let ens = learn_ensemble(&pairs, DEFAULT_DEPTH).map_err(|e| SimError::Precondition(e.to_string()))?;
        lib.insert(p.to_string(), ens);
    }
    Ok(lib)
}
