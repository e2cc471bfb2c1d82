use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::training::{train_library, TRAINING_TRACES};
use super::HarnessError;
use crate::anticipation::{Endpoint, PromptSections};
use crate::behavior::BehaviorEnsemble;
use crate::data;
use crate::sim::{generate_tasks, run_episode, AgentHandle, EpisodeConfig, PolicyConfig, World, WorldConfig};

/// Training episodes are seeded from here upwards so they never share a
/// seed with the trials of an experiment.
const TRAINING_SEED_OFFSET: u64 = 1_000_000;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpId {
    Exp1,
    Scalability,
    Exp2,
    Exp3,
}

impl ExpId {
    /// Variants compared by default; the first is the reference.
    pub fn default_variants(self) -> &'static [&'static str] {
        match self {
            ExpId::Exp1 => &["ours", "base1", "base2", "base3"],
            ExpId::Scalability => &["team1", "team2", "team3"],
            ExpId::Exp2 => &["ours", "base4", "base5", "base6", "base7"],
            ExpId::Exp3 => &["ours", "base8"],
        }
    }

    pub fn default_trials(self) -> usize {
        match self {
            ExpId::Exp1 | ExpId::Scalability => 30,
            ExpId::Exp2 | ExpId::Exp3 => 20,
        }
    }

    /// Exp2 and Exp3 compare prompt quality, so they use the noisy mock.
    pub fn default_endpoint(self) -> Endpoint {
        match self {
            ExpId::Exp1 | ExpId::Scalability => Endpoint::shipped_mock(),
            ExpId::Exp2 | ExpId::Exp3 => Endpoint::shipped_noisy_mock(),
        }
    }
}

impl fmt::Display for ExpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpId::Exp1 => "exp1",
            ExpId::Scalability => "scalability",
            ExpId::Exp2 => "exp2",
            ExpId::Exp3 => "exp3",
        })
    }
}

impl FromStr for ExpId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exp1" => Ok(ExpId::Exp1),
            "scalability" => Ok(ExpId::Scalability),
            "exp2" => Ok(ExpId::Exp2),
            "exp3" => Ok(ExpId::Exp3),
            other => Err(HarnessError::Config(format!("unknown experiment `{other}`"))),
        }
    }
}

/// Tunables shared by every variant of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knobs {
    pub k: usize,
    pub theta: f64,
    pub window: usize,
    pub horizon: usize,
    pub step_cap: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        let p = PolicyConfig::default();
        Knobs {
            k: p.k,
            theta: p.theta,
            window: p.window,
            horizon: p.horizon,
            step_cap: crate::sim::DEFAULT_STEP_CAP,
        }
    }
}

/// A named team configuration: the robots' policy and how many there are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub policy: PolicyConfig,
    pub robots: usize,
}

/// Component switches for a named variant.
pub fn variant_policy(name: &str, knobs: &Knobs) -> Result<Variant, HarnessError> {
    let full = PolicyConfig {
        k: knobs.k,
        theta: knobs.theta,
        window: knobs.window,
        horizon: knobs.horizon,
        ..PolicyConfig::default()
    };
    let none = PromptSections::none();
    let (policy, robots) = match name {
        "ours" | "team1" => (full, 1),
        "team2" => (full, 2),
        "team3" => (full, 3),
        "base1" => (PolicyConfig { behavior_models: false, ..full }, 1),
        "base2" => (PolicyConfig { anticipation: false, ..full }, 1),
        "base3" => (
            PolicyConfig {
                anticipation: false,
                behavior_models: false,
                ..full
            },
            1,
        ),
        "base4" => (
            PolicyConfig {
                sections: none,
                validator: false,
                ..full
            },
            1,
        ),
        "base5" => (
            PolicyConfig {
                sections: PromptSections { few_shot: true, ..none },
                validator: false,
                ..full
            },
            1,
        ),
        "base6" => (
            PolicyConfig {
                sections: PromptSections { cot: true, ..none },
                validator: false,
                ..full
            },
            1,
        ),
        "base7" => (PolicyConfig { sections: none, ..full }, 1),
        "base8" => (
            PolicyConfig {
                llm_actor: true,
                anticipation: false,
                behavior_models: false,
                ..full
            },
            1,
        ),
        other => return Err(HarnessError::UnknownVariant(other.to_string())),
    };
    Ok(Variant {
        name: name.to_string(),
        policy,
        robots,
    })
}

pub struct ExperimentConfig {
    pub exp: ExpId,
    /// Variant names; the first is the reference for ratios.
    pub variants: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    pub endpoint: Endpoint,
    pub knobs: Knobs,
    pub scenario: Arc<WorldConfig>,
    pub domain: String,
    /// Profile of the scripted human in every trial.
    pub human_profile: String,
    /// Trace steps per stored teammate model.
    pub training_traces: usize,
    /// Stored teammate models to use instead of training them first.
    pub library: Option<BTreeMap<String, BehaviorEnsemble>>,
}

impl ExperimentConfig {
    /// Desk-scale defaults on the shipped scenario and domain.
    pub fn new(exp: ExpId) -> Self {
        ExperimentConfig {
            exp,
            variants: exp.default_variants().iter().map(|s| s.to_string()).collect(),
            trials: exp.default_trials(),
            seed: 0,
            endpoint: exp.default_endpoint(),
            knobs: Knobs::default(),
            scenario: Arc::new(WorldConfig::shipped()),
            domain: data::HOUSE_DOMAIN.to_string(),
            human_profile: "default".into(),
            training_traces: TRAINING_TRACES,
            library: None,
        }
    }

    fn check(&self) -> Result<Vec<Variant>, HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be positive".into()));
        }
        if self.variants.is_empty() {
            return Err(HarnessError::Config("no variants".into()));
        }
        if self.knobs.step_cap == 0 || self.knobs.k == 0 || self.knobs.window == 0 {
            return Err(HarnessError::Config("step cap, k and window must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.knobs.theta) {
            return Err(HarnessError::Config(format!("theta {} is outside [0, 1]", self.knobs.theta)));
        }
        if self.scenario.day_types.is_empty() {
            return Err(HarnessError::Config("the scenario has no day types".into()));
        }
        self.scenario.profile(&self.human_profile)?;
        let variants = self
            .variants
            .iter()
            .map(|v| variant_policy(v, &self.knobs))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(v) = variants.iter().find(|v| v.robots > self.scenario.robots.len()) {
            return Err(HarnessError::Config(format!(
                "variant {} needs {} robots, the scenario has {}",
                v.name,
                v.robots,
                self.scenario.robots.len()
            )));
        }
        Ok(variants)
    }
}

/// One episode of one variant in one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub day_type: String,
    pub routine: Vec<String>,
    pub initial_digest: String,
    pub variant: String,
    pub steps: usize,
    pub wall_time: f64,
    pub conflicts: usize,
    pub failed: bool,
    pub llm_corrections: usize,
    pub step_ratio: f64,
    pub time_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub step_ratio: f64,
    pub time_ratio: f64,
    pub abs_steps: f64,
    pub abs_time: f64,
    pub failures: usize,
    pub conflicts: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub exp: ExpId,
    pub reference: String,
    pub summary: Vec<VariantSummary>,
    pub trials: Vec<TrialRow>,
}

impl ResultsTable {
    pub fn variant(&self, name: &str) -> Option<&VariantSummary> {
        self.summary.iter().find(|s| s.variant == name)
    }
}

/// Runs every variant on the same routine and seed in each trial and
/// reports each measure as a fraction of the reference variant's. Trial
/// `i` uses seed `seed + i` and the day types in turn. Episodes that hit
/// the step cap are counted, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable, HarnessError> {
    let variants = cfg.check()?;
    let mut worlds: BTreeMap<usize, World> = BTreeMap::new();
    for v in &variants {
        if let std::collections::btree_map::Entry::Vacant(e) = worlds.entry(v.robots) {
            let robots = cfg.scenario.robots[..v.robots].to_vec();
            e.insert(World::new(cfg.scenario.clone(), &cfg.domain, &robots)?);
        }
    }
    let library = match &cfg.library {
        Some(lib) => lib.clone(),
        None if variants.iter().any(|v| v.policy.behavior_models) => train_models(cfg)?,
        None => BTreeMap::new(),
    };
    let day_types: Vec<&String> = cfg.scenario.day_types.keys().collect();
    let mut trials = Vec::with_capacity(cfg.trials * variants.len());
    for trial in 0..cfg.trials {
        let seed = cfg.seed.wrapping_add(trial as u64);
        let dt = day_types[trial % day_types.len()];
        let flags = cfg.scenario.day_type(dt)?.flags.clone();
        let routine = generate_tasks(&cfg.scenario, dt, seed)?;
        let mut rows: Vec<TrialRow> = Vec::with_capacity(variants.len());
        for v in &variants {
            let world = &worlds[&v.robots];
            let mut ec = EpisodeConfig::new(world, &cfg.endpoint, &library, flags.clone());
            ec.human_profile = cfg.human_profile.clone();
            ec.step_cap = cfg.knobs.step_cap;
            ec.episode_id = trial as u64;
            let team: Vec<AgentHandle> = std::iter::once(AgentHandle::human(&world.team()[0]))
                .chain(world.team()[1..].iter().map(|r| AgentHandle::adhoc(r, v.policy.clone())))
                .collect();
            let log = run_episode(&ec, &team, &routine, seed)?;
            if log.failed {
                log::warn!("trial {trial}: {} reached the step cap", v.name);
            }
            rows.push(TrialRow {
                trial,
                seed,
                day_type: dt.clone(),
                routine: log.routine.clone(),
                initial_digest: log.initial_digest.clone(),
                variant: v.name.clone(),
                steps: log.steps_taken,
                wall_time: log.wall_time,
                conflicts: log.conflicts,
                failed: log.failed,
                llm_corrections: log.llm_corrections,
                step_ratio: 1.0,
                time_ratio: 1.0,
            });
        }
        let (ref_steps, ref_time) = (rows[0].steps.max(1) as f64, rows[0].wall_time.max(1e-9));
        for r in &mut rows[1..] {
            r.step_ratio = r.steps.max(1) as f64 / ref_steps;
            r.time_ratio = r.wall_time.max(1e-9) / ref_time;
        }
        trials.extend(rows);
    }
    let n = cfg.trials as f64;
    let summary = variants
        .iter()
        .map(|v| {
            let rows: Vec<&TrialRow> = trials.iter().filter(|r| r.variant == v.name).collect();
            let mean = |f: &dyn Fn(&TrialRow) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            VariantSummary {
                variant: v.name.clone(),
                step_ratio: mean(&|r| r.step_ratio),
                time_ratio: mean(&|r| r.time_ratio),
                abs_steps: mean(&|r| r.steps as f64),
                abs_time: mean(&|r| r.wall_time),
                failures: rows.iter().filter(|r| r.failed).count(),
                conflicts: mean(&|r| r.conflicts as f64),
            }
        })
        .collect();
    Ok(ResultsTable {
        exp: cfg.exp,
        reference: variants[0].name.clone(),
        summary,
        trials,
    })
}

/// One ensemble per human profile of the scenario, each learned from
/// human + one robot episodes.
fn train_models(cfg: &ExperimentConfig) -> Result<BTreeMap<String, BehaviorEnsemble>, HarnessError> {
    let world = World::new(cfg.scenario.clone(), &cfg.domain, &cfg.scenario.robots[..1])?;
    let profiles: Vec<&str> = cfg.scenario.profiles.keys().map(String::as_str).collect();
    Ok(train_library(
        &world,
        &profiles,
        cfg.training_traces,
        cfg.seed.wrapping_add(TRAINING_SEED_OFFSET),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_variants_switch_components() {
        let k = Knobs::default();
        let b2 = variant_policy("base2", &k).unwrap().policy;
        assert!(!b2.anticipation && b2.behavior_models);
        let b3 = variant_policy("base3", &k).unwrap().policy;
        assert!(!b3.anticipation && !b3.behavior_models);
        let ours = variant_policy("ours", &k).unwrap().policy;
        assert!(ours.anticipation && ours.behavior_models && ours.validator);
        assert_eq!(ours.sections, PromptSections::full());
        let b7 = variant_policy("base7", &k).unwrap().policy;
        assert!(b7.validator && b7.sections == PromptSections::none());
        assert_eq!(variant_policy("team3", &k).unwrap().robots, 3);
        assert!(matches!(variant_policy("base9", &k), Err(HarnessError::UnknownVariant(_))));
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let mut cfg = ExperimentConfig::new(ExpId::Exp1);
        cfg.trials = 0;
        assert!(matches!(run_experiment(&cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn exp_ids_round_trip() {
        for e in [ExpId::Exp1, ExpId::Scalability, ExpId::Exp2, ExpId::Exp3] {
            assert_eq!(e.to_string().parse::<ExpId>().unwrap(), e);
        }
        assert!("exp4".parse::<ExpId>().is_err());
    }
}
