use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::anticipation::ContextFlags;
use crate::kernel::{Atom, Goal, Literal};
use crate::lang::{parse_domain, DomainDescription};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplianceSpec {
    /// Place the appliance stands at.
    pub at: String,
    #[serde(default)]
    pub container: bool,
    #[serde(default)]
    pub switchable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    /// Support (place or appliance) the item starts on.
    pub default: String,
    /// Other starting supports chosen by seeded variation.
    #[serde(default)]
    pub alternatives: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StartSpec {
    pub human: Vec<String>,
    pub robots: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub goal: Vec<String>,
    /// Alternatives of flag conditions; the task applies when any matches.
    /// Empty means always applicable.
    #[serde(default)]
    pub applicable: Vec<BTreeMap<String, bool>>,
}

/// `first` must come before `then` whenever the flags match `when`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityRule {
    pub first: String,
    pub then: String,
    #[serde(default)]
    pub when: BTreeMap<String, bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayType {
    pub flags: ContextFlags,
    pub template: Vec<String>,
}

/// A past day with the designer's explanation of its order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PastDay {
    pub day_type: String,
    pub routine: Vec<String>,
    pub explanation: String,
}

/// Preferences of a scripted human.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanProfile {
    /// Regions whose places are tried first among equal-length plans.
    #[serde(default)]
    pub preferred_regions: Vec<String>,
    /// Rest one step after every action.
    #[serde(default)]
    pub pause_after_action: bool,
    /// Close containers used for a task before considering it done.
    #[serde(default)]
    pub tidy: bool,
}

/// The shipped or user-supplied scenario: house layout, task library,
/// routine templates, few-shot material and human preferences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub name: String,
    pub regions: Vec<String>,
    /// place -> region
    pub places: BTreeMap<String, String>,
    pub adjacency: Vec<(String, String)>,
    pub appliances: BTreeMap<String, ApplianceSpec>,
    pub items: BTreeMap<String, ItemSpec>,
    pub human: String,
    pub robots: Vec<String>,
    pub start: StartSpec,
    pub tasks: BTreeMap<String, TaskSpec>,
    #[serde(default)]
    pub priorities: Vec<PriorityRule>,
    pub day_types: BTreeMap<String, DayType>,
    #[serde(default)]
    pub persona: String,
    #[serde(default)]
    pub objective: String,
    #[serde(default)]
    pub history: Vec<PastDay>,
    #[serde(default)]
    pub profiles: BTreeMap<String, HumanProfile>,
}

impl WorldConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: WorldConfig = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The scenario shipped with the crate.
    pub fn shipped() -> Self {
        Self::from_json(crate::data::SCENARIO).expect("shipped scenario is valid")
    }

    fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Config(m));
        for (p, r) in &self.places {
            if !self.regions.contains(r) {
                return err(format!("place `{p}` is in unknown region `{r}`"));
            }
        }
        for (a, b) in &self.adjacency {
            for p in [a, b] {
                if !self.places.contains_key(p) {
                    return err(format!("adjacency mentions unknown place `{p}`"));
                }
            }
        }
        if let Some(first) = self.places.keys().next() {
            let reached = self.distances_from(first);
            if reached.len() != self.places.len() {
                return err("adjacency graph is not connected".into());
            }
        }
        for (a, spec) in &self.appliances {
            if !self.places.contains_key(&spec.at) {
                return err(format!("appliance `{a}` stands at unknown place `{}`", spec.at));
            }
        }
        for (i, spec) in &self.items {
            for s in std::iter::once(&spec.default).chain(&spec.alternatives) {
                if !self.is_support(s) {
                    return err(format!("item `{i}` starts on unknown support `{s}`"));
                }
            }
        }
        for (label, t) in &self.tasks {
            for c in &t.goal {
                let lit: Literal = c.parse().map_err(|_| SimError::Config(format!("task `{label}`: bad conjunct `{c}`")))?;
                if let Some(bad) = lit.atom.args.iter().find(|a| !self.is_object(a)) {
                    return err(format!("task `{label}` mentions unknown object `{bad}`"));
                }
            }
        }
        for (d, t) in &self.day_types {
            if let Some(bad) = t.template.iter().find(|l| !self.tasks.contains_key(*l)) {
                return err(format!("day type `{d}` uses unknown task `{bad}`"));
            }
        }
        for p in self.start.human.iter().chain(&self.start.robots) {
            if !self.places.contains_key(p) {
                return err(format!("start place `{p}` is unknown"));
            }
        }
        if self.start.human.is_empty() || self.start.robots.is_empty() {
            return err("start places must be non-empty".into());
        }
        Ok(())
    }

    pub fn is_support(&self, s: &str) -> bool {
        self.places.contains_key(s) || self.appliances.contains_key(s)
    }

    fn is_object(&self, o: &str) -> bool {
        self.is_support(o)
            || self.items.contains_key(o)
            || self.regions.iter().any(|r| r == o)
            || o == self.human
            || self.robots.iter().any(|r| r == o)
    }

    /// Place hosting a support.
    pub fn place_of(&self, support: &str) -> Option<&str> {
        if let Some((p, _)) = self.places.get_key_value(support) {
            return Some(p);
        }
        self.appliances.get(support).map(|a| a.at.as_str())
    }

    pub fn region_of(&self, place: &str) -> Option<&str> {
        self.places.get(place).map(String::as_str)
    }

    pub fn neighbours(&self, place: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .adjacency
            .iter()
            .filter_map(|(a, b)| {
                if a == place {
                    Some(b.as_str())
                } else if b == place {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Hop distances from `place` to every reachable place.
    pub fn distances_from(&self, place: &str) -> BTreeMap<String, usize> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::from([(place.to_string(), 0)]);
        dist.insert(place.to_string(), 0);
        while let Some((p, d)) = queue.pop_front() {
            for n in self.neighbours(&p) {
                if !dist.contains_key(n) {
                    dist.insert(n.to_string(), d + 1);
                    queue.push_back((n.to_string(), d + 1));
                }
            }
        }
        dist
    }

    /// Task labels in the order offered to the completion model.
    pub fn candidate_tasks(&self) -> Vec<String> {
        self.tasks.keys().cloned().collect()
    }

    pub fn task_goal(&self, label: &str) -> Result<Goal, SimError> {
        let spec = self
            .tasks
            .get(label)
            .ok_or_else(|| SimError::Config(format!("unknown task `{label}`")))?;
        Ok(Goal::parse(label, &spec.goal)?)
    }

    pub fn applicable(&self, label: &str, flags: &ContextFlags) -> bool {
        match self.tasks.get(label) {
            None => false,
            Some(t) => t.applicable.is_empty() || t.applicable.iter().any(|c| flags.matches(c)),
        }
    }

    /// Items mentioned by a task's goal.
    pub fn task_items(&self, label: &str) -> BTreeSet<String> {
        let Some(t) = self.tasks.get(label) else {
            return BTreeSet::new();
        };
        t.goal
            .iter()
            .filter_map(|c| c.parse::<Literal>().ok())
            .flat_map(|l| l.atom.args)
            .filter(|a| self.items.contains_key(a))
            .collect()
    }

    pub fn day_type(&self, name: &str) -> Result<&DayType, SimError> {
        self.day_types
            .get(name)
            .ok_or_else(|| SimError::UnknownDayType(name.to_string()))
    }

    pub fn profile(&self, name: &str) -> Result<HumanProfile, SimError> {
        self.profiles
            .get(name)
            .cloned()
            .ok_or_else(|| SimError::Config(format!("unknown human profile `{name}`")))
    }

    /// Parses `domain_text` and adds this scenario's objects and static
    /// facts for the given ad hoc agents (the human is always included).
    pub fn build_domain(&self, domain_text: &str, robots: &[String]) -> Result<DomainDescription, SimError> {
        let mut d = parse_domain(domain_text)?;
        let mut objects: Vec<(&str, &str)> = Vec::new();
        objects.extend(self.regions.iter().map(|r| (r.as_str(), "region")));
        objects.extend(self.places.keys().map(|p| (p.as_str(), "place")));
        objects.extend(self.appliances.keys().map(|a| (a.as_str(), "appliance")));
        objects.extend(self.items.keys().map(|i| (i.as_str(), "item")));
        objects.push((self.human.as_str(), "human"));
        for r in robots {
            if !self.robots.contains(r) {
                return Err(SimError::Config(format!("unknown ad hoc agent `{r}`")));
            }
            objects.push((r.as_str(), "ad_hoc_agent"));
        }
        d.add_objects(objects)?;
        d.set_facts(self.facts())?;
        Ok(d)
    }

    fn facts(&self) -> Vec<Atom> {
        let mut facts = Vec::new();
        let mut region_edges = BTreeSet::new();
        for (p, r) in &self.places {
            facts.push(Atom::new("component", &[p, r]));
            facts.push(Atom::new("sup_at", &[p, p]));
        }
        for (a, b) in &self.adjacency {
            facts.push(Atom::new("next_to", &[a, b]));
            facts.push(Atom::new("next_to", &[b, a]));
            let (ra, rb) = (&self.places[a], &self.places[b]);
            if ra != rb {
                region_edges.insert((ra.clone(), rb.clone()));
                region_edges.insert((rb.clone(), ra.clone()));
            }
        }
        for (ra, rb) in &region_edges {
            facts.push(Atom::new("region_next", &[ra, rb]));
        }
        for (a, spec) in &self.appliances {
            facts.push(Atom::new("sup_at", &[a, &spec.at]));
            if spec.container {
                facts.push(Atom::new("container", &[a]));
            }
            if spec.switchable {
                facts.push(Atom::new("switchable", &[a]));
            }
        }
        facts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenario_loads_and_is_connected() {
        let cfg = WorldConfig::shipped();
        assert_eq!(cfg.regions.len(), 5);
        assert_eq!(cfg.places.len(), 12);
        assert_eq!(cfg.items.len(), 15);
        assert_eq!(cfg.appliances.len(), 5);
        assert_eq!(cfg.distances_from("bed").len(), 12);
        assert_eq!(cfg.distances_from("bed")["fridge_front"], 3);
    }

    #[test]
    fn disconnected_layout_is_rejected() {
        let mut cfg = WorldConfig::shipped();
        cfg.adjacency.retain(|(a, b)| a != "kitchen_counter" || b != "wine_rack");
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(matches!(WorldConfig::from_json(&text), Err(SimError::Config(m)) if m.contains("connected")));
    }

    #[test]
    fn applicability_follows_flags() {
        let cfg = WorldConfig::shipped();
        let office = ContextFlags::new(true, true, false);
        let wfh = ContextFlags::new(true, false, false);
        assert!(cfg.applicable("pack_bag", &office));
        assert!(!cfg.applicable("pack_bag", &wfh));
        assert!(cfg.applicable("prepare_breakfast", &wfh));
        assert!(cfg.applicable("prepare_activities", &ContextFlags::new(false, false, false)));
    }

    #[test]
    fn domain_for_a_team_grounds_cleanly() {
        let cfg = WorldConfig::shipped();
        let d = cfg.build_domain(crate::data::HOUSE_DOMAIN, &["robot1".into()]).unwrap();
        assert_eq!(d.component_map.len(), 12);
        assert!(cfg.build_domain(crate::data::HOUSE_DOMAIN, &["robot9".into()]).is_err());
    }
}
