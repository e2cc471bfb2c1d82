use serde::{Deserialize, Serialize};

use super::{SimError, WorldConfig};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutineSource {
    Generator,
    Llm,
    Validated,
}

/// An ordered list of task labels, of which the first `completed` are done.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRoutine {
    pub tasks: Vec<String>,
    pub completed: usize,
    pub source: RoutineSource,
}

impl TaskRoutine {
    pub fn new(tasks: Vec<String>, source: RoutineSource) -> Self {
        TaskRoutine {
            tasks,
            completed: 0,
            source,
        }
    }

    pub fn done(&self) -> &[String] {
        &self.tasks[..self.completed.min(self.tasks.len())]
    }

    pub fn next(&self) -> Option<&str> {
        self.tasks.get(self.completed).map(String::as_str)
    }
}

/// The routine the generator dispatches for a day type. The order comes
/// from the template; seeded variation lives in the starting state (see
/// `World::initial_state`), so the seed is accepted for interface symmetry
/// and does not change the order.
pub fn generate_tasks(config: &WorldConfig, day_type: &str, _seed: u64) -> Result<TaskRoutine, SimError> {
    let t = config.day_type(day_type)?;
    Ok(TaskRoutine::new(t.template.clone(), RoutineSource::Generator))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_produce_the_expected_routines() {
        let cfg = WorldConfig::shipped();
        let r = generate_tasks(&cfg, "weekday_wfh", 3).unwrap();
        assert_eq!(
            r.tasks,
            ["prepare_breakfast", "prepare_home_workstation", "prepare_coffee", "prepare_lunch"]
        );
        let g = generate_tasks(&cfg, "guest_day", 3).unwrap();
        assert!(g.tasks.contains(&"prepare_activities".to_string()));
        assert!(g.tasks.contains(&"serve_snacks".to_string()));
        assert_eq!(generate_tasks(&cfg, "guest_day", 9).unwrap(), generate_tasks(&cfg, "guest_day", 9).unwrap());
        assert!(matches!(generate_tasks(&cfg, "holiday", 0), Err(SimError::UnknownDayType(_))));
    }
}
