//! Domain and scenario files shipped with the crate.

/// Household domain (coarse and fine resolution, no objects).
pub const HOUSE_DOMAIN: &str = include_str!("../data/house.ald");
/// Two-room kitchen used in planner examples.
pub const MICRO_DOMAIN: &str = include_str!("../data/micro.ald");
/// Library domain with a retractable default book location.
pub const LIBRARY_DOMAIN: &str = include_str!("../data/library.ald");
/// Shipped household scenario (layout, tasks, day types, few-shot material).
pub const SCENARIO: &str = include_str!("../data/scenario.json");
/// Completion table for the mock and noisy-mock endpoints.
pub const MOCK_LLM: &str = include_str!("../data/mock_llm.json");
