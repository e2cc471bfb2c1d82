use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Day-level context: the three flags used as cues and prompt context,
/// plus free-form extras.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextFlags {
    pub weekday: bool,
    pub going_to_office: bool,
    pub guests_expected: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl ContextFlags {
    pub fn new(weekday: bool, going_to_office: bool, guests_expected: bool) -> Self {
        ContextFlags {
            weekday,
            going_to_office,
            guests_expected,
            extras: BTreeMap::new(),
        }
    }

    /// Value of a named boolean flag; extras parse "true"/"false".
    pub fn get(&self, name: &str) -> Option<bool> {
        match name {
            "weekday" => Some(self.weekday),
            "going_to_office" => Some(self.going_to_office),
            "guests_expected" => Some(self.guests_expected),
            other => self.extras.get(other).and_then(|v| v.parse().ok()),
        }
    }

    /// True when every listed flag has the given value.
    pub fn matches(&self, cond: &BTreeMap<String, bool>) -> bool {
        cond.iter().all(|(k, v)| self.get(k) == Some(*v))
    }

    pub fn tuple(&self) -> (bool, bool, bool) {
        (self.weekday, self.going_to_office, self.guests_expected)
    }
}

impl fmt::Display for ContextFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "weekday={}, going_to_office={}, guests_expected={}",
            self.weekday, self.going_to_office, self.guests_expected
        )
    }
}
