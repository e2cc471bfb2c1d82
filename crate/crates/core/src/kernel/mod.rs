//! Vocabulary and state semantics: sorts, atoms, literals, states, goals,
//! histories, and the closure that decides what holds in a state.

mod atoms;
mod closure;
mod goal;
mod history;
mod sorts;
mod state;

pub use atoms::{
    Action, ActionDecl, ActorKind, Atom, AtomId, FluentDecl, FluentKind, GroundLit, Literal, Universe,
};
pub use closure::{close_state, ConstraintSet, GroundRule, PartialState};
pub use goal::{goal_satisfied, Goal};
pub use history::{HistoryEntry, HistoryRecord};
pub use sorts::{SortId, SortTree};
pub use state::{holds, Bits, State};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("sort `{0}` declared twice")]
    DuplicateSort(String),
    #[error("object `{object}` declared in both `{first}` and `{second}`")]
    ObjectSortClash {
        object: String,
        first: String,
        second: String,
    },
    #[error("malformed atom `{0}`")]
    MalformedAtom(String),
    #[error("atom `{0}` is not in the state's universe")]
    UniverseMismatch(String),
    #[error("inconsistent state: constraint `{0}` is violated")]
    InconsistentState(String),
    #[error("constraint orders disagree on the closure (at `{0}`); the domain is ill-formed")]
    NonUniqueFixpoint(String),
    #[error("partial assignment leaves `{0}` unassigned")]
    IncompleteAssignment(String),
    #[error("defined fluent appears with a negative head: `{0}`")]
    NegativeDefinedHead(String),
    #[error("defined fluent `{0}` depends negatively on itself")]
    Unstratified(String),
    #[error("goal `{0}` has no conjuncts")]
    EmptyGoal(String),
    #[error("history entries are not sorted by step")]
    UnsortedHistory,
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn lit(s: &str) -> Literal {
        s.parse().unwrap()
    }

    /// Coarse universe: robot at {kitchen, bedroom}, plus the
    /// uniqueness constraint `-at(robot, L1) if at(robot, L2), L1 != L2`.
    fn two_rooms() -> ConstraintSet {
        let mut u = Universe::new();
        let k = u.insert(Atom::new("at", &["robot", "kitchen"]), FluentKind::Inertial);
        let b = u.insert(Atom::new("at", &["robot", "bedroom"]), FluentKind::Inertial);
        let u = Arc::new(u);
        let rules = vec![
            GroundRule {
                head: GroundLit::new(k, false),
                body: vec![GroundLit::new(b, true)],
            },
            GroundRule {
                head: GroundLit::new(b, false),
                body: vec![GroundLit::new(k, true)],
            },
        ];
        ConstraintSet::new(u, rules).unwrap()
    }

    /// Fine universe with the bridge `at(A, Rg) if at*(A, L), component(L, Rg)`
    /// grounded against its static.
    fn bridge() -> ConstraintSet {
        let mut u = Universe::new();
        let fine = u.insert(Atom::new("at*", &["robot", "kitchen_table"]), FluentKind::Inertial);
        let comp = u.insert(Atom::new("component", &["kitchen_table", "kitchen"]), FluentKind::Static);
        let coarse = u.insert(Atom::new("at", &["robot", "kitchen"]), FluentKind::Defined);
        let u = Arc::new(u);
        let rules = vec![GroundRule {
            head: GroundLit::new(coarse, true),
            body: vec![GroundLit::new(fine, true), GroundLit::new(comp, true)],
        }];
        ConstraintSet::new(u, rules).unwrap()
    }

    #[test]
    fn holds_reads_sign_adjusted_value() {
        let cs = two_rooms();
        let p = PartialState::closed_world(cs.universe(), [&Atom::new("at", &["robot", "kitchen"])]);
        let s = close_state(&p, &cs).unwrap();
        assert!(holds(&s, &lit("at(robot, kitchen)")).unwrap());
        assert!(!holds(&s, &lit("-at(robot, kitchen)")).unwrap());
        assert_eq!(
            holds(&s, &lit("at(robot, garden)")),
            Err(KernelError::UniverseMismatch("at(robot, garden)".into()))
        );
    }

    #[test]
    fn bridge_derives_coarse_location() {
        let cs = bridge();
        let p = PartialState::closed_world(
            cs.universe(),
            [
                &Atom::new("at*", &["robot", "kitchen_table"]),
                &Atom::new("component", &["kitchen_table", "kitchen"]),
            ],
        );
        let s = close_state(&p, &cs).unwrap();
        assert!(holds(&s, &lit("at(robot, kitchen)")).unwrap());
    }

    #[test]
    fn two_places_at_once_is_inconsistent() {
        let cs = two_rooms();
        let p = PartialState::closed_world(
            cs.universe(),
            [&Atom::new("at", &["robot", "kitchen"]), &Atom::new("at", &["robot", "bedroom"])],
        );
        assert!(matches!(close_state(&p, &cs), Err(KernelError::InconsistentState(_))));
    }

    #[test]
    fn no_constraints_is_identity() {
        let mut u = Universe::new();
        u.insert(Atom::new("opened", &["fridge"]), FluentKind::Inertial);
        u.insert(Atom::new("opened", &["oven"]), FluentKind::Inertial);
        let cs = ConstraintSet::new(Arc::new(u), vec![]).unwrap();
        let p = PartialState::closed_world(cs.universe(), [&Atom::new("opened", &["oven"])]);
        let s = close_state(&p, &cs).unwrap();
        assert_eq!(s.describe(&[FluentKind::Inertial]), vec!["opened(oven)".to_string()]);
    }

    #[test]
    fn incomplete_partial_is_rejected() {
        let cs = two_rooms();
        let mut p = PartialState::new();
        p.set(Atom::new("at", &["robot", "kitchen"]), true);
        assert!(matches!(close_state(&p, &cs), Err(KernelError::IncompleteAssignment(_))));
    }

    #[test]
    fn negative_defined_head_is_rejected() {
        let mut u = Universe::new();
        let d = u.insert(Atom::new("near", &["robot"]), FluentKind::Defined);
        let rules = vec![GroundRule {
            head: GroundLit::new(d, false),
            body: vec![],
        }];
        assert!(matches!(
            ConstraintSet::new(Arc::new(u), rules),
            Err(KernelError::NegativeDefinedHead(_))
        ));
    }

    #[test]
    fn negative_cycle_between_defined_atoms_is_unstratified() {
        let mut u = Universe::new();
        let p = u.insert(Atom::new("p", &[]), FluentKind::Defined);
        let q = u.insert(Atom::new("q", &[]), FluentKind::Defined);
        let rules = vec![
            GroundRule {
                head: GroundLit::new(p, true),
                body: vec![GroundLit::new(q, false)],
            },
            GroundRule {
                head: GroundLit::new(q, true),
                body: vec![GroundLit::new(p, true)],
            },
        ];
        assert!(matches!(
            ConstraintSet::new(Arc::new(u), rules),
            Err(KernelError::Unstratified(_))
        ));
    }

    #[test]
    fn positive_recursion_reaches_least_fixpoint() {
        // reach(b) if reach(a); reach(a) if reach(b); reach(a) if start.
        let mut u = Universe::new();
        let start = u.insert(Atom::new("start", &[]), FluentKind::Inertial);
        let a = u.insert(Atom::new("reach", &["a"]), FluentKind::Defined);
        let b = u.insert(Atom::new("reach", &["b"]), FluentKind::Defined);
        let rules = vec![
            GroundRule {
                head: GroundLit::new(b, true),
                body: vec![GroundLit::new(a, true)],
            },
            GroundRule {
                head: GroundLit::new(a, true),
                body: vec![GroundLit::new(b, true)],
            },
            GroundRule {
                head: GroundLit::new(a, true),
                body: vec![GroundLit::new(start, true)],
            },
        ];
        let cs = ConstraintSet::new(Arc::new(u), rules).unwrap();
        let off = close_state(&PartialState::closed_world(cs.universe(), []), &cs).unwrap();
        assert!(!off.get(a) && !off.get(b));
        let on_atom = Atom::new("start", &[]);
        let on = close_state(&PartialState::closed_world(cs.universe(), [&on_atom]), &cs).unwrap();
        assert!(on.get(a) && on.get(b));
    }

    #[test]
    fn goal_satisfaction() {
        let mut u = Universe::new();
        u.insert(Atom::new("on", &["eggs", "kitchen_table"]), FluentKind::Inertial);
        u.insert(Atom::new("off", &["stove"]), FluentKind::Inertial);
        let cs = ConstraintSet::new(Arc::new(u), vec![]).unwrap();
        let s = close_state(
            &PartialState::closed_world(cs.universe(), [&Atom::new("on", &["eggs", "kitchen_table"])]),
            &cs,
        )
        .unwrap();
        let one = Goal::parse("breakfast", &["on(eggs, kitchen_table)"]).unwrap();
        let two = Goal::parse("breakfast", &["on(eggs, kitchen_table)", "off(stove)"]).unwrap();
        assert!(goal_satisfied(&s, &one).unwrap());
        assert!(!goal_satisfied(&s, &two).unwrap());
        assert_eq!(Goal::new("empty", Vec::<Literal>::new()), Err(KernelError::EmptyGoal("empty".into())));
    }
}
