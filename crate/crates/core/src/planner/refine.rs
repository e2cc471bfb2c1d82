use super::{plan, replay, ExoSchedule, Plan, PlanConfig, PlanError, PlanOutcome};
use crate::kernel::{Goal, State};
use crate::lang::{TransitionSystem, Zoomer};

/// Search limits for the two resolutions.
#[derive(Clone, Debug)]
pub struct RefineBudgets {
    pub coarse: PlanConfig,
    pub fine: PlanConfig,
    /// How many times the coarse suffix may be replanned after a failed
    /// refinement.
    pub max_replans: usize,
}

impl RefineBudgets {
    pub fn new(actor: &str) -> Self {
        RefineBudgets {
            coarse: PlanConfig::for_actor(12, actor),
            fine: PlanConfig::for_actor(12, actor),
            max_replans: 2,
        }
    }
}

/// Plans for a coarse goal, then implements each coarse action with a
/// fine plan over the zoomed system. The concatenated fine plan is checked
/// against the full fine system `fine`; when a coarse action cannot be
/// implemented, the rest of the coarse plan is recomputed from the state
/// reached so far.
pub fn plan_refined(
    zoomer: &Zoomer,
    fine: &TransitionSystem,
    s_fine: &State,
    goal: &Goal,
    budgets: &RefineBudgets,
) -> Result<PlanOutcome, PlanError> {
    let mut out = Plan {
        actor: budgets.fine.actor.clone(),
        ..Plan::default()
    };
    let mut current = s_fine.clone();
    let mut replans = 0;
    'coarse: loop {
        let abs = zoomer.abstract_state(&current)?;
        let coarse_plan = match plan(zoomer.coarse(), &abs, goal, &budgets.coarse, &ExoSchedule::new())? {
            PlanOutcome::Found(p) => p,
            PlanOutcome::NoPlan => return Ok(PlanOutcome::NoPlan),
        };
        for action in coarse_plan.actions() {
            let zoomed = zoomer.zoom(action, &current)?;
            let Some(sub_goal) = zoomed.goal else { continue };
            let local = zoomed.system.close_bits(&current.project(zoomed.system.universe()))?;
            let fine_cfg = PlanConfig {
                actor: action.args.first().cloned().or_else(|| budgets.fine.actor.clone()),
                ..budgets.fine.clone()
            };
            let failure = |reason: String| PlanError::RefinementFailure {
                action: action.to_string(),
                reason,
            };
            let sub = match plan(&zoomed.system, &local, &sub_goal, &fine_cfg, &ExoSchedule::new())? {
                PlanOutcome::Found(p) => p,
                PlanOutcome::NoPlan => {
                    if replans >= budgets.max_replans {
                        return Err(failure("no fine plan within the horizon".into()));
                    }
                    replans += 1;
                    continue 'coarse;
                }
            };
            let states = match replay(fine, &current, &sub) {
                Ok(s) => s,
                Err(e) => {
                    if replans >= budgets.max_replans {
                        return Err(failure(e.to_string()));
                    }
                    replans += 1;
                    continue 'coarse;
                }
            };
            current = states.last().expect("replay yields states").clone();
            out.steps.extend(sub.steps);
        }
        let reached = zoomer.abstract_state(&current)?;
        if crate::kernel::goal_satisfied(&reached, goal)? {
            out.achieves.push((goal.label().to_string(), out.len()));
            return Ok(PlanOutcome::Found(out));
        }
        if replans >= budgets.max_replans {
            return Err(PlanError::RefinementFailure {
                action: coarse_plan.actions().last().map(|a| a.to_string()).unwrap_or_default(),
                reason: "coarse goal not reached after refinement".into(),
            });
        }
        replans += 1;
    }
}
