//! The rule table that turns world states into advice utterances.
//!
//! Rules are checked in order; the first whose condition holds *and* whose
//! action filter admits the oracle's greedy action produces the utterance.
//! The table ends with per-action catch-alls, so every (state, action) pair
//! is covered by construction. The action label on the produced record is
//! always the oracle's, never the rule's guess.

use super::corpus::{AdviceRecord, Split};
use super::preprocess::preprocess;
use super::{AdviceError, Result};
use crate::env::{Action, EnvConfig, GridState, LaneDir, OracleTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    FromLeft,
    FromRight,
}

/// Pure predicates over the world state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Always,
    /// Agent sits directly below the tunnel row with a wall overhead.
    TunnelBlockedAbove,
    /// Agent sits directly below the tunnel row, lined up with the gap.
    AtTunnelGapBelow,
    /// A car on the agent's own row will reach it within `cells` moves.
    CarIncoming {
        side: Side,
        cells: usize,
    },
    /// A car on the row above is within `cells` cells of driving over the
    /// agent's column.
    CarAboveWithin {
        cells: usize,
    },
    /// The cell above is passable and no car on that row is nearby.
    PathClearAbove,
}

impl Condition {
    pub fn matches(&self, config: &EnvConfig, state: &GridState) -> bool {
        let (row, col) = state.agent;
        match self {
            Condition::Always => true,
            Condition::TunnelBlockedAbove => {
                row + 1 == config.tunnel_row && config.is_tunnel_cell(row + 1, col)
            }
            Condition::AtTunnelGapBelow => {
                row + 1 == config.tunnel_row && !config.is_tunnel_cell(row + 1, col)
            }
            Condition::CarIncoming { side, cells } => state.cars.iter().any(|car| {
                car.row == row && {
                    let dist = approach_distance(config.cols, car.col, car.dir, col);
                    matches!(dist, Some(d) if d <= *cells)
                        && side_of(config.cols, car.col, col) == *side
                }
            }),
            Condition::CarAboveWithin { cells } => {
                row < config.rows
                    && state.cars.iter().any(|car| {
                        car.row == row + 1 && {
                            let dist = approach_distance(config.cols, car.col, car.dir, col);
                            car.col == col || matches!(dist, Some(d) if d <= *cells)
                        }
                    })
            }
            Condition::PathClearAbove => {
                !config.is_tunnel_cell(row + 1, col)
                    && !Condition::CarAboveWithin { cells: 2 }.matches(config, state)
            }
        }
    }
}

/// Modular distance (in car moves) until `car_col` reaches `target_col`
/// driving in `dir`; `None` when the car sits on the target already.
fn approach_distance(
    cols: usize,
    car_col: usize,
    dir: LaneDir,
    target_col: usize,
) -> Option<usize> {
    if car_col == target_col {
        return None;
    }
    let d = match dir {
        LaneDir::Right => (target_col + cols - car_col) % cols,
        LaneDir::Left => (car_col + cols - target_col) % cols,
    };
    Some(d)
}

fn side_of(cols: usize, car_col: usize, agent_col: usize) -> Side {
    // shorter way around the cylinder decides which side the car is on
    let leftward = (agent_col + cols - car_col) % cols;
    let rightward = (car_col + cols - agent_col) % cols;
    if leftward <= rightward {
        Side::FromLeft
    } else {
        Side::FromRight
    }
}

/// One row of the advice table.
#[derive(Debug, Clone)]
pub struct TemplateRule {
    pub name: &'static str,
    pub condition: Condition,
    /// `None` admits any oracle action; otherwise the rule only fires when
    /// the oracle agrees.
    pub action: Option<Action>,
    /// Utterance with an optional `{action}` slot.
    pub template: &'static str,
}

fn action_phrase(action: Action) -> &'static str {
    match action {
        Action::Up => "move forward",
        Action::Down => "move backward",
        Action::Left => "move left",
        Action::Right => "move right",
        Action::NoOp => "wait",
    }
}

/// The built-in advice table, in priority order: tunnel maneuvers, then
/// same-row hazards, then the row above, then clear-path encouragement, then
/// catch-alls per action.
pub fn default_rules() -> Vec<TemplateRule> {
    vec![
        TemplateRule {
            name: "tunnel-detour-left",
            condition: Condition::TunnelBlockedAbove,
            action: Some(Action::Left),
            template: "moved left get better position next move forward get around tunnel",
        },
        TemplateRule {
            name: "tunnel-detour-right",
            condition: Condition::TunnelBlockedAbove,
            action: Some(Action::Right),
            template: "moved right get better position next move forward get around tunnel",
        },
        TemplateRule {
            name: "tunnel-hold",
            condition: Condition::TunnelBlockedAbove,
            action: Some(Action::NoOp),
            template: "wait near the tunnel stay safe until the gap is clear",
        },
        TemplateRule {
            name: "tunnel-fallback",
            condition: Condition::TunnelBlockedAbove,
            action: None,
            template: "{action} get around the tunnel",
        },
        TemplateRule {
            name: "gap-cross",
            condition: Condition::AtTunnelGapBelow,
            action: Some(Action::Up),
            template: "move forward through the tunnel gap",
        },
        TemplateRule {
            name: "gap-hold",
            condition: Condition::AtTunnelGapBelow,
            action: Some(Action::NoOp),
            template: "wait at the gap car passing let it pass",
        },
        TemplateRule {
            name: "car-from-left",
            condition: Condition::CarIncoming {
                side: Side::FromLeft,
                cells: 2,
            },
            action: None,
            template: "car coming from the left {action} stay safe",
        },
        TemplateRule {
            name: "car-from-right",
            condition: Condition::CarIncoming {
                side: Side::FromRight,
                cells: 2,
            },
            action: None,
            template: "car coming from the right {action} stay safe",
        },
        TemplateRule {
            name: "traffic-above-hold",
            condition: Condition::CarAboveWithin { cells: 2 },
            action: Some(Action::NoOp),
            template: "wait car passing above let it pass",
        },
        TemplateRule {
            name: "traffic-above-cross",
            condition: Condition::CarAboveWithin { cells: 2 },
            action: Some(Action::Up),
            template: "traffic gap open cross move forward",
        },
        TemplateRule {
            name: "clear-forward",
            condition: Condition::PathClearAbove,
            action: Some(Action::Up),
            template: "move forward path is clear",
        },
        TemplateRule {
            name: "any-forward",
            condition: Condition::Always,
            action: Some(Action::Up),
            template: "move forward toward the goal",
        },
        TemplateRule {
            name: "any-backward",
            condition: Condition::Always,
            action: Some(Action::Down),
            template: "move backward to stay safe",
        },
        TemplateRule {
            name: "any-left",
            condition: Condition::Always,
            action: Some(Action::Left),
            template: "move left for a better position",
        },
        TemplateRule {
            name: "any-right",
            condition: Condition::Always,
            action: Some(Action::Right),
            template: "move right for a better position",
        },
        TemplateRule {
            name: "any-wait",
            condition: Condition::Always,
            action: Some(Action::NoOp),
            template: "wait here until the path is clear",
        },
    ]
}

/// Produces the advice record for a live state: first matching rule renders
/// the utterance, the oracle's greedy action becomes the label.
pub fn generate_advice(
    state: &GridState,
    config: &EnvConfig,
    rules: &[TemplateRule],
    oracle: &OracleTable,
) -> Result<AdviceRecord> {
    let label = oracle
        .greedy(state)
        .ok_or_else(|| AdviceError::OracleMiss(format!("{:?}", state.agent)))?;
    let rule = rules
        .iter()
        .find(|r| r.action.is_none_or(|a| a == label) && r.condition.matches(config, state))
        .ok_or_else(|| {
            AdviceError::Coverage(format!(
                "agent {:?} tick {} oracle action {label}",
                state.agent, state.tick
            ))
        })?;
    let advice = rule.template.replace("{action}", action_phrase(label));
    let tokens = preprocess(&advice);
    Ok(AdviceRecord {
        state: state.clone(),
        label,
        advice,
        tokens,
        split: Split::Train,
    })
}
