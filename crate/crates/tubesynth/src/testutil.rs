//! Shared fixtures for unit tests: a one-dimensional two-region patrol.

use crate::automaton::{build_switcher, find_accepting_fragment, Nba, Switcher};
use crate::workspace::{LabeledWorkspace, RaTask};

pub(crate) const PATROL_NBA: &str = r#"
    states = ["q0", "q1"]
    initial = ["q0"]
    accepting = ["q1"]
    propositions = ["pa", "pb", "pfree"]

    [[transitions]]
    from = "q0"
    label = "pa"
    to = "q1"

    [[transitions]]
    from = "q1"
    label = "pb"
    to = "q0"

    [[transitions]]
    from = "q0"
    label = "pfree"
    to = "q0"

    [[transitions]]
    from = "q1"
    label = "pfree"
    to = "q1"
"#;

pub(crate) const PATROL_WS: &str = r#"
    dimension = 1
    default_proposition = "pfree"

    [bounds]
    lower = [-1.0]
    upper = [5.0]

    [[regions]]
    proposition = "pa"
    lower = [0.0]
    upper = [1.0]

    [[regions]]
    proposition = "pb"
    lower = [3.0]
    upper = [4.0]
"#;

/// Velocity-integrator plant parameters matching the patrol (one stage,
/// one output).
pub(crate) const PATROL_PLANT: &str =
    "outputs = 1\nstages = 1\ndrift = [[\"0\"]]\ngain = [[\"1\"]]";

pub(crate) fn patrol() -> (Switcher, Vec<RaTask>, LabeledWorkspace) {
    let nba = Nba::from_toml(PATROL_NBA).unwrap();
    let fragment = find_accepting_fragment(&nba, "pa").unwrap();
    let switcher = build_switcher(&nba, &fragment).unwrap();
    let ws = LabeledWorkspace::from_toml(PATROL_WS).unwrap();
    let tasks = switcher
        .sequence
        .iter()
        .map(|t| ws.ra_task(t).unwrap())
        .collect();
    (switcher, tasks, ws)
}
