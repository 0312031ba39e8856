//! Nondeterministic Büchi automata and their task decomposition.
//!
//! An automaton read from a document is decomposed into an accepting run
//! fragment (a finite prefix plus a cycle through an accepting state), the
//! fragment into overlapping state triplets, and the triplets into the
//! switching machine that sequences one reach-avoid task per triplet at
//! runtime. See [`search`] for the decomposition operations.

mod search;

pub use search::{build_switcher, enumerate_fragments, find_accepting_fragment, triplets};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("automaton parse error: {0}")]
    Parse(String),
    #[error("automaton validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("no accepting run fragment starts with proposition `{0}`")]
    NoFragment(String),
    #[error("automaton structure error: {0}")]
    Structure(String),
}

/// Labeled transition between automaton states. The alphabet is the set of
/// atomic propositions, so each transition carries a single proposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
pub struct Transition {
    pub from: String,
    pub label: String,
    pub to: String,
}

/// Nondeterministic Büchi automaton over atomic propositions.
#[derive(Debug, Clone)]
pub struct Nba {
    pub states: Vec<String>,
    pub initial: BTreeSet<String>,
    pub accepting: BTreeSet<String>,
    pub propositions: BTreeSet<String>,
    pub transitions: Vec<Transition>,
    /// Successors over edges between distinct states, sorted for
    /// deterministic search order.
    succ: BTreeMap<String, Vec<String>>,
    /// Predecessors over edges between distinct states.
    pred: BTreeMap<String, Vec<String>>,
    /// Labels per ordered state pair, sorted.
    labels: BTreeMap<(String, String), Vec<String>>,
}

#[derive(Deserialize)]
struct NbaDoc {
    states: Vec<String>,
    initial: Vec<String>,
    accepting: Vec<String>,
    propositions: Vec<String>,
    #[serde(default)]
    transitions: Vec<Transition>,
}

impl Nba {
    pub fn from_toml(text: &str) -> Result<Nba, AutomatonError> {
        let doc: NbaDoc = toml::from_str(text).map_err(|e| AutomatonError::Parse(e.to_string()))?;
        Nba::from_parts(
            doc.states,
            doc.initial,
            doc.accepting,
            doc.propositions,
            doc.transitions,
        )
    }

    pub fn from_parts(
        states: Vec<String>,
        initial: Vec<String>,
        accepting: Vec<String>,
        propositions: Vec<String>,
        transitions: Vec<Transition>,
    ) -> Result<Nba, AutomatonError> {
        let state_set: BTreeSet<String> = states.iter().cloned().collect();
        if states.is_empty() {
            return Err(AutomatonError::Validation {
                field: "states".into(),
                message: "at least one state is required".into(),
            });
        }
        if state_set.len() != states.len() {
            return Err(AutomatonError::Validation {
                field: "states".into(),
                message: "duplicate state identifier".into(),
            });
        }
        let prop_set: BTreeSet<String> = propositions.iter().cloned().collect();
        if propositions.is_empty() {
            return Err(AutomatonError::Validation {
                field: "propositions".into(),
                message: "at least one proposition is required".into(),
            });
        }
        if prop_set.len() != propositions.len() {
            return Err(AutomatonError::Validation {
                field: "propositions".into(),
                message: "duplicate proposition identifier".into(),
            });
        }
        if initial.is_empty() {
            return Err(AutomatonError::Validation {
                field: "initial".into(),
                message: "initial state set must be nonempty".into(),
            });
        }
        for q in initial.iter().chain(accepting.iter()) {
            if !state_set.contains(q) {
                return Err(AutomatonError::Validation {
                    field: "initial/accepting".into(),
                    message: format!("unknown state `{q}`"),
                });
            }
        }
        for t in &transitions {
            if !state_set.contains(&t.from) {
                return Err(AutomatonError::Validation {
                    field: "transitions.from".into(),
                    message: format!("unknown state `{}`", t.from),
                });
            }
            if !state_set.contains(&t.to) {
                return Err(AutomatonError::Validation {
                    field: "transitions.to".into(),
                    message: format!("unknown state `{}`", t.to),
                });
            }
            if !prop_set.contains(&t.label) {
                return Err(AutomatonError::Validation {
                    field: "transitions.label".into(),
                    message: format!("unknown proposition `{}`", t.label),
                });
            }
        }

        let mut dedup: BTreeSet<Transition> = BTreeSet::new();
        let mut succ: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut pred: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut labels: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
        for t in transitions {
            labels
                .entry((t.from.clone(), t.to.clone()))
                .or_default()
                .insert(t.label.clone());
            if t.from != t.to {
                succ.entry(t.from.clone()).or_default().insert(t.to.clone());
                pred.entry(t.to.clone()).or_default().insert(t.from.clone());
            }
            dedup.insert(t);
        }
        Ok(Nba {
            states,
            initial: initial.into_iter().collect(),
            accepting: accepting.into_iter().collect(),
            propositions: prop_set,
            transitions: dedup.into_iter().collect(),
            succ: succ
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            pred: pred
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
            labels: labels
                .into_iter()
                .map(|(k, v)| (k, v.into_iter().collect()))
                .collect(),
        })
    }

    /// Successors of `q` over edges between distinct states, sorted.
    pub fn successors(&self, q: &str) -> &[String] {
        self.succ.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Predecessors of `q` over edges between distinct states, sorted.
    pub fn predecessors(&self, q: &str) -> &[String] {
        self.pred.get(q).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sorted labels on the edge `from -> to` (empty when there is none).
    pub fn edge_labels(&self, from: &str, to: &str) -> &[String] {
        self.labels
            .get(&(from.to_string(), to.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Canonical label of the edge `from -> to`: the lexicographically
    /// smallest of its (possibly several) propositions.
    pub fn edge_label(&self, from: &str, to: &str) -> Option<&str> {
        self.edge_labels(from, to).first().map(String::as_str)
    }

    /// Sorted self-loop labels at `q`.
    pub fn self_loop_labels(&self, q: &str) -> &[String] {
        self.edge_labels(q, q)
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        !self.edge_labels(from, to).is_empty()
    }
}

/// Finite stand-in for one accepting run: a prefix from an initial state, a
/// cycle through an accepting state, and the first two cycle states appended
/// so that every window of three consecutive states is a task triplet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFragment {
    pub prefix: Vec<String>,
    pub cycle: Vec<String>,
    pub flattened: Vec<String>,
    pub initial_proposition: String,
}

impl RunFragment {
    pub fn assemble(
        prefix: Vec<String>,
        cycle: Vec<String>,
        initial_proposition: String,
    ) -> RunFragment {
        let mut flattened = prefix.clone();
        flattened.extend(cycle.iter().cloned());
        flattened.push(cycle[0].clone());
        flattened.push(cycle[1].clone());
        RunFragment {
            prefix,
            cycle,
            flattened,
            initial_proposition,
        }
    }

    /// Index into the triplet sequence where the periodic part begins.
    pub fn cycle_start(&self) -> usize {
        self.prefix.len()
    }

    /// Structural checks: nonempty prefix starting at an initial state, a
    /// cycle of length >= 2 through an accepting state, every consecutive
    /// pair of flattened states distinct and connected by a transition.
    pub fn validate(&self, nba: &Nba) -> Result<(), AutomatonError> {
        if self.prefix.is_empty() {
            return Err(AutomatonError::Structure("empty prefix".into()));
        }
        if !nba.initial.contains(&self.prefix[0]) {
            return Err(AutomatonError::Structure(format!(
                "prefix starts at non-initial state `{}`",
                self.prefix[0]
            )));
        }
        if self.cycle.len() < 2 {
            return Err(AutomatonError::Structure(
                "cycle needs at least two states (a bare self-loop cannot form one)".into(),
            ));
        }
        if !nba.accepting.contains(&self.cycle[0]) {
            return Err(AutomatonError::Structure(format!(
                "cycle starts at non-accepting state `{}`",
                self.cycle[0]
            )));
        }
        let expect = {
            let mut f = self.prefix.clone();
            f.extend(self.cycle.iter().cloned());
            f.push(self.cycle[0].clone());
            f.push(self.cycle[1].clone());
            f
        };
        if expect != self.flattened {
            return Err(AutomatonError::Structure(
                "flattened sequence is not prefix + cycle + first two cycle states".into(),
            ));
        }
        for w in self.flattened.windows(2) {
            if w[0] == w[1] {
                return Err(AutomatonError::Structure(format!(
                    "equal consecutive states `{}`",
                    w[0]
                )));
            }
            if !nba.has_edge(&w[0], &w[1]) {
                return Err(AutomatonError::Structure(format!(
                    "missing transition `{}` -> `{}`",
                    w[0], w[1]
                )));
            }
        }
        // wrap edge inside the cycle
        let last = self.cycle.last().unwrap();
        if !nba.has_edge(last, &self.cycle[0]) {
            return Err(AutomatonError::Structure(format!(
                "missing cycle wrap transition `{last}` -> `{}`",
                self.cycle[0]
            )));
        }
        let first_edge = nba.edge_labels(&self.flattened[0], &self.flattened[1]);
        if !first_edge.iter().any(|l| *l == self.initial_proposition) {
            return Err(AutomatonError::Structure(format!(
                "first transition does not admit initial proposition `{}`",
                self.initial_proposition
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RunFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.flattened.join(" "))
    }
}

/// One reach-avoid unit: while the middle state is active the plant must move
/// from the `label_in` region to the `label_out` region, staying inside the
/// regions labeled by the middle state's self-loops (or the two endpoints).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Triplet {
    pub q: String,
    pub q_mid: String,
    pub q_next: String,
    pub label_in: String,
    pub label_out: String,
    pub label_self: Vec<String>,
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}) in={} out={} self={{{}}}",
            self.q,
            self.q_mid,
            self.q_next,
            self.label_in,
            self.label_out,
            self.label_self.join(",")
        )
    }
}

/// Node of the switching machine: either an automaton initial state or a
/// task triplet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SwitcherNode {
    Initial(String),
    Task(Triplet),
}

impl fmt::Display for SwitcherNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitcherNode::Initial(q) => write!(f, "{q}"),
            SwitcherNode::Task(t) => write!(f, "({}, {}, {})", t.q, t.q_mid, t.q_next),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SwitcherTransition {
    pub from: SwitcherNode,
    pub label: String,
    pub to: SwitcherNode,
}

/// Switching machine driving the runtime: consume the fragment's triplets in
/// order, then repeat the cyclic tail forever.
#[derive(Debug, Clone)]
pub struct Switcher {
    pub initial_state: String,
    /// One triplet per window of the flattened fragment, in order.
    pub sequence: Vec<Triplet>,
    /// Index into `sequence` where the periodic part begins.
    pub cycle_start: usize,
    /// Deduplicated transition relation, for display and validation.
    pub transitions: Vec<SwitcherTransition>,
}

impl Switcher {
    /// Runtime successor of triplet `i` in the sequence, wrapping into the
    /// cyclic part after the final triplet.
    pub fn next_index(&self, i: usize) -> usize {
        if i + 1 < self.sequence.len() {
            i + 1
        } else {
            self.cycle_start
        }
    }

    /// The periodic triplet order.
    pub fn cyclic_order(&self) -> &[Triplet] {
        &self.sequence[self.cycle_start..]
    }
}
