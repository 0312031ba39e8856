//! Fragment search, exhaustive enumeration, triplet extraction, and
//! switching-machine construction.
//!
//! Deterministic tie-breaking throughout: among all fragments whose first
//! transition admits the requested proposition, `find_accepting_fragment`
//! returns the minimum under (prefix length, prefix sequence, cycle length,
//! cycle sequence), comparing state sequences lexicographically. Parallel
//! edge labels resolve to the lexicographically smallest proposition except
//! for the pinned first edge. The brute-force `enumerate_fragments` is the
//! oracle for that order in tests.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{
    AutomatonError, Nba, RunFragment, Switcher, SwitcherNode, SwitcherTransition, Triplet,
};

/// Breadth-first distances from `start` over edges between distinct states.
fn distances_from(nba: &Nba, start: &str) -> BTreeMap<String, usize> {
    let mut dist = BTreeMap::new();
    dist.insert(start.to_string(), 0usize);
    let mut queue = VecDeque::from([start.to_string()]);
    while let Some(q) = queue.pop_front() {
        let d = dist[&q];
        for s in nba.successors(&q) {
            if !dist.contains_key(s) {
                dist.insert(s.clone(), d + 1);
                queue.push_back(s.clone());
            }
        }
    }
    dist
}

/// Breadth-first distances to any state of `targets` (reverse search).
fn distances_to_set(nba: &Nba, targets: &BTreeSet<String>) -> BTreeMap<String, usize> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for t in targets {
        dist.insert(t.clone(), 0usize);
        queue.push_back(t.clone());
    }
    while let Some(q) = queue.pop_front() {
        let d = dist[&q];
        for p in nba.predecessors(&q) {
            if !dist.contains_key(p) {
                dist.insert(p.clone(), d + 1);
                queue.push_back(p.clone());
            }
        }
    }
    dist
}

/// Whether `state` lies on a cycle with at least two states (self-loops do
/// not count).
fn lies_on_proper_cycle(nba: &Nba, state: &str) -> bool {
    let dist = distances_from(nba, state);
    nba.predecessors(state)
        .iter()
        .any(|u| u != state && dist.contains_key(u))
}

/// Extend `path` to exactly `len` states so that the last state is in
/// `targets`, choosing successors in lexicographic order; the first
/// completion found is the lexicographically smallest. `dist_to_target`
/// prunes branches that cannot finish within the remaining budget.
fn first_path_to(
    nba: &Nba,
    path: &mut Vec<String>,
    len: usize,
    targets: &BTreeSet<String>,
    dist_to_target: &BTreeMap<String, usize>,
) -> bool {
    let here = path.last().unwrap().clone();
    let remaining = len - path.len();
    if remaining == 0 {
        return targets.contains(&here);
    }
    for next in nba.successors(&here) {
        match dist_to_target.get(next) {
            Some(d) if *d <= remaining - 1 => {}
            _ => continue,
        }
        path.push(next.clone());
        if first_path_to(nba, path, len, targets, dist_to_target) {
            return true;
        }
        path.pop();
    }
    false
}

/// Shortest, then lexicographically smallest, simple cycle through `pivot`:
/// the returned state sequence starts at `pivot` and its last state has an
/// edge back to `pivot`. `None` when `pivot` lies on no proper cycle.
fn shortest_cycle_through(nba: &Nba, pivot: &str) -> Option<Vec<String>> {
    let dist = distances_from(nba, pivot);
    let closers: BTreeSet<String> = nba
        .predecessors(pivot)
        .iter()
        .filter(|u| *u != pivot)
        .cloned()
        .collect();
    let total = closers
        .iter()
        .filter_map(|u| dist.get(u).map(|d| d + 1))
        .min()?;

    let dist_to_closer = distances_to_set(nba, &closers);
    fn dfs(
        nba: &Nba,
        path: &mut Vec<String>,
        total: usize,
        closers: &BTreeSet<String>,
        dist_to_closer: &BTreeMap<String, usize>,
    ) -> bool {
        let here = path.last().unwrap().clone();
        let remaining = total - path.len();
        if remaining == 0 {
            return closers.contains(&here);
        }
        for next in nba.successors(&here) {
            if path.contains(next) {
                continue;
            }
            match dist_to_closer.get(next) {
                Some(d) if *d <= remaining - 1 => {}
                _ => continue,
            }
            path.push(next.clone());
            if dfs(nba, path, total, closers, dist_to_closer) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = vec![pivot.to_string()];
    dfs(nba, &mut path, total, &closers, &dist_to_closer).then_some(path)
}

/// Find the minimal accepting run fragment whose first transition admits
/// `proposition`: the shortest (then lexicographically smallest) prefix from
/// an initial state to an accepting state that lies on a proper cycle, then
/// the shortest (then smallest) simple cycle available from that prefix.
pub fn find_accepting_fragment(
    nba: &Nba,
    proposition: &str,
) -> Result<RunFragment, AutomatonError> {
    if !nba.propositions.contains(proposition) {
        return Err(AutomatonError::Validation {
            field: "proposition".into(),
            message: format!("unknown proposition `{proposition}`"),
        });
    }
    // Accepting states that can anchor a cycle; others cannot head a
    // fragment and must not attract the prefix search.
    let viable: BTreeSet<String> = nba
        .accepting
        .iter()
        .filter(|f| lies_on_proper_cycle(nba, f))
        .cloned()
        .collect();
    if viable.is_empty() {
        return Err(AutomatonError::NoFragment(proposition.to_string()));
    }
    let dist_to_viable = distances_to_set(nba, &viable);

    // Minimal path length in states: an initial state, a first hop admitting
    // the proposition, then onward to a viable accepting state.
    let mut total: Option<usize> = None;
    for q0 in &nba.initial {
        for v in nba.successors(q0) {
            if !nba.edge_labels(q0, v).iter().any(|l| l == proposition) {
                continue;
            }
            if let Some(d) = dist_to_viable.get(v) {
                let t = 2 + d;
                total = Some(total.map_or(t, |b: usize| b.min(t)));
            }
        }
    }
    let total = total.ok_or_else(|| AutomatonError::NoFragment(proposition.to_string()))?;

    // Lexicographically smallest path of that length; initial states and
    // first hops are scanned in sorted order, so the first hit wins.
    let mut chosen: Option<Vec<String>> = None;
    'outer: for q0 in &nba.initial {
        for v in nba.successors(q0) {
            if !nba.edge_labels(q0, v).iter().any(|l| l == proposition) {
                continue;
            }
            let mut path = vec![q0.clone(), v.clone()];
            if first_path_to(nba, &mut path, total, &viable, &dist_to_viable) {
                chosen = Some(path);
                break 'outer;
            }
        }
    }
    let path = chosen.ok_or_else(|| AutomatonError::NoFragment(proposition.to_string()))?;
    let prefix: Vec<String> = path[..path.len() - 1].to_vec();

    // The path pins the prefix but not the cycle anchor: every viable
    // accepting successor of the prefix end competes, ordered by cycle
    // length then cycle sequence. A single-state prefix puts the pinned
    // first edge on the junction, so the label constraint lands there.
    let last = prefix.last().unwrap();
    let mut best: Option<Vec<String>> = None;
    for f in nba.successors(last) {
        if !viable.contains(f) {
            continue;
        }
        if prefix.len() == 1 && !nba.edge_labels(last, f).iter().any(|l| l == proposition) {
            continue;
        }
        if let Some(cycle) = shortest_cycle_through(nba, f) {
            let better = best
                .as_ref()
                .map_or(true, |b| (cycle.len(), &cycle) < (b.len(), b));
            if better {
                best = Some(cycle);
            }
        }
    }
    let cycle = best.ok_or_else(|| AutomatonError::NoFragment(proposition.to_string()))?;

    let frag = RunFragment::assemble(prefix, cycle, proposition.to_string());
    frag.validate(nba)?;
    Ok(frag)
}

/// Every accepting run fragment with at most `max_prefix` prefix states and
/// at most `max_cycle` cycle states, one per admissible first-edge label.
/// Prefixes and cycles are walks (revisits allowed, consecutive states
/// distinct); exhaustive within the bounds.
pub fn enumerate_fragments(nba: &Nba, max_prefix: usize, max_cycle: usize) -> Vec<RunFragment> {
    let mut cycles_from: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for f in &nba.accepting {
        let mut cycles = Vec::new();
        let mut walk = vec![f.clone()];
        collect_cycle_walks(nba, f, &mut walk, max_cycle, &mut cycles);
        cycles_from.insert(f.clone(), cycles);
    }

    let mut out = Vec::new();
    for q0 in &nba.initial {
        let mut walk = vec![q0.clone()];
        collect_prefix_walks(nba, &mut walk, max_prefix, &cycles_from, &mut out);
    }
    out
}

fn collect_cycle_walks(
    nba: &Nba,
    pivot: &str,
    walk: &mut Vec<String>,
    max_cycle: usize,
    out: &mut Vec<Vec<String>>,
) {
    let here = walk.last().unwrap().clone();
    // the closing hop back to the pivot must not be a self transition
    if walk.len() >= 2 && here != *pivot && nba.has_edge(&here, pivot) {
        out.push(walk.clone());
    }
    if walk.len() == max_cycle {
        return;
    }
    for next in nba.successors(&here) {
        walk.push(next.clone());
        collect_cycle_walks(nba, pivot, walk, max_cycle, out);
        walk.pop();
    }
}

fn collect_prefix_walks(
    nba: &Nba,
    walk: &mut Vec<String>,
    max_prefix: usize,
    cycles_from: &BTreeMap<String, Vec<Vec<String>>>,
    out: &mut Vec<RunFragment>,
) {
    let here = walk.last().unwrap().clone();
    // a walk of k+1 states is a k-state prefix followed by the cycle anchor;
    // the junction hop is the walk's own last edge
    if walk.len() >= 2 && nba.accepting.contains(&here) {
        let prefix: Vec<String> = walk[..walk.len() - 1].to_vec();
        if let Some(cycles) = cycles_from.get(&here) {
            for cycle in cycles {
                for label in nba.edge_labels(&walk[0], &walk[1]) {
                    out.push(RunFragment::assemble(
                        prefix.clone(),
                        cycle.clone(),
                        label.clone(),
                    ));
                }
            }
        }
    }
    if walk.len() >= max_prefix + 1 {
        return;
    }
    for next in nba.successors(&here) {
        walk.push(next.clone());
        collect_prefix_walks(nba, walk, max_prefix, cycles_from, out);
        walk.pop();
    }
}

/// Overlapping state triplets of the fragment, one per window of three
/// consecutive flattened states. The first window enters on the fragment's
/// initial proposition; all other edge labels resolve lexicographically.
pub fn triplets(nba: &Nba, fragment: &RunFragment) -> Result<Vec<Triplet>, AutomatonError> {
    fragment.validate(nba)?;
    let flat = &fragment.flattened;
    let edge_label = |i: usize| -> Result<String, AutomatonError> {
        if i == 0 {
            return Ok(fragment.initial_proposition.clone());
        }
        nba.edge_label(&flat[i], &flat[i + 1])
            .map(str::to_string)
            .ok_or_else(|| {
                AutomatonError::Structure(format!(
                    "missing transition `{}` -> `{}`",
                    flat[i],
                    flat[i + 1]
                ))
            })
    };
    let mut out = Vec::with_capacity(flat.len() - 2);
    for i in 0..flat.len() - 2 {
        out.push(Triplet {
            q: flat[i].clone(),
            q_mid: flat[i + 1].clone(),
            q_next: flat[i + 2].clone(),
            label_in: edge_label(i)?,
            label_out: edge_label(i + 1)?,
            label_self: nba.self_loop_labels(&flat[i + 1]).to_vec(),
        });
    }
    Ok(out)
}

/// Build the switching machine for a fragment: the initial node feeds the
/// first triplet on the fragment's initial proposition, each triplet feeds
/// its successor on its exit label, and the final triplet wraps into the
/// cyclic part.
pub fn build_switcher(nba: &Nba, fragment: &RunFragment) -> Result<Switcher, AutomatonError> {
    let seq = triplets(nba, fragment)?;
    let cycle_start = fragment.cycle_start();
    if cycle_start >= seq.len() {
        return Err(AutomatonError::Structure(
            "fragment has no cyclic triplet".into(),
        ));
    }
    let mut transitions: BTreeSet<SwitcherTransition> = BTreeSet::new();
    transitions.insert(SwitcherTransition {
        from: SwitcherNode::Initial(fragment.prefix[0].clone()),
        label: fragment.initial_proposition.clone(),
        to: SwitcherNode::Task(seq[0].clone()),
    });
    for (i, t) in seq.iter().enumerate() {
        let j = if i + 1 < seq.len() { i + 1 } else { cycle_start };
        transitions.insert(SwitcherTransition {
            from: SwitcherNode::Task(t.clone()),
            label: t.label_out.clone(),
            to: SwitcherNode::Task(seq[j].clone()),
        });
    }
    Ok(Switcher {
        initial_state: fragment.prefix[0].clone(),
        sequence: seq,
        cycle_start,
        transitions: transitions.into_iter().collect(),
    })
}
