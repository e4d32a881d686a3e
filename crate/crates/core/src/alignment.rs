//! Optimal alignments and conformance-cost bounds.
//!
//! An alignment relates a trace (as an event net or behavior net) to a
//! model run through synchronous, log and model moves. Optimal alignments
//! are found by uniform-cost search over the marking graph of the
//! synchronous product net. For uncertain traces the lower cost bound
//! aligns the behavior net once; the upper bound enumerates realizations
//! and aligns each one.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::behavior::behavior_net;
use crate::petri::{
    event_net, product, ActivitySequence, Marking, PetriError, SystemNet, TransitionId,
};
use crate::uncertain_log::{realizations, LogError, SimpleUncertainTrace};

/// One alignment move. Labels are `None` for invisible (tau) transitions;
/// taus can appear on the model side and, for behavior nets, on the log
/// side (skipping an indeterminate event).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Move {
    Synchronous {
        activity: String,
        log_transition: TransitionId,
        model_transition: TransitionId,
    },
    Log {
        label: Option<String>,
        transition: TransitionId,
    },
    Model {
        label: Option<String>,
        transition: TransitionId,
    },
}

/// Per-move-class costs. `tau` prices invisible moves on either side.
/// The default is the standard cost function: deviations (visible log or
/// model moves) cost one, synchronous and invisible moves are free.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostFunction {
    pub sync: u32,
    pub log_move: u32,
    pub model_move: u32,
    pub tau: u32,
}

impl Default for CostFunction {
    fn default() -> Self {
        CostFunction {
            sync: 0,
            log_move: 1,
            model_move: 1,
            tau: 0,
        }
    }
}

impl CostFunction {
    pub fn move_cost(&self, m: &Move) -> u32 {
        match m {
            Move::Synchronous { .. } => self.sync,
            Move::Log { label: Some(_), .. } => self.log_move,
            Move::Log { label: None, .. } => self.tau,
            Move::Model { label: Some(_), .. } => self.model_move,
            Move::Model { label: None, .. } => self.tau,
        }
    }
}

/// Sums the per-move costs of an alignment.
pub fn cost(alignment: &Alignment, c: &CostFunction) -> u64 {
    alignment.cost(c)
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Alignment {
    pub moves: Vec<Move>,
}

/// Machine-readable rendering of one move.
#[derive(Serialize)]
pub struct MoveRecord {
    pub kind: &'static str,
    pub activity: Option<String>,
    pub log_transition: Option<String>,
    pub model_transition: Option<String>,
}

impl Alignment {
    pub fn cost(&self, c: &CostFunction) -> u64 {
        self.moves.iter().map(|m| c.move_cost(m) as u64).sum()
    }

    /// Visible activities contributed by the log side, in order. For a
    /// behavior net this is the realization the alignment selected.
    pub fn log_projection(&self) -> ActivitySequence {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Synchronous { activity, .. } => Some(activity.clone()),
                Move::Log {
                    label: Some(a), ..
                } => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    /// Log-side transitions fired, in order.
    pub fn log_transition_sequence(&self) -> Vec<TransitionId> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Synchronous { log_transition, .. } => Some(*log_transition),
                Move::Log { transition, .. } => Some(*transition),
                _ => None,
            })
            .collect()
    }

    /// Model-side transitions fired, in order; a complete firing sequence
    /// of the model.
    pub fn model_transition_sequence(&self) -> Vec<TransitionId> {
        self.moves
            .iter()
            .filter_map(|m| match m {
                Move::Synchronous {
                    model_transition, ..
                } => Some(*model_transition),
                Move::Model { transition, .. } => Some(*transition),
                _ => None,
            })
            .collect()
    }

    /// Two-row textual rendering: log activities on top, model labels
    /// below, `>>` for no-moves and `tau` for invisible transitions.
    pub fn render_two_row(&self) -> String {
        let cell = |m: &Move, log_row: bool| -> String {
            match (m, log_row) {
                (Move::Synchronous { activity, .. }, _) => activity.clone(),
                (Move::Log { label, .. }, true) => {
                    label.clone().unwrap_or_else(|| "tau".into())
                }
                (Move::Log { .. }, false) => ">>".into(),
                (Move::Model { .. }, true) => ">>".into(),
                (Move::Model { label, .. }, false) => {
                    label.clone().unwrap_or_else(|| "tau".into())
                }
            }
        };
        let tops: Vec<String> = self.moves.iter().map(|m| cell(m, true)).collect();
        let bots: Vec<String> = self.moves.iter().map(|m| cell(m, false)).collect();
        let widths: Vec<usize> = tops
            .iter()
            .zip(&bots)
            .map(|(a, b)| a.len().max(b.len()))
            .collect();
        let row = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join(" | ")
        };
        format!("log   | {}\nmodel | {}\n", row(&tops), row(&bots))
    }

    /// JSON-ready move records; transition ids are rendered as the nets'
    /// transition names.
    pub fn to_records(&self, log_net: &SystemNet, model: &SystemNet) -> Vec<MoveRecord> {
        self.moves
            .iter()
            .map(|m| match m {
                Move::Synchronous {
                    activity,
                    log_transition,
                    model_transition,
                } => MoveRecord {
                    kind: "sync",
                    activity: Some(activity.clone()),
                    log_transition: Some(log_net.transition(*log_transition).name.clone()),
                    model_transition: Some(model.transition(*model_transition).name.clone()),
                },
                Move::Log { label, transition } => MoveRecord {
                    kind: "log",
                    activity: label.clone(),
                    log_transition: Some(log_net.transition(*transition).name.clone()),
                    model_transition: None,
                },
                Move::Model { label, transition } => MoveRecord {
                    kind: "model",
                    activity: label.clone(),
                    log_transition: None,
                    model_transition: Some(model.transition(*transition).name.clone()),
                },
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("final marking unreachable after exploring {explored} states")]
    UnreachableFinalMarking { explored: usize },
    #[error("search state cap of {cap} markings exceeded")]
    StateExplosion { cap: usize },
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Petri(#[from] PetriError),
}

/// Search limits for the alignment state-space exploration. Exceeding the
/// cap is an error, never silent truncation.
#[derive(Clone, Copy, Debug)]
pub struct SearchLimits {
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_states: 1_000_000,
        }
    }
}

/// Per-label minimum and maximum visible-firing counts over all completion
/// paths of one net, per reachable marking. Used to bound the number of
/// moves that cannot possibly synchronize. `None` when the net's state
/// space has a cycle, in which case the caller falls back to no estimate.
struct SideTables {
    entries: HashMap<Vec<u32>, (Vec<u16>, Vec<u16>), FxBuildHasher>,
}

fn side_tables(net: &SystemNet, label_index: &HashMap<&str, usize>) -> Option<SideTables> {
    let n_places = net.place_count();
    let n_labels = label_index.len();
    let to_dense = |m: &crate::petri::Marking| {
        let mut v = vec![0u32; n_places];
        for (p, count) in m.entries() {
            v[p.0] = count;
        }
        v
    };
    let initial = to_dense(net.initial_marking());
    let final_marking = to_dense(net.final_marking());

    // Iterative post-order DFS with an on-stack set for cycle detection.
    let mut entries: HashMap<Vec<u32>, (Vec<u16>, Vec<u16>), FxBuildHasher> = HashMap::default();
    let mut on_stack: HashMap<Vec<u32>, bool, FxBuildHasher> = HashMap::default();
    let mut stack: Vec<(Vec<u32>, bool)> = vec![(initial, false)];
    while let Some((marking, children_done)) = stack.pop() {
        if children_done {
            on_stack.remove(&marking);
            let mut min_counts = vec![u16::MAX; n_labels];
            let mut max_counts = vec![0u16; n_labels];
            let mut completes = marking == final_marking;
            if completes {
                min_counts.fill(0);
            }
            for t in net.transition_ids() {
                if !net.is_enabled(&marking, t) {
                    continue;
                }
                let next = to_dense(&net.fire(&Marking::from_dense(&marking), t).unwrap());
                let Some((child_min, child_max)) = entries.get(&next) else {
                    continue; // dead end below; not a completion route
                };
                let fired = net.label(t).map(|l| label_index[l]);
                completes = true;
                for a in 0..n_labels {
                    let inc = (fired == Some(a)) as u16;
                    min_counts[a] = min_counts[a].min(child_min[a].saturating_add(inc));
                    max_counts[a] = max_counts[a].max(child_max[a].saturating_add(inc));
                }
            }
            if completes {
                entries.insert(marking, (min_counts, max_counts));
            }
            continue;
        }
        if entries.contains_key(&marking) || on_stack.contains_key(&marking) {
            if on_stack.contains_key(&marking) {
                return None; // cycle
            }
            continue;
        }
        on_stack.insert(marking.clone(), true);
        stack.push((marking.clone(), true));
        for t in net.transition_ids() {
            if !net.is_enabled(&marking, t) {
                continue;
            }
            let next = to_dense(&net.fire(&Marking::from_dense(&marking), t).unwrap());
            if !entries.contains_key(&next) {
                if on_stack.contains_key(&next) {
                    return None; // cycle
                }
                stack.push((next, false));
            }
        }
    }
    Some(SideTables { entries })
}

/// Computes a cost-optimal alignment of a log net (event net or behavior
/// net) against a model.
///
/// A* over the product marking graph with an admissible per-label bound:
/// for each label, completions firing more visible transitions on one side
/// than the other side can still offer must pay for the surplus as
/// unsynchronized moves. With equal estimates, moves are tried synchronous
/// first, then invisible, then visible model, then visible log moves,
/// which keeps the returned optimum deterministic. Falls back to plain
/// uniform-cost search for cyclic state spaces.
pub fn align(
    log_net: &SystemNet,
    model: &SystemNet,
    c: &CostFunction,
    limits: &SearchLimits,
) -> Result<Alignment, AlignError> {
    let labels: Vec<&str> = {
        let mut v: Vec<&str> = log_net
            .transition_ids()
            .filter_map(|t| log_net.label(t))
            .chain(model.transition_ids().filter_map(|t| model.label(t)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let label_index: HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let n_labels = labels.len();
    let log_tables = side_tables(log_net, &label_index);
    let model_tables = side_tables(model, &label_index);
    let n_log_places = log_net.place_count();

    match (log_tables, model_tables) {
        (Some(log_tab), Some(model_tab)) => {
            let log_move = c.log_move as u64;
            let model_move = c.model_move as u64;
            let h = move |m: &[u32]| -> u64 {
                let (log_side, model_side) = m.split_at(n_log_places);
                let Some((log_min, log_max)) = log_tab.entries.get(log_side) else {
                    return 0;
                };
                let Some((model_min, model_max)) = model_tab.entries.get(model_side) else {
                    return 0;
                };
                let mut forced = 0u64;
                for a in 0..n_labels {
                    let unsynced_model =
                        model_min[a].saturating_sub(log_max[a]) as u64;
                    let unsynced_log = log_min[a].saturating_sub(model_max[a]) as u64;
                    forced += unsynced_model * model_move + unsynced_log * log_move;
                }
                forced
            };
            align_with_heuristic(log_net, model, c, limits, h)
        }
        _ => align_with_heuristic(log_net, model, c, limits, |_| 0),
    }
}

/// [`align`] with an admissible, consistent remaining-cost estimate. The
/// heuristic sees the product marking as dense token counts indexed by
/// product place id (places of the log net first, then the model's). The
/// zero heuristic is always sound.
pub fn align_with_heuristic(
    log_net: &SystemNet,
    model: &SystemNet,
    c: &CostFunction,
    limits: &SearchLimits,
    heuristic: impl Fn(&[u32]) -> u64,
) -> Result<Alignment, AlignError> {
    let prod = product(log_net, model);
    let net = &prod.net;
    let n_places = net.place_count();

    // Costs and the class rank driving the deterministic expansion order,
    // computed per product transition without materializing moves.
    let classify = |idx: usize| -> (u8, u64) {
        let o = prod.origins[idx];
        match (o.left, o.right) {
            (Some(_), Some(_)) => (0, c.sync as u64),
            (None, Some(mt)) => match model.label(mt) {
                None => (1, c.tau as u64),
                Some(_) => (3, c.model_move as u64),
            },
            (Some(lt), None) => match log_net.label(lt) {
                None => (2, c.tau as u64),
                Some(_) => (4, c.log_move as u64),
            },
            (None, None) => unreachable!("product transitions have an origin"),
        }
    };
    let classes: Vec<(u8, u64)> = (0..net.transition_count()).map(classify).collect();
    let mut expansion_order: Vec<usize> = (0..net.transition_count()).collect();
    expansion_order.sort_by_key(|&i| (classes[i].0, i));
    // Position of each transition in the class-then-id expansion order.
    let mut rank = vec![0usize; net.transition_count()];
    for (pos, &t) in expansion_order.iter().enumerate() {
        rank[t] = pos;
    }
    // Consumers per place in CSR layout, so a node only examines
    // transitions fed by its marked places. Input-less transitions stay
    // enabled everywhere.
    let mut always_enabled: Vec<usize> = Vec::new();
    let mut consumer_offsets = vec![0usize; n_places + 1];
    let mut total_pre = 0usize;
    for t in 0..net.transition_count() {
        let pre = net.pre_places(TransitionId(t));
        if pre.is_empty() {
            always_enabled.push(t);
        }
        total_pre += pre.len();
        for p in pre {
            consumer_offsets[p.0 + 1] += 1;
        }
    }
    for i in 0..n_places {
        consumer_offsets[i + 1] += consumer_offsets[i];
    }
    let mut consumers = vec![0usize; total_pre];
    let mut cursor = consumer_offsets.clone();
    for t in 0..net.transition_count() {
        for p in net.pre_places(TransitionId(t)) {
            consumers[cursor[p.0]] = t;
            cursor[p.0] += 1;
        }
    }

    // Dense marking vectors keep the inner loop allocation-light.
    let to_dense = |m: &Marking| {
        let mut v = vec![0u32; n_places];
        for (p, count) in m.entries() {
            v[p.0] = count;
        }
        v
    };
    let initial = to_dense(net.initial_marking());
    let final_marking = to_dense(net.final_marking());

    struct Node {
        marking: Vec<u32>,
        parent: Option<usize>,
        via: Option<usize>,
        cost: u64,
    }
    const SETTLED: u64 = u64::MAX;
    let mut heap: BinaryHeap<(Reverse<u64>, usize)> = BinaryHeap::new();
    heap.push((Reverse(heuristic(&initial)), 0));
    // Best-known cost per marking; SETTLED marks finalized ones.
    let mut best: HashMap<Vec<u32>, u64, FxBuildHasher> = HashMap::default();
    best.insert(initial.clone(), 0);
    let mut nodes = vec![Node {
        marking: initial,
        parent: None,
        via: None,
        cost: 0,
    }];
    let mut settled_count = 0usize;
    let mut stamp = vec![u32::MAX; net.transition_count()];
    let mut epoch = 0u32;
    let mut candidates: Vec<usize> = Vec::new();

    while let Some((Reverse(_), idx)) = heap.pop() {
        {
            let state = best
                .get_mut(&nodes[idx].marking)
                .expect("pushed markings are tracked");
            if *state == SETTLED {
                continue;
            }
            *state = SETTLED;
        }
        settled_count += 1;
        if settled_count > limits.max_states {
            return Err(AlignError::StateExplosion {
                cap: limits.max_states,
            });
        }
        if nodes[idx].marking == final_marking {
            let mut rev = Vec::new();
            let mut cur = idx;
            while let Some(via) = nodes[cur].via {
                rev.push(reconstruct_move(&prod, log_net, model, via));
                cur = nodes[cur].parent.expect("non-root nodes have parents");
            }
            rev.reverse();
            return Ok(Alignment { moves: rev });
        }
        let node_cost = nodes[idx].cost;
        // Enabled transitions of this node, ordered worst class first so
        // the preferred class lands on top of the LIFO-tied heap.
        epoch = epoch.wrapping_add(1);
        candidates.clear();
        candidates.extend_from_slice(&always_enabled);
        for (p, &count) in nodes[idx].marking.iter().enumerate() {
            if count == 0 {
                continue;
            }
            for &t in &consumers[consumer_offsets[p]..consumer_offsets[p + 1]] {
                if stamp[t] == epoch {
                    continue;
                }
                stamp[t] = epoch;
                if net
                    .pre_places(TransitionId(t))
                    .iter()
                    .all(|q| nodes[idx].marking[q.0] > 0)
                {
                    candidates.push(t);
                }
            }
        }
        candidates.sort_unstable_by_key(|&t| std::cmp::Reverse(rank[t]));
        for ci in 0..candidates.len() {
            let t = candidates[ci];
            let mut next = nodes[idx].marking.clone();
            for p in net.pre_places(TransitionId(t)) {
                next[p.0] -= 1;
            }
            for p in net.post_places(TransitionId(t)) {
                next[p.0] += 1;
            }
            let g = node_cost + classes[t].1;
            match best.entry(next) {
                std::collections::hash_map::Entry::Occupied(mut o) => {
                    if *o.get() == SETTLED || g >= *o.get() {
                        continue;
                    }
                    *o.get_mut() = g;
                    let marking = o.key().clone();
                    let f = g + heuristic(&marking);
                    nodes.push(Node {
                        marking,
                        parent: Some(idx),
                        via: Some(t),
                        cost: g,
                    });
                    heap.push((Reverse(f), nodes.len() - 1));
                }
                std::collections::hash_map::Entry::Vacant(v) => {
                    let marking = v.key().clone();
                    v.insert(g);
                    let f = g + heuristic(&marking);
                    nodes.push(Node {
                        marking,
                        parent: Some(idx),
                        via: Some(t),
                        cost: g,
                    });
                    heap.push((Reverse(f), nodes.len() - 1));
                }
            }
        }
    }
    Err(AlignError::UnreachableFinalMarking {
        explored: settled_count,
    })
}

fn reconstruct_move(
    prod: &crate::petri::ProductNet,
    log_net: &SystemNet,
    model: &SystemNet,
    idx: usize,
) -> Move {
    let o = prod.origins[idx];
    match (o.left, o.right) {
        (Some(lt), Some(mt)) => Move::Synchronous {
            activity: log_net
                .label(lt)
                .expect("synchronous transitions are visible")
                .to_string(),
            log_transition: lt,
            model_transition: mt,
        },
        (Some(lt), None) => Move::Log {
            label: log_net.label(lt).map(str::to_string),
            transition: lt,
        },
        (None, Some(mt)) => Move::Model {
            label: model.label(mt).map(str::to_string),
            transition: mt,
        },
        (None, None) => unreachable!("product transitions have an origin"),
    }
}

/// FxHash-style multiply-xor hasher; markings are short arrays of small
/// integers, where SipHash overhead dominates lookups.
#[derive(Default, Clone)]
struct FxHasher(u64);

impl std::hash::Hasher for FxHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        const K: u64 = 0x517c_c1b7_2722_0a95;
        let mut chunks = bytes.chunks_exact(8);
        for chunk in &mut chunks {
            let w = u64::from_le_bytes(chunk.try_into().unwrap());
            self.0 = (self.0.rotate_left(5) ^ w).wrapping_mul(K);
        }
        let mut tail = 0u64;
        for &b in chunks.remainder() {
            tail = (tail << 8) | b as u64;
        }
        self.0 = (self.0.rotate_left(5) ^ tail).wrapping_mul(K);
    }
}

type FxBuildHasher = std::hash::BuildHasherDefault<FxHasher>;

/// Cost bound with the realization that attains it and the alignment
/// behind it.
#[derive(Clone, Debug)]
pub struct BoundOutcome {
    pub cost: u64,
    pub witness: ActivitySequence,
    pub alignment: Alignment,
}

/// Both conformance-cost extremes of an uncertain trace against a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConformanceBounds {
    pub lower: u64,
    pub upper: u64,
    pub lower_witness: ActivitySequence,
    pub upper_witness: ActivitySequence,
}

/// Lower conformance-cost bound: aligns the behavior net once. The log
/// projection of the alignment is the minimizing realization.
pub fn lower_bound(
    trace: &SimpleUncertainTrace,
    model: &SystemNet,
    c: &CostFunction,
    limits: &SearchLimits,
) -> Result<BoundOutcome, AlignError> {
    let bn = behavior_net(trace);
    let alignment = align(&bn, model, c, limits)?;
    Ok(BoundOutcome {
        cost: alignment.cost(c),
        witness: alignment.log_projection(),
        alignment,
    })
}

/// Upper conformance-cost bound by enumerating all realizations (at most
/// `cap`) and aligning each one's event net.
pub fn upper_bound(
    trace: &SimpleUncertainTrace,
    model: &SystemNet,
    c: &CostFunction,
    cap: usize,
    limits: &SearchLimits,
) -> Result<BoundOutcome, AlignError> {
    let mut worst: Option<BoundOutcome> = None;
    for seq in realizations(trace, cap)? {
        let alignment = align(&event_net(&seq), model, c, limits)?;
        let cost = alignment.cost(c);
        if worst.as_ref().is_none_or(|w| cost > w.cost) {
            worst = Some(BoundOutcome {
                cost,
                witness: seq,
                alignment,
            });
        }
    }
    Ok(worst.expect("realization sets are never empty"))
}

/// Brute-force evaluation of both bounds: enumerates realizations, aligns
/// each, and keeps the extremes. Serves as the oracle for [`lower_bound`]
/// and as the baseline of the timing comparison.
pub fn bounds_bruteforce(
    trace: &SimpleUncertainTrace,
    model: &SystemNet,
    c: &CostFunction,
    cap: usize,
    limits: &SearchLimits,
) -> Result<ConformanceBounds, AlignError> {
    let mut lower: Option<(u64, ActivitySequence)> = None;
    let mut upper: Option<(u64, ActivitySequence)> = None;
    for seq in realizations(trace, cap)? {
        let alignment = align(&event_net(&seq), model, c, limits)?;
        let cost = alignment.cost(c);
        if lower.as_ref().is_none_or(|(l, _)| cost < *l) {
            lower = Some((cost, seq.clone()));
        }
        if upper.as_ref().is_none_or(|(u, _)| cost > *u) {
            upper = Some((cost, seq));
        }
    }
    let (lower, lower_witness) = lower.expect("realization sets are never empty");
    let (upper, upper_witness) = upper.expect("realization sets are never empty");
    Ok(ConformanceBounds {
        lower,
        upper,
        lower_witness,
        upper_witness,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::petri::NetBuilder;
    use crate::uncertain_log::{EventId, SimpleUncertainEvent, Timestamp};

    fn seq(items: &[&str]) -> ActivitySequence {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn limits() -> SearchLimits {
        SearchLimits::default()
    }

    #[test]
    fn identical_languages_align_at_zero() {
        let log = event_net(&seq(&["A"]));
        let model = event_net(&seq(&["A"]));
        let a = align(&log, &model, &CostFunction::default(), &limits()).unwrap();
        assert_eq!(a.cost(&CostFunction::default()), 0);
        assert_eq!(a.moves.len(), 1);
        assert!(matches!(a.moves[0], Move::Synchronous { .. }));
    }

    #[test]
    fn empty_trace_pays_model_moves() {
        let log = event_net(&[]);
        let model = event_net(&seq(&["A", "B"]));
        let a = align(&log, &model, &CostFunction::default(), &limits()).unwrap();
        assert_eq!(a.cost(&CostFunction::default()), 2);
        assert!(a
            .moves
            .iter()
            .all(|m| matches!(m, Move::Model { label: Some(_), .. })));
    }

    #[test]
    fn extra_log_activity_costs_one() {
        let log = event_net(&seq(&["A", "X"]));
        let model = event_net(&seq(&["A"]));
        let a = align(&log, &model, &CostFunction::default(), &limits()).unwrap();
        assert_eq!(a.cost(&CostFunction::default()), 1);
        assert_eq!(a.log_projection(), seq(&["A", "X"]));
    }

    #[test]
    fn cost_of_empty_alignment_is_zero() {
        let a = Alignment::default();
        assert_eq!(cost(&a, &CostFunction::default()), 0);
    }

    #[test]
    fn tau_model_moves_are_free_by_default() {
        // Model: A then an invisible step then B.
        let mut b = NetBuilder::new();
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        let p3 = b.add_place("p3");
        let p4 = b.add_place("p4");
        let ta = b.add_transition("ta", Some("A".into()));
        let tt = b.add_transition("tt", None);
        let tb = b.add_transition("tb", Some("B".into()));
        b.arc_pt(p1, ta);
        b.arc_tp(ta, p2);
        b.arc_pt(p2, tt);
        b.arc_tp(tt, p3);
        b.arc_pt(p3, tb);
        b.arc_tp(tb, p4);
        b.initial_marking(Marking::from_places([p1]));
        b.final_marking(Marking::from_places([p4]));
        let model = b.build().unwrap();
        let log = event_net(&seq(&["A", "B"]));
        let a = align(&log, &model, &CostFunction::default(), &limits()).unwrap();
        assert_eq!(a.cost(&CostFunction::default()), 0);
        assert_eq!(a.moves.len(), 3);
        assert!(a
            .moves
            .iter()
            .any(|m| matches!(m, Move::Model { label: None, .. })));
    }

    #[test]
    fn unreachable_final_marking_is_reported() {
        let mut b = NetBuilder::new();
        let p1 = b.add_place("p1");
        let p2 = b.add_place("p2");
        b.initial_marking(Marking::from_places([p1]));
        b.final_marking(Marking::from_places([p2]));
        let model = b.build().unwrap();
        let log = event_net(&[]);
        assert!(matches!(
            align(&log, &model, &CostFunction::default(), &limits()),
            Err(AlignError::UnreachableFinalMarking { .. })
        ));
    }

    #[test]
    fn state_cap_is_enforced() {
        let log = event_net(&seq(&["A", "B", "C"]));
        let model = event_net(&seq(&["A", "B", "C"]));
        let tight = SearchLimits { max_states: 2 };
        assert!(matches!(
            align(&log, &model, &CostFunction::default(), &tight),
            Err(AlignError::StateExplosion { cap: 2 })
        ));
    }

    #[test]
    fn alignment_is_deterministic() {
        let log = event_net(&seq(&["A", "B"]));
        let model = event_net(&seq(&["B", "A"]));
        let c = CostFunction::default();
        let a1 = align(&log, &model, &c, &limits()).unwrap();
        let a2 = align(&log, &model, &c, &limits()).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.cost(&c), 2);
    }

    fn one_event_trace(indeterminate: bool) -> SimpleUncertainTrace {
        SimpleUncertainTrace::new(vec![SimpleUncertainEvent::new(
            EventId::new("e1"),
            BTreeSet::from(["A".to_string()]),
            Timestamp(0),
            Timestamp(0),
            indeterminate,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn certain_trace_bounds_coincide() {
        let trace = one_event_trace(false);
        let model = event_net(&seq(&["A"]));
        let c = CostFunction::default();
        let lo = lower_bound(&trace, &model, &c, &limits()).unwrap();
        let hi = upper_bound(&trace, &model, &c, 100, &limits()).unwrap();
        assert_eq!(lo.cost, 0);
        assert_eq!(hi.cost, 0);
        let bounds = bounds_bruteforce(&trace, &model, &c, 100, &limits()).unwrap();
        assert_eq!(bounds.lower, 0);
        assert_eq!(bounds.upper, 0);
    }

    #[test]
    fn indeterminate_event_spreads_bounds() {
        let trace = one_event_trace(true);
        let model = event_net(&seq(&["A"]));
        let c = CostFunction::default();
        let lo = lower_bound(&trace, &model, &c, &limits()).unwrap();
        let hi = upper_bound(&trace, &model, &c, 100, &limits()).unwrap();
        assert_eq!(lo.cost, 0);
        assert_eq!(lo.witness, seq(&["A"]));
        assert_eq!(hi.cost, 1);
        assert_eq!(hi.witness, Vec::<String>::new());
    }

    #[test]
    fn bruteforce_explosion_propagates() {
        let trace = SimpleUncertainTrace::new(vec![
            SimpleUncertainEvent::new(
                EventId::new("e1"),
                BTreeSet::from(["A".to_string()]),
                Timestamp(0),
                Timestamp(10),
                false,
            )
            .unwrap(),
            SimpleUncertainEvent::new(
                EventId::new("e2"),
                BTreeSet::from(["B".to_string()]),
                Timestamp(0),
                Timestamp(10),
                false,
            )
            .unwrap(),
        ])
        .unwrap();
        let model = event_net(&seq(&["A"]));
        let err = bounds_bruteforce(&trace, &model, &CostFunction::default(), 1, &limits());
        assert!(matches!(
            err,
            Err(AlignError::Log(LogError::RealizationExplosion { .. }))
        ));
    }

    #[test]
    fn two_row_rendering() {
        let log = event_net(&seq(&["A", "X"]));
        let model = event_net(&seq(&["A"]));
        let a = align(&log, &model, &CostFunction::default(), &limits()).unwrap();
        let text = a.render_two_row();
        assert_eq!(text, "log   | A | X \nmodel | A | >>\n");
        let records = a.to_records(&log, &model);
        assert_eq!(records[0].kind, "sync");
        assert_eq!(records[1].kind, "log");
        assert_eq!(records[1].activity.as_deref(), Some("X"));
    }
}
