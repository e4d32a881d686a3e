//! Behavior graphs and behavior nets.
//!
//! The behavior graph of an uncertain trace is the transitively reduced DAG
//! of its certain precedence relations: event `u` precedes event `v` only
//! when `u`'s timestamp interval ends strictly before `v`'s begins. The
//! behavior net replaces each vertex by an XOR block of transitions (one
//! per candidate activity, plus a tau branch for indeterminate events) and
//! each edge by a connecting place; its visible language is exactly the
//! realization set of the trace.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::petri::{Marking, NetBuilder, SystemNet};
use crate::uncertain_log::{SimpleUncertainEvent, SimpleUncertainTrace};

#[derive(Debug, Error)]
pub enum BehaviorError {
    #[error("input graph contains a cycle")]
    NotADag,
    #[error("edge references vertex {0} outside the graph")]
    UnknownVertex(usize),
}

/// Transitively reduced precedence DAG over the events of one trace.
/// Vertex `i` is the `i`-th event of the originating trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BehaviorGraph {
    events: Vec<SimpleUncertainEvent>,
    edges: BTreeSet<(usize, usize)>,
}

impl BehaviorGraph {
    pub fn events(&self) -> &[SimpleUncertainEvent] {
        &self.events
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Vertices without incoming edges.
    pub fn sources(&self) -> Vec<usize> {
        (0..self.events.len())
            .filter(|&v| !self.edges.iter().any(|&(_, w)| w == v))
            .collect()
    }

    /// Vertices without outgoing edges.
    pub fn sinks(&self) -> Vec<usize> {
        (0..self.events.len())
            .filter(|&v| !self.edges.iter().any(|&(u, _)| u == v))
            .collect()
    }

    /// Renders the graph as DOT text; vertex labels carry the event id and
    /// its activity set.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph behavior_graph {\n");
        for e in &self.events {
            let acts: Vec<&str> = e.activities.iter().map(|a| a.as_str()).collect();
            let _ = writeln!(
                s,
                "  \"{}\" [label=\"{} {{{}}}\"];",
                e.id,
                e.id,
                acts.join(", ")
            );
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "  \"{}\" -> \"{}\";", self.events[u].id, self.events[v].id);
        }
        s.push_str("}\n");
        s
    }
}

/// Transitive reduction of a DAG given as an edge set over vertices
/// `0..vertex_count`: same reachability, minimal edges, unique for DAGs.
///
/// An edge `(u, w)` is dropped exactly when `w` stays reachable from `u`
/// through another out-neighbor, decided against reachability in the input
/// graph.
pub fn transitive_reduction(
    vertex_count: usize,
    edges: &BTreeSet<(usize, usize)>,
) -> Result<BTreeSet<(usize, usize)>, BehaviorError> {
    for &(u, v) in edges {
        if u >= vertex_count {
            return Err(BehaviorError::UnknownVertex(u));
        }
        if v >= vertex_count {
            return Err(BehaviorError::UnknownVertex(v));
        }
    }
    let mut out_nbrs = vec![Vec::new(); vertex_count];
    let mut in_degree = vec![0usize; vertex_count];
    for &(u, v) in edges {
        if u == v {
            return Err(BehaviorError::NotADag);
        }
        out_nbrs[u].push(v);
        in_degree[v] += 1;
    }

    // Kahn's algorithm; doubles as the cycle check.
    let mut order = Vec::with_capacity(vertex_count);
    let mut queue: Vec<usize> = (0..vertex_count).filter(|&v| in_degree[v] == 0).collect();
    while let Some(v) = queue.pop() {
        order.push(v);
        for &w in &out_nbrs[v] {
            in_degree[w] -= 1;
            if in_degree[w] == 0 {
                queue.push(w);
            }
        }
    }
    if order.len() != vertex_count {
        return Err(BehaviorError::NotADag);
    }

    // Reachability bitsets, filled in reverse topological order.
    let words = vertex_count.div_ceil(64);
    let mut reach = vec![vec![0u64; words]; vertex_count];
    for &v in order.iter().rev() {
        reach[v][v / 64] |= 1 << (v % 64);
        let nbrs = out_nbrs[v].clone();
        for w in nbrs {
            let (a, b) = if v < w {
                let (l, r) = reach.split_at_mut(w);
                (&mut l[v], &r[0])
            } else {
                let (l, r) = reach.split_at_mut(v);
                (&mut r[0], &l[w])
            };
            for i in 0..words {
                a[i] |= b[i];
            }
        }
    }
    let reaches = |v: usize, w: usize| reach[v][w / 64] & (1 << (w % 64)) != 0;

    let mut reduced = BTreeSet::new();
    for &(u, w) in edges {
        let redundant = out_nbrs[u]
            .iter()
            .any(|&v| v != w && reaches(v, w));
        if !redundant {
            reduced.insert((u, w));
        }
    }
    Ok(reduced)
}

/// Builds the behavior graph of a trace: full precedence edges
/// `t_max(u) < t_min(v)`, then transitive reduction. The precedence
/// relation is a strict partial order, so the graph is always acyclic.
pub fn behavior_graph(trace: &SimpleUncertainTrace) -> BehaviorGraph {
    let n = trace.len();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && trace.must_precede(i, j) {
                edges.insert((i, j));
            }
        }
    }
    let edges = transitive_reduction(n, &edges).expect("interval precedence is acyclic");
    BehaviorGraph {
        events: trace.events().to_vec(),
        edges,
    }
}

/// Builds the behavior net of a trace.
///
/// Per vertex: one visible transition per candidate activity plus a tau
/// transition when the event is indeterminate, all sharing the vertex's
/// input and output places. Per graph edge: one place connecting every
/// transition of the source vertex to every transition of the target.
/// A `start` place feeds the source vertices and an `end` place collects
/// the sink vertices. With several sources (or sinks) a single token
/// cannot feed them all from one place, so an invisible fan-out (fan-in)
/// transition distributes it; the visible language is unaffected.
pub fn behavior_net(trace: &SimpleUncertainTrace) -> SystemNet {
    behavior_net_from_graph(&behavior_graph(trace))
}

/// Same construction, starting from an already-built behavior graph.
pub fn behavior_net_from_graph(bg: &BehaviorGraph) -> SystemNet {
    let mut b = NetBuilder::new();
    let n = bg.events.len();

    if n == 0 {
        // The empty trace realizes only the empty sequence.
        let p = b.add_place("start");
        b.initial_marking(Marking::from_places([p]));
        b.final_marking(Marking::from_places([p]));
        return b.build().expect("behavior net construction is closed");
    }

    let start = b.add_place("start");
    let end = b.add_place("end");

    // One XOR block of transitions per vertex.
    let mut vertex_transitions = vec![Vec::new(); n];
    for (v, event) in bg.events.iter().enumerate() {
        for a in &event.activities {
            let t = b.add_transition(format!("{}:{}", event.id, a), Some(a.clone()));
            vertex_transitions[v].push(t);
        }
        if event.indeterminate {
            let t = b.add_transition(format!("{}:tau", event.id), None);
            vertex_transitions[v].push(t);
        }
    }

    // One place per behavior-graph edge.
    for &(u, v) in &bg.edges {
        let p = b.add_place(format!("{}->{}", bg.events[u].id, bg.events[v].id));
        for &t in &vertex_transitions[u] {
            b.arc_tp(t, p);
        }
        for &t in &vertex_transitions[v] {
            b.arc_pt(p, t);
        }
    }

    let sources = bg.sources();
    let sinks = bg.sinks();

    if let [only] = sources.as_slice() {
        for &t in &vertex_transitions[*only] {
            b.arc_pt(start, t);
        }
    } else {
        let fan_out = b.add_transition("init", None);
        b.arc_pt(start, fan_out);
        for &v in &sources {
            let p = b.add_place(format!("src:{}", bg.events[v].id));
            b.arc_tp(fan_out, p);
            for &t in &vertex_transitions[v] {
                b.arc_pt(p, t);
            }
        }
    }
    if let [only] = sinks.as_slice() {
        for &t in &vertex_transitions[*only] {
            b.arc_tp(t, end);
        }
    } else {
        let fan_in = b.add_transition("final", None);
        b.arc_tp(fan_in, end);
        for &v in &sinks {
            let p = b.add_place(format!("snk:{}", bg.events[v].id));
            b.arc_pt(p, fan_in);
            for &t in &vertex_transitions[v] {
                b.arc_tp(t, p);
            }
        }
    }

    b.initial_marking(Marking::from_places([start]));
    b.final_marking(Marking::from_places([end]));
    b.build().expect("behavior net construction is closed")
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::uncertain_log::{realizations, EventId, SimpleUncertainEvent, Timestamp, MILLIS_PER_DAY};

    fn ts(day: i64) -> Timestamp {
        Timestamp(day * MILLIS_PER_DAY)
    }

    fn ev(
        id: &str,
        activities: &[&str],
        t_min: i64,
        t_max: i64,
        indeterminate: bool,
    ) -> SimpleUncertainEvent {
        SimpleUncertainEvent::new(
            EventId::new(id),
            activities.iter().map(|s| s.to_string()).collect(),
            ts(t_min),
            ts(t_max),
            indeterminate,
        )
        .unwrap()
    }

    /// The five-event trace used as running example everywhere: an
    /// uncertain activity on e2 and e4, an uncertain timestamp on e3,
    /// an indeterminate e5.
    fn running_example() -> SimpleUncertainTrace {
        SimpleUncertainTrace::new(vec![
            ev("e1", &["A"], 5, 5, false),
            ev("e2", &["B", "C"], 7, 7, false),
            ev("e3", &["D"], 6, 10, false),
            ev("e4", &["A", "C"], 9, 9, false),
            ev("e5", &["E"], 11, 11, true),
        ])
        .unwrap()
    }

    fn edges(pairs: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn reduction_textbook_triangle() {
        let r = transitive_reduction(3, &edges(&[(0, 1), (1, 2), (0, 2)])).unwrap();
        assert_eq!(r, edges(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn reduction_is_idempotent_on_chain() {
        let chain = edges(&[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(transitive_reduction(4, &chain).unwrap(), chain);
    }

    #[test]
    fn reduction_complete_dag_to_hamiltonian_path() {
        let mut full = BTreeSet::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                full.insert((i, j));
            }
        }
        let r = transitive_reduction(4, &full).unwrap();
        assert_eq!(r, edges(&[(0, 1), (1, 2), (2, 3)]));
    }

    #[test]
    fn reduction_rejects_cycles() {
        assert!(matches!(
            transitive_reduction(2, &edges(&[(0, 1), (1, 0)])),
            Err(BehaviorError::NotADag)
        ));
        assert!(matches!(
            transitive_reduction(3, &edges(&[(0, 5)])),
            Err(BehaviorError::UnknownVertex(5))
        ));
    }

    #[test]
    fn running_example_full_and_reduced_edges() {
        let trace = running_example();
        let n = trace.len();
        let mut full = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && trace.must_precede(i, j) {
                    full.insert((i, j));
                }
            }
        }
        assert_eq!(
            full,
            edges(&[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 3),
                (1, 4),
                (2, 4),
                (3, 4)
            ])
        );
        let bg = behavior_graph(&trace);
        assert_eq!(
            bg.edges(),
            &edges(&[(0, 1), (0, 2), (1, 3), (2, 4), (3, 4)])
        );
    }

    #[test]
    fn overlapping_intervals_yield_edgeless_graph() {
        let trace = SimpleUncertainTrace::new(vec![
            ev("e1", &["A"], 0, 5, false),
            ev("e2", &["B"], 1, 6, false),
            ev("e3", &["C"], 2, 7, false),
        ])
        .unwrap();
        let bg = behavior_graph(&trace);
        assert!(bg.edges().is_empty());
    }

    #[test]
    fn certain_events_yield_chain() {
        let trace = SimpleUncertainTrace::new(vec![
            ev("e1", &["A"], 1, 1, false),
            ev("e2", &["B"], 2, 2, false),
            ev("e3", &["C"], 3, 3, false),
        ])
        .unwrap();
        let bg = behavior_graph(&trace);
        assert_eq!(bg.edges(), &edges(&[(0, 1), (1, 2)]));
    }

    #[test]
    fn running_example_net_structure_and_language() {
        let trace = running_example();
        let net = behavior_net(&trace);
        // One transition per candidate activity plus one tau for the
        // indeterminate event; single source and sink, so no fan-out taus.
        assert_eq!(net.transition_count(), 8);
        assert_eq!(net.visible_transition_count(), 7);
        let lang = net.visible_language(1000).unwrap();
        let real = realizations(&trace, 1000).unwrap();
        assert_eq!(lang.len(), 24);
        assert_eq!(lang, real);
    }

    #[test]
    fn single_certain_event_matches_event_net_language() {
        let trace =
            SimpleUncertainTrace::new(vec![ev("e1", &["A"], 1, 1, false)]).unwrap();
        let net = behavior_net(&trace);
        let lang = net.visible_language(10).unwrap();
        assert_eq!(lang, BTreeSet::from([vec!["A".to_string()]]));
    }

    #[test]
    fn single_indeterminate_event_has_tau_branch() {
        let trace =
            SimpleUncertainTrace::new(vec![ev("e1", &["A"], 1, 1, true)]).unwrap();
        let net = behavior_net(&trace);
        let lang = net.visible_language(10).unwrap();
        assert_eq!(
            lang,
            BTreeSet::from([Vec::new(), vec!["A".to_string()]])
        );
    }

    #[test]
    fn concurrent_sources_and_sinks() {
        // Two incomparable determinate events: both orders, nothing else.
        let trace = SimpleUncertainTrace::new(vec![
            ev("e1", &["A"], 0, 5, false),
            ev("e2", &["B"], 0, 5, false),
        ])
        .unwrap();
        let net = behavior_net(&trace);
        let lang = net.visible_language(10).unwrap();
        assert_eq!(lang, realizations(&trace, 10).unwrap());
        assert_eq!(lang.len(), 2);
    }

    #[test]
    fn empty_trace_realizes_empty_sequence() {
        let trace = SimpleUncertainTrace::new(vec![]).unwrap();
        let net = behavior_net(&trace);
        let lang = net.visible_language(10).unwrap();
        assert_eq!(lang, BTreeSet::from([Vec::new()]));
        assert_eq!(lang, realizations(&trace, 10).unwrap());
    }

    #[test]
    fn dot_output_mentions_vertices_and_edges() {
        let bg = behavior_graph(&running_example());
        let dot = bg.to_dot();
        assert!(dot.contains("\"e2\" [label=\"e2 {B, C}\"]"));
        assert!(dot.contains("\"e1\" -> \"e2\";"));
    }
}
