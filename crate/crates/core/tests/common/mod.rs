#![allow(dead_code)]

//! Test-only oracles and generators, independent of the implementation
//! paths they check.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ucc_core::{
    ActivitySequence, CostFunction, EventId, Marking, NetBuilder, PlaceId, SimpleUncertainEvent,
    SimpleUncertainTrace, SystemNet, Timestamp, TransitionId, MILLIS_PER_DAY,
};

pub fn ts(day: i64) -> Timestamp {
    Timestamp(day * MILLIS_PER_DAY)
}

pub fn ev(
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

pub fn seq(items: &[&str]) -> ActivitySequence {
    items.iter().map(|s| s.to_string()).collect()
}

/// The five-event running example: certain A, {B,C}, D with an uncertain
/// timestamp spanning its neighbors, {A,C}, and an indeterminate E.
pub fn running_example() -> SimpleUncertainTrace {
    SimpleUncertainTrace::new(vec![
        ev("e1", &["A"], 5, 5, false),
        ev("e2", &["B", "C"], 7, 7, false),
        ev("e3", &["D"], 6, 10, false),
        ev("e4", &["A", "C"], 9, 9, false),
        ev("e5", &["E"], 11, 11, true),
    ])
    .unwrap()
}

// ---------------------------------------------------------------------------
// Timed-realization oracle.
//
// Enumerates the untimed projections of all timed realizations directly
// from the definition: choose a subset containing the determinate events,
// an order, and check that strictly increasing real-valued timestamps
// exist within the closed intervals. Exact for integer interval bounds.

pub fn timed_realizations_oracle(trace: &SimpleUncertainTrace) -> BTreeSet<ActivitySequence> {
    let events = trace.events();
    let n = events.len();
    let optional: Vec<usize> = (0..n).filter(|&i| events[i].indeterminate).collect();
    let required: Vec<usize> = (0..n).filter(|&i| !events[i].indeterminate).collect();
    let mut out = BTreeSet::new();
    for mask in 0..(1u64 << optional.len()) {
        let mut chosen = required.clone();
        for (k, &i) in optional.iter().enumerate() {
            if mask & (1 << k) != 0 {
                chosen.push(i);
            }
        }
        permute(&mut chosen.clone(), 0, &mut |order| {
            if chain_feasible(order, trace) {
                expand_activities(order, trace, &mut Vec::new(), &mut out);
            }
        });
    }
    out
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Feasibility of strictly increasing real timestamps t_i in the closed
/// intervals of `order`. Tracks the infimum of the previous timestamp and
/// whether it is attained.
fn chain_feasible(order: &[usize], trace: &SimpleUncertainTrace) -> bool {
    let mut inf: Option<(i64, bool)> = None; // (value, attained)
    for &i in order {
        let (lo, hi) = (trace.events()[i].t_min.0, trace.events()[i].t_max.0);
        let (value, attained) = match inf {
            None => (lo, true),
            Some((prev, prev_attained)) => {
                if lo > prev {
                    (lo, true)
                } else {
                    // Must exceed every admissible previous value, whose
                    // infimum is `prev`; the bound itself is unreachable.
                    let _ = prev_attained;
                    (prev, false)
                }
            }
        };
        if value > hi || (value == hi && !attained) {
            return false;
        }
        inf = Some((value, attained));
    }
    true
}

fn expand_activities(
    order: &[usize],
    trace: &SimpleUncertainTrace,
    prefix: &mut Vec<String>,
    out: &mut BTreeSet<ActivitySequence>,
) {
    if prefix.len() == order.len() {
        out.insert(prefix.clone());
        return;
    }
    let event = &trace.events()[order[prefix.len()]];
    for a in &event.activities {
        prefix.push(a.clone());
        expand_activities(order, trace, prefix, out);
        prefix.pop();
    }
}

// ---------------------------------------------------------------------------
// Minimum-alignment-cost oracle.
//
// Dynamic programming over pairs of markings, moving on the two nets
// directly rather than through a product construction. Requires acyclic
// state spaces (event nets, behavior nets, generated block models).

pub fn min_alignment_cost_oracle(
    log_net: &SystemNet,
    model: &SystemNet,
    c: &CostFunction,
) -> Option<u64> {
    let mut memo: HashMap<(Marking, Marking), Option<u64>> = HashMap::new();
    best_cost(
        log_net,
        model,
        c,
        log_net.initial_marking().clone(),
        model.initial_marking().clone(),
        &mut memo,
    )
}

fn best_cost(
    log_net: &SystemNet,
    model: &SystemNet,
    c: &CostFunction,
    m1: Marking,
    m2: Marking,
    memo: &mut HashMap<(Marking, Marking), Option<u64>>,
) -> Option<u64> {
    let key = (m1.clone(), m2.clone());
    if let Some(hit) = memo.get(&key) {
        return *hit;
    }
    let mut best: Option<u64> = if &m1 == log_net.final_marking() && &m2 == model.final_marking()
    {
        Some(0)
    } else {
        None
    };
    let mut consider = |cost: u64, rest: Option<u64>| {
        if let Some(r) = rest {
            let total = cost + r;
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    };
    for t1 in log_net.transition_ids() {
        if !log_net.is_enabled(&m1, t1) {
            continue;
        }
        let step = if log_net.label(t1).is_some() {
            c.log_move
        } else {
            c.tau
        } as u64;
        let next = log_net.fire(&m1, t1).unwrap();
        let rest = best_cost(log_net, model, c, next, m2.clone(), memo);
        consider(step, rest);
    }
    for t2 in model.transition_ids() {
        if !model.is_enabled(&m2, t2) {
            continue;
        }
        let step = if model.label(t2).is_some() {
            c.model_move
        } else {
            c.tau
        } as u64;
        let next = model.fire(&m2, t2).unwrap();
        let rest = best_cost(log_net, model, c, m1.clone(), next, memo);
        consider(step, rest);
    }
    for t1 in log_net.transition_ids() {
        let Some(a) = log_net.label(t1) else { continue };
        if !log_net.is_enabled(&m1, t1) {
            continue;
        }
        for t2 in model.transition_ids() {
            if model.label(t2) != Some(a) || !model.is_enabled(&m2, t2) {
                continue;
            }
            let n1 = log_net.fire(&m1, t1).unwrap();
            let n2 = model.fire(&m2, t2).unwrap();
            let rest = best_cost(log_net, model, c, n1, n2, memo);
            consider(c.sync as u64, rest);
        }
    }
    memo.insert(key, best);
    best
}

// ---------------------------------------------------------------------------
// Naive enabled/fire reference working from the raw arc list.

pub fn naive_enabled(net: &SystemNet, m: &Marking) -> Vec<TransitionId> {
    net.transition_ids()
        .filter(|&t| {
            net.pt_arcs()
                .filter(|&(_, t2)| t2 == t)
                .all(|(p, _)| m.count(p) >= 1)
        })
        .collect()
}

pub fn naive_fire(net: &SystemNet, m: &Marking, t: TransitionId) -> Marking {
    let mut counts: BTreeMap<PlaceId, i64> =
        m.entries().map(|(p, c)| (p, c as i64)).collect();
    for (p, t2) in net.pt_arcs() {
        if t2 == t {
            *counts.entry(p).or_insert(0) -= 1;
        }
    }
    for (t2, p) in net.tp_arcs() {
        if t2 == t {
            *counts.entry(p).or_insert(0) += 1;
        }
    }
    let mut out = Marking::empty();
    for (p, c) in counts {
        assert!(c >= 0, "reference fire underflow");
        out.add(p, c as u32);
    }
    out
}

// ---------------------------------------------------------------------------
// Random structure generators (plain RNG; property tests seed them from
// proptest-chosen values).

pub fn random_net(seed: u64) -> (SystemNet, Marking) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = NetBuilder::new();
    let n_places = rng.gen_range(1..=10);
    let n_transitions = rng.gen_range(1..=8);
    let places: Vec<PlaceId> = (0..n_places).map(|i| b.add_place(format!("p{i}"))).collect();
    let labels = ["A", "B", "C"];
    let transitions: Vec<TransitionId> = (0..n_transitions)
        .map(|i| {
            let label = if rng.gen_bool(0.7) {
                Some(labels[rng.gen_range(0..labels.len())].to_string())
            } else {
                None
            };
            b.add_transition(format!("t{i}"), label)
        })
        .collect();
    for &p in &places {
        for &t in &transitions {
            if rng.gen_bool(0.25) {
                b.arc_pt(p, t);
            }
            if rng.gen_bool(0.25) {
                b.arc_tp(t, p);
            }
        }
    }
    let mut init = Marking::empty();
    let mut fin = Marking::empty();
    for &p in &places {
        init.add(p, rng.gen_range(0..=2));
        fin.add(p, rng.gen_range(0..=2));
    }
    b.initial_marking(init.clone());
    b.final_marking(fin);
    let mut marking = Marking::empty();
    for &p in &places {
        marking.add(p, rng.gen_range(0..=2));
    }
    (b.build().unwrap(), marking)
}

/// Random uncertain trace; when `distinct_endpoints` is set, all interval
/// bounds take globally distinct values so no boundary case (touching
/// intervals, equal point timestamps) occurs.
pub fn random_trace(seed: u64, max_events: usize, distinct_endpoints: bool) -> SimpleUncertainTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=max_events);
    let labels = ["A", "B", "C", "D"];
    let mut events = Vec::with_capacity(n);
    if distinct_endpoints {
        let mut values = BTreeSet::new();
        while values.len() < 2 * n {
            values.insert(rng.gen_range(0..10_000i64));
        }
        let mut values: Vec<i64> = values.into_iter().collect();
        // Fisher-Yates over the distinct values, then consume in pairs.
        for i in (1..values.len()).rev() {
            values.swap(i, rng.gen_range(0..=i));
        }
        for i in 0..n {
            let (a, b) = (values[2 * i], values[2 * i + 1]);
            let (lo, hi) = (a.min(b), a.max(b));
            events.push(random_event(&mut rng, i, &labels, lo, hi));
        }
    } else {
        for i in 0..n {
            let a = rng.gen_range(0..50i64);
            let b = rng.gen_range(0..50i64);
            let (lo, hi) = (a.min(b), a.max(b));
            events.push(random_event(&mut rng, i, &labels, lo, hi));
        }
    }
    SimpleUncertainTrace::new(events).unwrap()
}

fn random_event(
    rng: &mut ChaCha8Rng,
    index: usize,
    labels: &[&str],
    lo: i64,
    hi: i64,
) -> SimpleUncertainEvent {
    let mut activities = BTreeSet::from([labels[rng.gen_range(0..labels.len())].to_string()]);
    if rng.gen_bool(0.4) {
        activities.insert(labels[rng.gen_range(0..labels.len())].to_string());
    }
    SimpleUncertainEvent::new(
        EventId::new(format!("e{}", index + 1)),
        activities,
        Timestamp(lo),
        Timestamp(hi),
        rng.gen_bool(0.3),
    )
    .unwrap()
}

/// Reachability pairs (paths of length >= 1) of a DAG edge set.
pub fn transitive_closure(
    vertex_count: usize,
    edges: &BTreeSet<(usize, usize)>,
) -> BTreeSet<(usize, usize)> {
    let mut closure: BTreeSet<(usize, usize)> = edges.clone();
    loop {
        let mut grew = false;
        let pairs: Vec<(usize, usize)> = closure.iter().copied().collect();
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                if b == c && closure.insert((a, d)) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    debug_assert!(closure
        .iter()
        .all(|&(a, b)| a < vertex_count && b < vertex_count));
    closure
}
