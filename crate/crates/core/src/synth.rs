//! Synthetic data pipeline: block-structured model generation, playout,
//! deviation injection and probability-driven uncertainty injection.
//!
//! All randomness flows through named ChaCha streams derived from one
//! master seed, split per trace and per event, so results are
//! bit-reproducible and independent of evaluation order. Uncertainty
//! injection draws its coin flips once per event independently of `p`,
//! which makes the injected uncertainty pointwise monotone in `p` under a
//! fixed seed.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::petri::{Marking, NetBuilder, PlaceId, SystemNet};
use crate::uncertain_log::{
    EventId, SimpleUncertainEvent, SimpleUncertainTrace, Timestamp, MILLIS_PER_DAY,
};

/// A certain timed trace: visible activities with strictly increasing
/// timestamps.
pub type TimedTrace = Vec<(String, Timestamp)>;

/// Default widening radius: 1.5 days against the generator's 1-day event
/// spacing, so a widened event overlaps exactly its neighbors.
pub const DEFAULT_INTERVAL_RADIUS_MS: i64 = MILLIS_PER_DAY + MILLIS_PER_DAY / 2;

const PLAYOUT_STEP_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("playout exceeded {0} steps without reaching the final marking")]
    StepCap(usize),
    #[error("playout deadlocked before reaching the final marking")]
    DeadEnd,
}

/// Per-event and per-trace deviation probabilities.
#[derive(Clone, Copy, Debug)]
pub struct DeviationParams {
    pub wrong_activity_prob: f64,
    pub swap_prob: f64,
    pub extra_event_prob: f64,
}

impl Default for DeviationParams {
    fn default() -> Self {
        DeviationParams {
            wrong_activity_prob: 0.20,
            swap_prob: 0.20,
            extra_event_prob: 0.40,
        }
    }
}

impl DeviationParams {
    pub fn none() -> Self {
        DeviationParams {
            wrong_activity_prob: 0.0,
            swap_prob: 0.0,
            extra_event_prob: 0.0,
        }
    }
}

/// Uncertainty injection parameters: each event independently gains an
/// alternative activity, a widened timestamp interval and indeterminacy,
/// each with probability `p`.
#[derive(Clone, Debug)]
pub struct UncertaintyParams {
    pub p: f64,
    pub activity_pool: BTreeSet<String>,
    pub interval_radius_ms: i64,
}

impl UncertaintyParams {
    pub fn new(p: f64, activity_pool: BTreeSet<String>) -> Self {
        UncertaintyParams {
            p,
            activity_pool,
            interval_radius_ms: DEFAULT_INTERVAL_RADIUS_MS,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent, portable RNG stream for a (seed, lane...) path.
fn stream(seed: u64, lane: &[u64]) -> ChaCha8Rng {
    let mut s = splitmix64(seed);
    for &x in lane {
        s = splitmix64(s ^ x);
    }
    ChaCha8Rng::seed_from_u64(s)
}

struct ModelGen {
    builder: NetBuilder,
    rng: ChaCha8Rng,
    labels_minted: usize,
    taus_minted: usize,
    places_minted: usize,
}

impl ModelGen {
    fn fresh_label(&mut self) -> String {
        let l = format!("a{}", self.labels_minted);
        self.labels_minted += 1;
        l
    }

    fn fresh_place(&mut self) -> PlaceId {
        let p = self.builder.add_place(format!("p{}", self.places_minted));
        self.places_minted += 1;
        p
    }

    fn fresh_tau(&mut self) -> String {
        let t = format!("tau{}", self.taus_minted);
        self.taus_minted += 1;
        t
    }

    /// Emits a block with `n` visible transitions between `entry` and
    /// `exit`.
    fn block(&mut self, n: usize, entry: PlaceId, exit: PlaceId) {
        if n == 1 {
            let label = self.fresh_label();
            let t = self.builder.add_transition(format!("t_{label}"), Some(label));
            self.builder.arc_pt(entry, t);
            self.builder.arc_tp(t, exit);
            return;
        }
        let op = self.rng.gen_range(0..3u8);
        let k = self.rng.gen_range(1..n);
        match op {
            // Sequence.
            0 => {
                let mid = self.fresh_place();
                self.block(k, entry, mid);
                self.block(n - k, mid, exit);
            }
            // Exclusive choice: both branches share entry and exit.
            1 => {
                self.block(k, entry, exit);
                self.block(n - k, entry, exit);
            }
            // Parallel: invisible split and join around two branches.
            _ => {
                let name = self.fresh_tau();
                let split = self.builder.add_transition(format!("{name}_split"), None);
                let join = self.builder.add_transition(format!("{name}_join"), None);
                self.builder.arc_pt(entry, split);
                self.builder.arc_tp(join, exit);
                for part in [k, n - k] {
                    let b_in = self.fresh_place();
                    let b_out = self.fresh_place();
                    self.builder.arc_tp(split, b_in);
                    self.builder.arc_pt(b_out, join);
                    self.block(part, b_in, b_out);
                }
            }
        }
    }
}

/// Generates a block-structured workflow net with exactly `n` visible
/// transitions by recursive composition of sequence, XOR and AND blocks.
/// Labels are fresh, there are no loops, and the net is sound by
/// construction.
pub fn generate_model(n: usize, seed: u64) -> SystemNet {
    assert!(n >= 1, "a model needs at least one transition");
    let mut gen = ModelGen {
        builder: NetBuilder::new(),
        rng: stream(seed, &[0]),
        labels_minted: 0,
        taus_minted: 0,
        places_minted: 0,
    };
    let source = gen.builder.add_place("source");
    let sink = gen.builder.add_place("sink");
    gen.block(n, source, sink);
    gen.builder.initial_marking(Marking::from_places([source]));
    gen.builder.final_marking(Marking::from_places([sink]));
    gen.builder.build().expect("generator output is closed")
}

/// Random playout: walks the model `num_traces` times from the initial to
/// the final marking, choosing uniformly among enabled transitions, and
/// stamps visible events one day apart.
pub fn playout(
    model: &SystemNet,
    num_traces: usize,
    seed: u64,
) -> Result<Vec<TimedTrace>, SynthError> {
    let mut out = Vec::with_capacity(num_traces);
    for i in 0..num_traces {
        let mut rng = stream(seed, &[1, i as u64]);
        let mut marking = model.initial_marking().clone();
        let mut trace = TimedTrace::new();
        let mut steps = 0usize;
        while &marking != model.final_marking() {
            steps += 1;
            if steps > PLAYOUT_STEP_CAP {
                return Err(SynthError::StepCap(PLAYOUT_STEP_CAP));
            }
            let enabled = model.enabled(&marking).expect("marking belongs to model");
            if enabled.is_empty() {
                return Err(SynthError::DeadEnd);
            }
            let t = enabled[rng.gen_range(0..enabled.len())];
            if let Some(label) = model.label(t) {
                let day = trace.len() as i64 + 1;
                trace.push((label.to_string(), Timestamp(day * MILLIS_PER_DAY)));
            }
            marking = model.fire(&marking, t).expect("enabled transition fires");
        }
        out.push(trace);
    }
    Ok(out)
}

/// Injects deviations per the experiment recipe: per event a wrong-activity
/// replacement, per consecutive pair a timestamp swap (events are re-sorted
/// afterwards), per trace one optional extra event at a random position.
pub fn inject_deviations(
    log: &[TimedTrace],
    params: &DeviationParams,
    seed: u64,
) -> Vec<TimedTrace> {
    let alphabet: Vec<String> = log
        .iter()
        .flat_map(|t| t.iter().map(|(a, _)| a.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = Vec::with_capacity(log.len());
    for (i, trace) in log.iter().enumerate() {
        let mut rng = stream(seed, &[2, i as u64]);
        let mut trace = trace.clone();
        for (activity, _) in trace.iter_mut() {
            if rng.gen::<f64>() < params.wrong_activity_prob {
                let others: Vec<&String> =
                    alphabet.iter().filter(|a| *a != activity).collect();
                if !others.is_empty() {
                    *activity = others[rng.gen_range(0..others.len())].clone();
                }
            }
        }
        for j in 0..trace.len().saturating_sub(1) {
            if rng.gen::<f64>() < params.swap_prob {
                let tj = trace[j].1;
                trace[j].1 = trace[j + 1].1;
                trace[j + 1].1 = tj;
            }
        }
        trace.sort_by_key(|(_, t)| *t);
        if rng.gen::<f64>() < params.extra_event_prob && !alphabet.is_empty() {
            let pos = rng.gen_range(0..=trace.len());
            let label = alphabet[rng.gen_range(0..alphabet.len())].clone();
            let t = if trace.is_empty() {
                Timestamp(MILLIS_PER_DAY)
            } else if pos == 0 {
                Timestamp(trace[0].1 .0 - MILLIS_PER_DAY)
            } else if pos == trace.len() {
                Timestamp(trace[trace.len() - 1].1 .0 + MILLIS_PER_DAY)
            } else {
                Timestamp((trace[pos - 1].1 .0 + trace[pos].1 .0) / 2)
            };
            trace.insert(pos, (label, t));
        }
        out.push(trace);
    }
    out
}

/// Adds strong uncertainty to a certain timed log. Per event, three
/// independent uniform draws are taken from the event's own stream and
/// compared against `p`: below-`p` draws add one alternative activity,
/// widen the timestamp to `[t - r, t + r]`, or mark the event
/// indeterminate. Because the draws and the alternative-activity choice
/// do not depend on `p`, the injection at `p1 <= p2` is a pointwise
/// coarsening of the one at `p2` for the same seed.
pub fn inject_uncertainty(
    log: &[TimedTrace],
    params: &UncertaintyParams,
    seed: u64,
) -> Vec<SimpleUncertainTrace> {
    let pool: Vec<&String> = params.activity_pool.iter().collect();
    let mut out = Vec::with_capacity(log.len());
    for (i, trace) in log.iter().enumerate() {
        let mut events = Vec::with_capacity(trace.len());
        for (j, (activity, t)) in trace.iter().enumerate() {
            let mut rng = stream(seed, &[3, i as u64, j as u64]);
            let d_activity = rng.gen::<f64>();
            let alt_pick = rng.gen::<f64>();
            let d_time = rng.gen::<f64>();
            let d_indet = rng.gen::<f64>();

            let mut activities = BTreeSet::from([activity.clone()]);
            if d_activity < params.p {
                let alternatives: Vec<&&String> =
                    pool.iter().filter(|a| **a != activity).collect();
                if !alternatives.is_empty() {
                    let idx = ((alt_pick * alternatives.len() as f64) as usize)
                        .min(alternatives.len() - 1);
                    activities.insert((*alternatives[idx]).clone());
                }
            }
            let (t_min, t_max) = if d_time < params.p {
                (
                    Timestamp(t.0 - params.interval_radius_ms),
                    Timestamp(t.0 + params.interval_radius_ms),
                )
            } else {
                (*t, *t)
            };
            let indeterminate = d_indet < params.p;
            events.push(
                SimpleUncertainEvent::new(
                    EventId::new(format!("e{}", j + 1)),
                    activities,
                    t_min,
                    t_max,
                    indeterminate,
                )
                .expect("injection preserves event invariants"),
            );
        }
        out.push(SimpleUncertainTrace::new(events).expect("event ids are unique per trace"));
    }
    out
}
