//! Event-log data model with explicit uncertainty.
//!
//! Three layers: certain events, strongly uncertain events (sets of
//! candidate values plus an indeterminacy flag) and weakly uncertain events
//! (a joint probability mass over candidate value triples). Simple
//! uncertain traces reduce the strong form to what conformance checking
//! needs: an activity set, a timestamp interval and the indeterminacy flag
//! per event.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::petri::ActivitySequence;

/// Tolerance when comparing probability mass sums against 1.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Epoch milliseconds; the timestamp universe only needs a total order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_iso(s: &str) -> Option<Timestamp> {
        DateTime::parse_from_rfc3339(s)
            .ok()
            .map(|dt| Timestamp(dt.with_timezone(&Utc).timestamp_millis()))
    }

    pub fn to_iso(self) -> String {
        Utc.timestamp_millis_opt(self.0)
            .single()
            .expect("timestamp in range")
            .to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

pub const MILLIS_PER_DAY: i64 = 86_400_000;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct EventId(pub String);

impl EventId {
    pub fn new(s: impl Into<String>) -> Self {
        EventId(s.into())
    }
}

impl std::fmt::Display for EventId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("event {0}: activity set must be non-empty")]
    EmptyActivities(EventId),
    #[error("event {0}: case id set must be non-empty")]
    EmptyCaseIds(EventId),
    #[error("event {0}: timestamp set must be non-empty")]
    EmptyTimestamps(EventId),
    #[error("event {0}: t_min exceeds t_max")]
    InvertedInterval(EventId),
    #[error("duplicate event id {0}")]
    DuplicateEventId(EventId),
    #[error("event {0}: probability mass {1} outside (0, 1]")]
    BadMassEntry(EventId, f64),
    #[error("event {0}: probability mass sums to {1}, above 1")]
    InvalidDistribution(EventId, f64),
    #[error("event {0}: mass map must be non-empty unless a timestamp density is recorded")]
    EmptyMass(EventId),
    #[error("event {0}: continuous timestamp distribution without finite support")]
    UnsupportedDistribution(EventId),
    #[error("event {0}: marginal for {1} sums to {2}, expected 1")]
    BadMarginal(EventId, &'static str, f64),
    #[error("event {0}: occurrence probability {1} outside (0, 1]")]
    BadOccurrence(EventId, f64),
    #[error("no case assignment for event {0}")]
    IncompleteAssignment(EventId),
    #[error("event {0}: assigned case {1} is not among its candidate cases")]
    InvalidAssignment(EventId, String),
    #[error("realization enumeration exceeded the cap of {cap}; {partial} sequences found")]
    RealizationExplosion { cap: usize, partial: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An event with all control-flow attributes known exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertainEvent {
    pub id: EventId,
    pub case_id: String,
    pub activity: String,
    pub timestamp: Timestamp,
}

/// An event whose attributes are known only as non-empty candidate sets;
/// `indeterminate` records whether the event may not have happened at all.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StronglyUncertainEvent {
    pub id: EventId,
    pub case_ids: BTreeSet<String>,
    pub activities: BTreeSet<String>,
    pub timestamps: BTreeSet<Timestamp>,
    pub indeterminate: bool,
}

impl StronglyUncertainEvent {
    pub fn new(
        id: EventId,
        case_ids: BTreeSet<String>,
        activities: BTreeSet<String>,
        timestamps: BTreeSet<Timestamp>,
        indeterminate: bool,
    ) -> Result<Self, LogError> {
        if case_ids.is_empty() {
            return Err(LogError::EmptyCaseIds(id));
        }
        if activities.is_empty() {
            return Err(LogError::EmptyActivities(id));
        }
        if timestamps.is_empty() {
            return Err(LogError::EmptyTimestamps(id));
        }
        Ok(StronglyUncertainEvent {
            id,
            case_ids,
            activities,
            timestamps,
            indeterminate,
        })
    }

    /// Embeds a certain event as singleton candidate sets with flag `!`.
    pub fn from_certain(e: &CertainEvent) -> Self {
        StronglyUncertainEvent {
            id: e.id.clone(),
            case_ids: BTreeSet::from([e.case_id.clone()]),
            activities: BTreeSet::from([e.activity.clone()]),
            timestamps: BTreeSet::from([e.timestamp]),
            indeterminate: false,
        }
    }
}

/// Normal density over timestamps, kept as metadata only: it has no finite
/// support, so it cannot take part in the strong conversion.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalTimestampDensity {
    pub mean: Timestamp,
    pub stddev_ms: f64,
}

/// An event carrying a joint probability mass over (case, activity,
/// timestamp) triples. The mass may sum to less than 1; the deficit is the
/// probability that the event did not happen.
#[derive(Clone, Debug, PartialEq)]
pub struct WeaklyUncertainEvent {
    pub id: EventId,
    pub mass: BTreeMap<(String, String, Timestamp), f64>,
    pub timestamp_density: Option<NormalTimestampDensity>,
}

/// Timestamp part of an independent per-attribute specification.
#[derive(Clone, Debug, PartialEq)]
pub enum WeakTimestamps {
    Discrete(BTreeMap<Timestamp, f64>),
    Normal(NormalTimestampDensity),
}

/// Per-attribute distributions assumed independent, as uncertainty data is
/// typically recorded attribute by attribute.
#[derive(Clone, Debug)]
pub struct IndependentWeakSpec {
    pub id: EventId,
    pub case_ids: BTreeMap<String, f64>,
    pub activities: BTreeMap<String, f64>,
    pub timestamps: WeakTimestamps,
    /// Probability that the event occurred; below 1 makes it indeterminate.
    pub occurrence: f64,
}

impl WeaklyUncertainEvent {
    pub fn new(
        id: EventId,
        mass: BTreeMap<(String, String, Timestamp), f64>,
        timestamp_density: Option<NormalTimestampDensity>,
    ) -> Result<Self, LogError> {
        if mass.is_empty() && timestamp_density.is_none() {
            return Err(LogError::EmptyMass(id));
        }
        let mut total = 0.0;
        for &v in mass.values() {
            if v <= 0.0 || v > 1.0 + MASS_TOLERANCE {
                return Err(LogError::BadMassEntry(id, v));
            }
            total += v;
        }
        if total > 1.0 + MASS_TOLERANCE {
            return Err(LogError::InvalidDistribution(id, total));
        }
        Ok(WeaklyUncertainEvent {
            id,
            mass,
            timestamp_density,
        })
    }

    /// Builds the joint mass as the product of independent per-attribute
    /// distributions scaled by the occurrence probability. Each marginal
    /// must sum to 1. A normal timestamp density is kept as metadata and
    /// produces an event with empty mass.
    pub fn from_independent(spec: IndependentWeakSpec) -> Result<Self, LogError> {
        let check_marginal = |m: &BTreeMap<String, f64>, what: &'static str| {
            let sum: f64 = m.values().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(LogError::BadMarginal(spec.id.clone(), what, sum));
            }
            Ok(())
        };
        check_marginal(&spec.case_ids, "case ids")?;
        check_marginal(&spec.activities, "activities")?;
        if spec.occurrence <= 0.0 || spec.occurrence > 1.0 + MASS_TOLERANCE {
            return Err(LogError::BadOccurrence(spec.id.clone(), spec.occurrence));
        }
        match spec.timestamps {
            WeakTimestamps::Normal(density) => {
                WeaklyUncertainEvent::new(spec.id, BTreeMap::new(), Some(density))
            }
            WeakTimestamps::Discrete(ts) => {
                let sum: f64 = ts.values().sum();
                if (sum - 1.0).abs() > MASS_TOLERANCE {
                    return Err(LogError::BadMarginal(spec.id.clone(), "timestamps", sum));
                }
                let mut mass = BTreeMap::new();
                for (c, pc) in &spec.case_ids {
                    for (a, pa) in &spec.activities {
                        for (&t, pt) in &ts {
                            let p = pc * pa * pt * spec.occurrence;
                            if p > 0.0 {
                                mass.insert((c.clone(), a.clone(), t), p);
                            }
                        }
                    }
                }
                WeaklyUncertainEvent::new(spec.id, mass, None)
            }
        }
    }
}

/// Converts weakly uncertain events to strongly uncertain ones: candidate
/// sets are the per-coordinate supports of positive-mass triples, and the
/// event is determinate exactly when the mass sums to 1.
pub fn weak_to_strong(
    log: &[WeaklyUncertainEvent],
) -> Result<Vec<StronglyUncertainEvent>, LogError> {
    let mut out = Vec::with_capacity(log.len());
    for e in log {
        if e.mass.is_empty() {
            return Err(if e.timestamp_density.is_some() {
                LogError::UnsupportedDistribution(e.id.clone())
            } else {
                LogError::EmptyMass(e.id.clone())
            });
        }
        let mut total = 0.0;
        let mut case_ids = BTreeSet::new();
        let mut activities = BTreeSet::new();
        let mut timestamps = BTreeSet::new();
        for ((c, a, t), &p) in &e.mass {
            if p <= 0.0 {
                continue;
            }
            total += p;
            case_ids.insert(c.clone());
            activities.insert(a.clone());
            timestamps.insert(*t);
        }
        if total > 1.0 + MASS_TOLERANCE {
            return Err(LogError::InvalidDistribution(e.id.clone(), total));
        }
        let indeterminate = total < 1.0 - MASS_TOLERANCE;
        out.push(StronglyUncertainEvent::new(
            e.id.clone(),
            case_ids,
            activities,
            timestamps,
            indeterminate,
        )?);
    }
    Ok(out)
}

/// The per-event view used by conformance checking: an activity set, a
/// timestamp interval and the indeterminacy flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleUncertainEvent {
    pub id: EventId,
    pub activities: BTreeSet<String>,
    pub t_min: Timestamp,
    pub t_max: Timestamp,
    pub indeterminate: bool,
}

impl SimpleUncertainEvent {
    /// `t_min == t_max` is allowed and denotes a certain timestamp.
    pub fn new(
        id: EventId,
        activities: BTreeSet<String>,
        t_min: Timestamp,
        t_max: Timestamp,
        indeterminate: bool,
    ) -> Result<Self, LogError> {
        if activities.is_empty() {
            return Err(LogError::EmptyActivities(id));
        }
        if t_min > t_max {
            return Err(LogError::InvertedInterval(id));
        }
        Ok(SimpleUncertainEvent {
            id,
            activities,
            t_min,
            t_max,
            indeterminate,
        })
    }

    pub fn certain(id: EventId, activity: impl Into<String>, t: Timestamp) -> Self {
        SimpleUncertainEvent {
            id,
            activities: BTreeSet::from([activity.into()]),
            t_min: t,
            t_max: t,
            indeterminate: false,
        }
    }
}

/// A set of uncertain events with unique ids. Event order is preserved for
/// deterministic output but carries no meaning.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SimpleUncertainTrace {
    events: Vec<SimpleUncertainEvent>,
}

impl SimpleUncertainTrace {
    pub fn new(events: Vec<SimpleUncertainEvent>) -> Result<Self, LogError> {
        let mut seen = HashSet::new();
        for e in &events {
            if !seen.insert(e.id.clone()) {
                return Err(LogError::DuplicateEventId(e.id.clone()));
            }
        }
        Ok(SimpleUncertainTrace { events })
    }

    pub fn events(&self) -> &[SimpleUncertainEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of determinate (`!`) events.
    pub fn determinate_count(&self) -> usize {
        self.events.iter().filter(|e| !e.indeterminate).count()
    }

    /// True when no event has any uncertainty: singleton activities,
    /// point timestamps, no indeterminacy.
    pub fn is_certain(&self) -> bool {
        self.events.iter().all(|e| {
            e.activities.len() == 1 && e.t_min == e.t_max && !e.indeterminate
        })
    }

    /// Event `i` must precede event `j` whenever `i`'s interval ends
    /// strictly before `j`'s begins. Touching or overlapping intervals are
    /// unordered.
    pub fn must_precede(&self, i: usize, j: usize) -> bool {
        self.events[i].t_max < self.events[j].t_min
    }
}

/// Groups strongly uncertain events into simple uncertain traces using the
/// case assignment `g`, which must pick one candidate case per event.
/// Traces are returned in ascending case-id order; events keep input order.
pub fn simplify(
    log: &[StronglyUncertainEvent],
    g: &BTreeMap<EventId, String>,
) -> Result<Vec<SimpleUncertainTrace>, LogError> {
    let mut by_case: BTreeMap<String, Vec<SimpleUncertainEvent>> = BTreeMap::new();
    for e in log {
        let case = g
            .get(&e.id)
            .ok_or_else(|| LogError::IncompleteAssignment(e.id.clone()))?;
        if !e.case_ids.contains(case) {
            return Err(LogError::InvalidAssignment(e.id.clone(), case.clone()));
        }
        let t_min = *e.timestamps.iter().next().expect("non-empty");
        let t_max = *e.timestamps.iter().next_back().expect("non-empty");
        by_case.entry(case.clone()).or_default().push(
            SimpleUncertainEvent::new(
                e.id.clone(),
                e.activities.clone(),
                t_min,
                t_max,
                e.indeterminate,
            )?,
        );
    }
    by_case
        .into_values()
        .map(SimpleUncertainTrace::new)
        .collect()
}

/// Checks whether `certain` is a realization of `uncertain`: every certain
/// event matches a distinct compatible uncertain event and every
/// determinate uncertain event is matched. Unique event ids force the
/// matching, so compatibility is checked per id.
pub fn is_log_realization(
    certain: &[CertainEvent],
    uncertain: &[StronglyUncertainEvent],
) -> bool {
    let by_id: HashMap<&EventId, &StronglyUncertainEvent> =
        uncertain.iter().map(|e| (&e.id, e)).collect();
    let mut matched: HashSet<&EventId> = HashSet::new();
    for c in certain {
        let Some(u) = by_id.get(&c.id) else {
            return false;
        };
        if !u.case_ids.contains(&c.case_id)
            || !u.activities.contains(&c.activity)
            || !u.timestamps.contains(&c.timestamp)
        {
            return false;
        }
        if !matched.insert(&c.id) {
            return false;
        }
    }
    uncertain
        .iter()
        .filter(|u| !u.indeterminate)
        .all(|u| matched.contains(&u.id))
}

/// Enumerates the untimed realization set of a trace: pick a subset of
/// events containing all determinate ones, one activity per picked event,
/// and any order compatible with the interval precedence relation.
/// Duplicates are collapsed. Exceeding `cap` distinct sequences aborts with
/// [`LogError::RealizationExplosion`].
pub fn realizations(
    trace: &SimpleUncertainTrace,
    cap: usize,
) -> Result<BTreeSet<ActivitySequence>, LogError> {
    let n = trace.len();
    let optional: Vec<usize> = (0..n)
        .filter(|&i| trace.events()[i].indeterminate)
        .collect();
    let mut out = BTreeSet::new();
    // Precedence among all events; restriction to a subset keeps only the
    // pairs inside it.
    let mut precedes = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                precedes[i][j] = trace.must_precede(i, j);
            }
        }
    }
    for mask in 0..(1u64 << optional.len()) {
        let mut chosen: Vec<usize> = (0..n).filter(|&i| !trace.events()[i].indeterminate).collect();
        for (k, &i) in optional.iter().enumerate() {
            if mask & (1 << k) != 0 {
                chosen.push(i);
            }
        }
        chosen.sort_unstable();
        let mut remaining: Vec<usize> = chosen;
        let mut prefix: Vec<String> = Vec::new();
        extend_orderings(trace, &precedes, &mut remaining, &mut prefix, &mut out, cap)?;
    }
    Ok(out)
}

fn extend_orderings(
    trace: &SimpleUncertainTrace,
    precedes: &[Vec<bool>],
    remaining: &mut Vec<usize>,
    prefix: &mut Vec<String>,
    out: &mut BTreeSet<ActivitySequence>,
    cap: usize,
) -> Result<(), LogError> {
    if remaining.is_empty() {
        out.insert(prefix.clone());
        if out.len() > cap {
            return Err(LogError::RealizationExplosion {
                cap,
                partial: out.len(),
            });
        }
        return Ok(());
    }
    for pos in 0..remaining.len() {
        let candidate = remaining[pos];
        let minimal = remaining
            .iter()
            .all(|&other| other == candidate || !precedes[other][candidate]);
        if !minimal {
            continue;
        }
        remaining.remove(pos);
        for activity in &trace.events()[candidate].activities {
            prefix.push(activity.clone());
            extend_orderings(trace, precedes, remaining, prefix, out, cap)?;
            prefix.pop();
        }
        remaining.insert(pos, candidate);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON-lines interchange: one trace per line.

#[derive(Serialize, Deserialize)]
struct JsonEvent {
    id: String,
    activities: Vec<String>,
    t_min: JsonTime,
    t_max: JsonTime,
    indeterminate: bool,
}

/// Timestamps are written as ISO-8601 strings and accepted as either
/// ISO-8601 or integer epoch milliseconds.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonTime {
    Iso(String),
    EpochMs(i64),
}

impl JsonTime {
    fn to_timestamp(&self, line: usize) -> Result<Timestamp, LogError> {
        match self {
            JsonTime::EpochMs(ms) => Ok(Timestamp(*ms)),
            JsonTime::Iso(s) => Timestamp::from_iso(s).ok_or_else(|| LogError::Parse {
                line,
                message: format!("invalid ISO-8601 timestamp {s:?}"),
            }),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTrace {
    events: Vec<JsonEvent>,
}

/// Writes traces in the JSON-lines interchange format.
pub fn write_jsonl<W: Write>(mut w: W, traces: &[SimpleUncertainTrace]) -> Result<(), LogError> {
    for trace in traces {
        let jt = JsonTrace {
            events: trace
                .events()
                .iter()
                .map(|e| JsonEvent {
                    id: e.id.0.clone(),
                    activities: e.activities.iter().cloned().collect(),
                    t_min: JsonTime::Iso(e.t_min.to_iso()),
                    t_max: JsonTime::Iso(e.t_max.to_iso()),
                    indeterminate: e.indeterminate,
                })
                .collect(),
        };
        serde_json::to_writer(&mut w, &jt).map_err(|e| LogError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads traces from the JSON-lines interchange format.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<SimpleUncertainTrace>, LogError> {
    let mut traces = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let jt: JsonTrace = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let mut events = Vec::with_capacity(jt.events.len());
        for je in jt.events {
            let t_min = je.t_min.to_timestamp(line_no)?;
            let t_max = je.t_max.to_timestamp(line_no)?;
            let ev = SimpleUncertainEvent::new(
                EventId::new(je.id),
                je.activities.into_iter().collect(),
                t_min,
                t_max,
                je.indeterminate,
            )
            .map_err(|e| LogError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            events.push(ev);
        }
        traces.push(SimpleUncertainTrace::new(events).map_err(|e| LogError::Parse {
            line: line_no,
            message: e.to_string(),
        })?);
    }
    Ok(traces)
}
