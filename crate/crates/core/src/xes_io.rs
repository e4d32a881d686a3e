//! XES import and export with uncertainty meta-attributes.
//!
//! Uncertain values live under `uncertainty:` keys next to ordinary
//! fallback attributes, so any plain XES consumer still reads a certain
//! log of the fallback values:
//!
//! - `uncertainty:discrete` — list of candidate activities, entries keyed
//!   `uncertainty:entry`; the fallback `concept:name` is the smallest one.
//! - `uncertainty:timestamp_min` / `uncertainty:timestamp_max` — interval
//!   bounds; the fallback `time:timestamp` is the midpoint.
//! - `uncertainty:indeterminacy` — boolean, present only when true.
//! - `identity:id` — the event identifier; minted on import when absent.
//!
//! Weak (probability-carrying) attributes are importable through
//! `uncertainty:activity_weak`, `uncertainty:case_weak`,
//! `uncertainty:timestamp_weak` (list entries keyed by the value, carrying
//! a float probability), `uncertainty:occurrence` and the
//! `uncertainty:density_mean`/`uncertainty:density_stddev_days` pair for a
//! normal timestamp density. Exporters only emit the strong form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use crate::uncertain_log::{
    EventId, IndependentWeakSpec, LogError, NormalTimestampDensity, SimpleUncertainEvent,
    SimpleUncertainTrace, Timestamp, WeakTimestamps, WeaklyUncertainEvent, MILLIS_PER_DAY,
};

#[derive(Debug, Error)]
pub enum XesError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("trace {trace}, event {event}: {message}")]
    Schema {
        trace: usize,
        event: usize,
        message: String,
    },
    #[error(transparent)]
    Log(#[from] LogError),
}

// ---------------------------------------------------------------------------
// Generic XES document model, enough for logs of flat events with lists.

#[derive(Debug, Default)]
struct RawEvent {
    /// (type, key, value) of flat attributes.
    attrs: Vec<(String, String, String)>,
    /// key -> list entries as (type, key, value).
    lists: Vec<(String, Vec<(String, String, String)>)>,
}

impl RawEvent {
    fn get(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(_, _, v)| v.as_str())
    }

    fn list(&self, key: &str) -> Option<&[(String, String, String)]> {
        self.lists
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, entries)| entries.as_slice())
    }
}

#[derive(Debug, Default)]
struct RawTrace {
    name: Option<String>,
    events: Vec<RawEvent>,
}

fn parse_raw(xml: &str) -> Result<Vec<RawTrace>, XesError> {
    let mut reader = Reader::from_str(xml);
    reader.trim_text(true);
    let mut traces: Vec<RawTrace> = Vec::new();
    let mut in_trace = false;
    let mut in_event = false;
    let mut current_list: Option<(String, Vec<(String, String, String)>)> = None;
    let mut in_values = false;

    loop {
        match reader.read_event() {
            Err(e) => return Err(XesError::Xml(e.to_string())),
            Ok(Event::Eof) => break,
            Ok(ev @ Event::Start(_)) | Ok(ev @ Event::Empty(_)) => {
                let is_start = matches!(ev, Event::Start(_));
                let e = match &ev {
                    Event::Start(e) | Event::Empty(e) => e,
                    _ => unreachable!(),
                };
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                let attr = |key: &[u8]| -> Result<Option<String>, XesError> {
                    for a in e.attributes() {
                        let a = a.map_err(|e| XesError::Xml(e.to_string()))?;
                        if a.key.as_ref() == key {
                            return Ok(Some(
                                a.unescape_value()
                                    .map_err(|e| XesError::Xml(e.to_string()))?
                                    .into_owned(),
                            ));
                        }
                    }
                    Ok(None)
                };
                match name.as_str() {
                    "trace" => {
                        traces.push(RawTrace::default());
                        in_trace = is_start;
                    }
                    "event" => {
                        if let Some(t) = traces.last_mut() {
                            t.events.push(RawEvent::default());
                        }
                        in_event = is_start;
                    }
                    "values" => in_values = is_start,
                    "string" | "date" | "boolean" | "int" | "float" | "id" => {
                        let key = attr(b"key")?.unwrap_or_default();
                        let value = attr(b"value")?.unwrap_or_default();
                        if in_values {
                            if let Some((_, entries)) = current_list.as_mut() {
                                entries.push((name, key, value));
                            }
                        } else if in_event {
                            if let Some(ev) =
                                traces.last_mut().and_then(|t| t.events.last_mut())
                            {
                                ev.attrs.push((name, key, value));
                            }
                        } else if in_trace && key == "concept:name" {
                            if let Some(t) = traces.last_mut() {
                                t.name = Some(value);
                            }
                        }
                    }
                    "list" => {
                        if in_event && is_start {
                            current_list = Some((attr(b"key")?.unwrap_or_default(), Vec::new()));
                        }
                    }
                    _ => {}
                }
            }
            Ok(Event::End(e)) => {
                match e.name().as_ref() {
                    b"trace" => in_trace = false,
                    b"event" => in_event = false,
                    b"values" => in_values = false,
                    b"list" => {
                        if let Some(list) = current_list.take() {
                            if let Some(ev) =
                                traces.last_mut().and_then(|t| t.events.last_mut())
                            {
                                ev.lists.push(list);
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ok(_) => {}
        }
    }
    Ok(traces)
}

// ---------------------------------------------------------------------------
// Strong (simple uncertain) import/export.

fn parse_time(
    s: &str,
    trace: usize,
    event: usize,
) -> Result<Timestamp, XesError> {
    Timestamp::from_iso(s).ok_or_else(|| XesError::Schema {
        trace,
        event,
        message: format!("invalid timestamp {s:?}"),
    })
}

fn event_from_raw(
    raw: &RawEvent,
    trace_no: usize,
    event_no: usize,
) -> Result<SimpleUncertainEvent, XesError> {
    let schema = |message: String| XesError::Schema {
        trace: trace_no,
        event: event_no,
        message,
    };

    let id = raw
        .get("identity:id")
        .map(EventId::new)
        .unwrap_or_else(|| EventId::new(format!("e{event_no}")));

    let activities: std::collections::BTreeSet<String> = match raw.list("uncertainty:discrete") {
        Some(entries) => {
            let set: std::collections::BTreeSet<String> = entries
                .iter()
                .filter(|(_, k, _)| k == "uncertainty:entry")
                .map(|(_, _, v)| v.clone())
                .collect();
            if set.is_empty() {
                return Err(schema("empty uncertainty:discrete activity list".into()));
            }
            set
        }
        None => {
            let name = raw
                .get("concept:name")
                .ok_or_else(|| schema("event without concept:name".into()))?;
            std::collections::BTreeSet::from([name.to_string()])
        }
    };

    let t_min = raw.get("uncertainty:timestamp_min");
    let t_max = raw.get("uncertainty:timestamp_max");
    let (t_min, t_max) = match (t_min, t_max) {
        (Some(lo), Some(hi)) => (
            parse_time(lo, trace_no, event_no)?,
            parse_time(hi, trace_no, event_no)?,
        ),
        (None, None) => {
            let t = raw
                .get("time:timestamp")
                .ok_or_else(|| schema("event without time:timestamp".into()))?;
            let t = parse_time(t, trace_no, event_no)?;
            (t, t)
        }
        _ => {
            return Err(schema(
                "uncertainty:timestamp_min and _max must come together".into(),
            ))
        }
    };
    if t_min > t_max {
        return Err(schema("timestamp interval is inverted".into()));
    }

    let indeterminate = raw
        .get("uncertainty:indeterminacy")
        .map(|v| v == "true" || v == "1")
        .unwrap_or(false);

    SimpleUncertainEvent::new(id, activities, t_min, t_max, indeterminate)
        .map_err(|e| schema(e.to_string()))
}

/// Imports an uncertain log from XES text. Events without uncertainty keys
/// become certain events.
pub fn import_xes(xml: &str) -> Result<Vec<SimpleUncertainTrace>, XesError> {
    let raw = parse_raw(xml)?;
    let mut out = Vec::with_capacity(raw.len());
    for (ti, trace) in raw.iter().enumerate() {
        let mut events = Vec::with_capacity(trace.events.len());
        for (ei, ev) in trace.events.iter().enumerate() {
            events.push(event_from_raw(ev, ti + 1, ei + 1)?);
        }
        out.push(SimpleUncertainTrace::new(events).map_err(XesError::Log)?);
    }
    Ok(out)
}

/// Imports the exported document the way a plain XES consumer would:
/// uncertainty keys are ignored and only the fallback values survive.
pub fn import_xes_plain(xml: &str) -> Result<Vec<SimpleUncertainTrace>, XesError> {
    let raw = parse_raw(xml)?;
    let mut out = Vec::with_capacity(raw.len());
    for (ti, trace) in raw.iter().enumerate() {
        let mut events = Vec::with_capacity(trace.events.len());
        for (ei, ev) in trace.events.iter().enumerate() {
            let schema = |message: String| XesError::Schema {
                trace: ti + 1,
                event: ei + 1,
                message,
            };
            let id = ev
                .get("identity:id")
                .map(EventId::new)
                .unwrap_or_else(|| EventId::new(format!("e{}", ei + 1)));
            let name = ev
                .get("concept:name")
                .ok_or_else(|| schema("event without concept:name".into()))?;
            let t = parse_time(
                ev.get("time:timestamp")
                    .ok_or_else(|| schema("event without time:timestamp".into()))?,
                ti + 1,
                ei + 1,
            )?;
            events.push(SimpleUncertainEvent::certain(id, name, t));
        }
        out.push(SimpleUncertainTrace::new(events).map_err(XesError::Log)?);
    }
    Ok(out)
}

/// Exports an uncertain log as XES text. Deterministic: fallback activity
/// is the smallest candidate, fallback timestamp the interval midpoint,
/// and uncertainty keys appear only where there is uncertainty, so a
/// certain log exports as plain XES.
pub fn export_xes(log: &[SimpleUncertainTrace]) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<log xes.version=\"1849-2016\" xes.features=\"nested-attributes\" xmlns=\"http://www.xes-standard.org/\">\n");
    s.push_str("  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n");
    s.push_str("  <extension name=\"Time\" prefix=\"time\" uri=\"http://www.xes-standard.org/time.xesext\"/>\n");
    for (ti, trace) in log.iter().enumerate() {
        s.push_str("  <trace>\n");
        let _ = writeln!(
            s,
            "    <string key=\"concept:name\" value=\"{}\"/>",
            ti + 1
        );
        for e in trace.events() {
            s.push_str("    <event>\n");
            let _ = writeln!(
                s,
                "      <string key=\"identity:id\" value=\"{}\"/>",
                escape(&e.id.0)
            );
            let fallback_activity = e.activities.iter().next().expect("non-empty");
            let _ = writeln!(
                s,
                "      <string key=\"concept:name\" value=\"{}\"/>",
                escape(fallback_activity)
            );
            let midpoint = Timestamp((e.t_min.0 + e.t_max.0) / 2);
            let _ = writeln!(
                s,
                "      <date key=\"time:timestamp\" value=\"{}\"/>",
                midpoint.to_iso()
            );
            if e.activities.len() > 1 {
                s.push_str("      <list key=\"uncertainty:discrete\">\n        <values>\n");
                for a in &e.activities {
                    let _ = writeln!(
                        s,
                        "          <string key=\"uncertainty:entry\" value=\"{}\"/>",
                        escape(a)
                    );
                }
                s.push_str("        </values>\n      </list>\n");
            }
            if e.t_min < e.t_max {
                let _ = writeln!(
                    s,
                    "      <date key=\"uncertainty:timestamp_min\" value=\"{}\"/>",
                    e.t_min.to_iso()
                );
                let _ = writeln!(
                    s,
                    "      <date key=\"uncertainty:timestamp_max\" value=\"{}\"/>",
                    e.t_max.to_iso()
                );
            }
            if e.indeterminate {
                s.push_str("      <boolean key=\"uncertainty:indeterminacy\" value=\"true\"/>\n");
            }
            s.push_str("    </event>\n");
        }
        s.push_str("  </trace>\n");
    }
    s.push_str("</log>\n");
    s
}

// ---------------------------------------------------------------------------
// Weak import.

fn weak_distribution(
    entries: &[(String, String, String)],
    trace_no: usize,
    event_no: usize,
) -> Result<BTreeMap<String, f64>, XesError> {
    let mut out = BTreeMap::new();
    for (_, key, value) in entries {
        let p: f64 = value.parse().map_err(|_| XesError::Schema {
            trace: trace_no,
            event: event_no,
            message: format!("invalid probability {value:?} for {key:?}"),
        })?;
        out.insert(key.clone(), p);
    }
    Ok(out)
}

/// Imports weakly uncertain events from XES. The trace's `concept:name`
/// (or its index) provides the certain case id unless a
/// `uncertainty:case_weak` list overrides it. Normal timestamp densities
/// are preserved as metadata; converting such events to the strong form
/// fails downstream unless a finite support was also given.
pub fn import_xes_weak(xml: &str) -> Result<Vec<WeaklyUncertainEvent>, XesError> {
    let raw = parse_raw(xml)?;
    let mut out = Vec::new();
    for (ti, trace) in raw.iter().enumerate() {
        let trace_no = ti + 1;
        let case = trace.name.clone().unwrap_or_else(|| trace_no.to_string());
        for (ei, ev) in trace.events.iter().enumerate() {
            let event_no = ei + 1;
            let schema = |message: String| XesError::Schema {
                trace: trace_no,
                event: event_no,
                message,
            };
            let id = ev
                .get("identity:id")
                .map(EventId::new)
                .unwrap_or_else(|| EventId::new(format!("t{trace_no}e{event_no}")));

            let case_ids = match ev.list("uncertainty:case_weak") {
                Some(entries) => weak_distribution(entries, trace_no, event_no)?,
                None => BTreeMap::from([(case.clone(), 1.0)]),
            };
            let activities = match ev.list("uncertainty:activity_weak") {
                Some(entries) => weak_distribution(entries, trace_no, event_no)?,
                None => {
                    let name = ev
                        .get("concept:name")
                        .ok_or_else(|| schema("event without concept:name".into()))?;
                    BTreeMap::from([(name.to_string(), 1.0)])
                }
            };
            let timestamps = if let Some(mean) = ev.get("uncertainty:density_mean") {
                let mean = parse_time(mean, trace_no, event_no)?;
                let stddev_days: f64 = ev
                    .get("uncertainty:density_stddev_days")
                    .ok_or_else(|| schema("density mean without stddev".into()))?
                    .parse()
                    .map_err(|_| schema("invalid density stddev".into()))?;
                WeakTimestamps::Normal(NormalTimestampDensity {
                    mean,
                    stddev_ms: stddev_days * MILLIS_PER_DAY as f64,
                })
            } else if let Some(entries) = ev.list("uncertainty:timestamp_weak") {
                let dist = weak_distribution(entries, trace_no, event_no)?;
                let mut ts = BTreeMap::new();
                for (k, p) in dist {
                    ts.insert(parse_time(&k, trace_no, event_no)?, p);
                }
                WeakTimestamps::Discrete(ts)
            } else {
                let t = ev
                    .get("time:timestamp")
                    .ok_or_else(|| schema("event without time:timestamp".into()))?;
                WeakTimestamps::Discrete(BTreeMap::from([(
                    parse_time(t, trace_no, event_no)?,
                    1.0,
                )]))
            };
            let occurrence = match ev.get("uncertainty:occurrence") {
                Some(v) => v
                    .parse::<f64>()
                    .map_err(|_| schema(format!("invalid occurrence probability {v:?}")))?,
                None => 1.0,
            };
            out.push(WeaklyUncertainEvent::from_independent(IndependentWeakSpec {
                id,
                case_ids,
                activities,
                timestamps,
                occurrence,
            })?);
        }
    }
    Ok(out)
}
