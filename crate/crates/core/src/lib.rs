//! Conformance checking for event logs with explicit uncertainty.
//!
//! Event attributes may be recorded as candidate sets, timestamp intervals
//! or probability distributions, and events themselves may be marked as
//! possibly-not-happened. Against a Petri net model, such a trace no
//! longer has one alignment cost but a range of them, one per realization.
//! This crate computes that range: the lower bound efficiently through the
//! behavior net of the trace, the upper bound (and the oracle for the
//! lower one) by enumerating realizations, plus the synthetic-data
//! pipeline and the XES/PNML/JSON-lines interchange around it.

pub mod alignment;
pub mod experiments;
pub mod behavior;
pub mod petri;
pub mod synth;
pub mod uncertain_log;
pub mod xes_io;

pub use alignment::{
    align, align_with_heuristic, bounds_bruteforce, cost, lower_bound, upper_bound, AlignError,
    Alignment, BoundOutcome, ConformanceBounds, CostFunction, Move, SearchLimits,
};
pub use behavior::{
    behavior_graph, behavior_net, behavior_net_from_graph, transitive_reduction, BehaviorError,
    BehaviorGraph,
};
pub use experiments::{
    log_bounds, run_perf, run_sweep, ExperimentError, LogBoundsReport, PerfConfig, PerfRow,
    SweepCell, SweepConfig, SweepRow, TraceBounds,
};
pub use petri::{
    event_net, product, ActivitySequence, Marking, NetBuilder, PetriError, Place, PlaceId,
    ProductNet, ProductOrigin, SystemNet, Transition, TransitionId,
};
pub use synth::{
    generate_model, inject_deviations, inject_uncertainty, playout, DeviationParams, SynthError,
    TimedTrace, UncertaintyParams, DEFAULT_INTERVAL_RADIUS_MS,
};
pub use uncertain_log::{
    is_log_realization, read_jsonl, realizations, simplify, weak_to_strong, CertainEvent, EventId,
    LogError, SimpleUncertainEvent, SimpleUncertainTrace, StronglyUncertainEvent, Timestamp,
    WeaklyUncertainEvent, MILLIS_PER_DAY,
};
pub use xes_io::{export_xes, import_xes, import_xes_plain, import_xes_weak, XesError};
