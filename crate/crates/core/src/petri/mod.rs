//! Labeled Petri nets with initial/final markings, firing semantics,
//! event nets, synchronous products and visible-language enumeration.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

pub mod pnml;

/// A sequence of visible activity labels.
pub type ActivitySequence = Vec<String>;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PlaceId(pub usize);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TransitionId(pub usize);

#[derive(Clone, Debug)]
pub struct Place {
    pub name: String,
}

/// A transition; `label = None` means the transition is invisible (tau).
#[derive(Clone, Debug)]
pub struct Transition {
    pub name: String,
    pub label: Option<String>,
}

/// A multiset of places. Entries with zero multiplicity are never stored,
/// so equality and hashing are canonical.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Marking(BTreeMap<PlaceId, u32>);

impl Marking {
    pub fn empty() -> Self {
        Marking(BTreeMap::new())
    }

    pub fn from_places<I: IntoIterator<Item = PlaceId>>(places: I) -> Self {
        let mut m = Marking::empty();
        for p in places {
            m.add(p, 1);
        }
        m
    }

    pub fn count(&self, place: PlaceId) -> u32 {
        self.0.get(&place).copied().unwrap_or(0)
    }

    pub fn add(&mut self, place: PlaceId, n: u32) {
        if n > 0 {
            *self.0.entry(place).or_insert(0) += n;
        }
    }

    /// Removes `n` tokens from `place`. Panics if the place holds fewer;
    /// callers check enabledness first.
    fn remove(&mut self, place: PlaceId, n: u32) {
        if n == 0 {
            return;
        }
        let c = self.0.get_mut(&place).expect("token underflow");
        assert!(*c >= n, "token underflow");
        *c -= n;
        if *c == 0 {
            self.0.remove(&place);
        }
    }

    /// Total token count.
    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| c as u64).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (PlaceId, u32)> + '_ {
        self.0.iter().map(|(&p, &c)| (p, c))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Multiset union of two markings.
    pub fn union(&self, other: &Marking) -> Marking {
        let mut m = self.clone();
        for (p, c) in other.entries() {
            m.add(p, c);
        }
        m
    }
}

#[derive(Debug, Error)]
pub enum PetriError {
    #[error("marking references place index {0} outside the net")]
    ForeignPlace(usize),
    #[error("unknown place index {0}")]
    UnknownPlace(usize),
    #[error("unknown transition index {0}")]
    UnknownTransition(usize),
    #[error("transition {0:?} is not enabled")]
    NotEnabled(String),
    #[error("reachability graph contains a cycle")]
    CyclicNet,
    #[error("visible language exceeds the bound of {bound} sequences")]
    LanguageExplosion { bound: usize },
}

/// A labeled Petri net with designated initial and final markings.
/// Arc lists are sorted and duplicate-free.
#[derive(Clone, Debug)]
pub struct SystemNet {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    pt_arcs: Vec<(PlaceId, TransitionId)>,
    tp_arcs: Vec<(TransitionId, PlaceId)>,
    // Input/output places per transition in flat CSR layout.
    pre_flat: Vec<PlaceId>,
    pre_offsets: Vec<usize>,
    post_flat: Vec<PlaceId>,
    post_offsets: Vec<usize>,
    initial_marking: Marking,
    final_marking: Marking,
}

/// Incremental constructor for [`SystemNet`]; validates arc endpoints and
/// marking places when `build` is called.
#[derive(Default)]
pub struct NetBuilder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
    pt_arcs: Vec<(PlaceId, TransitionId)>,
    tp_arcs: Vec<(TransitionId, PlaceId)>,
    initial_marking: Marking,
    final_marking: Marking,
}

impl NetBuilder {
    pub fn new() -> Self {
        NetBuilder::default()
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> PlaceId {
        self.places.push(Place { name: name.into() });
        PlaceId(self.places.len() - 1)
    }

    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        label: Option<String>,
    ) -> TransitionId {
        self.transitions.push(Transition {
            name: name.into(),
            label,
        });
        TransitionId(self.transitions.len() - 1)
    }

    pub fn arc_pt(&mut self, p: PlaceId, t: TransitionId) -> &mut Self {
        self.pt_arcs.push((p, t));
        self
    }

    pub fn arc_tp(&mut self, t: TransitionId, p: PlaceId) -> &mut Self {
        self.tp_arcs.push((t, p));
        self
    }

    pub fn initial_marking(&mut self, m: Marking) -> &mut Self {
        self.initial_marking = m;
        self
    }

    pub fn final_marking(&mut self, m: Marking) -> &mut Self {
        self.final_marking = m;
        self
    }

    pub fn build(mut self) -> Result<SystemNet, PetriError> {
        self.pt_arcs.sort_unstable();
        self.pt_arcs.dedup();
        self.tp_arcs.sort_unstable();
        self.tp_arcs.dedup();
        let np = self.places.len();
        let nt = self.transitions.len();
        for &(p, t) in &self.pt_arcs {
            if p.0 >= np {
                return Err(PetriError::UnknownPlace(p.0));
            }
            if t.0 >= nt {
                return Err(PetriError::UnknownTransition(t.0));
            }
        }
        for &(t, p) in &self.tp_arcs {
            if p.0 >= np {
                return Err(PetriError::UnknownPlace(p.0));
            }
            if t.0 >= nt {
                return Err(PetriError::UnknownTransition(t.0));
            }
        }
        for (p, _) in self.initial_marking.entries().chain(self.final_marking.entries()) {
            if p.0 >= np {
                return Err(PetriError::UnknownPlace(p.0));
            }
        }
        // CSR construction; pt_arcs is sorted by place, so bucket counts
        // are accumulated first and then filled per transition.
        let mut pre_offsets = vec![0usize; nt + 1];
        for &(_, t) in &self.pt_arcs {
            pre_offsets[t.0 + 1] += 1;
        }
        for i in 0..nt {
            pre_offsets[i + 1] += pre_offsets[i];
        }
        let mut pre_flat = vec![PlaceId(0); self.pt_arcs.len()];
        let mut cursor = pre_offsets.clone();
        for &(p, t) in &self.pt_arcs {
            pre_flat[cursor[t.0]] = p;
            cursor[t.0] += 1;
        }
        let mut post_offsets = vec![0usize; nt + 1];
        for &(t, _) in &self.tp_arcs {
            post_offsets[t.0 + 1] += 1;
        }
        for i in 0..nt {
            post_offsets[i + 1] += post_offsets[i];
        }
        let mut post_flat = vec![PlaceId(0); self.tp_arcs.len()];
        let mut cursor = post_offsets.clone();
        for &(t, p) in &self.tp_arcs {
            post_flat[cursor[t.0]] = p;
            cursor[t.0] += 1;
        }
        Ok(SystemNet {
            places: self.places,
            transitions: self.transitions,
            pt_arcs: self.pt_arcs,
            tp_arcs: self.tp_arcs,
            pre_flat,
            pre_offsets,
            post_flat,
            post_offsets,
            initial_marking: self.initial_marking,
            final_marking: self.final_marking,
        })
    }
}

impl SystemNet {
    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn visible_transition_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.label.is_some()).count()
    }

    pub fn place(&self, p: PlaceId) -> &Place {
        &self.places[p.0]
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    pub fn place_ids(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len()).map(PlaceId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn label(&self, t: TransitionId) -> Option<&str> {
        self.transitions[t.0].label.as_deref()
    }

    /// All activity labels occurring in the net, sorted and deduplicated.
    pub fn alphabet(&self) -> BTreeSet<String> {
        self.transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect()
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial_marking
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn pre_places(&self, t: TransitionId) -> &[PlaceId] {
        &self.pre_flat[self.pre_offsets[t.0]..self.pre_offsets[t.0 + 1]]
    }

    pub fn post_places(&self, t: TransitionId) -> &[PlaceId] {
        &self.post_flat[self.post_offsets[t.0]..self.post_offsets[t.0 + 1]]
    }

    pub fn pt_arcs(&self) -> impl Iterator<Item = (PlaceId, TransitionId)> + '_ {
        self.pt_arcs.iter().copied()
    }

    pub fn tp_arcs(&self) -> impl Iterator<Item = (TransitionId, PlaceId)> + '_ {
        self.tp_arcs.iter().copied()
    }

    fn check_marking(&self, m: &Marking) -> Result<(), PetriError> {
        for (p, _) in m.entries() {
            if p.0 >= self.places.len() {
                return Err(PetriError::ForeignPlace(p.0));
            }
        }
        Ok(())
    }

    fn is_enabled_unchecked(&self, m: &Marking, t: TransitionId) -> bool {
        self.pre_places(t).iter().all(|&p| m.count(p) >= 1)
    }

    /// Whether `t` is enabled in `m`. The marking is trusted to belong to
    /// this net; out-of-range transitions are simply not enabled.
    pub fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        t.0 < self.transitions.len() && self.is_enabled_unchecked(m, t)
    }

    /// Transitions whose every input place holds at least one token in `m`,
    /// in ascending id order.
    pub fn enabled(&self, m: &Marking) -> Result<Vec<TransitionId>, PetriError> {
        self.check_marking(m)?;
        Ok(self
            .transition_ids()
            .filter(|&t| self.is_enabled_unchecked(m, t))
            .collect())
    }

    /// Fires `t` in `m`: removes one token per input place, adds one per
    /// output place.
    pub fn fire(&self, m: &Marking, t: TransitionId) -> Result<Marking, PetriError> {
        self.check_marking(m)?;
        if t.0 >= self.transitions.len() {
            return Err(PetriError::UnknownTransition(t.0));
        }
        if !self.is_enabled_unchecked(m, t) {
            return Err(PetriError::NotEnabled(self.transitions[t.0].name.clone()));
        }
        let mut out = m.clone();
        for i in self.pre_offsets[t.0]..self.pre_offsets[t.0 + 1] {
            out.remove(self.pre_flat[i], 1);
        }
        for i in self.post_offsets[t.0]..self.post_offsets[t.0 + 1] {
            out.add(self.post_flat[i], 1);
        }
        Ok(out)
    }

    /// The set of visible activity sequences of all complete firing
    /// sequences from the initial to the final marking, tau labels dropped.
    ///
    /// Only supported for nets whose reachability graph is acyclic (event
    /// nets, behavior nets, generated block models). A marking repeating
    /// along the current firing path raises [`PetriError::CyclicNet`]; more
    /// than `max_sequences` distinct sequences raises
    /// [`PetriError::LanguageExplosion`].
    pub fn visible_language(
        &self,
        max_sequences: usize,
    ) -> Result<BTreeSet<ActivitySequence>, PetriError> {
        let mut out = BTreeSet::new();
        let mut on_path = HashSet::new();
        on_path.insert(self.initial_marking.clone());
        let mut prefix = Vec::new();
        self.explore_language(
            &self.initial_marking,
            &mut on_path,
            &mut prefix,
            &mut out,
            max_sequences,
        )?;
        Ok(out)
    }

    fn explore_language(
        &self,
        m: &Marking,
        on_path: &mut HashSet<Marking>,
        prefix: &mut Vec<String>,
        out: &mut BTreeSet<ActivitySequence>,
        max_sequences: usize,
    ) -> Result<(), PetriError> {
        if m == &self.final_marking {
            out.insert(prefix.clone());
            if out.len() > max_sequences {
                return Err(PetriError::LanguageExplosion {
                    bound: max_sequences,
                });
            }
        }
        for t in self.transition_ids() {
            if !self.is_enabled_unchecked(m, t) {
                continue;
            }
            let next = self.fire(m, t)?;
            if !on_path.insert(next.clone()) {
                return Err(PetriError::CyclicNet);
            }
            let visible = self.transitions[t.0].label.clone();
            if let Some(a) = &visible {
                prefix.push(a.clone());
            }
            let res = self.explore_language(&next, on_path, prefix, out, max_sequences);
            if visible.is_some() {
                prefix.pop();
            }
            on_path.remove(&next);
            res?;
        }
        Ok(())
    }
}

/// Builds the sequence-shaped net that replays exactly `trace`.
///
/// An empty trace yields a single place with equal initial and final
/// markings, whose language is the singleton empty sequence.
pub fn event_net(trace: &[String]) -> SystemNet {
    let mut b = NetBuilder::new();
    let first = b.add_place("p1");
    let mut last = first;
    for (i, activity) in trace.iter().enumerate() {
        let t = b.add_transition(format!("t{}", i + 1), Some(activity.clone()));
        let next = b.add_place(format!("p{}", i + 2));
        b.arc_pt(last, t);
        b.arc_tp(t, next);
        last = next;
    }
    b.initial_marking(Marking::from_places([first]));
    b.final_marking(Marking::from_places([last]));
    b.build().expect("event net construction is closed")
}

/// Which transitions of the two operand nets a product transition stands
/// for: `(Some, None)` copies the first net, `(None, Some)` the second,
/// `(Some, Some)` is a synchronous pair with equal visible labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductOrigin {
    pub left: Option<TransitionId>,
    pub right: Option<TransitionId>,
}

/// A synchronous product net along with the origin of each transition.
#[derive(Clone, Debug)]
pub struct ProductNet {
    pub net: SystemNet,
    pub origins: Vec<ProductOrigin>,
}

impl ProductNet {
    pub fn origin(&self, t: TransitionId) -> ProductOrigin {
        self.origins[t.0]
    }
}

/// Synchronous product of two nets: copies of both plus one synchronous
/// transition per pair of equally labeled visible transitions. Labels of
/// synchronous pairs come from the first operand; initial and final
/// markings are the multiset unions.
pub fn product(left: &SystemNet, right: &SystemNet) -> ProductNet {
    let mut b = NetBuilder::new();
    let mut origins = Vec::new();

    let lp: Vec<PlaceId> = left
        .place_ids()
        .map(|p| b.add_place(left.place(p).name.clone()))
        .collect();
    let rp: Vec<PlaceId> = right
        .place_ids()
        .map(|p| b.add_place(right.place(p).name.clone()))
        .collect();

    // Product transitions reuse the operand's name; the origin table is
    // the authoritative identification.
    for t in left.transition_ids() {
        let tr = left.transition(t);
        let id = b.add_transition(tr.name.clone(), tr.label.clone());
        origins.push(ProductOrigin {
            left: Some(t),
            right: None,
        });
        for &p in left.pre_places(t) {
            b.arc_pt(lp[p.0], id);
        }
        for &p in left.post_places(t) {
            b.arc_tp(id, lp[p.0]);
        }
    }
    for t in right.transition_ids() {
        let tr = right.transition(t);
        let id = b.add_transition(tr.name.clone(), tr.label.clone());
        origins.push(ProductOrigin {
            left: None,
            right: Some(t),
        });
        for &p in right.pre_places(t) {
            b.arc_pt(rp[p.0], id);
        }
        for &p in right.post_places(t) {
            b.arc_tp(id, rp[p.0]);
        }
    }
    for t1 in left.transition_ids() {
        let Some(a) = left.label(t1) else { continue };
        for t2 in right.transition_ids() {
            if right.label(t2) != Some(a) {
                continue;
            }
            let id = b.add_transition(left.transition(t1).name.clone(), Some(a.to_string()));
            origins.push(ProductOrigin {
                left: Some(t1),
                right: Some(t2),
            });
            for &p in left.pre_places(t1) {
                b.arc_pt(lp[p.0], id);
            }
            for &p in right.pre_places(t2) {
                b.arc_pt(rp[p.0], id);
            }
            for &p in left.post_places(t1) {
                b.arc_tp(id, lp[p.0]);
            }
            for &p in right.post_places(t2) {
                b.arc_tp(id, rp[p.0]);
            }
        }
    }

    let remap = |m: &Marking, map: &[PlaceId]| {
        let mut out = Marking::empty();
        for (p, c) in m.entries() {
            out.add(map[p.0], c);
        }
        out
    };
    let init = remap(left.initial_marking(), &lp).union(&remap(right.initial_marking(), &rp));
    let fin = remap(left.final_marking(), &lp).union(&remap(right.final_marking(), &rp));
    b.initial_marking(init);
    b.final_marking(fin);

    ProductNet {
        net: b.build().expect("product construction is closed"),
        origins,
    }
}
