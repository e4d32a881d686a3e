//! PNML serialization for [`SystemNet`].
//!
//! The writer emits standard place/transition/arc structure. Initial and
//! final markings are carried as `initialMarking`/`finalMarking` attributes
//! on the `place` element, and invisible transitions carry a tool-specific
//! `invisible="true"` attribute. The reader additionally accepts the
//! conventional `<initialMarking><text>n</text></initialMarking>` child
//! form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;
use thiserror::Error;

use super::{Marking, NetBuilder, PetriError, PlaceId, SystemNet, TransitionId};

#[derive(Debug, Error)]
pub enum PnmlError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("duplicate node id {0}")]
    DuplicateId(String),
    #[error("arc endpoint references unknown node id {0}")]
    UnknownNode(String),
    #[error("arc from {0} to {1} does not connect a place and a transition")]
    BadArc(String, String),
    #[error("invalid marking value {value} on place {place}")]
    BadMarking { place: String, value: String },
    #[error(transparent)]
    Net(#[from] PetriError),
}

/// Serializes a net to PNML text. Output is deterministic: nodes appear in
/// id order with generated ids `p0..`, `t0..`, `a0..`.
pub fn to_pnml(net: &SystemNet) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    s.push_str("  <net id=\"net0\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n");
    s.push_str("    <page id=\"page0\">\n");
    for p in net.place_ids() {
        let init = net.initial_marking().count(p);
        let fin = net.final_marking().count(p);
        let mut attrs = format!("id=\"p{}\"", p.0);
        if init > 0 {
            let _ = write!(attrs, " initialMarking=\"{init}\"");
        }
        if fin > 0 {
            let _ = write!(attrs, " finalMarking=\"{fin}\"");
        }
        let _ = write!(
            s,
            "      <place {attrs}><name><text>{}</text></name></place>\n",
            escape(&net.place(p).name)
        );
    }
    for t in net.transition_ids() {
        let tr = net.transition(t);
        match &tr.label {
            Some(label) => {
                let _ = write!(
                    s,
                    "      <transition id=\"t{}\"><name><text>{}</text></name></transition>\n",
                    t.0,
                    escape(label)
                );
            }
            None => {
                let _ = write!(
                    s,
                    "      <transition id=\"t{}\" invisible=\"true\"><name><text>{}</text></name></transition>\n",
                    t.0,
                    escape(&tr.name)
                );
            }
        }
    }
    let mut arc_id = 0usize;
    for (p, t) in net.pt_arcs() {
        let _ = write!(
            s,
            "      <arc id=\"a{arc_id}\" source=\"p{}\" target=\"t{}\"/>\n",
            p.0, t.0
        );
        arc_id += 1;
    }
    for (t, p) in net.tp_arcs() {
        let _ = write!(
            s,
            "      <arc id=\"a{arc_id}\" source=\"t{}\" target=\"p{}\"/>\n",
            t.0, p.0
        );
        arc_id += 1;
    }
    s.push_str("    </page>\n  </net>\n</pnml>\n");
    s
}

#[derive(Default)]
struct PlaceDecl {
    name: Option<String>,
    initial: u32,
    fin: u32,
}

#[derive(Default)]
struct TransitionDecl {
    name: Option<String>,
    invisible: bool,
}

/// Parses PNML text into a [`SystemNet`].
pub fn from_pnml(xml: &str) -> Result<SystemNet, PnmlError> {
    let mut reader = Reader::from_str(xml);
    reader.trim_text(true);

    let mut places: Vec<(String, PlaceDecl)> = Vec::new();
    let mut transitions: Vec<(String, TransitionDecl)> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();

    // (element kind, marking-kind context) while descending into a node.
    enum Ctx {
        Place(usize),
        Transition(usize),
    }
    let mut ctx: Option<Ctx> = None;
    let mut elem_stack: Vec<String> = Vec::new();

    let get_attr = |e: &quick_xml::events::BytesStart, key: &[u8]| -> Result<Option<String>, PnmlError> {
        for attr in e.attributes() {
            let attr = attr.map_err(|e| PnmlError::Xml(e.to_string()))?;
            if attr.key.as_ref() == key {
                return Ok(Some(
                    attr.unescape_value()
                        .map_err(|e| PnmlError::Xml(e.to_string()))?
                        .into_owned(),
                ));
            }
        }
        Ok(None)
    };
    let parse_count = |place: &str, v: &str| -> Result<u32, PnmlError> {
        v.trim().parse::<u32>().map_err(|_| PnmlError::BadMarking {
            place: place.to_string(),
            value: v.to_string(),
        })
    };

    loop {
        match reader.read_event() {
            Err(e) => return Err(PnmlError::Xml(e.to_string())),
            Ok(Event::Eof) => break,
            Ok(ev @ Event::Start(_)) | Ok(ev @ Event::Empty(_)) => {
                let is_start = matches!(ev, Event::Start(_));
                let e = match &ev {
                    Event::Start(e) | Event::Empty(e) => e,
                    _ => unreachable!(),
                };
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                match name.as_str() {
                    "place" => {
                        let id = get_attr(e, b"id")?
                            .ok_or_else(|| PnmlError::Xml("place without id".into()))?;
                        let mut decl = PlaceDecl::default();
                        if let Some(v) = get_attr(e, b"initialMarking")? {
                            decl.initial = parse_count(&id, &v)?;
                        }
                        if let Some(v) = get_attr(e, b"finalMarking")? {
                            decl.fin = parse_count(&id, &v)?;
                        }
                        places.push((id, decl));
                        if is_start {
                            ctx = Some(Ctx::Place(places.len() - 1));
                        }
                    }
                    "transition" => {
                        let id = get_attr(e, b"id")?
                            .ok_or_else(|| PnmlError::Xml("transition without id".into()))?;
                        let inv = get_attr(e, b"invisible")?
                            .map(|v| v == "true" || v == "1")
                            .unwrap_or(false);
                        transitions.push((
                            id,
                            TransitionDecl {
                                name: None,
                                invisible: inv,
                            },
                        ));
                        if is_start {
                            ctx = Some(Ctx::Transition(transitions.len() - 1));
                        }
                    }
                    "arc" => {
                        let src = get_attr(e, b"source")?
                            .ok_or_else(|| PnmlError::Xml("arc without source".into()))?;
                        let tgt = get_attr(e, b"target")?
                            .ok_or_else(|| PnmlError::Xml("arc without target".into()))?;
                        arcs.push((src, tgt));
                    }
                    _ => {}
                }
                if is_start {
                    elem_stack.push(name);
                }
            }
            Ok(Event::End(e)) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                while let Some(top) = elem_stack.pop() {
                    if top == name {
                        break;
                    }
                }
                if name == "place" || name == "transition" {
                    ctx = None;
                }
            }
            Ok(Event::Text(t)) => {
                let text = t
                    .unescape()
                    .map_err(|e| PnmlError::Xml(e.to_string()))?
                    .into_owned();
                let in_text_of = |outer: &str| -> bool {
                    let n = elem_stack.len();
                    n >= 2 && elem_stack[n - 1] == "text" && elem_stack[n - 2] == outer
                };
                match &ctx {
                    Some(Ctx::Place(i)) => {
                        if in_text_of("name") {
                            places[*i].1.name = Some(text);
                        } else if in_text_of("initialMarking") {
                            let id = places[*i].0.clone();
                            places[*i].1.initial = parse_count(&id, &text)?;
                        } else if in_text_of("finalMarking") {
                            let id = places[*i].0.clone();
                            places[*i].1.fin = parse_count(&id, &text)?;
                        }
                    }
                    Some(Ctx::Transition(i)) => {
                        if in_text_of("name") {
                            transitions[*i].1.name = Some(text);
                        }
                    }
                    None => {}
                }
            }
            Ok(_) => {}
        }
    }

    let mut b = NetBuilder::new();
    let mut place_ids: BTreeMap<String, PlaceId> = BTreeMap::new();
    let mut transition_ids: BTreeMap<String, TransitionId> = BTreeMap::new();
    let mut init = Marking::empty();
    let mut fin = Marking::empty();
    for (id, decl) in &places {
        let pid = b.add_place(decl.name.clone().unwrap_or_else(|| id.clone()));
        if place_ids.insert(id.clone(), pid).is_some() {
            return Err(PnmlError::DuplicateId(id.clone()));
        }
        init.add(pid, decl.initial);
        fin.add(pid, decl.fin);
    }
    for (id, decl) in &transitions {
        if place_ids.contains_key(id) {
            return Err(PnmlError::DuplicateId(id.clone()));
        }
        let label = if decl.invisible {
            None
        } else {
            Some(decl.name.clone().unwrap_or_else(|| id.clone()))
        };
        let tid = b.add_transition(id.clone(), label);
        if transition_ids.insert(id.clone(), tid).is_some() {
            return Err(PnmlError::DuplicateId(id.clone()));
        }
    }
    for (src, tgt) in &arcs {
        match (place_ids.get(src), transition_ids.get(src)) {
            (Some(&p), None) => {
                let t = transition_ids
                    .get(tgt)
                    .ok_or_else(|| PnmlError::BadArc(src.clone(), tgt.clone()))?;
                b.arc_pt(p, *t);
            }
            (None, Some(&t)) => {
                let p = place_ids
                    .get(tgt)
                    .ok_or_else(|| PnmlError::BadArc(src.clone(), tgt.clone()))?;
                b.arc_tp(t, *p);
            }
            _ => return Err(PnmlError::UnknownNode(src.clone())),
        }
    }
    b.initial_marking(init);
    b.final_marking(fin);
    Ok(b.build()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petri::event_net;

    #[test]
    fn round_trip_event_net() {
        let net = event_net(&["A".to_string(), "B".to_string()]);
        let xml = to_pnml(&net);
        let back = from_pnml(&xml).unwrap();
        assert_eq!(back.place_count(), net.place_count());
        assert_eq!(back.transition_count(), net.transition_count());
        assert_eq!(back.label(TransitionId(0)), Some("A"));
        assert_eq!(back.label(TransitionId(1)), Some("B"));
        assert_eq!(
            back.visible_language(10).unwrap(),
            net.visible_language(10).unwrap()
        );
        // Re-serialization is stable.
        assert_eq!(to_pnml(&back), xml);
    }

    #[test]
    fn reads_child_element_markings() {
        let xml = r#"<?xml version="1.0"?>
<pnml><net id="n" type="ptnet"><page id="pg">
  <place id="p0"><name><text>src</text></name><initialMarking><text>2</text></initialMarking></place>
  <place id="p1"><finalMarking><text>1</text></finalMarking></place>
  <transition id="t0"><name><text>A</text></name></transition>
  <transition id="t1" invisible="true"/>
  <arc id="a0" source="p0" target="t0"/>
  <arc id="a1" source="t0" target="p1"/>
</page></net></pnml>"#;
        let net = from_pnml(xml).unwrap();
        assert_eq!(net.initial_marking().count(PlaceId(0)), 2);
        assert_eq!(net.final_marking().count(PlaceId(1)), 1);
        assert_eq!(net.label(TransitionId(0)), Some("A"));
        assert_eq!(net.label(TransitionId(1)), None);
    }

    #[test]
    fn rejects_place_to_place_arc() {
        let xml = r#"<pnml><net id="n"><page id="pg">
  <place id="p0"/><place id="p1"/>
  <arc id="a0" source="p0" target="p1"/>
</page></net></pnml>"#;
        assert!(matches!(from_pnml(xml), Err(PnmlError::BadArc(_, _))));
    }

    #[test]
    fn rejects_malformed_xml() {
        assert!(matches!(
            from_pnml("<pnml><net></pnml>"),
            Err(PnmlError::Xml(_))
        ));
    }
}
