use std::collections::BTreeSet;

use omnigraph_core::graph::{AttrValue, Workspace};
use omnigraph_core::metamodel::MetaModel;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::gen::Vocabulary;

fn push(out: &mut Vec<(u64, &'static str)>, id: u64, code: &'static str) {
    out.push((id, code));
}

/// Every violation as `(element, CODE)`, sorted. Restates each rule with
/// plain scans; cardinality counts, for each link, the same-typed links
/// sharing its source (or target) whose id is not greater than its own.
pub fn violations(ws: &Workspace, mm: &MetaModel) -> Vec<(u64, &'static str)> {
    let mut out = Vec::new();
    let nodes: Vec<_> = ws.nodes().collect();
    let links: Vec<_> = ws.links().collect();
    let type_of = |id| {
        nodes
            .iter()
            .find(|n| n.id == id)
            .map(|n| n.type_name.clone())
            .unwrap_or_default()
    };

    for n in &nodes {
        let id = n.id.get();
        let Some(def) = mm.node_types.values().find(|d| d.name == n.type_name) else {
            push(&mut out, id, "UNKNOWN_TYPE");
            continue;
        };
        for (key, spec) in &def.attr_schema {
            let Some(value) = n.attrs.iter().find(|(k, _)| *k == key).map(|(_, v)| v) else {
                if spec.required {
                    push(&mut out, id, "MISSING_ATTR");
                }
                continue;
            };
            let kind_ok = matches!(
                (spec.kind.as_str(), value),
                ("string", AttrValue::Str(_))
                    | ("integer", AttrValue::Int(_))
                    | ("real", AttrValue::Real(_))
                    | ("boolean", AttrValue::Bool(_))
                    | ("list", AttrValue::List(_))
                    | ("ref", AttrValue::Ref(_))
            );
            if !kind_ok {
                push(&mut out, id, "BAD_ATTR_KIND");
            } else if let (Some(allowed), AttrValue::Str(s)) = (&spec.enum_values, value) {
                if !allowed.iter().any(|a| a == s) {
                    push(&mut out, id, "BAD_ENUM");
                }
            }
        }
        if let Some(p) = n.parent {
            let parent_type = type_of(p);
            let container = mm.node_types.values().any(|d| d.name == parent_type && d.container);
            if !container {
                push(&mut out, id, "BAD_PARENT");
            }
        }
    }

    for l in &links {
        let id = l.id.get();
        let Some(def) = mm.link_types.values().find(|d| d.name == l.type_name) else {
            push(&mut out, id, "UNKNOWN_TYPE");
            continue;
        };
        let (ft, tt) = (type_of(l.from), type_of(l.to));
        let ok = def.allowed_endpoints.iter().any(|(f, t)| {
            (f.as_str() == "*" || f.as_str() == ft) && (t.as_str() == "*" || t.as_str() == tt)
        });
        if !ok {
            push(&mut out, id, "BAD_ENDPOINT");
        }
        if let Some(max) = def.cardinality.max_out_per_node {
            let rank = links
                .iter()
                .filter(|o| o.type_name == l.type_name && o.from == l.from && o.id <= l.id)
                .count();
            if rank > max as usize {
                push(&mut out, id, "CARDINALITY");
            }
        }
        if let Some(max) = def.cardinality.max_in_per_node {
            let rank = links
                .iter()
                .filter(|o| o.type_name == l.type_name && o.to == l.to && o.id <= l.id)
                .count();
            if rank > max as usize {
                push(&mut out, id, "CARDINALITY");
            }
        }
        if l.from == l.to && !def.allow_self {
            push(&mut out, id, "SELF_LINK");
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Node,
    Link,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RFilter {
    Type(String),
    Id(u64),
    Label(String),
    Attr(String, AttrValue),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RStep {
    Filter(Vec<RFilter>),
    Out(Option<String>),
    In(Option<String>),
    Parent,
    Children,
}

/// A query in the reference model, printed to text for the real parser.
#[derive(Debug, Clone, PartialEq)]
pub struct RQuery {
    pub source: Kind,
    pub steps: Vec<RStep>,
}

fn literal(v: &AttrValue) -> String {
    match v {
        AttrValue::Str(s) => serde_json::to_string(s).unwrap(),
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Real(r) => format!("{r:?}"),
        AttrValue::Bool(b) => b.to_string(),
        AttrValue::Ref(r) => format!("@{r}"),
        AttrValue::List(items) => format!("[{}]", items.iter().map(literal).collect::<Vec<_>>().join(", ")),
    }
}

impl RQuery {
    pub fn to_text(&self) -> String {
        let mut s = match self.source {
            Kind::Node => "node".to_owned(),
            Kind::Link => "link".to_owned(),
        };
        for step in &self.steps {
            match step {
                RStep::Filter(fs) => {
                    let parts: Vec<String> = fs
                        .iter()
                        .map(|f| match f {
                            RFilter::Type(t) => format!("type={t}"),
                            RFilter::Id(n) => format!("id={n}"),
                            RFilter::Label(l) => format!("label={}", serde_json::to_string(l).unwrap()),
                            RFilter::Attr(k, v) => format!("attr.{k}={}", literal(v)),
                        })
                        .collect();
                    s.push_str(&format!("[{}]", parts.join(", ")));
                }
                RStep::Out(t) => s.push_str(&format!(" -> {}", t.as_deref().unwrap_or("*"))),
                RStep::In(t) => s.push_str(&format!(" <- {}", t.as_deref().unwrap_or("*"))),
                RStep::Parent => s.push_str(".parent"),
                RStep::Children => s.push_str(".children"),
            }
        }
        s
    }
}

pub fn random_query(rng: &mut impl Rng, vocab: &Vocabulary, max_id: u64) -> RQuery {
    let source = if rng.gen_ratio(1, 4) { Kind::Link } else { Kind::Node };
    let mut steps = Vec::new();
    for _ in 0..rng.gen_range(0..4) {
        let step = match rng.gen_range(0..6) {
            0 | 1 => {
                let n = rng.gen_range(1..=2);
                RStep::Filter(
                    (0..n)
                        .map(|_| match rng.gen_range(0..4) {
                            0 => RFilter::Type(
                                vocab
                                    .node_types
                                    .iter()
                                    .chain(&vocab.link_types)
                                    .collect::<Vec<_>>()
                                    .choose(rng)
                                    .unwrap()
                                    .to_string(),
                            ),
                            1 => RFilter::Id(rng.gen_range(1..=max_id.max(1))),
                            2 => RFilter::Label(vocab.strings.choose(rng).unwrap().clone()),
                            _ => {
                                let v = match rng.gen_range(0..5) {
                                    0 => AttrValue::str(vocab.strings.choose(rng).unwrap().clone()),
                                    1 => AttrValue::Int(rng.gen_range(-3..4)),
                                    2 => AttrValue::Real(rng.gen_range(-3..4) as f64 / 2.0),
                                    3 => AttrValue::Bool(rng.gen()),
                                    _ => AttrValue::List(vec![AttrValue::Int(rng.gen_range(0..3))]),
                                };
                                RFilter::Attr(vocab.attr_keys.choose(rng).unwrap().clone(), v)
                            }
                        })
                        .collect(),
                )
            }
            2 => RStep::Out(rng.gen_bool(0.7).then(|| vocab.link_types.choose(rng).unwrap().clone())),
            3 => RStep::In(rng.gen_bool(0.7).then(|| vocab.link_types.choose(rng).unwrap().clone())),
            4 => RStep::Parent,
            _ => RStep::Children,
        };
        steps.push(step);
    }
    RQuery { source, steps }
}

/// Direct set comprehension. `Err(())` when a step needs nodes but the
/// current selection holds links.
pub fn eval(ws: &Workspace, q: &RQuery) -> Result<(Kind, BTreeSet<u64>), ()> {
    let mut kind = q.source;
    let mut sel: BTreeSet<u64> = match kind {
        Kind::Node => ws.nodes().map(|n| n.id.get()).collect(),
        Kind::Link => ws.links().map(|l| l.id.get()).collect(),
    };
    for step in &q.steps {
        sel = match step {
            RStep::Filter(fs) => sel
                .into_iter()
                .filter(|&id| {
                    fs.iter().all(|f| {
                        let (t, label, attrs) = match kind {
                            Kind::Node => {
                                let n = ws.nodes().find(|n| n.id.get() == id).unwrap();
                                (&n.type_name, Some(&n.label), &n.attrs)
                            }
                            Kind::Link => {
                                let l = ws.links().find(|l| l.id.get() == id).unwrap();
                                (&l.type_name, None, &l.attrs)
                            }
                        };
                        match f {
                            RFilter::Type(x) => t == x,
                            RFilter::Id(x) => id == *x,
                            RFilter::Label(x) => label == Some(x),
                            RFilter::Attr(k, v) => attrs.iter().any(|(ak, av)| ak == k && av == v),
                        }
                    })
                })
                .collect(),
            _ if kind == Kind::Link => return Err(()),
            RStep::Out(t) => ws
                .links()
                .filter(|l| sel.contains(&l.from.get()) && t.as_ref().is_none_or(|t| &l.type_name == t))
                .map(|l| l.to.get())
                .collect(),
            RStep::In(t) => ws
                .links()
                .filter(|l| sel.contains(&l.to.get()) && t.as_ref().is_none_or(|t| &l.type_name == t))
                .map(|l| l.from.get())
                .collect(),
            RStep::Parent => ws
                .nodes()
                .filter(|n| sel.contains(&n.id.get()))
                .filter_map(|n| n.parent.map(|p| p.get()))
                .collect(),
            RStep::Children => ws
                .nodes()
                .filter(|n| n.parent.is_some_and(|p| sel.contains(&p.get())))
                .map(|n| n.id.get())
                .collect(),
        };
        if !matches!(step, RStep::Filter(_)) {
            kind = Kind::Node;
        }
    }
    Ok((kind, sel))
}
