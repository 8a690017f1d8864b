use omnigraph_core::graph::{AttrValue, ElementId, PayloadKind, PayloadRef, Viewport, Workspace};
use rand::seq::SliceRandom;
use rand::Rng;

const WS_ID_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.~";
const TEXT_PIECES: &[&str] = &[
    "a", "Z", "rule", " ", "\"", "\\", "\n", "\t", "\u{0}", "\u{1f}", "é", "ß", "日本", "🦀", "\u{2028}", "{", "}", ":", ",",
    "__X__", "//", "#", "null", "1.5",
];

pub fn text(rng: &mut impl Rng, max_pieces: usize) -> String {
    let n = rng.gen_range(0..=max_pieces);
    (0..n).map(|_| *TEXT_PIECES.choose(rng).unwrap()).collect()
}

pub fn workspace_id(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=12);
    let mut id: String = (0..n).map(|_| *WS_ID_CHARS.choose(rng).unwrap() as char).collect();
    if id.starts_with('.') {
        id.replace_range(0..1, "w");
    }
    id
}

/// Any finite real, including extremes and negative zero.
pub fn real(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..6) {
        0 => *[0.0, -0.0, 1.0, -1.5, 1e300, 5e-324, f64::MAX, f64::MIN_POSITIVE, 0.1].choose(rng).unwrap(),
        1 => rng.gen_range(-1e6..1e6),
        2 => rng.gen_range(-100..100) as f64,
        _ => loop {
            let r = f64::from_bits(rng.gen());
            if r.is_finite() {
                break r;
            }
        },
    }
}

pub fn scalar(rng: &mut impl Rng, kind: u8) -> AttrValue {
    match kind % 5 {
        0 => AttrValue::Str(text(rng, 4)),
        1 => AttrValue::Int(match rng.gen_range(0..4) {
            0 => *[i64::MIN, i64::MAX, 0, -1].choose(rng).unwrap(),
            _ => rng.gen_range(-1000..1000),
        }),
        2 => AttrValue::Real(real(rng)),
        3 => AttrValue::Bool(rng.gen()),
        _ => AttrValue::Ref(workspace_id(rng)),
    }
}

pub fn attr_value(rng: &mut impl Rng) -> AttrValue {
    if rng.gen_ratio(1, 6) {
        let kind = rng.gen();
        let n = rng.gen_range(0..4);
        AttrValue::List((0..n).map(|_| scalar(rng, kind)).collect())
    } else {
        let kind = rng.gen();
        scalar(rng, kind)
    }
}

fn position(rng: &mut impl Rng) -> (f64, f64) {
    (real(rng), real(rng))
}

fn size(rng: &mut impl Rng) -> (f64, f64) {
    let mut s = || loop {
        let r = real(rng).abs();
        if r > 0.0 {
            break r;
        }
    };
    (s(), s())
}

/// A workspace exercising every field of the document format: unicode
/// text, all attribute kinds, containment, payloads, history, viewport and
/// id gaps left by removals.
pub fn workspace(rng: &mut impl Rng, max_elements: usize) -> Workspace {
    let mut ws = Workspace::new(workspace_id(rng), text(rng, 5), text(rng, 2)).unwrap();
    ws.set_version(rng.gen_range(0..1000));
    ws.set_viewport(Viewport {
        center: position(rng),
        zoom: size(rng).0,
    })
    .unwrap();
    for _ in 0..rng.gen_range(0..4) {
        let id = workspace_id(rng);
        ws.history_mut().push(id);
    }
    let types = ["Rule", "Miron", "State", "é", "A-b_c", "x"];
    let total = rng.gen_range(0..=max_elements);
    let mut nodes: Vec<ElementId> = Vec::new();
    for _ in 0..total {
        if nodes.is_empty() || rng.gen_ratio(3, 5) {
            let t = types.choose(rng).unwrap();
            let n = ws.add_node(t, &text(rng, 3), position(rng)).unwrap();
            if rng.gen_ratio(1, 3) {
                ws.set_size(n, size(rng)).unwrap();
            }
            if !nodes.is_empty() && rng.gen_ratio(1, 3) {
                let parent = *nodes.choose(rng).unwrap();
                let _ = ws.set_parent(n, Some(parent));
            }
            if rng.gen_ratio(1, 4) {
                let (kind, value) = match rng.gen_range(0..3) {
                    0 => (PayloadKind::InlineText, text(rng, 4) + "t"),
                    1 => (PayloadKind::FilePath, format!("docs/{}.md", workspace_id(rng))),
                    _ => (PayloadKind::WorkspaceLink, workspace_id(rng)),
                };
                ws.set_payload(n, Some(PayloadRef { kind, value })).unwrap();
            }
            for _ in 0..rng.gen_range(0..4) {
                let key = text(rng, 2) + "k";
                ws.set_attr(n, &key, attr_value(rng)).unwrap();
            }
            nodes.push(n);
        } else {
            let from = *nodes.choose(rng).unwrap();
            let to = *nodes.choose(rng).unwrap();
            let l = ws.add_link(types.choose(rng).unwrap(), from, to).unwrap();
            for _ in 0..rng.gen_range(0..3) {
                let key = text(rng, 2) + "k";
                ws.set_attr(l, &key, attr_value(rng)).unwrap();
            }
        }
    }
    // Leave gaps in the id sequence.
    for _ in 0..rng.gen_range(0..=total / 4) {
        let high = ws.next_id();
        let victim = ElementId::new(rng.gen_range(1..high)).unwrap();
        if ws.node(victim).is_some() {
            ws.remove_node(victim).unwrap();
            nodes.retain(|n| *n != victim);
        } else if ws.link(victim).is_some() {
            ws.remove_link(victim).unwrap();
        }
    }
    ws
}

/// Vocabulary shared by a random metamodel and the workspaces checked
/// against it, so most names resolve and some do not.
pub struct Vocabulary {
    pub node_types: Vec<String>,
    pub link_types: Vec<String>,
    pub attr_keys: Vec<String>,
    pub strings: Vec<String>,
}

impl Vocabulary {
    pub fn standard() -> Vocabulary {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Vocabulary {
            node_types: v(&["T0", "T1", "T2", "T3", "Alien"]),
            link_types: v(&["l0", "l1", "l2", "stray"]),
            attr_keys: v(&["a", "b", "c", "d"]),
            strings: v(&["x", "y", "z", "a b"]),
        }
    }
}

const KINDS: [&str; 6] = ["string", "integer", "real", "boolean", "list", "ref"];

fn yaml_value(v: &AttrValue) -> String {
    match v {
        AttrValue::Str(s) => serde_json::to_string(s).unwrap(),
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Real(r) => format!("{r:?}"),
        AttrValue::Bool(b) => b.to_string(),
        AttrValue::Ref(r) => serde_json::to_string(r).unwrap(),
        AttrValue::List(items) => format!("[{}]", items.iter().map(yaml_value).collect::<Vec<_>>().join(", ")),
    }
}

fn value_of_kind(rng: &mut impl Rng, kind: &str, vocab: &Vocabulary) -> AttrValue {
    match kind {
        "string" => AttrValue::str(vocab.strings.choose(rng).unwrap().clone()),
        "integer" => AttrValue::Int(rng.gen_range(-3..4)),
        "real" => AttrValue::Real(rng.gen_range(-3..4) as f64 / 2.0),
        "boolean" => AttrValue::Bool(rng.gen()),
        "list" => AttrValue::List(vec![AttrValue::Int(rng.gen_range(0..3))]),
        _ => AttrValue::Ref(vocab.strings[0].clone()),
    }
}

/// Metamodel YAML with 1 to `max_types` node types drawn from the
/// vocabulary (never `Alien`) and up to three link types.
pub fn metamodel_yaml(rng: &mut impl Rng, max_types: usize, vocab: &Vocabulary) -> String {
    let n_types = rng.gen_range(1..=max_types.min(4));
    let types = &vocab.node_types[..n_types];
    let mut out = String::from("id: random\nname: Random\nnodes:\n");
    for t in types {
        let n_attrs = rng.gen_range(0..=3);
        let attrs = if n_attrs == 0 { " []" } else { "" };
        out.push_str(&format!("  {t}:\n    container: {}\n    attrs:{attrs}\n", rng.gen_bool(0.4)));
        let mut keys = vocab.attr_keys.clone();
        keys.shuffle(rng);
        for key in keys.iter().take(n_attrs) {
            let kind = *KINDS.choose(rng).unwrap();
            out.push_str(&format!("      - {key}: {kind}\n        required: {}\n", rng.gen_bool(0.5)));
            if kind == "string" && rng.gen_bool(0.5) {
                let mut allowed = vocab.strings.clone();
                allowed.shuffle(rng);
                allowed.truncate(rng.gen_range(1..=3));
                let list: Vec<_> = allowed.iter().map(|s| serde_json::to_string(s).unwrap()).collect();
                out.push_str(&format!("        enum: [{}]\n", list.join(", ")));
                if rng.gen_bool(0.3) {
                    out.push_str(&format!("        default: {}\n", serde_json::to_string(&allowed[0]).unwrap()));
                }
            } else if rng.gen_bool(0.3) {
                let v = value_of_kind(rng, kind, vocab);
                out.push_str(&format!("        default: {}\n", yaml_value(&v)));
            }
        }
    }
    let n_links = rng.gen_range(0..=3);
    if n_links == 0 {
        out.push_str("links: {}\n");
    } else {
        out.push_str("links:\n");
    }
    for l in vocab.link_types.iter().take(n_links) {
        let pattern = |rng: &mut dyn rand::RngCore| {
            if rng.gen_ratio(1, 4) {
                "*".to_owned()
            } else {
                types.choose(rng).unwrap().clone()
            }
        };
        let n_eps = rng.gen_range(1..=2);
        let eps: Vec<String> = (0..n_eps)
            .map(|_| format!("\"{} -> {}\"", pattern(rng), pattern(rng)))
            .collect();
        out.push_str(&format!("  {l}:\n    endpoints: [{}]\n    self: {}\n", eps.join(", "), rng.gen_bool(0.5)));
        if rng.gen_bool(0.4) {
            out.push_str(&format!("    max_out: {}\n", rng.gen_range(1..3)));
        }
        if rng.gen_bool(0.4) {
            out.push_str(&format!("    max_in: {}\n", rng.gen_range(1..3)));
        }
    }
    out
}

/// Up to `max_nodes` nodes with vocabulary types, attributes of random
/// (often wrong) kinds, random containment and random links.
pub fn typed_workspace(rng: &mut impl Rng, max_nodes: usize, vocab: &Vocabulary) -> Workspace {
    let mut ws = Workspace::new("w", "w", "random").unwrap();
    let mut nodes = Vec::new();
    for _ in 0..rng.gen_range(0..=max_nodes) {
        let t = vocab.node_types.choose(rng).unwrap();
        let n = ws.add_node(t, vocab.strings.choose(rng).unwrap(), (0.0, 0.0)).unwrap();
        for key in &vocab.attr_keys {
            if rng.gen_bool(0.5) {
                let kind = *KINDS.choose(rng).unwrap();
                ws.set_attr(n, key, value_of_kind(rng, kind, vocab)).unwrap();
            }
        }
        if !nodes.is_empty() && rng.gen_bool(0.3) {
            ws.set_parent(n, Some(*nodes.choose(rng).unwrap())).unwrap();
        }
        nodes.push(n);
    }
    if !nodes.is_empty() {
        for _ in 0..rng.gen_range(0..=nodes.len() * 2) {
            let t = vocab.link_types.choose(rng).unwrap();
            let from = *nodes.choose(rng).unwrap();
            let to = if rng.gen_ratio(1, 6) { from } else { *nodes.choose(rng).unwrap() };
            let l = ws.add_link(t, from, to).unwrap();
            if rng.gen_bool(0.3) {
                let key = vocab.attr_keys.choose(rng).unwrap();
                ws.set_attr(l, key, value_of_kind(rng, "string", vocab)).unwrap();
            }
        }
    }
    if !nodes.is_empty() && rng.gen_bool(0.3) {
        let victim = *nodes.choose(rng).unwrap();
        ws.remove_node(victim).unwrap();
    }
    ws
}
