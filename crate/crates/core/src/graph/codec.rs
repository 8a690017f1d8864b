//! Canonical `.hgw.json` encoding.
//!
//! Keys are written in a fixed schema order, arrays sorted by id, two-space
//! indentation, one trailing newline. Reals use the shortest round-trip
//! decimal, so equal workspaces always produce identical bytes.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{
    check_workspace_id, AttrValue, ElementId, GraphError, Link, Node, PayloadRef, Viewport,
    Workspace,
};

pub const FORMAT_NAME: &str = "hgos-workspace";
pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize)]
struct DocOut<'a> {
    format: &'static str,
    fversion: u64,
    id: &'a str,
    name: &'a str,
    metamodel: &'a str,
    version: u64,
    next_id: u64,
    viewport: ViewportDoc,
    history: &'a [String],
    nodes: Vec<NodeOut<'a>>,
    links: Vec<LinkOut<'a>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewportDoc {
    cx: f64,
    cy: f64,
    zoom: f64,
}

#[derive(Serialize)]
struct NodeOut<'a> {
    id: ElementId,
    #[serde(rename = "type")]
    type_name: &'a str,
    label: &'a str,
    parent: Option<ElementId>,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    attrs: &'a IndexMap<String, AttrValue>,
    payload: Option<&'a PayloadRef>,
}

#[derive(Serialize)]
struct LinkOut<'a> {
    id: ElementId,
    #[serde(rename = "type")]
    type_name: &'a str,
    from: ElementId,
    to: ElementId,
    attrs: &'a IndexMap<String, AttrValue>,
}

#[derive(Deserialize)]
struct Header {
    format: Option<serde_json::Value>,
    fversion: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct DocIn {
    format: String,
    fversion: u64,
    id: String,
    name: String,
    metamodel: String,
    version: u64,
    next_id: u64,
    viewport: ViewportDoc,
    history: Vec<String>,
    nodes: Vec<NodeIn>,
    links: Vec<LinkIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeIn {
    id: u64,
    #[serde(rename = "type")]
    type_name: String,
    label: String,
    parent: Option<u64>,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    attrs: IndexMap<String, AttrValue>,
    payload: Option<PayloadRef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkIn {
    id: u64,
    #[serde(rename = "type")]
    type_name: String,
    from: u64,
    to: u64,
    attrs: IndexMap<String, AttrValue>,
}

pub fn serialize(ws: &Workspace) -> String {
    let doc = DocOut {
        format: FORMAT_NAME,
        fversion: FORMAT_VERSION,
        id: &ws.id,
        name: &ws.name,
        metamodel: &ws.metamodel,
        version: ws.version,
        next_id: ws.next_id,
        viewport: ViewportDoc {
            cx: ws.viewport.center.0,
            cy: ws.viewport.center.1,
            zoom: ws.viewport.zoom,
        },
        history: &ws.history,
        nodes: ws
            .nodes
            .values()
            .map(|n| NodeOut {
                id: n.id,
                type_name: &n.type_name,
                label: &n.label,
                parent: n.parent,
                x: n.position.0,
                y: n.position.1,
                w: n.size.0,
                h: n.size.1,
                attrs: &n.attrs,
                payload: n.payload.as_ref(),
            })
            .collect(),
        links: ws
            .links
            .values()
            .map(|l| LinkOut {
                id: l.id,
                type_name: &l.type_name,
                from: l.from,
                to: l.to,
                attrs: &l.attrs,
            })
            .collect(),
    };
    // Serializing plain data into a Vec cannot fail.
    let mut text = serde_json::to_string_pretty(&doc).expect("workspace serialization");
    text.push('\n');
    text
}

fn parse_error(e: serde_json::Error) -> GraphError {
    GraphError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn integrity(element: u64, message: impl Into<String>) -> GraphError {
    GraphError::Integrity {
        element,
        message: message.into(),
    }
}

/// Parses a workspace document and checks every workspace invariant.
pub fn deserialize(text: &str) -> Result<Workspace, GraphError> {
    let header: Header = serde_json::from_str(text).map_err(parse_error)?;
    match header.format {
        Some(serde_json::Value::String(f)) if f == FORMAT_NAME => {}
        Some(other) => return Err(GraphError::UnsupportedFormat(other.to_string())),
        None => return Err(GraphError::UnsupportedFormat("<missing>".into())),
    }
    match header.fversion.as_ref().and_then(serde_json::Value::as_u64) {
        Some(FORMAT_VERSION) => {}
        Some(v) => return Err(GraphError::UnsupportedVersion(v)),
        None => {
            return Err(GraphError::Parse {
                line: 1,
                column: 1,
                message: "missing or non-integer `fversion`".into(),
            })
        }
    }
    let doc: DocIn = serde_json::from_str(text).map_err(parse_error)?;

    let mut ws = Workspace::new(doc.id, doc.name, doc.metamodel)?;
    ws.version = doc.version;
    ws.history = doc.history;
    ws.set_viewport(Viewport {
        center: (doc.viewport.cx, doc.viewport.cy),
        zoom: doc.viewport.zoom,
    })?;

    let mut max_id = 0;
    for n in doc.nodes {
        let id = ElementId::new(n.id).ok_or_else(|| integrity(0, "element ids start at 1"))?;
        max_id = max_id.max(n.id);
        if n.type_name.is_empty() {
            return Err(integrity(n.id, "empty node type"));
        }
        let finite = [n.x, n.y, n.w, n.h].iter().all(|v| v.is_finite());
        if !finite || n.w <= 0.0 || n.h <= 0.0 {
            return Err(integrity(n.id, "position must be finite and size positive"));
        }
        if let Some(p) = &n.payload {
            p.check().map_err(|e| integrity(n.id, e.to_string()))?;
        }
        for (key, value) in &n.attrs {
            value
                .check()
                .map_err(|e| integrity(n.id, format!("attribute {key:?}: {e}")))?;
        }
        let parent = match n.parent {
            Some(p) => Some(ElementId::new(p).ok_or_else(|| integrity(n.id, "parent id 0"))?),
            None => None,
        };
        let node = Node {
            id,
            type_name: n.type_name,
            label: n.label,
            parent,
            position: (n.x, n.y),
            size: (n.w, n.h),
            attrs: n.attrs,
            payload: n.payload,
        };
        if !ws.insert_raw_node(node) {
            return Err(integrity(n.id, "duplicate element id"));
        }
    }
    for l in doc.links {
        let id = ElementId::new(l.id).ok_or_else(|| integrity(0, "element ids start at 1"))?;
        max_id = max_id.max(l.id);
        if ws.nodes.contains_key(&id) {
            return Err(integrity(l.id, "duplicate element id"));
        }
        if l.type_name.is_empty() {
            return Err(integrity(l.id, "empty link type"));
        }
        let mut ends = [ElementId(0); 2];
        for (slot, raw) in ends.iter_mut().zip([l.from, l.to]) {
            match ElementId::new(raw).filter(|e| ws.nodes.contains_key(e)) {
                Some(e) => *slot = e,
                None => {
                    return Err(integrity(
                        l.id,
                        format!("link {} references missing node {raw}", l.id),
                    ))
                }
            }
        }
        for (key, value) in &l.attrs {
            value
                .check()
                .map_err(|e| integrity(l.id, format!("attribute {key:?}: {e}")))?;
        }
        let link = Link {
            id,
            type_name: l.type_name,
            from: ends[0],
            to: ends[1],
            attrs: l.attrs,
        };
        if !ws.insert_raw_link(link) {
            return Err(integrity(l.id, "duplicate element id"));
        }
    }

    for node in ws.nodes.values() {
        let Some(parent) = node.parent else { continue };
        if !ws.nodes.contains_key(&parent) {
            return Err(integrity(
                node.id.get(),
                format!("parent {parent} is not a node of this workspace"),
            ));
        }
        // Walk up at most node_count steps; longer means a cycle.
        let mut cursor = Some(parent);
        let mut steps = 0;
        while let Some(c) = cursor {
            steps += 1;
            if c == node.id || steps > ws.nodes.len() {
                return Err(integrity(node.id.get(), "containment cycle"));
            }
            cursor = ws.nodes[&c].parent;
        }
    }

    if doc.next_id <= max_id {
        return Err(integrity(
            max_id,
            format!("next_id {} must exceed every element id", doc.next_id),
        ));
    }
    ws.set_next_id(doc.next_id);
    check_workspace_id(&ws.id)?;
    Ok(ws)
}
