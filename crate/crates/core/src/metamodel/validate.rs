use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::MetaModel;
use crate::graph::{AttrValue, ElementId, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    UnknownType,
    MissingAttr,
    BadAttrKind,
    BadEnum,
    BadEndpoint,
    Cardinality,
    SelfLink,
    BadParent,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::UnknownType => "UNKNOWN_TYPE",
            ViolationCode::MissingAttr => "MISSING_ATTR",
            ViolationCode::BadAttrKind => "BAD_ATTR_KIND",
            ViolationCode::BadEnum => "BAD_ENUM",
            ViolationCode::BadEndpoint => "BAD_ENDPOINT",
            ViolationCode::Cardinality => "CARDINALITY",
            ViolationCode::SelfLink => "SELF_LINK",
            ViolationCode::BadParent => "BAD_PARENT",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub element: ElementId,
    pub message: String,
}

/// `<id> <CODE> <message>`, the CLI line format.
impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.element, self.code, self.message)
    }
}

/// Checks a workspace against a metamodel. Returns violations ordered by
/// (element id, code); an empty list means the model conforms.
///
/// Attributes not declared by the node type are allowed. Cardinality is
/// reported on each link beyond the bound, counting a node's links of one
/// type in id order.
pub fn validate(ws: &Workspace, mm: &MetaModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code, element, message: String| {
        out.push(Violation {
            code,
            element,
            message,
        })
    };

    for node in ws.nodes() {
        let Some(def) = mm.node_types.get(&node.type_name) else {
            push(
                ViolationCode::UnknownType,
                node.id,
                format!("node type `{}` is not defined by `{}`", node.type_name, mm.id),
            );
            continue;
        };
        for (key, spec) in &def.attr_schema {
            match node.attrs.get(key) {
                None if spec.required => push(
                    ViolationCode::MissingAttr,
                    node.id,
                    format!("required attribute `{key}` is missing"),
                ),
                None => {}
                Some(value) if value.kind() != spec.kind => push(
                    ViolationCode::BadAttrKind,
                    node.id,
                    format!("attribute `{key}` should be {}, found {}", spec.kind, value.kind()),
                ),
                Some(AttrValue::Str(s)) => {
                    if let Some(allowed) = &spec.enum_values {
                        if !allowed.contains(s) {
                            push(
                                ViolationCode::BadEnum,
                                node.id,
                                format!("attribute `{key}` value `{s}` is not one of [{}]", allowed.join(", ")),
                            );
                        }
                    }
                }
                Some(_) => {}
            }
        }
        if let Some(parent) = node.parent {
            let parent_type = ws.node(parent).map(|p| p.type_name.as_str()).unwrap_or("?");
            let is_container = mm.node_types.get(parent_type).is_some_and(|d| d.container);
            if !is_container {
                push(
                    ViolationCode::BadParent,
                    node.id,
                    format!("parent {parent} (`{parent_type}`) is not a container"),
                );
            }
        }
    }

    let mut out_seen: HashMap<(&str, ElementId), u32> = HashMap::new();
    let mut in_seen: HashMap<(&str, ElementId), u32> = HashMap::new();
    for link in ws.links() {
        let Some(def) = mm.link_types.get(&link.type_name) else {
            push(
                ViolationCode::UnknownType,
                link.id,
                format!("link type `{}` is not defined by `{}`", link.type_name, mm.id),
            );
            continue;
        };
        let type_of = |id| ws.node(id).map(|n| n.type_name.as_str()).unwrap_or("?");
        let (from_type, to_type) = (type_of(link.from), type_of(link.to));
        if !def.allows(from_type, to_type) {
            push(
                ViolationCode::BadEndpoint,
                link.id,
                format!("link `{}` cannot connect {from_type} -> {to_type}", def.name),
            );
        }
        let out_rank = out_seen.entry((&link.type_name, link.from)).or_default();
        *out_rank += 1;
        if let Some(max) = def.cardinality.max_out_per_node {
            if *out_rank > max {
                push(
                    ViolationCode::Cardinality,
                    link.id,
                    format!("node {} exceeds max_out {max} for `{}`", link.from, def.name),
                );
            }
        }
        let in_rank = in_seen.entry((&link.type_name, link.to)).or_default();
        *in_rank += 1;
        if let Some(max) = def.cardinality.max_in_per_node {
            if *in_rank > max {
                push(
                    ViolationCode::Cardinality,
                    link.id,
                    format!("node {} exceeds max_in {max} for `{}`", link.to, def.name),
                );
            }
        }
        if link.from == link.to && !def.allow_self {
            push(
                ViolationCode::SelfLink,
                link.id,
                format!("link type `{}` does not allow self-links", def.name),
            );
        }
    }

    out.sort_by_key(|v| (v.element, v.code));
    out
}
