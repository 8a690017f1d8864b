//! `*.mm.yaml` reading and canonical writing.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde_yaml::{Mapping, Value};

use super::{
    invalid, AttrSpec, Cardinality, Head, LinkTypeDef, MetaModel, MetaModelError, NodeTypeDef,
    Shape, Stroke, TypePattern, VisualStyle, VisualTemplate,
};
use crate::graph::{format_real, AttrKind, AttrValue};

pub fn load_metamodel(text: &str) -> Result<MetaModel, MetaModelError> {
    let root: Value = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        MetaModelError::Parse {
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let root = as_map(&root, "metamodel")?;
    check_keys(root, "metamodel", &["id", "name", "nodes", "links", "styles"])?;

    let id = req_str(root, "id", "metamodel")?;
    let name = opt_str(root, "name", "metamodel")?.unwrap_or_else(|| id.clone());

    let mut node_types = IndexMap::new();
    match root.get("nodes") {
        Some(Value::Mapping(nodes)) => {
            for (key, entry) in nodes {
                let type_name = key_str(key, "nodes")?;
                let def = parse_node(&type_name, entry)?;
                node_types.insert(type_name, def);
            }
        }
        Some(Value::Null) | None => {}
        Some(_) => return Err(invalid("`nodes` must be a mapping of type name to definition")),
    }

    let mut link_types = IndexMap::new();
    match root.get("links") {
        Some(Value::Mapping(links)) => {
            for (key, entry) in links {
                let type_name = key_str(key, "links")?;
                if node_types.contains_key(&type_name) {
                    return Err(MetaModelError::DuplicateType(type_name));
                }
                let def = parse_link(&type_name, entry)?;
                link_types.insert(type_name, def);
            }
        }
        Some(Value::Null) | None => {}
        Some(_) => return Err(invalid("`links` must be a mapping of type name to definition")),
    }

    let mut style_table = IndexMap::new();
    match root.get("styles") {
        Some(Value::Sequence(entries)) => {
            for entry in entries {
                let map = as_map(entry, "style entry")?;
                check_keys(map, "style entry", &["from", "to", "stroke", "head", "color"])?;
                let from = req_str(map, "from", "style entry")?;
                let to = req_str(map, "to", "style entry")?;
                let style = parse_style(map, "style entry")?;
                if style_table.insert((from.clone(), to.clone()), style).is_some() {
                    return Err(invalid(format!("duplicate style entry {from} -> {to}")));
                }
            }
        }
        Some(Value::Null) | None => {}
        Some(_) => return Err(invalid("`styles` must be a list")),
    }

    let mm = MetaModel {
        id,
        name,
        node_types,
        link_types,
        style_table,
    };
    mm.check()?;
    Ok(mm)
}

fn parse_node(type_name: &str, entry: &Value) -> Result<NodeTypeDef, MetaModelError> {
    let ctx = format!("node `{type_name}`");
    let empty = Mapping::new();
    let map = match entry {
        Value::Null => &empty,
        other => as_map(other, &ctx)?,
    };
    check_keys(map, &ctx, &["label", "container", "shape", "fill", "show", "attrs"])?;

    let mut attr_schema = IndexMap::new();
    if let Some(attrs) = map.get("attrs") {
        let Value::Sequence(attrs) = attrs else {
            return Err(invalid(format!("{ctx}: `attrs` must be a list")));
        };
        for attr in attrs {
            let (key, spec) = parse_attr(&ctx, attr)?;
            if attr_schema.insert(key.clone(), spec).is_some() {
                return Err(invalid(format!("{ctx}: duplicate attribute `{key}`")));
            }
        }
    }

    let shape = match opt_str(map, "shape", &ctx)? {
        Some(s) => Shape::parse(&s).ok_or_else(|| invalid(format!("{ctx}: unknown shape `{s}`")))?,
        None => Shape::Box,
    };
    let text_fields = match map.get("show") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Sequence(items)) => items
            .iter()
            .map(|v| key_str(v, &ctx))
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(invalid(format!("{ctx}: `show` must be a list"))),
    };
    Ok(NodeTypeDef {
        name: type_name.to_owned(),
        attr_schema,
        container: opt_bool(map, "container", &ctx)?.unwrap_or(false),
        visual: VisualTemplate {
            shape,
            fill: opt_str(map, "fill", &ctx)?.unwrap_or_else(|| super::DEFAULT_FILL.to_owned()),
            text_fields,
        },
        palette_label: opt_str(map, "label", &ctx)?.unwrap_or_else(|| type_name.to_owned()),
    })
}

/// An attribute entry is a mapping whose first key is the attribute name
/// (with its kind as value), followed by optional `required`, `default`
/// and `enum` keys.
fn parse_attr(ctx: &str, attr: &Value) -> Result<(String, AttrSpec), MetaModelError> {
    let map = as_map(attr, ctx)?;
    let mut entries = map.iter();
    let Some((key, kind)) = entries.next() else {
        return Err(invalid(format!("{ctx}: empty attribute entry")));
    };
    let key = key_str(key, ctx)?;
    let ctx = format!("{ctx}, attribute `{key}`");
    let kind_word = key_str(kind, &ctx)?;
    let kind = AttrKind::parse(&kind_word)
        .ok_or_else(|| invalid(format!("{ctx}: unknown kind `{kind_word}`")))?;
    let mut spec = AttrSpec::new(kind);
    for (k, v) in entries {
        match k.as_str() {
            Some("required") => {
                spec.required = v
                    .as_bool()
                    .ok_or_else(|| invalid(format!("{ctx}: `required` must be a boolean")))?
            }
            Some("default") => spec.default = Some(yaml_to_value(v, kind, &ctx)?),
            Some("enum") => {
                let Value::Sequence(items) = v else {
                    return Err(invalid(format!("{ctx}: `enum` must be a list")));
                };
                spec.enum_values = Some(
                    items
                        .iter()
                        .map(|i| scalar_string(i).ok_or_else(|| invalid(format!("{ctx}: enum values must be scalars"))))
                        .collect::<Result<_, _>>()?,
                );
            }
            _ => return Err(invalid(format!("{ctx}: unexpected key {}", describe(k)))),
        }
    }
    Ok((key, spec))
}

fn parse_link(type_name: &str, entry: &Value) -> Result<LinkTypeDef, MetaModelError> {
    let ctx = format!("link `{type_name}`");
    let map = as_map(entry, &ctx)?;
    check_keys(map, &ctx, &["endpoints", "self", "max_out", "max_in", "style"])?;
    let allowed_endpoints = match map.get("endpoints") {
        Some(Value::Sequence(items)) => items
            .iter()
            .map(|i| {
                let s = i
                    .as_str()
                    .ok_or_else(|| invalid(format!("{ctx}: endpoints must be `From -> To` strings")))?;
                parse_endpoint(s).ok_or_else(|| invalid(format!("{ctx}: malformed endpoint `{s}`")))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(invalid(format!("{ctx}: `endpoints` must be a list"))),
        None => Vec::new(),
    };
    let bound = |key: &str| -> Result<Option<u32>, MetaModelError> {
        match map.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .map(Some)
                .ok_or_else(|| invalid(format!("{ctx}: `{key}` must be a positive integer"))),
        }
    };
    let default_style = match map.get("style") {
        None | Some(Value::Null) => VisualStyle::default(),
        Some(v) => parse_style(as_map(v, &ctx)?, &ctx)?,
    };
    Ok(LinkTypeDef {
        name: type_name.to_owned(),
        allowed_endpoints,
        allow_self: opt_bool(map, "self", &ctx)?.unwrap_or(false),
        cardinality: Cardinality {
            max_out_per_node: bound("max_out")?,
            max_in_per_node: bound("max_in")?,
        },
        default_style,
    })
}

pub(crate) fn parse_endpoint(s: &str) -> Option<(TypePattern, TypePattern)> {
    let (from, to) = s.split_once("->")?;
    let (from, to) = (from.trim(), to.trim());
    if from.is_empty() || to.is_empty() {
        return None;
    }
    Some((TypePattern::parse(from), TypePattern::parse(to)))
}

fn parse_style(map: &Mapping, ctx: &str) -> Result<VisualStyle, MetaModelError> {
    let mut style = VisualStyle::default();
    for (k, v) in map {
        let word = || key_str(v, ctx);
        match k.as_str() {
            Some("stroke") => {
                let w = word()?;
                style.stroke = Stroke::parse(&w).ok_or_else(|| invalid(format!("{ctx}: unknown stroke `{w}`")))?;
            }
            Some("head") => {
                let w = word()?;
                style.head = Head::parse(&w).ok_or_else(|| invalid(format!("{ctx}: unknown head `{w}`")))?;
            }
            Some("color") => style.color = word()?,
            Some("from" | "to") => {}
            _ => return Err(invalid(format!("{ctx}: unexpected style key {}", describe(k)))),
        }
    }
    Ok(style)
}

fn yaml_to_value(v: &Value, kind: AttrKind, ctx: &str) -> Result<AttrValue, MetaModelError> {
    let bad = || invalid(format!("{ctx}: default does not match kind {kind}"));
    let value = match kind {
        AttrKind::String => AttrValue::Str(v.as_str().ok_or_else(bad)?.to_owned()),
        AttrKind::Ref => AttrValue::Ref(v.as_str().ok_or_else(bad)?.to_owned()),
        AttrKind::Integer => AttrValue::Int(v.as_i64().ok_or_else(bad)?),
        AttrKind::Real => AttrValue::Real(v.as_f64().ok_or_else(bad)?),
        AttrKind::Boolean => AttrValue::Bool(v.as_bool().ok_or_else(bad)?),
        AttrKind::List => {
            let Value::Sequence(items) = v else { return Err(bad()) };
            AttrValue::List(items.iter().map(|i| infer_value(i).ok_or_else(bad)).collect::<Result<_, _>>()?)
        }
    };
    value.check().map_err(|e| invalid(format!("{ctx}: default: {e}")))?;
    Ok(value)
}

fn infer_value(v: &Value) -> Option<AttrValue> {
    Some(match v {
        Value::String(s) => AttrValue::Str(s.clone()),
        Value::Bool(b) => AttrValue::Bool(*b),
        Value::Number(n) if n.is_f64() => AttrValue::Real(n.as_f64()?),
        Value::Number(n) => AttrValue::Int(n.as_i64()?),
        Value::Sequence(items) => AttrValue::List(items.iter().map(infer_value).collect::<Option<_>>()?),
        _ => return None,
    })
}

fn describe(v: &Value) -> String {
    match v {
        Value::String(s) => format!("`{s}`"),
        other => format!("{other:?}"),
    }
}

fn as_map<'a>(v: &'a Value, ctx: &str) -> Result<&'a Mapping, MetaModelError> {
    v.as_mapping()
        .ok_or_else(|| invalid(format!("{ctx}: expected a mapping")))
}

fn check_keys(map: &Mapping, ctx: &str, allowed: &[&str]) -> Result<(), MetaModelError> {
    for key in map.keys() {
        match key.as_str() {
            Some(k) if allowed.contains(&k) => {}
            _ => return Err(invalid(format!("{ctx}: unknown key {}", describe(key)))),
        }
    }
    Ok(())
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn key_str(v: &Value, ctx: &str) -> Result<String, MetaModelError> {
    v.as_str()
        .map(str::to_owned)
        .ok_or_else(|| invalid(format!("{ctx}: expected a name, found {}", describe(v))))
}

fn req_str(map: &Mapping, key: &str, ctx: &str) -> Result<String, MetaModelError> {
    opt_str(map, key, ctx)?.ok_or_else(|| invalid(format!("{ctx}: missing `{key}`")))
}

fn opt_str(map: &Mapping, key: &str, ctx: &str) -> Result<Option<String>, MetaModelError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => scalar_string(v)
            .map(Some)
            .ok_or_else(|| invalid(format!("{ctx}: `{key}` must be a string"))),
    }
}

fn opt_bool(map: &Mapping, key: &str, ctx: &str) -> Result<Option<bool>, MetaModelError> {
    match map.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_bool()
            .map(Some)
            .ok_or_else(|| invalid(format!("{ctx}: `{key}` must be a boolean"))),
    }
}

const YAML_WORDS: [&str; 11] = ["true", "false", "null", "yes", "no", "on", "off", "y", "n", "~", "none"];

/// Bare when the string is a plain name YAML will not reinterpret,
/// JSON-quoted otherwise.
fn yaml_str(s: &str) -> String {
    let plain = super::is_name(s) && !YAML_WORDS.contains(&s.to_ascii_lowercase().as_str());
    if plain {
        s.to_owned()
    } else {
        serde_json::to_string(s).expect("string serialization")
    }
}

fn yaml_value(v: &AttrValue) -> String {
    match v {
        AttrValue::Str(s) | AttrValue::Ref(s) => yaml_str(s),
        AttrValue::Int(i) => i.to_string(),
        AttrValue::Real(r) => format_real(*r),
        AttrValue::Bool(b) => b.to_string(),
        AttrValue::List(items) => {
            format!("[{}]", items.iter().map(yaml_value).collect::<Vec<_>>().join(", "))
        }
    }
}

fn flow_list<'a>(items: impl IntoIterator<Item = &'a str>) -> String {
    format!("[{}]", items.into_iter().map(yaml_str).collect::<Vec<_>>().join(", "))
}

fn style_fields(s: &VisualStyle) -> String {
    format!(
        "stroke: {}, head: {}, color: {}",
        s.stroke.as_str(),
        s.head.as_str(),
        yaml_str(&s.color)
    )
}

pub(super) fn emit(mm: &MetaModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "id: {}", yaml_str(&mm.id));
    let _ = writeln!(out, "name: {}", yaml_str(&mm.name));
    out.push_str("nodes:\n");
    for def in mm.node_types.values() {
        let _ = writeln!(out, "  {}:", yaml_str(&def.name));
        let _ = writeln!(out, "    label: {}", yaml_str(&def.palette_label));
        let _ = writeln!(out, "    container: {}", def.container);
        let _ = writeln!(out, "    shape: {}", def.visual.shape.as_str());
        let _ = writeln!(out, "    fill: {}", yaml_str(&def.visual.fill));
        let _ = writeln!(out, "    show: {}", flow_list(def.visual.text_fields.iter().map(String::as_str)));
        if def.attr_schema.is_empty() {
            out.push_str("    attrs: []\n");
            continue;
        }
        out.push_str("    attrs:\n");
        for (key, spec) in &def.attr_schema {
            let _ = writeln!(out, "      - {}: {}", yaml_str(key), spec.kind);
            let _ = writeln!(out, "        required: {}", spec.required);
            if let Some(d) = &spec.default {
                let _ = writeln!(out, "        default: {}", yaml_value(d));
            }
            if let Some(values) = &spec.enum_values {
                let _ = writeln!(out, "        enum: {}", flow_list(values.iter().map(String::as_str)));
            }
        }
    }
    if mm.link_types.is_empty() {
        out.push_str("links: {}\n");
    } else {
        out.push_str("links:\n");
    }
    for def in mm.link_types.values() {
        let _ = writeln!(out, "  {}:", yaml_str(&def.name));
        let endpoints: Vec<String> = def
            .allowed_endpoints
            .iter()
            .map(|(f, t)| format!("{} -> {}", f.as_str(), t.as_str()))
            .collect();
        let _ = writeln!(out, "    endpoints: {}", flow_list(endpoints.iter().map(String::as_str)));
        let _ = writeln!(out, "    self: {}", def.allow_self);
        if let Some(n) = def.cardinality.max_out_per_node {
            let _ = writeln!(out, "    max_out: {n}");
        }
        if let Some(n) = def.cardinality.max_in_per_node {
            let _ = writeln!(out, "    max_in: {n}");
        }
        let _ = writeln!(out, "    style: {{{}}}", style_fields(&def.default_style));
    }
    if mm.style_table.is_empty() {
        out.push_str("styles: []\n");
    } else {
        out.push_str("styles:\n");
    }
    for ((from, to), style) in &mm.style_table {
        let _ = writeln!(
            out,
            "  - {{from: {}, to: {}, {}}}",
            yaml_str(from),
            yaml_str(to),
            style_fields(style)
        );
    }
    out
}
