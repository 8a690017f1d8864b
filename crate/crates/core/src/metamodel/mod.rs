//! DSL definitions: node and link type schemas, visuals, palettes and the
//! model integrity checker.

mod format;
mod light;
mod validate;

use indexmap::IndexMap;
use serde::Serialize;

use crate::graph::{AttrKind, AttrValue, ElementId, Schema, Workspace};

pub use format::load_metamodel;
pub use light::{light_create, LightLink, LightNode, LightParams};
pub use validate::{validate, Violation, ViolationCode};

/// Shape used to draw a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Box,
    Rounded,
    Ellipse,
    Diamond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stroke {
    Solid,
    Dashed,
    Dotted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    None,
    Arrow,
    Diamond,
}

macro_rules! keyword_enum {
    ($ty:ty { $($variant:ident => $word:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $word),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s { $($word => Some(Self::$variant),)+ _ => None }
            }
        }
    };
}

keyword_enum!(Shape { Box => "box", Rounded => "rounded", Ellipse => "ellipse", Diamond => "diamond" });
keyword_enum!(Stroke { Solid => "solid", Dashed => "dashed", Dotted => "dotted" });
keyword_enum!(Head { None => "none", Arrow => "arrow", Diamond => "diamond" });

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisualTemplate {
    pub shape: Shape,
    pub fill: String,
    pub text_fields: Vec<String>,
}

impl Default for VisualTemplate {
    fn default() -> Self {
        VisualTemplate {
            shape: Shape::Box,
            fill: DEFAULT_FILL.to_owned(),
            text_fields: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VisualStyle {
    pub stroke: Stroke,
    pub head: Head,
    pub color: String,
}

impl Default for VisualStyle {
    fn default() -> Self {
        VisualStyle {
            stroke: Stroke::Solid,
            head: Head::Arrow,
            color: DEFAULT_LINK_COLOR.to_owned(),
        }
    }
}

pub const DEFAULT_FILL: &str = "#ffffff";
pub const DEFAULT_LINK_COLOR: &str = "#333333";

#[derive(Debug, Clone, PartialEq)]
pub struct AttrSpec {
    pub kind: AttrKind,
    pub required: bool,
    pub default: Option<AttrValue>,
    pub enum_values: Option<Vec<String>>,
}

impl AttrSpec {
    pub fn new(kind: AttrKind) -> AttrSpec {
        AttrSpec {
            kind,
            required: false,
            default: None,
            enum_values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTypeDef {
    pub name: String,
    pub attr_schema: IndexMap<String, AttrSpec>,
    pub container: bool,
    pub visual: VisualTemplate,
    pub palette_label: String,
}

/// A type name or `*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypePattern {
    Any,
    Exact(String),
}

impl TypePattern {
    pub fn parse(s: &str) -> TypePattern {
        match s.trim() {
            "*" => TypePattern::Any,
            name => TypePattern::Exact(name.to_owned()),
        }
    }

    pub fn matches(&self, type_name: &str) -> bool {
        match self {
            TypePattern::Any => true,
            TypePattern::Exact(t) => t == type_name,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            TypePattern::Any => "*",
            TypePattern::Exact(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Cardinality {
    pub max_out_per_node: Option<u32>,
    pub max_in_per_node: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTypeDef {
    pub name: String,
    pub allowed_endpoints: Vec<(TypePattern, TypePattern)>,
    pub allow_self: bool,
    pub cardinality: Cardinality,
    pub default_style: VisualStyle,
}

impl LinkTypeDef {
    pub fn allows(&self, from_type: &str, to_type: &str) -> bool {
        self.allowed_endpoints
            .iter()
            .any(|(f, t)| f.matches(from_type) && t.matches(to_type))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaModel {
    pub id: String,
    pub name: String,
    pub node_types: IndexMap<String, NodeTypeDef>,
    pub link_types: IndexMap<String, LinkTypeDef>,
    pub style_table: IndexMap<(String, String), VisualStyle>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaletteEntry {
    pub label: String,
    pub type_name: String,
    pub visual: VisualTemplate,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetaModelError {
    #[error("metamodel parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("duplicate type name `{0}`")]
    DuplicateType(String),
    #[error("style entry {from} -> {to} references undefined node type `{missing}`")]
    DanglingStyle {
        from: String,
        to: String,
        missing: String,
    },
    #[error("a metamodel must define at least one node type")]
    NoNodeTypes,
    #[error("element {0} does not exist or is not a link")]
    NotALink(ElementId),
    #[error("link type `{0}` is not defined")]
    UnknownLinkType(String),
    #[error("endpoint {element} has type `{type_name}`, which the metamodel does not define")]
    UndefinedEndpointType { element: ElementId, type_name: String },
}

fn invalid(msg: impl Into<String>) -> MetaModelError {
    MetaModelError::Invalid(msg.into())
}

/// Type and attribute names: `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl MetaModel {
    /// Checks every metamodel invariant. Both the file loader and the light
    /// process finish here.
    pub fn check(&self) -> Result<(), MetaModelError> {
        if self.id.is_empty() {
            return Err(invalid("metamodel id must not be empty"));
        }
        if self.node_types.is_empty() {
            return Err(MetaModelError::NoNodeTypes);
        }
        for name in self.node_types.keys() {
            if self.link_types.contains_key(name) {
                return Err(MetaModelError::DuplicateType(name.clone()));
            }
        }
        for (name, def) in &self.node_types {
            if !is_name(name) || def.name != *name {
                return Err(invalid(format!("invalid node type name `{name}`")));
            }
            for (key, spec) in &def.attr_schema {
                if !is_name(key) {
                    return Err(invalid(format!("node `{name}`: invalid attribute name `{key}`")));
                }
                check_attr_spec(name, key, spec)?;
            }
            for field in &def.visual.text_fields {
                if !def.attr_schema.contains_key(field) {
                    return Err(invalid(format!(
                        "node `{name}`: shown field `{field}` is not a declared attribute"
                    )));
                }
            }
        }
        for (name, def) in &self.link_types {
            if !is_name(name) || def.name != *name {
                return Err(invalid(format!("invalid link type name `{name}`")));
            }
            if def.allowed_endpoints.is_empty() {
                return Err(invalid(format!("link `{name}` must list at least one endpoint pair")));
            }
            for (from, to) in &def.allowed_endpoints {
                for pattern in [from, to] {
                    if let TypePattern::Exact(t) = pattern {
                        if !self.node_types.contains_key(t) {
                            return Err(invalid(format!(
                                "link `{name}` endpoint references undefined node type `{t}`"
                            )));
                        }
                    }
                }
            }
            let c = def.cardinality;
            if c.max_out_per_node == Some(0) || c.max_in_per_node == Some(0) {
                return Err(invalid(format!("link `{name}`: cardinality bounds must be at least 1")));
            }
        }
        for (from, to) in self.style_table.keys() {
            for t in [from, to] {
                if !self.node_types.contains_key(t) {
                    return Err(MetaModelError::DanglingStyle {
                        from: from.clone(),
                        to: to.clone(),
                        missing: t.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// One entry per node type, in declaration order.
    pub fn palette(&self) -> Vec<PaletteEntry> {
        self.node_types
            .values()
            .map(|def| PaletteEntry {
                label: def.palette_label.clone(),
                type_name: def.name.clone(),
                visual: def.visual.clone(),
            })
            .collect()
    }

    /// Canonical text form; loading it back yields an equal metamodel.
    pub fn to_yaml(&self) -> String {
        format::emit(self)
    }

    /// Style of a link, chosen by the (from type, to type) pair and falling
    /// back to the link type's default.
    pub fn resolve_link_style(
        &self,
        ws: &Workspace,
        link_id: ElementId,
    ) -> Result<VisualStyle, MetaModelError> {
        let link = ws.link(link_id).ok_or(MetaModelError::NotALink(link_id))?;
        let mut types = Vec::with_capacity(2);
        for end in [link.from, link.to] {
            let node = ws.node(end).ok_or(MetaModelError::NotALink(link_id))?;
            if !self.node_types.contains_key(&node.type_name) {
                return Err(MetaModelError::UndefinedEndpointType {
                    element: end,
                    type_name: node.type_name.clone(),
                });
            }
            types.push(node.type_name.clone());
        }
        let key = (types[0].clone(), types[1].clone());
        if let Some(style) = self.style_table.get(&key) {
            return Ok(style.clone());
        }
        self.link_types
            .get(&link.type_name)
            .map(|def| def.default_style.clone())
            .ok_or_else(|| MetaModelError::UnknownLinkType(link.type_name.clone()))
    }
}

pub fn palette(mm: &MetaModel) -> Vec<PaletteEntry> {
    mm.palette()
}

pub fn resolve_link_style(
    ws: &Workspace,
    link_id: ElementId,
    mm: &MetaModel,
) -> Result<VisualStyle, MetaModelError> {
    mm.resolve_link_style(ws, link_id)
}

fn check_attr_spec(node: &str, key: &str, spec: &AttrSpec) -> Result<(), MetaModelError> {
    let here = || format!("node `{node}`, attribute `{key}`");
    if let Some(values) = &spec.enum_values {
        if spec.kind != AttrKind::String {
            return Err(invalid(format!("{}: enum is only allowed on string attributes", here())));
        }
        if values.is_empty() {
            return Err(invalid(format!("{}: enum must not be empty", here())));
        }
    }
    if let Some(default) = &spec.default {
        if default.kind() != spec.kind {
            return Err(invalid(format!(
                "{}: default is {}, expected {}",
                here(),
                default.kind(),
                spec.kind
            )));
        }
        default
            .check()
            .map_err(|e| invalid(format!("{}: default: {e}", here())))?;
        if let (Some(values), AttrValue::Str(s)) = (&spec.enum_values, default) {
            if !values.contains(s) {
                return Err(invalid(format!("{}: default `{s}` is not an enum value", here())));
            }
        }
    }
    Ok(())
}

impl Schema for MetaModel {
    fn node_defaults(&self, node_type: &str) -> Vec<(String, AttrValue)> {
        self.node_types
            .get(node_type)
            .map(|def| {
                def.attr_schema
                    .iter()
                    .filter_map(|(k, spec)| spec.default.clone().map(|d| (k.clone(), d)))
                    .collect()
            })
            .unwrap_or_default()
    }

    fn allows_self_link(&self, link_type: &str) -> bool {
        self.link_types.get(link_type).is_none_or(|d| d.allow_self)
    }

    fn is_container(&self, node_type: &str) -> bool {
        self.node_types.get(node_type).is_some_and(|d| d.container)
    }
}

/// Metamodels shipped with the crate, by id.
pub mod bundled {
    use super::{load_metamodel, MetaModel};

    pub const BASIC: &str = include_str!("../../fixtures/metamodels/basic.mm.yaml");
    pub const DIALOG: &str = include_str!("../../fixtures/metamodels/dialog.mm.yaml");
    pub const CODEGEN: &str = include_str!("../../fixtures/metamodels/codegen.mm.yaml");

    pub const IDS: [&str; 3] = ["basic", "dialog", "codegen"];

    pub fn source(id: &str) -> Option<&'static str> {
        match id {
            "basic" => Some(BASIC),
            "dialog" => Some(DIALOG),
            "codegen" => Some(CODEGEN),
            _ => None,
        }
    }

    pub fn get(id: &str) -> Option<MetaModel> {
        source(id).map(|text| load_metamodel(text).expect("bundled metamodel is valid"))
    }
}
