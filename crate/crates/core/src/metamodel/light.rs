//! The light process: a metamodel from a handful of parameters, with
//! default visuals filled in.

use indexmap::IndexMap;

use super::format::parse_endpoint;
use super::{
    invalid, AttrSpec, Cardinality, LinkTypeDef, MetaModel, MetaModelError, NodeTypeDef,
    VisualStyle, VisualTemplate,
};
use crate::graph::AttrKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightNode {
    pub name: String,
    pub attrs: Vec<(String, AttrKind)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightLink {
    pub name: String,
    pub endpoints: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightParams {
    pub id: String,
    pub name: String,
    pub nodes: Vec<LightNode>,
    pub links: Vec<LightLink>,
}

/// Splits `Name(a, b, c)` into the name and its comma-separated arguments.
fn split_call(spec: &str) -> Result<(&str, Vec<&str>), MetaModelError> {
    let spec = spec.trim();
    match spec.split_once('(') {
        None => Ok((spec, Vec::new())),
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| invalid(format!("`{spec}`: missing closing parenthesis")))?;
            let args = inner
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .collect();
            Ok((name.trim(), args))
        }
    }
}

impl LightNode {
    /// Parses `Task(title:string, prio:integer)`; the argument list is optional.
    pub fn parse(spec: &str) -> Result<LightNode, MetaModelError> {
        let (name, args) = split_call(spec)?;
        let attrs = args
            .into_iter()
            .map(|arg| {
                let (key, kind) = arg
                    .split_once(':')
                    .ok_or_else(|| invalid(format!("attribute `{arg}` must be `name:kind`")))?;
                let kind = AttrKind::parse(kind.trim())
                    .ok_or_else(|| invalid(format!("unknown kind `{}`", kind.trim())))?;
                Ok((key.trim().to_owned(), kind))
            })
            .collect::<Result<_, MetaModelError>>()?;
        Ok(LightNode {
            name: name.to_owned(),
            attrs,
        })
    }
}

impl LightLink {
    /// Parses `depends(Task -> Task, * -> Task)`.
    pub fn parse(spec: &str) -> Result<LightLink, MetaModelError> {
        let (name, args) = split_call(spec)?;
        let endpoints = args
            .into_iter()
            .map(|arg| {
                parse_endpoint(arg)
                    .map(|(f, t)| (f.as_str().to_owned(), t.as_str().to_owned()))
                    .ok_or_else(|| invalid(format!("malformed endpoint `{arg}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(LightLink {
            name: name.to_owned(),
            endpoints,
        })
    }
}

pub fn light_create(params: &LightParams) -> Result<MetaModel, MetaModelError> {
    if params.nodes.is_empty() {
        return Err(MetaModelError::NoNodeTypes);
    }
    let mut node_types = IndexMap::new();
    for node in &params.nodes {
        let mut attr_schema = IndexMap::new();
        for (key, kind) in &node.attrs {
            if attr_schema.insert(key.clone(), AttrSpec::new(*kind)).is_some() {
                return Err(invalid(format!("node `{}`: duplicate attribute `{key}`", node.name)));
            }
        }
        let def = NodeTypeDef {
            name: node.name.clone(),
            attr_schema,
            container: false,
            visual: VisualTemplate::default(),
            palette_label: node.name.clone(),
        };
        if node_types.insert(node.name.clone(), def).is_some() {
            return Err(MetaModelError::DuplicateType(node.name.clone()));
        }
    }
    let mut link_types = IndexMap::new();
    for link in &params.links {
        if node_types.contains_key(&link.name) {
            return Err(MetaModelError::DuplicateType(link.name.clone()));
        }
        let def = LinkTypeDef {
            name: link.name.clone(),
            allowed_endpoints: link
                .endpoints
                .iter()
                .map(|(f, t)| (super::TypePattern::parse(f), super::TypePattern::parse(t)))
                .collect(),
            allow_self: false,
            cardinality: Cardinality::default(),
            default_style: VisualStyle::default(),
        };
        if link_types.insert(link.name.clone(), def).is_some() {
            return Err(MetaModelError::DuplicateType(link.name.clone()));
        }
    }
    let mm = MetaModel {
        id: params.id.clone(),
        name: params.name.clone(),
        node_types,
        link_types,
        style_table: IndexMap::new(),
    };
    mm.check()?;
    Ok(mm)
}
