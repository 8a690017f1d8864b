//! Typed attributed graph model for a single workspace.
//!
//! Nodes and links share one id counter, so an [`ElementId`] identifies
//! exactly one element for the workspace's whole lifetime.

mod codec;
mod value;

use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use codec::{deserialize, serialize, FORMAT_NAME, FORMAT_VERSION};
pub use value::{AttrKind, AttrValue, ValueError};

pub(crate) use value::format_real;

pub const DEFAULT_NODE_SIZE: (f64, f64) = (120.0, 60.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(u64);

impl ElementId {
    /// Returns `None` for zero; ids start at 1.
    pub fn new(raw: u64) -> Option<ElementId> {
        (raw >= 1).then_some(ElementId(raw))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    InlineText,
    FilePath,
    WorkspaceLink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadRef {
    pub kind: PayloadKind,
    pub value: String,
}

impl PayloadRef {
    pub fn check(&self) -> Result<(), GraphError> {
        if self.value.is_empty() {
            return Err(GraphError::BadPayload("payload value is empty".into()));
        }
        if self.kind == PayloadKind::FilePath && !is_relative_inside(&self.value) {
            return Err(GraphError::BadPayload(format!(
                "file path {:?} must be relative and stay inside its root",
                self.value
            )));
        }
        Ok(())
    }
}

/// True for relative paths without `..` components or drive prefixes.
pub fn is_relative_inside(path: &str) -> bool {
    if path.is_empty() || path.starts_with('/') || path.starts_with('\\') {
        return false;
    }
    let bytes = path.as_bytes();
    if bytes.len() >= 2 && bytes[1] == b':' && bytes[0].is_ascii_alphabetic() {
        return false;
    }
    path.split(['/', '\\']).all(|part| part != "..")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: ElementId,
    pub type_name: String,
    pub label: String,
    pub parent: Option<ElementId>,
    pub position: (f64, f64),
    pub size: (f64, f64),
    pub attrs: IndexMap<String, AttrValue>,
    pub payload: Option<PayloadRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: ElementId,
    pub type_name: String,
    pub from: ElementId,
    pub to: ElementId,
    pub attrs: IndexMap<String, AttrValue>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub center: (f64, f64),
    pub zoom: f64,
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            center: (0.0, 0.0),
            zoom: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

/// Links removed and nodes re-parented by [`Workspace::remove_node`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemovalReport {
    pub removed_links: Vec<ElementId>,
    pub reparented: Vec<ElementId>,
}

/// Type knowledge a workspace consults while editing. The blanket answers
/// of [`Unschemed`] accept everything.
pub trait Schema {
    fn node_defaults(&self, _node_type: &str) -> Vec<(String, AttrValue)> {
        Vec::new()
    }

    fn allows_self_link(&self, _link_type: &str) -> bool {
        true
    }

    fn is_container(&self, _node_type: &str) -> bool {
        true
    }
}

pub struct Unschemed;

impl Schema for Unschemed {}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("workspace id must not be empty")]
    EmptyWorkspaceId,
    #[error("invalid character {ch:?} in workspace id {id:?}")]
    InvalidWorkspaceId { id: String, ch: char },
    #[error("type name must not be empty")]
    EmptyTypeName,
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("unknown element {0}")]
    UnknownElement(ElementId),
    #[error("element {0} is not a node")]
    NotANode(ElementId),
    #[error("element {0} is not a link")]
    NotALink(ElementId),
    #[error("link endpoint {0} does not exist")]
    DanglingEndpoint(ElementId),
    #[error("link type {0:?} does not allow self-links")]
    SelfLinkNotAllowed(String),
    #[error("invalid value for attribute {key:?}: {source}")]
    BadValue { key: String, source: ValueError },
    #[error("attribute key must not be empty")]
    EmptyAttrKey,
    #[error("making {parent} the parent of {child} would create a containment cycle")]
    ContainmentCycle { child: ElementId, parent: ElementId },
    #[error("node {0} is not a container")]
    NotAContainer(ElementId),
    #[error("bad payload: {0}")]
    BadPayload(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported document format {0:?}")]
    UnsupportedFormat(String),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u64),
    #[error("integrity error at element {element}: {message}")]
    Integrity { element: u64, message: String },
}

impl GraphError {
    /// Element a failure refers to, when there is one.
    pub fn element(&self) -> Option<u64> {
        match self {
            GraphError::UnknownElement(id)
            | GraphError::NotANode(id)
            | GraphError::NotALink(id)
            | GraphError::DanglingEndpoint(id)
            | GraphError::NotAContainer(id) => Some(id.get()),
            GraphError::ContainmentCycle { child, .. } => Some(child.get()),
            GraphError::Integrity { element, .. } => Some(*element),
            _ => None,
        }
    }
}

/// Checks that `id` only uses URL-unreserved characters.
pub fn check_workspace_id(id: &str) -> Result<(), GraphError> {
    if id.is_empty() {
        return Err(GraphError::EmptyWorkspaceId);
    }
    let bad = |ch: char| GraphError::InvalidWorkspaceId {
        id: id.to_owned(),
        ch,
    };
    if id.starts_with('.') {
        return Err(bad('.'));
    }
    match id
        .chars()
        .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~')))
    {
        Some(ch) => Err(bad(ch)),
        None => Ok(()),
    }
}

/// One OmniSpace: a typed graph plus its visual and navigation state.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    id: String,
    name: String,
    metamodel: String,
    version: u64,
    next_id: u64,
    viewport: Viewport,
    history: Vec<String>,
    nodes: BTreeMap<ElementId, Node>,
    links: BTreeMap<ElementId, Link>,
}

impl Workspace {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        metamodel: impl Into<String>,
    ) -> Result<Workspace, GraphError> {
        let id = id.into();
        check_workspace_id(&id)?;
        Ok(Workspace {
            id,
            name: name.into(),
            metamodel: metamodel.into(),
            version: 0,
            next_id: 1,
            viewport: Viewport::default(),
            history: Vec::new(),
            nodes: BTreeMap::new(),
            links: BTreeMap::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn metamodel(&self) -> &str {
        &self.metamodel
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Largest id ever handed out, 0 for a fresh workspace.
    pub fn high_water(&self) -> u64 {
        self.next_id - 1
    }

    pub fn viewport(&self) -> Viewport {
        self.viewport
    }

    pub fn set_viewport(&mut self, viewport: Viewport) -> Result<(), GraphError> {
        check_finite("viewport center", viewport.center)?;
        if !viewport.zoom.is_finite() {
            return Err(GraphError::NonFinite("viewport zoom"));
        }
        if viewport.zoom <= 0.0 {
            return Err(GraphError::NonPositive("viewport zoom"));
        }
        self.viewport = viewport;
        Ok(())
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    pub fn history_mut(&mut self) -> &mut Vec<String> {
        &mut self.history
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = &Node> + ExactSizeIterator {
        self.nodes.values()
    }

    pub fn links(&self) -> impl DoubleEndedIterator<Item = &Link> + ExactSizeIterator {
        self.links.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, id: ElementId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn link(&self, id: ElementId) -> Option<&Link> {
        self.links.get(&id)
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.nodes.contains_key(&id) || self.links.contains_key(&id)
    }

    /// Attributes of any element.
    pub fn attrs(&self, id: ElementId) -> Option<&IndexMap<String, AttrValue>> {
        self.nodes
            .get(&id)
            .map(|n| &n.attrs)
            .or_else(|| self.links.get(&id).map(|l| &l.attrs))
    }

    fn take_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn add_node(
        &mut self,
        type_name: &str,
        label: &str,
        position: (f64, f64),
    ) -> Result<ElementId, GraphError> {
        self.add_node_in(&Unschemed, type_name, label, position)
    }

    /// Adds a node with attributes seeded from the schema's defaults.
    pub fn add_node_in(
        &mut self,
        schema: &dyn Schema,
        type_name: &str,
        label: &str,
        position: (f64, f64),
    ) -> Result<ElementId, GraphError> {
        if type_name.is_empty() {
            return Err(GraphError::EmptyTypeName);
        }
        check_finite("position", position)?;
        let attrs = schema.node_defaults(type_name).into_iter().collect();
        let id = self.take_id();
        self.nodes.insert(
            id,
            Node {
                id,
                type_name: type_name.to_owned(),
                label: label.to_owned(),
                parent: None,
                position,
                size: DEFAULT_NODE_SIZE,
                attrs,
                payload: None,
            },
        );
        Ok(id)
    }

    pub fn add_link(
        &mut self,
        type_name: &str,
        from: ElementId,
        to: ElementId,
    ) -> Result<ElementId, GraphError> {
        self.add_link_in(&Unschemed, type_name, from, to)
    }

    pub fn add_link_in(
        &mut self,
        schema: &dyn Schema,
        type_name: &str,
        from: ElementId,
        to: ElementId,
    ) -> Result<ElementId, GraphError> {
        if type_name.is_empty() {
            return Err(GraphError::EmptyTypeName);
        }
        for end in [from, to] {
            if !self.nodes.contains_key(&end) {
                return Err(GraphError::DanglingEndpoint(end));
            }
        }
        if from == to && !schema.allows_self_link(type_name) {
            return Err(GraphError::SelfLinkNotAllowed(type_name.to_owned()));
        }
        let id = self.take_id();
        self.links.insert(
            id,
            Link {
                id,
                type_name: type_name.to_owned(),
                from,
                to,
                attrs: IndexMap::new(),
            },
        );
        Ok(id)
    }

    pub fn remove_node(&mut self, id: ElementId) -> Result<RemovalReport, GraphError> {
        self.remove_node_in(&Unschemed, id)
    }

    /// Removes a node and every incident link. Children move up to the
    /// nearest ancestor the schema treats as a container, or to the root.
    pub fn remove_node_in(
        &mut self,
        schema: &dyn Schema,
        id: ElementId,
    ) -> Result<RemovalReport, GraphError> {
        if self.links.contains_key(&id) {
            return Err(GraphError::NotANode(id));
        }
        if !self.nodes.contains_key(&id) {
            return Err(GraphError::UnknownElement(id));
        }
        let mut new_parent = self.nodes[&id].parent;
        while let Some(p) = new_parent {
            if schema.is_container(&self.nodes[&p].type_name) {
                break;
            }
            new_parent = self.nodes[&p].parent;
        }

        let removed_links: Vec<ElementId> = self
            .links
            .values()
            .filter(|l| l.from == id || l.to == id)
            .map(|l| l.id)
            .collect();
        for link in &removed_links {
            self.links.remove(link);
        }
        let mut reparented = Vec::new();
        for node in self.nodes.values_mut() {
            if node.parent == Some(id) {
                node.parent = new_parent;
                reparented.push(node.id);
            }
        }
        self.nodes.remove(&id);
        Ok(RemovalReport {
            removed_links,
            reparented,
        })
    }

    pub fn remove_link(&mut self, id: ElementId) -> Result<(), GraphError> {
        match self.links.remove(&id) {
            Some(_) => Ok(()),
            None if self.nodes.contains_key(&id) => Err(GraphError::NotALink(id)),
            None => Err(GraphError::UnknownElement(id)),
        }
    }

    /// Removes a node (with cascade) or a link.
    pub fn remove_in(
        &mut self,
        schema: &dyn Schema,
        id: ElementId,
    ) -> Result<RemovalReport, GraphError> {
        if self.links.contains_key(&id) {
            self.remove_link(id)?;
            Ok(RemovalReport::default())
        } else {
            self.remove_node_in(schema, id)
        }
    }

    pub fn set_attr(&mut self, id: ElementId, key: &str, value: AttrValue) -> Result<(), GraphError> {
        if key.is_empty() {
            return Err(GraphError::EmptyAttrKey);
        }
        value.check().map_err(|source| GraphError::BadValue {
            key: key.to_owned(),
            source,
        })?;
        let attrs = if let Some(node) = self.nodes.get_mut(&id) {
            &mut node.attrs
        } else if let Some(link) = self.links.get_mut(&id) {
            &mut link.attrs
        } else {
            return Err(GraphError::UnknownElement(id));
        };
        attrs.insert(key.to_owned(), value);
        Ok(())
    }

    pub fn remove_attr(&mut self, id: ElementId, key: &str) -> Result<Option<AttrValue>, GraphError> {
        let attrs = if let Some(node) = self.nodes.get_mut(&id) {
            &mut node.attrs
        } else if let Some(link) = self.links.get_mut(&id) {
            &mut link.attrs
        } else {
            return Err(GraphError::UnknownElement(id));
        };
        Ok(attrs.shift_remove(key))
    }

    fn node_mut(&mut self, id: ElementId) -> Result<&mut Node, GraphError> {
        if self.links.contains_key(&id) {
            return Err(GraphError::NotANode(id));
        }
        self.nodes.get_mut(&id).ok_or(GraphError::UnknownElement(id))
    }

    pub fn set_label(&mut self, id: ElementId, label: &str) -> Result<(), GraphError> {
        self.node_mut(id)?.label = label.to_owned();
        Ok(())
    }

    pub fn set_position(&mut self, id: ElementId, position: (f64, f64)) -> Result<(), GraphError> {
        check_finite("position", position)?;
        self.node_mut(id)?.position = position;
        Ok(())
    }

    pub fn set_size(&mut self, id: ElementId, size: (f64, f64)) -> Result<(), GraphError> {
        check_finite("size", size)?;
        if size.0 <= 0.0 || size.1 <= 0.0 {
            return Err(GraphError::NonPositive("size"));
        }
        self.node_mut(id)?.size = size;
        Ok(())
    }

    pub fn set_payload(&mut self, id: ElementId, payload: Option<PayloadRef>) -> Result<(), GraphError> {
        if let Some(p) = &payload {
            p.check()?;
        }
        self.node_mut(id)?.payload = payload;
        Ok(())
    }

    pub fn set_parent(&mut self, child: ElementId, parent: Option<ElementId>) -> Result<(), GraphError> {
        self.set_parent_in(&Unschemed, child, parent)
    }

    /// Moves `child` under `parent` (or to the root). Rejects cycles and,
    /// per the schema, non-container parents.
    pub fn set_parent_in(
        &mut self,
        schema: &dyn Schema,
        child: ElementId,
        parent: Option<ElementId>,
    ) -> Result<(), GraphError> {
        self.node_mut(child)?;
        if let Some(p) = parent {
            let parent_node = match self.nodes.get(&p) {
                Some(n) => n,
                None if self.links.contains_key(&p) => return Err(GraphError::NotANode(p)),
                None => return Err(GraphError::UnknownElement(p)),
            };
            if !schema.is_container(&parent_node.type_name) {
                return Err(GraphError::NotAContainer(p));
            }
            let mut cursor = Some(p);
            while let Some(c) = cursor {
                if c == child {
                    return Err(GraphError::ContainmentCycle { child, parent: p });
                }
                cursor = self.nodes[&c].parent;
            }
        }
        self.node_mut(child)?.parent = parent;
        Ok(())
    }

    /// Links incident to `id`, ascending by link id. A self-link is reported
    /// once even for [`Direction::Both`]; its far end is the node itself.
    pub fn neighbors(
        &self,
        id: ElementId,
        direction: Direction,
        link_type: Option<&str>,
    ) -> Result<Vec<(ElementId, ElementId)>, GraphError> {
        if !self.nodes.contains_key(&id) {
            return Err(if self.links.contains_key(&id) {
                GraphError::NotANode(id)
            } else {
                GraphError::UnknownElement(id)
            });
        }
        let out = matches!(direction, Direction::Out | Direction::Both);
        let inc = matches!(direction, Direction::In | Direction::Both);
        Ok(self
            .links
            .values()
            .filter(|l| link_type.is_none_or(|t| l.type_name == t))
            .filter_map(|l| {
                if out && l.from == id {
                    Some((l.id, l.to))
                } else if inc && l.to == id {
                    Some((l.id, l.from))
                } else {
                    None
                }
            })
            .collect())
    }

    /// Inserts a fully formed node during decoding; integrity is checked
    /// afterwards by the codec.
    pub(crate) fn insert_raw_node(&mut self, node: Node) -> bool {
        self.nodes.insert(node.id, node).is_none()
    }

    pub(crate) fn insert_raw_link(&mut self, link: Link) -> bool {
        self.links.insert(link.id, link).is_none()
    }

    pub(crate) fn set_next_id(&mut self, next_id: u64) {
        self.next_id = next_id;
    }
}

fn check_finite(what: &'static str, pair: (f64, f64)) -> Result<(), GraphError> {
    if pair.0.is_finite() && pair.1.is_finite() {
        Ok(())
    } else {
        Err(GraphError::NonFinite(what))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(n: u64) -> ElementId {
        ElementId::new(n).unwrap()
    }

    struct NoSelf;
    impl Schema for NoSelf {
        fn allows_self_link(&self, _: &str) -> bool {
            false
        }
    }

    #[test]
    fn fresh_workspace() {
        let ws = Workspace::new("root", "Root", "basic").unwrap();
        assert_eq!(ws.node_count(), 0);
        assert_eq!(ws.link_count(), 0);
        assert_eq!(ws.next_id(), 1);
        assert_eq!(ws.version(), 0);
        assert_eq!(ws.viewport(), Viewport::default());
        assert!(ws.history().is_empty());

        let dialog = Workspace::new("dialog", "Avatar Dialog", "dialog-dsl").unwrap();
        assert_eq!(dialog.metamodel(), "dialog-dsl");
    }

    #[test]
    fn workspace_id_must_be_url_safe() {
        let err = Workspace::new("a b", "x", "basic").unwrap_err();
        assert_eq!(
            err,
            GraphError::InvalidWorkspaceId {
                id: "a b".into(),
                ch: ' '
            }
        );
        assert!(err.to_string().contains("' '"));
        assert_eq!(Workspace::new("", "x", "m").unwrap_err(), GraphError::EmptyWorkspaceId);
        assert!(Workspace::new("a/b", "x", "m").is_err());
        assert!(Workspace::new("..", "x", "m").is_err());
        assert!(Workspace::new("v1.2_x~y-z", "x", "m").is_ok());
    }

    #[test]
    fn ids_come_from_one_counter() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        assert_eq!(ws.add_node("Rule", "r", (0.0, 0.0)).unwrap(), id(1));
        for _ in 0..3 {
            ws.add_node("Miron", "m", (0.0, 0.0)).unwrap();
        }
        assert_eq!(ws.add_link("condition", id(2), id(1)).unwrap(), id(5));
        assert_eq!(ws.add_node("Miron", "m", (0.0, 0.0)).unwrap(), id(6));

        while ws.next_id() < 107 {
            ws.add_node("Comment", "", (0.0, 0.0)).unwrap();
        }
        assert_eq!(ws.add_node("Rule", "r107", (0.0, 0.0)).unwrap(), id(107));
    }

    #[test]
    fn ids_are_never_reused() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let a = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        ws.remove_node(a).unwrap();
        let b = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        assert_eq!(b, id(2));
    }

    #[test]
    fn non_finite_position_rejected() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        assert_eq!(
            ws.add_node("T", "", (f64::NAN, 0.0)),
            Err(GraphError::NonFinite("position"))
        );
        assert_eq!(ws.add_node("", "", (0.0, 0.0)), Err(GraphError::EmptyTypeName));
        assert_eq!(ws.next_id(), 1);
    }

    #[test]
    fn add_link_checks_endpoints_and_self_links() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let rule = ws.add_node("Rule", "", (0.0, 0.0)).unwrap();
        let miron = ws.add_node("Miron", "", (0.0, 0.0)).unwrap();
        let l = ws.add_link("condition", miron, rule).unwrap();
        assert_eq!(l, id(3));
        assert_eq!(
            ws.add_link("condition", rule, id(999)),
            Err(GraphError::DanglingEndpoint(id(999)))
        );
        assert_eq!(
            ws.add_link_in(&NoSelf, "condition", rule, rule),
            Err(GraphError::SelfLinkNotAllowed("condition".into()))
        );
        assert!(ws.add_link("loop", rule, rule).is_ok());
    }

    #[test]
    fn remove_node_cascades() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let hub = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let a = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let b = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let l1 = ws.add_link("x", hub, a).unwrap();
        let keep = ws.add_link("x", a, b).unwrap();
        let l2 = ws.add_link("x", b, hub).unwrap();
        let l3 = ws.add_link("x", hub, hub).unwrap();
        let report = ws.remove_node(hub).unwrap();
        assert_eq!(report.removed_links, vec![l1, l2, l3]);
        assert!(report.reparented.is_empty());
        assert_eq!(ws.links().map(|l| l.id).collect::<Vec<_>>(), vec![keep]);

        let iso = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        assert_eq!(ws.remove_node(iso).unwrap(), RemovalReport::default());
        assert_eq!(ws.remove_node(iso), Err(GraphError::UnknownElement(iso)));
        assert_eq!(ws.remove_node(keep), Err(GraphError::NotANode(keep)));
    }

    #[test]
    fn remove_container_reparents_children() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let folder = ws.add_node("Folder", "", (0.0, 0.0)).unwrap();
        let c1 = ws.add_node("File", "", (0.0, 0.0)).unwrap();
        let c2 = ws.add_node("File", "", (0.0, 0.0)).unwrap();
        ws.set_parent(c1, Some(folder)).unwrap();
        ws.set_parent(c2, Some(folder)).unwrap();
        let report = ws.remove_node(folder).unwrap();
        assert_eq!(report.reparented, vec![c1, c2]);
        assert_eq!(ws.node(c1).unwrap().parent, None);
        assert_eq!(ws.node(c2).unwrap().parent, None);

        let outer = ws.add_node("Folder", "", (0.0, 0.0)).unwrap();
        let inner = ws.add_node("Folder", "", (0.0, 0.0)).unwrap();
        ws.set_parent(inner, Some(outer)).unwrap();
        ws.set_parent(c1, Some(inner)).unwrap();
        ws.remove_node(inner).unwrap();
        assert_eq!(ws.node(c1).unwrap().parent, Some(outer));
    }

    #[test]
    fn remove_link_twice() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let a = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let b = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let l = ws.add_link("x", a, b).unwrap();
        let other = ws.add_link("x", b, a).unwrap();
        ws.remove_link(l).unwrap();
        assert_eq!(ws.link_count(), 1);
        assert_eq!(ws.remove_link(l), Err(GraphError::UnknownElement(l)));
        assert_eq!(ws.neighbors(a, Direction::Out, None).unwrap(), vec![]);
        assert_eq!(ws.neighbors(a, Direction::In, None).unwrap(), vec![(other, b)]);
        assert_eq!(ws.remove_link(a), Err(GraphError::NotALink(a)));
    }

    #[test]
    fn set_attr_inserts_and_overwrites() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let m = ws.add_node("Miron", "", (0.0, 0.0)).unwrap();
        ws.set_attr(m, "modality", AttrValue::str("speech")).unwrap();
        ws.set_attr(m, "name", AttrValue::str("greet")).unwrap();
        assert_eq!(ws.attrs(m).unwrap()["modality"], AttrValue::str("speech"));
        ws.set_attr(m, "modality", AttrValue::str("text")).unwrap();
        let attrs = ws.attrs(m).unwrap();
        assert_eq!(attrs.len(), 2);
        assert_eq!(attrs.keys().collect::<Vec<_>>(), ["modality", "name"]);

        let mixed = AttrValue::List(vec![AttrValue::Int(1), AttrValue::str("a")]);
        assert!(matches!(
            ws.set_attr(m, "slots", mixed),
            Err(GraphError::BadValue { .. })
        ));
        assert_eq!(
            ws.set_attr(id(99), "k", AttrValue::Int(1)),
            Err(GraphError::UnknownElement(id(99)))
        );
    }

    #[test]
    fn neighbors_filters_and_orders() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let iso = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        assert!(ws.neighbors(iso, Direction::Both, None).unwrap().is_empty());

        let a = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let b = ws.add_node("T", "", (0.0, 0.0)).unwrap();
        let l4 = ws.add_link("condition", a, b).unwrap();
        assert_eq!(l4, id(4));
        for _ in 0..4 {
            ws.add_node("T", "", (0.0, 0.0)).unwrap();
        }
        let l9 = ws.add_link("condition", a, iso).unwrap();
        assert_eq!(l9, id(9));
        ws.add_link("action", a, b).unwrap();
        assert_eq!(
            ws.neighbors(a, Direction::Out, Some("condition")).unwrap(),
            vec![(l4, b), (l9, iso)]
        );

        let selfl = ws.add_link("loop", b, b).unwrap();
        let both = ws.neighbors(b, Direction::Both, Some("loop")).unwrap();
        assert_eq!(both, vec![(selfl, b)]);
        assert_eq!(ws.neighbors(id(500), Direction::Out, None), Err(GraphError::UnknownElement(id(500))));
    }

    #[test]
    fn parent_cycles_rejected() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let a = ws.add_node("Folder", "", (0.0, 0.0)).unwrap();
        let b = ws.add_node("Folder", "", (0.0, 0.0)).unwrap();
        ws.set_parent(a, Some(b)).unwrap();
        assert_eq!(
            ws.set_parent(b, Some(a)),
            Err(GraphError::ContainmentCycle { child: b, parent: a })
        );
        assert!(matches!(ws.set_parent(a, Some(a)), Err(GraphError::ContainmentCycle { .. })));
        ws.set_parent(a, None).unwrap();
        ws.set_parent(b, Some(a)).unwrap();
    }

    #[test]
    fn payload_paths_stay_relative() {
        let ok = PayloadRef {
            kind: PayloadKind::FilePath,
            value: "docs/readme.md".into(),
        };
        assert!(ok.check().is_ok());
        for bad in ["/etc/passwd", "../x", "a/../../b", "C:\\x", ""] {
            let p = PayloadRef {
                kind: PayloadKind::FilePath,
                value: bad.into(),
            };
            assert!(p.check().is_err(), "{bad}");
        }
        let inline = PayloadRef {
            kind: PayloadKind::InlineText,
            value: "../whatever".into(),
        };
        assert!(inline.check().is_ok());
    }
}
