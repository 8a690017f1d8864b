//! Pipeline queries over a workspace.
//!
//! ```text
//! query  := source step*
//! source := ("node" | "link" | "$" NAME)
//! step   := "[" filter ("," filter)* "]"
//!         | "->" (LINKTYPE | "*")  |  "<-" (LINKTYPE | "*")
//!         | ".parent" | ".children"
//! filter := "type=" NAME | "id=" INT | "label=" VALUE | "attr." KEY "=" VALUE
//! ```
//!
//! Every stage yields a deduplicated selection in ascending id order.

pub(crate) mod cursor;

use std::cell::OnceCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::graph::{AttrValue, ElementId, Workspace};
use cursor::Cursor;

pub use cursor::format_literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Node,
    Link,
}

/// Ascending, duplicate-free ids of one element kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub kind: ElementKind,
    pub ids: Vec<ElementId>,
}

impl Selection {
    pub fn single(kind: ElementKind, id: ElementId) -> Selection {
        Selection { kind, ids: vec![id] }
    }

    fn from_set(kind: ElementKind, ids: BTreeSet<ElementId>) -> Selection {
        Selection {
            kind,
            ids: ids.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Nodes,
    Links,
    Var(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    Type(String),
    Id(u64),
    Label(String),
    Attr(String, AttrValue),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Where(Vec<Filter>),
    Out(Option<String>),
    In(Option<String>),
    Parent,
    Children,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub source: Source,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("query syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unbound variable `${0}`")]
    UnboundVariable(String),
    #[error("step `{0}` needs a node selection, found links")]
    NeedsNodes(String),
}

impl Query {
    pub fn parse(text: &str) -> Result<Query, QueryError> {
        let mut c = Cursor::new(text);
        let q = parse_query(&mut c)?;
        c.skip_ws();
        if !c.at_end() {
            return Err(err_at(&c, "unexpected trailing input"));
        }
        Ok(q)
    }

    /// Variable the query starts from, if any.
    pub fn variable(&self) -> Option<&str> {
        match &self.source {
            Source::Var(v) => Some(v),
            _ => None,
        }
    }
}

fn err_at(c: &Cursor<'_>, message: impl Into<String>) -> QueryError {
    QueryError::Parse {
        offset: c.pos(),
        message: message.into(),
    }
}

fn parse_query(c: &mut Cursor<'_>) -> Result<Query, QueryError> {
    c.skip_ws();
    let source = if c.eat("$") {
        let name = c.ident().ok_or_else(|| err_at(c, "expected a variable name after `$`"))?;
        Source::Var(name.to_owned())
    } else {
        match c.ident() {
            Some("node") => Source::Nodes,
            Some("link") => Source::Links,
            Some(other) => return Err(err_at(c, format!("unknown source `{other}`, expected node, link or $var"))),
            None => return Err(err_at(c, "expected node, link or $var")),
        }
    };
    let mut steps = Vec::new();
    loop {
        c.skip_ws();
        if c.eat("[") {
            steps.push(Step::Where(parse_filters(c)?));
        } else if c.eat("->") {
            steps.push(Step::Out(link_type(c)?));
        } else if c.eat("<-") {
            steps.push(Step::In(link_type(c)?));
        } else if c.eat(".parent") {
            steps.push(Step::Parent);
        } else if c.eat(".children") {
            steps.push(Step::Children);
        } else {
            break;
        }
    }
    Ok(Query { source, steps })
}

fn link_type(c: &mut Cursor<'_>) -> Result<Option<String>, QueryError> {
    c.skip_ws();
    if c.eat("*") {
        return Ok(None);
    }
    c.ident()
        .map(|t| Some(t.to_owned()))
        .ok_or_else(|| err_at(c, "expected a link type or `*`"))
}

fn parse_filters(c: &mut Cursor<'_>) -> Result<Vec<Filter>, QueryError> {
    let mut filters = Vec::new();
    c.skip_ws();
    if c.eat("]") {
        return Ok(filters);
    }
    loop {
        c.skip_ws();
        let filter = if c.eat("attr.") {
            let key = c.ident().ok_or_else(|| err_at(c, "expected an attribute name"))?;
            expect_eq(c)?;
            let value = c.literal().map_err(|m| err_at(c, m))?;
            Filter::Attr(key.to_owned(), value)
        } else {
            match c.ident() {
                Some("type") => {
                    expect_eq(c)?;
                    let t = c.ident().ok_or_else(|| err_at(c, "expected a type name"))?;
                    Filter::Type(t.to_owned())
                }
                Some("id") => {
                    expect_eq(c)?;
                    Filter::Id(c.uint().ok_or_else(|| err_at(c, "expected an integer id"))?)
                }
                Some("label") => {
                    expect_eq(c)?;
                    let v = c.literal().map_err(|m| err_at(c, m))?;
                    Filter::Label(v.to_string())
                }
                Some(other) => return Err(err_at(c, format!("unknown filter `{other}`"))),
                None => return Err(err_at(c, "expected a filter")),
            }
        };
        filters.push(filter);
        c.skip_ws();
        if c.eat("]") {
            return Ok(filters);
        }
        if !c.eat(",") {
            return Err(err_at(c, "expected `,` or `]`"));
        }
    }
}

fn expect_eq(c: &mut Cursor<'_>) -> Result<(), QueryError> {
    c.skip_ws();
    if !c.eat("=") {
        return Err(err_at(c, "expected `=`"));
    }
    c.skip_ws();
    Ok(())
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::Type(t) => write!(f, "type={t}"),
            Filter::Id(id) => write!(f, "id={id}"),
            Filter::Label(l) => write!(f, "label={}", format_literal(&AttrValue::Str(l.clone()))),
            Filter::Attr(k, v) => write!(f, "attr.{k}={}", format_literal(v)),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Where(filters) => {
                f.write_str("[")?;
                for (i, filter) in filters.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{filter}")?;
                }
                f.write_str("]")
            }
            Step::Out(t) => write!(f, " -> {}", t.as_deref().unwrap_or("*")),
            Step::In(t) => write!(f, " <- {}", t.as_deref().unwrap_or("*")),
            Step::Parent => f.write_str(".parent"),
            Step::Children => f.write_str(".children"),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Nodes => f.write_str("node")?,
            Source::Links => f.write_str("link")?,
            Source::Var(v) => write!(f, "${v}")?,
        }
        self.steps.iter().try_for_each(|s| write!(f, "{s}"))
    }
}

struct Adjacency {
    out: HashMap<ElementId, Vec<(ElementId, ElementId)>>,
    inc: HashMap<ElementId, Vec<(ElementId, ElementId)>>,
    children: HashMap<ElementId, Vec<ElementId>>,
}

/// Evaluates queries against one workspace snapshot, building the
/// adjacency index on first use.
pub struct Evaluator<'w> {
    ws: &'w Workspace,
    adjacency: OnceCell<Adjacency>,
}

impl<'w> Evaluator<'w> {
    pub fn new(ws: &'w Workspace) -> Evaluator<'w> {
        Evaluator {
            ws,
            adjacency: OnceCell::new(),
        }
    }

    pub fn workspace(&self) -> &'w Workspace {
        self.ws
    }

    fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| {
            let mut adj = Adjacency {
                out: HashMap::new(),
                inc: HashMap::new(),
                children: HashMap::new(),
            };
            for link in self.ws.links() {
                adj.out.entry(link.from).or_default().push((link.id, link.to));
                adj.inc.entry(link.to).or_default().push((link.id, link.from));
            }
            for node in self.ws.nodes() {
                if let Some(p) = node.parent {
                    adj.children.entry(p).or_default().push(node.id);
                }
            }
            adj
        })
    }

    pub fn eval(
        &self,
        q: &Query,
        vars: &dyn Fn(&str) -> Option<Selection>,
    ) -> Result<Selection, QueryError> {
        let mut sel = match &q.source {
            Source::Nodes => Selection {
                kind: ElementKind::Node,
                ids: self.ws.nodes().map(|n| n.id).collect(),
            },
            Source::Links => Selection {
                kind: ElementKind::Link,
                ids: self.ws.links().map(|l| l.id).collect(),
            },
            Source::Var(name) => vars(name).ok_or_else(|| QueryError::UnboundVariable(name.clone()))?,
        };
        for step in &q.steps {
            sel = self.apply(step, sel)?;
        }
        Ok(sel)
    }

    fn apply(&self, step: &Step, sel: Selection) -> Result<Selection, QueryError> {
        if let Step::Where(filters) = step {
            let ids = sel
                .ids
                .into_iter()
                .filter(|&id| filters.iter().all(|f| self.matches(sel.kind, id, f)))
                .collect();
            return Ok(Selection { kind: sel.kind, ids });
        }
        if sel.kind != ElementKind::Node {
            return Err(QueryError::NeedsNodes(step.to_string().trim().to_owned()));
        }
        let mut next = BTreeSet::new();
        match step {
            Step::Out(t) | Step::In(t) => {
                let adj = self.adjacency();
                let table = if matches!(step, Step::Out(_)) { &adj.out } else { &adj.inc };
                for id in &sel.ids {
                    for (link, other) in table.get(id).into_iter().flatten() {
                        let type_ok = t
                            .as_deref()
                            .is_none_or(|t| self.ws.link(*link).is_some_and(|l| l.type_name == t));
                        if type_ok {
                            next.insert(*other);
                        }
                    }
                }
            }
            Step::Parent => {
                next.extend(sel.ids.iter().filter_map(|id| self.ws.node(*id).and_then(|n| n.parent)));
            }
            Step::Children => {
                let adj = self.adjacency();
                for id in &sel.ids {
                    next.extend(adj.children.get(id).into_iter().flatten());
                }
            }
            Step::Where(_) => unreachable!(),
        }
        Ok(Selection::from_set(ElementKind::Node, next))
    }

    fn matches(&self, kind: ElementKind, id: ElementId, filter: &Filter) -> bool {
        let (type_name, label, attrs) = match kind {
            ElementKind::Node => match self.ws.node(id) {
                Some(n) => (&n.type_name, Some(&n.label), &n.attrs),
                None => return false,
            },
            ElementKind::Link => match self.ws.link(id) {
                Some(l) => (&l.type_name, None, &l.attrs),
                None => return false,
            },
        };
        match filter {
            Filter::Type(t) => type_name == t,
            Filter::Id(n) => id.get() == *n,
            Filter::Label(l) => label == Some(l),
            Filter::Attr(k, v) => attrs.get(k) == Some(v),
        }
    }
}

/// Runs a variable-free query.
pub fn query(ws: &Workspace, q: &Query) -> Result<Selection, QueryError> {
    Evaluator::new(ws).eval(q, &|_| None)
}

pub fn query_str(ws: &Workspace, text: &str) -> Result<Selection, QueryError> {
    query(ws, &Query::parse(text)?)
}
