//! Comment-driven templates.
//!
//! A template is an ordinary source file ("running example") whose comment
//! lines carry generation commands, so the template itself stays valid
//! code. With marker `//`:
//!
//! ```text
//! //[# foreach m in $root[type=Miron] #]
//! //: NAME=m.attr(name)
//!   "__NAME__",
//! //[# end #]
//! ```
//!
//! Commands are `foreach <var> in <query>`, `if <cond>`, `else` and `end`.
//! Binding lines (`<marker>: NAME=expr`) belong to the innermost open
//! block and replace `__NAME__` in the literal text of that block.
//!
//! Conditions: `not <cond>`, `any <query>`, `none <query>`,
//! `<var>.has(<key>)`, `<expr> == <value>` and `<expr> != <value>`.
//! Expressions: `<var>.attr(<key>)`, `.id`, `.label`, `.type`, and for
//! links `.from` / `.to`.

use std::fmt;

use crate::graph::{AttrValue, ElementId, Workspace};
use crate::metamodel::MetaModel;
use crate::query::cursor::Cursor;
use crate::query::{format_literal, ElementKind, Evaluator, Query, QueryError, Selection};

/// Variable pre-bound to a generation entry's root selection.
pub const ROOT_VAR: &str = "root";
const RESERVED_VARS: [&str; 4] = [ROOT_VAR, "not", "any", "none"];

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDocument {
    pub source_path: String,
    pub comment_marker: String,
    pub body: Block,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Block {
    pub bindings: Vec<Binding>,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Verbatim text with its 1-based starting line.
    Literal { line: usize, text: String },
    ForEach {
        line: usize,
        var: String,
        query: Query,
        body: Block,
    },
    If {
        line: usize,
        cond: Cond,
        then: Block,
        otherwise: Option<Block>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    /// Placeholder name without the surrounding `__`.
    pub name: String,
    pub expr: ValueExpr,
}

impl Binding {
    pub fn placeholder(&self) -> String {
        format!("__{}__", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Accessor {
    Attr(String),
    Id,
    Label,
    Type,
    From,
    To,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueExpr {
    pub var: String,
    pub accessor: Accessor,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Not(Box<Cond>),
    Any(Query),
    None(Query),
    Has { var: String, key: String },
    Eq { expr: ValueExpr, value: AttrValue, negated: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("template line {line}: {message}")]
pub struct TemplateParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("query on template line {line}: {source}")]
    Query { line: usize, source: QueryError },
    #[error("element {element} has no attribute `{attr}`")]
    MissingAttr { element: ElementId, attr: String },
    #[error("unbound placeholder __{name}__ on template line {line}")]
    UnboundPlaceholder { name: String, line: usize },
    #[error("`{var}` is bound to {count} elements; expressions need exactly one")]
    NotSingle { var: String, count: usize },
    #[error("`{var}.{accessor}` is not available on element {element}")]
    BadAccessor {
        var: String,
        accessor: String,
        element: ElementId,
    },
}

impl RenderError {
    pub fn element(&self) -> Option<ElementId> {
        match self {
            RenderError::MissingAttr { element, .. } | RenderError::BadAccessor { element, .. } => Some(*element),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

enum Line<'a> {
    Command(&'a str),
    Binding(&'a str),
    Text,
}

fn classify<'a>(line: &'a str, marker: &str) -> Line<'a> {
    let t = line.trim();
    if let Some(rest) = t.strip_prefix(marker) {
        if let Some(cmd) = rest.strip_prefix("[#").and_then(|r| r.strip_suffix("#]")) {
            return Line::Command(cmd.trim());
        }
        if let Some(binding) = rest.strip_prefix(':') {
            return Line::Binding(binding.trim());
        }
    }
    Line::Text
}

enum Open {
    Root,
    ForEach { line: usize, var: String, query: Query },
    If { line: usize, cond: Cond, then: Option<Block> },
}

struct Frame {
    open: Open,
    block: Block,
}

fn err(line: usize, message: impl Into<String>) -> TemplateParseError {
    TemplateParseError {
        line,
        message: message.into(),
    }
}

fn push_text(block: &mut Block, line: usize, text: &str) {
    if let Some(Segment::Literal { text: last, .. }) = block.segments.last_mut() {
        last.push_str(text);
    } else {
        block.segments.push(Segment::Literal {
            line,
            text: text.to_owned(),
        });
    }
}

pub fn parse_template(text: &str, comment_marker: &str) -> Result<TemplateDocument, TemplateParseError> {
    parse_template_at(text, comment_marker, "")
}

pub fn parse_template_at(
    text: &str,
    comment_marker: &str,
    source_path: &str,
) -> Result<TemplateDocument, TemplateParseError> {
    if comment_marker.is_empty() {
        return Err(err(0, "comment marker must not be empty"));
    }
    let mut stack = vec![Frame {
        open: Open::Root,
        block: Block::default(),
    }];
    let mut warnings = Vec::new();

    for (idx, raw) in text.split_inclusive('\n').enumerate() {
        let line_no = idx + 1;
        let content = raw.strip_suffix('\n').unwrap_or(raw);
        let content = content.strip_suffix('\r').unwrap_or(content);
        match classify(content, comment_marker) {
            Line::Text => push_text(&mut stack.last_mut().unwrap().block, line_no, raw),
            Line::Binding(body) => {
                if stack.len() == 1 {
                    return Err(err(line_no, "binding line outside of a block"));
                }
                let scope = vars_in_scope(&stack);
                let binding = parse_binding(body, &scope).map_err(|m| err(line_no, m))?;
                let block = &mut stack.last_mut().unwrap().block;
                if block.bindings.iter().any(|b| b.name == binding.name) {
                    return Err(err(line_no, format!("placeholder __{}__ bound twice in one block", binding.name)));
                }
                block.bindings.push(binding);
            }
            Line::Command(cmd) => {
                let (word, rest) = cmd.split_once(char::is_whitespace).unwrap_or((cmd, ""));
                let rest = rest.trim();
                match word {
                    "foreach" => {
                        let scope = vars_in_scope(&stack);
                        let (var, query) = parse_foreach(rest, &scope).map_err(|m| err(line_no, m))?;
                        stack.push(Frame {
                            open: Open::ForEach { line: line_no, var, query },
                            block: Block::default(),
                        });
                    }
                    "if" => {
                        let scope = vars_in_scope(&stack);
                        let cond = parse_cond(rest, &scope).map_err(|m| err(line_no, m))?;
                        stack.push(Frame {
                            open: Open::If { line: line_no, cond, then: None },
                            block: Block::default(),
                        });
                    }
                    "else" => {
                        if !rest.is_empty() {
                            return Err(err(line_no, "`else` takes no arguments"));
                        }
                        let frame = stack.last_mut().unwrap();
                        match &mut frame.open {
                            Open::If { then: then @ None, .. } => {
                                *then = Some(std::mem::take(&mut frame.block));
                            }
                            Open::If { .. } => return Err(err(line_no, "second `else` for one `if`")),
                            _ => return Err(err(line_no, "`else` without an open `if`")),
                        }
                    }
                    "end" => {
                        if !rest.is_empty() {
                            return Err(err(line_no, "`end` takes no arguments"));
                        }
                        if stack.len() == 1 {
                            return Err(err(line_no, "unbalanced `end`: no open block"));
                        }
                        let frame = stack.pop().unwrap();
                        let segment = close(frame);
                        stack.last_mut().unwrap().block.segments.push(segment);
                    }
                    other => return Err(err(line_no, format!("unknown command `{other}`"))),
                }
            }
        }
    }

    if stack.len() > 1 {
        let line = match &stack.last().unwrap().open {
            Open::ForEach { line, .. } | Open::If { line, .. } => *line,
            Open::Root => 0,
        };
        return Err(err(line, "block opened here is never closed with `end`"));
    }
    let body = stack.pop().unwrap().block;
    check_placeholders(&body, &mut warnings);
    Ok(TemplateDocument {
        source_path: source_path.to_owned(),
        comment_marker: comment_marker.to_owned(),
        body,
        warnings,
    })
}

fn close(frame: Frame) -> Segment {
    match frame.open {
        Open::ForEach { line, var, query } => Segment::ForEach {
            line,
            var,
            query,
            body: frame.block,
        },
        Open::If { line, cond, then } => match then {
            Some(then) => Segment::If {
                line,
                cond,
                then,
                otherwise: Some(frame.block),
            },
            None => Segment::If {
                line,
                cond,
                then: frame.block,
                otherwise: None,
            },
        },
        Open::Root => unreachable!("root frame is never closed"),
    }
}

fn vars_in_scope(stack: &[Frame]) -> Vec<String> {
    stack
        .iter()
        .filter_map(|f| match &f.open {
            Open::ForEach { var, .. } => Some(var.clone()),
            _ => None,
        })
        .collect()
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty()
        && name.starts_with(|c: char| c.is_ascii_uppercase())
        && name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
        && !name.contains("__")
        && !name.ends_with('_')
}

fn parse_binding(body: &str, scope: &[String]) -> Result<Binding, String> {
    let (name, expr) = body
        .split_once('=')
        .ok_or_else(|| format!("malformed binding `{body}`: expected NAME=expr"))?;
    let name = name.trim();
    let name = name
        .strip_prefix("__")
        .and_then(|n| n.strip_suffix("__"))
        .unwrap_or(name);
    if !is_placeholder_name(name) {
        return Err(format!("invalid placeholder name `{name}`: use upper-case letters, digits and single underscores"));
    }
    let mut c = Cursor::new(expr.trim());
    let expr = parse_expr(&mut c, scope)?;
    c.skip_ws();
    if !c.at_end() {
        return Err(format!("unexpected `{}` after expression", c.rest()));
    }
    Ok(Binding {
        name: name.to_owned(),
        expr,
    })
}

fn check_query_vars(q: &Query, scope: &[String]) -> Result<(), String> {
    match q.variable() {
        Some(v) if v != ROOT_VAR && !scope.iter().any(|s| s == v) => Err(format!("unknown variable `${v}`")),
        _ => Ok(()),
    }
}

fn parse_foreach(rest: &str, scope: &[String]) -> Result<(String, Query), String> {
    let mut c = Cursor::new(rest);
    let var = c.ident().ok_or("expected `foreach <var> in <query>`")?.to_owned();
    if RESERVED_VARS.contains(&var.as_str()) {
        return Err(format!("`{var}` is reserved"));
    }
    if scope.contains(&var) {
        return Err(format!("variable `{var}` already bound by an enclosing foreach"));
    }
    c.skip_ws();
    if c.ident() != Some("in") {
        return Err("expected `in` after the loop variable".into());
    }
    let query = Query::parse(c.rest()).map_err(|e| e.to_string())?;
    check_query_vars(&query, scope)?;
    Ok((var, query))
}

fn parse_expr(c: &mut Cursor<'_>, scope: &[String]) -> Result<ValueExpr, String> {
    c.skip_ws();
    c.eat("$");
    let var = c.ident().ok_or("expected `<var>.<accessor>`")?.to_owned();
    if !scope.contains(&var) {
        return Err(format!("unknown variable `{var}`"));
    }
    if !c.eat(".") {
        return Err(format!("expected `.` after `{var}`"));
    }
    let accessor = match c.ident() {
        Some("attr") => Accessor::Attr(call_arg(c)?),
        Some("id") => Accessor::Id,
        Some("label") => Accessor::Label,
        Some("type") => Accessor::Type,
        Some("from") => Accessor::From,
        Some("to") => Accessor::To,
        Some(other) => return Err(format!("unknown accessor `{other}`")),
        None => return Err("expected an accessor".into()),
    };
    Ok(ValueExpr { var, accessor })
}

fn call_arg(c: &mut Cursor<'_>) -> Result<String, String> {
    if !c.eat("(") {
        return Err("expected `(`".into());
    }
    c.skip_ws();
    let key = c.ident().ok_or("expected an attribute name")?.to_owned();
    c.skip_ws();
    if !c.eat(")") {
        return Err("expected `)`".into());
    }
    Ok(key)
}

fn parse_cond(text: &str, scope: &[String]) -> Result<Cond, String> {
    let text = text.trim();
    let keyword = |kw: &str| {
        text.strip_prefix(kw)
            .filter(|r| r.starts_with(char::is_whitespace))
            .map(str::trim)
    };
    if let Some(rest) = keyword("not") {
        return Ok(Cond::Not(Box::new(parse_cond(rest, scope)?)));
    }
    for (kw, any) in [("any", true), ("none", false)] {
        if let Some(rest) = keyword(kw) {
            let q = Query::parse(rest).map_err(|e| e.to_string())?;
            check_query_vars(&q, scope)?;
            return Ok(if any { Cond::Any(q) } else { Cond::None(q) });
        }
    }
    let mut c = Cursor::new(text);
    // `<var>.has(key)` shares its prefix with expressions.
    let mut probe = c.clone();
    probe.eat("$");
    if let Some(var) = probe.ident() {
        if probe.eat(".has") {
            if !scope.iter().any(|s| s == var) {
                return Err(format!("unknown variable `{var}`"));
            }
            let key = call_arg(&mut probe)?;
            probe.skip_ws();
            if !probe.at_end() {
                return Err(format!("unexpected `{}`", probe.rest()));
            }
            return Ok(Cond::Has {
                var: var.to_owned(),
                key,
            });
        }
    }
    let expr = parse_expr(&mut c, scope)?;
    c.skip_ws();
    let negated = if c.eat("==") {
        false
    } else if c.eat("!=") {
        true
    } else {
        return Err("expected `==` or `!=`".into());
    };
    c.skip_ws();
    let value = c.literal()?;
    c.skip_ws();
    if !c.at_end() {
        return Err(format!("unexpected `{}`", c.rest()));
    }
    Ok(Cond::Eq { expr, value, negated })
}

/// Records a warning for each binding whose placeholder never appears in
/// the literal text of its block.
fn check_placeholders(block: &Block, warnings: &mut Vec<String>) {
    fn mentions(block: &Block, token: &str) -> bool {
        block.segments.iter().any(|s| match s {
            Segment::Literal { text, .. } => text.contains(token),
            Segment::ForEach { body, .. } => mentions(body, token),
            Segment::If { then, otherwise, .. } => {
                mentions(then, token) || otherwise.as_ref().is_some_and(|o| mentions(o, token))
            }
        })
    }
    for b in &block.bindings {
        if !mentions(block, &b.placeholder()) {
            warnings.push(format!("placeholder {} is bound but never used", b.placeholder()));
        }
    }
    for s in &block.segments {
        match s {
            Segment::ForEach { body, .. } => check_placeholders(body, warnings),
            Segment::If { then, otherwise, .. } => {
                check_placeholders(then, warnings);
                if let Some(o) = otherwise {
                    check_placeholders(o, warnings);
                }
            }
            Segment::Literal { .. } => {}
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for Accessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Accessor::Attr(k) => write!(f, "attr({k})"),
            Accessor::Id => f.write_str("id"),
            Accessor::Label => f.write_str("label"),
            Accessor::Type => f.write_str("type"),
            Accessor::From => f.write_str("from"),
            Accessor::To => f.write_str("to"),
        }
    }
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.var, self.accessor)
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Not(inner) => write!(f, "not {inner}"),
            Cond::Any(q) => write!(f, "any {q}"),
            Cond::None(q) => write!(f, "none {q}"),
            Cond::Has { var, key } => write!(f, "{var}.has({key})"),
            Cond::Eq { expr, value, negated } => {
                write!(f, "{expr} {} {}", if *negated { "!=" } else { "==" }, format_literal(value))
            }
        }
    }
}

impl TemplateDocument {
    /// Canonical template text for this command tree.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        print_block(&self.body, &self.comment_marker, &mut out);
        out
    }
}

fn print_block(block: &Block, marker: &str, out: &mut String) {
    for b in &block.bindings {
        out.push_str(&format!("{marker}: {}={}\n", b.name, b.expr));
    }
    for s in &block.segments {
        match s {
            Segment::Literal { text, .. } => out.push_str(text),
            Segment::ForEach { var, query, body, .. } => {
                out.push_str(&format!("{marker}[# foreach {var} in {query} #]\n"));
                print_block(body, marker, out);
                out.push_str(&format!("{marker}[# end #]\n"));
            }
            Segment::If {
                cond, then, otherwise, ..
            } => {
                out.push_str(&format!("{marker}[# if {cond} #]\n"));
                print_block(then, marker, out);
                if let Some(o) = otherwise {
                    out.push_str(&format!("{marker}[# else #]\n"));
                    print_block(o, marker, out);
                }
                out.push_str(&format!("{marker}[# end #]\n"));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering

struct Scope {
    var: Option<(String, Selection)>,
    values: Vec<(String, String)>,
}

struct Renderer<'a> {
    eval: Evaluator<'a>,
    mm: &'a MetaModel,
    root: Option<Selection>,
    scopes: Vec<Scope>,
    out: String,
}

pub fn render(tpl: &TemplateDocument, ws: &Workspace, mm: &MetaModel) -> Result<String, RenderError> {
    render_with_root(tpl, ws, mm, None)
}

/// Renders with `$root` bound to `root`.
pub fn render_with_root(
    tpl: &TemplateDocument,
    ws: &Workspace,
    mm: &MetaModel,
    root: Option<Selection>,
) -> Result<String, RenderError> {
    let mut r = Renderer {
        eval: Evaluator::new(ws),
        mm,
        root,
        scopes: Vec::new(),
        out: String::new(),
    };
    r.block(&tpl.body)?;
    Ok(r.out)
}

impl<'a> Renderer<'a> {
    fn lookup(&self, name: &str) -> Option<Selection> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.var.as_ref().filter(|(v, _)| v == name).map(|(_, sel)| sel.clone()))
            .or_else(|| (name == ROOT_VAR).then(|| self.root.clone()).flatten())
    }

    fn run_query(&self, q: &Query, line: usize) -> Result<Selection, RenderError> {
        self.eval
            .eval(q, &|name| self.lookup(name))
            .map_err(|source| RenderError::Query { line, source })
    }

    fn block(&mut self, block: &Block) -> Result<(), RenderError> {
        for s in &block.segments {
            match s {
                Segment::Literal { line, text } => {
                    if self.scopes.is_empty() {
                        self.out.push_str(text);
                    } else {
                        self.substitute(text, *line)?;
                    }
                }
                Segment::ForEach { line, var, query, body } => {
                    let sel = self.run_query(query, *line)?;
                    for id in sel.ids {
                        self.scopes.push(Scope {
                            var: Some((var.clone(), Selection::single(sel.kind, id))),
                            values: Vec::new(),
                        });
                        let result = self.enter(body);
                        self.scopes.pop();
                        result?;
                    }
                }
                Segment::If {
                    line,
                    cond,
                    then,
                    otherwise,
                } => {
                    let branch = if self.cond(cond, *line)? { Some(then) } else { otherwise.as_ref() };
                    if let Some(branch) = branch {
                        self.scopes.push(Scope {
                            var: None,
                            values: Vec::new(),
                        });
                        let result = self.enter(branch);
                        self.scopes.pop();
                        result?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates the block's bindings in the freshly pushed scope, then
    /// renders its segments.
    fn enter(&mut self, block: &Block) -> Result<(), RenderError> {
        let mut values = Vec::with_capacity(block.bindings.len());
        for b in &block.bindings {
            let v = self.value(&b.expr)?.ok_or_else(|| match &b.expr.accessor {
                Accessor::Attr(attr) => RenderError::MissingAttr {
                    element: self.element(&b.expr.var).map(|(_, id)| id).unwrap_or(ElementId::new(1).unwrap()),
                    attr: attr.clone(),
                },
                _ => unreachable!("only attributes can be missing"),
            })?;
            values.push((b.name.clone(), v.to_string()));
        }
        self.scopes.last_mut().unwrap().values = values;
        self.block(block)
    }

    fn element(&self, var: &str) -> Result<(ElementKind, ElementId), RenderError> {
        let sel = self.lookup(var).unwrap_or(Selection {
            kind: ElementKind::Node,
            ids: Vec::new(),
        });
        match sel.ids.as_slice() {
            [id] => Ok((sel.kind, *id)),
            ids => Err(RenderError::NotSingle {
                var: var.to_owned(),
                count: ids.len(),
            }),
        }
    }

    /// `Ok(None)` when an attribute is absent and has no metamodel default.
    fn value(&self, expr: &ValueExpr) -> Result<Option<AttrValue>, RenderError> {
        let (kind, id) = self.element(&expr.var)?;
        let ws = self.eval.workspace();
        let bad = || RenderError::BadAccessor {
            var: expr.var.clone(),
            accessor: expr.accessor.to_string(),
            element: id,
        };
        Ok(Some(match (&expr.accessor, kind) {
            (Accessor::Id, _) => AttrValue::Int(id.get() as i64),
            (Accessor::Attr(key), ElementKind::Node) => {
                let node = ws.node(id).ok_or_else(bad)?;
                match node.attrs.get(key) {
                    Some(v) => v.clone(),
                    None => {
                        let default = self
                            .mm
                            .node_types
                            .get(&node.type_name)
                            .and_then(|d| d.attr_schema.get(key))
                            .and_then(|spec| spec.default.clone());
                        match default {
                            Some(d) => d,
                            None => return Ok(None),
                        }
                    }
                }
            }
            (Accessor::Attr(key), ElementKind::Link) => match ws.link(id).and_then(|l| l.attrs.get(key)) {
                Some(v) => v.clone(),
                None => return Ok(None),
            },
            (Accessor::Label, ElementKind::Node) => AttrValue::Str(ws.node(id).ok_or_else(bad)?.label.clone()),
            (Accessor::Type, ElementKind::Node) => AttrValue::Str(ws.node(id).ok_or_else(bad)?.type_name.clone()),
            (Accessor::Type, ElementKind::Link) => AttrValue::Str(ws.link(id).ok_or_else(bad)?.type_name.clone()),
            (Accessor::From, ElementKind::Link) => AttrValue::Int(ws.link(id).ok_or_else(bad)?.from.get() as i64),
            (Accessor::To, ElementKind::Link) => AttrValue::Int(ws.link(id).ok_or_else(bad)?.to.get() as i64),
            _ => return Err(bad()),
        }))
    }

    fn cond(&self, cond: &Cond, line: usize) -> Result<bool, RenderError> {
        Ok(match cond {
            Cond::Not(inner) => !self.cond(inner, line)?,
            Cond::Any(q) => !self.run_query(q, line)?.is_empty(),
            Cond::None(q) => self.run_query(q, line)?.is_empty(),
            Cond::Has { var, key } => self
                .value(&ValueExpr {
                    var: var.clone(),
                    accessor: Accessor::Attr(key.clone()),
                })?
                .is_some(),
            Cond::Eq { expr, value, negated } => {
                let equal = self.value(expr)?.as_ref() == Some(value);
                equal != *negated
            }
        })
    }

    fn binding(&self, name: &str) -> Option<&str> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.values.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str()))
    }

    fn substitute(&mut self, text: &str, first_line: usize) -> Result<(), RenderError> {
        let mut rest = text;
        while let Some((start, name, end)) = next_placeholder(rest) {
            let Some(value) = self.binding(name) else {
                let line = first_line + rest[..start].matches('\n').count() + text[..text.len() - rest.len()].matches('\n').count();
                return Err(RenderError::UnboundPlaceholder {
                    name: name.to_owned(),
                    line,
                });
            };
            let value = value.to_owned();
            self.out.push_str(&rest[..start]);
            self.out.push_str(&value);
            rest = &rest[end..];
        }
        self.out.push_str(rest);
        Ok(())
    }
}

/// Finds the first `__NAME__` token: byte range and the bare name.
fn next_placeholder(s: &str) -> Option<(usize, &str, usize)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while let Some(off) = s[i..].find("__") {
        let start = i + off;
        let name_start = start + 2;
        if bytes.get(name_start).is_some_and(|b| b.is_ascii_uppercase()) {
            if let Some(close) = s[name_start..].find("__") {
                let name = &s[name_start..name_start + close];
                if is_placeholder_name(name) {
                    return Some((start, name, name_start + close + 2));
                }
            }
        }
        i = start + 1;
    }
    None
}
