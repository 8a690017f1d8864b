//! Mutation scripts: one statement per line, `#` starts a comment line.
//!
//! ```text
//! add node <Type> [label=<value>] [<key>=<value> ...]
//! add link <type> <ref> <ref>
//! set <ref> <key> <value>
//! del <ref>
//! parent <ref> (<ref> | none)
//! ```
//!
//! A `<ref>` is an element id, or `$N` for the N-th element created by the
//! running script. Scripts are transactional: if any statement fails the
//! workspace is left exactly as it was.

use serde::Serialize;

use crate::graph::{AttrValue, ElementId, GraphError, RemovalReport, Schema, Unschemed, Workspace};
use crate::query::cursor::Cursor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementRef {
    Id(ElementId),
    Created(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    AddNode {
        type_name: String,
        label: String,
        attrs: Vec<(String, AttrValue)>,
    },
    AddLink {
        type_name: String,
        from: ElementRef,
        to: ElementRef,
    },
    Set {
        target: ElementRef,
        key: String,
        value: AttrValue,
    },
    Del(ElementRef),
    Parent {
        child: ElementRef,
        parent: Option<ElementRef>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationScript {
    /// Statements with their 1-based source line.
    pub statements: Vec<(usize, Statement)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("script line {line}: {message}")]
pub struct ScriptParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Created { id: ElementId },
    Updated { id: ElementId },
    Removed {
        id: ElementId,
        removed_links: Vec<ElementId>,
        reparented: Vec<ElementId>,
    },
    Failed { message: String },
    RolledBack,
    NotRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatementOutcome {
    pub line: usize,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MutationReport {
    pub created: Vec<ElementId>,
    pub outcomes: Vec<StatementOutcome>,
    /// Line and message of the failing statement, if any.
    pub error: Option<(usize, String)>,
}

impl MutationReport {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("`${0}` refers to an element this script has not created")]
    BadCreatedRef(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl MutationScript {
    pub fn parse(text: &str) -> Result<MutationScript, ScriptParseError> {
        let mut statements = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let stmt = parse_statement(line).map_err(|message| ScriptParseError {
                line: i + 1,
                message,
            })?;
            statements.push((i + 1, stmt));
        }
        Ok(MutationScript { statements })
    }
}

fn word<'a>(c: &mut Cursor<'a>, what: &str) -> Result<&'a str, String> {
    c.skip_ws();
    c.ident().ok_or_else(|| format!("expected {what}"))
}

fn element_ref(c: &mut Cursor<'_>) -> Result<ElementRef, String> {
    c.skip_ws();
    if c.eat("$") {
        return match c.uint() {
            Some(n) if n >= 1 => Ok(ElementRef::Created(n as usize)),
            _ => Err("expected `$N` with N >= 1".into()),
        };
    }
    c.uint()
        .and_then(ElementId::new)
        .map(ElementRef::Id)
        .ok_or_else(|| "expected an element id or `$N`".into())
}

fn value(c: &mut Cursor<'_>) -> Result<AttrValue, String> {
    c.skip_ws();
    c.literal()
}

fn parse_statement(line: &str) -> Result<Statement, String> {
    let mut c = Cursor::new(line);
    let stmt = match word(&mut c, "a statement keyword")? {
        "add" => match word(&mut c, "`node` or `link`")? {
            "node" => {
                let type_name = word(&mut c, "a node type")?.to_owned();
                let mut label = String::new();
                let mut attrs = Vec::new();
                loop {
                    c.skip_ws();
                    if c.at_end() {
                        break;
                    }
                    let key = c.ident().ok_or("expected `key=value`")?.to_owned();
                    if !c.eat("=") {
                        return Err(format!("expected `=` after `{key}`"));
                    }
                    let v = c.literal()?;
                    if key == "label" {
                        label = v.to_string();
                    } else {
                        attrs.push((key, v));
                    }
                }
                Statement::AddNode {
                    type_name,
                    label,
                    attrs,
                }
            }
            "link" => Statement::AddLink {
                type_name: word(&mut c, "a link type")?.to_owned(),
                from: element_ref(&mut c)?,
                to: element_ref(&mut c)?,
            },
            other => return Err(format!("expected `node` or `link`, found `{other}`")),
        },
        "set" => Statement::Set {
            target: element_ref(&mut c)?,
            key: word(&mut c, "an attribute key")?.to_owned(),
            value: value(&mut c)?,
        },
        "del" => Statement::Del(element_ref(&mut c)?),
        "parent" => {
            let child = element_ref(&mut c)?;
            c.skip_ws();
            let parent = if c.eat("none") { None } else { Some(element_ref(&mut c)?) };
            Statement::Parent { child, parent }
        }
        other => return Err(format!("unknown statement `{other}`")),
    };
    c.skip_ws();
    if !c.at_end() {
        return Err(format!("unexpected trailing input `{}`", c.rest()));
    }
    Ok(stmt)
}

pub fn execute(ws: &mut Workspace, script: &MutationScript) -> MutationReport {
    execute_in(ws, script, &Unschemed)
}

/// Applies the script in order. On the first failure every statement is
/// undone and the report names the failing line.
pub fn execute_in(ws: &mut Workspace, script: &MutationScript, schema: &dyn Schema) -> MutationReport {
    let mut work = ws.clone();
    let mut created = Vec::new();
    let mut outcomes = Vec::new();
    let mut error = None;

    for (line, stmt) in &script.statements {
        if error.is_some() {
            outcomes.push(StatementOutcome {
                line: *line,
                outcome: Outcome::NotRun,
            });
            continue;
        }
        match apply(&mut work, stmt, schema, &mut created) {
            Ok(outcome) => outcomes.push(StatementOutcome { line: *line, outcome }),
            Err(e) => {
                error = Some((*line, e.to_string()));
                outcomes.push(StatementOutcome {
                    line: *line,
                    outcome: Outcome::Failed { message: e.to_string() },
                });
            }
        }
    }

    if error.is_some() {
        for o in &mut outcomes {
            if !matches!(o.outcome, Outcome::Failed { .. } | Outcome::NotRun) {
                o.outcome = Outcome::RolledBack;
            }
        }
        created.clear();
    } else {
        *ws = work;
    }
    MutationReport {
        created,
        outcomes,
        error,
    }
}

fn resolve(r: ElementRef, created: &[ElementId]) -> Result<ElementId, ExecError> {
    match r {
        ElementRef::Id(id) => Ok(id),
        ElementRef::Created(n) => created.get(n - 1).copied().ok_or(ExecError::BadCreatedRef(n)),
    }
}

fn apply(
    ws: &mut Workspace,
    stmt: &Statement,
    schema: &dyn Schema,
    created: &mut Vec<ElementId>,
) -> Result<Outcome, ExecError> {
    Ok(match stmt {
        Statement::AddNode {
            type_name,
            label,
            attrs,
        } => {
            let id = ws.add_node_in(schema, type_name, label, (0.0, 0.0))?;
            for (k, v) in attrs {
                ws.set_attr(id, k, v.clone())?;
            }
            created.push(id);
            Outcome::Created { id }
        }
        Statement::AddLink { type_name, from, to } => {
            let id = ws.add_link_in(schema, type_name, resolve(*from, created)?, resolve(*to, created)?)?;
            created.push(id);
            Outcome::Created { id }
        }
        Statement::Set { target, key, value } => {
            let id = resolve(*target, created)?;
            ws.set_attr(id, key, value.clone())?;
            Outcome::Updated { id }
        }
        Statement::Del(target) => {
            let id = resolve(*target, created)?;
            let RemovalReport {
                removed_links,
                reparented,
            } = ws.remove_in(schema, id)?;
            Outcome::Removed {
                id,
                removed_links,
                reparented,
            }
        }
        Statement::Parent { child, parent } => {
            let id = resolve(*child, created)?;
            let parent = parent.map(|p| resolve(p, created)).transpose()?;
            ws.set_parent_in(schema, id, parent)?;
            Outcome::Updated { id }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::serialize;
    use crate::metamodel::bundled;

    #[test]
    fn parses_every_statement_form() {
        let script = MutationScript::parse(
            "# comment\n\nadd node Miron label=\"hi there\" name=greet slots=[a, b]\nadd link condition $1 7\nset 3 weight 0.5\ndel $2\nparent 4 none\nparent 4 9\n",
        )
        .unwrap();
        assert_eq!(script.statements.len(), 6);
        assert_eq!(script.statements[0].0, 3);
        match &script.statements[0].1 {
            Statement::AddNode { label, attrs, .. } => {
                assert_eq!(label, "hi there");
                assert_eq!(attrs.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        for (text, line) in [
            ("add thing X", 1),
            ("\nset 1 k", 2),
            ("del", 1),
            ("del 0", 1),
            ("frobnicate 1", 1),
            ("add link x 1", 1),
            ("del 1 2", 1),
            ("add node T k", 1),
        ] {
            let err = MutationScript::parse(text).unwrap_err();
            assert_eq!(err.line, line, "{text}");
        }
    }

    #[test]
    fn creates_nodes_and_links() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let script = MutationScript::parse("add node A\nadd node B\nadd link l $1 $2\n").unwrap();
        let report = execute(&mut ws, &script);
        assert!(report.ok());
        assert_eq!(report.created.iter().map(|i| i.get()).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(ws.version(), 0);
        assert_eq!(ws.link_count(), 1);
    }

    #[test]
    fn failure_rolls_back_everything() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        ws.add_node("A", "", (1.0, 2.0)).unwrap();
        let before = serialize(&ws);
        let script = MutationScript::parse("add node B\nset 1 k 5\nadd link l 1 42\nadd node C\n").unwrap();
        let report = execute(&mut ws, &script);
        assert_eq!(report.error.as_ref().map(|e| e.0), Some(3));
        assert!(report.created.is_empty());
        assert_eq!(report.outcomes[0].outcome, Outcome::RolledBack);
        assert_eq!(report.outcomes[3].outcome, Outcome::NotRun);
        assert_eq!(serialize(&ws), before);
    }

    #[test]
    fn parent_cycle_rolls_back() {
        let mm = bundled::get("dialog").unwrap();
        let mut ws = Workspace::new("w", "w", "dialog").unwrap();
        let script = MutationScript::parse("add node Module\nadd node Module\nparent $1 $2\nparent $2 $1\n").unwrap();
        let before = serialize(&ws);
        let report = execute_in(&mut ws, &script, &mm);
        assert_eq!(report.error.as_ref().map(|e| e.0), Some(4));
        assert!(report.error.unwrap().1.contains("cycle"));
        assert_eq!(serialize(&ws), before);
    }

    #[test]
    fn schema_guards_parent_and_defaults() {
        let mm = bundled::get("dialog").unwrap();
        let mut ws = Workspace::new("w", "w", "dialog").unwrap();
        let report = execute_in(&mut ws, &MutationScript::parse("add node Rule\nadd node Rule\nparent $1 $2\n").unwrap(), &mm);
        assert!(!report.ok());
        let report = execute_in(&mut ws, &MutationScript::parse("add node Rule conditions=all\n").unwrap(), &mm);
        assert!(report.ok());
        let attrs = ws.attrs(report.created[0]).unwrap();
        assert_eq!(attrs["weight"], AttrValue::Real(1.0));
        assert_eq!(attrs["conditions"], AttrValue::str("all"));
    }

    #[test]
    fn unknown_created_ref() {
        let mut ws = Workspace::new("w", "w", "m").unwrap();
        let report = execute(&mut ws, &MutationScript::parse("add node A\ndel $2\n").unwrap());
        assert!(report.error.unwrap().1.contains("$2"));
        assert_eq!(ws.node_count(), 0);
    }
}
