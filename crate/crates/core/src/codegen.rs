//! Generation plans: workspace-resident `GenEntry` nodes wiring a root
//! query and a template to an output file.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Component, Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::graph::{AttrValue, ElementId, Workspace};
use crate::metamodel::{bundled, validate, MetaModel, Violation};
use crate::query::{Evaluator, Query, QueryError};
use crate::store::write_atomic;
use crate::template::{parse_template_at, render_with_root};

pub const GENPLAN_METAMODEL: &str = "codegen";
pub const REPORT_FILE: &str = "genreport.json";
pub const DEFAULT_MARKER: &str = "//";

#[derive(Debug, Clone, PartialEq)]
pub struct GenEntry {
    pub node: ElementId,
    pub template_path: String,
    pub output_path: String,
    pub root_query: Query,
    pub comment_marker: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenPlan {
    pub entries: Vec<GenEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum GenPlanError {
    #[error("generation plan does not conform to `codegen`: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Violations(Vec<Violation>),
    #[error("entry {element}: root_query: {source}")]
    BadQuery { element: ElementId, source: QueryError },
    #[error("entry {element}: output path `{path}` must be relative and stay inside the output directory")]
    BadOutputPath { element: ElementId, path: String },
    #[error("entries {first} and {second} both write `{path}`")]
    DuplicateOutput {
        path: String,
        first: ElementId,
        second: ElementId,
    },
    #[error("entry {element}: comment marker must not be empty")]
    EmptyMarker { element: ElementId },
}

fn attr_str<'a>(ws: &'a Workspace, id: ElementId, key: &str) -> Option<&'a str> {
    ws.attrs(id)?.get(key).and_then(AttrValue::as_str)
}

/// Output paths are compared in this normal form (`a/./b` == `a/b`).
fn normal_output(path: &str) -> Option<String> {
    let p = Path::new(path);
    let mut parts = Vec::new();
    for c in p.components() {
        match c {
            Component::Normal(s) => parts.push(s.to_str()?.to_owned()),
            Component::CurDir => {}
            _ => return None,
        }
    }
    (!parts.is_empty()).then(|| parts.join("/"))
}

/// Reads the `GenEntry` nodes of a plan workspace, in id order.
pub fn load_genplan(ws: &Workspace) -> Result<GenPlan, GenPlanError> {
    let mm = bundled::get(GENPLAN_METAMODEL).expect("bundled codegen metamodel");
    let violations = validate(ws, &mm);
    if !violations.is_empty() {
        return Err(GenPlanError::Violations(violations));
    }
    let mut seen: HashMap<String, ElementId> = HashMap::new();
    let mut entries = Vec::new();
    for node in ws.nodes().filter(|n| n.type_name == "GenEntry") {
        let id = node.id;
        let get = |k| attr_str(ws, id, k).unwrap_or_default().to_owned();
        let output = get("output");
        let normal = normal_output(&output).ok_or_else(|| GenPlanError::BadOutputPath {
            element: id,
            path: output.clone(),
        })?;
        if let Some(first) = seen.insert(normal, id) {
            return Err(GenPlanError::DuplicateOutput {
                path: output,
                first,
                second: id,
            });
        }
        let root_query = Query::parse(&get("root_query")).map_err(|source| GenPlanError::BadQuery { element: id, source })?;
        let marker = attr_str(ws, id, "marker").unwrap_or(DEFAULT_MARKER).to_owned();
        if marker.trim().is_empty() {
            return Err(GenPlanError::EmptyMarker { element: id });
        }
        entries.push(GenEntry {
            node: id,
            template_path: get("template"),
            output_path: output,
            root_query,
            comment_marker: marker,
        });
    }
    Ok(GenPlan { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryReport {
    pub output_path: String,
    pub template_path: String,
    pub line_count: u64,
    pub bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EntryReport {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub entries: Vec<EntryReport>,
    pub elapsed_ms: u64,
}

impl GenReport {
    pub fn failed(&self) -> usize {
        self.entries.iter().filter(|e| !e.ok()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization") + "\n"
    }

    pub fn table(&self) -> String {
        let width = self
            .entries
            .iter()
            .map(|e| e.output_path.len())
            .chain(["output".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>10}  status", "output", "lines", "bytes");
        for e in &self.entries {
            let status = match &e.error {
                None => "ok".to_owned(),
                Some(err) => format!("FAILED: {err}"),
            };
            let _ = writeln!(out, "{:<width$}  {:>8}  {:>10}  {status}", e.output_path, e.line_count, e.bytes);
        }
        let _ = writeln!(
            out,
            "{} entries, {} failed, {} ms",
            self.entries.len(),
            self.failed(),
            self.elapsed_ms
        );
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("cannot create output directory {}: {source}", path.display())]
    OutDir { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Report { path: PathBuf, source: std::io::Error },
}

fn run_entry(entry: &GenEntry, ws: &Workspace, mm: &MetaModel, template_dir: &Path, out_dir: &Path) -> EntryReport {
    let mut report = EntryReport {
        output_path: entry.output_path.clone(),
        template_path: entry.template_path.clone(),
        line_count: 0,
        bytes: 0,
        error: None,
        warnings: Vec::new(),
    };
    let result = (|| -> Result<(), String> {
        let tpl_path = template_dir.join(&entry.template_path);
        let text = std::fs::read_to_string(&tpl_path).map_err(|e| format!("cannot read template {}: {e}", tpl_path.display()))?;
        let tpl = parse_template_at(&text, &entry.comment_marker, &entry.template_path).map_err(|e| e.to_string())?;
        report.warnings = tpl.warnings.clone();
        let root = Evaluator::new(ws)
            .eval(&entry.root_query, &|_| None)
            .map_err(|e| format!("root_query: {e}"))?;
        let out = render_with_root(&tpl, ws, mm, Some(root)).map_err(|e| e.to_string())?;
        write_atomic(&out_dir.join(&entry.output_path), out.as_bytes()).map_err(|e| format!("cannot write output: {e}"))?;
        report.line_count = out.bytes().filter(|&b| b == b'\n').count() as u64;
        report.bytes = out.len() as u64;
        Ok(())
    })();
    report.error = result.err();
    report
}

/// Renders every entry (in parallel), writes the outputs and
/// `genreport.json` under `out_dir`. A failing entry is recorded in the
/// report and does not stop the others.
pub fn run_genplan(
    plan: &GenPlan,
    ws: &Workspace,
    mm: &MetaModel,
    template_dir: &Path,
    out_dir: &Path,
) -> Result<GenReport, GenError> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|source| GenError::OutDir {
        path: out_dir.to_owned(),
        source,
    })?;
    let entries = std::thread::scope(|s| {
        let handles: Vec<_> = plan
            .entries
            .iter()
            .map(|e| s.spawn(move || run_entry(e, ws, mm, template_dir, out_dir)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("generation thread panicked")).collect()
    });
    let report = GenReport {
        entries,
        elapsed_ms: start.elapsed().as_millis() as u64,
    };
    let path = out_dir.join(REPORT_FILE);
    write_atomic(&path, report.to_json().as_bytes()).map_err(|source| GenError::Report { path, source })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn plan_ws(entries: &[(&str, &str, &str)]) -> Workspace {
        let mut ws = Workspace::new("plan", "plan", GENPLAN_METAMODEL).unwrap();
        for (tpl, out, q) in entries {
            let n = ws.add_node("GenEntry", out, (0.0, 0.0)).unwrap();
            ws.set_attr(n, "template", AttrValue::str(*tpl)).unwrap();
            ws.set_attr(n, "output", AttrValue::str(*out)).unwrap();
            ws.set_attr(n, "root_query", AttrValue::str(*q)).unwrap();
        }
        ws
    }

    #[test]
    fn three_entries_in_id_order() {
        let plan = load_genplan(&synth::dialog_genplan()).unwrap();
        let outs: Vec<_> = plan.entries.iter().map(|e| e.output_path.as_str()).collect();
        assert_eq!(outs, ["dictionaries.js", "weights.js", "intents.js"]);
        assert!(plan.entries.iter().all(|e| e.comment_marker == "//"));
    }

    #[test]
    fn empty_plan() {
        let ws = Workspace::new("p", "p", GENPLAN_METAMODEL).unwrap();
        assert!(load_genplan(&ws).unwrap().entries.is_empty());
    }

    #[test]
    fn plan_errors() {
        let dup = plan_ws(&[("a", "x.js", "node"), ("b", "./x.js", "node")]);
        assert!(matches!(load_genplan(&dup), Err(GenPlanError::DuplicateOutput { .. })));
        for bad in ["../x.js", "/etc/x", "a/../../x", ""] {
            let ws = plan_ws(&[("a", bad, "node")]);
            assert!(matches!(load_genplan(&ws), Err(GenPlanError::BadOutputPath { .. })), "{bad}");
        }
        let q = plan_ws(&[("a", "x", "nodes[")]);
        assert!(matches!(load_genplan(&q), Err(GenPlanError::BadQuery { .. })));
        let mut missing = plan_ws(&[("a", "x", "node")]);
        let n = missing.nodes().next().unwrap().id;
        missing.remove_attr(n, "template").unwrap();
        assert!(matches!(load_genplan(&missing), Err(GenPlanError::Violations(v)) if v.len() == 1));
    }

    #[test]
    fn failed_entry_does_not_stop_others() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ok.txt"), "//[# foreach n in $root #]\n//: ID=n.id\n__ID__\n//[# end #]\n").unwrap();
        let plan = load_genplan(&plan_ws(&[("missing.txt", "a.txt", "node"), ("ok.txt", "b/b.txt", "node")])).unwrap();
        let (ws, mm) = (synth::dialog_workspace(&synth::DialogCounts::scaled(2)), bundled::get("dialog").unwrap());
        let out = dir.path().join("out");
        let report = run_genplan(&plan, &ws, &mm, dir.path(), &out).unwrap();
        assert_eq!(report.failed(), 1);
        assert!(report.entries[0].error.as_deref().unwrap().contains("missing.txt"));
        assert!(!out.join("a.txt").exists());
        let text = std::fs::read_to_string(out.join("b/b.txt")).unwrap();
        assert_eq!(report.entries[1].line_count as usize, text.lines().count());
        assert_eq!(report.entries[1].line_count as usize, ws.node_count());
        let written: GenReport = serde_json::from_str(&std::fs::read_to_string(out.join(REPORT_FILE)).unwrap()).unwrap();
        assert_eq!(written, report);
        assert!(report.table().contains("FAILED"));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let plan = load_genplan(&synth::dialog_genplan()).unwrap();
        let ws = synth::dialog_workspace(&synth::DialogCounts::scaled(5));
        let mm = bundled::get("dialog").unwrap();
        let tpl_dir = synth::template_dir();
        let read = |sub: &str| -> Vec<Vec<u8>> {
            plan.entries
                .iter()
                .map(|e| std::fs::read(dir.path().join(sub).join(&e.output_path)).unwrap())
                .collect()
        };
        let r1 = run_genplan(&plan, &ws, &mm, &tpl_dir, &dir.path().join("one")).unwrap();
        let r2 = run_genplan(&plan, &ws, &mm, &tpl_dir, &dir.path().join("two")).unwrap();
        assert_eq!(r1.failed(), 0, "{}", r1.table());
        assert_eq!(read("one"), read("two"));
        assert_eq!(r1.entries, r2.entries);
    }
}
