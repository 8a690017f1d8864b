//! Runs one mutation script over many workspace files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::graph::{deserialize, serialize, ElementId};
use crate::metamodel::{validate, MetaModel};
use crate::script::{execute_in, MutationScript};
use crate::store::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BatchFile {
    pub path: PathBuf,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<ElementId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct BatchReport {
    pub files: Vec<BatchFile>,
}

impl BatchReport {
    pub fn failed(&self) -> usize {
        self.files.iter().filter(|f| !f.ok).count()
    }
}

pub type Resolver<'a> = dyn Fn(&str) -> Result<MetaModel, String> + Sync + 'a;

fn run_one(path: &Path, script: &MutationScript, resolve: &Resolver<'_>) -> Result<(u64, Vec<ElementId>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read: {e}"))?;
    let mut ws = deserialize(&text).map_err(|e| e.to_string())?;
    let mm = resolve(ws.metamodel())?;
    let report = execute_in(&mut ws, script, &mm);
    if let Some((line, message)) = report.error {
        return Err(format!("script line {line}: {message}"));
    }
    let violations = validate(&ws, &mm);
    if let Some(first) = violations.first() {
        return Err(format!("{} violation(s), first: {first}", violations.len()));
    }
    let version = ws.version() + 1;
    ws.set_version(version);
    write_atomic(path, serialize(&ws).as_bytes()).map_err(|e| format!("cannot write: {e}"))?;
    Ok((version, report.created))
}

/// Executes `script` on each file. A file is rewritten (atomically, with
/// version + 1) only when the script succeeds and the result validates;
/// otherwise it is left untouched and the failure is reported. Files are
/// processed in parallel, each by one worker; the report keeps input order.
pub fn run_batch(paths: &[PathBuf], script: &MutationScript, resolve: &Resolver<'_>) -> BatchReport {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(paths.len().max(1));
    let chunk = paths.len().div_ceil(workers).max(1);
    let files = std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|path| match run_one(path, script, resolve) {
                            Ok((version, created)) => BatchFile {
                                path: path.clone(),
                                ok: true,
                                version: Some(version),
                                created,
                                error: None,
                            },
                            Err(e) => BatchFile {
                                path: path.clone(),
                                ok: false,
                                version: None,
                                created: Vec::new(),
                                error: Some(e),
                            },
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("batch worker panicked")).collect()
    });
    BatchReport { files }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AttrValue, Workspace};
    use crate::metamodel::bundled;

    fn resolver(id: &str) -> Result<MetaModel, String> {
        bundled::get(id).ok_or_else(|| format!("unknown metamodel `{id}`"))
    }

    fn write_ws(dir: &Path, id: &str, valid: bool) -> PathBuf {
        let mut ws = Workspace::new(id, id, "basic").unwrap();
        let f = ws.add_node("File", "f", (0.0, 0.0)).unwrap();
        if valid {
            ws.set_attr(f, "path", AttrValue::str("a")).unwrap();
        }
        let path = dir.join(format!("{id}.hgw.json"));
        std::fs::write(&path, serialize(&ws)).unwrap();
        path
    }

    #[test]
    fn saves_successes_and_leaves_failures() {
        let dir = tempfile::tempdir().unwrap();
        let paths = vec![
            write_ws(dir.path(), "a", true),
            write_ws(dir.path(), "b", false),
            write_ws(dir.path(), "c", true),
        ];
        let before_b = std::fs::read(&paths[1]).unwrap();
        let script = MutationScript::parse("add node Comment text=hi\n").unwrap();
        let report = run_batch(&paths, &script, &resolver);
        let oks: Vec<_> = report.files.iter().map(|f| f.ok).collect();
        assert_eq!(oks, [true, false, true]);
        assert_eq!(report.files[0].version, Some(1));
        assert_eq!(report.files[0].created.len(), 1);
        assert!(report.files[1].error.as_deref().unwrap().contains("MISSING_ATTR"));
        assert_eq!(std::fs::read(&paths[1]).unwrap(), before_b);
        let a = deserialize(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!((a.version(), a.node_count()), (1, 2));
    }

    #[test]
    fn script_failure_and_unreadable_file() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_ws(dir.path(), "a", true);
        let before = std::fs::read(&good).unwrap();
        let script = MutationScript::parse("del 99\n").unwrap();
        let report = run_batch(&[good.clone(), dir.path().join("missing.hgw.json")], &script, &resolver);
        assert_eq!(report.failed(), 2);
        assert_eq!(std::fs::read(&good).unwrap(), before);
    }

    #[test]
    fn empty_batch() {
        let script = MutationScript::parse("").unwrap();
        assert_eq!(run_batch(&[], &script, &resolver), BatchReport::default());
    }
}
