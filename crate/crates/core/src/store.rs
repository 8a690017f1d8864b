//! One-file-per-workspace store: `<root>/<id>.hgw.json`, metamodels under
//! `<root>/metamodels/<id>.mm.yaml`.
//!
//! Saves are optimistic: the caller passes the version it read and the save
//! is refused when the file has moved on. Writes go to a temp file in the
//! same directory and are renamed into place, so readers (and crashes) see
//! either the old or the new document.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;

use crate::graph::{check_workspace_id, deserialize, serialize, GraphError, Workspace};
use crate::metamodel::{bundled, load_metamodel, MetaModel, MetaModelError};

pub const WORKSPACE_SUFFIX: &str = ".hgw.json";
pub const METAMODEL_SUFFIX: &str = ".mm.yaml";
pub const HISTORY_CAP: usize = 100;

/// Milliseconds to pause between writing the temp file and renaming it.
/// Only for crash tests, which need a wide window to kill the process in.
pub const FAULT_PAUSE_ENV: &str = "OMNIGRAPH_FAULT_PAUSE_MS";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("workspace `{0}` not found")]
    NotFound(String),
    #[error("workspace `{id}`: {source}")]
    Integrity { id: String, source: GraphError },
    #[error("workspace `{id}`: expected version {expected}, stored version is {stored}")]
    Conflict { id: String, expected: u64, stored: u64 },
    #[error("workspace id `{id}` collides with existing `{existing}` (ids differing only by case)")]
    CaseCollision { id: String, existing: String },
    #[error("document id `{found}` does not match workspace `{id}`")]
    IdMismatch { id: String, found: String },
    #[error(transparent)]
    InvalidId(GraphError),
    #[error("metamodel `{id}`: {message}")]
    MetaModel { id: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl StoreError {
    pub fn element(&self) -> Option<u64> {
        match self {
            StoreError::Integrity { source, .. } => source.element(),
            _ => None,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes `bytes` to `path` through a synced temp file in the same
/// directory, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::Builder::new().prefix(".omnigraph-").tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    if let Some(ms) = std::env::var(FAULT_PAUSE_ENV).ok().and_then(|v| v.parse().ok()) {
        std::thread::sleep(Duration::from_millis(ms));
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Appends `target`, skipping an immediate repeat, keeping the newest
/// [`HISTORY_CAP`] entries.
pub fn push_history(history: &mut Vec<String>, target: &str) {
    if history.last().map(String::as_str) == Some(target) {
        return;
    }
    history.push(target.to_owned());
    if history.len() > HISTORY_CAP {
        let excess = history.len() - HISTORY_CAP;
        history.drain(..excess);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub id: String,
    pub name: String,
    pub metamodel: String,
    pub version: u64,
    pub node_count: usize,
    pub link_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ListEntry {
    Ok(Summary),
    Corrupt { id: String, corrupt: bool, error: String },
}

type Hook = dyn Fn(&Path) -> std::io::Result<()> + Send + Sync;

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    before_rename: Option<Box<Hook>>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        let meta = std::fs::metadata(&root).map_err(io_err(&root))?;
        if !meta.is_dir() {
            return Err(StoreError::Io {
                source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
                path: root,
            });
        }
        Ok(Store {
            root,
            locks: Mutex::new(HashMap::new()),
            before_rename: None,
        })
    }

    /// Runs `hook` with the temp file path after it is written and before it
    /// is renamed; an error aborts the save.
    pub fn with_fault_hook(mut self, hook: impl Fn(&Path) -> std::io::Result<()> + Send + Sync + 'static) -> Store {
        self.before_rename = Some(Box::new(hook));
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}{WORKSPACE_SUFFIX}"))
    }

    fn ids(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(id) = name.strip_suffix(WORKSPACE_SUFFIX) {
                if check_workspace_id(id).is_ok() && entry.path().is_file() {
                    ids.push(id.to_owned());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Every workspace in ascending id order. Unreadable files are listed
    /// as corrupt rather than failing the listing.
    pub fn list(&self) -> Result<Vec<ListEntry>, StoreError> {
        Ok(self
            .ids()?
            .into_iter()
            .map(|id| match self.load(&id) {
                Ok(ws) => ListEntry::Ok(Summary {
                    id,
                    name: ws.name().to_owned(),
                    metamodel: ws.metamodel().to_owned(),
                    version: ws.version(),
                    node_count: ws.node_count(),
                    link_count: ws.link_count(),
                }),
                Err(e) => ListEntry::Corrupt {
                    id,
                    corrupt: true,
                    error: e.to_string(),
                },
            })
            .collect())
    }

    pub fn exists(&self, id: &str) -> bool {
        check_workspace_id(id).is_ok() && self.path_of(id).is_file()
    }

    pub fn load(&self, id: &str) -> Result<Workspace, StoreError> {
        check_workspace_id(id).map_err(StoreError::InvalidId)?;
        let path = self.path_of(id);
        let text = match std::fs::read(&path) {
            Ok(bytes) => String::from_utf8(bytes).map_err(|e| StoreError::Integrity {
                id: id.to_owned(),
                source: GraphError::Parse {
                    line: 0,
                    column: 0,
                    message: e.to_string(),
                },
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_owned())),
            Err(e) => return Err(io_err(&path)(e)),
        };
        let ws = deserialize(&text).map_err(|source| StoreError::Integrity {
            id: id.to_owned(),
            source,
        })?;
        if ws.id() != id {
            return Err(StoreError::IdMismatch {
                id: id.to_owned(),
                found: ws.id().to_owned(),
            });
        }
        Ok(ws)
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_owned()).or_default().clone()
    }

    /// Version currently on disk; 0 when the file does not exist yet.
    fn stored_version(&self, id: &str) -> Result<u64, StoreError> {
        match self.load(id) {
            Ok(ws) => Ok(ws.version()),
            Err(StoreError::NotFound(_)) => Ok(0),
            Err(e) => Err(e),
        }
    }

    /// Saves `ws` as `id` if the stored version equals `expected`. The
    /// saved document carries version `expected + 1`, which is returned.
    pub fn save(&self, id: &str, ws: &Workspace, expected: u64) -> Result<u64, StoreError> {
        check_workspace_id(id).map_err(StoreError::InvalidId)?;
        if ws.id() != id {
            return Err(StoreError::IdMismatch {
                id: id.to_owned(),
                found: ws.id().to_owned(),
            });
        }
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        self.save_locked(id, ws.clone(), expected)
    }

    fn save_locked(&self, id: &str, mut ws: Workspace, expected: u64) -> Result<u64, StoreError> {
        let stored = self.stored_version(id)?;
        if stored != expected {
            return Err(StoreError::Conflict {
                id: id.to_owned(),
                expected,
                stored,
            });
        }
        if stored == 0 {
            if let Some(existing) = self.ids()?.into_iter().find(|o| o != id && o.eq_ignore_ascii_case(id)) {
                return Err(StoreError::CaseCollision {
                    id: id.to_owned(),
                    existing,
                });
            }
        }
        let version = expected + 1;
        ws.set_version(version);
        let path = self.path_of(id);
        self.write(&path, serialize(&ws).as_bytes()).map_err(io_err(&path))?;
        Ok(version)
    }

    fn write(&self, path: &Path, bytes: &[u8]) -> std::io::Result<()> {
        let Some(hook) = &self.before_rename else {
            return write_atomic(path, bytes);
        };
        let mut tmp = tempfile::Builder::new().prefix(".omnigraph-").tempfile_in(&self.root)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        hook(tmp.path())?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Records a navigation from `id` to `target` in `id`'s history and
    /// saves it. Returns the updated history.
    pub fn navigate(&self, id: &str, target: &str) -> Result<Vec<String>, StoreError> {
        if !self.exists(target) {
            return Err(StoreError::NotFound(target.to_owned()));
        }
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut ws = self.load(id)?;
        push_history(ws.history_mut(), target);
        let history = ws.history().to_vec();
        let version = ws.version();
        self.save_locked(id, ws, version)?;
        Ok(history)
    }

    fn metamodel_path(&self, id: &str) -> PathBuf {
        self.root.join("metamodels").join(format!("{id}{METAMODEL_SUFFIX}"))
    }

    /// Store metamodels shadow the bundled ones.
    pub fn metamodel(&self, id: &str) -> Result<MetaModel, StoreError> {
        let Some((_, text)) = self.metamodel_source(id)? else {
            return Err(StoreError::MetaModel {
                id: id.to_owned(),
                message: "not found".into(),
            });
        };
        load_metamodel(&text).map_err(|e: MetaModelError| StoreError::MetaModel {
            id: id.to_owned(),
            message: e.to_string(),
        })
    }

    /// `(origin, yaml)` where origin is `store` or `bundled`.
    pub fn metamodel_source(&self, id: &str) -> Result<Option<(&'static str, String)>, StoreError> {
        if check_workspace_id(id).is_ok() {
            let path = self.metamodel_path(id);
            match std::fs::read_to_string(&path) {
                Ok(text) => return Ok(Some(("store", text))),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => return Err(io_err(&path)(e)),
            }
        }
        Ok(bundled::source(id).map(|s| ("bundled", s.to_owned())))
    }

    pub fn metamodel_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = bundled::IDS.iter().map(|s| s.to_string()).collect();
        if let Ok(dir) = std::fs::read_dir(self.root.join("metamodels")) {
            for entry in dir.flatten() {
                if let Some(id) = entry.file_name().to_str().and_then(|n| n.strip_suffix(METAMODEL_SUFFIX)) {
                    ids.push(id.to_owned());
                }
            }
        }
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Finds a metamodel by file path, then in `store_root/metamodels`, then
/// among the bundled ones.
pub fn resolve_metamodel(spec: &str, store_root: Option<&Path>) -> Result<MetaModel, String> {
    let as_path = Path::new(spec);
    if spec.ends_with(".yaml") || spec.ends_with(".yml") || as_path.is_file() {
        let text = std::fs::read_to_string(as_path).map_err(|e| format!("{spec}: {e}"))?;
        return load_metamodel(&text).map_err(|e| format!("{spec}: {e}"));
    }
    if let Some(root) = store_root {
        let path = root.join("metamodels").join(format!("{spec}{METAMODEL_SUFFIX}"));
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            return load_metamodel(&text).map_err(|e| format!("{}: {e}", path.display()));
        }
    }
    bundled::get(spec).ok_or_else(|| format!("unknown metamodel `{spec}`"))
}
