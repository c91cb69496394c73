//! One `.ess` file per graph in a data directory.
//!
//! Saves are staged into a hidden temp file in the same directory and renamed
//! over the target, so a crash leaves either the old or the new file. Writes to
//! one id are serialized; reads take no lock.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use chrono::{DateTime, SecondsFormat, Utc};
use essencery_core::graph::{GraphDocument, Violation};
use essencery_core::lint::{lint_document, Code, Diagnostic};
use essencery_core::{parse, print, Graph, Kernel, ParseError};
use log::warn;
use rand::Rng;
use serde::Serialize;
use tempfile::NamedTempFile;
use thiserror::Error;

const EXTENSION: &str = "ess";
const TEMP_PREFIX: &str = ".ess-";
const TEMP_SUFFIX: &str = ".tmp";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub id: String,
    pub title: String,
    pub revision: u64,
    /// UTC, seconds precision.
    pub modified: String,
}

/// A file in the data directory that could not be listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreWarning {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug)]
pub struct Index {
    pub graphs: Vec<GraphSummary>,
    pub warnings: Vec<StoreWarning>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("data directory {}: {reason}", path.display())]
    DataDir { path: PathBuf, reason: String },
    #[error("no graph `{0}`")]
    NotFound(String),
    #[error("`{0}` is not a valid graph id")]
    BadId(String),
    #[error("stale revision: expected {expected}, stored {stored}")]
    Stale { expected: u64, stored: u64 },
    #[error("graph violates {} invariant(s)", violations.len())]
    Invalid {
        violations: Vec<Violation>,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("stored graph `{id}` is unreadable: {source}")]
    Corrupt {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("stored graph `{id}` has meta id `{found}`")]
    IdMismatch { id: String, found: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ids name files, so only a conservative character set is accepted.
pub fn is_store_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn new_id(rng: &mut impl Rng) -> String {
    format!("{:08x}", rng.gen::<u32>())
}

fn timestamp(t: SystemTime) -> String {
    DateTime::<Utc>::from(t).to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// A save that has been written to a temp file but not yet renamed into place.
pub struct StagedWrite {
    temp: NamedTempFile,
    target: PathBuf,
}

impl StagedWrite {
    pub fn temp_path(&self) -> &Path {
        self.temp.path()
    }

    /// Renames the temp file over the target.
    pub fn commit(self) -> io::Result<()> {
        self.temp.persist(&self.target).map_err(|e| e.error)?;
        Ok(())
    }

    /// Renames only if the target does not exist yet.
    fn commit_new(self) -> io::Result<()> {
        self.temp
            .persist_noclobber(&self.target)
            .map_err(|e| e.error)?;
        Ok(())
    }

    /// Leaves the temp file on disk without renaming, as a crash would.
    pub fn abandon(self) -> io::Result<PathBuf> {
        self.temp.into_temp_path().keep().map_err(|e| e.error)
    }
}

pub struct Store {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Store {
    /// Opens a data directory, checking that it exists and is writable.
    /// Temp files left by an interrupted save are removed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let dir = dir.into();
        let bad = |reason: String| StoreError::DataDir {
            path: dir.clone(),
            reason,
        };
        let meta = fs::metadata(&dir).map_err(|e| bad(e.to_string()))?;
        if !meta.is_dir() {
            return Err(bad("not a directory".into()));
        }
        NamedTempFile::with_prefix_in(TEMP_PREFIX, &dir)
            .and_then(|mut f| f.write_all(b"probe"))
            .map_err(|e| bad(format!("not writable: {e}")))?;

        for entry in fs::read_dir(&dir)? {
            let entry = entry?;
            let name = entry.file_name();
            let name = name.to_string_lossy();
            if name.starts_with(TEMP_PREFIX) && name.ends_with(TEMP_SUFFIX) {
                warn!("removing interrupted save {}", entry.path().display());
                fs::remove_file(entry.path())?;
            }
        }
        Ok(Store {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.{EXTENSION}"))
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table");
        locks.entry(id.to_owned()).or_default().clone()
    }

    /// Lists every parseable `.ess` file; the rest come back as warnings.
    pub fn index(&self) -> Result<Index, StoreError> {
        let mut graphs = Vec::new();
        let mut warnings = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != EXTENSION) {
                continue;
            }
            let Some(stem) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .filter(|s| is_store_id(s))
            else {
                warnings.push(StoreWarning {
                    path,
                    reason: "file name is not a valid graph id".into(),
                });
                continue;
            };
            let stem = stem.to_owned();
            match self.read(&stem) {
                Ok((graph, modified)) => graphs.push(GraphSummary {
                    id: stem,
                    title: graph.title,
                    revision: graph.revision,
                    modified: timestamp(modified),
                }),
                Err(e) => warnings.push(StoreWarning {
                    path,
                    reason: e.to_string(),
                }),
            }
        }
        graphs.sort_by(|a, b| a.id.cmp(&b.id));
        for w in &warnings {
            warn!("skipping {}: {}", w.path.display(), w.reason);
        }
        Ok(Index { graphs, warnings })
    }

    fn read(&self, id: &str) -> Result<(Graph, SystemTime), StoreError> {
        let path = self.path_of(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(id.to_owned()))
            }
            Err(e) => return Err(e.into()),
        };
        let modified = fs::metadata(&path)?.modified()?;
        let graph = parse(&text).map_err(|source| StoreError::Corrupt {
            id: id.to_owned(),
            source,
        })?;
        if graph.id != id {
            return Err(StoreError::IdMismatch {
                id: id.to_owned(),
                found: graph.id,
            });
        }
        Ok((graph, modified))
    }

    pub fn get(&self, id: &str) -> Result<Graph, StoreError> {
        if !is_store_id(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        self.read(id).map(|(g, _)| g)
    }

    pub fn summary(&self, id: &str) -> Result<GraphSummary, StoreError> {
        let (graph, modified) = self.read(id)?;
        Ok(GraphSummary {
            id: id.to_owned(),
            title: graph.title,
            revision: graph.revision,
            modified: timestamp(modified),
        })
    }

    /// Writes `graph` into a temp file next to its target.
    pub fn stage(&self, graph: &Graph) -> Result<StagedWrite, StoreError> {
        if !is_store_id(&graph.id) {
            return Err(StoreError::BadId(graph.id.clone()));
        }
        let mut temp = tempfile::Builder::new()
            .prefix(TEMP_PREFIX)
            .suffix(TEMP_SUFFIX)
            .tempfile_in(&self.dir)?;
        temp.write_all(print(graph).as_bytes())?;
        temp.as_file().sync_all()?;
        Ok(StagedWrite {
            temp,
            target: self.path_of(&graph.id),
        })
    }

    /// Creates an empty graph at revision 0 under a fresh id.
    pub fn create(&self, title: &str) -> Result<Graph, StoreError> {
        let mut rng = rand::thread_rng();
        loop {
            let graph = Graph::new(new_id(&mut rng), title);
            match self.stage(&graph)?.commit_new() {
                Ok(()) => return Ok(graph),
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Replaces the stored graph if its revision is still `expected`.
    /// Returns the new revision. Structural problems are reported with the
    /// matching lint diagnostics.
    pub fn save(
        &self,
        id: &str,
        expected: u64,
        doc: &GraphDocument,
        kernel: &Kernel,
    ) -> Result<u64, StoreError> {
        if !is_store_id(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let lock = self.lock_for(id);
        let _guard = lock.lock().expect("graph lock");
        let (current, _) = self.read(id)?;
        if current.revision != expected {
            return Err(StoreError::Stale {
                expected,
                stored: current.revision,
            });
        }
        let mut violations = Vec::new();
        if !doc.id.is_empty() && doc.id != id {
            violations.push(Violation {
                subject: "graph".into(),
                message: format!("document id `{}` does not match `{id}`", doc.id),
            });
        }
        let graph = Graph::from_document(doc)
            .map_err(|v| violations.extend(v))
            .ok();
        let Some(mut graph) = graph.filter(|_| violations.is_empty()) else {
            let diagnostics = lint_document(doc, kernel)
                .into_iter()
                .filter(|d| matches!(d.code, Code::E001 | Code::E002))
                .collect();
            return Err(StoreError::Invalid {
                violations,
                diagnostics,
            });
        };
        graph.id = id.to_owned();
        graph.revision = current.revision + 1;
        self.stage(&graph)?.commit()?;
        Ok(graph.revision)
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        if !is_store_id(id) {
            return Err(StoreError::NotFound(id.to_owned()));
        }
        let lock = self.lock_for(id);
        let _guard = lock.lock().expect("graph lock");
        match fs::remove_file(self.path_of(id)) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Err(StoreError::NotFound(id.to_owned()))
            }
            Err(e) => Err(e.into()),
        }
    }
}
