//! File-backed artifact store.
//!
//! Layout under the root directory:
//!
//! ```text
//! datasets/<id>.csv    cleaned dataset, exported CSV layout
//! models/<id>.json     StoredModel
//! ```
//!
//! Files are written to a `.tmp` sibling and renamed into place, so a
//! crash never leaves a half-written artifact under its final name. The
//! in-memory index is rebuilt from the directories on open.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use gradecast::cart;
use gradecast::eval::EvaluationReport;
use gradecast::ingest::{load_csv, CleanOptions, Schema};
use gradecast::{Dataset, HyperParams, SplitConfig, Tree};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt artifact {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A trained model together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub id: String,
    pub dataset_id: String,
    pub created_at: DateTime<Utc>,
    pub split: SplitConfig,
    pub params: HyperParams,
    pub evaluation: EvaluationReport,
    /// Model file text exactly as written by `cart::serialize`.
    pub tree: String,
}

impl StoredModel {
    pub fn tree(&self) -> Result<Tree, cart::CartError> {
        cart::deserialize(&self.tree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Dataset,
    Model,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Dataset => "datasets",
            Kind::Model => "models",
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Kind::Dataset => "csv",
            Kind::Model => "json",
        }
    }
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    datasets: Mutex<BTreeMap<String, PathBuf>>,
    models: Mutex<BTreeMap<String, PathBuf>>,
}

impl Store {
    /// Opens (creating if needed) a store rooted at `root` and indexes every
    /// artifact that loads and validates. Leftover temp files are removed;
    /// unreadable artifacts are skipped with a warning.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let store = Self {
            datasets: Mutex::new(BTreeMap::new()),
            models: Mutex::new(BTreeMap::new()),
            root,
        };
        for kind in [Kind::Dataset, Kind::Model] {
            let dir = store.root.join(kind.dir());
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let mut found = BTreeMap::new();
            for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
                let path = entry.map_err(io_err(&dir))?.path();
                if path.extension().is_some_and(|e| e == "tmp") {
                    let _ = fs::remove_file(&path);
                    continue;
                }
                if path.extension().is_none_or(|e| e != kind.ext()) {
                    continue;
                }
                let Some(id) = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .map(str::to_string)
                else {
                    continue;
                };
                let check = match kind {
                    Kind::Dataset => read_dataset(&path).map(|_| ()),
                    Kind::Model => read_model(&path).and_then(|m| {
                        if m.id != id {
                            return Err(StoreError::Corrupt {
                                path: path.clone(),
                                message: format!("file holds model `{}`", m.id),
                            });
                        }
                        m.tree().map(|_| ()).map_err(|e| StoreError::Corrupt {
                            path: path.clone(),
                            message: e.to_string(),
                        })
                    }),
                };
                match check {
                    Ok(()) => {
                        found.insert(id, path);
                    }
                    Err(e) => warn!("skipping {}: {e}", path.display()),
                }
            }
            *store.index(kind).lock().expect("index lock") = found;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index(&self, kind: Kind) -> &Mutex<BTreeMap<String, PathBuf>> {
        match kind {
            Kind::Dataset => &self.datasets,
            Kind::Model => &self.models,
        }
    }

    fn path_of(&self, kind: Kind, id: &str) -> Option<PathBuf> {
        self.index(kind)
            .lock()
            .expect("index lock")
            .get(id)
            .cloned()
    }

    fn write(&self, kind: Kind, id: &str, contents: &[u8]) -> Result<(), StoreError> {
        let dir = self.root.join(kind.dir());
        let path = dir.join(format!("{id}.{}", kind.ext()));
        let tmp = dir.join(format!("{id}.{}.tmp", kind.ext()));
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        self.index(kind)
            .lock()
            .expect("index lock")
            .insert(id.to_string(), path);
        Ok(())
    }

    /// Persists a cleaned dataset under a fresh id.
    pub fn insert_dataset(&self, data: &Dataset) -> Result<String, StoreError> {
        let id = new_id();
        self.write(Kind::Dataset, &id, data.to_csv().as_bytes())?;
        Ok(id)
    }

    pub fn dataset(&self, id: &str) -> Result<Option<Dataset>, StoreError> {
        self.path_of(Kind::Dataset, id)
            .map(|p| read_dataset(&p))
            .transpose()
    }

    pub fn dataset_ids(&self) -> Vec<String> {
        self.datasets
            .lock()
            .expect("index lock")
            .keys()
            .cloned()
            .collect()
    }

    pub fn insert_model(&self, model: &StoredModel) -> Result<(), StoreError> {
        let text = serde_json::to_vec_pretty(model).expect("model serializes");
        self.write(Kind::Model, &model.id, &text)
    }

    pub fn model(&self, id: &str) -> Result<Option<StoredModel>, StoreError> {
        self.path_of(Kind::Model, id)
            .map(|p| read_model(&p))
            .transpose()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models
            .lock()
            .expect("index lock")
            .keys()
            .cloned()
            .collect()
    }
}

/// Random opaque id: 32 lowercase hex digits.
pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

fn read_dataset(path: &Path) -> Result<Dataset, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let source = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    load_csv(&text, &Schema::exported(), source, CleanOptions::default())
        .map(|(d, _)| d)
        .map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

fn read_model(path: &Path) -> Result<StoredModel, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
