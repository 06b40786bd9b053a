use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{checksum, AgentToolCall, ContextError, ContextPack};
use crate::corpus::Category;

/// The JSON file stored beside each pack body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub category: Category,
    pub checksum: String,
    pub manifest: Vec<String>,
    pub built_at: DateTime<Utc>,
}

/// Directory of context packs, one `<slug>.md` body plus `<slug>.json`
/// sidecar per category. Agent episodes, when known, go to
/// `<slug>.episode.json`.
#[derive(Debug, Clone)]
pub struct ContextStore {
    dir: PathBuf,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl ContextStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ContextError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(ContextStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn body_path(&self, cat: Category) -> PathBuf {
        self.dir.join(format!("{}.md", cat.slug()))
    }

    pub fn sidecar_path(&self, cat: Category) -> PathBuf {
        self.dir.join(format!("{}.json", cat.slug()))
    }

    fn episode_path(&self, cat: Category) -> PathBuf {
        self.dir.join(format!("{}.episode.json", cat.slug()))
    }

    /// Stores a pack, replacing any previous one for its category.
    pub fn put(&self, pack: &ContextPack) -> Result<(), ContextError> {
        if pack.checksum != checksum(&pack.body) {
            return Err(ContextError::Corrupted {
                category: pack.category,
                detail: "pack checksum does not match its body".into(),
            });
        }
        let sidecar = Sidecar {
            category: pack.category,
            checksum: pack.checksum.clone(),
            manifest: pack.manifest.clone(),
            built_at: pack.built_at,
        };
        write_atomic(&self.body_path(pack.category), pack.body.as_bytes())?;
        write_atomic(&self.sidecar_path(pack.category), &serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn put_episode(&self, cat: Category, calls: &[AgentToolCall]) -> Result<(), ContextError> {
        write_atomic(&self.episode_path(cat), &serde_json::to_vec_pretty(calls)?)?;
        Ok(())
    }

    pub fn episode(&self, cat: Category) -> Result<Option<Vec<AgentToolCall>>, ContextError> {
        match std::fs::read(self.episode_path(cat)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Reads a stored pack, verifying its checksum. Never builds.
    pub fn get(&self, cat: Category) -> Result<ContextPack, ContextError> {
        let body_path = self.body_path(cat);
        let sidecar_path = self.sidecar_path(cat);
        if !body_path.exists() || !sidecar_path.exists() {
            return Err(ContextError::NotBuilt { category: cat });
        }
        let body = std::fs::read_to_string(&body_path)?;
        let sidecar: Sidecar = serde_json::from_slice(&std::fs::read(&sidecar_path)?).map_err(|e| ContextError::Corrupted {
            category: cat,
            detail: format!("unreadable sidecar: {e}"),
        })?;
        if sidecar.category != cat {
            return Err(ContextError::Corrupted {
                category: cat,
                detail: format!("sidecar names category {}", sidecar.category),
            });
        }
        let actual = checksum(&body);
        if actual != sidecar.checksum {
            return Err(ContextError::Corrupted {
                category: cat,
                detail: format!("checksum {actual} does not match recorded {}", sidecar.checksum),
            });
        }
        Ok(ContextPack {
            category: cat,
            body,
            manifest: sidecar.manifest,
            checksum: actual,
            built_at: sidecar.built_at,
        })
    }

    /// Categories that currently have a pack on disk.
    pub fn available(&self) -> Vec<Category> {
        Category::ALL
            .into_iter()
            .filter(|c| self.body_path(*c).exists() && self.sidecar_path(*c).exists())
            .collect()
    }

    /// Loads a hand-written pack from a text file. A sidecar beside the file
    /// (same stem, `.json`) supplies the category and manifest and must
    /// agree with the body; otherwise `category` is required.
    pub fn import_file(&self, path: &Path, category: Option<Category>) -> Result<ContextPack, ContextError> {
        let body = std::fs::read_to_string(path)?;
        if body.trim().is_empty() {
            return Err(ContextError::EmptyBody);
        }
        let sum = checksum(&body);
        let sidecar_path = path.with_extension("json");
        let sidecar: Option<Sidecar> = if sidecar_path.exists() && sidecar_path != path {
            Some(serde_json::from_slice(&std::fs::read(&sidecar_path)?)?)
        } else {
            None
        };
        let category = match (&sidecar, category) {
            (Some(s), Some(c)) if s.category != c => {
                return Err(ContextError::Import(format!(
                    "sidecar says {} but {} was requested",
                    s.category, c
                )))
            }
            (Some(s), _) => s.category,
            (None, Some(c)) => c,
            (None, None) => return Err(ContextError::Import("no sidecar found; pass a category".into())),
        };
        if let Some(s) = &sidecar {
            if s.checksum != sum {
                return Err(ContextError::Corrupted {
                    category,
                    detail: format!("{} was edited after its sidecar was written", path.display()),
                });
            }
        }
        let pack = ContextPack {
            category,
            checksum: sum,
            manifest: sidecar.as_ref().map(|s| s.manifest.clone()).unwrap_or_default(),
            built_at: sidecar.map_or_else(Utc::now, |s| s.built_at),
            body,
        };
        self.put(&pack)?;
        Ok(pack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pack(cat: Category, body: &str) -> ContextPack {
        ContextPack::new(cat, body.into(), vec!["Mathlib/Geometry/Euclidean/Basic.lean".into()])
    }

    #[test]
    fn round_trip_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let store = ContextStore::open(dir.path()).unwrap();
        let p = pack(Category::Geometry, "## 1. Installation & Import\nimport Mathlib\n");
        store.put(&p).unwrap();
        assert_eq!(store.get(Category::Geometry).unwrap(), p);
        assert!(matches!(store.get(Category::Algebra), Err(ContextError::NotBuilt { category: Category::Algebra })));
        assert_eq!(store.available(), vec![Category::Geometry]);
    }

    #[test]
    fn edited_body_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let store = ContextStore::open(dir.path()).unwrap();
        store.put(&pack(Category::Geometry, "original")).unwrap();
        std::fs::write(store.body_path(Category::Geometry), "edited").unwrap();
        assert!(matches!(store.get(Category::Geometry), Err(ContextError::Corrupted { .. })));
    }

    #[test]
    fn import_with_and_without_sidecar() {
        let src = tempfile::tempdir().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = ContextStore::open(dir.path()).unwrap();
        let file = src.path().join("algebra.md");
        std::fs::write(&file, "hand written").unwrap();
        assert!(matches!(store.import_file(&file, None), Err(ContextError::Import(_))));
        let p = store.import_file(&file, Some(Category::Algebra)).unwrap();
        assert_eq!(store.get(Category::Algebra).unwrap(), p);

        let other = ContextStore::open(src.path().join("other")).unwrap();
        other.put(&pack(Category::NumberTheory, "nt body")).unwrap();
        let p = store.import_file(&other.body_path(Category::NumberTheory), None).unwrap();
        assert_eq!(p.category, Category::NumberTheory);
        assert_eq!(p.manifest.len(), 1);
        std::fs::write(other.body_path(Category::NumberTheory), "tampered").unwrap();
        assert!(matches!(
            store.import_file(&other.body_path(Category::NumberTheory), None),
            Err(ContextError::Corrupted { .. })
        ));
    }
}
