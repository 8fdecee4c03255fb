//! On-disk result cache, one JSON file per key.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Layout version of the entry files.
pub const CACHE_FORMAT: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub format: u32,
    pub version: String,
    pub key: String,
    pub op: String,
    /// seconds since the epoch
    pub created: u64,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lookup {
    Hit(Value),
    Miss,
    /// written by another tool version
    Stale,
    /// unreadable entry, already removed
    Corrupt,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub entries: usize,
    pub bytes: u64,
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the tool version, the operation and its inputs.
    pub fn key(op: &str, material: &[&str]) -> String {
        let mut h = Sha256::new();
        h.update(TOOL_VERSION.as_bytes());
        h.update([0x1e]);
        h.update(op.as_bytes());
        for m in material {
            h.update([0x1f]);
            h.update(m.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Lookup {
        let path = self.entry_path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(_) => return Lookup::Miss,
        };
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(e) if e.key == key && e.format == CACHE_FORMAT => {
                if e.version == TOOL_VERSION {
                    Lookup::Hit(e.value)
                } else {
                    Lookup::Stale
                }
            }
            _ => {
                let _ = fs::remove_file(&path);
                Lookup::Corrupt
            }
        }
    }

    /// Writes through a temporary file and a rename, so readers never see a partial entry.
    pub fn put(&self, key: &str, op: &str, value: &Value) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
        let entry = Entry {
            format: CACHE_FORMAT,
            version: TOOL_VERSION.to_string(),
            key: key.to_string(),
            op: op.to_string(),
            created: now.as_secs(),
            value: value.clone(),
        };
        let tmp = self.dir.join(format!(".{key}.{}.{}.tmp", std::process::id(), now.subsec_nanos()));
        fs::write(&tmp, serde_json::to_vec_pretty(&entry)?)?;
        fs::rename(&tmp, self.entry_path(key)).inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
    }

    fn files(&self) -> Vec<PathBuf> {
        let Ok(rd) = fs::read_dir(&self.dir) else {
            return vec![];
        };
        rd.filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.ends_with(".json") || name.ends_with(".tmp")
            })
            .collect()
    }

    pub fn stats(&self) -> Stats {
        let mut s = Stats::default();
        for p in self.files() {
            if p.extension().is_some_and(|e| e == "json") {
                s.entries += 1;
                s.bytes += fs::metadata(&p).map(|m| m.len()).unwrap_or(0);
            }
        }
        s
    }

    /// Removes entry and temporary files; returns how many were removed.
    pub fn clear(&self) -> io::Result<usize> {
        let mut n = 0;
        for p in self.files() {
            fs::remove_file(&p)?;
            n += 1;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn roundtrip_and_eviction() {
        let d = tempfile::tempdir().unwrap();
        let c = Cache::new(d.path());
        let k = Cache::key("sha", &["x", "1"]);
        assert_eq!(c.get(&k), Lookup::Miss);
        c.put(&k, "sha", &json!({"a": 1})).unwrap();
        assert_eq!(c.get(&k), Lookup::Hit(json!({"a": 1})));
        assert_eq!(c.stats().entries, 1);
        fs::write(c.entry_path(&k), b"{not json").unwrap();
        assert_eq!(c.get(&k), Lookup::Corrupt);
        assert!(!c.entry_path(&k).exists());
        c.put(&k, "sha", &json!(2)).unwrap();
        let mut e: Entry = serde_json::from_slice(&fs::read(c.entry_path(&k)).unwrap()).unwrap();
        e.version = "0.0.0-old".into();
        fs::write(c.entry_path(&k), serde_json::to_vec(&e).unwrap()).unwrap();
        assert_eq!(c.get(&k), Lookup::Stale);
        assert_eq!(c.clear().unwrap(), 1);
        assert_eq!(c.stats(), Stats::default());
    }

    #[test]
    fn keys_separate_inputs() {
        assert_ne!(Cache::key("sha", &["ab", "c"]), Cache::key("sha", &["a", "bc"]));
        assert_ne!(Cache::key("sha", &["a"]), Cache::key("cohom", &["a"]));
        assert_eq!(Cache::key("sha", &["a"]).len(), 64);
    }
}
