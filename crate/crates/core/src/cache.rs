//! On-disk cache of verdicts.
//!
//! Layout: `<dir>/<kind>/<hex sha-256 of the key>.json`, where the key is
//! the command kind, the lottery text and the integer parameters joined by
//! `|`. Each file holds the JSON report exactly as it was first produced.
//! Entries never expire; delete the directory to reset.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

fn io(e: std::io::Error) -> Error {
    Error::Internal(format!("cache: {e}"))
}

impl Cache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(kind: &str, lottery: &str, params: &[u64]) -> String {
        let mut text = format!("{kind}|{lottery}");
        for x in params {
            text.push('|');
            text.push_str(&x.to_string());
        }
        text
    }

    fn path(&self, key: &str) -> PathBuf {
        let kind = key.split('|').next().unwrap_or("misc");
        let digest = Sha256::digest(key.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(kind).join(format!("{hex}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<serde_json::Value>> {
        let path = self.path(key);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let value: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| Error::Internal(format!("cache entry {path:?}: {e}")))?;
                // Guard against hash collisions and hand-edited files.
                if value.get("key").and_then(|k| k.as_str()) != Some(key) {
                    return Ok(None);
                }
                Ok(value.get("value").cloned())
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io(e)),
        }
    }

    /// Writes atomically through a temporary file in the same directory.
    pub fn put(&self, key: &str, value: &serde_json::Value) -> Result<()> {
        let path = self.path(key);
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent).map_err(io)?;
        let entry = serde_json::json!({ "key": key, "value": value });
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(serde_json::to_string_pretty(&entry).expect("json value").as_bytes())
            .map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::is_feasible;
    use crate::RankLottery;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path()).unwrap();
        let l = RankLottery::parse("0,1/3,1/3,1/3,0,0").unwrap();
        let key = Cache::key("feasible", &l.to_string(), &[3]);
        assert_eq!(cache.get(&key).unwrap(), None);

        let fresh = serde_json::to_value(is_feasible(&l, 3).unwrap()).unwrap();
        cache.put(&key, &fresh).unwrap();
        let stored = cache.get(&key).unwrap().unwrap();
        assert_eq!(stored["verdict"], fresh["verdict"]);
        assert_eq!(stored, fresh);

        let other = Cache::key("feasible", &l.to_string(), &[4]);
        assert_eq!(cache.get(&other).unwrap(), None);
        assert!(cache.path(&key).starts_with(dir.path().join("feasible")));
    }
}
