//! Content-addressed cache of command outputs.
//!
//! An entry lives in `<cache_dir>/<module>-<sha256 of key>/` and holds the
//! payload files plus `key.json`, the full serialized key. A hit requires
//! the stored key to match byte for byte, so a hash collision is a miss.
//! Entries are staged in a temporary directory and renamed into place.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

const KEY_FILE: &str = "key.json";

pub struct Cache {
    dir: PathBuf,
    enabled: bool,
}

/// Named payload files, in a fixed order.
pub type Payload = Vec<(String, Vec<u8>)>;

#[derive(Serialize)]
struct Key<'a, T: Serialize> {
    module: &'a str,
    version: &'a str,
    config: &'a T,
}

pub struct EntryKey {
    module: String,
    text: String,
    hash: String,
}

impl EntryKey {
    pub fn new<T: Serialize>(module: &str, config: &T) -> Self {
        let key = Key { module, version: env!("CARGO_PKG_VERSION"), config };
        let text = serde_json::to_string_pretty(&key).expect("cache keys serialize");
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Self { module: module.to_string(), text, hash }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn dir_name(&self) -> String {
        format!("{}-{}", self.module, self.hash)
    }
}

impl Cache {
    pub fn new(dir: PathBuf, enabled: bool) -> Self {
        Self { dir, enabled }
    }

    pub fn get(&self, key: &EntryKey, names: &[&str]) -> Result<Option<Payload>, CliError> {
        if !self.enabled {
            return Ok(None);
        }
        let dir = self.dir.join(key.dir_name());
        let Ok(stored) = fs::read_to_string(dir.join(KEY_FILE)) else {
            return Ok(None);
        };
        if stored != key.text {
            return Ok(None);
        }
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            match fs::read(dir.join(name)) {
                Ok(bytes) => out.push((name.to_string(), bytes)),
                Err(_) => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    pub fn put(&self, key: &EntryKey, payload: &Payload) -> Result<(), CliError> {
        if !self.enabled {
            return Ok(());
        }
        let final_dir = self.dir.join(key.dir_name());
        if final_dir.exists() {
            fs::remove_dir_all(&final_dir).map_err(|e| io_err(&final_dir, e))?;
        }
        fs::create_dir_all(&self.dir).map_err(|e| io_err(&self.dir, e))?;
        let staging = self.dir.join(format!(".staging-{}-{}", key.dir_name(), std::process::id()));
        let _ = fs::remove_dir_all(&staging);
        fs::create_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
        for (name, bytes) in payload {
            let p = staging.join(name);
            fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        }
        let p = staging.join(KEY_FILE);
        fs::write(&p, key.text.as_bytes()).map_err(|e| io_err(&p, e))?;
        if fs::rename(&staging, &final_dir).is_err() {
            // Another process published the same entry first.
            let _ = fs::remove_dir_all(&staging);
        }
        Ok(())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::numerical(format!("{}: {e}", path.display()))
}
