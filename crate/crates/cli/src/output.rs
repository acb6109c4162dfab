use std::fs;
use std::path::{Path, PathBuf};

use hmkl::harness::{RepetitionResult, ResultStore};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// `hmkl <version> config=<hash> seed=<seed>`, written as the first comment
/// line of every text output and as a `provenance` field of JSON outputs.
pub fn provenance(config_hash: &str, seed: u64) -> String {
    format!("hmkl {} config={config_hash} seed={seed}", env!("CARGO_PKG_VERSION"))
}

pub fn write_text(path: &Path, provenance: &str, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, format!("# {provenance}\n{body}"))
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Serializes `value` with a leading `provenance` field.
pub fn write_json<S: Serialize>(path: &Path, provenance: &str, value: &S) -> Result<(), CliError> {
    let mut map = serde_json::Map::new();
    map.insert("provenance".into(), provenance.into());
    match serde_json::to_value(value)? {
        serde_json::Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("value".into(), other);
        }
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// One JSON file per finished repetition, named by a digest of its key.
pub struct FileStore {
    dir: PathBuf,
}

impl FileStore {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    fn path(&self, key: &str) -> PathBuf {
        let name: String = Sha256::digest(key.as_bytes())
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect();
        self.dir.join(format!("{name}.json"))
    }
}

#[derive(Serialize, serde::Deserialize)]
struct Entry {
    key: String,
    result: RepetitionResult,
}

impl ResultStore for FileStore {
    fn load(&self, key: &str) -> Option<RepetitionResult> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        match serde_json::from_str::<Entry>(&text) {
            Ok(e) if e.key == key => Some(e.result),
            _ => None,
        }
    }

    fn store(&self, key: &str, result: &RepetitionResult) -> hmkl::Result<()> {
        let path = self.path(key);
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string(&Entry {
            key: key.to_string(),
            result: result.clone(),
        })?;
        let io = |e| hmkl::Error::Io {
            path: tmp.clone(),
            source: e,
        };
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(|e| hmkl::Error::Io { path: path.clone(), source: e })
    }
}
