//! On-disk cache of exhausted search reports, keyed by a hash of everything
//! that determines the result. Entries are advisory: each hit is re-checked
//! and a bad entry is treated as a miss.

use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use capsearch::search::SearchConfig;

use crate::report::ReportDocument;
use crate::CliError;

pub const CACHE_DIR_VAR: &str = "CAPSEARCH_CACHE_DIR";

pub enum Lookup {
    Hit(ReportDocument),
    Miss,
    /// An entry existed but failed revalidation.
    Invalid(String),
}

pub struct ResultCache {
    dir: PathBuf,
}

pub fn default_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os(CACHE_DIR_VAR) {
        return PathBuf::from(dir);
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(xdg).join("capsearch");
    }
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".cache").join("capsearch"),
        None => std::env::temp_dir().join("capsearch-cache"),
    }
}

/// Hex SHA-256 over n, d, canonical mode, target and the full sorted seed
/// code list.
pub fn cache_key(config: &SearchConfig) -> Result<String, CliError> {
    let echo = config.echo()?;
    let seed = config
        .seed
        .as_ref()
        .map(|s| {
            s.codes()
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(",")
        })
        .unwrap_or_default();
    let target = echo.target.map(|t| t.to_string()).unwrap_or_default();
    let material = format!(
        "n={};d={};mode={};target={target};seed=[{seed}]",
        echo.n, echo.d, echo.mode
    );
    Ok(hex::encode(Sha256::digest(material.as_bytes())))
}

impl ResultCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(ResultCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    fn lock(&self) -> Result<File, CliError> {
        let path = self.dir.join(".lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        file.lock()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn lookup(&self, config: &SearchConfig) -> Result<Lookup, CliError> {
        let key = cache_key(config)?;
        let _guard = self.lock()?;
        let Ok(text) = fs::read_to_string(self.entry(&key)) else {
            return Ok(Lookup::Miss);
        };
        let doc: ReportDocument = match serde_json::from_str(&text) {
            Ok(doc) => doc,
            Err(e) => return Ok(Lookup::Invalid(format!("unreadable entry: {e}"))),
        };
        if doc.search_config() != Some(config.echo()?) {
            return Ok(Lookup::Invalid(
                "entry belongs to a different search".into(),
            ));
        }
        if doc.exhausted != Some(true) {
            return Ok(Lookup::Invalid(
                "entry is not from an exhausted search".into(),
            ));
        }
        if !doc.witness_checks_out() {
            return Ok(Lookup::Invalid("entry witness fails verification".into()));
        }
        Ok(Lookup::Hit(doc))
    }

    pub fn store(&self, config: &SearchConfig, doc: &ReportDocument) -> Result<(), CliError> {
        let key = cache_key(config)?;
        let _guard = self.lock()?;
        let path = self.entry(&key);
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        fs::write(&tmp, doc.to_json()).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }
}
