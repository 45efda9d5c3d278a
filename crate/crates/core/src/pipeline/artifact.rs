use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Format version written into every artifact.
pub const ARTIFACT_VERSION: u32 = 1;

const MAGIC: &str = "segprof";

/// A delimited table preceded by `# segprof kind=... version=...` and
/// optional `# key=value` metadata lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: Vec<String>) -> Self {
        Table {
            kind: kind.to_string(),
            meta: BTreeMap::new(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn meta(&self, path: &Path, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::artifact(path, format!("missing metadata `{key}`")))
    }

    pub fn column(&self, path: &Path, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::artifact(path, format!("missing column `{name}`")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = format!("# {MAGIC} kind={} version={ARTIFACT_VERSION}\n", self.kind).into_bytes();
        for (k, v) in &self.meta {
            debug_assert!(!v.contains('\n'));
            out.extend_from_slice(format!("# {k}={v}\n").as_bytes());
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, &self.to_bytes()?)
    }

    /// Reads a table, failing unless it carries `kind` at the current version.
    pub fn read(path: &Path, kind: &str) -> Result<Table> {
        let text = fs::read_to_string(path).map_err(|e| Error::artifact(path, e.to_string()))?;
        let mut lines = text.split_inclusive('\n');
        let first = lines.next().unwrap_or("");
        check_header_line(path, first.trim_end(), kind)?;
        let mut meta = BTreeMap::new();
        let mut consumed = first.len();
        for line in lines {
            let Some(rest) = line.strip_prefix("# ") else { break };
            let (k, v) = rest
                .trim_end_matches('\n')
                .split_once('=')
                .ok_or_else(|| Error::artifact(path, format!("malformed metadata line `{}`", line.trim_end())))?;
            meta.insert(k.to_string(), v.to_string());
            consumed += line.len();
        }
        let mut r = csv::ReaderBuilder::new().from_reader(text[consumed..].as_bytes());
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { kind: kind.to_string(), meta, header, rows })
    }
}

fn check_header_line(path: &Path, line: &str, kind: &str) -> Result<()> {
    let mut found_kind = None;
    let mut found_version = None;
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#") || parts.next() != Some(MAGIC) {
        return Err(Error::artifact(path, "not a segprof artifact"));
    }
    for part in parts {
        match part.split_once('=') {
            Some(("kind", v)) => found_kind = Some(v.to_string()),
            Some(("version", v)) => found_version = v.parse::<u32>().ok(),
            _ => {}
        }
    }
    check_kind_version(path, found_kind.as_deref(), found_version, kind)
}

fn check_kind_version(path: &Path, found: Option<&str>, version: Option<u32>, kind: &str) -> Result<()> {
    if found != Some(kind) {
        return Err(Error::artifact(
            path,
            format!("expected a `{kind}` artifact, found `{}`", found.unwrap_or("?")),
        ));
    }
    match version {
        Some(ARTIFACT_VERSION) => Ok(()),
        Some(v) => Err(Error::artifact(
            path,
            format!("artifact version {v} is not supported (expected {ARTIFACT_VERSION})"),
        )),
        None => Err(Error::artifact(path, "artifact version is missing")),
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    kind: String,
    version: u32,
    data: T,
}

pub fn write_json<T: Serialize>(path: &Path, kind: &str, data: &T) -> Result<()> {
    let env = Envelope {
        format: MAGIC.to_string(),
        kind: kind.to_string(),
        version: ARTIFACT_VERSION,
        data,
    };
    let mut bytes = serde_json::to_vec_pretty(&env)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::artifact(path, e.to_string()))?;
    let env: Envelope<serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Error::artifact(path, format!("invalid JSON: {e}")))?;
    if env.format != MAGIC {
        return Err(Error::artifact(path, "not a segprof artifact"));
    }
    check_kind_version(path, Some(&env.kind), Some(env.version), kind)?;
    serde_json::from_value(env.data).map_err(|e| Error::artifact(path, format!("unexpected content: {e}")))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = File::create(path).map_err(|e| Error::artifact(path, e.to_string()))?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::artifact(path, e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::artifact(path, format!("`{s}` is not a number")))
}

pub fn parse_usize(path: &Path, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::artifact(path, format!("`{s}` is not a non-negative integer")))
}

/// Exclusive writer lock on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

pub const LOCK_FILE: &str = ".segprof.lock";

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<RunLock> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::artifact(
                &path,
                "run directory is locked by another writer; remove the lock file if no run is active",
            )),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
