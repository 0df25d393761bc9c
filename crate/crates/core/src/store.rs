//! Teaching database: an append-only JSON Lines file.
//!
//! Each line is one [`TeachingRecord`] plus a CRC-32 of its canonical
//! encoding. A sidecar index maps `(session_id, kind)` to byte offsets and can
//! always be regenerated from the data file. Writers hold an advisory lock
//! file; readers take no lock.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canon::{sha256_hex, to_canonical_string};

pub const DATA_FILE: &str = "teaching_db.jsonl";
pub const INDEX_FILE: &str = "teaching_db.idx.json";
pub const LOCK_FILE: &str = "teaching_db.lock";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupted record at byte offset {offset} (line {line}): {reason}")]
    Corrupted {
        offset: u64,
        line: usize,
        reason: String,
    },
    #[error("store is locked by another writer ({0})")]
    Locked(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    StageCorpus,
    ContrastCorpus,
    Stats,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeachingRecord {
    pub session_id: String,
    pub kind: RecordKind,
    pub payload: Value,
    pub created_at: String,
}

impl TeachingRecord {
    pub fn new(
        session_id: impl Into<String>,
        kind: RecordKind,
        payload: Value,
        created_at: impl Into<String>,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            kind,
            payload,
            created_at: created_at.into(),
        }
    }

    pub fn payload_hash(&self) -> String {
        sha256_hex(to_canonical_string(&self.payload).as_bytes())
    }

    fn identity(&self) -> (String, RecordKind, String) {
        (self.session_id.clone(), self.kind, self.payload_hash())
    }

    fn checksum(&self) -> String {
        format!("{:08x}", crc32fast::hash(to_canonical_string(self).as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct StoredLine {
    session_id: String,
    kind: RecordKind,
    payload: Value,
    created_at: String,
    crc32: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct IndexFile {
    data_len: u64,
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    session_id: String,
    kind: RecordKind,
    offsets: Vec<u64>,
}

struct WriteLock(PathBuf);

impl Drop for WriteLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Open handle on a store directory.
pub struct StoreHandle {
    data_path: PathBuf,
    index_path: PathBuf,
    lock: Option<WriteLock>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl StoreHandle {
    /// Opens `dir` for writing, creating it if needed and taking the lock.
    pub fn open_writer(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let lock_path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(StoreError::Locked(lock_path))
            }
            Err(e) => return Err(io_err(&lock_path)(e)),
        }
        let lock = WriteLock(lock_path);
        let data_path = dir.join(DATA_FILE);
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&data_path)
            .map_err(io_err(&data_path))?;
        Ok(Self {
            data_path,
            index_path: dir.join(INDEX_FILE),
            lock: Some(lock),
        })
    }

    pub fn open_reader(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let data_path = dir.join(DATA_FILE);
        if !data_path.exists() {
            return Err(StoreError::Io {
                path: data_path,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no store here"),
            });
        }
        Ok(Self {
            data_path,
            index_path: dir.join(INDEX_FILE),
            lock: None,
        })
    }

    pub fn data_path(&self) -> &Path {
        &self.data_path
    }

    fn data_len(&self) -> Result<u64, StoreError> {
        Ok(fs::metadata(&self.data_path)
            .map_err(io_err(&self.data_path))?
            .len())
    }

    /// Reads and verifies every record, returning each with its byte offset.
    pub fn scan(&self) -> Result<Vec<(u64, TeachingRecord)>, StoreError> {
        let file = File::open(&self.data_path).map_err(io_err(&self.data_path))?;
        let mut reader = BufReader::new(file);
        let mut out = Vec::new();
        let mut offset = 0u64;
        let mut line_no = 0usize;
        let mut buf = Vec::new();
        loop {
            buf.clear();
            let n = reader
                .read_until(b'\n', &mut buf)
                .map_err(io_err(&self.data_path))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            if buf.iter().all(|b| b.is_ascii_whitespace()) {
                offset += n as u64;
                continue;
            }
            out.push((offset, decode_line(&buf, offset, line_no)?));
            offset += n as u64;
        }
        Ok(out)
    }

    fn build_index(&self, records: &[(u64, TeachingRecord)]) -> Result<IndexFile, StoreError> {
        let mut map: BTreeMap<(String, RecordKind), Vec<u64>> = BTreeMap::new();
        for (off, r) in records {
            map.entry((r.session_id.clone(), r.kind))
                .or_default()
                .push(*off);
        }
        Ok(IndexFile {
            data_len: self.data_len()?,
            entries: map
                .into_iter()
                .map(|((session_id, kind), offsets)| IndexEntry {
                    session_id,
                    kind,
                    offsets,
                })
                .collect(),
        })
    }

    /// Regenerates the sidecar index from the data file.
    pub fn rebuild_index(&self) -> Result<(), StoreError> {
        let records = self.scan()?;
        let index = self.build_index(&records)?;
        self.write_index(&index)
    }

    fn write_index(&self, index: &IndexFile) -> Result<(), StoreError> {
        let tmp = self.index_path.with_extension("json.tmp");
        let body = serde_json::to_string(index).expect("index serializes");
        fs::write(&tmp, body).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &self.index_path).map_err(io_err(&self.index_path))
    }

    fn load_index(&self) -> Result<Option<IndexFile>, StoreError> {
        let Ok(text) = fs::read_to_string(&self.index_path) else {
            return Ok(None);
        };
        let Ok(index) = serde_json::from_str::<IndexFile>(&text) else {
            return Ok(None);
        };
        Ok((index.data_len == self.data_len()?).then_some(index))
    }

    fn read_at(&self, file: &mut File, offset: u64, line_hint: usize) -> Result<TeachingRecord, StoreError> {
        file.seek(SeekFrom::Start(offset))
            .map_err(io_err(&self.data_path))?;
        let mut reader = BufReader::new(&mut *file);
        let mut buf = Vec::new();
        reader
            .read_until(b'\n', &mut buf)
            .map_err(io_err(&self.data_path))?;
        decode_line(&buf, offset, line_hint)
    }
}

fn decode_line(bytes: &[u8], offset: u64, line: usize) -> Result<TeachingRecord, StoreError> {
    let corrupted = |reason: String| StoreError::Corrupted {
        offset,
        line,
        reason,
    };
    let stored: StoredLine =
        serde_json::from_slice(bytes).map_err(|e| corrupted(format!("unparseable: {e}")))?;
    let record = TeachingRecord {
        session_id: stored.session_id,
        kind: stored.kind,
        payload: stored.payload,
        created_at: stored.created_at,
    };
    let expected = record.checksum();
    if expected != stored.crc32 {
        return Err(corrupted(format!(
            "checksum mismatch (stored {}, computed {expected})",
            stored.crc32
        )));
    }
    Ok(record)
}

/// Appends records not already present; returns how many were written.
///
/// Identity is `(session_id, kind, payload hash)`, so repeating a call is a
/// no-op. The whole file is verified before anything is appended.
pub fn persist(records: &[TeachingRecord], store: &mut StoreHandle) -> Result<usize, StoreError> {
    assert!(store.lock.is_some(), "persist requires a writer handle");
    let existing = store.scan()?;
    let mut seen: HashSet<(String, RecordKind, String)> =
        existing.iter().map(|(_, r)| r.identity()).collect();

    let mut out = String::new();
    let mut written = 0;
    for r in records {
        if !seen.insert(r.identity()) {
            continue;
        }
        let line = StoredLine {
            session_id: r.session_id.clone(),
            kind: r.kind,
            payload: r.payload.clone(),
            created_at: r.created_at.clone(),
            crc32: r.checksum(),
        };
        out.push_str(&serde_json::to_string(&line).expect("record serializes"));
        out.push('\n');
        written += 1;
    }
    if written > 0 {
        let mut f = OpenOptions::new()
            .append(true)
            .open(&store.data_path)
            .map_err(io_err(&store.data_path))?;
        f.write_all(out.as_bytes())
            .and_then(|_| f.sync_data())
            .map_err(io_err(&store.data_path))?;
    }
    store.rebuild_index()?;
    Ok(written)
}

/// Records for `session_id` (optionally of one kind) in insertion order.
pub fn query(
    store: &StoreHandle,
    session_id: &str,
    kind: Option<RecordKind>,
) -> Result<Vec<TeachingRecord>, StoreError> {
    let index = match store.load_index()? {
        Some(ix) => ix,
        None => {
            let records = store.scan()?;
            store.build_index(&records)?
        }
    };
    let mut offsets: Vec<u64> = index
        .entries
        .iter()
        .filter(|e| e.session_id == session_id && kind.is_none_or(|k| k == e.kind))
        .flat_map(|e| e.offsets.iter().copied())
        .collect();
    offsets.sort_unstable();
    let mut file = File::open(&store.data_path).map_err(io_err(&store.data_path))?;
    offsets
        .into_iter()
        .map(|off| store.read_at(&mut file, off, 0))
        .collect()
}
