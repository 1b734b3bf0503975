//! Durable catalog store: a checksummed snapshot plus a JSON-lines append
//! log, replayed into memory on open.
//!
//! Directory layout:
//!
//! ```text
//! snapshot.gmdl   goldmedal-snapshot v1 <sha256 of the rest of the file>
//!                 revision <N>
//!                 <canonical catalog document>
//! log.gmdl        {"rev":N,"ops":[...]}   one committed batch per line
//! lock            advisory lock file for cross-process writers
//! ```
//!
//! Readers take an `Arc<Catalog>` view of the latest committed revision;
//! commits are serialized and publish a new view atomically.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Batch, Catalog, IntegrityError, Mutation};
use crate::ids::ObjectId;
use crate::interchange::{export_json, import_json};

pub const SNAPSHOT_FILE: &str = "snapshot.gmdl";
pub const LOG_FILE: &str = "log.gmdl";
pub const LOCK_FILE: &str = "lock";
const MAGIC: &str = "goldmedal-snapshot";
const VERSION: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no store at {0}")]
    Missing(PathBuf),
    #[error("{0} is not a catalog store (no {SNAPSHOT_FILE})")]
    NotAStore(PathBuf),
    #[error("cannot initialize {0}: directory is not empty")]
    NotEmpty(PathBuf),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("unsupported snapshot version {0:?}")]
    VersionUnsupported(String),
    #[error("{0} not found")]
    NotFound(ObjectId),
    #[error("{id} is referenced by {}", list_ids(.referrers))]
    ReferencedByOthers { id: ObjectId, referrers: Vec<ObjectId> },
    #[error(transparent)]
    Integrity(#[from] IntegrityError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

fn list_ids(ids: &[ObjectId]) -> String {
    ids.iter().map(|id| format!("{} {id}", id.kind())).collect::<Vec<_>>().join(", ")
}

/// How [`Store::delete`] treats objects that reference the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeleteMode {
    #[default]
    Restrict,
    Cascade,
}

#[derive(Debug, Clone, Copy)]
pub struct StoreOptions {
    /// fsync the log after every commit and the snapshot before rename.
    pub sync: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self { sync: true }
    }
}

/// What [`Store::open`] found while replaying the log.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpenReport {
    pub snapshot_revision: u64,
    pub recovered_revision: u64,
    pub replayed_batches: usize,
    /// Bytes after the last valid record; dropped before the next append.
    pub discarded_bytes: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogRecord {
    rev: u64,
    ops: Vec<Mutation>,
}

struct LogWriter {
    path: PathBuf,
    valid_len: u64,
}

pub struct Store {
    dir: PathBuf,
    options: StoreOptions,
    current: RwLock<Arc<Catalog>>,
    writer: Mutex<LogWriter>,
    report: OpenReport,
}

fn snapshot_text(cat: &Catalog) -> String {
    let body = format!("revision {}\n{}", cat.revision(), export_json(cat));
    let sum = hex::encode(Sha256::digest(body.as_bytes()));
    format!("{MAGIC} {VERSION} {sum}\n{body}")
}

fn parse_snapshot(text: &str) -> Result<Catalog, StoreError> {
    let corrupt = |m: &str| StoreError::CorruptSnapshot(m.to_string());
    let (header, body) = text.split_once('\n').ok_or_else(|| corrupt("missing header line"))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.first() != Some(&MAGIC) || fields.len() != 3 {
        return Err(corrupt("bad header line"));
    }
    if fields[1] != VERSION {
        return Err(StoreError::VersionUnsupported(fields[1].to_string()));
    }
    if hex::encode(Sha256::digest(body.as_bytes())) != fields[2] {
        return Err(corrupt("checksum mismatch"));
    }
    let (rev_line, doc) = body.split_once('\n').ok_or_else(|| corrupt("missing revision line"))?;
    let revision: u64 = rev_line
        .strip_prefix("revision ")
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| corrupt("bad revision line"))?;
    let mut cat = import_json(doc).map_err(|e| StoreError::CorruptSnapshot(e.to_string()))?;
    cat.revision = revision;
    Ok(cat)
}

fn write_atomic(dir: &Path, name: &str, contents: &[u8], sync: bool) -> io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!("{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents)?;
        if sync {
            f.sync_all()?;
        }
    }
    fs::rename(&tmp, &target)?;
    if sync {
        // Persist the rename itself.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(target)
}

impl Store {
    /// Creates a store in an absent or empty directory.
    pub fn init(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::init_with(dir, StoreOptions::default())
    }

    pub fn init_with(dir: impl AsRef<Path>, options: StoreOptions) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        if dir.exists() {
            if fs::read_dir(dir)?.next().is_some() {
                return Err(StoreError::NotEmpty(dir.to_path_buf()));
            }
        } else {
            fs::create_dir_all(dir)?;
        }
        write_atomic(dir, SNAPSHOT_FILE, snapshot_text(&Catalog::new()).as_bytes(), options.sync)?;
        File::create(dir.join(LOG_FILE))?;
        Self::open_with(dir, options)
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        Self::open_with(dir, StoreOptions::default())
    }

    /// Loads the snapshot and replays every complete, valid log record after
    /// it. Replay stops at the first torn or invalid record; those bytes are
    /// truncated before the next append.
    pub fn open_with(dir: impl AsRef<Path>, options: StoreOptions) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        if !dir.is_dir() {
            return Err(StoreError::Missing(dir));
        }
        let snap_path = dir.join(SNAPSHOT_FILE);
        if !snap_path.is_file() {
            return Err(StoreError::NotAStore(dir));
        }
        let text = fs::read_to_string(&snap_path)
            .map_err(|e| StoreError::CorruptSnapshot(format!("unreadable snapshot: {e}")))?;
        let mut cat = parse_snapshot(&text)?;
        let mut report = OpenReport {
            snapshot_revision: cat.revision(),
            ..OpenReport::default()
        };

        let log_path = dir.join(LOG_FILE);
        let mut bytes = Vec::new();
        match File::open(&log_path) {
            Ok(mut f) => {
                f.read_to_end(&mut bytes)?;
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                File::create(&log_path)?;
            }
            Err(e) => return Err(e.into()),
        }
        let mut valid_len = 0usize;
        let mut offset = 0usize;
        while let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') {
            let line = &bytes[offset..offset + nl];
            let Ok(record) = serde_json::from_slice::<LogRecord>(line) else {
                break;
            };
            if record.rev > cat.revision() {
                if record.rev != cat.revision() + 1 {
                    break;
                }
                match cat.try_commit(&Batch { ops: record.ops }) {
                    Ok((next, _)) => {
                        cat = next;
                        report.replayed_batches += 1;
                    }
                    Err(_) => break,
                }
            }
            offset += nl + 1;
            valid_len = offset;
        }
        report.recovered_revision = cat.revision();
        report.discarded_bytes = (bytes.len() - valid_len) as u64;

        Ok(Self {
            dir,
            options,
            current: RwLock::new(Arc::new(cat)),
            writer: Mutex::new(LogWriter {
                path: log_path,
                valid_len: valid_len as u64,
            }),
            report,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn open_report(&self) -> &OpenReport {
        &self.report
    }

    /// Immutable view of the latest committed revision.
    pub fn view(&self) -> Arc<Catalog> {
        self.current.read().expect("catalog lock poisoned").clone()
    }

    pub fn revision(&self) -> u64 {
        self.view().revision()
    }

    /// Validates the batch against the current catalog, appends it to the
    /// log and publishes the result. On error nothing changes.
    pub fn commit(&self, batch: &Batch) -> Result<u64, StoreError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        let base = self.view();
        let (next, logged) = base.try_commit(batch)?;
        let record = LogRecord {
            rev: next.revision(),
            ops: logged.ops,
        };
        let mut line = serde_json::to_vec(&record).expect("log records always serialize");
        line.push(b'\n');

        let mut file = OpenOptions::new().write(true).open(&writer.path)?;
        if file.metadata()?.len() != writer.valid_len {
            file.set_len(writer.valid_len)?;
        }
        use std::io::{Seek, SeekFrom};
        file.seek(SeekFrom::Start(writer.valid_len))?;
        file.write_all(&line)?;
        if self.options.sync {
            file.sync_data()?;
        }
        writer.valid_len += line.len() as u64;

        let rev = next.revision();
        *self.current.write().expect("catalog lock poisoned") = Arc::new(next);
        Ok(rev)
    }

    pub fn delete(&self, id: ObjectId, mode: DeleteMode) -> Result<u64, StoreError> {
        let view = self.view();
        if !view.contains(id) {
            return Err(StoreError::NotFound(id));
        }
        let batch = match mode {
            DeleteMode::Restrict => {
                let referrers = view.referrers(id);
                if !referrers.is_empty() {
                    return Err(StoreError::ReferencedByOthers { id, referrers });
                }
                let mut b = Batch::new();
                b.delete(id);
                b
            }
            DeleteMode::Cascade => view.cascade_batch(id),
        };
        self.commit(&batch)
    }

    /// Writes a full snapshot atomically, then truncates the log.
    pub fn snapshot(&self) -> Result<PathBuf, StoreError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        let view = self.view();
        let path = write_atomic(&self.dir, SNAPSHOT_FILE, snapshot_text(&view).as_bytes(), self.options.sync)?;
        let file = OpenOptions::new().write(true).open(&writer.path)?;
        file.set_len(0)?;
        if self.options.sync {
            file.sync_all()?;
        }
        writer.valid_len = 0;
        Ok(path)
    }
}

/// Advisory lock on a store directory, released on drop.
pub struct StoreLock {
    _file: File,
}

impl StoreLock {
    /// Blocks until no other process holds any lock on the store.
    pub fn exclusive(dir: impl AsRef<Path>) -> io::Result<Self> {
        let file = Self::lock_file(dir.as_ref())?;
        file.lock()?;
        Ok(Self { _file: file })
    }

    /// Blocks until no other process holds the exclusive lock.
    pub fn shared(dir: impl AsRef<Path>) -> io::Result<Self> {
        let file = Self::lock_file(dir.as_ref())?;
        file.lock_shared()?;
        Ok(Self { _file: file })
    }

    fn lock_file(dir: &Path) -> io::Result<File> {
        OpenOptions::new().create(true).truncate(false).write(true).open(dir.join(LOCK_FILE))
    }
}
