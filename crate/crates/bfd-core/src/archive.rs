//! Directory-backed revision archive: per-project history of immutable
//! snapshots plus delivery tags. Stands in for the code archive system that
//! workspace commands layer policy on top of.
//!
//! Layout:
//!
//! ```text
//! <root>/blobs/<digest>
//! <root>/projects/<name>/revisions/<seq>.rec
//! <root>/projects/<name>/tags/<name>
//! <root>/store.lock
//! ```
//!
//! Records and blobs are published by write-temp-then-rename, so a crash
//! mid-commit never leaves a partially visible revision.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::Engine as _;
use chrono::{DateTime, SecondsFormat, Utc};

use crate::digest;
use crate::error::{BfdError, Result};
use crate::lock;

/// Immutable snapshot of a project's files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revision {
    pub project: String,
    pub seq: u64,
    pub message: String,
    pub timestamp: DateTime<Utc>,
    /// repo-relative path -> content digest
    pub snapshot: BTreeMap<String, String>,
}

/// Revision metadata as listed by `history`, with any tags pointing at it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionInfo {
    pub seq: u64,
    pub message: String,
    pub timestamp: DateTime<Utc>,
    pub tags: Vec<String>,
}

/// A delivery label of the form `Vxx-yy-zz`, bound to one revision forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag {
    pub name: String,
    pub project: String,
    pub seq: u64,
}

/// Parse a `Vxx-yy-zz` tag name into (major, minor, patch).
pub fn parse_tag_name(name: &str) -> Result<(u8, u8, u8)> {
    let bytes = name.as_bytes();
    let malformed = || BfdError::MalformedTag(name.to_string());
    if bytes.len() != 9 || bytes[0] != b'V' || bytes[3] != b'-' || bytes[6] != b'-' {
        return Err(malformed());
    }
    let field = |s: &str| -> Result<u8> {
        if s.len() == 2 && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(s.parse().unwrap())
        } else {
            Err(malformed())
        }
    };
    Ok((field(&name[1..3])?, field(&name[4..6])?, field(&name[7..9])?))
}

/// Format (major, minor, patch) as a tag name.
pub fn format_tag_name(major: u8, minor: u8, patch: u8) -> String {
    format!("V{:02}-{:02}-{:02}", major, minor, patch)
}

/// How a revision is referred to when checking out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RevRef {
    Head,
    Seq(u64),
    Tag(String),
}

impl fmt::Display for RevRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RevRef::Head => write!(f, "HEAD"),
            RevRef::Seq(n) => write!(f, "{n}"),
            RevRef::Tag(t) => write!(f, "{t}"),
        }
    }
}

/// Reject absolute paths, `.`/`..` segments, backslashes and empty segments.
pub fn validate_snapshot_path(path: &str) -> Result<()> {
    let bad = || BfdError::InvalidPath(path.to_string());
    if path.is_empty() || path.starts_with('/') || path.contains('\\') || path.contains('\0') {
        return Err(bad());
    }
    for seg in path.split('/') {
        if seg.is_empty() || seg == "." || seg == ".." {
            return Err(bad());
        }
    }
    Ok(())
}

/// A local archive store rooted at a directory.
#[derive(Debug, Clone)]
pub struct ArchiveStore {
    root: PathBuf,
    lock_timeout: Duration,
}

impl ArchiveStore {
    /// Open (creating on demand) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("blobs"))
            .map_err(|e| BfdError::io(format!("creating store at {}", root.display()), e))?;
        fs::create_dir_all(root.join("projects"))
            .map_err(|e| BfdError::io(format!("creating store at {}", root.display()), e))?;
        Ok(ArchiveStore {
            root,
            lock_timeout: lock::DEFAULT_TIMEOUT,
        })
    }

    pub fn with_lock_timeout(mut self, timeout: Duration) -> Self {
        self.lock_timeout = timeout;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lockfile(&self) -> PathBuf {
        self.root.join("store.lock")
    }

    fn project_dir(&self, project: &str) -> PathBuf {
        self.root.join("projects").join(project)
    }

    fn revision_path(&self, project: &str, seq: u64) -> PathBuf {
        self.project_dir(project).join("revisions").join(format!("{seq}.rec"))
    }

    fn blob_path(&self, digest: &str) -> PathBuf {
        self.root.join("blobs").join(digest)
    }

    /// Commit `files` as the next revision of `project`.
    pub fn commit(
        &self,
        project: &str,
        files: &BTreeMap<String, Vec<u8>>,
        message: &str,
    ) -> Result<Revision> {
        if message.is_empty() {
            return Err(BfdError::EmptyMessage);
        }
        crate::manifest::validate_project_name(project)?;
        for path in files.keys() {
            validate_snapshot_path(path)?;
        }

        let _guard = lock::acquire(&self.lockfile(), self.lock_timeout)?;

        let seq = self.max_seq(project)?.unwrap_or(0) + 1;
        let rev_dir = self.project_dir(project).join("revisions");
        fs::create_dir_all(&rev_dir)
            .map_err(|e| BfdError::io(format!("creating {}", rev_dir.display()), e))?;
        let tag_dir = self.project_dir(project).join("tags");
        fs::create_dir_all(&tag_dir)
            .map_err(|e| BfdError::io(format!("creating {}", tag_dir.display()), e))?;

        let mut snapshot = BTreeMap::new();
        for (path, bytes) in files {
            let d = digest::digest_bytes(bytes);
            self.write_blob(&d, bytes)?;
            snapshot.insert(path.clone(), d);
        }

        let revision = Revision {
            project: project.to_string(),
            seq,
            message: message.to_string(),
            timestamp: Utc::now(),
            snapshot,
        };
        let record = render_record(&revision);
        write_atomic(&self.revision_path(project, seq), record.as_bytes())?;
        Ok(revision)
    }

    fn write_blob(&self, digest: &str, bytes: &[u8]) -> Result<()> {
        let path = self.blob_path(digest);
        if path.exists() {
            return Ok(()); // deduplicated by digest
        }
        write_atomic(&path, bytes)
    }

    fn max_seq(&self, project: &str) -> Result<Option<u64>> {
        let rev_dir = self.project_dir(project).join("revisions");
        let entries = match fs::read_dir(&rev_dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(BfdError::io(format!("reading {}", rev_dir.display()), e)),
        };
        let mut max = None;
        for entry in entries {
            let entry = entry.map_err(|e| BfdError::io("reading revisions dir", e))?;
            if let Some(seq) = seq_from_filename(&entry.file_name().to_string_lossy()) {
                max = Some(max.map_or(seq, |m: u64| m.max(seq)));
            }
        }
        Ok(max)
    }

    fn project_exists(&self, project: &str) -> bool {
        self.project_dir(project).join("revisions").is_dir()
    }

    /// Resolve a ref to a concrete sequence number.
    pub fn resolve(&self, project: &str, rev: &RevRef) -> Result<u64> {
        if !self.project_exists(project) {
            return Err(BfdError::UnknownProject(project.to_string()));
        }
        match rev {
            RevRef::Head => self
                .max_seq(project)?
                .ok_or_else(|| BfdError::UnknownProject(project.to_string())),
            RevRef::Seq(n) => {
                if self.revision_path(project, *n).exists() {
                    Ok(*n)
                } else {
                    Err(BfdError::UnknownRef(n.to_string()))
                }
            }
            RevRef::Tag(name) => {
                let tag_path = self.project_dir(project).join("tags").join(name);
                let text = fs::read_to_string(&tag_path)
                    .map_err(|_| BfdError::UnknownRef(name.clone()))?;
                text.trim()
                    .parse::<u64>()
                    .map_err(|_| BfdError::UnknownRef(name.clone()))
            }
        }
    }

    /// Materialize the snapshot of the resolved revision as path -> bytes.
    pub fn checkout(&self, project: &str, rev: &RevRef) -> Result<BTreeMap<String, Vec<u8>>> {
        let revision = self.load_revision(project, self.resolve(project, rev)?)?;
        let mut out = BTreeMap::new();
        for (path, d) in &revision.snapshot {
            let bytes = fs::read(self.blob_path(d))
                .map_err(|_| BfdError::CorruptBlob(d.clone()))?;
            if digest::digest_bytes(&bytes) != *d {
                return Err(BfdError::CorruptBlob(d.clone()));
            }
            out.insert(path.clone(), bytes);
        }
        Ok(out)
    }

    /// Load the full revision record for `seq`.
    pub fn load_revision(&self, project: &str, seq: u64) -> Result<Revision> {
        let path = self.revision_path(project, seq);
        let text = fs::read_to_string(&path).map_err(|_| BfdError::UnknownSeq {
            project: project.to_string(),
            seq,
        })?;
        parse_record(project, seq, &text)
    }

    /// Digest of the raw record bytes; used to verify immutability.
    pub fn record_digest(&self, project: &str, seq: u64) -> Result<String> {
        let path = self.revision_path(project, seq);
        let bytes = fs::read(&path).map_err(|_| BfdError::UnknownSeq {
            project: project.to_string(),
            seq,
        })?;
        Ok(digest::digest_bytes(&bytes))
    }

    /// Create a delivery tag pointing at `seq`.
    pub fn tag(&self, project: &str, seq: u64, name: &str) -> Result<Tag> {
        parse_tag_name(name)?;
        let _guard = lock::acquire(&self.lockfile(), self.lock_timeout)?;
        if !self.project_exists(project) {
            return Err(BfdError::UnknownProject(project.to_string()));
        }
        if !self.revision_path(project, seq).exists() {
            return Err(BfdError::UnknownSeq {
                project: project.to_string(),
                seq,
            });
        }
        let tag_path = self.project_dir(project).join("tags").join(name);
        if tag_path.exists() {
            return Err(BfdError::DuplicateTag(name.to_string()));
        }
        write_atomic(&tag_path, format!("{seq}\n").as_bytes())?;
        Ok(Tag {
            name: name.to_string(),
            project: project.to_string(),
            seq,
        })
    }

    /// All tags of a project, sorted by name.
    pub fn tags(&self, project: &str) -> Result<Vec<Tag>> {
        if !self.project_exists(project) {
            return Err(BfdError::UnknownProject(project.to_string()));
        }
        let tag_dir = self.project_dir(project).join("tags");
        let mut tags = Vec::new();
        if let Ok(entries) = fs::read_dir(&tag_dir) {
            for entry in entries {
                let entry = entry.map_err(|e| BfdError::io("reading tags dir", e))?;
                let name = entry.file_name().to_string_lossy().to_string();
                let text = fs::read_to_string(entry.path())
                    .map_err(|e| BfdError::io(format!("reading tag {name}"), e))?;
                if let Ok(seq) = text.trim().parse::<u64>() {
                    tags.push(Tag {
                        name,
                        project: project.to_string(),
                        seq,
                    });
                }
            }
        }
        tags.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(tags)
    }

    /// Revision metadata ordered by seq ascending, tags attached.
    pub fn history(&self, project: &str) -> Result<Vec<RevisionInfo>> {
        if !self.project_exists(project) {
            return Err(BfdError::UnknownProject(project.to_string()));
        }
        let mut by_seq: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        let max = self.max_seq(project)?.unwrap_or(0);
        for seq in 1..=max {
            by_seq.insert(seq, Vec::new());
        }
        for tag in self.tags(project)? {
            by_seq.entry(tag.seq).or_default().push(tag.name);
        }
        let mut out = Vec::new();
        for (seq, tags) in by_seq {
            let rev = self.load_revision(project, seq)?;
            out.push(RevisionInfo {
                seq,
                message: rev.message,
                timestamp: rev.timestamp,
                tags,
            });
        }
        Ok(out)
    }

    /// Metadata of the newest revision, or `None` for an unknown project.
    pub fn latest(&self, project: &str) -> Result<Option<RevisionInfo>> {
        if !self.project_exists(project) {
            return Ok(None);
        }
        let Some(seq) = self.max_seq(project)? else {
            return Ok(None);
        };
        let rev = self.load_revision(project, seq)?;
        let tags = self
            .tags(project)?
            .into_iter()
            .filter(|t| t.seq == seq)
            .map(|t| t.name)
            .collect();
        Ok(Some(RevisionInfo {
            seq,
            message: rev.message,
            timestamp: rev.timestamp,
            tags,
        }))
    }

    /// Names of all projects with at least one revision.
    pub fn projects(&self) -> Result<Vec<String>> {
        let dir = self.root.join("projects");
        let mut names = Vec::new();
        if let Ok(entries) = fs::read_dir(&dir) {
            for entry in entries {
                let entry = entry.map_err(|e| BfdError::io("reading projects dir", e))?;
                let name = entry.file_name().to_string_lossy().to_string();
                if self.project_exists(&name) {
                    names.push(name);
                }
            }
        }
        names.sort();
        Ok(names)
    }

    /// Number of distinct blobs in the store.
    pub fn blob_count(&self) -> Result<usize> {
        let dir = self.root.join("blobs");
        let entries =
            fs::read_dir(&dir).map_err(|e| BfdError::io(format!("reading {}", dir.display()), e))?;
        Ok(entries.count())
    }
}

fn seq_from_filename(name: &str) -> Option<u64> {
    name.strip_suffix(".rec")?.parse().ok()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().expect("target path has a parent");
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        path.file_name().unwrap().to_string_lossy()
    ));
    let mut f = fs::File::create(&tmp)
        .map_err(|e| BfdError::io(format!("creating {}", tmp.display()), e))?;
    f.write_all(bytes)
        .map_err(|e| BfdError::io(format!("writing {}", tmp.display()), e))?;
    f.sync_all()
        .map_err(|e| BfdError::io(format!("syncing {}", tmp.display()), e))?;
    fs::rename(&tmp, path)
        .map_err(|e| BfdError::io(format!("publishing {}", path.display()), e))?;
    Ok(())
}

/// Render the line-oriented revision record. File lines are sorted by path;
/// the ordering is bit-exact so the digest-of-record is stable.
fn render_record(rev: &Revision) -> String {
    let mut out = String::new();
    out.push_str(&format!("seq: {}\n", rev.seq));
    out.push_str(&format!("message: {}\n", encode_message(&rev.message)));
    out.push_str(&format!(
        "timestamp: {}\n",
        rev.timestamp.to_rfc3339_opts(SecondsFormat::Micros, true)
    ));
    out.push_str(&format!("algorithm: {}\n", digest::ALGORITHM));
    for (path, d) in &rev.snapshot {
        out.push_str(&format!("file: {path} {d}\n"));
    }
    out
}

// Multiline (or ambiguous) messages are base64-encoded behind a marker so the
// record stays line-oriented.
fn encode_message(message: &str) -> String {
    if message.contains('\n') || message.contains('\r') || message.starts_with("base64:") {
        format!(
            "base64:{}",
            base64::engine::general_purpose::STANDARD.encode(message)
        )
    } else {
        message.to_string()
    }
}

fn decode_message(value: &str) -> Result<String> {
    if let Some(encoded) = value.strip_prefix("base64:") {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(encoded)
            .map_err(|_| BfdError::CorruptBlob("bad base64 message".into()))?;
        String::from_utf8(bytes).map_err(|_| BfdError::CorruptBlob("non-UTF-8 message".into()))
    } else {
        Ok(value.to_string())
    }
}

fn parse_record(project: &str, seq: u64, text: &str) -> Result<Revision> {
    let corrupt = |what: &str| BfdError::CorruptBlob(format!("revision {project}/{seq}: {what}"));
    let mut message = None;
    let mut timestamp = None;
    let mut recorded_seq = None;
    let mut snapshot = BTreeMap::new();
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("seq: ") {
            recorded_seq = Some(v.parse::<u64>().map_err(|_| corrupt("bad seq"))?);
        } else if let Some(v) = line.strip_prefix("message: ") {
            message = Some(decode_message(v)?);
        } else if line == "message:" {
            message = Some(String::new());
        } else if let Some(v) = line.strip_prefix("timestamp: ") {
            let t = DateTime::parse_from_rfc3339(v).map_err(|_| corrupt("bad timestamp"))?;
            timestamp = Some(t.with_timezone(&Utc));
        } else if line.strip_prefix("algorithm: ").is_some() {
            // self-describing digest name; only sha256 is produced today
        } else if let Some(v) = line.strip_prefix("file: ") {
            let (path, d) = v.rsplit_once(' ').ok_or_else(|| corrupt("bad file line"))?;
            snapshot.insert(path.to_string(), d.to_string());
        } else {
            return Err(corrupt("unknown record line"));
        }
    }
    if recorded_seq != Some(seq) {
        return Err(corrupt("seq mismatch"));
    }
    Ok(Revision {
        project: project.to_string(),
        seq,
        message: message.ok_or_else(|| corrupt("missing message"))?,
        timestamp: timestamp.ok_or_else(|| corrupt("missing timestamp"))?,
        snapshot,
    })
}
