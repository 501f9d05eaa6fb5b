//! Workspace lifecycle: init, checkout, uadd, status, archive, deliver and
//! dispose, layered as policy on top of the archive store.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::archive::{self, ArchiveStore, RevRef, Revision, Tag};
use crate::digest;
use crate::error::{BfdError, Result};
use crate::lock::{self, LockGuard};

pub const WORKSPACE_REC: &str = ".bfd/workspace.rec";

/// Paths never tracked or reported: generated outputs, bfd metadata and
/// editor backups.
pub fn is_ignored(rel_path: &str) -> bool {
    let mut segments = rel_path.split('/');
    let first = segments.next().unwrap_or("");
    if first == "build" || first == "lib" || first == ".bfd" {
        return true;
    }
    rel_path.split('/').any(|s| s == ".bfd") || rel_path.ends_with('~')
}

/// Partition of a project's working files relative to its base revision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeStatus {
    pub project: String,
    pub added: Vec<String>,
    pub modified: Vec<String>,
    pub missing: Vec<String>,
    pub unknown: Vec<String>,
}

impl ChangeStatus {
    pub fn is_clean(&self) -> bool {
        self.added.is_empty()
            && self.modified.is_empty()
            && self.missing.is_empty()
            && self.unknown.is_empty()
    }

    /// Clean apart from untracked files; enough to archive, not to deliver.
    pub fn is_archived(&self) -> bool {
        self.added.is_empty() && self.modified.is_empty() && self.missing.is_empty()
    }

    pub fn problem_lines(&self) -> String {
        let mut lines = Vec::new();
        for (kind, paths) in [
            ("added", &self.added),
            ("modified", &self.modified),
            ("missing", &self.missing),
            ("unknown", &self.unknown),
        ] {
            for p in paths {
                lines.push(format!("  {kind}: {p}"));
            }
        }
        lines.join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bump {
    Major,
    Minor,
    Patch,
}

/// Next delivery tag for a project. No tags yet always yields `V01-00-00`;
/// otherwise the max existing version is bumped at the requested level with
/// lower fields zeroed.
pub fn next_tag(existing: &[Tag], bump: Bump) -> Result<String> {
    let mut max = None;
    for tag in existing {
        let v = archive::parse_tag_name(&tag.name)?;
        if max.is_none_or(|m| v > m) {
            max = Some(v);
        }
    }
    let Some((major, minor, patch)) = max else {
        return Ok("V01-00-00".to_string());
    };
    let overflow = |field: &str| BfdError::TagOverflow(field.to_string());
    let next = match bump {
        Bump::Major => (major.checked_add(1).filter(|v| *v <= 99).ok_or_else(|| overflow("major"))?, 0, 0),
        Bump::Minor => (major, minor.checked_add(1).filter(|v| *v <= 99).ok_or_else(|| overflow("minor"))?, 0),
        Bump::Patch => (major, minor, patch.checked_add(1).filter(|v| *v <= 99).ok_or_else(|| overflow("patch"))?),
    };
    Ok(archive::format_tag_name(next.0, next.1, next.2))
}

// Exact user-visible strings for delivery and disposal.
pub fn deliver_prompt(project: &str, tag: &str) -> String {
    format!("Are you sure you want to deliver \"{project}\" with tag {tag}\ny/n: ")
}

pub fn delivered_message(project: &str, tag: &str) -> String {
    format!("{tag} of \"{project}\" has been delivered.\n")
}

pub fn dispose_all_prompt() -> String {
    "Are you sure you want to dispose of the entire workspace?\ny/n: ".to_string()
}

pub fn dispose_report(project: &str) -> String {
    format!(
        "No files have been added to, or modified in, \"{project}\".\nThere are no unknown files in, \"{project}\".\nDisposed of \"{project}\"\n"
    )
}

pub fn dispose_all_trailer() -> String {
    "Disposed of workspace files...anything left is your own problem.\n".to_string()
}

/// An initialized workspace directory with its registered projects.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    store_path: PathBuf,
    tools_path: PathBuf,
    /// project name -> base revision seq (None before the first archive)
    projects: BTreeMap<String, Option<u64>>,
}

impl Workspace {
    /// Initialize `dir` as a workspace: build file, setup scripts and the
    /// tools link. `dir` must be empty apart from dotfiles.
    pub fn init(dir: &Path, tools_path: &Path, store_path: &Path) -> Result<Workspace> {
        let read_err = |e| BfdError::io(format!("reading {}", dir.display()), e);
        for entry in fs::read_dir(dir).map_err(read_err)? {
            let entry = entry.map_err(|e| BfdError::io("reading workspace dir", e))?;
            if !entry.file_name().to_string_lossy().starts_with('.') {
                return Err(BfdError::NotEmpty(dir.to_path_buf()));
            }
        }
        if !tools_path.is_dir() {
            return Err(BfdError::MissingTools(tools_path.to_path_buf()));
        }
        let root = dir
            .canonicalize()
            .map_err(|e| BfdError::io(format!("resolving {}", dir.display()), e))?;
        let tools_path = tools_path
            .canonicalize()
            .map_err(|e| BfdError::io(format!("resolving {}", tools_path.display()), e))?;

        let ws = Workspace {
            root: root.clone(),
            store_path: store_path.to_path_buf(),
            tools_path: tools_path.clone(),
            projects: BTreeMap::new(),
        };
        fs::create_dir_all(root.join(".bfd"))
            .map_err(|e| BfdError::io("creating .bfd", e))?;
        ws.save()?;
        ws.write_buildfile()?;
        ws.write_setup_scripts()?;
        #[cfg(unix)]
        std::os::unix::fs::symlink(&tools_path, root.join("tools"))
            .map_err(|e| BfdError::io("creating tools link", e))?;
        Ok(ws)
    }

    /// Open the workspace rooted at `dir`.
    pub fn open(dir: &Path) -> Result<Workspace> {
        let rec = dir.join(WORKSPACE_REC);
        let text = fs::read_to_string(&rec).map_err(|_| BfdError::NoWorkspace)?;
        let mut store_path = None;
        let mut tools_path = None;
        let mut projects = BTreeMap::new();
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("store: ") {
                store_path = Some(PathBuf::from(v));
            } else if let Some(v) = line.strip_prefix("tools: ") {
                tools_path = Some(PathBuf::from(v));
            } else if let Some(v) = line.strip_prefix("project: ") {
                let (name, base) = v.rsplit_once(' ').ok_or(BfdError::NoWorkspace)?;
                let base = if base == "none" {
                    None
                } else {
                    Some(base.parse().map_err(|_| BfdError::NoWorkspace)?)
                };
                projects.insert(name.to_string(), base);
            }
        }
        Ok(Workspace {
            root: dir
                .canonicalize()
                .map_err(|e| BfdError::io(format!("resolving {}", dir.display()), e))?,
            store_path: store_path.ok_or(BfdError::NoWorkspace)?,
            tools_path: tools_path.ok_or(BfdError::NoWorkspace)?,
            projects,
        })
    }

    /// Walk up from `start` to the nearest directory containing the
    /// workspace record.
    pub fn discover(start: &Path) -> Result<Workspace> {
        let mut dir = Some(start);
        while let Some(d) = dir {
            if d.join(WORKSPACE_REC).is_file() {
                return Workspace::open(d);
            }
            dir = d.parent();
        }
        Err(BfdError::NoWorkspace)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tools_path(&self) -> &Path {
        &self.tools_path
    }

    pub fn store_path(&self) -> &Path {
        &self.store_path
    }

    pub fn store(&self) -> Result<ArchiveStore> {
        ArchiveStore::open(&self.store_path)
    }

    pub fn project_dir(&self, project: &str) -> PathBuf {
        self.root.join(project)
    }

    pub fn projects(&self) -> impl Iterator<Item = &str> {
        self.projects.keys().map(String::as_str)
    }

    pub fn base_seq(&self, project: &str) -> Result<Option<u64>> {
        self.projects
            .get(project)
            .copied()
            .ok_or_else(|| BfdError::NotCheckedOut(project.to_string()))
    }

    /// Serialize commands in this workspace against concurrent invocations.
    pub fn command_lock(&self) -> Result<LockGuard> {
        lock::acquire(&self.root.join(".bfd/ws.lock"), lock::DEFAULT_TIMEOUT)
    }

    fn save(&self) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("store: {}\n", self.store_path.display()));
        out.push_str(&format!("tools: {}\n", self.tools_path.display()));
        for (name, base) in &self.projects {
            match base {
                Some(seq) => out.push_str(&format!("project: {name} {seq}\n")),
                None => out.push_str(&format!("project: {name} none\n")),
            }
        }
        let path = self.root.join(WORKSPACE_REC);
        fs::write(&path, out).map_err(|e| BfdError::io(format!("writing {}", path.display()), e))
    }

    /// Workspace build file: call-down list of registered projects.
    fn write_buildfile(&self) -> Result<()> {
        let mut out = String::new();
        if self.projects.is_empty() {
            out.push_str("<workspace/>\n");
        } else {
            out.push_str("<workspace>\n");
            for name in self.projects.keys() {
                out.push_str(&format!("    <project name=\"{name}\"/>\n"));
            }
            out.push_str("</workspace>\n");
        }
        let path = self.root.join("build.xml");
        fs::write(&path, out).map_err(|e| BfdError::io(format!("writing {}", path.display()), e))
    }

    fn write_setup_scripts(&self) -> Result<()> {
        let sh = format!(
            "# Environment for this bfd workspace; source at the start of a session.\nWORKSPACE_ROOT=\"{root}\"\nTOOLS_PATH=\"{tools}\"\nPATH=\"$TOOLS_PATH/bin:$PATH\"\nexport WORKSPACE_ROOT TOOLS_PATH PATH\n",
            root = self.root.display(),
            tools = self.tools_path.display()
        );
        let csh = format!(
            "# Environment for this bfd workspace; source at the start of a session.\nsetenv WORKSPACE_ROOT \"{root}\"\nsetenv TOOLS_PATH \"{tools}\"\nsetenv PATH \"{tools}/bin:$PATH\"\n",
            root = self.root.display(),
            tools = self.tools_path.display()
        );
        fs::write(self.root.join("setup.sh"), sh)
            .map_err(|e| BfdError::io("writing setup.sh", e))?;
        fs::write(self.root.join("setup.csh"), csh)
            .map_err(|e| BfdError::io("writing setup.csh", e))
    }

    /// `bfd co <project>`: materialize HEAD, or register an empty project if
    /// the archive has never heard of it.
    pub fn checkout(&mut self, project: &str) -> Result<ChangeStatus> {
        crate::manifest::validate_project_name(project)?;
        if self.projects.contains_key(project) {
            return Err(BfdError::AlreadyCheckedOut(project.to_string()));
        }
        let store = self.store()?;
        let dir = self.project_dir(project);
        let base = match store.latest(project)? {
            Some(info) => {
                let files = store.checkout(project, &RevRef::Seq(info.seq))?;
                for (rel, bytes) in &files {
                    let path = dir.join(rel);
                    if let Some(parent) = path.parent() {
                        fs::create_dir_all(parent)
                            .map_err(|e| BfdError::io(format!("creating {}", parent.display()), e))?;
                    }
                    fs::write(&path, bytes)
                        .map_err(|e| BfdError::io(format!("writing {}", path.display()), e))?;
                }
                Some(info.seq)
            }
            None => None,
        };
        fs::create_dir_all(&dir)
            .map_err(|e| BfdError::io(format!("creating {}", dir.display()), e))?;
        self.projects.insert(project.to_string(), base);
        self.save()?;
        self.write_buildfile()?;
        self.status(project)
    }

    fn added_file(&self, project: &str) -> PathBuf {
        self.root.join(".bfd").join(format!("{project}.added"))
    }

    fn added_set(&self, project: &str) -> Result<BTreeSet<String>> {
        match fs::read_to_string(self.added_file(project)) {
            Ok(text) => Ok(text.lines().map(str::to_string).collect()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeSet::new()),
            Err(e) => Err(BfdError::io("reading added list", e)),
        }
    }

    fn save_added_set(&self, project: &str, added: &BTreeSet<String>) -> Result<()> {
        let path = self.added_file(project);
        if added.is_empty() {
            if path.exists() {
                fs::remove_file(&path).map_err(|e| BfdError::io("clearing added list", e))?;
            }
            return Ok(());
        }
        let mut out = String::new();
        for p in added {
            out.push_str(p);
            out.push('\n');
        }
        fs::write(&path, out).map_err(|e| BfdError::io("writing added list", e))
    }

    fn base_snapshot(&self, project: &str) -> Result<BTreeMap<String, String>> {
        match self.base_seq(project)? {
            Some(seq) => Ok(self.store()?.load_revision(project, seq)?.snapshot),
            None => Ok(BTreeMap::new()),
        }
    }

    fn disk_files(&self, project: &str) -> Result<BTreeMap<String, PathBuf>> {
        let dir = self.project_dir(project);
        let mut out = BTreeMap::new();
        for entry in WalkDir::new(&dir).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                BfdError::io(
                    format!("walking {}", dir.display()),
                    e.into_io_error().unwrap_or_else(|| std::io::Error::other("walk error")),
                )
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(&dir)
                .expect("walked path is under project dir")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if !is_ignored(&rel) {
                out.insert(rel, entry.into_path());
            }
        }
        Ok(out)
    }

    /// Compare working files against the base revision by digest.
    pub fn status(&self, project: &str) -> Result<ChangeStatus> {
        let base = self.base_snapshot(project)?;
        let added_set = self.added_set(project)?;
        let disk = self.disk_files(project)?;

        let mut status = ChangeStatus {
            project: project.to_string(),
            added: Vec::new(),
            modified: Vec::new(),
            missing: Vec::new(),
            unknown: Vec::new(),
        };
        for (rel, path) in &disk {
            if let Some(base_digest) = base.get(rel) {
                let bytes = fs::read(path)
                    .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
                if digest::digest_bytes(&bytes) != *base_digest {
                    status.modified.push(rel.clone());
                }
            } else if added_set.contains(rel) {
                status.added.push(rel.clone());
            } else {
                status.unknown.push(rel.clone());
            }
        }
        for rel in base.keys().chain(added_set.iter()) {
            if !disk.contains_key(rel) {
                status.missing.push(rel.clone());
            }
        }
        status.missing.sort();
        status.missing.dedup();
        Ok(status)
    }

    /// Track every unknown file. Idempotent.
    pub fn uadd(&self, project: &str) -> Result<ChangeStatus> {
        let status = self.status(project)?;
        if !status.unknown.is_empty() {
            let mut added = self.added_set(project)?;
            added.extend(status.unknown.iter().cloned());
            self.save_added_set(project, &added)?;
        }
        self.status(project)
    }

    /// Commit the tracked tree as a new revision and advance the base.
    pub fn archive(&mut self, project: &str, message: &str, allow_empty: bool) -> Result<Revision> {
        if message.is_empty() {
            return Err(BfdError::EmptyMessage);
        }
        let status = self.status(project)?;
        if status.added.is_empty() && status.modified.is_empty() && !allow_empty {
            return Err(BfdError::NothingToArchive(project.to_string()));
        }
        let base = self.base_snapshot(project)?;
        let added_set = self.added_set(project)?;
        let disk = self.disk_files(project)?;
        let mut files = BTreeMap::new();
        for (rel, path) in &disk {
            if base.contains_key(rel) || added_set.contains(rel) {
                let bytes = fs::read(path)
                    .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
                files.insert(rel.clone(), bytes);
            }
        }
        let revision = self.store()?.commit(project, &files, message)?;
        self.projects.insert(project.to_string(), Some(revision.seq));
        self.save()?;
        self.save_added_set(project, &BTreeSet::new())?;
        Ok(revision)
    }

    /// Everything `deliver` checks before the y/n prompt: registration, a
    /// fully archived tree, the unit-test gate, and the tag to be created.
    pub fn deliver_check(&self, project: &str, bump: Bump, force: bool) -> Result<String> {
        let base = self.base_seq(project)?;
        let status = self.status(project)?;
        if !status.is_clean() {
            return Err(BfdError::DirtyWorkspace(status.problem_lines()));
        }
        if base.is_none() {
            return Err(BfdError::NothingToArchive(project.to_string()));
        }
        if !force {
            let result = crate::build::run_target(self, project, crate::build::Target::Test)?;
            if !result.success {
                let summary = result
                    .report
                    .map(|r| {
                        let t = r.totals();
                        format!("{} of {} tests failed", t.failed + t.errored, t.run)
                    })
                    .unwrap_or_else(|| "test target failed".to_string());
                return Err(BfdError::TestsFailed(summary));
            }
        }
        next_tag(&self.store()?.tags(project).unwrap_or_default(), bump)
    }

    /// Create the delivery tag on the base revision.
    pub fn deliver_commit(&self, project: &str, tag_name: &str) -> Result<Tag> {
        let seq = self
            .base_seq(project)?
            .ok_or_else(|| BfdError::NothingToArchive(project.to_string()))?;
        self.store()?.tag(project, seq, tag_name)
    }

    /// Remove a fully clean project from the workspace. Returns the report
    /// text; refuses (removing nothing) if anything is unarchived.
    pub fn dispose(&mut self, project: &str) -> Result<String> {
        let status = self.status(project)?;
        if !status.is_clean() {
            return Err(BfdError::UncleanProject {
                project: project.to_string(),
                problems: status.problem_lines(),
            });
        }
        let dir = self.project_dir(project);
        fs::remove_dir_all(&dir)
            .map_err(|e| BfdError::io(format!("removing {}", dir.display()), e))?;
        let _ = fs::remove_file(self.added_file(project));
        self.projects.remove(project);
        self.save()?;
        self.write_buildfile()?;
        Ok(dispose_report(project))
    }

    /// Check that every registered project is fully clean; report problems
    /// for all of them at once.
    pub fn dispose_all_check(&self) -> Result<()> {
        let mut problems = Vec::new();
        for project in self.projects.keys() {
            let status = self.status(project)?;
            if !status.is_clean() {
                problems.push(format!("\"{project}\":\n{}", status.problem_lines()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(BfdError::DirtyWorkspace(problems.join("\n")))
        }
    }

    /// Dispose every project, then the workspace files themselves. Returns
    /// the accumulated report text ending with the trailer line.
    pub fn dispose_all(mut self) -> Result<String> {
        self.dispose_all_check()?;
        let mut out = String::new();
        for project in self.projects.keys().cloned().collect::<Vec<_>>() {
            out.push_str(&self.dispose(&project)?);
        }
        for name in ["build.xml", "setup.sh", "setup.csh", "tools"] {
            let path = self.root.join(name);
            if path.is_symlink() || path.is_file() {
                fs::remove_file(&path)
                    .map_err(|e| BfdError::io(format!("removing {}", path.display()), e))?;
            }
        }
        let lib = self.root.join("lib");
        if lib.is_dir() {
            fs::remove_dir_all(&lib).map_err(|e| BfdError::io("removing lib", e))?;
        }
        fs::remove_dir_all(self.root.join(".bfd"))
            .map_err(|e| BfdError::io("removing .bfd", e))?;
        out.push_str(&dispose_all_trailer());
        Ok(out)
    }
}
