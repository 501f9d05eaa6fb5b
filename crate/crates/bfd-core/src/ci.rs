//! Continuous integration: poll the archive, build when something new has
//! been committed and no build is running, fire scheduled builds, and keep a
//! status board of configurations against recent builds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use chrono::{DateTime, NaiveDate, NaiveTime, Timelike, Utc};

use crate::archive::ArchiveStore;
use crate::build::{self, Target, Toolchain};
use crate::error::{BfdError, Result};
use crate::workspace::Workspace;

/// How many failed-build scratch trees are retained for debugging.
const RETAINED_FAILURES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiConfiguration {
    pub name: String,
    pub toolchain: String,
    pub target: Target,
}

#[derive(Debug, Clone)]
pub struct CiConfig {
    pub store_path: PathBuf,
    pub tools_path: PathBuf,
    /// Holds state, logs, scratch checkouts and the board.
    pub work_dir: PathBuf,
    /// Watched projects; empty means every project in the store.
    pub projects: Vec<String>,
    pub poll_interval: u64,
    /// Daily build times, UTC.
    pub schedules: Vec<NaiveTime>,
    pub configurations: Vec<CiConfiguration>,
}

impl CiConfig {
    /// Parse the line-oriented config file. `base` anchors relative paths
    /// and the default work dir.
    pub fn parse(text: &str, base: &Path) -> Result<CiConfig> {
        let mut store_path = None;
        let mut tools_path = None;
        let mut work_dir = None;
        let mut projects = Vec::new();
        let mut poll_interval = 5u64;
        let mut schedules = Vec::new();
        let mut configurations: Vec<CiConfiguration> = Vec::new();
        let bad = |msg: &str| BfdError::InvalidConfig(msg.to_string());
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(": ")
                .ok_or_else(|| bad(&format!("bad line: {line}")))?;
            match key {
                "store" => store_path = Some(base.join(value)),
                "tools" => tools_path = Some(base.join(value)),
                "work" => work_dir = Some(base.join(value)),
                "project" => projects.push(value.to_string()),
                "poll-interval" => {
                    poll_interval = value
                        .parse()
                        .map_err(|_| bad("poll-interval must be an integer"))?;
                }
                "schedule" => {
                    let time = NaiveTime::parse_from_str(value, "%H:%M")
                        .map_err(|_| bad(&format!("bad schedule time: {value}")))?;
                    schedules.push(time);
                }
                "configuration" => {
                    let mut parts = value.split_whitespace();
                    let (Some(name), Some(toolchain), Some(target), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(bad("configuration wants: <name> <toolchain> <target>"));
                    };
                    if configurations.iter().any(|c| c.name == name) {
                        return Err(bad(&format!("duplicate configuration \"{name}\"")));
                    }
                    configurations.push(CiConfiguration {
                        name: name.to_string(),
                        toolchain: toolchain.to_string(),
                        target: Target::parse(target)?,
                    });
                }
                other => return Err(bad(&format!("unknown key \"{other}\""))),
            }
        }
        if poll_interval < 1 {
            return Err(bad("poll-interval must be >= 1"));
        }
        if configurations.is_empty() {
            configurations.push(CiConfiguration {
                name: "default".to_string(),
                toolchain: "sim".to_string(),
                target: Target::Test,
            });
        }
        Ok(CiConfig {
            store_path: store_path.ok_or_else(|| bad("missing store:"))?,
            tools_path: tools_path.ok_or_else(|| bad("missing tools:"))?,
            work_dir: work_dir.unwrap_or_else(|| base.join("ci")),
            projects,
            poll_interval,
            schedules,
            configurations,
        })
    }

    pub fn load(path: &Path) -> Result<CiConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn state_path(&self) -> PathBuf {
        self.work_dir.join("state.rec")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Commit,
    Schedule,
    Manual,
}

impl Trigger {
    fn as_str(self) -> &'static str {
        match self {
            Trigger::Commit => "commit",
            Trigger::Schedule => "schedule",
            Trigger::Manual => "manual",
        }
    }

    fn parse(s: &str) -> Option<Trigger> {
        match s {
            "commit" => Some(Trigger::Commit),
            "schedule" => Some(Trigger::Schedule),
            "manual" => Some(Trigger::Manual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiBuildRecord {
    pub id: u64,
    pub trigger: Trigger,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    /// configuration name -> passed
    pub results: Vec<(String, bool)>,
}

impl CiBuildRecord {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|(_, ok)| *ok)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CiState {
    pub last_built: BTreeMap<String, u64>,
    pub in_progress: bool,
    pub history: Vec<CiBuildRecord>,
    /// schedule index -> last day it fired
    pub last_scheduled: BTreeMap<usize, NaiveDate>,
    /// in-progress transitions, for instrumentation; not persisted
    pub transitions: Vec<bool>,
}

impl CiState {
    pub fn load(path: &Path) -> Result<CiState> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(CiState::default())
            }
            Err(e) => return Err(BfdError::io(format!("reading {}", path.display()), e)),
        };
        let corrupt = || BfdError::InvalidConfig(format!("corrupt state file {}", path.display()));
        let mut state = CiState::default();
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("last-built: ") {
                let (name, seq) = v.rsplit_once(' ').ok_or_else(corrupt)?;
                state
                    .last_built
                    .insert(name.to_string(), seq.parse().map_err(|_| corrupt())?);
            } else if let Some(v) = line.strip_prefix("scheduled: ") {
                let (idx, day) = v.split_once(' ').ok_or_else(corrupt)?;
                state.last_scheduled.insert(
                    idx.parse().map_err(|_| corrupt())?,
                    day.parse().map_err(|_| corrupt())?,
                );
            } else if let Some(v) = line.strip_prefix("build: ") {
                let mut parts = v.split(' ');
                let id = parts.next().ok_or_else(corrupt)?.parse().map_err(|_| corrupt())?;
                let trigger =
                    Trigger::parse(parts.next().ok_or_else(corrupt)?).ok_or_else(corrupt)?;
                let parse_time = |s: &str| {
                    DateTime::parse_from_rfc3339(s)
                        .map(|t| t.with_timezone(&Utc))
                        .map_err(|_| corrupt())
                };
                let started = parse_time(parts.next().ok_or_else(corrupt)?)?;
                let finished = parse_time(parts.next().ok_or_else(corrupt)?)?;
                let mut results = Vec::new();
                for pair in parts {
                    let (name, outcome) = pair.rsplit_once('=').ok_or_else(corrupt)?;
                    results.push((name.to_string(), outcome == "ok"));
                }
                state.history.push(CiBuildRecord {
                    id,
                    trigger,
                    started,
                    finished,
                    results,
                });
            }
        }
        Ok(state)
    }

    /// Atomic rewrite: the state file never holds a half-written update.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (name, seq) in &self.last_built {
            out.push_str(&format!("last-built: {name} {seq}\n"));
        }
        for (idx, day) in &self.last_scheduled {
            out.push_str(&format!("scheduled: {idx} {day}\n"));
        }
        for build in &self.history {
            out.push_str(&format!(
                "build: {} {} {} {}",
                build.id,
                build.trigger.as_str(),
                build.started.to_rfc3339(),
                build.finished.to_rfc3339()
            ));
            for (name, ok) in &build.results {
                out.push_str(&format!(" {name}={}", if *ok { "ok" } else { "fail" }));
            }
            out.push('\n');
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .map_err(|e| BfdError::io(format!("creating {}", parent.display()), e))?;
        }
        let tmp = path.with_extension("rec.tmp");
        fs::write(&tmp, out).map_err(|e| BfdError::io(format!("writing {}", tmp.display()), e))?;
        fs::rename(&tmp, path)
            .map_err(|e| BfdError::io(format!("publishing {}", path.display()), e))
    }
}

fn open_store(config: &CiConfig) -> Result<ArchiveStore> {
    ArchiveStore::open(&config.store_path)
        .map_err(|e| BfdError::StoreUnavailable(e.to_string()))
}

fn watched_projects(config: &CiConfig, store: &ArchiveStore) -> Result<Vec<String>> {
    if config.projects.is_empty() {
        store
            .projects()
            .map_err(|e| BfdError::StoreUnavailable(e.to_string()))
    } else {
        Ok(config.projects.clone())
    }
}

/// One poll: trigger a build iff some watched project has a newer revision
/// than the last one built and no build is in progress. Returns whether a
/// build ran.
pub fn ci_poll_once(config: &CiConfig, state: &mut CiState) -> Result<bool> {
    if state.in_progress {
        return Ok(false);
    }
    let store = open_store(config)?;
    let watched = watched_projects(config, &store)?;
    let mut changed = false;
    for project in &watched {
        if let Some(info) = store
            .latest(project)
            .map_err(|e| BfdError::StoreUnavailable(e.to_string()))?
        {
            if info.seq > state.last_built.get(project).copied().unwrap_or(0) {
                changed = true;
            }
        }
    }
    if !changed {
        return Ok(false);
    }
    run_build(config, state, Trigger::Commit)?;
    Ok(true)
}

/// One daemon iteration at simulated or real time `now`: fire any due
/// scheduled build, then poll for commits.
pub fn ci_tick(config: &CiConfig, state: &mut CiState, now: DateTime<Utc>) -> Result<bool> {
    let mut built = false;
    for (idx, time) in config.schedules.iter().enumerate() {
        let today = now.date_naive();
        let due = now.time() >= *time
            && state.last_scheduled.get(&idx) != Some(&today)
            && !state.in_progress;
        if due {
            state.last_scheduled.insert(idx, today);
            run_build(config, state, Trigger::Schedule)?;
            built = true;
        }
    }
    Ok(ci_poll_once(config, state)? || built)
}

/// Check out everything into a scratch workspace and run every configuration
/// against it. Commits that land while this runs are coalesced into the next
/// poll's build.
fn run_build(config: &CiConfig, state: &mut CiState, trigger: Trigger) -> Result<()> {
    state.in_progress = true;
    state.transitions.push(true);
    let started = Utc::now();
    let id = state.history.last().map(|b| b.id).unwrap_or(0) + 1;

    let store = open_store(config)?;
    let watched = watched_projects(config, &store)?;
    // seqs observed at trigger time; later commits belong to the next build
    let mut observed = BTreeMap::new();
    for project in &watched {
        if let Some(info) = store
            .latest(project)
            .map_err(|e| BfdError::StoreUnavailable(e.to_string()))?
        {
            observed.insert(project.clone(), info.seq);
        }
    }

    let scratch = config.work_dir.join("scratch").join(format!("build-{id}"));
    fs::create_dir_all(&scratch)
        .map_err(|e| BfdError::io(format!("creating {}", scratch.display()), e))?;
    let mut ws = Workspace::init(&scratch, &config.tools_path, &config.store_path)?;
    for project in observed.keys() {
        ws.checkout(project)?;
    }

    let log_dir = config.work_dir.join("logs").join(id.to_string());
    fs::create_dir_all(&log_dir)
        .map_err(|e| BfdError::io(format!("creating {}", log_dir.display()), e))?;
    let mut results = Vec::new();
    for cfg in &config.configurations {
        let (passed, log) = match Toolchain::load(&config.tools_path, &cfg.toolchain)
            .and_then(|tc| build::run_workspace_target(&ws, cfg.target, true, Some(&tc)))
        {
            Ok(build_results) => {
                let passed = build_results.iter().all(|r| r.success);
                let log = build_results
                    .iter()
                    .map(|r| format!("=== {} ===\n{}", r.project, r.log))
                    .collect::<String>();
                (passed, log)
            }
            Err(e) => (false, format!("build error: {e}\nBUILD FAILED\n")),
        };
        fs::write(log_dir.join(format!("{}.log", cfg.name)), log)
            .map_err(|e| BfdError::io("writing build log", e))?;
        results.push((cfg.name.clone(), passed));
    }

    let passed = results.iter().all(|(_, ok)| *ok);
    let record = CiBuildRecord {
        id,
        trigger,
        started,
        finished: Utc::now(),
        results,
    };
    state.history.push(record);
    for (project, seq) in observed {
        state.last_built.insert(project, seq);
    }
    state.in_progress = false;
    state.transitions.push(false);
    state.save(&config.state_path())?;

    if passed {
        let _ = fs::remove_dir_all(&scratch);
    }
    prune_failed_scratch(config, state);
    Ok(())
}

// Keep scratch trees only for the most recent failed builds.
fn prune_failed_scratch(config: &CiConfig, state: &CiState) {
    let keep: std::collections::BTreeSet<u64> = state
        .history
        .iter()
        .rev()
        .filter(|b| !b.passed())
        .take(RETAINED_FAILURES)
        .map(|b| b.id)
        .collect();
    let scratch_root = config.work_dir.join("scratch");
    let Ok(entries) = fs::read_dir(&scratch_root) else {
        return;
    };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(id) = name.strip_prefix("build-").and_then(|s| s.parse::<u64>().ok()) {
            if !keep.contains(&id) {
                let _ = fs::remove_dir_all(entry.path());
            }
        }
    }
}

/// Run the poll loop until `shutdown` is set; finishes the current iteration
/// and flushes state before returning.
pub fn ci_run_daemon(config: &CiConfig, shutdown: &AtomicBool) -> Result<()> {
    let mut state = CiState::load(&config.state_path())?;
    while !shutdown.load(Ordering::SeqCst) {
        match ci_tick(config, &mut state, Utc::now()) {
            Ok(_) => {}
            Err(BfdError::StoreUnavailable(msg)) => {
                eprintln!("ci: store unavailable, will retry: {msg}");
            }
            Err(e) => return Err(e),
        }
        write_status_board(config, &state)?;
        // sleep in short slices so shutdown stays responsive
        let deadline = std::time::Instant::now() + Duration::from_secs(config.poll_interval);
        while std::time::Instant::now() < deadline && !shutdown.load(Ordering::SeqCst) {
            std::thread::sleep(Duration::from_millis(50));
        }
    }
    state.save(&config.state_path())
}

/// The text status board: configurations down, recent builds across.
pub fn ci_status_board_text(config: &CiConfig, state: &CiState) -> String {
    let recent: Vec<&CiBuildRecord> = state.history.iter().rev().take(10).collect();
    let mut out = String::new();
    out.push_str("configuration");
    for build in &recent {
        out.push_str(&format!("\tbuild-{}", build.id));
    }
    out.push('\n');
    for cfg in &config.configurations {
        out.push_str(&cfg.name);
        for build in &recent {
            let cell = match build.results.iter().find(|(n, _)| *n == cfg.name) {
                Some((_, true)) => "pass",
                Some((_, false)) => "FAIL",
                None => "-",
            };
            out.push_str(&format!("\t{cell}"));
        }
        out.push('\n');
    }
    out
}

/// Render `board.html` under the CI work dir; cells link to build logs.
pub fn write_status_board(config: &CiConfig, state: &CiState) -> Result<PathBuf> {
    let recent: Vec<&CiBuildRecord> = state.history.iter().rev().take(10).collect();
    let mut html = String::from("<html><head><title>Build status</title></head><body>\n<h1>Build status</h1>\n<table border=\"1\">\n<tr><th>configuration</th>");
    for build in &recent {
        html.push_str(&format!(
            "<th>build-{} ({}, {}:{:02})</th>",
            build.id,
            build.trigger.as_str(),
            build.started.hour(),
            build.started.minute()
        ));
    }
    html.push_str("</tr>\n");
    for cfg in &config.configurations {
        html.push_str(&format!("<tr><td>{}</td>", cfg.name));
        for build in &recent {
            let cell = match build.results.iter().find(|(n, _)| *n == cfg.name) {
                Some((_, ok)) => format!(
                    "<a href=\"logs/{}/{}.log\">{}</a>",
                    build.id,
                    cfg.name,
                    if *ok { "pass" } else { "<b style=\"color:red\">FAIL</b>" }
                ),
                None => "-".to_string(),
            };
            html.push_str(&format!("<td>{cell}</td>"));
        }
        html.push_str("</tr>\n");
    }
    html.push_str("</table>\n</body></html>\n");
    fs::create_dir_all(&config.work_dir)
        .map_err(|e| BfdError::io("creating ci work dir", e))?;
    let path = config.work_dir.join("board.html");
    fs::write(&path, html).map_err(|e| BfdError::io("writing board.html", e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::collections::BTreeMap as Map;

    struct Fixture {
        _dir: tempfile::TempDir,
        config: CiConfig,
        store: ArchiveStore,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("tools/bin")).unwrap();
        let store = ArchiveStore::open(dir.path().join("store")).unwrap();
        let config = CiConfig {
            store_path: dir.path().join("store"),
            tools_path: dir.path().join("tools"),
            work_dir: dir.path().join("ci"),
            projects: Vec::new(),
            poll_interval: 1,
            schedules: Vec::new(),
            configurations: vec![CiConfiguration {
                name: "default".into(),
                toolchain: "sim".into(),
                target: Target::Test,
            }],
        };
        Fixture {
            _dir: dir,
            config,
            store,
        }
    }

    fn commit(store: &ArchiveStore, project: &str, content: &str) {
        let files: Map<String, Vec<u8>> = [
            (
                "build.xml".to_string(),
                format!("<build project=\"{project}\" toolchain=\"sim\"/>\n").into_bytes(),
            ),
            (
                "project.xml".to_string(),
                format!("<project name=\"{project}\" package=\"a\"/>\n").into_bytes(),
            ),
            ("src/a/Thing.sim".to_string(), content.as_bytes().to_vec()),
            (
                "src/a/test/ThingTest.sim".to_string(),
                b"assert 1 == 1\n".to_vec(),
            ),
        ]
        .into();
        store.commit(project, &files, "change").unwrap();
    }

    #[test]
    fn commit_triggers_exactly_one_build() {
        let f = fixture();
        let mut state = CiState::default();
        assert!(!ci_poll_once(&f.config, &mut state).unwrap());
        commit(&f.store, "p", "x\n");
        assert!(ci_poll_once(&f.config, &mut state).unwrap());
        assert_eq!(state.history.len(), 1);
        assert!(state.history[0].passed());
        assert_eq!(state.history[0].trigger, Trigger::Commit);
        // idle afterwards
        assert!(!ci_poll_once(&f.config, &mut state).unwrap());
        assert_eq!(state.history.len(), 1);
    }

    #[test]
    fn burst_of_commits_coalesces_into_one_followup_build() {
        let f = fixture();
        let mut state = CiState::default();
        commit(&f.store, "p", "v1\n");
        ci_poll_once(&f.config, &mut state).unwrap();
        // three commits land while the first build was running
        for v in ["v2\n", "v3\n", "v4\n"] {
            commit(&f.store, "p", v);
        }
        assert!(ci_poll_once(&f.config, &mut state).unwrap());
        assert_eq!(state.history.len(), 2);
        assert_eq!(state.last_built["p"], 4);
        assert!(!ci_poll_once(&f.config, &mut state).unwrap());
    }

    #[test]
    fn restart_resumes_without_duplicate_build() {
        let f = fixture();
        let mut state = CiState::default();
        commit(&f.store, "p", "x\n");
        ci_poll_once(&f.config, &mut state).unwrap();
        // state was persisted by run_build; a fresh daemon picks it up
        let mut resumed = CiState::load(&f.config.state_path()).unwrap();
        assert_eq!(resumed.history.len(), 1);
        assert!(!ci_poll_once(&f.config, &mut resumed).unwrap());
        assert_eq!(resumed.history.len(), 1);
    }

    #[test]
    fn one_scheduled_build_per_simulated_day() {
        let mut f = fixture();
        f.config.schedules = vec![NaiveTime::from_hms_opt(0, 0, 0).unwrap()];
        let mut state = CiState::default();
        let mut builds = 0;
        for day in 1..=3 {
            for hour in [0, 6, 12, 18] {
                let now = Utc.with_ymd_and_hms(2024, 1, day, hour, 0, 0).unwrap();
                if ci_tick(&f.config, &mut state, now).unwrap() {
                    builds += 1;
                }
            }
        }
        assert_eq!(builds, 3);
        assert_eq!(state.history.len(), 3);
        assert!(state
            .history
            .iter()
            .all(|b| b.trigger == Trigger::Schedule));
    }

    #[test]
    fn single_builder_transitions_never_overlap() {
        let f = fixture();
        let mut state = CiState::default();
        commit(&f.store, "p", "x\n");
        ci_poll_once(&f.config, &mut state).unwrap();
        commit(&f.store, "p", "y\n");
        ci_poll_once(&f.config, &mut state).unwrap();
        // transitions strictly alternate true/false
        assert_eq!(state.transitions, vec![true, false, true, false]);
    }

    #[test]
    fn failed_build_log_and_scratch_retained() {
        let f = fixture();
        let mut state = CiState::default();
        let files: Map<String, Vec<u8>> = [
            (
                "build.xml".to_string(),
                b"<build project=\"p\" toolchain=\"sim\"/>\n".to_vec(),
            ),
            ("src/a/Broken.sim".to_string(), b"oops {\n".to_vec()),
        ]
        .into();
        f.store.commit("p", &files, "broken").unwrap();
        ci_poll_once(&f.config, &mut state).unwrap();
        assert!(!state.history[0].passed());
        let log = fs::read_to_string(f.config.work_dir.join("logs/1/default.log")).unwrap();
        assert!(log.trim_end().ends_with("Total time: 0 seconds"));
        assert!(log.contains("BUILD FAILED"));
        assert!(f.config.work_dir.join("scratch/build-1").is_dir());
    }

    #[test]
    fn board_grid_shape() {
        let mut f = fixture();
        f.config.configurations.push(CiConfiguration {
            name: "docs".into(),
            toolchain: "sim".into(),
            target: Target::Docs,
        });
        let mut state = CiState::default();
        for v in ["a\n", "b\n", "c\n"] {
            commit(&f.store, "p", v);
            ci_poll_once(&f.config, &mut state).unwrap();
        }
        let text = ci_status_board_text(&f.config, &state);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 configurations
        assert_eq!(lines[0].split('\t').count(), 4); // label + 3 builds
        let board = write_status_board(&f.config, &state).unwrap();
        let html = fs::read_to_string(board).unwrap();
        assert!(html.contains("logs/1/default.log"));
    }

    #[test]
    fn empty_history_board_is_header_only() {
        let f = fixture();
        let text = ci_status_board_text(&f.config, &CiState::default());
        assert_eq!(text.lines().count(), 2); // header + one configuration row
        assert!(text.starts_with("configuration\n"));
    }

    #[test]
    fn config_parse_and_validation() {
        let base = Path::new("/base");
        let config = CiConfig::parse(
            "store: store\ntools: tools\npoll-interval: 7\nschedule: 00:30\nproject: alpha\nconfiguration: quick sim test\nconfiguration: full sim docs\n",
            base,
        )
        .unwrap();
        assert_eq!(config.store_path, base.join("store"));
        assert_eq!(config.poll_interval, 7);
        assert_eq!(config.schedules.len(), 1);
        assert_eq!(config.projects, vec!["alpha"]);
        assert_eq!(config.configurations.len(), 2);

        for bad in [
            "tools: t\n",                                     // missing store
            "store: s\ntools: t\npoll-interval: 0\n",         // interval too small
            "store: s\ntools: t\nconfiguration: a sim test\nconfiguration: a sim docs\n",
            "store: s\ntools: t\nschedule: 25:00\n",
            "store: s\ntools: t\nwat: x\n",
        ] {
            assert!(CiConfig::parse(bad, base).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn state_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.rec");
        let mut state = CiState::default();
        state.last_built.insert("p".into(), 4);
        state.last_scheduled.insert(0, "2024-01-02".parse().unwrap());
        state.history.push(CiBuildRecord {
            id: 1,
            trigger: Trigger::Schedule,
            started: Utc.with_ymd_and_hms(2024, 1, 2, 0, 0, 0).unwrap(),
            finished: Utc.with_ymd_and_hms(2024, 1, 2, 0, 1, 0).unwrap(),
            results: vec![("default".into(), true), ("docs".into(), false)],
        });
        state.save(&path).unwrap();
        let loaded = CiState::load(&path).unwrap();
        assert_eq!(loaded.last_built, state.last_built);
        assert_eq!(loaded.last_scheduled, state.last_scheduled);
        assert_eq!(loaded.history, state.history);
    }
}
