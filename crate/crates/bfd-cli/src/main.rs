//! `bfd` — the workspace, build, scaffolding and CI command-line surface.
//!
//! Exit codes: 0 success, 1 user declined a prompt, 2 usage error,
//! 3 operational error.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use bfd_core::build::{self, Target};
use bfd_core::ci::{self, CiConfig, CiState};
use bfd_core::error::BfdError;
use bfd_core::workspace::{
    deliver_prompt, delivered_message, dispose_all_prompt, Bump, Workspace,
};
use bfd_core::error::Result;
use bfd_core::scaffold;

const EXIT_OK: i32 = 0;
const EXIT_DECLINED: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_ERROR: i32 = 3;

const SYNOPSIS: &str = "usage: bfd <init|co|uadd|status|archive|deliver|dispose|build|create|tarball|ci|history> [options]";

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(dispatch(&args));
}

fn usage(msg: &str) -> i32 {
    eprintln!("bfd: {msg}");
    eprintln!("{SYNOPSIS}");
    EXIT_USAGE
}

fn fail(e: &BfdError) -> i32 {
    eprintln!("bfd: {e}");
    EXIT_ERROR
}

fn dispatch(args: &[String]) -> i32 {
    let Some((cmd, rest)) = args.split_first() else {
        return usage("missing subcommand");
    };
    let result = match cmd.as_str() {
        "init" => cmd_init(rest),
        "co" => cmd_co(rest),
        "uadd" => cmd_uadd(rest),
        "status" => cmd_status(rest),
        "archive" => cmd_archive(rest),
        "deliver" => cmd_deliver(rest),
        "dispose" => cmd_dispose(rest),
        "build" => cmd_build(rest),
        "create" => cmd_create(rest),
        "tarball" => cmd_tarball(rest),
        "ci" => cmd_ci(rest),
        "history" => cmd_history(rest),
        other => return usage(&format!("unknown subcommand \"{other}\"")),
    };
    match result {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

/// Split `args` into flags (with their values) and positionals.
struct Parsed {
    positionals: Vec<String>,
    flags: Vec<(String, Option<String>)>,
}

/// `takes_value` lists the flags that consume the following argument.
fn parse_args(args: &[String], takes_value: &[&str]) -> std::result::Result<Parsed, String> {
    let mut positionals = Vec::new();
    let mut flags = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        if arg.starts_with('-') && arg.len() > 1 {
            if takes_value.contains(&arg.as_str()) {
                let value = it
                    .next()
                    .ok_or_else(|| format!("{arg} requires a value"))?;
                flags.push((arg.clone(), Some(value.clone())));
            } else {
                flags.push((arg.clone(), None));
            }
        } else {
            positionals.push(arg.clone());
        }
    }
    Ok(Parsed { positionals, flags })
}

impl Parsed {
    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(f, _)| f == name)
    }

    fn value(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(f, _)| f == name)
            .and_then(|(_, v)| v.as_deref())
    }

    /// Error text for the first flag not in `allowed`, if any.
    fn unknown_flag(&self, allowed: &[&str]) -> Option<String> {
        self.flags
            .iter()
            .find(|(f, _)| !allowed.contains(&f.as_str()))
            .map(|(f, _)| format!("unknown flag {f}"))
    }
}

fn cwd() -> Result<PathBuf> {
    std::env::current_dir().map_err(|e| BfdError::io("getting working directory", e))
}

/// WORKSPACE_ROOT when set, else walk up from the working directory.
fn open_workspace() -> Result<Workspace> {
    if let Ok(root) = std::env::var("WORKSPACE_ROOT") {
        Workspace::open(Path::new(&root))
    } else {
        Workspace::discover(&cwd()?)
    }
}

/// Ask `prompt` (already ending in `y/n: `) and read one answer line.
/// Returns Ok(true) for `y`, Ok(false) for `n`; anything else (including
/// closed stdin) is a usage error reported by the caller.
fn confirm(prompt: &str) -> std::result::Result<bool, String> {
    print!("{prompt}");
    std::io::stdout().flush().ok();
    let mut line = String::new();
    match std::io::stdin().lock().read_line(&mut line) {
        Ok(0) => Err("no answer on stdin (use -y to assume yes)".to_string()),
        Ok(_) => match line.trim() {
            "y" => Ok(true),
            "n" => Ok(false),
            other => Err(format!("expected y or n, got \"{other}\"")),
        },
        Err(e) => Err(format!("reading stdin: {e}")),
    }
}

fn cmd_init(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &["--store"]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["--store"]) {
        return Ok(usage(&msg));
    }
    let [tools] = parsed.positionals.as_slice() else {
        return Ok(usage("init wants: bfd init <tools> [--store <path>]"));
    };
    let tools = PathBuf::from(tools);
    let store = parsed
        .value("--store")
        .map(PathBuf::from)
        .unwrap_or_else(|| tools.join("store"));
    // make sure the store exists so later commands can open it
    bfd_core::ArchiveStore::open(&store)?;
    let ws = Workspace::init(&cwd()?, &tools, &store)?;
    println!("Initialized workspace in {}", ws.root().display());
    println!("Source setup.sh (or setup.csh) to begin a session.");
    Ok(EXIT_OK)
}

fn one_project(args: &[String], synopsis: &str) -> std::result::Result<String, i32> {
    let parsed = parse_args(args, &[]).map_err(|m| usage(&m))?;
    if let Some(msg) = parsed.unknown_flag(&[]) {
        return Err(usage(&msg));
    }
    match parsed.positionals.as_slice() {
        [p] => Ok(p.clone()),
        _ => Err(usage(synopsis)),
    }
}

fn cmd_co(args: &[String]) -> Result<i32> {
    let project = match one_project(args, "co wants: bfd co <project>") {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let mut ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    ws.checkout(&project)?;
    match ws.base_seq(&project)? {
        Some(seq) => println!("Checked out \"{project}\" at revision {seq}."),
        None => println!("Registered new project \"{project}\"."),
    }
    Ok(EXIT_OK)
}

fn cmd_uadd(args: &[String]) -> Result<i32> {
    let project = match one_project(args, "uadd wants: bfd uadd <project>") {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    let status = ws.uadd(&project)?;
    for path in &status.added {
        println!("added: {path}");
    }
    Ok(EXIT_OK)
}

fn print_status(ws: &Workspace, project: &str) -> Result<()> {
    let status = ws.status(project)?;
    if status.is_clean() {
        println!("\"{project}\" is clean.");
    } else {
        println!("\"{project}\":");
        println!("{}", status.problem_lines());
    }
    Ok(())
}

fn cmd_status(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &[]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&[]) {
        return Ok(usage(&msg));
    }
    let ws = open_workspace()?;
    match parsed.positionals.as_slice() {
        [] => {
            for project in ws.projects().map(|p| p.to_string()).collect::<Vec<_>>() {
                print_status(&ws, &project)?;
            }
            Ok(EXIT_OK)
        }
        [project] => {
            print_status(&ws, project)?;
            Ok(EXIT_OK)
        }
        _ => Ok(usage("status wants: bfd status [<project>]")),
    }
}

fn cmd_archive(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &["-m"]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["-m"]) {
        return Ok(usage(&msg));
    }
    let Some(message) = parsed.value("-m") else {
        return Ok(usage("archive wants: bfd archive -m <message> <project>"));
    };
    let [project] = parsed.positionals.as_slice() else {
        return Ok(usage("archive wants: bfd archive -m <message> <project>"));
    };
    let mut ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    let revision = ws.archive(project, message, false)?;
    println!("Archived \"{project}\" as revision {}.", revision.seq);
    Ok(EXIT_OK)
}

fn cmd_deliver(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &[]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    // -j (junit gate) is accepted for familiarity; the test gate always runs
    // unless --force.
    if let Some(msg) = parsed.unknown_flag(&["-j", "--minor", "--major", "--force", "-y"]) {
        return Ok(usage(&msg));
    }
    let [project] = parsed.positionals.as_slice() else {
        return Ok(usage(
            "deliver wants: bfd deliver [-j] [--minor|--major] [--force] [-y] <project>",
        ));
    };
    let bump = match (parsed.has("--major"), parsed.has("--minor")) {
        (true, true) => return Ok(usage("--major and --minor are mutually exclusive")),
        (true, false) => Bump::Major,
        (false, true) => Bump::Minor,
        (false, false) => Bump::Patch,
    };
    let ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    let tag = ws.deliver_check(project, bump, parsed.has("--force"))?;
    if !parsed.has("-y") {
        match confirm(&deliver_prompt(project, &tag)) {
            Ok(true) => {}
            Ok(false) => return Ok(EXIT_DECLINED),
            Err(msg) => return Ok(usage(&msg)),
        }
    }
    ws.deliver_commit(project, &tag)?;
    print!("{}", delivered_message(project, &tag));
    Ok(EXIT_OK)
}

fn cmd_dispose(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &[]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["-y"]) {
        return Ok(usage(&msg));
    }
    let mut ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    match parsed.positionals.as_slice() {
        [project] => {
            let report = ws.dispose(project)?;
            print!("{report}");
            Ok(EXIT_OK)
        }
        [] => {
            if !parsed.has("-y") {
                match confirm(&dispose_all_prompt()) {
                    Ok(true) => {}
                    Ok(false) => return Ok(EXIT_DECLINED),
                    Err(msg) => return Ok(usage(&msg)),
                }
            }
            drop(_lock); // dispose_all removes .bfd including the lock dir
            let report = ws.dispose_all()?;
            print!("{report}");
            Ok(EXIT_OK)
        }
        _ => Ok(usage("dispose wants: bfd dispose [<project>] [-y]")),
    }
}

fn cmd_build(args: &[String]) -> Result<i32> {
    let parsed = match parse_args(args, &["--jobs"]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["--jobs", "--keep-going"]) {
        return Ok(usage(&msg));
    }
    // --jobs is accepted for interface stability; execution is sequential.
    if let Some(jobs) = parsed.value("--jobs") {
        if jobs.parse::<u32>().map(|n| n < 1).unwrap_or(true) {
            return Ok(usage("--jobs wants a positive integer"));
        }
    }
    // first positional is a target when it names one, else a project
    let (target, project) = match parsed.positionals.as_slice() {
        [] => (Target::Lib, None),
        [one] => match Target::parse(one) {
            Ok(t) => (t, None),
            Err(_) => (Target::Lib, Some(one.clone())),
        },
        [t, p] => (Target::parse(t)?, Some(p.clone())),
        _ => return Ok(usage("build wants: bfd build [<target>] [<project>] [--jobs N] [--keep-going]")),
    };
    let ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    let results = match project {
        Some(p) => vec![build::run_target(&ws, &p, target)?],
        None => build::run_workspace_target(&ws, target, parsed.has("--keep-going"), None)?,
    };
    let mut all_ok = true;
    for result in &results {
        print!("{}", result.log);
        all_ok &= result.success;
    }
    if all_ok {
        Ok(EXIT_OK)
    } else {
        Err(match target {
            Target::Compile | Target::Lib => BfdError::CompileFailed("build failed".into()),
            _ => BfdError::TestsFailed("build failed".into()),
        })
    }
}

/// Project for scaffolding commands: explicit --project, else the first path
/// component of the working directory below the workspace root.
fn scaffold_project(ws: &Workspace, parsed: &Parsed) -> std::result::Result<String, i32> {
    if let Some(p) = parsed.value("--project") {
        return Ok(p.to_string());
    }
    let dir = match cwd().and_then(|d| {
        d.canonicalize()
            .map_err(|e| BfdError::io("resolving working directory", e))
    }) {
        Ok(d) => d,
        Err(e) => return Err(fail(&e)),
    };
    if let Ok(rel) = dir.strip_prefix(ws.root()) {
        if let Some(first) = rel.components().next() {
            let name = first.as_os_str().to_string_lossy().to_string();
            if ws.projects().any(|p| p == name) {
                return Ok(name);
            }
        }
    }
    Err(usage("not inside a project; pass --project <name>"))
}

fn cmd_create(args: &[String]) -> Result<i32> {
    let Some((kind, rest)) = args.split_first() else {
        return Ok(usage("create wants: bfd create project|class|interface|package …"));
    };
    let parsed = match parse_args(rest, &["--package", "--project"]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["--package", "--project"]) {
        return Ok(usage(&msg));
    }
    let ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    match kind.as_str() {
        "project" => {
            let [name] = parsed.positionals.as_slice() else {
                return Ok(usage("create project wants: bfd create project <name> --package <pkg>"));
            };
            let Some(package) = parsed.value("--package") else {
                return Ok(usage("create project wants: bfd create project <name> --package <pkg>"));
            };
            let created = scaffold::create_project(&ws, name, package)?;
            for path in created {
                println!("created: {}", relative_to_root(&ws, &path));
            }
        }
        "class" | "interface" => {
            let [name] = parsed.positionals.as_slice() else {
                return Ok(usage(&format!(
                    "create {kind} wants: bfd create {kind} <Name> [--project <p>]"
                )));
            };
            let project = match scaffold_project(&ws, &parsed) {
                Ok(p) => p,
                Err(code) => return Ok(code),
            };
            let (source, test) = if kind == "class" {
                scaffold::create_class(&ws, &project, name)?
            } else {
                scaffold::create_interface(&ws, &project, name)?
            };
            println!("created: {}", relative_to_root(&ws, &source));
            println!("created: {}", relative_to_root(&ws, &test));
        }
        "package" => {
            let [subpackage] = parsed.positionals.as_slice() else {
                return Ok(usage("create package wants: bfd create package <subpackage> [--project <p>]"));
            };
            let project = match scaffold_project(&ws, &parsed) {
                Ok(p) => p,
                Err(code) => return Ok(code),
            };
            let dir = scaffold::create_package(&ws, &project, subpackage)?;
            println!("created: {}", relative_to_root(&ws, &dir));
        }
        other => return Ok(usage(&format!("unknown create kind \"{other}\""))),
    }
    Ok(EXIT_OK)
}

fn relative_to_root(ws: &Workspace, path: &Path) -> String {
    path.strip_prefix(ws.root())
        .unwrap_or(path)
        .display()
        .to_string()
}

fn cmd_tarball(args: &[String]) -> Result<i32> {
    let name = match one_project(args, "tarball wants: bfd tarball <name>") {
        Ok(n) => n,
        Err(code) => return Ok(code),
    };
    let ws = open_workspace()?;
    let _lock = ws.command_lock()?;
    let path = build::make_deploy_tarball(&ws, &name)?;
    println!("wrote {}", relative_to_root(&ws, &path));
    Ok(EXIT_OK)
}

fn cmd_history(args: &[String]) -> Result<i32> {
    let project = match one_project(args, "history wants: bfd history <project>") {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let ws = open_workspace()?;
    let store = ws.store()?;
    let tags = store.tags(&project)?;
    for info in store.history(&project)? {
        let tag_names: Vec<&str> = tags
            .iter()
            .filter(|t| t.seq == info.seq)
            .map(|t| t.name.as_str())
            .collect();
        let suffix = if tag_names.is_empty() {
            String::new()
        } else {
            format!(" [{}]", tag_names.join(", "))
        };
        println!(
            "{}  {}  {}{}",
            info.seq,
            info.timestamp.format("%Y-%m-%d %H:%M:%S"),
            info.message.lines().next().unwrap_or(""),
            suffix
        );
    }
    Ok(EXIT_OK)
}

static SHUTDOWN: AtomicBool = AtomicBool::new(false);

extern "C" fn handle_shutdown(_sig: libc::c_int) {
    SHUTDOWN.store(true, Ordering::SeqCst);
}

fn install_signal_handlers() {
    unsafe {
        libc::signal(libc::SIGINT, handle_shutdown as *const () as libc::sighandler_t);
        libc::signal(libc::SIGTERM, handle_shutdown as *const () as libc::sighandler_t);
    }
}

fn ci_config(parsed: &Parsed) -> Result<CiConfig> {
    let path = parsed.value("--config").unwrap_or("ci.rec");
    CiConfig::load(Path::new(path))
}

fn cmd_ci(args: &[String]) -> Result<i32> {
    let Some((verb, rest)) = args.split_first() else {
        return Ok(usage("ci wants: bfd ci run|poll|status [--config <path>]"));
    };
    let parsed = match parse_args(rest, &["--config"]) {
        Ok(p) => p,
        Err(msg) => return Ok(usage(&msg)),
    };
    if let Some(msg) = parsed.unknown_flag(&["--config"]) {
        return Ok(usage(&msg));
    }
    if !parsed.positionals.is_empty() {
        return Ok(usage("ci wants: bfd ci run|poll|status [--config <path>]"));
    }
    let config = ci_config(&parsed)?;
    match verb.as_str() {
        "run" => {
            install_signal_handlers();
            ci::ci_run_daemon(&config, &SHUTDOWN)?;
            Ok(EXIT_OK)
        }
        "poll" => {
            let mut state = CiState::load(&config.state_path())?;
            let built = ci::ci_poll_once(&config, &mut state)?;
            state.save(&config.state_path())?;
            ci::write_status_board(&config, &state)?;
            println!("{}", if built { "build triggered" } else { "nothing to build" });
            Ok(EXIT_OK)
        }
        "status" => {
            let state = CiState::load(&config.state_path())?;
            print!("{}", ci::ci_status_board_text(&config, &state));
            Ok(EXIT_OK)
        }
        other => Ok(usage(&format!("unknown ci verb \"{other}\""))),
    }
}
