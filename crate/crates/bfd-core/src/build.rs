//! Target engine: the per-project public targets, workspace call-down
//! builds, deterministic bundles and deployment archives, and the pluggable
//! toolchain layer with the built-in `sim` toolchain.

use std::collections::BTreeSet;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use walkdir::WalkDir;

use crate::digest;
use crate::error::{BfdError, Result};
use crate::manifest::{self, ProjectManifest};
use crate::testreport::{self, TestSuiteReport};
use crate::workspace::Workspace;

/// Public targets of every project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Target {
    Clean,
    Compile,
    Lib,
    Test,
    Report,
    Docs,
    Apidocs,
}

impl Target {
    pub fn parse(name: &str) -> Result<Target> {
        Ok(match name {
            "clean" => Target::Clean,
            "compile" => Target::Compile,
            "lib" => Target::Lib,
            "test" => Target::Test,
            "report" => Target::Report,
            "docs" => Target::Docs,
            "apidocs" => Target::Apidocs,
            other => return Err(BfdError::UnknownTarget(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Target::Clean => "clean",
            Target::Compile => "compile",
            Target::Lib => "lib",
            Target::Test => "test",
            Target::Report => "report",
            Target::Docs => "docs",
            Target::Apidocs => "apidocs",
        }
    }

    /// Prerequisites, run (memoized) before the target itself.
    pub fn prerequisites(self) -> &'static [Target] {
        match self {
            Target::Lib => &[Target::Compile],
            Target::Test => &[Target::Lib],
            Target::Report => &[Target::Test],
            Target::Docs => &[Target::Apidocs, Target::Report],
            Target::Clean | Target::Compile | Target::Apidocs => &[],
        }
    }
}

/// A compile diagnostic from the sim toolchain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// The sim "compiler": every source must have balanced `()`, `{}` and `[]`
/// outside string literals and must end with a newline.
pub fn sim_compile(text: &str) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    let mut stack: Vec<(char, usize, usize)> = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = text.chars().peekable();
    let mut in_string = false;
    let mut string_open = (0usize, 0usize);
    while let Some(c) = chars.next() {
        if in_string {
            match c {
                '\\' => {
                    if chars.next().is_some() {
                        col += 2;
                        continue;
                    }
                }
                '"' => in_string = false,
                _ => {}
            }
        } else {
            match c {
                '"' => {
                    in_string = true;
                    string_open = (line, col);
                }
                '(' | '{' | '[' => stack.push((c, line, col)),
                ')' | ']' | '}' => {
                    let expected = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match stack.pop() {
                        Some((open, _, _)) if open == expected => {}
                        Some((open, ol, oc)) => diagnostics.push(Diagnostic {
                            line,
                            col,
                            message: format!("mismatched '{c}' closing '{open}' opened at {ol}:{oc}"),
                        }),
                        None => diagnostics.push(Diagnostic {
                            line,
                            col,
                            message: format!("unmatched '{c}'"),
                        }),
                    }
                }
                _ => {}
            }
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    if in_string {
        diagnostics.push(Diagnostic {
            line: string_open.0,
            col: string_open.1,
            message: "unterminated string literal".to_string(),
        });
    }
    for (open, ol, oc) in stack {
        diagnostics.push(Diagnostic {
            line: ol,
            col: oc,
            message: format!("unclosed '{open}'"),
        });
    }
    if !text.is_empty() && !text.ends_with('\n') {
        diagnostics.push(Diagnostic {
            line,
            col,
            message: "file does not end with a newline".to_string(),
        });
    }
    diagnostics
}

/// How sources compile and tests run. `sim` is built in; external toolchains
/// are configured in `<tools>/toolchains/<id>.rec`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Toolchain {
    Sim,
    External {
        id: String,
        source_ext: String,
        compile_cmd: String,
        test_cmd: String,
    },
}

impl Toolchain {
    pub fn load(tools_path: &Path, id: &str) -> Result<Toolchain> {
        if id == "sim" {
            return Ok(Toolchain::Sim);
        }
        let path = tools_path.join("toolchains").join(format!("{id}.rec"));
        let text = fs::read_to_string(&path)
            .map_err(|_| BfdError::UnknownToolchain(id.to_string()))?;
        let mut source_ext = None;
        let mut compile_cmd = None;
        let mut test_cmd = None;
        for raw in text.lines() {
            if let Some(v) = raw.strip_prefix("source-ext: ") {
                source_ext = Some(v.trim().to_string());
            } else if let Some(v) = raw.strip_prefix("compile: ") {
                compile_cmd = Some(v.trim().to_string());
            } else if let Some(v) = raw.strip_prefix("test: ") {
                test_cmd = Some(v.trim().to_string());
            }
        }
        let missing = |k: &str| BfdError::InvalidConfig(format!("toolchain {id}: missing {k}"));
        Ok(Toolchain::External {
            id: id.to_string(),
            source_ext: source_ext.ok_or_else(|| missing("source-ext"))?,
            compile_cmd: compile_cmd.ok_or_else(|| missing("compile"))?,
            test_cmd: test_cmd.ok_or_else(|| missing("test"))?,
        })
    }

    pub fn id(&self) -> &str {
        match self {
            Toolchain::Sim => "sim",
            Toolchain::External { id, .. } => id,
        }
    }

    pub fn source_ext(&self) -> &str {
        match self {
            Toolchain::Sim => "sim",
            Toolchain::External { source_ext, .. } => source_ext,
        }
    }
}

/// Toolchain a project's build file declares.
pub fn project_toolchain(ws: &Workspace, project: &str) -> Result<Toolchain> {
    let path = ws.project_dir(project).join("build.xml");
    let text =
        fs::read_to_string(&path).map_err(|_| BfdError::NotScaffolded(project.to_string()))?;
    let root = crate::xml::parse(&text, &path.display().to_string())?;
    if root.name != "build" {
        return Err(BfdError::SchemaError(root.name));
    }
    let id = root
        .attr("toolchain")
        .ok_or_else(|| BfdError::SchemaError("build@toolchain missing".into()))?;
    Toolchain::load(ws.tools_path(), id)
}

/// Outcome of running one target (with its prerequisites) on one project.
#[derive(Debug, Clone)]
pub struct BuildResult {
    pub project: String,
    pub target: Target,
    pub success: bool,
    pub duration: f64,
    pub log: String,
    pub artifacts: Vec<PathBuf>,
    pub report: Option<TestSuiteReport>,
}

/// Run `target` on `project` using its declared toolchain.
pub fn run_target(ws: &Workspace, project: &str, target: Target) -> Result<BuildResult> {
    run_target_with(ws, project, target, None)
}

/// Run `target`, optionally overriding the project's toolchain (used by CI
/// configurations).
pub fn run_target_with(
    ws: &Workspace,
    project: &str,
    target: Target,
    toolchain: Option<&Toolchain>,
) -> Result<BuildResult> {
    if !ws.projects().any(|p| p == project) {
        return Err(BfdError::NotCheckedOut(project.to_string()));
    }
    let toolchain = match toolchain {
        Some(t) => t.clone(),
        None => project_toolchain(ws, project)?,
    };
    let started = Instant::now();
    let mut runner = Runner {
        ws,
        project,
        toolchain,
        log: String::new(),
        executed: BTreeSet::new(),
        artifacts: Vec::new(),
        report: None,
    };
    let success = runner.run(target)?;
    let duration = started.elapsed().as_secs_f64();
    runner.log.push_str(if success {
        "BUILD SUCCESSFUL\n"
    } else {
        "BUILD FAILED\n"
    });
    runner
        .log
        .push_str(&format!("Total time: {} seconds\n", duration.round() as u64));
    Ok(BuildResult {
        project: project.to_string(),
        target,
        success,
        duration,
        log: runner.log,
        artifacts: runner.artifacts,
        report: runner.report,
    })
}

struct Runner<'a> {
    ws: &'a Workspace,
    project: &'a str,
    toolchain: Toolchain,
    log: String,
    executed: BTreeSet<Target>,
    artifacts: Vec<PathBuf>,
    report: Option<TestSuiteReport>,
}

impl Runner<'_> {
    fn run(&mut self, target: Target) -> Result<bool> {
        if self.executed.contains(&target) {
            return Ok(true);
        }
        for prereq in target.prerequisites() {
            if !self.run(*prereq)? {
                return Ok(false);
            }
        }
        self.executed.insert(target);
        self.log
            .push_str(&format!(">> {} ({})\n", target.name(), self.project));
        match target {
            Target::Clean => self.clean(),
            Target::Compile => self.compile(),
            Target::Lib => self.lib(),
            Target::Test => self.test(),
            Target::Report => self.report(),
            Target::Apidocs => self.docs(true),
            Target::Docs => self.docs(false),
        }
    }

    fn project_dir(&self) -> PathBuf {
        self.ws.project_dir(self.project)
    }

    fn sources(&self) -> Result<Vec<PathBuf>> {
        let src = self.project_dir().join("src");
        let ext = format!(".{}", self.toolchain.source_ext());
        let mut out: Vec<PathBuf> = WalkDir::new(&src)
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| {
                e.file_type().is_file() && e.file_name().to_string_lossy().ends_with(&ext)
            })
            .map(|e| e.into_path())
            .collect();
        out.sort();
        Ok(out)
    }

    fn clean(&mut self) -> Result<bool> {
        let build_dir = self.project_dir().join("build");
        if build_dir.is_dir() {
            fs::remove_dir_all(&build_dir)
                .map_err(|e| BfdError::io(format!("removing {}", build_dir.display()), e))?;
        }
        for bundle in [
            format!("{}.bundle", self.project),
            format!("{}-test.bundle", self.project),
        ] {
            let path = self.ws.root().join("lib").join(bundle);
            if path.exists() {
                fs::remove_file(&path)
                    .map_err(|e| BfdError::io(format!("removing {}", path.display()), e))?;
            }
        }
        Ok(true)
    }

    fn compile(&mut self) -> Result<bool> {
        match &self.toolchain {
            Toolchain::Sim => {
                let mut clean = true;
                for path in self.sources()? {
                    let text = fs::read_to_string(&path)
                        .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
                    for d in sim_compile(&text) {
                        clean = false;
                        self.log.push_str(&format!(
                            "{}:{}:{}: {}\n",
                            path.display(),
                            d.line,
                            d.col,
                            d.message
                        ));
                    }
                }
                Ok(clean)
            }
            Toolchain::External { compile_cmd, .. } => self.shell(compile_cmd.clone()),
        }
    }

    fn shell(&mut self, cmd: String) -> Result<bool> {
        let out = std::process::Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .current_dir(self.project_dir())
            .output()
            .map_err(|e| BfdError::io(format!("running {cmd}"), e))?;
        self.log.push_str(&String::from_utf8_lossy(&out.stdout));
        self.log.push_str(&String::from_utf8_lossy(&out.stderr));
        Ok(out.status.success())
    }

    /// Entries of the two bundles: the main bundle holds the project code,
    /// the test bundle holds the code and resources needed to run the tests.
    fn bundle_entries(&self, include_tests: bool) -> Result<Vec<(String, Vec<u8>)>> {
        let dir = self.project_dir();
        let mut entries = Vec::new();
        for top in ["src", "resources"] {
            let base = dir.join(top);
            if !base.is_dir() {
                continue;
            }
            for entry in WalkDir::new(&base).sort_by_file_name() {
                let entry = entry.map_err(|e| {
                    BfdError::io(
                        format!("walking {}", base.display()),
                        e.into_io_error()
                            .unwrap_or_else(|| std::io::Error::other("walk error")),
                    )
                })?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let rel = entry
                    .path()
                    .strip_prefix(&dir)
                    .unwrap()
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                if rel.ends_with('~') {
                    continue;
                }
                let is_test = rel.split('/').any(|s| s == "test");
                if !include_tests && is_test {
                    continue;
                }
                let bytes = fs::read(entry.path())
                    .map_err(|e| BfdError::io(format!("reading {rel}"), e))?;
                entries.push((rel, bytes));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(entries)
    }

    fn lib(&mut self) -> Result<bool> {
        let lib_dir = self.ws.root().join("lib");
        fs::create_dir_all(&lib_dir)
            .map_err(|e| BfdError::io(format!("creating {}", lib_dir.display()), e))?;
        for (suffix, include_tests) in [("", false), ("-test", true)] {
            let path = lib_dir.join(format!("{}{suffix}.bundle", self.project));
            let entries = self.bundle_entries(include_tests)?;
            write_container(&path, self.project, &entries)?;
            self.log.push_str(&format!(
                "created {} ({} entries)\n",
                path.display(),
                entries.len()
            ));
            self.artifacts.push(path);
        }
        Ok(true)
    }

    fn test(&mut self) -> Result<bool> {
        let report = match &self.toolchain {
            Toolchain::Sim => testreport::run_sim_tests(
                self.project,
                &self.project_dir(),
                self.toolchain.source_ext(),
            )?,
            Toolchain::External { test_cmd, .. } => {
                // the external command must emit a conforming XML report
                let ok = self.shell(test_cmd.clone())?;
                let path = self
                    .project_dir()
                    .join("build/test-reports")
                    .join(format!("{}.xml", self.project));
                if !path.is_file() && !ok {
                    return Ok(false);
                }
                testreport::parse_xml_report(&path)?
            }
        };
        if report.cases.is_empty() {
            self.log.push_str("warning: no tests found\n");
        }
        if matches!(self.toolchain, Toolchain::Sim) {
            let path = testreport::write_xml_report(&report, &self.project_dir())?;
            self.artifacts.push(path);
        }
        self.log.push_str(&report.console_summary());
        let success = report.success();
        self.report = Some(report);
        Ok(success)
    }

    fn report(&mut self) -> Result<bool> {
        let reports_dir = self.project_dir().join("build/test-reports");
        let mut xml_paths: Vec<PathBuf> = fs::read_dir(&reports_dir)
            .map_err(|e| BfdError::io(format!("reading {}", reports_dir.display()), e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "xml"))
            .collect();
        xml_paths.sort();
        let index = testreport::render_html_report(&xml_paths, &reports_dir.join("html"))?;
        self.log.push_str(&format!("report written to {}\n", index.display()));
        self.artifacts.push(index);
        Ok(true)
    }

    /// Doc extraction for the sim toolchain: `#` comment blocks, written to
    /// `build/docs/`. `apidocs` covers the main sources only.
    fn docs(&mut self, api_only: bool) -> Result<bool> {
        let docs_dir = self.project_dir().join("build/docs");
        fs::create_dir_all(&docs_dir)
            .map_err(|e| BfdError::io(format!("creating {}", docs_dir.display()), e))?;
        let dir = self.project_dir();
        let mut out = String::new();
        for path in self.sources()? {
            let rel = path.strip_prefix(&dir).unwrap_or(&path);
            let is_test = rel.components().any(|c| c.as_os_str() == "test");
            if api_only && is_test {
                continue;
            }
            let text = fs::read_to_string(&path)
                .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
            let comments: Vec<&str> = text
                .lines()
                .filter(|l| l.trim_start().starts_with('#'))
                .collect();
            if !comments.is_empty() {
                out.push_str(&format!("== {}\n", rel.display()));
                for line in comments {
                    out.push_str(line.trim_start());
                    out.push('\n');
                }
                out.push('\n');
            }
        }
        let file = docs_dir.join(if api_only { "apidocs.txt" } else { "docs.txt" });
        fs::write(&file, out).map_err(|e| BfdError::io(format!("writing {}", file.display()), e))?;
        self.artifacts.push(file);
        Ok(true)
    }
}

/// Run `target` on every registered project in dependency order. Stops at
/// the first failure unless `keep_going`.
pub fn run_workspace_target(
    ws: &Workspace,
    target: Target,
    keep_going: bool,
    toolchain: Option<&Toolchain>,
) -> Result<Vec<BuildResult>> {
    let order = workspace_build_order(ws)?;
    let mut results = Vec::new();
    for project in order {
        let result = run_target_with(ws, &project, target, toolchain)?;
        let failed = !result.success;
        results.push(result);
        if failed && !keep_going {
            break;
        }
    }
    Ok(results)
}

/// Dependency-respecting order over the registered projects. Projects
/// without a manifest are treated as dependency-free.
pub fn workspace_build_order(ws: &Workspace) -> Result<Vec<String>> {
    let mut manifests = Vec::new();
    for project in ws.projects() {
        let path = ws.project_dir(project).join("project.xml");
        let m = match fs::read_to_string(&path) {
            Ok(text) => ProjectManifest::parse(&text, &path.display().to_string())?,
            Err(_) => ProjectManifest::new(project, "main")?,
        };
        manifests.push(m);
    }
    manifest::resolve_build_order(&manifests, false)
}

/// Bundle every project's libraries plus the setup scripts into one
/// byte-reproducible deployment archive at `<workspace>/<name>.pack`.
pub fn make_deploy_tarball(ws: &Workspace, name: &str) -> Result<PathBuf> {
    let lib = ws.root().join("lib");
    let projects: Vec<&str> = ws.projects().collect();
    if projects.is_empty() {
        return Err(BfdError::MissingBundles);
    }
    let mut entries = Vec::new();
    for project in &projects {
        for suffix in ["", "-test"] {
            let file = format!("{project}{suffix}.bundle");
            let path = lib.join(&file);
            let bytes = fs::read(&path).map_err(|_| BfdError::MissingBundles)?;
            entries.push((format!("lib/{file}"), bytes));
        }
    }
    for script in ["setup.csh", "setup.sh"] {
        let bytes = fs::read(ws.root().join(script))
            .map_err(|e| BfdError::io(format!("reading {script}"), e))?;
        entries.push((script.to_string(), bytes));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let out = ws.root().join(format!("{name}.pack"));
    write_container(&out, name, &entries)?;
    Ok(out)
}

/// Deterministic container: a fixed header (epoch timestamp), then entries
/// sorted by path, each recorded as `entry: <path> <len> <digest>` followed
/// by the raw bytes. Identical inputs serialize to identical bytes.
pub fn write_container(path: &Path, name: &str, entries: &[(String, Vec<u8>)]) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(format!("bundle: {name}\nformat: 1\nmtime: 0\n").as_bytes());
    for (entry_path, bytes) in entries {
        out.extend_from_slice(
            format!(
                "entry: {entry_path} {} {}\n",
                bytes.len(),
                digest::digest_bytes(bytes)
            )
            .as_bytes(),
        );
        out.extend_from_slice(bytes);
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| BfdError::io(format!("writing {}", path.display()), e))
}

/// Parse a container back into its entries, verifying per-entry digests.
pub fn read_container(path: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| BfdError::io(format!("reading {}", path.display()), e))?;
    let corrupt = || BfdError::CorruptBlob(format!("container {}", path.display()));
    let mut pos = 0usize;
    let read_line = |bytes: &[u8], pos: &mut usize| -> Result<String> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(corrupt());
        }
        let line = String::from_utf8(bytes[start..*pos].to_vec()).map_err(|_| corrupt())?;
        *pos += 1;
        Ok(line)
    };
    for expected in ["bundle: ", "format: ", "mtime: "] {
        let line = read_line(&bytes, &mut pos)?;
        if !line.starts_with(expected) {
            return Err(corrupt());
        }
    }
    let mut entries = Vec::new();
    while pos < bytes.len() {
        let line = read_line(&bytes, &mut pos)?;
        let rest = line.strip_prefix("entry: ").ok_or_else(corrupt)?;
        let mut parts = rest.rsplitn(3, ' ');
        let digest_hex = parts.next().ok_or_else(corrupt)?.to_string();
        let len: usize = parts.next().ok_or_else(corrupt)?.parse().map_err(|_| corrupt())?;
        let entry_path = parts.next().ok_or_else(corrupt)?.to_string();
        if pos + len + 1 > bytes.len() {
            return Err(corrupt());
        }
        let content = bytes[pos..pos + len].to_vec();
        pos += len;
        if bytes[pos] != b'\n' {
            return Err(corrupt());
        }
        pos += 1;
        if digest::digest_bytes(&content) != digest_hex {
            return Err(BfdError::CorruptBlob(digest_hex));
        }
        entries.push((entry_path, content));
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::ArchiveStore;
    use crate::scaffold;

    struct Fixture {
        _dir: tempfile::TempDir,
        ws: Workspace,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("tools/bin")).unwrap();
        ArchiveStore::open(dir.path().join("store")).unwrap();
        let ws_dir = dir.path().join("work");
        fs::create_dir(&ws_dir).unwrap();
        let ws = Workspace::init(
            &ws_dir,
            &dir.path().join("tools"),
            &dir.path().join("store"),
        )
        .unwrap();
        Fixture { _dir: dir, ws }
    }

    fn scaffolded(f: &mut Fixture, name: &str) {
        f.ws.checkout(name).unwrap();
        scaffold::create_project(&f.ws, name, "icecube.tools.examples").unwrap();
    }

    #[test]
    fn sim_compile_balanced() {
        assert!(sim_compile("fn x() { }\n").is_empty());
        assert!(sim_compile("").is_empty());
        let diags = sim_compile("fn x() {\n");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("unclosed '{'"));
        assert_eq!((diags[0].line, diags[0].col), (1, 8));
    }

    #[test]
    fn sim_compile_strings_and_newline() {
        assert!(sim_compile("say \"(unbalanced in string\"\n").is_empty());
        assert!(sim_compile("s = \"a\\\"b(\"\n").is_empty());
        let diags = sim_compile("x = 1");
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("newline"));
        assert_eq!(sim_compile("a = ]\n").len(), 1);
        assert!(!sim_compile("(]\n").is_empty());
    }

    #[test]
    fn default_lib_target_produces_two_bundles() {
        let mut f = fixture();
        scaffolded(&mut f, "icebucket");
        scaffold::create_class(&f.ws, "icebucket", "Bucket").unwrap();
        let result = run_target(&f.ws, "icebucket", Target::Lib).unwrap();
        assert!(result.success, "{}", result.log);
        let lib = f.ws.root().join("lib");
        assert!(lib.join("icebucket.bundle").is_file());
        assert!(lib.join("icebucket-test.bundle").is_file());
        assert!(result.log.contains("BUILD SUCCESSFUL"));
        assert!(result.log.contains("Total time:"));
        // test sources live only in the test bundle
        let main_entries = read_container(&lib.join("icebucket.bundle")).unwrap();
        let test_entries = read_container(&lib.join("icebucket-test.bundle")).unwrap();
        assert!(main_entries.iter().all(|(p, _)| !p.contains("/test/")));
        assert!(test_entries.iter().any(|(p, _)| p.contains("/test/")));
    }

    #[test]
    fn clean_removes_bundles_and_build_dir() {
        let mut f = fixture();
        scaffolded(&mut f, "icebucket");
        run_target(&f.ws, "icebucket", Target::Test).unwrap();
        assert!(f.ws.root().join("lib/icebucket.bundle").is_file());
        assert!(f.ws.project_dir("icebucket").join("build").is_dir());
        run_target(&f.ws, "icebucket", Target::Clean).unwrap();
        assert!(!f.ws.root().join("lib/icebucket.bundle").exists());
        assert!(!f.ws.project_dir("icebucket").join("build").exists());
    }

    #[test]
    fn report_runs_test_exactly_once() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        scaffold::create_class(&f.ws, "p", "Thing").unwrap();
        let result = run_target(&f.ws, "p", Target::Report).unwrap();
        assert!(result.success, "{}", result.log);
        assert_eq!(result.log.matches(">> test (p)").count(), 1);
        assert_eq!(result.log.matches(">> compile (p)").count(), 1);
    }

    #[test]
    fn docs_runs_full_chain_memoized() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        scaffold::create_class(&f.ws, "p", "Thing").unwrap();
        let result = run_target(&f.ws, "p", Target::Docs).unwrap();
        assert!(result.success, "{}", result.log);
        for t in ["compile", "lib", "test", "report", "apidocs", "docs"] {
            assert_eq!(result.log.matches(&format!(">> {t} (p)")).count(), 1, "{t}");
        }
        assert!(f.ws.project_dir("p").join("build/docs/docs.txt").is_file());
        assert!(f.ws.project_dir("p").join("build/docs/apidocs.txt").is_file());
    }

    #[test]
    fn compile_failure_reports_diagnostics() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        let src = f.ws.project_dir("p").join("src/icecube/tools/examples/Bad.sim");
        fs::write(&src, "class Bad {\n").unwrap();
        let result = run_target(&f.ws, "p", Target::Compile).unwrap();
        assert!(!result.success);
        assert!(result.log.contains("unclosed '{'"));
        assert!(result.log.contains("BUILD FAILED"));
    }

    #[test]
    fn failing_test_fails_build_with_report() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        scaffold::create_class(&f.ws, "p", "Thing").unwrap();
        let test = f
            .ws
            .project_dir("p")
            .join("src/icecube/tools/examples/test/ThingTest.sim");
        fs::write(&test, "assert 1 == 2\n").unwrap();
        let result = run_target(&f.ws, "p", Target::Test).unwrap();
        assert!(!result.success);
        let report = result.report.unwrap();
        assert_eq!(report.totals().failed, 1);
        assert!(result.log.contains("FAILURES!!!"));
    }

    #[test]
    fn workspace_target_builds_in_dependency_order() {
        let mut f = fixture();
        scaffolded(&mut f, "icebucket");
        scaffolded(&mut f, "gromit");
        // gromit depends on icebucket
        let manifest_path = f.ws.project_dir("gromit").join("project.xml");
        fs::write(
            &manifest_path,
            "<project name=\"gromit\" package=\"icecube.tools.examples\">\n    <dependency name=\"icebucket\"/>\n</project>\n",
        )
        .unwrap();
        let results = run_workspace_target(&f.ws, Target::Lib, false, None).unwrap();
        let order: Vec<&str> = results.iter().map(|r| r.project.as_str()).collect();
        assert_eq!(order, vec!["icebucket", "gromit"]);
    }

    #[test]
    fn empty_workspace_build_is_empty_success() {
        let f = fixture();
        let results = run_workspace_target(&f.ws, Target::Lib, false, None).unwrap();
        assert!(results.is_empty());
    }

    #[test]
    fn fail_fast_skips_later_projects() {
        let mut f = fixture();
        scaffolded(&mut f, "alpha");
        scaffolded(&mut f, "beta");
        fs::write(
            f.ws.project_dir("alpha").join("src/icecube/tools/examples/Bad.sim"),
            "broken {\n",
        )
        .unwrap();
        let results = run_workspace_target(&f.ws, Target::Compile, false, None).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].project, "alpha");
        assert!(!results[0].success);
        let all = run_workspace_target(&f.ws, Target::Compile, true, None).unwrap();
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn deploy_tarball_contents_and_reproducibility() {
        let mut f = fixture();
        scaffolded(&mut f, "icebucket");
        scaffolded(&mut f, "gromit");
        run_workspace_target(&f.ws, Target::Lib, false, None).unwrap();
        let path = make_deploy_tarball(&f.ws, "deploy").unwrap();
        let entries = read_container(&path).unwrap();
        // oracle: expected entry list enumerated independently
        let expected: Vec<String> = vec![
            "lib/gromit-test.bundle".into(),
            "lib/gromit.bundle".into(),
            "lib/icebucket-test.bundle".into(),
            "lib/icebucket.bundle".into(),
            "setup.csh".into(),
            "setup.sh".into(),
        ];
        let mut got: Vec<String> = entries.iter().map(|(p, _)| p.clone()).collect();
        got.sort();
        assert_eq!(got, expected);

        let first = fs::read(&path).unwrap();
        run_workspace_target(&f.ws, Target::Lib, false, None).unwrap();
        let path2 = make_deploy_tarball(&f.ws, "deploy").unwrap();
        assert_eq!(first, fs::read(&path2).unwrap());
    }

    #[test]
    fn tarball_requires_bundles() {
        let f = fixture();
        assert!(matches!(
            make_deploy_tarball(&f.ws, "deploy").unwrap_err(),
            BfdError::MissingBundles
        ));
    }

    #[test]
    fn identical_trees_give_identical_bundles() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        scaffold::create_class(&f.ws, "p", "Thing").unwrap();
        run_target(&f.ws, "p", Target::Lib).unwrap();
        let first = fs::read(f.ws.root().join("lib/p.bundle")).unwrap();
        run_target(&f.ws, "p", Target::Lib).unwrap();
        assert_eq!(first, fs::read(f.ws.root().join("lib/p.bundle")).unwrap());
    }

    #[test]
    fn external_toolchain_adapter() {
        let mut f = fixture();
        scaffolded(&mut f, "p");
        let tc_dir = f.ws.tools_path().join("toolchains");
        fs::create_dir_all(&tc_dir).unwrap();
        fs::write(
            tc_dir.join("echo.rec"),
            "source-ext: txt\ncompile: true\ntest: mkdir -p build/test-reports && printf '<testsuite name=\"p\" tests=\"1\" failures=\"0\" errors=\"0\" time=\"0.1\"><testcase suite=\"s\" name=\"t\" time=\"0.1\"/></testsuite>' > build/test-reports/p.xml\n",
        )
        .unwrap();
        fs::write(
            f.ws.project_dir("p").join("build.xml"),
            "<build project=\"p\" toolchain=\"echo\"/>\n",
        )
        .unwrap();
        let result = run_target(&f.ws, "p", Target::Test).unwrap();
        assert!(result.success, "{}", result.log);
        assert_eq!(result.report.unwrap().totals().run, 1);
    }

    #[test]
    fn unknown_toolchain_and_target() {
        let f = fixture();
        assert!(matches!(
            Toolchain::load(f.ws.tools_path(), "nope").unwrap_err(),
            BfdError::UnknownToolchain(_)
        ));
        assert!(matches!(
            Target::parse("frobnicate").unwrap_err(),
            BfdError::UnknownTarget(_)
        ));
    }
}
