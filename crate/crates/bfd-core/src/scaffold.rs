//! Skeleton generation: projects, packages, classes and interfaces, each
//! class or interface paired with a matching test skeleton.
//!
//! Templates are plain text with `{{PROJECT}}`, `{{PACKAGE}}`, `{{NAME}}` and
//! `{{DATE}}` placeholders. Editable copies may live under
//! `<tools>/templates/<toolchain>/<kind>.tmpl`; built-in defaults are used
//! otherwise.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;

use crate::build::Toolchain;
use crate::error::{BfdError, Result};
use crate::manifest::{self, ProjectManifest};
use crate::workspace::Workspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    ProjectBuildfile,
    Manifest,
    PackageDoc,
    Class,
    Interface,
    Test,
}

impl TemplateKind {
    fn file_stem(self) -> &'static str {
        match self {
            TemplateKind::ProjectBuildfile => "project-buildfile",
            TemplateKind::Manifest => "manifest",
            TemplateKind::PackageDoc => "package-doc",
            TemplateKind::Class => "class",
            TemplateKind::Interface => "interface",
            TemplateKind::Test => "test",
        }
    }

    fn builtin_sim(self) -> &'static str {
        match self {
            TemplateKind::ProjectBuildfile => "<build project=\"{{PROJECT}}\" toolchain=\"sim\"/>\n",
            TemplateKind::Manifest => "<project name=\"{{PROJECT}}\" package=\"{{PACKAGE}}\"/>\n",
            TemplateKind::PackageDoc => {
                "Package {{PACKAGE}} of project {{PROJECT}}.\nCreated {{DATE}}.\n"
            }
            TemplateKind::Class => {
                "# {{PROJECT}} :: {{PACKAGE}}.{{NAME}}\n# created: {{DATE}}\n\nclass {{NAME}} {\n    # implementation goes here\n}\n"
            }
            TemplateKind::Interface => {
                "# {{PROJECT}} :: {{PACKAGE}}.{{NAME}}\n# created: {{DATE}}\n\ninterface {{NAME}} {\n    # required operations go here\n}\n"
            }
            TemplateKind::Test => {
                "# Tests for {{PACKAGE}}.{{NAME}} in {{PROJECT}}\n# created: {{DATE}}\n# One assert per requirement of {{NAME}}; the placeholder below always holds.\n\nassert 0 == 0\n"
            }
        }
    }
}

/// Substitute placeholders; any `{{` left afterwards is an error.
pub fn render_template(
    kind: TemplateKind,
    body: &str,
    substitutions: &[(&str, &str)],
) -> Result<String> {
    let mut out = body.to_string();
    for (key, value) in substitutions {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    if let Some(pos) = out.find("{{") {
        let rest = &out[pos..];
        let placeholder = rest
            .find("}}")
            .map(|end| &rest[..end + 2])
            .unwrap_or(rest)
            .to_string();
        return Err(BfdError::UnresolvedPlaceholder {
            kind: kind.file_stem().to_string(),
            placeholder,
        });
    }
    Ok(out)
}

fn load_template(tools_path: &Path, toolchain: &str, kind: TemplateKind) -> Result<String> {
    let path = tools_path
        .join("templates")
        .join(toolchain)
        .join(format!("{}.tmpl", kind.file_stem()));
    match fs::read_to_string(&path) {
        Ok(text) => Ok(text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Ok(kind.builtin_sim().to_string())
        }
        Err(e) => Err(BfdError::io(format!("reading {}", path.display()), e)),
    }
}

fn today() -> String {
    Utc::now().format("%Y-%m-%d").to_string()
}

fn validate_type_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_uppercase())
        && chars.all(|c| c.is_ascii_alphanumeric());
    if ok {
        Ok(())
    } else {
        Err(BfdError::InvalidName(name.to_string()))
    }
}

fn create_new(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| BfdError::io(format!("creating {}", parent.display()), e))?;
    }
    // exclusive create so an existing file is never clobbered
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create_new(true);
    use std::io::Write as _;
    let mut f = opts
        .open(path)
        .map_err(|e| BfdError::io(format!("creating {}", path.display()), e))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| BfdError::io(format!("writing {}", path.display()), e))
}

fn read_project_manifest(ws: &Workspace, project: &str) -> Result<ProjectManifest> {
    let path = ws.project_dir(project).join("project.xml");
    let text = fs::read_to_string(&path).map_err(|_| BfdError::NotScaffolded(project.to_string()))?;
    ProjectManifest::parse(&text, &path.display().to_string())
}

fn project_toolchain(ws: &Workspace, project: &str) -> Result<Toolchain> {
    crate::build::project_toolchain(ws, project)
}

fn package_dir(ws: &Workspace, project: &str, package: &str) -> PathBuf {
    let mut dir = ws.project_dir(project).join("src");
    for segment in package.split('.') {
        dir = dir.join(segment);
    }
    dir
}

/// Lay down the standard project skeleton: build file, manifest, resources
/// and the root package with its test subpackage.
pub fn create_project(ws: &Workspace, project: &str, package: &str) -> Result<Vec<PathBuf>> {
    if !ws.projects().any(|p| p == project) {
        return Err(BfdError::NotCheckedOut(project.to_string()));
    }
    manifest::validate_package(package)?;
    let dir = ws.project_dir(project);
    if dir.join("build.xml").exists() || dir.join("project.xml").exists() {
        return Err(BfdError::AlreadyScaffolded(project.to_string()));
    }
    let tools = ws.tools_path();
    let subs = [("PROJECT", project), ("PACKAGE", package), ("DATE", &today())];
    let render = |kind| -> Result<String> {
        render_template(kind, &load_template(tools, "sim", kind)?, &subs)
    };

    let mut created = Vec::new();
    fn emit(created: &mut Vec<PathBuf>, path: PathBuf, contents: String) -> Result<()> {
        create_new(&path, &contents)?;
        created.push(path);
        Ok(())
    }
    emit(&mut created, dir.join("build.xml"), render(TemplateKind::ProjectBuildfile)?)?;
    emit(&mut created, dir.join("project.xml"), render(TemplateKind::Manifest)?)?;
    for sub in ["main", "test"] {
        let resources = dir.join("resources").join(sub);
        fs::create_dir_all(&resources)
            .map_err(|e| BfdError::io(format!("creating {}", resources.display()), e))?;
        created.push(resources);
    }
    let pkg_dir = package_dir(ws, project, package);
    let doc = render(TemplateKind::PackageDoc)?;
    emit(&mut created, pkg_dir.join("package.txt"), doc.clone())?;
    emit(&mut created, pkg_dir.join("test").join("package.txt"), doc)?;
    Ok(created)
}

fn create_typed_pair(
    ws: &Workspace,
    project: &str,
    name: &str,
    kind: TemplateKind,
) -> Result<(PathBuf, PathBuf)> {
    validate_type_name(name)?;
    let manifest = read_project_manifest(ws, project)?;
    let toolchain = project_toolchain(ws, project)?;
    let ext = toolchain.source_ext();
    let pkg_dir = package_dir(ws, project, &manifest.package);
    let source = pkg_dir.join(format!("{name}.{ext}"));
    let test = pkg_dir.join("test").join(format!("{name}Test.{ext}"));
    if source.exists() || test.exists() {
        return Err(match kind {
            TemplateKind::Interface => BfdError::InterfaceExists(name.to_string()),
            _ => BfdError::ClassExists(name.to_string()),
        });
    }
    let tools = ws.tools_path();
    let subs = [
        ("PROJECT", project),
        ("PACKAGE", manifest.package.as_str()),
        ("NAME", name),
        ("DATE", &today()),
    ];
    let body = render_template(kind, &load_template(tools, toolchain.id(), kind)?, &subs)?;
    let test_body = render_template(
        TemplateKind::Test,
        &load_template(tools, toolchain.id(), TemplateKind::Test)?,
        &subs,
    )?;
    create_new(&source, &body)?;
    create_new(&test, &test_body)?;
    Ok((source, test))
}

/// Create `<Name>.<ext>` and its `<Name>Test.<ext>` skeleton.
pub fn create_class(ws: &Workspace, project: &str, name: &str) -> Result<(PathBuf, PathBuf)> {
    create_typed_pair(ws, project, name, TemplateKind::Class)
}

/// As `create_class`, with interface templates.
pub fn create_interface(ws: &Workspace, project: &str, name: &str) -> Result<(PathBuf, PathBuf)> {
    create_typed_pair(ws, project, name, TemplateKind::Interface)
}

/// Create a subpackage (dotted, relative to the root package) with its test
/// subdirectory, both carrying package docs.
pub fn create_package(ws: &Workspace, project: &str, subpackage: &str) -> Result<PathBuf> {
    manifest::validate_package(subpackage)?;
    let manifest = read_project_manifest(ws, project)?;
    let full = format!("{}.{}", manifest.package, subpackage);
    let dir = package_dir(ws, project, &full);
    if dir.exists() {
        return Err(BfdError::PackageExists(full));
    }
    let parent = dir.parent().expect("package dir has a parent");
    if !parent.is_dir() {
        return Err(BfdError::InvalidPackage(format!(
            "{full} (parent package does not exist)"
        )));
    }
    let subs = [
        ("PROJECT", project),
        ("PACKAGE", full.as_str()),
        ("DATE", &today()),
    ];
    let doc = render_template(
        TemplateKind::PackageDoc,
        &load_template(ws.tools_path(), "sim", TemplateKind::PackageDoc)?,
        &subs,
    )?;
    create_new(&dir.join("package.txt"), &doc)?;
    create_new(&dir.join("test").join("package.txt"), &doc)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::ArchiveStore;

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
        let mut ws = Workspace::init(
            &ws_dir,
            &dir.path().join("tools"),
            &dir.path().join("store"),
        )
        .unwrap();
        ws.checkout("gromit").unwrap();
        Fixture { _dir: dir, ws }
    }

    fn top_listing(dir: &Path) -> Vec<String> {
        let mut names: Vec<String> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().to_string())
            .collect();
        names.sort();
        names
    }

    #[test]
    fn create_project_matches_fig_listing() {
        let f = fixture();
        create_project(&f.ws, "gromit", "icecube.tools.examples").unwrap();
        assert_eq!(
            top_listing(&f.ws.project_dir("gromit")),
            vec!["build.xml", "project.xml", "resources", "src"]
        );
        let base = f.ws.project_dir("gromit");
        assert!(base.join("resources/main").is_dir());
        assert!(base.join("resources/test").is_dir());
        assert!(base.join("src/icecube/tools/examples/package.txt").is_file());
        assert!(base.join("src/icecube/tools/examples/test/package.txt").is_file());
    }

    #[test]
    fn single_segment_package() {
        let f = fixture();
        create_project(&f.ws, "gromit", "a").unwrap();
        let base = f.ws.project_dir("gromit");
        assert!(base.join("src/a/package.txt").is_file());
        assert!(base.join("src/a/test/package.txt").is_file());
    }

    #[test]
    fn rerun_is_refused_without_touching_files() {
        let f = fixture();
        create_project(&f.ws, "gromit", "a").unwrap();
        let manifest_before = fs::read(f.ws.project_dir("gromit").join("project.xml")).unwrap();
        let err = create_project(&f.ws, "gromit", "b").unwrap_err();
        assert!(matches!(err, BfdError::AlreadyScaffolded(_)));
        assert_eq!(
            fs::read(f.ws.project_dir("gromit").join("project.xml")).unwrap(),
            manifest_before
        );
    }

    #[test]
    fn create_class_pair() {
        let f = fixture();
        create_project(&f.ws, "gromit", "icecube.tools.examples").unwrap();
        let (source, test) = create_class(&f.ws, "gromit", "Counter2").unwrap();
        assert!(source.ends_with("src/icecube/tools/examples/Counter2.sim"));
        assert!(test.ends_with("src/icecube/tools/examples/test/Counter2Test.sim"));
        let test_text = fs::read_to_string(&test).unwrap();
        assert!(!fs::read_to_string(&source).unwrap().is_empty());
        assert!(test_text.contains("Counter2"));
        assert!(matches!(
            create_class(&f.ws, "gromit", "Counter2").unwrap_err(),
            BfdError::ClassExists(_)
        ));
    }

    #[test]
    fn fresh_test_skeleton_passes_when_run() {
        let f = fixture();
        create_project(&f.ws, "gromit", "a").unwrap();
        create_class(&f.ws, "gromit", "Counter2").unwrap();
        let report =
            crate::testreport::run_sim_tests("gromit", &f.ws.project_dir("gromit"), "sim").unwrap();
        let t = report.totals();
        assert!(t.run >= 1);
        assert_eq!(t.failed + t.errored, 0);
    }

    #[test]
    fn create_interface_pair_and_grammar() {
        let f = fixture();
        create_project(&f.ws, "gromit", "a").unwrap();
        let (source, test) = create_interface(&f.ws, "gromit", "Clock").unwrap();
        assert!(source.ends_with("src/a/Clock.sim"));
        assert!(test.ends_with("src/a/test/ClockTest.sim"));
        assert!(matches!(
            create_interface(&f.ws, "gromit", "clock").unwrap_err(),
            BfdError::InvalidName(_)
        ));
        assert!(matches!(
            create_interface(&f.ws, "gromit", "Clock").unwrap_err(),
            BfdError::InterfaceExists(_)
        ));
    }

    #[test]
    fn create_package_with_docs() {
        let f = fixture();
        create_project(&f.ws, "gromit", "icecube.tools.examples").unwrap();
        let dir = create_package(&f.ws, "gromit", "util").unwrap();
        assert!(dir.ends_with("src/icecube/tools/examples/util"));
        let doc = fs::read_to_string(dir.join("package.txt")).unwrap();
        assert!(!doc.is_empty());
        assert!(!doc.contains("{{"));
        assert!(dir.join("test/package.txt").is_file());
        assert!(matches!(
            create_package(&f.ws, "gromit", "util").unwrap_err(),
            BfdError::PackageExists(_)
        ));
    }

    #[test]
    fn unresolved_placeholder_is_an_error() {
        let err = render_template(TemplateKind::Class, "hi {{NAME}}", &[("PROJECT", "p")])
            .unwrap_err();
        match err {
            BfdError::UnresolvedPlaceholder { placeholder, .. } => {
                assert_eq!(placeholder, "{{NAME}}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tools_template_overrides_builtin() {
        let f = fixture();
        let tmpl_dir = f.ws.tools_path().join("templates/sim");
        fs::create_dir_all(&tmpl_dir).unwrap();
        fs::write(tmpl_dir.join("package-doc.tmpl"), "custom doc for {{PACKAGE}}\n").unwrap();
        create_project(&f.ws, "gromit", "a").unwrap();
        let doc =
            fs::read_to_string(f.ws.project_dir("gromit").join("src/a/package.txt")).unwrap();
        assert_eq!(doc, "custom doc for a\n");
    }
}
