//! Exit-code and usage-error behavior of the `bfd` binary.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

const BFD: &str = env!("CARGO_BIN_EXE_bfd");

fn bfd(dir: &Path, args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    let mut child = Command::new(BFD)
        .args(args)
        .current_dir(dir)
        .env("WORKSPACE_ROOT", dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    if let Some(input) = stdin {
        child
            .stdin
            .as_mut()
            .unwrap()
            .write_all(input.as_bytes())
            .unwrap();
    }
    drop(child.stdin.take());
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).to_string(),
        String::from_utf8_lossy(&out.stderr).to_string(),
    )
}

/// tools dir + initialized workspace with one registered project.
fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(tmp.path().join("tools/bin")).unwrap();
    let work = tmp.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    let (code, out, err) = bfd(&work, &["init", "../tools"], None);
    assert_eq!(code, 0, "{out}{err}");
    let (code, ..) = bfd(&work, &["co", "gromit"], None);
    assert_eq!(code, 0);
    tmp
}

#[test]
fn no_subcommand_is_usage_error() {
    let tmp = workspace();
    let (code, _, err) = bfd(&tmp.path().join("work"), &[], None);
    assert_eq!(code, 2);
    assert!(err.contains("usage: bfd"), "{err}");
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let tmp = workspace();
    let (code, _, err) = bfd(&tmp.path().join("work"), &["frobnicate"], None);
    assert_eq!(code, 2);
    assert!(err.lines().any(|l| l.starts_with("usage: bfd")), "{err}");
}

#[test]
fn archive_without_message_is_usage_error() {
    let tmp = workspace();
    let (code, _, err) = bfd(&tmp.path().join("work"), &["archive", "gromit"], None);
    assert_eq!(code, 2);
    assert!(err.contains("archive wants"), "{err}");
}

#[test]
fn declined_dispose_exits_one_and_changes_nothing() {
    let tmp = workspace();
    let work = tmp.path().join("work");
    let (code, out, _) = bfd(&work, &["dispose"], Some("n\n"));
    assert_eq!(code, 1);
    // no error text beyond the prompt itself
    assert_eq!(
        out,
        "Are you sure you want to dispose of the entire workspace?\ny/n: "
    );
    assert!(work.join("build.xml").is_file(), "nothing was removed");
    assert!(work.join("gromit").is_dir());
}

#[test]
fn prompt_without_stdin_or_dash_y_is_usage_error() {
    let tmp = workspace();
    let (code, _, err) = bfd(&tmp.path().join("work"), &["dispose"], None);
    assert_eq!(code, 2);
    assert!(err.contains("-y"), "{err}");
}

#[test]
fn operational_errors_exit_three() {
    let tmp = workspace();
    let work = tmp.path().join("work");
    // unknown project
    let (code, ..) = bfd(&work, &["status", "nonesuch"], None);
    assert_eq!(code, 3);
    // checkout of an already-registered project
    let (code, ..) = bfd(&work, &["co", "gromit"], None);
    assert_eq!(code, 3);
}

#[test]
fn command_outside_a_workspace_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = Command::new(BFD)
        .args(["status"])
        .current_dir(tmp.path())
        .env_remove("WORKSPACE_ROOT")
        .output()
        .map(|o| {
            (
                o.status.code().unwrap_or(-1),
                String::from_utf8_lossy(&o.stdout).to_string(),
                String::from_utf8_lossy(&o.stderr).to_string(),
            )
        })
        .unwrap();
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("workspace"), "{err}");
}
