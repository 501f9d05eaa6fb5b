use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for all bfd operations.
#[derive(Debug, Error)]
pub enum BfdError {
    // archive
    #[error("timed out waiting for lock {0}")]
    LockTimeout(PathBuf),
    #[error("invalid path in snapshot: {0}")]
    InvalidPath(String),
    #[error("commit message must not be empty")]
    EmptyMessage,
    #[error("unknown project \"{0}\"")]
    UnknownProject(String),
    #[error("unknown revision reference \"{0}\"")]
    UnknownRef(String),
    #[error("unknown revision {seq} of \"{project}\"")]
    UnknownSeq { project: String, seq: u64 },
    #[error("blob {0} is corrupt: stored bytes do not match digest")]
    CorruptBlob(String),
    #[error("tag \"{0}\" already exists")]
    DuplicateTag(String),
    #[error("malformed tag \"{0}\": expected Vxx-yy-zz with two digits per field")]
    MalformedTag(String),
    #[error("tag field overflow: {0} cannot be bumped past 99")]
    TagOverflow(String),

    // manifest
    #[error("{file}:{line}:{col}: syntax error: expected {expected}")]
    SyntaxError {
        file: String,
        line: usize,
        col: usize,
        expected: String,
    },
    #[error("schema error: unexpected element or attribute \"{0}\"")]
    SchemaError(String),
    #[error("duplicate dependency \"{0}\"")]
    DuplicateDependency(String),
    #[error("project depends on itself")]
    SelfDependency,
    #[error("dependency cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("dependency \"{0}\" is not present in the workspace")]
    MissingDependency(String),
    #[error("invalid project name \"{0}\"")]
    InvalidProjectName(String),
    #[error("invalid package \"{0}\"")]
    InvalidPackage(String),

    // workspace
    #[error("directory {0} is not empty")]
    NotEmpty(PathBuf),
    #[error("tools path {0} does not exist")]
    MissingTools(PathBuf),
    #[error("not inside a bfd workspace")]
    NoWorkspace,
    #[error("project \"{0}\" is already checked out")]
    AlreadyCheckedOut(String),
    #[error("project \"{0}\" is not checked out")]
    NotCheckedOut(String),
    #[error("nothing to archive in \"{0}\"")]
    NothingToArchive(String),
    #[error("workspace is dirty:\n{0}")]
    DirtyWorkspace(String),
    #[error("\"{project}\" is not clean:\n{problems}")]
    UncleanProject { project: String, problems: String },

    // scaffold
    #[error("project \"{0}\" is already scaffolded")]
    AlreadyScaffolded(String),
    #[error("project \"{0}\" is not scaffolded")]
    NotScaffolded(String),
    #[error("class \"{0}\" already exists")]
    ClassExists(String),
    #[error("interface \"{0}\" already exists")]
    InterfaceExists(String),
    #[error("package \"{0}\" already exists")]
    PackageExists(String),
    #[error("invalid name \"{0}\": expected an UpperCamelCase identifier")]
    InvalidName(String),
    #[error("template \"{kind}\" left unresolved placeholder {placeholder}")]
    UnresolvedPlaceholder { kind: String, placeholder: String },

    // build
    #[error("unknown target \"{0}\"")]
    UnknownTarget(String),
    #[error("compile failed:\n{0}")]
    CompileFailed(String),
    #[error("tests failed: {0}")]
    TestsFailed(String),
    #[error("no bundles in lib/; run the lib target first")]
    MissingBundles,
    #[error("unknown toolchain \"{0}\"")]
    UnknownToolchain(String),

    // testreport
    #[error("malformed test report {0}")]
    MalformedReport(PathBuf),

    // ci
    #[error("archive store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("invalid CI configuration: {0}")]
    InvalidConfig(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl BfdError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        BfdError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, BfdError>;
