//! Core library behind the `bfd` developer-workflow tool: a local revision
//! archive with delivery tags, project manifests and dependency ordering,
//! workspace lifecycle commands, scaffolding, a target-graph build engine
//! with pluggable toolchains, unit-test reporting, and a poll-based CI loop.

pub mod archive;
pub mod build;
pub mod ci;
pub mod digest;
pub mod error;
pub mod lock;
pub mod manifest;
pub mod scaffold;
pub mod testreport;
pub mod workspace;
pub mod xml;

pub use archive::{ArchiveStore, Revision, RevisionInfo, Tag};
pub use build::{BuildResult, Target, Toolchain};
pub use error::BfdError;
pub use manifest::{DependencyGraph, ProjectManifest};
pub use testreport::{TestCaseResult, TestOutcome, TestSuiteReport};
pub use workspace::{ChangeStatus, Workspace};
