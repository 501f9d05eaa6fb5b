//! Advisory lock files. A lock is acquired by exclusively creating the lock
//! file and released by deleting it; contenders retry until the timeout.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::error::{BfdError, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

/// Holds an exclusive lock until dropped.
#[derive(Debug)]
pub struct LockGuard {
    path: PathBuf,
}

/// Acquire the lock at `path`, waiting up to `timeout`.
pub fn acquire(path: &Path, timeout: Duration) -> Result<LockGuard> {
    let start = Instant::now();
    loop {
        match OpenOptions::new().write(true).create_new(true).open(path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                return Ok(LockGuard {
                    path: path.to_path_buf(),
                });
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                if start.elapsed() >= timeout {
                    return Err(BfdError::LockTimeout(path.to_path_buf()));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(BfdError::io(format!("creating lock {}", path.display()), e)),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
