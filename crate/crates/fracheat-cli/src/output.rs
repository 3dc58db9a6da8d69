//! Deterministic file output: 17-significant-digit CSV rows and a cache
//! lock so concurrent runs never interleave writes.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Formats a float with 17 significant digits (exact f64 round-trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes CSV content atomically-ish (temp + rename) for stable reruns.
pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", tmp.display())))?;
        f.write_all(content.as_bytes())
            .map_err(|e| CliError::io(format!("write failed on {}: {e}", tmp.display())))?;
    }
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(format!("cannot move into {}: {e}", path.display())))?;
    Ok(())
}

/// CSV builder with a fixed header; every numeric cell goes through fmt17.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::new();
        buf.push_str(header);
        buf.push('\n');
        Csv { buf }
    }

    pub fn row(&mut self, cells: &[CsvCell]) {
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match c {
                CsvCell::Int(v) => self.buf.push_str(&v.to_string()),
                CsvCell::Num(v) => self.buf.push_str(&fmt17(*v)),
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub enum CsvCell {
    Int(i64),
    Num(f64),
}

/// Exclusive cache lock; released on drop. Waits briefly for a competing
/// writer, then gives up with an I/O error.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(cache_dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(cache_dir)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", cache_dir.display())))?;
        let path = cache_dir.join("cache.lock");
        for _ in 0..100 {
            match std::fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
            {
                Ok(_) => return Ok(CacheLock { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    std::thread::sleep(std::time::Duration::from_millis(50));
                }
                Err(e) => {
                    return Err(CliError::io(format!(
                        "cannot create lock {}: {e}",
                        path.display()
                    )))
                }
            }
        }
        Err(CliError::io(format!(
            "cache lock {} is held by another process",
            path.display()
        )))
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
