use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Resolves output paths against a base directory and writes them
/// atomically (temp file in the same directory, then rename).
pub struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.dir.join(path)
        }
    }

    pub fn write<F>(&self, path: &Path, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<&mut NamedTempFile>) -> Result<()>,
    {
        let target = self.resolve(path);
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
        let mut tmp = NamedTempFile::new_in(&parent)?;
        {
            let mut w = BufWriter::new(&mut tmp);
            fill(&mut w).with_context(|| format!("writing {}", target.display()))?;
            w.flush()?;
        }
        tmp.persist(&target)
            .with_context(|| format!("renaming into {}", target.display()))?;
        Ok(target)
    }
}
