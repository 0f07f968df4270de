use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Output directory that remembers every file written, for the manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    /// Opens `name` for writing and hands a buffered writer to `body`.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.root.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_text(name, &text)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(name, |w| {
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// Writes `manifest.json` echoing the resolved config and listing the
    /// files of this run.
    pub fn finish<T: Serialize>(mut self, command: &str, config: &RunConfig, details: T) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a, T> {
            command: &'a str,
            version: &'a str,
            config: &'a RunConfig,
            files: &'a [String],
            details: T,
        }
        let files = self.files.clone();
        let manifest = Manifest { command, version: env!("CARGO_PKG_VERSION"), config, files: &files, details };
        self.write_json("manifest.json", &manifest)
    }
}
