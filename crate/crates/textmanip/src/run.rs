//! Run directories: every command writes its outputs next to a
//! `config.json` echo of the resolved settings and a `manifest.json` with
//! SHA-256 digests of its inputs and outputs.

use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::formats::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_file(path: &Path) -> io::Result<FileDigest> {
    let mut f = File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest { path: path.display().to_string(), sha256: format!("{:x}", h.finalize()), bytes })
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    inputs: &'a [FileDigest],
    outputs: Vec<FileDigest>,
}

pub struct RunDir {
    root: PathBuf,
    command: String,
    inputs: Vec<FileDigest>,
    input_paths: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_string(),
            inputs: Vec::new(),
            input_paths: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Hashes an input file before anything reads it.
    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        let d = digest_file(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(d);
        self.input_paths.push(fs::canonicalize(path)?);
        Ok(())
    }

    /// Path for an output file. Refuses to hand out a path that is also an
    /// input, so no command can overwrite what it reads.
    pub fn output(&mut self, name: &str) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        if let Ok(existing) = fs::canonicalize(&path) {
            if self.input_paths.contains(&existing) {
                bail!("refusing to overwrite input file {}", path.display());
            }
        }
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(path)
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> anyhow::Result<PathBuf> {
        let path = self.output(name)?;
        write_atomic(&path, f).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    /// Writes the config echo and the manifest. Call after all outputs.
    pub fn finish<C: Serialize>(mut self, config: &C) -> anyhow::Result<()> {
        self.write_json("config.json", config)?;
        let mut outputs = Vec::new();
        for name in self.outputs.iter().filter(|n| n.as_str() != "manifest.json") {
            let mut d = digest_file(&self.root.join(name))?;
            d.path = name.clone();
            outputs.push(d);
        }
        let manifest = Manifest { command: &self.command, inputs: &self.inputs, outputs };
        let path = self.root.join("manifest.json");
        write_atomic(&path, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            w.write_all(b"\n")
        })?;
        Ok(())
    }
}
