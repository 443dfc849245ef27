//! Run directories and their manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const RESOLVED_CONFIG: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Inputs, config hash and produced files of one command. Paths of outputs
/// are relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if e.file_type()?.is_dir() {
            walk(root, &path, out)?;
        } else if path != root.join(MANIFEST) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// Output directory of one command.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Refuses a non-empty directory unless `force`. With `force`, files
    /// listed in an earlier manifest are removed first so stale outputs do
    /// not linger; anything else is left alone.
    pub fn create(root: &Path, force: bool) -> Result<RunDir> {
        if root.exists() {
            let non_empty = fs::read_dir(root)?.next().is_some();
            if non_empty && !force {
                return Err(Error::Config(format!("{} already exists and is not empty; pass --force to overwrite", root.display())));
            }
            let manifest = root.join(MANIFEST);
            if force && manifest.exists() {
                let old: Manifest = serde_json::from_slice(&fs::read(&manifest)?)?;
                for f in &old.outputs {
                    let p = root.join(&f.path);
                    if p.starts_with(root) && p.is_file() {
                        fs::remove_file(p)?;
                    }
                }
                fs::remove_file(manifest)?;
            }
        }
        fs::create_dir_all(root)?;
        Ok(RunDir { root: root.to_path_buf() })
    }

    /// An existing directory, used by worker processes that fill one part of
    /// a run.
    pub fn open(root: &Path) -> Result<RunDir> {
        if !root.is_dir() {
            return Err(Error::Input(format!("{} is not a directory", root.display())));
        }
        Ok(RunDir { root: root.to_path_buf() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Creates `rel` (and parents) as a directory.
    pub fn dir(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        fs::create_dir_all(&p)?;
        Ok(p)
    }

    pub fn write(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, contents)?;
        Ok(p)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, s)
    }

    /// Writes the resolved config and a manifest hashing every file now in
    /// the directory.
    pub fn finish(&self, command: &str, config: &RunConfig, inputs: &[&Path]) -> Result<Manifest> {
        self.write(RESOLVED_CONFIG, config.to_json()?)?;
        let mut files = Vec::new();
        walk(&self.root, &self.root, &mut files)?;
        let outputs = files
            .iter()
            .map(|p| Ok(FileDigest { path: relative(&self.root, p), sha256: sha256_file(p)? }))
            .collect::<Result<Vec<_>>>()?;
        let inputs = inputs
            .iter()
            .map(|p| Ok(FileDigest { path: p.display().to_string(), sha256: sha256_file(p)? }))
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest { command: command.to_string(), config_sha256: config.hash()?, inputs, outputs };
        self.write_json(MANIFEST, &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_then_forces() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("run");
        let run = RunDir::create(&root, false).unwrap();
        run.write("a/b.txt", "x").unwrap();
        let m = run.finish("test", &RunConfig::default(), &[]).unwrap();
        assert_eq!(m.outputs.iter().map(|f| f.path.as_str()).collect::<Vec<_>>(), ["a/b.txt", "config.json"]);
        assert!(matches!(RunDir::create(&root, false), Err(Error::Config(_))));
        let keep = root.join("notes.txt");
        fs::write(&keep, "mine").unwrap();
        RunDir::create(&root, true).unwrap();
        assert!(!root.join("a/b.txt").exists());
        assert!(keep.exists());
    }
}
