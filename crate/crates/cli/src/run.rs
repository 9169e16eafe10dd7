//! Run headers and all-or-nothing output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

/// The resolved flag set of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    command: &'static str,
    entries: BTreeMap<String, Vec<String>>,
}

impl RunConfig {
    pub fn new(command: &'static str) -> Self {
        Self { command, entries: BTreeMap::new() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), vec![value.to_string()]);
    }

    /// Repeatable flag; values keep their insertion order.
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.entry(key.to_string()).or_default().push(value.to_string());
    }

    fn canonical(&self) -> String {
        let mut s = format!("{}\n", self.command);
        for (k, vs) in &self.entries {
            for v in vs {
                s += &format!("{k}={v}\n");
            }
        }
        s
    }

    /// Lowercase hex SHA-256 of the canonical flag set.
    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Flags that reproduce this run.
    pub fn args(&self) -> String {
        let mut parts = vec![self.command.to_string()];
        for (k, vs) in &self.entries {
            for v in vs {
                parts.push(format!("--{k}={v}"));
            }
        }
        parts.join(" ")
    }

    pub fn header(&self, seed: Option<u64>) -> String {
        let seed = seed.map_or_else(|| "none".into(), |s| s.to_string());
        format!("# spatialvote digest={} seed={seed}\n# args: {}\n", self.digest(), self.args())
    }
}

/// Buffered outputs, written only once every one of them is ready.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(Option<PathBuf>, Vec<u8>)>,
}

impl Outputs {
    /// `None` means stdout.
    pub fn add(&mut self, path: Option<PathBuf>, contents: Vec<u8>) {
        self.files.push((path, contents));
    }

    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::new();
        let mut stdout = Vec::new();
        for (path, contents) in self.files {
            match path {
                None => stdout.extend(contents),
                Some(path) => {
                    let tmp = path.with_extension(format!(
                        "{}.partial",
                        path.extension().and_then(|e| e.to_str()).unwrap_or("")
                    ));
                    if let Err(e) = fs::write(&tmp, &contents) {
                        for (t, _) in &staged {
                            let _ = fs::remove_file(t);
                        }
                        return Err(e).with_context(|| format!("writing {}", path.display()));
                    }
                    staged.push((tmp, path));
                }
            }
        }
        for (tmp, path) in staged {
            fs::rename(&tmp, &path).with_context(|| format!("writing {}", path.display()))?;
        }
        std::io::stdout().write_all(&stdout)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_insertion_order() {
        let mut a = RunConfig::new("theory-curve");
        a.set("dims", 2);
        a.set("seed", 1);
        let mut b = RunConfig::new("theory-curve");
        b.set("seed", 1);
        b.set("dims", 2);
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        assert!(a.digest().chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
        b.set("dims", 3);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.args(), "theory-curve --dims=2 --seed=1");
    }
}
