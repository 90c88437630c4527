//! Output directory bookkeeping: versioned CSV files, the summary and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub analysis: String,
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub analysis: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub outputs: Vec<OutputFile>,
    /// Wall-clock milliseconds per analysis.
    pub timings_ms: BTreeMap<String, u128>,
    pub failures: Vec<Failure>,
}

pub struct OutputDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

impl OutputDir {
    pub fn create(root: &Path, config_text: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                tool: "twinlab",
                version: env!("CARGO_PKG_VERSION"),
                config_sha256: sha256_hex(config_text.as_bytes()),
                outputs: Vec::new(),
                timings_ms: BTreeMap::new(),
                failures: Vec::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, analysis: &str, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(OutputFile {
            analysis: analysis.into(),
            file: name.into(),
            bytes: contents.len(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// A CSV table behind a `# twinlab <schema> v<N>` comment line.
    pub fn write_csv(&mut self, analysis: &str, name: &str, schema: &str, table: &str) -> anyhow::Result<()> {
        let body = format!("# twinlab {schema} v{CSV_SCHEMA_VERSION}\n{table}");
        self.write(analysis, name, &body)
    }

    pub fn finish(&self) -> anyhow::Result<()> {
        let path = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn csv_gets_a_schema_line() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), "kind = 'x'").unwrap();
        out.write_csv("energy", "energy.csv", "energy", "a,b\n1,2\n").unwrap();
        out.finish().unwrap();
        let text = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
        assert_eq!(text, "# twinlab energy v1\na,b\n1,2\n");
        assert_eq!(out.manifest.outputs[0].bytes, text.len());
        assert!(dir.path().join("manifest.json").exists());
    }
}
