//! JSON-lines reading/writing and run manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOL_NAME: &str = "eaqa";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written as the first line of every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input name to `sha256:<hex>` digest of its bytes.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    manifest: Manifest,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Manifest {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, name: &str, path: &Path) -> Result<Self> {
        self.inputs.insert(name.to_string(), file_digest(path)?);
        Ok(self)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&ManifestLine {
            manifest: self.clone(),
        })
        .expect("manifest serializes")
    }
}

/// True for a line produced by [`Manifest::to_json_line`] (or a `# manifest:` comment).
pub fn is_manifest_line(line: &str) -> bool {
    let trimmed = line.trim_start();
    trimmed.starts_with("{\"manifest\"") || trimmed.starts_with("# manifest:")
}

pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("sha256:{}", hex::encode(hasher.finalize())))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Visit each non-blank, non-manifest line with its 1-based line number.
pub fn for_each_line<R: BufRead>(
    reader: R,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(format!("<line {line_no}>"), e))?;
        if line.trim().is_empty() || is_manifest_line(&line) {
            continue;
        }
        f(line_no, &line)?;
    }
    Ok(())
}

pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for_each_line(reader, |line_no, line| {
        let value = serde_json::from_str(line)
            .map_err(|e| Error::Malformed(e.to_string()).at_line(line_no))?;
        out.push(value);
        Ok(())
    })?;
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = open(path)?;
    parse_jsonl(reader).map_err(|e| match e {
        Error::AtLine { line, source } => Error::Malformed(format!(
            "{}:{line}: {source}",
            path.display()
        )),
        other => other,
    })
}

/// Serialize records as JSON lines, preceded by the manifest line.
pub fn write_jsonl<T: Serialize>(
    path: &Path,
    manifest: &Manifest,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", manifest.to_json_line()).map_err(io)?;
    for record in records {
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
