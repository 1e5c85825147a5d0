//! Output files with a reproducibility header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use circle_chaos::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Everything needed to rerun a command exactly.
#[derive(Debug, Clone)]
pub struct Header {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64) -> Self {
        let digest = Sha256::digest(config_bytes);
        let config_sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self { command: command.to_string(), config_sha256, seed }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "versions": {
                "circle-chaos": circle_chaos::VERSION,
                "circle-chaos-cli": env!("CARGO_PKG_VERSION"),
            },
        })
    }
}

pub struct Outputs {
    dir: PathBuf,
    header: Header,
}

impl Outputs {
    pub fn new(dir: &Path, header: Header) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), header })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}-{}.{ext}", self.header.command, self.header.seed))
    }

    /// Writes `{"header": ..., "report": ...}` as pretty JSON.
    pub fn write_json(&self, report: &impl Serialize) -> Result<PathBuf> {
        let path = self.path("json");
        let doc = json!({ "header": self.header.to_json(), "report": report });
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    /// Opens the CSV output and writes the `# {header}` line.
    pub fn csv(&self) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.path("csv");
        let mut w = BufWriter::new(File::create(&path)?);
        writeln!(w, "# {}", self.header.to_json())?;
        Ok((path, w))
    }

    /// CSV with a header comment, column names and 17-digit numeric rows.
    pub fn write_table(&self, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<PathBuf> {
        let (path, mut w) = self.csv()?;
        writeln!(w, "{}", columns.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| circle_chaos::measures::fmt17(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        Ok(path)
    }
}
