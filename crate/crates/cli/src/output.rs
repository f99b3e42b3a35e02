//! Output files. Every file starts with a provenance line
//! `# config_sha256=<hex> seed=<seed>`; JSON reports carry the same pair in
//! a `header` object instead.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn line(&self) -> String {
        format!("# config_sha256={} seed={}", self.config_sha256, self.seed)
    }
}

/// Floats with 17 significant digits, which round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub struct OutDir {
    root: PathBuf,
    provenance: Provenance,
}

impl OutDir {
    pub fn create(root: &Path, provenance: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), provenance })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>, CliError> {
        let mut file = BufWriter::new(File::create(self.root.join(name))?);
        writeln!(file, "{}", self.provenance.line())?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(writer)
    }

    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            header: &'a Provenance,
            #[serde(flatten)]
            body: &'a T,
        }
        let text = serde_json::to_string_pretty(&Wrapped { header: &self.provenance, body })
            .map_err(|e| CliError::runtime("IoError", e.to_string()))?;
        fs::write(self.root.join(name), text + "\n")?;
        Ok(())
    }
}
