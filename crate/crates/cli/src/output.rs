use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qrng_core::io::write_ascii_bits;
use qrng_core::{BitString, QrngConfig, Result};
use serde::Serialize;
use tempfile::NamedTempFile;

/// Output directory of one run. Every file lands atomically (temp file in the
/// same directory, then rename) and is listed in the manifest.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    /// Arguments that replay this run: `qrng <argv...>`.
    argv: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a QrngConfig>,
    outputs: &'a [String],
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<()> {
        let tmp = NamedTempFile::new_in(&self.dir)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            f(&mut w)?;
            w.flush()?;
        }
        tmp.persist(self.dir.join(name)).map_err(|e| e.error)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    /// Writes bits as an ASCII bit file, or packed bytes with a `.bin` name.
    pub fn bits(&mut self, stem: &str, bits: &BitString, packed: bool) -> Result<String> {
        let name = if packed {
            format!("{stem}.bin")
        } else {
            format!("{stem}.bits")
        };
        self.write_with(&name, |w| {
            if packed {
                w.write_all(&bits.to_packed_bytes())?;
                Ok(())
            } else {
                write_ascii_bits(w, bits)
            }
        })?;
        Ok(name)
    }

    pub fn finish(
        mut self,
        command: &str,
        argv: &[String],
        seed: Option<u64>,
        config: Option<&QrngConfig>,
    ) -> Result<()> {
        let outputs = self.written.clone();
        self.json(
            "manifest.json",
            &Manifest {
                tool: "qrng",
                version: env!("CARGO_PKG_VERSION"),
                command,
                argv,
                seed,
                config,
                outputs: &outputs,
            },
        )
    }
}
