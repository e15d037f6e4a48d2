use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const MANIFEST: &str = "manifest.json";

/// Record of one run: enough to repeat it and check its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    /// Input path to SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub version: String,
}

pub fn sha256_file(path: &Path) -> Result<String, Failure> {
    let mut f = File::open(path).map_err(|e| io_failure(path, e))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h).map_err(|e| io_failure(path, e))?;
    Ok(format!("{:x}", h.finalize()))
}

pub fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// Output directory that hashes everything written into it.
pub struct OutDir {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        self.write_with(name, |w| w.write_all(bytes))
    }

    /// Streams a file through `fill`, hashing on the way.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        let mut w = HashingWriter {
            inner: BufWriter::new(file),
            hash: Sha256::new(),
        };
        fill(&mut w)
            .and_then(|_| w.inner.flush())
            .map_err(|e| io_failure(&path, e))?;
        self.written
            .insert(name.to_string(), format!("{:x}", w.hash.finalize()));
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        inputs: &[&Path],
    ) -> Result<(), Failure> {
        let mut digests = BTreeMap::new();
        for p in inputs {
            digests.insert(p.display().to_string(), sha256_file(p)?);
        }
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            seeds,
            inputs: digests,
            outputs: self.written,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| io_failure(&path, e))
    }
}

struct HashingWriter<W: Write> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}
