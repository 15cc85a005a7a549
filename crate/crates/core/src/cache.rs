//! On-disk cache for correlation tables.
//!
//! Each entry is a pair of files sharing a basename (the content key):
//!
//! * `<key>.bin` – little-endian `f64` pairs `(re, im)`, row-major
//!   `n_probe × n_anchor`.
//! * `<key>.meta.json` – grid, pulse, stride, dipole sign, the dipole mean
//!   record and the SHA-256 of the binary payload.
//!
//! Writes go through a temporary file and a rename, binary first, so a
//! sidecar always describes a complete payload.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlation::{CorrelationTable, DipoleRecord, TableMeta};
use crate::error::{Error, Result};
use crate::C64;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub meta: TableMeta,
    pub n_probe: usize,
    pub n_anchor: usize,
    pub probe_times: Vec<f64>,
    pub anchor_index: Vec<usize>,
    pub dipole: DipoleRecord,
    pub content_sha256: String,
}

/// SHA-256 over the canonical JSON encoding of `value`.
pub fn content_key<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("key inputs serialize");
    hex::encode(Sha256::digest(&bytes))
}

pub fn encode_values(values: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_values(bytes: &[u8]) -> Result<Vec<C64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Cache(format!("payload length {} is not a multiple of 16", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect())
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` via a sibling temporary file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(
        ".{name}.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TableCache {
    dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EntryStatus {
    Ok,
    Corrupt(String),
}

#[derive(Clone, Debug)]
pub struct CacheEntry {
    pub key: String,
    pub backend: String,
    pub cep: f64,
    pub bytes: u64,
    pub status: EntryStatus,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn bin_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.bin"))
    }

    fn meta_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.meta.json"))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.meta_path(key).exists()
    }

    pub fn store(&self, table: &CorrelationTable, dipole: &DipoleRecord) -> Result<()> {
        let key = &table.meta.key;
        let payload = encode_values(&table.values);
        let sidecar = Sidecar {
            format_version: FORMAT_VERSION,
            meta: table.meta.clone(),
            n_probe: table.n_probe(),
            n_anchor: table.n_anchor(),
            probe_times: table.probe_times.clone(),
            anchor_index: table.anchor_index.clone(),
            dipole: dipole.clone(),
            content_sha256: hex::encode(Sha256::digest(&payload)),
        };
        atomic_write(&self.bin_path(key), &payload)?;
        atomic_write(&self.meta_path(key), &serde_json::to_vec_pretty(&sidecar)?)?;
        Ok(())
    }

    /// `Ok(None)` when no entry exists, `Err(Error::Cache)` when one exists
    /// but fails its integrity checks.
    pub fn load(&self, key: &str) -> Result<Option<(CorrelationTable, DipoleRecord)>> {
        let meta_path = self.meta_path(key);
        if !meta_path.exists() {
            return Ok(None);
        }
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(&meta_path)?)
            .map_err(|e| Error::Cache(format!("{}: {e}", meta_path.display())))?;
        let payload = fs::read(self.bin_path(key))
            .map_err(|e| Error::Cache(format!("missing payload for {key}: {e}")))?;
        Self::verify(&sidecar, key, &payload)?;
        let table = CorrelationTable {
            probe_times: sidecar.probe_times,
            anchor_index: sidecar.anchor_index,
            values: decode_values(&payload)?,
            meta: sidecar.meta,
        };
        Ok(Some((table, sidecar.dipole)))
    }

    fn verify(sidecar: &Sidecar, key: &str, payload: &[u8]) -> Result<()> {
        if sidecar.format_version != FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported format {}", sidecar.format_version)));
        }
        if sidecar.meta.key != key {
            return Err(Error::Cache(format!("sidecar key {} != {key}", sidecar.meta.key)));
        }
        if hex::encode(Sha256::digest(payload)) != sidecar.content_sha256 {
            return Err(Error::Cache(format!("content hash mismatch for {key}")));
        }
        if payload.len() != sidecar.n_probe * sidecar.n_anchor * 16
            || sidecar.probe_times.len() != sidecar.n_probe
            || sidecar.anchor_index.len() != sidecar.n_anchor
        {
            return Err(Error::Cache(format!("shape mismatch for {key}")));
        }
        Ok(())
    }

    pub fn list(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        if !self.dir.exists() {
            return Ok(out);
        }
        let mut names: Vec<String> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().map(str::to_owned))
            .filter_map(|n| n.strip_suffix(".meta.json").map(str::to_owned))
            .collect();
        names.sort();
        for key in names {
            let bytes = fs::metadata(self.bin_path(&key)).map(|m| m.len()).unwrap_or(0);
            let sidecar: Option<Sidecar> = fs::read(self.meta_path(&key))
                .ok()
                .and_then(|b| serde_json::from_slice(&b).ok());
            let status = match (&sidecar, fs::read(self.bin_path(&key))) {
                (None, _) => EntryStatus::Corrupt("unreadable sidecar".into()),
                (Some(_), Err(e)) => EntryStatus::Corrupt(format!("payload: {e}")),
                (Some(s), Ok(p)) => match Self::verify(s, &key, &p) {
                    Ok(()) => EntryStatus::Ok,
                    Err(e) => EntryStatus::Corrupt(e.to_string()),
                },
            };
            out.push(CacheEntry {
                backend: sidecar.as_ref().map(|s| s.meta.backend.clone()).unwrap_or_default(),
                cep: sidecar.as_ref().map(|s| s.meta.pulse.cep).unwrap_or(f64::NAN),
                key,
                bytes,
                status,
            });
        }
        Ok(out)
    }

    pub fn remove(&self, key: &str) -> Result<bool> {
        let mut removed = false;
        for p in [self.meta_path(key), self.bin_path(key)] {
            if p.exists() {
                fs::remove_file(p)?;
                removed = true;
            }
        }
        Ok(removed)
    }

    pub fn clear(&self) -> Result<usize> {
        let keys: Vec<String> = self.list()?.into_iter().map(|e| e.key).collect();
        for k in &keys {
            self.remove(k)?;
        }
        Ok(keys.len())
    }
}
