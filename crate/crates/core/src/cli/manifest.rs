use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Conventions, PhysicalParams};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Constants derived from the parameters used by the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// g0 = ω_c/L (rad/(s·m))
    pub single_photon_coupling: f64,
    /// √(ħ/(m ω_m)) (m)
    pub displacement_scale: f64,
    pub mechanical_frequency: f64,
    /// ε_L (1/s) of the physical drive, when the command has one.
    pub pump_amplitude: Option<f64>,
    /// P_L (W)
    pub pump_power: Option<f64>,
}

impl DerivedConstants {
    pub fn new(params: &PhysicalParams) -> Self {
        Self {
            single_photon_coupling: params.single_photon_coupling(),
            displacement_scale: params.displacement_scale(),
            mechanical_frequency: params.mechanical_frequency,
            pump_amplitude: None,
            pump_power: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Resolved configuration; loading it reproduces the run.
    pub config: String,
    pub conventions: Conventions,
    pub threads: usize,
    pub derived: DerivedConstants,
    pub outputs: Vec<OutputRecord>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(io::Error::other)
    }

    /// Files whose current checksum differs from the recorded one.
    pub fn stale_outputs(&self, dir: &Path) -> io::Result<Vec<String>> {
        let mut stale = Vec::new();
        for out in &self.outputs {
            if checksum(&fs::read(dir.join(&out.file))?) != out.sha256 {
                stale.push(out.file.clone());
            }
        }
        Ok(stale)
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the artifacts of one run and writes them under `dir`.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), records: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: checksum(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn into_records(self) -> Vec<OutputRecord> {
        self.records
    }
}
