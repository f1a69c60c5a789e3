//! Content-addressed record of a pipeline run: the resolved config digest,
//! the digest of every file read or written, all seeds, and the ordered stage
//! log. Each writing subcommand appends one stage.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use topiclab::digest::sha256_hex;

use crate::error::{HarnessError, Result};

const MANIFEST_FORMAT: &str = "topiclab-manifest";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(HarnessError::file(path))?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub config_digest: String,
    pub params: Value,
    pub inputs: BTreeMap<String, FileDigest>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub seeds: BTreeMap<String, u64>,
    pub wall_time_ms: u64,
}

impl StageRecord {
    pub fn new(stage: &str, config_digest: String, params: Value) -> Self {
        StageRecord {
            stage: stage.into(),
            config_digest,
            params,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            wall_time_ms: 0,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<&mut Self> {
        self.inputs.insert(role.into(), file_digest(path)?);
        Ok(self)
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<&mut Self> {
        self.outputs.insert(role.into(), file_digest(path)?);
        Ok(self)
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.seeds.insert(name.into(), seed);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub artifact_version: String,
    /// Config digest of the most recent stage.
    pub config_digest: String,
    /// Latest digest per artifact role, across inputs and outputs of all stages.
    pub input_digests: BTreeMap<String, FileDigest>,
    /// `stage.name -> seed` for every seed any stage used.
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub created_at: String,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            format: MANIFEST_FORMAT.into(),
            artifact_version: ARTIFACT_VERSION.into(),
            config_digest: String::new(),
            input_digests: BTreeMap::new(),
            seeds: BTreeMap::new(),
            stages: Vec::new(),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::file(path))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
        if m.format != MANIFEST_FORMAT {
            return Err(HarnessError::Manifest(format!("{}: not a manifest (format {:?})", path.display(), m.format)));
        }
        Ok(m)
    }

    pub fn load_or_new(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::read(path)
        } else {
            Ok(RunManifest::default())
        }
    }

    pub fn record(&mut self, stage: StageRecord) {
        self.config_digest = stage.config_digest.clone();
        for (role, d) in stage.inputs.iter().chain(&stage.outputs) {
            self.input_digests.insert(role.clone(), d.clone());
        }
        for (name, &seed) in &stage.seeds {
            self.seeds.insert(format!("{}.{name}", stage.stage), seed);
        }
        self.stages.push(stage);
    }

    /// Writes via a temporary file and rename, so readers never see a partial manifest.
    pub fn write(&self, path: &Path) -> Result<()> {
        if self.stages.is_empty() {
            return Err(HarnessError::Manifest("no stage has run".into()));
        }
        let mut text = serde_json::to_string_pretty(self).map_err(|e| HarnessError::Manifest(e.to_string()))?;
        text.push('\n');
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text).map_err(HarnessError::file(&tmp))?;
        std::fs::rename(&tmp, path).map_err(HarnessError::file(path))
    }

    /// The manifest without fields that legitimately differ between identical
    /// runs: `created_at` and per-stage wall times.
    pub fn normalized(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("manifest serializes");
        let obj = v.as_object_mut().expect("object");
        obj.remove("created_at");
        if let Some(Value::Array(stages)) = obj.get_mut("stages") {
            for s in stages {
                s.as_object_mut().expect("object").remove("wall_time_ms");
            }
        }
        v
    }

    /// Recomputes the digest of every recorded file; returns the roles whose
    /// file is missing or has changed.
    pub fn verify(&self) -> Vec<String> {
        self.input_digests
            .iter()
            .filter(|(_, d)| file_digest(Path::new(&d.path)).map(|now| now.sha256 != d.sha256).unwrap_or(true))
            .map(|(role, _)| role.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_merges_digests_and_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        std::fs::write(&f, "abc").unwrap();
        let mut m = RunManifest::default();
        let mut s = StageRecord::new("fit", "cfg".into(), serde_json::json!({"k": 3}));
        s.input("dtm", &f).unwrap().seed("seed", 7);
        m.record(s);
        assert_eq!(m.seeds["fit.seed"], 7);
        assert_eq!(m.input_digests["dtm"].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(m.verify().is_empty());
        std::fs::write(&f, "abd").unwrap();
        assert_eq!(m.verify(), ["dtm"]);
    }

    #[test]
    fn normalized_drops_volatile_fields() {
        let mut a = RunManifest::default();
        let mut s = StageRecord::new("prep", "c".into(), Value::Null);
        s.wall_time_ms = 5;
        a.record(s.clone());
        let mut b = a.clone();
        b.created_at = "1999-01-01T00:00:00Z".into();
        b.stages[0].wall_time_ms = 99;
        assert_ne!(a, b);
        assert_eq!(a.normalized(), b.normalized());
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        assert!(RunManifest::default().write(&path).is_err());
        let mut m = RunManifest::default();
        m.record(StageRecord::new("prep", "c".into(), Value::Null));
        m.write(&path).unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), m);
        assert_eq!(RunManifest::load_or_new(&dir.path().join("none.json")).unwrap().stages.len(), 0);
    }
}
