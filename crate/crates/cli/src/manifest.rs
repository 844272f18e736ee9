use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Sidecar written next to every output as `<out>.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_fingerprint: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_secs: f64,
    pub threads: usize,
    pub outputs: Vec<OutputFile>,
    pub manifest_hash: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    config_fingerprint: &'a str,
    seed: u64,
    version: &'a str,
    outputs: Vec<&'a Path>,
}

impl RunManifest {
    pub fn new(command: &str, config_fingerprint: String, seed: u64, outputs: &[PathBuf]) -> Self {
        let mut m = RunManifest {
            command: command.into(),
            config_fingerprint,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_secs: 0.0,
            threads: rayon::current_num_threads(),
            outputs: outputs
                .iter()
                .map(|p| OutputFile { path: p.clone(), sha256: String::new() })
                .collect(),
            manifest_hash: String::new(),
        };
        m.manifest_hash = m.compute_hash();
        m
    }

    /// Hash over everything except wall time, thread count and output digests.
    pub fn compute_hash(&self) -> String {
        let h = Hashed {
            command: &self.command,
            config_fingerprint: &self.config_fingerprint,
            seed: self.seed,
            version: &self.version,
            outputs: self.outputs.iter().map(|o| o.path.as_path()).collect(),
        };
        let json = serde_json::to_string(&h).expect("manifest serialises");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Records output digests and writes the sidecar for the first output.
    pub fn finish(mut self, wall_time_secs: f64) -> std::io::Result<PathBuf> {
        self.wall_time_secs = wall_time_secs;
        for o in &mut self.outputs {
            o.sha256 = hex::encode(Sha256::digest(std::fs::read(&o.path)?));
        }
        let path = sidecar_path(&self.outputs[0].path);
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serialises");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn fingerprint_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_wall_time_and_threads() {
        let a = RunManifest::new("mc", "abc".into(), 7, &[PathBuf::from("r.json")]);
        let mut b = a.clone();
        b.wall_time_secs = 12.0;
        b.threads = 99;
        assert_eq!(a.compute_hash(), b.compute_hash());
        let c = RunManifest::new("mc", "abc".into(), 8, &[PathBuf::from("r.json")]);
        assert_ne!(a.manifest_hash, c.manifest_hash);
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar_path(Path::new("out/r.json")), PathBuf::from("out/r.json.manifest.json"));
    }
}
