//! Staged outputs, committed all at once by write-temp-then-rename.

use std::fs;
use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::LoadedConfig;
use crate::{CliError, CliResult};

#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn bytes(&mut self, name: &str, data: Vec<u8>) {
        self.files.push((name.to_string(), data));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut data = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        data.push(b'\n');
        self.bytes(name, data);
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file to a temporary name in `dir`, then renames them into
    /// place. On failure the temporaries are removed and nothing is renamed.
    pub fn commit(self, dir: &Path) -> CliResult<()> {
        let fail = |e: std::io::Error, what: &Path| {
            CliError::Output(format!("{}: {e}", what.display()))
        };
        fs::create_dir_all(dir).map_err(|e| fail(e, dir))?;
        let pid = std::process::id();
        let mut staged = Vec::new();
        for (name, data) in &self.files {
            let tmp = dir.join(format!(".{name}.{pid}.tmp"));
            if let Err(e) = fs::write(&tmp, data) {
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(fail(e, &tmp));
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dst) in &staged {
            fs::rename(tmp, dst).map_err(|e| fail(e, dst))?;
        }
        Ok(())
    }
}

/// Record of one run. Timings live here and nowhere else, so the primary
/// outputs are byte-identical across reruns.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config_path: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
    pub finished_unix_seconds: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &LoadedConfig,
        seed: Option<u64>,
        outputs: &Outputs,
        elapsed: Duration,
    ) -> Self {
        let mut names = outputs.names();
        names.push("manifest.json".into());
        RunManifest {
            command: command.into(),
            config_hash: config.hash.clone(),
            config_path: config.path.as_ref().map(|p| p.display().to_string()),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: names,
            wall_seconds: elapsed.as_secs_f64(),
            finished_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }
}

/// Shortest round-trip decimal, empty for missing values.
pub fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}
