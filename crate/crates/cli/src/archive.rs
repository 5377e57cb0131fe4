use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spinthermo_core::analysis::ScalingCurve;

use crate::failure::Failure;

/// Directory `<root>/<timestamp>-<name>` holding one run.
pub struct Archive {
    dir: PathBuf,
    log: File,
    provenance: BTreeMap<String, serde_json::Value>,
}

fn clean_name(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "run".into()
    } else {
        s
    }
}

fn write_new(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut f = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| Failure::io(path, e))?;
    f.write_all(bytes).map_err(|e| Failure::io(path, e))
}

impl Archive {
    pub fn create(root: &Path, name: &str) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::io(root, e))?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
        let base = format!("{stamp}-{}", clean_name(name));
        let mut dir = root.join(&base);
        let mut k = 1;
        while dir.exists() {
            dir = root.join(format!("{base}.{k}"));
            k += 1;
        }
        fs::create_dir(&dir).map_err(|e| Failure::io(&dir, e))?;
        let log_path = dir.join("log.txt");
        let log = File::create(&log_path).map_err(|e| Failure::io(&log_path, e))?;
        Ok(Archive {
            dir,
            log,
            provenance: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn log(&mut self, line: impl AsRef<str>) {
        let t = chrono::Utc::now().format("%H:%M:%S%.3f");
        // the log is best effort; a failed write must not mask the result
        let _ = writeln!(self.log, "[{t}] {}", line.as_ref());
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
        text.push('\n');
        write_new(&self.dir.join(file), text.as_bytes())
    }

    pub fn write_curve(&mut self, curve: &ScalingCurve) -> Result<(), Failure> {
        let dir = self.dir.join("curves");
        fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        let file = format!("{}.csv", clean_name(&curve.name));
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        write_new(&dir.join(&file), &buf)?;
        self.provenance.insert(
            file,
            serde_json::json!({ "method": curve.method, "fit": curve.fit }),
        );
        Ok(())
    }

    /// Records the method behind a number in `result.json`.
    pub fn note(&mut self, key: impl Into<String>, method: impl Into<String>) {
        self.provenance
            .insert(key.into(), serde_json::json!({ "method": method.into() }));
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        if !self.provenance.is_empty() {
            self.write_json("provenance.json", &self.provenance)?;
        }
        self.log("done");
        Ok(self.dir)
    }
}
