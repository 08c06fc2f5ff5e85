use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cloaklab::cloak_transform::{write_materials, MaterialExport};
use cloaklab::experiments::{AuditReport, SweepResult};

use crate::config::ConfigError;

pub const SWEEP_HEADER: &str = "epsilon,visibility_h1,certificate,n_unknowns,runtime_s,flags,config_hash";

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, ConfigError> {
    let io = |e: std::io::Error| ConfigError::new("out", format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io)?;
    Ok(path)
}

pub fn sweep_csv(dir: &Path, result: &SweepResult, hash: &str) -> Result<PathBuf, ConfigError> {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in &result.rows {
        let flags: Vec<&str> = r.flags.iter().map(|f| f.as_str()).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.eps,
            r.visibility,
            r.certificate,
            r.n_unknowns,
            r.runtime_s,
            flags.join(";"),
            hash
        ));
    }
    write(dir, "sweep.csv", s.as_bytes())
}

pub fn audit_json(dir: &Path, name: &str, reports: &[AuditReport]) -> Result<PathBuf, ConfigError> {
    let mut text = serde_json::to_string_pretty(reports).map_err(|e| ConfigError::new("out", e.to_string()))?;
    text.push('\n');
    write(dir, &format!("audit-{name}.json"), text.as_bytes())
}

/// The material export with ` config=<hash>` on the first header line.
pub fn materials(dir: &Path, export: &MaterialExport, hash: &str) -> Result<PathBuf, ConfigError> {
    let mut buf = Vec::new();
    write_materials(export, &mut buf).map_err(|e| ConfigError::new("out", e.to_string()))?;
    let split = buf.iter().position(|&b| b == b'\n').unwrap_or(buf.len());
    let mut out = Vec::with_capacity(buf.len() + 32);
    out.extend_from_slice(&buf[..split]);
    write!(out, " config={hash}").expect("write to memory");
    out.extend_from_slice(&buf[split..]);
    write(dir, "materials.dat", &out)
}
