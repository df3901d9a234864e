use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::commands::Resolved;
use crate::config::RunConfig;
use crate::CliError;

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `manifest.json` next to the output file.
pub fn write(cfg: &RunConfig, resolved: &Resolved, output: &[u8]) -> Result<(), CliError> {
    let out = cfg.out.as_ref().expect("manifest needs an output path");
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": paramnet::VERSION,
        "command": cfg.command,
        "input": {
            "path": cfg.input_path.display().to_string(),
            "sha256": sha256_hex(&cfg.input_bytes),
        },
        "output": {
            "path": out.display().to_string(),
            "sha256": sha256_hex(output),
            "format": cfg.format,
        },
        "sweep": cfg.sweep,
        "resolved": resolved,
        "threads": rayon::current_num_threads(),
        "created_unix_s": created,
    });
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest renders");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| CliError::Write { path, source })
}
