use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    created_utc: String,
    command: &'a str,
    params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let file = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Writes `<primary_out>.manifest.json` describing one invocation: the
/// resolved parameters plus content digests of all inputs and outputs, so
/// a result file can be traced back to exactly what produced it.
pub fn write(
    command: &str,
    primary_out: &Path,
    params: serde_json::Value,
    seed: Option<u64>,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<PathBuf> {
    let digests = |paths: &[&Path]| -> Result<Vec<FileDigest>> {
        paths
            .iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.display().to_string(),
                    sha256: sha256_hex(p)?,
                })
            })
            .collect()
    };
    let manifest = Manifest {
        tool: "latency-arb",
        tool_version: env!("CARGO_PKG_VERSION"),
        created_utc: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        command,
        params,
        seed,
        inputs: digests(inputs)?,
        outputs: digests(outputs)?,
    };
    let mut os = primary_out.as_os_str().to_owned();
    os.push(".manifest.json");
    let path = PathBuf::from(os);
    let mut file =
        File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    file.write_all(b"\n")?;
    log::info!("wrote {}", path.display());
    Ok(path)
}
