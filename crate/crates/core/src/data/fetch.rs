use std::io::Read;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub url: String,
    pub sha256: String,
    pub filename: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchStatus {
    Cached,
    Downloaded,
}

impl FetchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FetchStatus::Cached => "cached",
            FetchStatus::Downloaded => "downloaded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchRecord {
    pub name: String,
    pub status: FetchStatus,
    pub path: PathBuf,
}

/// Manifest lines are `name url sha256 filename`; blank lines and `#`
/// comments are skipped.
pub fn parse_manifest(text: &str, origin: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [name, url, sha, filename] = parts.as_slice() else {
            return Err(Error::parse(origin, lineno + 1, "expected `name url sha256 filename`"));
        };
        if sha.len() != 64 || !sha.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::parse(origin, lineno + 1, format!("`{sha}` is not a sha256 hex digest")));
        }
        if filename.contains('/') || filename.contains("..") {
            return Err(Error::parse(origin, lineno + 1, "filename must be a plain file name"));
        }
        out.push(ManifestEntry {
            name: name.to_string(),
            url: url.to_string(),
            sha256: sha.to_ascii_lowercase(),
            filename: filename.to_string(),
        });
    }
    Ok(out)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `file:` URLs are resolved relative to the manifest's directory.
fn download(url: &str, base: &Path) -> std::result::Result<Vec<u8>, String> {
    if let Some(rel) = url.strip_prefix("file:") {
        let p = base.join(rel.trim_start_matches("//"));
        return std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    }
    if url.starts_with("http://") || url.starts_with("https://") {
        let resp = ureq::get(url).call().map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        resp.into_reader().read_to_end(&mut buf).map_err(|e| e.to_string())?;
        return Ok(buf);
    }
    Err(format!("unsupported URL scheme in `{url}`"))
}

/// Makes sure every manifest entry is present in `cache_dir` with a matching
/// checksum, downloading only what is missing or corrupt.
pub fn fetch_datasets(manifest: &Path, cache_dir: &Path) -> Result<Vec<FetchRecord>> {
    let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let entries = parse_manifest(&text, &manifest.display().to_string())?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    if !entries.is_empty() {
        std::fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    }
    let mut report = Vec::with_capacity(entries.len());
    for e in entries {
        let target = cache_dir.join(&e.filename);
        if let Ok(bytes) = std::fs::read(&target) {
            if sha256_hex(&bytes) == e.sha256 {
                report.push(FetchRecord {
                    name: e.name,
                    status: FetchStatus::Cached,
                    path: target,
                });
                continue;
            }
        }
        let bytes = download(&e.url, base).map_err(|msg| Error::Fetch {
            entry: e.name.clone(),
            msg,
        })?;
        let got = sha256_hex(&bytes);
        if got != e.sha256 {
            return Err(Error::Fetch {
                entry: e.name,
                msg: format!("checksum mismatch: expected {}, got {got}", e.sha256),
            });
        }
        std::fs::write(&target, &bytes).map_err(|err| Error::io(&target, err))?;
        report.push(FetchRecord {
            name: e.name,
            status: FetchStatus::Downloaded,
            path: target,
        });
    }
    Ok(report)
}
