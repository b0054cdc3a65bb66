//! Plain-text basis files and the on-disk basis cache.
//!
//! ```text
//! MFBASIS 1
//! level=37
//! delta=3
//! weight=2
//! precision=21
//! genus=4
//! 1 0 0 ...
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use super::{s2_basis, CuspBasis, ModSymError};
use crate::modgroup::LevelGroup;

pub fn emit_basis(b: &CuspBasis) -> String {
    let mut s = String::new();
    s.push_str("MFBASIS 1\n");
    s.push_str(&format!("level={}\n", b.group.level()));
    s.push_str(&format!("delta={}\n", b.group.notation()));
    s.push_str("weight=2\n");
    s.push_str(&format!("precision={}\n", b.precision));
    s.push_str(&format!("genus={}\n", b.genus));
    for f in &b.forms {
        let row: Vec<String> = f.iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

fn header<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, ModSymError> {
    let line = line.ok_or_else(|| ModSymError::Malformed(format!("missing {key}")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| ModSymError::Malformed(format!("expected {key}=, got {line:?}")))
}

fn number(text: &str, key: &str) -> Result<usize, ModSymError> {
    text.parse()
        .map_err(|_| ModSymError::Malformed(format!("{key} is not a number: {text:?}")))
}

/// Reads a basis file, re-saturating the rows.
pub fn ingest_basis(text: &str) -> Result<CuspBasis, ModSymError> {
    let mut lines = text.split('\n');
    if lines.next() != Some("MFBASIS 1") {
        return Err(ModSymError::Malformed("missing MFBASIS 1 header".into()));
    }
    let level = number(header(lines.next(), "level")?, "level")? as u64;
    let delta = header(lines.next(), "delta")?;
    let weight = header(lines.next(), "weight")?;
    if weight != "2" {
        return Err(ModSymError::Malformed(format!(
            "unsupported weight {weight}"
        )));
    }
    let precision = number(header(lines.next(), "precision")?, "precision")?;
    let declared = number(header(lines.next(), "genus")?, "genus")?;
    let group = LevelGroup::parse(level, delta)
        .map_err(|e| ModSymError::Malformed(format!("delta: {e}")))?;
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<BigInt>, _> = line.split(' ').map(|t| t.parse::<BigInt>()).collect();
        let row = row.map_err(|_| ModSymError::Malformed(format!("bad row {line:?}")))?;
        if row.len() != precision {
            return Err(ModSymError::Malformed(format!(
                "row has {} entries, expected {precision}",
                row.len()
            )));
        }
        rows.push(row);
    }
    if !text.ends_with('\n') {
        return Err(ModSymError::Malformed("missing final newline".into()));
    }
    let genus = group.genus() as usize;
    if declared != genus || rows.len() != genus {
        return Err(ModSymError::DimensionMismatch {
            expected: genus,
            got: if declared != genus {
                declared
            } else {
                rows.len()
            },
        });
    }
    CuspBasis::from_rows(group, precision, rows)
}

pub fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn file_stem(group: &LevelGroup) -> String {
    format!("X{}_{}", group.level(), group.notation().replace(',', "-"))
}

/// File name under which an externally supplied basis is looked up.
pub fn supplied_name(group: &LevelGroup) -> String {
    format!("{}.mfb", file_stem(group))
}

/// Directory of cached bases keyed by (level, Δ, precision). Each entry has a
/// sha256 sidecar; a mismatch means the entry is recomputed. Writes go through
/// a temporary file and a rename, so the last writer wins.
#[derive(Clone, Debug)]
pub struct BasisCache {
    dir: PathBuf,
}

impl BasisCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, ModSymError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| ModSymError::Io(e.to_string()))?;
        Ok(BasisCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, group: &LevelGroup, precision: usize) -> PathBuf {
        self.dir
            .join(format!("{}_B{precision}.mfb", file_stem(group)))
    }

    pub fn load(&self, group: &LevelGroup, precision: usize) -> Option<CuspBasis> {
        let path = self.path(group, precision);
        let text = fs::read_to_string(&path).ok()?;
        let sum = fs::read_to_string(path.with_extension("sha256")).ok()?;
        if sum.trim() != checksum(&text) {
            return None;
        }
        let b = ingest_basis(&text).ok()?;
        (b.group == *group && b.precision == precision).then_some(b)
    }

    pub fn store(&self, b: &CuspBasis) -> Result<(), ModSymError> {
        let path = self.path(&b.group, b.precision);
        let text = emit_basis(b);
        write_atomic(
            &path.with_extension("sha256"),
            &format!("{}\n", checksum(&text)),
        )?;
        write_atomic(&path, &text)
    }

    pub fn get_or_compute(
        &self,
        group: &LevelGroup,
        precision: usize,
    ) -> Result<CuspBasis, ModSymError> {
        if let Some(b) = self.load(group, precision) {
            return Ok(b);
        }
        let b = s2_basis(group, precision)?;
        self.store(&b)?;
        Ok(b)
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), ModSymError> {
    let io = |e: std::io::Error| ModSymError::Io(e.to_string());
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile_in(dir).map_err(io)?;
    tmp.1.write_all(text.as_bytes()).map_err(io)?;
    tmp.1.sync_all().map_err(io)?;
    drop(tmp.1);
    fs::rename(&tmp.0, path).map_err(io)
}

fn tempfile_in(dir: &Path) -> std::io::Result<(PathBuf, fs::File)> {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    loop {
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        let p = dir.join(format!(".tmp-{}-{n}", std::process::id()));
        match fs::OpenOptions::new().write(true).create_new(true).open(&p) {
            Ok(f) => return Ok((p, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        }
    }
}
