//! JSON-Lines persistence for evaluation logs, with a JSON metadata sidecar.
//!
//! One record per line: `{"i":…,"op":…,"theta":[…],"x":[…],"f":…}`. Floats are
//! written in shortest round-trip form and parsed with correct rounding, so a
//! save/load cycle reproduces every bit.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::engine::{Evaluation, EvaluationLog, RunMetadata};
use crate::error::{Error, Result};

pub const LOG_FILE: &str = "log.jsonl";
pub const META_FILE: &str = "meta.json";

pub fn write_records<W: Write>(records: &[Evaluation], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Parses JSON Lines; `origin` names the source in error messages.
pub fn read_records<R: BufRead>(input: R, origin: &Path) -> Result<Vec<Evaluation>> {
    let mut records = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Evaluation = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn save_records(records: &[Evaluation], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(records, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_records(path: &Path) -> Result<Vec<Evaluation>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file), path)
}

/// Writes `log.jsonl` and `meta.json` into `dir`, creating it if needed.
pub fn save_run(log: &EvaluationLog, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let log_path = dir.join(LOG_FILE);
    save_records(&log.records, &log_path)?;
    let meta_path = dir.join(META_FILE);
    let meta = serde_json::to_string_pretty(&log.meta)?;
    fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
    Ok(log_path)
}

/// Sidecar metadata next to a log file, when present.
pub fn load_metadata(log_path: &Path) -> Result<Option<RunMetadata>> {
    let meta_path = log_path.with_file_name(META_FILE);
    if !meta_path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::Parse {
        path: meta_path,
        line: e.line(),
        message: e.to_string(),
    })
}
