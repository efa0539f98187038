//! Deterministic report emission: config hashing, file naming, and CSV/JSON
//! writers. Identical inputs must produce byte-identical files, so all
//! float formatting goes through the shortest-roundtrip formatter and JSON
//! field order is fixed by the structs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dims::Dims;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hash of the serialized config; stable across runs because serde_json
/// serializes struct fields in declaration order.
pub fn config_hash<C: Serialize>(config: &C) -> Result<u64> {
    let bytes = serde_json::to_vec(config).map_err(|e| Error::internal(e.to_string()))?;
    Ok(fnv1a(&bytes))
}

/// File stem "{experiment}-{m}x{n}-{hash}".
pub fn file_stem(experiment: &str, dims: Dims, hash: u64) -> String {
    format!("{experiment}-{dims}-{hash:016x}")
}

/// Shortest-roundtrip float formatting, shared by every CSV column.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Writes a CSV file with the given header; an empty row set produces a
/// header-only file.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::internal(format!(
                "csv row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// JSON wrapper written next to each CSV; carries the full config echo.
#[derive(Debug, Clone, Serialize)]
pub struct JsonEnvelope<C: Serialize, D: Serialize> {
    pub experiment: String,
    pub version: String,
    pub master_seed: Option<u64>,
    pub config_hash: String,
    pub config: C,
    pub data: D,
}

pub fn write_json<C: Serialize, D: Serialize>(
    path: &Path,
    envelope: &JsonEnvelope<C, D>,
) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(envelope).map_err(|e| Error::internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Resolves the pair of output paths for one experiment run.
pub fn output_paths(
    dir: &Path,
    experiment: &str,
    dims: Dims,
    hash: u64,
) -> (PathBuf, PathBuf) {
    let stem = file_stem(experiment, dims, hash);
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_known_vectors() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn file_stem_shape() {
        let d = Dims::new(2, 1).unwrap();
        assert_eq!(file_stem("measure", d, 0xabc), "measure-2x1-0000000000000abc");
    }

    #[test]
    fn csv_round_trip_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_csv(&path, &["a", "b"], &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
        write_csv(&path, &["a", "b"], &[vec!["1".into(), fmt_f64(0.5)]]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,0.5\n");
    }

    #[test]
    fn config_hash_stable() {
        #[derive(Serialize)]
        struct C {
            x: u32,
        }
        let h1 = config_hash(&C { x: 1 }).unwrap();
        let h2 = config_hash(&C { x: 1 }).unwrap();
        assert_eq!(h1, h2);
        assert_ne!(h1, config_hash(&C { x: 2 }).unwrap());
    }
}
