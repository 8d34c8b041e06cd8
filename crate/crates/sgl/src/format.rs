//! On-disk formats: the `SGLM` matrix/vector layout, its CSV fallback,
//! membership lists and instance bundles.
//!
//! Binary layout: magic `SGLM`, then `u32` rows, `u32` cols and `u32` flags
//! (always 0), all little-endian, followed by `rows·cols` row-major `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sgl_core::{GroupPartition, Matrix, ProblemInstance, Truth};

use crate::config::parse_key_values;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGLM";
const HEADER_LEN: usize = 16;

pub fn encode_matrix(rows: usize, cols: usize, data: &[f64]) -> Vec<u8> {
    assert_eq!(rows * cols, data.len(), "matrix shape does not match data");
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Decodes the binary layout; `None` if the magic is absent.
pub fn decode_matrix(bytes: &[u8]) -> Option<std::result::Result<(usize, usize, Vec<f64>), String>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return None;
    }
    Some((|| {
        if bytes.len() < HEADER_LEN {
            return Err("truncated header".to_string());
        }
        let rows = u32_at(bytes, 4) as usize;
        let cols = u32_at(bytes, 8) as usize;
        let flags = u32_at(bytes, 12);
        if flags != 0 {
            return Err(format!("unsupported flags {flags}"));
        }
        let expected = HEADER_LEN + 8 * rows * cols;
        if bytes.len() != expected {
            return Err(format!("expected {expected} bytes for {rows}x{cols}, found {}", bytes.len()));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((rows, cols, data))
    })())
}

/// Headerless comma-separated values, one matrix row per line.
pub fn parse_csv_matrix(text: &str) -> std::result::Result<(usize, usize, Vec<f64>), String> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v = field
                .trim()
                .parse::<f64>()
                .map_err(|_| format!("line {}: cannot parse `{}` as a number", i + 1, field.trim()))?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => return Err(format!("line {}: expected {c} fields, found {width}", i + 1)),
            _ => {}
        }
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), data))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_table(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let bytes = read_bytes(path)?;
    let parsed = match decode_matrix(&bytes) {
        Some(r) => r,
        None => {
            let text = String::from_utf8(bytes).map_err(|_| Error::format(path, "neither SGLM binary nor UTF-8 CSV"))?;
            parse_csv_matrix(&text)
        }
    };
    parsed.map_err(|r| Error::format(path, r))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

pub fn write_matrix(path: &Path, x: &Matrix) -> Result<()> {
    write_bytes(path, &encode_matrix(x.rows(), x.cols(), x.as_slice()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let (rows, cols, data) = read_table(path)?;
    if rows == 0 || cols == 0 {
        return Err(Error::format(path, "empty matrix"));
    }
    Ok(Matrix::from_row_major(rows, cols, data)?)
}

/// Vectors are stored as `n × 1` matrices.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    write_bytes(path, &encode_matrix(v.len(), 1, v))
}

/// Reads an `n × 1` or `1 × n` table as a vector.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let (rows, cols, data) = read_table(path)?;
    if rows != 1 && cols != 1 {
        return Err(Error::format(path, format!("expected a vector, found a {rows}x{cols} table")));
    }
    Ok(data)
}

/// Group labels, comma- or newline-separated.
pub fn read_membership(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<i64>().map_err(|_| Error::format(path, format!("bad group label `{s}`"))))
        .collect()
}

pub fn write_membership(path: &Path, labels: &[i64]) -> Result<()> {
    let mut text = String::new();
    for l in labels {
        writeln!(text, "{l}").unwrap();
    }
    write_text(path, &text)
}

pub const DESIGN_FILE: &str = "design.mat";
pub const RESPONSE_FILE: &str = "response.vec";
pub const META_FILE: &str = "meta.cfg";
pub const GROUPS_FILE: &str = "groups.csv";
pub const TRUTH_FILE: &str = "truth.vec";

/// Scalar metadata stored next to a bundle's arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleMeta {
    pub lambda: f64,
    pub gamma: f64,
    pub sigma_w: f64,
    pub seed: u64,
}

/// Writes `design.mat`, `response.vec`, `groups.csv`, `meta.cfg` and, when
/// the instance is synthetic, `truth.vec`.
pub fn save_instance(dir: &Path, instance: &ProblemInstance, meta: &BundleMeta) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix(&dir.join(DESIGN_FILE), &instance.design)?;
    write_vector(&dir.join(RESPONSE_FILE), &instance.response)?;
    write_membership(&dir.join(GROUPS_FILE), &instance.partition.membership())?;
    let mut text = format!(
        "lambda={}\ngamma={}\nsigma_w={}\nseed={}\ngroups={GROUPS_FILE}\n",
        meta.lambda, meta.gamma, meta.sigma_w, meta.seed
    );
    if let Some(truth) = &instance.truth {
        write_vector(&dir.join(TRUTH_FILE), &truth.beta0)?;
        writeln!(text, "truth={TRUTH_FILE}").unwrap();
    }
    write_text(&dir.join(META_FILE), &text)
}

pub fn load_instance(dir: &Path) -> Result<(ProblemInstance, BundleMeta)> {
    let meta_path = dir.join(META_FILE);
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let kv = parse_key_values(&text)?;
    let get = |k: &str| kv.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let num = |k: &str| -> Result<f64> {
        let v = get(k).ok_or_else(|| Error::format(&meta_path, format!("missing key `{k}`")))?;
        v.parse().map_err(|_| Error::format(&meta_path, format!("`{k}` is not a number")))
    };
    let meta = BundleMeta {
        lambda: num("lambda")?,
        gamma: num("gamma")?,
        sigma_w: num("sigma_w").unwrap_or(0.0),
        seed: num("seed").unwrap_or(0.0) as u64,
    };
    for (k, _) in &kv {
        if !["lambda", "gamma", "sigma_w", "seed", "groups", "truth"].contains(&k.as_str()) {
            return Err(Error::format(&meta_path, format!("unknown key `{k}`")));
        }
    }
    let x = read_matrix(&dir.join(DESIGN_FILE))?;
    let y = read_vector(&dir.join(RESPONSE_FILE))?;
    let partition = match get("groups") {
        Some(rel) => GroupPartition::from_membership(&read_membership(&resolve(dir, rel))?)?,
        None => GroupPartition::single(x.cols())?,
    };
    let mut inst = ProblemInstance::new(x, y, partition, meta.lambda, meta.gamma)?;
    if let Some(rel) = get("truth") {
        let beta0 = read_vector(&resolve(dir, rel))?;
        let fit = inst.design.mul_vec(&beta0);
        let noise = inst.response.iter().zip(&fit).map(|(y, f)| y - f).collect();
        inst = inst.with_truth(Truth { beta0, noise })?;
    }
    Ok((inst, meta))
}

fn resolve(dir: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}
