//! File formats: embedding matrices, label sidecars, attribute tables and
//! histogram exports.
//!
//! Embedding matrices use the npy format, version 1.0, restricted to the
//! one case this tool produces and consumes: little-endian f32, C order,
//! two-dimensional shape `(rows, dim)`. The header is padded with spaces
//! so the payload starts on a 64-byte boundary, which matches what numpy
//! itself writes; `numpy.load` reads these files directly and files saved
//! by `numpy.save` from a float32 matrix load here.
//!
//! Labels live in a plain text sidecar, one base-10 class label per line.
//! Attributes are CSV with a header row; a column is treated as continuous
//! when every value parses as a float and as discrete otherwise.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::dataset::LabeledEmbeddingSet;
use crate::error::{Error, Result};
use crate::intra::{AttributeColumn, AttributeTable};
use crate::metrics::ScoreHistogram;

const NPY_MAGIC: &[u8; 6] = b"\x93NUMPY";
const NPY_ALIGN: usize = 64;

fn fmt_err(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset,
        message: message.into(),
    }
}

/// Writes `rows x dim` values (row-major, converted to f32) as an npy
/// file.
pub fn write_matrix_npy(path: &Path, data: &[f64], rows: usize, dim: usize) -> Result<()> {
    let expected = rows
        .checked_mul(dim)
        .ok_or_else(|| Error::InvalidConfig("matrix size overflows".into()))?;
    if data.len() != expected {
        return Err(Error::DimensionMismatch {
            left: data.len(),
            right: expected,
        });
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);

    let dict = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': ({rows}, {dim}), }}"
    );
    let prefix = NPY_MAGIC.len() + 2 + 2;
    let unpadded = prefix + dict.len() + 1;
    let padding = (NPY_ALIGN - unpadded % NPY_ALIGN) % NPY_ALIGN;
    let header_len = dict.len() + padding + 1;
    if header_len > u16::MAX as usize {
        return Err(Error::InvalidConfig("npy header too large".into()));
    }

    w.write_all(NPY_MAGIC)?;
    w.write_all(&[0x01, 0x00])?;
    w.write_all(&(header_len as u16).to_le_bytes())?;
    w.write_all(dict.as_bytes())?;
    for _ in 0..padding {
        w.write_all(b" ")?;
    }
    w.write_all(b"\n")?;

    let mut buf = Vec::with_capacity(dim * 4);
    for row in data.chunks(dim.max(1)) {
        buf.clear();
        for &x in row {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an npy file written by [`write_matrix_npy`] (or numpy, for
/// little-endian f32 C-order matrices). Returns `(data, rows, dim)`.
pub fn read_matrix_npy(path: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let file = File::open(path)?;
    let total = file.metadata()?.len();
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 6];
    read_exact_at(&mut r, &mut magic, path, 0, "magic number")?;
    if &magic != NPY_MAGIC {
        return Err(fmt_err(path, 0, "not an npy file (bad magic number)"));
    }
    let mut version = [0u8; 2];
    read_exact_at(&mut r, &mut version, path, 6, "format version")?;
    if version != [0x01, 0x00] {
        return Err(fmt_err(
            path,
            6,
            format!(
                "unsupported npy version {}.{}, only 1.0 is supported",
                version[0], version[1]
            ),
        ));
    }
    let mut len_bytes = [0u8; 2];
    read_exact_at(&mut r, &mut len_bytes, path, 8, "header length")?;
    let header_len = u16::from_le_bytes(len_bytes) as usize;
    let mut header = vec![0u8; header_len];
    read_exact_at(&mut r, &mut header, path, 10, "header")?;
    let header = std::str::from_utf8(&header)
        .map_err(|_| fmt_err(path, 10, "header is not valid ASCII"))?;

    let (rows, dim) = parse_npy_header(header, path)?;
    let count = rows
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| fmt_err(path, 10, "shape overflows the address space"))?;
    let data_start = 10 + header_len as u64;
    let expected_size = data_start + count as u64;
    if total != expected_size {
        return Err(fmt_err(
            path,
            total.min(expected_size),
            format!(
                "file is {total} bytes but shape ({rows}, {dim}) needs exactly {expected_size}"
            ),
        ));
    }

    let mut data = Vec::with_capacity(rows * dim);
    let mut chunk = [0u8; 4096];
    let mut carried: Vec<u8> = Vec::with_capacity(4);
    loop {
        let n = r.read(&mut chunk)?;
        if n == 0 {
            break;
        }
        carried.extend_from_slice(&chunk[..n]);
        let usable = carried.len() - carried.len() % 4;
        for quad in carried[..usable].chunks_exact(4) {
            let x = f32::from_le_bytes([quad[0], quad[1], quad[2], quad[3]]);
            if !x.is_finite() {
                let offset = data_start + data.len() as u64 * 4;
                return Err(fmt_err(
                    path,
                    offset,
                    format!("non-finite value {x} in payload"),
                ));
            }
            data.push(x as f64);
        }
        carried.drain(..usable);
    }
    if !carried.is_empty() || data.len() != rows * dim {
        return Err(fmt_err(
            path,
            data_start + data.len() as u64 * 4,
            "truncated payload",
        ));
    }
    Ok((data, rows, dim))
}

fn read_exact_at(
    r: &mut impl Read,
    buf: &mut [u8],
    path: &Path,
    offset: u64,
    what: &str,
) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| fmt_err(path, offset, format!("file ends inside the {what}")))
}

fn parse_npy_header(header: &str, path: &Path) -> Result<(usize, usize)> {
    let descr = extract_field(header, "'descr'")
        .ok_or_else(|| fmt_err(path, 10, "header has no 'descr' field"))?;
    if descr != "'<f4'" {
        return Err(fmt_err(
            path,
            10,
            format!("unsupported dtype {descr}, only '<f4' is supported"),
        ));
    }
    let order = extract_field(header, "'fortran_order'")
        .ok_or_else(|| fmt_err(path, 10, "header has no 'fortran_order' field"))?;
    if order != "False" {
        return Err(fmt_err(path, 10, "only C-order (fortran_order False) is supported"));
    }
    let shape = extract_field(header, "'shape'")
        .ok_or_else(|| fmt_err(path, 10, "header has no 'shape' field"))?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| fmt_err(path, 10, format!("malformed shape {shape}")))?;
    let dims: Vec<&str> = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if dims.len() != 2 {
        return Err(fmt_err(
            path,
            10,
            format!("expected a 2-d shape, got {}-d", dims.len()),
        ));
    }
    let rows: usize = dims[0]
        .parse()
        .map_err(|_| fmt_err(path, 10, format!("bad row count {}", dims[0])))?;
    let dim: usize = dims[1]
        .parse()
        .map_err(|_| fmt_err(path, 10, format!("bad column count {}", dims[1])))?;
    Ok((rows, dim))
}

/// Pulls the value of `key` out of a python-dict-literal npy header. The
/// value runs from after the colon to the matching top-level comma or
/// closing brace; tuples keep their parentheses.
fn extract_field<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let start = header.find(key)? + key.len();
    let rest = header[start..].trim_start().strip_prefix(':')?;
    let mut depth = 0usize;
    let rest = rest.trim_start();
    for (i, c) in rest.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' | '}' if depth == 0 => return Some(rest[..i].trim_end()),
            _ => {}
        }
    }
    None
}

/// Writes one base-10 label per line.
pub fn write_labels(path: &Path, labels: &[u32]) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for label in labels {
        writeln!(w, "{label}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a label sidecar written by [`write_labels`].
pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    let file = File::open(path)?;
    let r = BufReader::new(file);
    let mut labels = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let label: u32 = trimmed.parse().map_err(|_| {
            fmt_err(
                path,
                lineno as u64 + 1,
                format!("line {}: {trimmed:?} is not a non-negative integer label", lineno + 1),
            )
        })?;
        labels.push(label);
    }
    Ok(labels)
}

/// Loads a matrix plus its label sidecar into a labeled embedding set.
/// Rows are renormalized to unit length on load.
pub fn load_labeled_set(matrix_path: &Path, labels_path: &Path) -> Result<LabeledEmbeddingSet> {
    let (data, rows, dim) = read_matrix_npy(matrix_path)?;
    let labels = read_labels(labels_path)?;
    if labels.len() != rows {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            rows,
        });
    }
    LabeledEmbeddingSet::new(dim, data, labels)
}

/// Writes an embedding set as matrix plus label sidecar.
pub fn save_labeled_set(
    set: &LabeledEmbeddingSet,
    matrix_path: &Path,
    labels_path: &Path,
) -> Result<()> {
    write_matrix_npy(matrix_path, set.rows(), set.len(), set.dim())?;
    write_labels(labels_path, set.labels())
}

/// Reads an attribute CSV: header row of attribute names, then one row
/// per sample. Columns where every value parses as a float become
/// continuous; all others become discrete with codes assigned by first
/// appearance.
pub fn read_attribute_table(path: &Path) -> Result<AttributeTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| fmt_err(path, 0, e.to_string()))?;
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| fmt_err(path, 0, format!("bad header row: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(fmt_err(path, 0, "attribute table has no columns"));
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for (recno, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            fmt_err(path, recno as u64 + 2, format!("row {}: {e}", recno + 2))
        })?;
        if record.len() != names.len() {
            return Err(fmt_err(
                path,
                recno as u64 + 2,
                format!(
                    "row {} has {} fields, header has {}",
                    recno + 2,
                    record.len(),
                    names.len()
                ),
            ));
        }
        for (col, value) in record.iter().enumerate() {
            cells[col].push(value.to_owned());
        }
    }

    let mut columns = Vec::with_capacity(names.len());
    for raw in &cells {
        let parsed: Option<Vec<f64>> = raw
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        match parsed {
            Some(values) => columns.push(AttributeColumn::Continuous(values)),
            None => {
                let mut codes = HashMap::new();
                let encoded = raw
                    .iter()
                    .map(|s| {
                        let next = codes.len() as u32;
                        *codes.entry(s.clone()).or_insert(next)
                    })
                    .collect();
                columns.push(AttributeColumn::Discrete(encoded));
            }
        }
    }
    AttributeTable::new(names, columns)
}

/// Writes a score histogram as CSV with one row per bin.
pub fn write_histogram_csv(path: &Path, hist: &ScoreHistogram) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "bin_lo,bin_hi,genuine_count,impostor_count")?;
    for i in 0..hist.genuine.len() {
        writeln!(
            w,
            "{},{},{},{}",
            hist.edges[i],
            hist.edges[i + 1],
            hist.genuine[i],
            hist.impostor[i]
        )?;
    }
    w.flush()?;
    Ok(())
}
