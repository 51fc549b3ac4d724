//! Little-endian binary containers.
//!
//! `FMAT`: magic, `rows: u32`, `cols: u32`, then `rows·cols` `f64` row-major.
//! `LVEC`: magic, `count: u32`, then `count` `u32` class ids.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::cil::ClassId;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;
use crate::rpl::{Activation, BasisBlock, RplModel};

pub const MATRIX_MAGIC: [u8; 4] = *b"FMAT";
pub const LABEL_MAGIC: [u8; 4] = *b"LVEC";

pub fn encode_matrix(m: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * m.as_slice().len());
    out.extend_from_slice(&MATRIX_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn check_magic(bytes: &[u8], magic: [u8; 4], path: &Path) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: 4,
            found: bytes.len() as u64,
        });
    }
    let found: [u8; 4] = bytes[..4].try_into().expect("4-byte slice");
    if found != magic {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: magic,
            found,
        });
    }
    Ok(())
}

/// Decodes one FMAT record at the start of `bytes`; returns it and the bytes consumed.
pub fn decode_matrix(bytes: &[u8], path: &Path) -> Result<(DenseMatrix, usize)> {
    check_magic(bytes, MATRIX_MAGIC, path)?;
    let truncated = |expected: u64| Error::TruncatedFile {
        path: path.to_path_buf(),
        expected,
        found: bytes.len() as u64,
    };
    if bytes.len() < 12 {
        return Err(truncated(12));
    }
    let rows = read_u32(bytes, 4) as usize;
    let cols = read_u32(bytes, 8) as usize;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::InvalidParameter(format!("{rows}x{cols} matrix is too large")))?;
    let end = 12 + 8 * count as u64;
    if (bytes.len() as u64) < end {
        return Err(truncated(end));
    }
    let mut data = Vec::with_capacity(count);
    for (k, chunk) in bytes[12..end as usize].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                path: path.to_path_buf(),
                index: k,
            });
        }
        data.push(v);
    }
    Ok((DenseMatrix::from_vec(rows, cols, data)?, end as usize))
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    fs::write(path, encode_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path)?;
    let (m, used) = decode_matrix(&bytes, path)?;
    if used != bytes.len() {
        return Err(Error::InvalidParameter(format!(
            "{}: {} trailing bytes after matrix payload",
            path.display(),
            bytes.len() - used
        )));
    }
    Ok(m)
}

pub fn encode_labels(labels: &[ClassId]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * labels.len());
    out.extend_from_slice(&LABEL_MAGIC);
    out.extend_from_slice(&(labels.len() as u32).to_le_bytes());
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out
}

pub fn write_labels(path: &Path, labels: &[ClassId]) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<ClassId>> {
    let bytes = fs::read(path)?;
    check_magic(&bytes, LABEL_MAGIC, path)?;
    if bytes.len() < 8 {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected: 8,
            found: bytes.len() as u64,
        });
    }
    let count = read_u32(&bytes, 4) as u64;
    let expected = 8 + 4 * count;
    if (bytes.len() as u64) != expected {
        return Err(Error::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    Ok(bytes[8..].chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk"))).collect())
}

/// Model file: consecutive FMAT records.
///
/// 1. header `1×3`: `[d, activation tag, block count]`
/// 2. block table `B×2`: `[s, ξ]` per block
/// 3. per block a `(d+1)×s` matrix: input weights, then the bias row
pub fn encode_model(model: &RplModel) -> Vec<u8> {
    let blocks = model.blocks();
    let header = DenseMatrix::from_rows(&[[
        model.feature_dim() as f64,
        model.activation().tag() as f64,
        blocks.len() as f64,
    ]])
    .expect("finite header");
    let table = DenseMatrix::from_fn(blocks.len(), 2, |i, j| {
        if j == 0 {
            blocks[i].units() as f64
        } else {
            blocks[i].xi()
        }
    });
    let mut out = encode_matrix(&header);
    out.extend(encode_matrix(&table));
    for b in blocks {
        let bias = DenseMatrix::from_vec(1, b.units(), b.biases().to_vec()).expect("finite biases");
        out.extend(encode_matrix(&b.input_weights().vstack(&bias).expect("same width")));
    }
    out
}

pub fn write_model(path: &Path, model: &RplModel) -> Result<()> {
    fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<RplModel> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| Error::InvalidParameter(format!("{}: {m}", path.display()));
    let (header, mut at) = decode_matrix(&bytes, path)?;
    if header.shape() != (1, 3) {
        return Err(bad("model header must be 1x3"));
    }
    let d = header[(0, 0)] as usize;
    let act = Activation::from_tag(header[(0, 1)] as u32).ok_or_else(|| bad("unknown activation tag"))?;
    let count = header[(0, 2)] as usize;
    let (table, used) = decode_matrix(&bytes[at..], path)?;
    at += used;
    if table.shape() != (count, 2) && !(count == 0 && table.rows() == 0) {
        return Err(bad("block table does not match header"));
    }
    let mut blocks = Vec::with_capacity(count);
    for i in 0..count {
        let (m, used) = decode_matrix(&bytes[at..], path)?;
        at += used;
        let s = table[(i, 0)] as usize;
        if m.shape() != (d + 1, s) {
            return Err(bad("block shape does not match table"));
        }
        let weights = m.row_range(0, d);
        let biases = m.row(d).to_vec();
        blocks.push(BasisBlock::new(weights, biases, table[(i, 1)])?);
    }
    if at != bytes.len() {
        return Err(bad("trailing bytes after last block"));
    }
    RplModel::from_blocks(d, act, blocks)
}

/// Reads a headerless numeric CSV; the final column is taken as the class id
/// when `label_column` is set.
pub fn import_csv(path: &Path, label_column: bool) -> Result<(DenseMatrix, Option<Vec<ClassId>>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut cols = None;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if label_column {
            let raw = fields.pop().unwrap_or_default();
            labels.push(raw.parse::<ClassId>().map_err(|e| Error::MalformedValue {
                line: n + 1,
                key: "label".into(),
                reason: e.to_string(),
            })?);
        }
        if *cols.get_or_insert(fields.len()) != fields.len() {
            return Err(Error::dim("import_csv row width", cols.unwrap_or(0), fields.len()));
        }
        for f in fields {
            data.push(f.parse::<f64>().map_err(|e| Error::MalformedValue {
                line: n + 1,
                key: "value".into(),
                reason: e.to_string(),
            })?);
        }
    }
    let cols = cols.unwrap_or(0);
    let rows = if cols == 0 { labels.len() } else { data.len() / cols };
    let m = DenseMatrix::from_vec(rows, cols, data)?;
    Ok((m, label_column.then_some(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpl::{sample_block, seeded_rng};
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn matrix_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fmat");
        let m = DenseMatrix::from_rows(&[[1.5, -0.0], [f64::MIN_POSITIVE, 1e300], [std::f64::consts::PI, -7.25]]).unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        let bits = |m: &DenseMatrix| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
        assert_eq!(back.shape(), (3, 2));
    }

    #[test]
    fn bad_magic() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fmat");
        let mut bytes = encode_matrix(&DenseMatrix::identity(2));
        bytes[0] = b'X';
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fmat");
        let bytes = encode_matrix(&DenseMatrix::identity(2));
        fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::TruncatedFile { .. })));
    }

    #[test]
    fn non_finite_payload() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.fmat");
        let mut bytes = encode_matrix(&DenseMatrix::identity(2));
        bytes[12 + 8..12 + 16].copy_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::NonFiniteValue { index: 1, .. })));
    }

    #[test]
    fn labels_round_trip_and_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("l.lvec");
        write_labels(&path, &[0, 7, 3, u32::MAX]).unwrap();
        assert_eq!(read_labels(&path).unwrap(), vec![0, 7, 3, u32::MAX]);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_labels(&path), Err(Error::TruncatedFile { .. })));
        fs::write(&path, b"FMAT\0\0\0\0").unwrap();
        assert!(matches!(read_labels(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn model_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.fmat");
        let mut rng = seeded_rng(3);
        let blocks = vec![
            sample_block(&mut rng, 4, 3, 0.5).unwrap(),
            sample_block(&mut rng, 4, 1, 0.0009).unwrap(),
        ];
        let model = RplModel::from_blocks(4, Activation::Sigmoid, blocks).unwrap();
        write_model(&path, &model).unwrap();
        assert_eq!(read_model(&path).unwrap(), model);

        let empty = RplModel::new(6);
        write_model(&path, &empty).unwrap();
        assert_eq!(read_model(&path).unwrap(), empty);
    }

    #[test]
    fn csv_import() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "# features then label\n1.0, 2.0, 3\n-1.5,0.25,0\n").unwrap();
        let (m, labels) = import_csv(&path, true).unwrap();
        assert_eq!(m, DenseMatrix::from_rows(&[[1.0, 2.0], [-1.5, 0.25]]).unwrap());
        assert_eq!(labels.unwrap(), vec![3, 0]);
        fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(import_csv(&path, false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn encode_decode_round_trip(rows in 0usize..20, cols in 0usize..20, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = seeded_rng(seed);
            let m = DenseMatrix::from_fn(rows, cols, |_, _| f64::from_bits(rng.random::<u64>() & 0x7fef_ffff_ffff_ffff));
            let bytes = encode_matrix(&m);
            prop_assert_eq!(bytes.len(), 12 + 8 * rows * cols);
            let (back, used) = decode_matrix(&bytes, Path::new("mem")).unwrap();
            prop_assert_eq!(used, bytes.len());
            prop_assert_eq!(back.shape(), m.shape());
            prop_assert!(back.as_slice().iter().zip(m.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }

        #[test]
        fn label_round_trip(labels in proptest::collection::vec(any::<u32>(), 0..200)) {
            let bytes = encode_labels(&labels);
            let dir = tempdir().unwrap();
            let path = dir.path().join("l.lvec");
            fs::write(&path, bytes).unwrap();
            prop_assert_eq!(read_labels(&path).unwrap(), labels);
        }
    }
}
