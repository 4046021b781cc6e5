//! In-memory matrices and their on-disk formats.
//!
//! Three file formats are supported, all little-endian:
//!
//! * feature file: `"DFT1"`, rows (u32), cols (u32), then `rows * cols` f32 values row-major;
//! * barcode file: `"DBC1"`, rows (u32), bits_per_row (u32), then `rows * ceil(bits_per_row / 8)`
//!   bytes. Bit `i` of a row lives in byte `i / 8` at bit position `i % 8`; pad bits are zero;
//! * label file: one non-negative base-10 integer per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"DFT1";
pub const BARCODE_MAGIC: &[u8; 4] = b"DBC1";
pub(crate) const HEADER_LEN: usize = 12;

/// Dense row-major matrix of finite `f32` descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    /// Builds a matrix, rejecting empty shapes, fewer than two columns and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 {
            return Err(Error::Parameter(
                "feature matrix needs at least 1 row".into(),
            ));
        }
        if cols < 2 {
            return Err(Error::Parameter(format!(
                "feature matrix needs at least 2 columns, got {cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::dimension(
                "feature values",
                rows * cols,
                values.len(),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::dimension("feature row", cols, row.len()));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, cols) = read_header(bytes, FEATURE_MAGIC)?;
        let payload = &bytes[HEADER_LEN..];
        let expected = rows as u64 * cols as u64 * 4;
        if payload.len() as u64 != expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len() as u64,
            });
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(rows, cols, values)
    }
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    FeatureMatrix::from_bytes(&fs::read(path)?)
}

pub fn save_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &m.to_bytes())
}

/// Borrowed packed bit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarcodeRef<'a> {
    bits: usize,
    bytes: &'a [u8],
}

impl<'a> BarcodeRef<'a> {
    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    #[inline]
    pub fn bytes(&self) -> &'a [u8] {
        self.bytes
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.bits, "bit {i} out of range for {} bits", self.bits);
        self.bytes[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.bits).map(|i| self.get(i)).collect()
    }

    pub fn to_owned(&self) -> Barcode {
        Barcode {
            bits: self.bits,
            bytes: self.bytes.to_vec(),
        }
    }
}

/// Owned packed bit vector, LSB-first within each byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Barcode {
    bits: usize,
    bytes: Vec<u8>,
}

impl Barcode {
    pub fn zeros(bits: usize) -> Self {
        Self {
            bits,
            bytes: vec![0; packed_len(bits)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut code = Self::zeros(bits.len());
        for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            code.bytes[i / 8] |= 1 << (i % 8);
        }
        code
    }

    /// Wraps already packed bytes, checking length and pad bits.
    pub fn from_packed(bits: usize, bytes: Vec<u8>) -> Result<Self> {
        check_packed_row(bits, &bytes)?;
        Ok(Self { bits, bytes })
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.bits, "bit {i} out of range for {} bits", self.bits);
        if value {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    #[inline]
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn as_ref(&self) -> BarcodeRef<'_> {
        BarcodeRef {
            bits: self.bits,
            bytes: &self.bytes,
        }
    }

    pub fn get(&self, i: usize) -> bool {
        self.as_ref().get(i)
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.as_ref().to_bits()
    }
}

/// Number of bytes needed to hold `bits` packed bits.
#[inline]
pub fn packed_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

fn check_packed_row(bits: usize, bytes: &[u8]) -> Result<()> {
    if bytes.len() != packed_len(bits) {
        return Err(Error::dimension(
            "packed barcode bytes",
            packed_len(bits),
            bytes.len(),
        ));
    }
    let used = bits % 8;
    if used != 0 {
        let pad_mask = !((1u8 << used) - 1);
        if bytes[bytes.len() - 1] & pad_mask != 0 {
            return Err(Error::Format(format!(
                "nonzero pad bits after bit {bits} in final byte"
            )));
        }
    }
    Ok(())
}

/// Rows of equal-length packed barcodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BarcodeMatrix {
    rows: usize,
    bits_per_row: usize,
    packed: Vec<u8>,
}

impl BarcodeMatrix {
    pub fn new(rows: usize, bits_per_row: usize, packed: Vec<u8>) -> Result<Self> {
        if bits_per_row == 0 {
            return Err(Error::Parameter("bits_per_row must be at least 1".into()));
        }
        let stride = packed_len(bits_per_row);
        if packed.len() != rows * stride {
            return Err(Error::dimension(
                "barcode payload",
                rows * stride,
                packed.len(),
            ));
        }
        for (row, chunk) in packed.chunks_exact(stride).enumerate() {
            check_packed_row(bits_per_row, chunk).map_err(|e| Error::Row {
                row,
                source: Box::new(e),
            })?;
        }
        Ok(Self {
            rows,
            bits_per_row,
            packed,
        })
    }

    pub fn from_barcodes(codes: &[Barcode]) -> Result<Self> {
        let bits = codes.first().map_or(0, Barcode::bits);
        let mut packed = Vec::with_capacity(codes.len() * packed_len(bits));
        for code in codes {
            if code.bits() != bits {
                return Err(Error::dimension("barcode length", bits, code.bits()));
            }
            packed.extend_from_slice(code.bytes());
        }
        Self::new(codes.len(), bits, packed)
    }

    pub fn from_bit_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let codes: Vec<Barcode> = rows
            .iter()
            .map(|r| Barcode::from_bits(r.as_ref()))
            .collect();
        Self::from_barcodes(&codes)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn bits_per_row(&self) -> usize {
        self.bits_per_row
    }

    /// Bytes per packed row.
    #[inline]
    pub fn stride(&self) -> usize {
        packed_len(self.bits_per_row)
    }

    #[inline]
    pub fn row(&self, i: usize) -> BarcodeRef<'_> {
        let stride = self.stride();
        BarcodeRef {
            bits: self.bits_per_row,
            bytes: &self.packed[i * stride..(i + 1) * stride],
        }
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = BarcodeRef<'_>> + '_ {
        let bits = self.bits_per_row;
        self.packed
            .chunks_exact(self.stride())
            .map(move |bytes| BarcodeRef { bits, bytes })
    }

    pub fn packed(&self) -> &[u8] {
        &self.packed
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.packed.len());
        out.extend_from_slice(BARCODE_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.bits_per_row as u32).to_le_bytes());
        out.extend_from_slice(&self.packed);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, bits) = read_header(bytes, BARCODE_MAGIC)?;
        let payload = &bytes[HEADER_LEN..];
        let expected = rows as u64 * packed_len(bits) as u64;
        if payload.len() as u64 != expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len() as u64,
            });
        }
        Self::new(rows, bits, payload.to_vec())
    }
}

pub fn load_barcodes(path: impl AsRef<Path>) -> Result<BarcodeMatrix> {
    BarcodeMatrix::from_bytes(&fs::read(path)?)
}

pub fn save_barcodes(b: &BarcodeMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &b.to_bytes())
}

/// Per-row class ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVector(Vec<u32>);

impl LabelVector {
    pub fn new(labels: Vec<u32>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<u32> {
        self.0.get(i).copied()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim();
            let value: i64 = trimmed.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("expected an integer, found {trimmed:?}"),
            })?;
            if value < 0 {
                return Err(Error::Domain {
                    line: line_no,
                    message: format!("class id must be non-negative, found {value}"),
                });
            }
            let value = u32::try_from(value).map_err(|_| Error::Domain {
                line: line_no,
                message: format!("class id {value} exceeds {}", u32::MAX),
            })?;
            labels.push(value);
        }
        Ok(Self(labels))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.0.len() * 4);
        for label in &self.0 {
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out
    }
}

impl From<Vec<u32>> for LabelVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for LabelVector {
    type Output = u32;

    fn index(&self, i: usize) -> &u32 {
        &self.0[i]
    }
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    LabelVector::parse(&fs::read_to_string(path)?)
}

pub fn save_labels(labels: &LabelVector, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), labels.to_text().as_bytes())
}

pub(crate) fn read_header(bytes: &[u8], magic: &[u8; 4]) -> Result<(usize, usize)> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "missing magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    let a = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let b = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    Ok((a, b))
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feature_file(rows: u32, cols: u32, values: &[f32]) -> Vec<u8> {
        let mut out = b"DFT1".to_vec();
        out.extend_from_slice(&rows.to_le_bytes());
        out.extend_from_slice(&cols.to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn loads_two_by_three() {
        let m = FeatureMatrix::from_bytes(&feature_file(2, 3, &[1., 2., 3., 4., 5., 6.])).unwrap();
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.row(1), &[4., 5., 6.]);
    }

    #[test]
    fn rejects_single_column() {
        let err = FeatureMatrix::from_bytes(&feature_file(1, 1, &[1.])).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)), "{err}");
    }

    #[test]
    fn nan_is_reported_with_position() {
        let err = FeatureMatrix::from_bytes(&feature_file(2, 3, &[1., 2., f32::NAN, 4., 5., 6.]))
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 2 }));
        assert!(err.to_string().contains("(0,2)"));
        let err = FeatureMatrix::new(1, 2, vec![0., f32::INFINITY]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = feature_file(2, 3, &[1., 2., 3., 4., 5., 6.]);
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated {
                expected: 24,
                found: 23
            })
        ));
        bytes.push(0);
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes),
            Err(Error::Truncated { .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(
            FeatureMatrix::from_bytes(&bytes),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            FeatureMatrix::from_bytes(b"DFT1\x01"),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn saved_size_matches_layout() {
        let m = FeatureMatrix::new(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.to_bytes().len(), 12 + 24);
    }

    #[test]
    fn tenth_is_bit_identical() {
        let m = FeatureMatrix::new(1, 2, vec![0.1, -0.1]).unwrap();
        let back = FeatureMatrix::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back.row(0)[0].to_bits(), 0.1f32.to_bits());
    }

    #[test]
    fn labels_parse() {
        assert_eq!(
            LabelVector::parse("0\n5\n23\n").unwrap().as_slice(),
            &[0, 5, 23]
        );
        assert!(matches!(
            LabelVector::parse("x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            LabelVector::parse("1\n2\nfoo\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            LabelVector::parse("-1\n"),
            Err(Error::Domain { line: 1, .. })
        ));
        assert!(LabelVector::parse("").unwrap().is_empty());
    }

    #[test]
    fn lsb_first_packing() {
        let b = BarcodeMatrix::from_bit_rows(&[[true, false, true]]).unwrap();
        assert_eq!(b.packed(), &[0b0000_0101]);
        assert_eq!(b.row(0).to_bits(), vec![true, false, true]);
    }

    #[test]
    fn pad_bit_rejected() {
        let mut bytes = b"DBC1".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.push(0b1000_0101);
        assert!(matches!(
            BarcodeMatrix::from_bytes(&bytes),
            Err(Error::Row { row: 0, .. })
        ));
        *bytes.last_mut().unwrap() = 0b0000_0101;
        assert!(BarcodeMatrix::from_bytes(&bytes).is_ok());
        assert!(Barcode::from_packed(3, vec![0b1000_0000]).is_err());
    }

    #[test]
    fn barcode_roundtrip_4095_bits() {
        let rows: Vec<Vec<bool>> = (0..2)
            .map(|r| (0..4095).map(|i| (i * 7 + r) % 3 == 0).collect())
            .collect();
        let b = BarcodeMatrix::from_bit_rows(&rows).unwrap();
        assert_eq!(b.stride(), 512);
        let bytes = b.to_bytes();
        let back = BarcodeMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.row(1).to_bits(), rows[1]);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = FeatureMatrix::new(2, 2, vec![1.5, -2.0, 0.0, 3.25]).unwrap();
        let p = dir.path().join("x.dft");
        save_features(&m, &p).unwrap();
        assert_eq!(load_features(&p).unwrap(), m);
        let l = LabelVector::new(vec![3, 0, 7]);
        let p = dir.path().join("x.labels");
        save_labels(&l, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "3\n0\n7\n");
        assert_eq!(load_labels(&p).unwrap(), l);
        assert!(matches!(
            load_features(dir.path().join("missing")),
            Err(Error::Io(_))
        ));
    }
}
