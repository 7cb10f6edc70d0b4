//! `RZC1` coefficient cache files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "RZC1" | u64 cutoff | u8 flags | u16 label_len | label (UTF-8)
//!        | values (cutoff x 8 bytes f64, or cutoff x 16 bytes i128)
//!        | u64 FNV-1a of the value block
//! ```
//!
//! Flag bit 0 is the non-negativity claim, bit 1 marks the exact-integer
//! variant.

use std::fs;
use std::hash::Hasher;
use std::io::Write;
use std::path::Path;

use fnv::FnvHasher;

use super::CoeffTable;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RZC1";
const FLAG_NONNEG: u8 = 0b01;
const FLAG_EXACT: u8 = 0b10;

/// Exact integer sequence, e.g. the Ramanujan tau values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactTable {
    pub label: String,
    pub values: Vec<i128>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

fn encode(label: &str, cutoff: usize, flags: u8, block: &[u8]) -> Result<Vec<u8>> {
    let label_len = u16::try_from(label.len())
        .map_err(|_| Error::InvalidInput(format!("label longer than {} bytes", u16::MAX)))?;
    let mut out = Vec::with_capacity(4 + 8 + 1 + 2 + label.len() + block.len() + 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(cutoff as u64).to_le_bytes());
    out.push(flags);
    out.extend_from_slice(&label_len.to_le_bytes());
    out.extend_from_slice(label.as_bytes());
    out.extend_from_slice(block);
    out.extend_from_slice(&fnv1a(block).to_le_bytes());
    Ok(out)
}

struct Decoded<'a> {
    cutoff: usize,
    flags: u8,
    label: String,
    block: &'a [u8],
}

fn decode(bytes: &[u8]) -> Result<Decoded<'_>> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(4)]).into_owned();
        return Err(Error::Version(format!("expected magic RZC1, found {found:?}")));
    }
    let header = &bytes[4..];
    if header.len() < 11 {
        return Err(Error::MalformedHeader(format!(
            "{} header bytes, need at least 11",
            header.len()
        )));
    }
    let cutoff = u64::from_le_bytes(header[..8].try_into().unwrap());
    let flags = header[8];
    if flags & !(FLAG_NONNEG | FLAG_EXACT) != 0 {
        return Err(Error::MalformedHeader(format!("unknown flag bits {flags:#04x}")));
    }
    let label_len = u16::from_le_bytes(header[9..11].try_into().unwrap()) as usize;
    let rest = &header[11..];
    if rest.len() < label_len {
        return Err(Error::MalformedHeader("label runs past end of file".into()));
    }
    let label = std::str::from_utf8(&rest[..label_len])
        .map_err(|e| Error::MalformedHeader(format!("label is not UTF-8: {e}")))?
        .to_owned();
    let width: u64 = if flags & FLAG_EXACT != 0 { 16 } else { 8 };
    let block_len = cutoff
        .checked_mul(width)
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| Error::MalformedHeader(format!("cutoff {cutoff} is too large")))?;
    if cutoff == 0 {
        return Err(Error::MalformedHeader("cutoff is zero".into()));
    }
    let payload = &rest[label_len..];
    let (block, stored) = if payload.len() >= 8 {
        let (b, tail) = payload.split_at(payload.len() - 8);
        (b, u64::from_le_bytes(tail.try_into().unwrap()))
    } else {
        (payload, 0)
    };
    let computed = fnv1a(block);
    if block.len() != block_len || computed != stored {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(Decoded {
        cutoff: cutoff as usize,
        flags,
        label,
        block,
    })
}

pub fn encode_table(table: &CoeffTable) -> Result<Vec<u8>> {
    let mut block = Vec::with_capacity(table.cutoff() * 8);
    for v in table.values() {
        block.extend_from_slice(&v.to_le_bytes());
    }
    let flags = if table.nonneg { FLAG_NONNEG } else { 0 };
    encode(&table.source_label, table.cutoff(), flags, &block)
}

pub fn decode_table(bytes: &[u8]) -> Result<CoeffTable> {
    let d = decode(bytes)?;
    if d.flags & FLAG_EXACT != 0 {
        return Err(Error::Version(
            "file holds the exact-integer variant, expected f64 values".into(),
        ));
    }
    let values: Vec<f64> = d
        .block
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    debug_assert_eq!(values.len(), d.cutoff);
    CoeffTable::new(d.label, values, d.flags & FLAG_NONNEG != 0)
}

pub fn encode_exact_table(table: &ExactTable) -> Result<Vec<u8>> {
    if table.values.is_empty() {
        return Err(Error::InvalidInput("exact table cannot be empty".into()));
    }
    let mut block = Vec::with_capacity(table.values.len() * 16);
    for v in &table.values {
        block.extend_from_slice(&v.to_le_bytes());
    }
    encode(&table.label, table.values.len(), FLAG_EXACT, &block)
}

pub fn decode_exact_table(bytes: &[u8]) -> Result<ExactTable> {
    let d = decode(bytes)?;
    if d.flags & FLAG_EXACT == 0 {
        return Err(Error::Version(
            "file holds f64 values, expected the exact-integer variant".into(),
        ));
    }
    let values = d
        .block
        .chunks_exact(16)
        .map(|c| i128::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ExactTable {
        label: d.label,
        values,
    })
}

/// Write via a sibling temporary file and rename, so readers never observe a
/// partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_table(table: &CoeffTable, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_table(table)?)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<CoeffTable> {
    decode_table(&fs::read(path)?)
}

pub fn save_exact_table(table: &ExactTable, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_exact_table(table)?)
}

pub fn load_exact_table(path: impl AsRef<Path>) -> Result<ExactTable> {
    decode_exact_table(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ones(n: usize) -> CoeffTable {
        CoeffTable::from_fn("zeta", n, true, |_| 1.0).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_table(&CoeffTable::new("ab", vec![1.0, 0.5], false).unwrap()).unwrap();
        assert_eq!(&bytes[..4], b"RZC1");
        assert_eq!(u64::from_le_bytes(bytes[4..12].try_into().unwrap()), 2);
        assert_eq!(bytes[12], 0);
        assert_eq!(u16::from_le_bytes(bytes[13..15].try_into().unwrap()), 2);
        assert_eq!(&bytes[15..17], b"ab");
        assert_eq!(f64::from_le_bytes(bytes[17..25].try_into().unwrap()), 1.0);
        assert_eq!(bytes.len(), 4 + 8 + 1 + 2 + 2 + 16 + 8);
        let sum = u64::from_le_bytes(bytes[33..41].try_into().unwrap());
        assert_eq!(sum, fnv1a(&bytes[17..33]));
    }

    #[test]
    fn fnv_reference_vector() {
        // published FNV-1a 64 test vector
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zeta.rzc");
        let t = ones(1000);
        save_table(&t, &path).unwrap();
        assert_eq!(load_table(&path).unwrap(), t);
    }

    #[test]
    fn truncation_is_a_checksum_error() {
        let bytes = encode_table(&ones(100)).unwrap();
        for cut in [1, 8, 9, 400] {
            let r = decode_table(&bytes[..bytes.len() - cut]);
            assert!(matches!(r, Err(Error::Checksum { .. })), "cut {cut}: {r:?}");
        }
        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(decode_table(&flipped), Err(Error::Checksum { .. })));
    }

    #[test]
    fn wrong_magic_is_a_version_error() {
        let mut bytes = encode_table(&ones(10)).unwrap();
        bytes[3] = b'2';
        assert!(matches!(decode_table(&bytes), Err(Error::Version(_))));
        assert!(matches!(decode_table(b"RZ"), Err(Error::Version(_))));
    }

    #[test]
    fn malformed_headers() {
        let bytes = encode_table(&ones(10)).unwrap();
        assert!(matches!(decode_table(&bytes[..10]), Err(Error::MalformedHeader(_))));
        let mut bad_flags = bytes.clone();
        bad_flags[12] = 0x80;
        assert!(matches!(decode_table(&bad_flags), Err(Error::MalformedHeader(_))));
        let mut bad_label = bytes.clone();
        bad_label[15] = 0xff;
        assert!(matches!(decode_table(&bad_label), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn exact_variant_round_trip_and_mismatch() {
        let t = ExactTable {
            label: "tau".into(),
            values: vec![1, -24, 252, -1472, i128::MAX, i128::MIN],
        };
        let bytes = encode_exact_table(&t).unwrap();
        assert_eq!(bytes[12], FLAG_EXACT);
        assert_eq!(decode_exact_table(&bytes).unwrap(), t);
        assert!(matches!(decode_table(&bytes), Err(Error::Version(_))));
        let float = encode_table(&ones(3)).unwrap();
        assert!(matches!(decode_exact_table(&float), Err(Error::Version(_))));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(values in proptest::collection::vec(proptest::num::f64::ANY, 1..64), label in "[a-z0-9()-]{0,20}") {
            let t = CoeffTable::new(label, values, false).unwrap();
            let back = decode_table(&encode_table(&t).unwrap()).unwrap();
            let bits = |t: &CoeffTable| t.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&t));
            prop_assert_eq!(back.source_label, t.source_label);
        }
    }
}
