//! `FSQ1`: magic, `T` and `D` as little-endian u32, then `T*D` little-endian
//! f32 values in row-major order.

use std::fs;
use std::path::Path;

use crate::{Error, FrameSequence, Result};

pub const FSQ_MAGIC: [u8; 4] = *b"FSQ1";
const HEADER_LEN: usize = 12;

/// Serializes to `FSQ1` bytes. Non-finite values are rejected.
pub fn encode_fseq(seq: &FrameSequence<f32>) -> Result<Vec<u8>> {
    if let Some(pos) = seq.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / seq.dim(),
            col: pos % seq.dim(),
        });
    }
    let t = u32::try_from(seq.len()).map_err(|_| Error::Config("frame count exceeds u32".into()))?;
    let d = u32::try_from(seq.dim()).map_err(|_| Error::Config("dimension exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * seq.as_slice().len());
    out.extend_from_slice(&FSQ_MAGIC);
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for v in seq.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses `FSQ1` bytes; `path` only labels errors.
pub fn decode_fseq(bytes: &[u8], path: &Path) -> Result<FrameSequence<f32>> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != FSQ_MAGIC {
            return Err(bad_magic(bytes, path));
        }
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if bytes[..4] != FSQ_MAGIC {
        return Err(bad_magic(bytes, path));
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as u64;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as u64;
    if d == 0 {
        return Err(Error::format(path, "dimension D is zero"));
    }
    let expected = HEADER_LEN as u64 + 4 * t * d;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    if actual > expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes after payload", actual - expected),
        ));
    }
    let data: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FrameSequence::new(data, d as usize)
}

fn bad_magic(bytes: &[u8], path: &Path) -> Error {
    Error::BadMagic {
        path: path.to_path_buf(),
        expected: FSQ_MAGIC,
        found: bytes[..4].try_into().unwrap(),
    }
}

/// Writes `seq` to `path`. Validation happens before the file is created.
pub fn write_fseq(seq: &FrameSequence<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_fseq(seq)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_fseq(path: impl AsRef<Path>) -> Result<FrameSequence<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(decode_fseq(&bytes, path)?.with_id(id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn twenty_byte_example() {
        let seq = FrameSequence::from_rows(&[[0.0f32, 1.0]]).unwrap();
        let bytes = encode_fseq(&seq).unwrap();
        let mut expected = b"FSQ1".to_vec();
        expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
        expected.extend_from_slice(&0.0f32.to_le_bytes());
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(bytes, expected);
        assert_eq!(bytes.len(), 20);

        let back = decode_fseq(&bytes, Path::new("x")).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn nan_is_rejected_before_writing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fsq");
        let mut seq = FrameSequence::from_rows(&[[0.0f32, 1.0]]).unwrap();
        seq.data[1] = f32::NAN;
        assert!(matches!(write_fseq(&seq, &path), Err(Error::NonFinite { .. })));
        assert!(!path.exists());
    }

    #[test]
    fn bad_magic_and_truncation() {
        let mut bytes = b"XXXX".to_vec();
        bytes.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 128, 63]);
        assert!(matches!(
            decode_fseq(&bytes, Path::new("x")),
            Err(Error::BadMagic { .. })
        ));

        let seq = FrameSequence::from_rows(&[[0.0f32, 1.0], [2.0, 3.0]]).unwrap();
        let full = encode_fseq(&seq).unwrap();
        let err = decode_fseq(&full[..full.len() - 6], Path::new("t.fsq")).unwrap_err();
        match &err {
            Error::Truncated {
                expected, actual, ..
            } => {
                assert_eq!(*expected, 28);
                assert_eq!(*actual, 22);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("expected 28 bytes but found 22"));
    }

    #[test]
    fn non_finite_payload_is_rejected_on_read() {
        let mut bytes = b"FSQ1".to_vec();
        bytes.extend_from_slice(&[1, 0, 0, 0, 1, 0, 0, 0]);
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            decode_fseq(&bytes, Path::new("x")),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn file_round_trip_100x16() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f32> = (0..1600).map(|_| rng.random_range(-5.0..5.0)).collect();
        let seq = FrameSequence::new(data, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.fsq");
        write_fseq(&seq, &path).unwrap();
        let back = read_fseq(&path).unwrap();
        assert_eq!(back.len(), 100);
        let a: Vec<u32> = seq.as_slice().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = back.as_slice().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(back.id, "r");
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            dim in 1usize..6,
            rows in 0usize..12,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<f32> = (0..rows * dim)
                .map(|_| f32::from_bits(rng.random::<u32>()))
                .map(|v| if v.is_finite() { v } else { 0.5 })
                .collect();
            let seq = FrameSequence::new(data, dim).unwrap();
            let back = decode_fseq(&encode_fseq(&seq).unwrap(), Path::new("p")).unwrap();
            prop_assert_eq!(back.len(), rows);
            prop_assert!(seq.as_slice().iter().zip(back.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
