//! `EMSNAP01` snapshot files.
//!
//! Little-endian layout: 8 magic bytes, `u32` N, `u32` L, then L columns of
//! N samples, each sample an `f64` real part followed by an `f64` imaginary
//! part.

use std::fs;
use std::path::Path;

use emitter_core::{SnapshotMatrix, C64};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"EMSNAP01";
const HEADER_LEN: usize = 16;
const SAMPLE_LEN: usize = 16;

pub fn encoded_len(n: usize, l: usize) -> usize {
    HEADER_LEN + n * l * SAMPLE_LEN
}

pub fn encode(y: &SnapshotMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(y.n(), y.l()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(y.n() as u32).to_le_bytes());
    out.extend_from_slice(&(y.l() as u32).to_le_bytes());
    for z in y.as_column_major() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4-byte slice"))
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode(bytes: &[u8]) -> Result<SnapshotMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(CliError::Format(format!(
            "snapshot file is {} bytes, shorter than its {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(CliError::Format("missing EMSNAP01 magic".into()));
    }
    let n = read_u32(bytes, 8) as usize;
    let l = read_u32(bytes, 12) as usize;
    let expected = n
        .checked_mul(l)
        .and_then(|c| c.checked_mul(SAMPLE_LEN))
        .and_then(|c| c.checked_add(HEADER_LEN))
        .ok_or_else(|| CliError::Format(format!("dimensions {n}x{l} overflow")))?;
    if bytes.len() != expected {
        return Err(CliError::Format(format!(
            "{n}x{l} snapshot file should be {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let data = (0..n * l)
        .map(|i| {
            let at = HEADER_LEN + i * SAMPLE_LEN;
            C64::new(read_f64(bytes, at), read_f64(bytes, at + 8))
        })
        .collect();
    SnapshotMatrix::from_column_major(n, l, data).map_err(|e| CliError::Format(e.to_string()))
}

pub fn write(path: &Path, y: &SnapshotMatrix) -> Result<()> {
    fs::write(path, encode(y)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<SnapshotMatrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(n: usize, l: usize, seed: u64) -> SnapshotMatrix {
        let data = (0..n * l)
            .map(|i| C64::new((i as f64 + seed as f64).sin(), (i as f64 * 0.5).cos()))
            .collect();
        SnapshotMatrix::from_column_major(n, l, data).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&matrix(4, 8, 0));
        assert_eq!(bytes.len(), 528);
        assert_eq!(&bytes[..8], b"EMSNAP01");
        assert_eq!(&bytes[8..12], &[4, 0, 0, 0]);
        assert_eq!(&bytes[12..16], &[8, 0, 0, 0]);
        // first sample is antenna 0, snapshot 0, real part first
        assert_eq!(read_f64(&bytes, 16), 0.0_f64.sin());
        assert_eq!(read_f64(&bytes, 24), 0.0_f64.cos());
    }

    #[test]
    fn rejects_corruption() {
        let good = encode(&matrix(3, 2, 1));
        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(CliError::Format(_))
        ));
        assert!(matches!(decode(&good[..10]), Err(CliError::Format(_))));
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(CliError::Format(_))));
        let mut nan = good;
        nan[16..24].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(decode(&nan), Err(CliError::Format(_))));
    }

    proptest! {
        #[test]
        fn round_trip(n in 1usize..6, l in 1usize..6, seed in 0u64..1000) {
            let y = matrix(n, l, seed);
            prop_assert_eq!(decode(&encode(&y)).unwrap(), y);
        }
    }
}
