//! Binary snapshots of field draws.
//!
//! Layout, all little-endian: the 8-byte magic `GMCFLD1\0`, format version
//! (`u32`), kind (`u32`), seed (`u64`), replicate index (`u64`), calibration
//! (`f64`), a 32-byte configuration digest, the value count (`u64`) and then
//! the values as `f64`.

use std::io::{Read, Write};

use super::{FieldSample, GridField};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"GMCFLD1\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotKind {
    /// Circle averages over a node set.
    NodeValues = 1,
    /// Grid values, `(N+1)^2` of them.
    Grid = 2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: SnapshotKind,
    pub seed: u64,
    pub replicate_index: u64,
    pub calibration: f64,
    pub digest: [u8; 32],
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn from_sample(sample: &FieldSample, digest: [u8; 32]) -> Self {
        Self {
            kind: SnapshotKind::NodeValues,
            seed: sample.seed,
            replicate_index: sample.replicate_index,
            calibration: 1.0,
            digest,
            values: sample.values.clone(),
        }
    }

    pub fn from_grid(field: &GridField, digest: [u8; 32]) -> Self {
        Self {
            kind: SnapshotKind::Grid,
            seed: field.seed,
            replicate_index: field.replicate_index,
            calibration: field.calibration,
            digest,
            values: field.values().to_vec(),
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.kind as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.replicate_index.to_le_bytes())?;
        w.write_all(&self.calibration.to_le_bytes())?;
        w.write_all(&self.digest)?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::Format("not a field snapshot".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut r)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let kind = match u32::from_le_bytes(read_array(&mut r)?) {
            1 => SnapshotKind::NodeValues,
            2 => SnapshotKind::Grid,
            k => return Err(Error::Format(format!("unknown snapshot kind {k}"))),
        };
        let seed = u64::from_le_bytes(read_array(&mut r)?);
        let replicate_index = u64::from_le_bytes(read_array(&mut r)?);
        let calibration = f64::from_le_bytes(read_array(&mut r)?);
        let digest: [u8; 32] = read_array(&mut r)?;
        let count = u64::from_le_bytes(read_array(&mut r)?);
        let mut values = Vec::with_capacity(count.min(1 << 24) as usize);
        for _ in 0..count {
            values.push(f64::from_le_bytes(read_array(&mut r)?));
        }
        Ok(Self { kind, seed, replicate_index, calibration, digest, values })
    }
}

fn read_array<const K: usize>(r: &mut impl Read) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated snapshot".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = FieldSample { values: vec![1.5, -2.0, f64::MIN_POSITIVE], seed: 9, replicate_index: 4 };
        let snap = Snapshot::from_sample(&s, [7u8; 32]);
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 8 + 8 + 8 + 32 + 8 + 3 * 8);
        assert_eq!(Snapshot::read_from(&buf[..]).unwrap(), snap);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(Snapshot::read_from(&b"NOTAFILE"[..]), Err(Error::Format(_))));
        let snap = Snapshot {
            kind: SnapshotKind::Grid,
            seed: 1,
            replicate_index: 0,
            calibration: 1.1,
            digest: [0; 32],
            values: vec![0.0; 4],
        };
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(Snapshot::read_from(&buf[..]), Err(Error::Format(_))));
    }
}
