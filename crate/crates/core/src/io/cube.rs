//! `KSTCUBE1` binary data cubes.
//!
//! Layout: the 8-byte magic `KSTCUBE1`, four little-endian `u32` fields
//! (version, p, q, n), then `n · p · q` complex values as interleaved
//! little-endian `f64` pairs `(re, im)`. Snapshots follow each other, and each
//! snapshot is stored in [`vec_spacetime`](crate::linalg::vec_spacetime) order.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexVector;

pub const MAGIC: &[u8; 8] = b"KSTCUBE1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

/// A stack of space-time snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    pub p: usize,
    pub q: usize,
    pub snapshots: Vec<ComplexVector>,
}

impl DataCube {
    pub fn new(p: usize, q: usize, snapshots: Vec<ComplexVector>) -> Result<Self> {
        if let Some(x) = snapshots.iter().find(|x| x.len() != p * q) {
            return Err(Error::Dimension(format!("snapshot of length {} in a {p}x{q} cube", x.len())));
        }
        Ok(Self { p, q, snapshots })
    }

    pub fn n(&self) -> usize {
        self.snapshots.len()
    }

    /// Size in bytes of the encoded cube.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + 16 * self.n() * self.p * self.q
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let field = |v: usize, name: &str| {
            u32::try_from(v).map_err(|_| Error::Format(format!("{name}={v} does not fit the u32 header")))
        };
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        for (v, name) in [(VERSION as usize, "version"), (self.p, "p"), (self.q, "q"), (self.n(), "n")] {
            out.extend_from_slice(&field(v, name)?.to_le_bytes());
        }
        for x in &self.snapshots {
            for z in x.iter() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!("truncated header: {} bytes", bytes.len())));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::Format("bad magic: not a KSTCUBE1 file".into()));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().expect("4 bytes")) as usize;
        let version = word(0) as u32;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported cube version {version}")));
        }
        let (p, q, n) = (word(1), word(2), word(3));
        let dim = p
            .checked_mul(q)
            .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
        let expected = n
            .checked_mul(dim)
            .and_then(|v| v.checked_mul(16))
            .and_then(|v| v.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "file has {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let f = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
        let snapshots = (0..n)
            .map(|m| {
                ComplexVector::from_fn(dim, |k, _| {
                    let off = HEADER_LEN + 16 * (m * dim + k);
                    Complex64::new(f(off), f(off + 8))
                })
            })
            .collect();
        Ok(Self { p, q, snapshots })
    }
}

pub fn write_cube(path: impl AsRef<Path>, cube: &DataCube) -> Result<()> {
    std::fs::write(path, cube.to_bytes()?)?;
    Ok(())
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<DataCube> {
    DataCube::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(p: usize, q: usize, n: usize) -> DataCube {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs = (0..n)
            .map(|_| ComplexVector::from_fn(p * q, |_, _| Complex64::new(rng.random(), rng.random::<f64>() - 0.5)))
            .collect();
        DataCube::new(p, q, xs).unwrap()
    }

    #[test]
    fn empty_cube_is_header_only() {
        let cube = DataCube::new(3, 4, vec![]).unwrap();
        let bytes = cube.to_bytes().unwrap();
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..8], b"KSTCUBE1");
        assert_eq!(DataCube::from_bytes(&bytes).unwrap(), cube);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cube = random_cube(3, 5, 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.bin");
        write_cube(&path, &cube).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 24 + 16 * 7 * 3 * 5);
        let back = read_cube(&path).unwrap();
        for (a, b) in cube.snapshots.iter().zip(&back.snapshots) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn header_fields_are_little_endian() {
        let bytes = random_cube(2, 3, 4).to_bytes().unwrap();
        assert_eq!(&bytes[8..24], &[1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0]);
        // First value: snapshot 0, channel 0, pulse 0.
        let cube = random_cube(2, 3, 4);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), cube.snapshots[0][0].re);
    }

    #[test]
    fn malformed_files_rejected() {
        let bytes = random_cube(2, 2, 2).to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(DataCube::from_bytes(&bad), Err(Error::Format(_))));
        assert!(matches!(DataCube::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(DataCube::from_bytes(&bytes[..10]), Err(Error::Format(_))));
        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(DataCube::from_bytes(&v2), Err(Error::Format(_))));
        assert!(DataCube::new(2, 2, vec![ComplexVector::zeros(3)]).is_err());
    }
}
