//! Binary checkpoint format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic   9 bytes  "NEARLCKPT"
//! version u32      currently 1
//! count   u32      number of records
//! record:
//!   name_len u32
//!   name     name_len bytes, UTF-8
//!   ndim     u32
//!   dims     ndim x u32
//!   payload  prod(dims) x f64
//! ```
//!
//! Every persisted quantity is a named record — network parameters, Adam
//! moments, and trainer counters alike — so one loader covers full resume.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::tensor::Tensor;
use super::AdError;

pub const MAGIC: &[u8; 9] = b"NEARLCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint tensor: {0}")]
    Tensor(#[from] AdError),
}

pub fn write_records<W: Write>(w: &mut W, records: &[(String, Tensor)]) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(records.len() as u32).to_le_bytes())?;
    for (name, tensor) in records {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(bytes)?;
        let shape = tensor.shape();
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in tensor.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_records<R: Read>(r: &mut R) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let mut magic = [0u8; 9];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let count = read_u32(r)? as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|e| CheckpointError::Corrupt(format!("record name not UTF-8: {e}")))?;
        let ndim = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u32(r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        let mut buf = [0u8; 8];
        for _ in 0..numel {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        records.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(records)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Atomic save: write to a temp file in the same directory, then rename.
pub fn save_file(path: &Path, records: &[(String, Tensor)]) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_records(&mut w, records)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_file(path: &Path) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    read_records(&mut r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let records = vec![
            ("policy/layer0/weight".to_string(),
             Tensor::from_vec(&[2, 3], vec![1.5, -2.25, f64::MIN_POSITIVE, 0.1 + 0.2, 1e300, -0.0])
                 .unwrap()),
            ("trainer/beta".to_string(), Tensor::scalar(0.125)),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        let back = read_records(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for ((n0, t0), (n1, t1)) in records.iter().zip(&back) {
            assert_eq!(n0, n1);
            assert_eq!(t0.shape(), t1.shape());
            let bits0: Vec<u64> = t0.data().iter().map(|v| v.to_bits()).collect();
            let bits1: Vec<u64> = t1.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits0, bits1);
        }
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        let mut corrupted = buf.clone();
        corrupted[0] = b'X';
        assert!(matches!(read_records(&mut corrupted.as_slice()), Err(CheckpointError::BadMagic)));
        let mut vbuf = buf.clone();
        vbuf[9] = 99;
        assert!(matches!(
            read_records(&mut vbuf.as_slice()),
            Err(CheckpointError::BadVersion(99))
        ));
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let records =
            vec![("t".to_string(), Tensor::from_vec(&[4], vec![1.0, 2.0, 3.0, 4.0]).unwrap())];
        let mut buf = Vec::new();
        write_records(&mut buf, &records).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(read_records(&mut buf.as_slice()).is_err());
    }
}
