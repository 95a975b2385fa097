//! Flat binary checkpoint format for parameter sets.
//!
//! Layout, all integers little-endian u32 unless noted:
//!
//! ```text
//! magic   8 bytes  b"A3PSCKPT"
//! version u32      currently 1
//! count   u32      number of parameters
//! then per parameter, in set order:
//!   name_len u32, name bytes (UTF-8),
//!   rank u32, dims u32 * rank,
//!   payload f64 little-endian * prod(dims)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ParamSet;
use super::tensor::Tensor;
use super::{NnError, Result};

const MAGIC: &[u8; 8] = b"A3PSCKPT";
const VERSION: u32 = 1;

pub fn save_params(params: &ParamSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for p in params.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.value.shape().len() as u32).to_le_bytes())?;
        for d in p.value.shape() {
            w.write_all(&(*d as u32).to_le_bytes())?;
        }
        for v in p.value.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Loads a checkpoint into a fresh `ParamSet`, preserving on-disk order.
pub fn load_params(path: &Path) -> Result<ParamSet> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u32(&mut r)? as usize;

    let mut params = ParamSet::new();
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        if name_len > 1 << 16 {
            return Err(NnError::Checkpoint("parameter name too long".into()));
        }
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NnError::Checkpoint("parameter name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(NnError::Checkpoint(format!("implausible rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut values = Vec::with_capacity(numel);
        let mut buf = [0u8; 8];
        for _ in 0..numel {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        let tensor = Tensor::new(shape, values)
            .map_err(|e| NnError::Checkpoint(format!("parameter {name}: {e}")))?;
        params.add(name, tensor);
    }
    Ok(params)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_names_shapes_and_bits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");

        let mut ps = ParamSet::new();
        ps.add(
            "enc.w",
            Tensor::matrix(2, 3, vec![0.1, -0.2, 1e-300, 3.5, -7.25, 0.0]).unwrap(),
        );
        ps.add("enc.b", Tensor::vector(vec![0.5, 0.25, -0.125]).unwrap());
        ps.add("scalarish", Tensor::scalar(42.0));

        save_params(&ps, &path).unwrap();
        let loaded = load_params(&path).unwrap();

        assert_eq!(loaded.len(), ps.len());
        for (a, b) in ps.iter().zip(loaded.iter()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value.shape(), b.value.shape());
            let bits_a: Vec<u64> = a.value.values().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.value.values().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
        assert_eq!(ps.checksum(), loaded.checksum());
    }

    #[test]
    fn rejects_wrong_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ckpt");
        std::fs::write(&path, b"NOTMAGIC\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(load_params(&path), Err(NnError::Checkpoint(_))));
    }

    #[test]
    fn rejects_truncated_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.ckpt");
        let mut ps = ParamSet::new();
        ps.add("w", Tensor::vector(vec![1.0, 2.0, 3.0]).unwrap());
        save_params(&ps, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(load_params(&path).is_err());
    }
}
