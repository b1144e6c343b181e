//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! magic      8 bytes  "CONFMIL\0"
//! version    u32
//! dims       5 x u64  node_dim, edge_dim, hidden, attention, iterations
//! metadata   u32 length + UTF-8
//! tensors    u32 count, then per tensor:
//!            u32 name length + UTF-8 name, u32 rank, rank x u64 shape, f64 values
//! ```

use std::path::Path;

use super::params::ModelDims;
use crate::error::{bail, Result};
use crate::numkern::{ParamStore, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CONFMIL\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dims: ModelDims,
    pub params: ParamStore,
    /// Free-form provenance text.
    pub metadata: String,
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    ckpt.dims.check_params(&ckpt.params)?;
    let mut out = Vec::with_capacity(16 + 8 * ckpt.params.num_values() + 64 * ckpt.params.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let d = &ckpt.dims;
    for v in [d.node_dim, d.edge_dim, d.hidden, d.attention, d.iterations] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    let put_str = |out: &mut Vec<u8>, s: &str| {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    };
    put_str(&mut out, &ckpt.metadata);
    out.extend_from_slice(&(ckpt.params.len() as u32).to_le_bytes());
    for (name, t) in ckpt.params.iter() {
        put_str(&mut out, name);
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &s in t.shape() {
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.buf.len() => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            _ => bail!(Format, "checkpoint truncated at byte {}", self.pos),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| crate::Error::Format(format!("size {v} out of range")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| crate::Error::Format("invalid UTF-8".into()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8).ok() != Some(CHECKPOINT_MAGIC.as_slice()) {
        bail!(Format, "not a checkpoint (bad magic)");
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        bail!(Compatibility, "checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})");
    }
    let dims = ModelDims {
        node_dim: r.usize()?,
        edge_dim: r.usize()?,
        hidden: r.usize()?,
        attention: r.usize()?,
        iterations: r.usize()?,
    };
    dims.validate().map_err(|e| crate::Error::Format(e.to_string()))?;
    let metadata = r.string()?;
    let count = r.u32()? as usize;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        let Some(len) = len.filter(|l| l.checked_mul(8).is_some_and(|b| b <= bytes.len())) else {
            bail!(Format, "tensor {name} has an implausible shape {shape:?}");
        };
        let raw = r.take(len * 8)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let t = Tensor::new(shape, data).map_err(|e| crate::Error::Format(e.to_string()))?;
        params.insert(name, t).map_err(|e| crate::Error::Format(e.to_string()))?;
    }
    if r.pos != bytes.len() {
        bail!(Format, "{} trailing bytes after checkpoint", bytes.len() - r.pos);
    }
    dims.check_params(&params).map_err(|e| crate::Error::Format(e.to_string()))?;
    Ok(Checkpoint { dims, params, metadata })
}

pub fn save_model(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode_checkpoint(ckpt)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milnet::init_params;

    fn ckpt() -> Checkpoint {
        let dims = ModelDims::default();
        Checkpoint { dims, params: init_params(&dims, 4).unwrap(), metadata: "seed 4".into() }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let c = ckpt();
        let bytes = encode_checkpoint(&c).unwrap();
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back.metadata, c.metadata);
        assert_eq!(back.dims, c.dims);
        for ((_, a), (_, b)) in back.params.iter().zip(c.params.iter()) {
            let abits: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let bbits: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(abits, bbits);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_model(&path, &c).unwrap();
        assert_eq!(load_model(&path).unwrap(), c);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_checkpoint(&ckpt()).unwrap();
        for cut in [0, 5, 12, 60, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(crate::Error::Format(_))), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(crate::Error::Format(_))));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(decode_checkpoint(&bad), Err(crate::Error::Compatibility(_))));
        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(decode_checkpoint(&bad), Err(crate::Error::Format(_))));
        // hidden = 8 no longer matches the stored tensors
        let mut bad = bytes;
        bad[28] = 8;
        assert!(matches!(decode_checkpoint(&bad), Err(crate::Error::Format(_))));
    }
}
