//! Binary weight checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "CSGINN\0\0"
//! version  u32      currently 1
//! count    u32      number of tensors
//! per tensor:
//!   name_len u32, name (UTF-8)
//!   rank     u32, dims (u64 × rank)
//!   data     f64 × product(dims)
//! ```
//!
//! Tensors are stored in registration order and matched by name on load.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{NnError, Result};
use crate::params::ParamSet;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 8] = b"CSGINN\0\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_params<W: Write>(params: &ParamSet, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, t) in params.iter() {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Read every tensor in a checkpoint, in file order.
pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Format("not a weight checkpoint (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(NnError::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        if len > 1 << 16 {
            return Err(NnError::Format("parameter name too long".into()));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| NnError::Format("parameter name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 8 {
            return Err(NnError::Format(format!("rank {rank} of {name} too large")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| NnError::Format(format!("tensor {name} too large")))?;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_bits(read_u64(&mut r)?));
        }
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

/// Load values into an existing parameter set. The checkpoint must contain
/// exactly the set's names with matching shapes.
pub fn read_params_into<R: Read>(params: &mut ParamSet, r: R) -> Result<()> {
    let tensors = read_tensors(r)?;
    if tensors.len() != params.len() {
        return Err(NnError::Format(format!(
            "checkpoint holds {} tensors, model has {}",
            tensors.len(),
            params.len()
        )));
    }
    for (name, t) in tensors {
        let id = params
            .find(&name)
            .ok_or_else(|| NnError::Format(format!("unknown parameter {name}")))?;
        if params.get(id).shape() != t.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "{name}: checkpoint {:?}, model {:?}",
                t.shape(),
                params.get(id).shape()
            )));
        }
        params.get_mut(id).data_mut().copy_from_slice(t.data());
    }
    Ok(())
}

pub fn save(params: &ParamSet, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_params(params, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_into(params: &mut ParamSet, path: &Path) -> Result<()> {
    let bytes = fs::read(path)?;
    read_params_into(params, bytes.as_slice())
}
