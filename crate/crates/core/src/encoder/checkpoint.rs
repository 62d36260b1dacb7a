//! Binary container of named `f64` arrays.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   8 bytes  "TRTCKPT1"
//! count   u32      number of tensors
//! repeated count times:
//!   name_len u32, name (UTF-8 bytes)
//!   ndim     u32, dims (u64 each)
//!   data     product(dims) × f64, row-major
//! ```
//!
//! Values are stored bit-for-bit, so reading and re-writing a file
//! reproduces it byte for byte.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TRTCKPT1";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<checkpoint stream>", e)
}

pub fn write_tensors<W: Write>(mut w: W, tensors: &[NamedTensor]) -> Result<()> {
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&(tensors.len() as u32).to_le_bytes()).map_err(io_err)?;
    for t in tensors {
        if t.shape.iter().product::<usize>() != t.data.len() {
            return Err(Error::Shape(format!("tensor {} data does not match its shape", t.name)));
        }
        w.write_all(&(t.name.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(t.name.as_bytes()).map_err(io_err)?;
        w.write_all(&(t.shape.len() as u32).to_le_bytes()).map_err(io_err)?;
        for &dim in &t.shape {
            w.write_all(&(dim as u64).to_le_bytes()).map_err(io_err)?;
        }
        for &x in &t.data {
            w.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<NamedTensor>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::InvalidInput("not a checkpoint file (bad magic)".into()));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(io_err)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::InvalidInput("checkpoint tensor name is not UTF-8".into()))?;
        let ndim = read_u32(&mut r)? as usize;
        let shape = (0..ndim)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_bits(read_u64(&mut r)?));
        }
        out.push(NamedTensor { name, shape, data });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io_err)? != 0 {
        return Err(Error::InvalidInput("trailing bytes after checkpoint".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bytes_roundtrip(
            tensors in proptest::collection::vec(
                ("[a-z.0-9]{1,12}", proptest::collection::vec(0usize..4, 0..3))
                    .prop_flat_map(|(name, shape)| {
                        let len = shape.iter().product::<usize>();
                        proptest::collection::vec(any::<u64>(), len)
                            .prop_map(move |bits| NamedTensor {
                                name: name.clone(),
                                shape: shape.clone(),
                                data: bits.into_iter().map(f64::from_bits).collect(),
                            })
                    }),
                0..5,
            )
        ) {
            let mut bytes = Vec::new();
            write_tensors(&mut bytes, &tensors).unwrap();
            let back = read_tensors(bytes.as_slice()).unwrap();
            let mut again = Vec::new();
            write_tensors(&mut again, &back).unwrap();
            prop_assert_eq!(bytes, again);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_tensors(&b"NOTACKPT\0\0\0\0"[..]).is_err());
        let mut bytes = Vec::new();
        write_tensors(&mut bytes, &[]).unwrap();
        bytes.push(0);
        assert!(read_tensors(bytes.as_slice()).is_err());
        let bad = NamedTensor { name: "x".into(), shape: vec![2], data: vec![1.0] };
        assert!(write_tensors(Vec::new(), &[bad]).is_err());
    }
}
