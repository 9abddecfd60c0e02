//! Binary model format: `FGMS`, a version byte, the architecture, then one
//! `(name, rows, cols, values)` record per parameter. Integers and floats
//! are little-endian; gradients are not stored.

use super::{Activation, ModelKind, ModelMeta, ModelState, Parameter};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const MAGIC: &[u8; 4] = b"FGMS";
const VERSION: u8 = 1;

pub fn encode_model(model: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.num_values());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(match model.meta.kind {
        ModelKind::Mlp => 0,
        ModelKind::Gcn => 1,
    });
    out.push(match model.meta.activation {
        Activation::Relu => 0,
        Activation::Identity => 1,
    });
    out.extend_from_slice(&model.meta.norm_exponent.to_le_bytes());
    out.extend_from_slice(&(model.meta.dims.len() as u32).to_le_bytes());
    for &d in &model.meta.dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for p in &model.params {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u64).to_le_bytes());
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::InvalidArgument(format!("model bytes truncated at offset {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::InvalidArgument(format!("size {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelState> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::InvalidArgument("not a model file (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::InvalidArgument(format!("unsupported model version {version}")));
    }
    let kind = match r.u8()? {
        0 => ModelKind::Mlp,
        1 => ModelKind::Gcn,
        k => return Err(Error::InvalidArgument(format!("unknown model kind {k}"))),
    };
    let activation = match r.u8()? {
        0 => Activation::Relu,
        1 => Activation::Identity,
        a => return Err(Error::InvalidArgument(format!("unknown activation {a}"))),
    };
    let norm_exponent = r.f64()?;
    let n_dims = r.u32()?;
    let dims = (0..n_dims).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let n_params = r.u32()?;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let len = r.u32()?;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::InvalidArgument("parameter name is not UTF-8".into()))?;
        let rows = r.u64()?;
        let cols = r.u64()?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidArgument("parameter too large".into()))?;
        let data = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        params.push(Parameter::new(name, DenseMatrix::from_vec(rows, cols, data)?));
    }
    if r.pos != bytes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} trailing bytes after model",
            bytes.len() - r.pos
        )));
    }
    let model = ModelState {
        meta: ModelMeta {
            kind,
            dims,
            activation,
            norm_exponent,
        },
        params,
    };
    // shapes must agree with the declared architecture
    let reference = ModelState::init(model.meta.clone(), 0)?;
    reference.check_compatible(&model)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut m = ModelState::gcn(&[7, 5, 3], 0.5, 42).unwrap();
        m.params[1].value.set(0, 2, f64::MIN_POSITIVE);
        m.params[3].value.set(0, 0, -0.0);
        let back = decode_model(&encode_model(&m)).unwrap();
        assert_eq!(back.meta, m.meta);
        for (a, b) in back.params.iter().zip(&m.params) {
            assert_eq!(a.name, b.name);
            let bits = |x: &DenseMatrix| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.value), bits(&b.value));
        }
    }

    #[test]
    fn rejects_corrupt_input() {
        let bytes = encode_model(&ModelState::mlp(&[3, 2], 1).unwrap());
        assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(decode_model(&extra).is_err());
    }
}
