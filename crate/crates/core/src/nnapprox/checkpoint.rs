//! Binary parameter checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "SMQNET\0\0"
//! version  u32
//! n_dims   u32, then n_dims × u32:
//!          static_dim event_dim n_actions k recurrent
//!          n_static_hidden [sizes..] n_head_hidden [sizes..]
//! n_params u64, then n_params × f64
//! sha256   32 bytes over everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Layout, NetShape, NetworkParams};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SMQNET\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn to_bytes(params: &NetworkParams) -> Vec<u8> {
    let lay = params.layout();
    let s = lay.shape();
    let mut dims = vec![s.static_dim, s.event_dim, s.n_actions, s.k, lay.recurrent(), lay.static_hidden().len()];
    dims.extend_from_slice(lay.static_hidden());
    dims.push(lay.head_hidden().len());
    dims.extend_from_slice(lay.head_hidden());

    let mut out = Vec::with_capacity(24 + 4 * dims.len() + 8 * params.len() + DIGEST_LEN);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in params.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::BadCheckpoint("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Checks magic, then version, then checksum, then decodes.
pub fn from_bytes(bytes: &[u8]) -> Result<NetworkParams> {
    if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::BadCheckpoint("not a parameter checkpoint".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if bytes.len() < 12 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }

    let mut r = Reader { buf: body, pos: 12 };
    let n_dims = r.u32()? as usize;
    let dims = (0..n_dims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let bad = || Error::BadCheckpoint("malformed shape table".into());
    let [static_dim, event_dim, n_actions, k, recurrent, n_sh, ..] = dims[..] else {
        return Err(bad());
    };
    let static_hidden = dims.get(6..6 + n_sh).ok_or_else(bad)?;
    let n_hh = *dims.get(6 + n_sh).ok_or_else(bad)?;
    let head_hidden = dims.get(7 + n_sh..7 + n_sh + n_hh).ok_or_else(bad)?;
    if dims.len() != 7 + n_sh + n_hh {
        return Err(bad());
    }
    let shape = NetShape {
        static_dim,
        event_dim,
        n_actions,
        k,
    };
    let layout = Layout::new(shape, static_hidden, recurrent, head_hidden)?;
    let n = r.u64()? as usize;
    if n != layout.len() {
        return Err(Error::BadCheckpoint(format!(
            "{n} parameters stored, shape table implies {}",
            layout.len()
        )));
    }
    let raw = r.take(n.checked_mul(8).ok_or_else(bad)?)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if r.pos != body.len() {
        return Err(Error::BadCheckpoint("trailing bytes before checksum".into()));
    }
    NetworkParams::from_values(layout, values)
}

pub fn save_params(params: &NetworkParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<NetworkParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
