//! Binary matrix dump: `"QHRP"`, u32 N, u32 flags, u32 reserved (zero), then N^2
//! little-endian (re, im) f64 pairs, row-major.
//!
//! Flag bits: 1 = Hermitian, 2 = unitary.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{OperatorMatrix, Tags};

pub const MAGIC: [u8; 4] = *b"QHRP";
pub const HEADER_LEN: usize = 16;
/// Refuse headers claiming more than this dimension (16 GiB of payload).
pub const MAX_DIM: u32 = 32_768;

pub fn encode_matrix(m: &OperatorMatrix) -> Vec<u8> {
    let n = m.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * n * n);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&m.tags().to_bits().to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for z in m.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<OperatorMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header ({} of {HEADER_LEN} bytes)",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[0..4])));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let flags = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if bytes[12..16] != [0; 4] {
        return Err(Error::Format("reserved header word is not zero".into()));
    }
    if n > MAX_DIM {
        return Err(Error::Format(format!("dimension {n} exceeds limit {MAX_DIM}")));
    }
    let n = n as usize;
    let payload = n
        .checked_mul(n)
        .and_then(|x| x.checked_mul(16))
        .ok_or_else(|| Error::Format(format!("dimension {n} overflows")))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < payload {
        return Err(Error::Format(format!(
            "truncated payload ({} of {payload} bytes)",
            body.len()
        )));
    }
    if body.len() > payload {
        return Err(Error::Format(format!(
            "{} trailing bytes after payload",
            body.len() - payload
        )));
    }
    let data = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    Ok(OperatorMatrix::from_row_major(n, data)?.with_tags(Tags::from_bits(flags)))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &OperatorMatrix) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_matrix(m))?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<OperatorMatrix> {
    decode_matrix(&fs::read(path)?)
}
