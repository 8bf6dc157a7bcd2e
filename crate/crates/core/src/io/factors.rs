//! Binary container for the factored approximant: the k(m+n) floats of
//! X and Y plus lambdas and bookkeeping, checksummed, bit-exact on round
//! trip.
//!
//! Layout (all integers and floats little-endian):
//!   magic        8 bytes  "LRFACTOR"
//!   version      u32      currently 1
//!   m, n, k      u64 each
//!   iteration    u64
//!   seen_count   u64
//!   seen         u64 * seen_count (ascending column indices)
//!   X            f64 * m * k   (vector by vector)
//!   Y            f64 * n * k   (vector by vector)
//!   lambdas      f64 * k
//!   checksum     u64 FNV-1a over all preceding bytes

use super::{io_err, IoError, IoResult};
use crate::basis::OrthoBasis;
use crate::engine::ApproxState;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"LRFACTOR";
const VERSION: u32 = 1;

/// Fixed part of the header: magic + version + five u64 fields.
pub const FACTOR_HEADER_BYTES: usize = 8 + 4 + 8 * 5;
pub const FACTOR_CHECKSUM_BYTES: usize = 8;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn write_factors(state: &ApproxState, n: usize, path: &Path) -> IoResult<()> {
    let m = state.x.dim();
    let k = state.rank();
    let mut buf = Vec::with_capacity(
        FACTOR_HEADER_BYTES
            + 8 * state.columns_seen.len()
            + 8 * (k * (m + n) + k)
            + FACTOR_CHECKSUM_BYTES,
    );
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for v in [
        m as u64,
        n as u64,
        k as u64,
        state.iteration,
        state.columns_seen.len() as u64,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &j in &state.columns_seen {
        buf.extend_from_slice(&(j as u64).to_le_bytes());
    }
    for x in state.x.vectors() {
        for v in x {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for y in &state.y {
        debug_assert_eq!(y.len(), n);
        for v in y {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    for lam in &state.lambdas {
        buf.extend_from_slice(&lam.to_le_bytes());
    }
    let checksum = fnv1a(&buf);
    buf.extend_from_slice(&checksum.to_le_bytes());

    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&buf).map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_factors(path: &Path) -> IoResult<ApproxState> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    let p = || path.display().to_string();
    let fail = |message: &str| IoError::Format {
        path: p(),
        message: message.into(),
    };

    if bytes.len() < FACTOR_HEADER_BYTES + FACTOR_CHECKSUM_BYTES {
        return Err(fail("file too short"));
    }
    if &bytes[..8] != MAGIC {
        return Err(fail("bad magic, not a factor file"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(IoError::VersionMismatch {
            path: p(),
            found: version,
            expected: VERSION,
        });
    }
    let body_len = bytes.len() - FACTOR_CHECKSUM_BYTES;
    let stored = u64::from_le_bytes(bytes[body_len..].try_into().unwrap());
    if fnv1a(&bytes[..body_len]) != stored {
        return Err(IoError::ChecksumMismatch { path: p() });
    }

    let mut pos = 12usize;
    let mut next_u64 = |bytes: &[u8]| -> u64 {
        let v = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
        pos += 8;
        v
    };
    let m = next_u64(&bytes) as usize;
    let n = next_u64(&bytes) as usize;
    let k = next_u64(&bytes) as usize;
    let iteration = next_u64(&bytes);
    let seen_count = next_u64(&bytes) as usize;

    let expect = FACTOR_HEADER_BYTES + 8 * (seen_count + k * (m + n) + k) + FACTOR_CHECKSUM_BYTES;
    if bytes.len() != expect {
        return Err(fail(&format!(
            "payload size mismatch: expected {expect} bytes, got {}",
            bytes.len()
        )));
    }

    let mut columns_seen = BTreeSet::new();
    for _ in 0..seen_count {
        columns_seen.insert(next_u64(&bytes) as usize);
    }
    let mut read_f64_block = |len: usize, bytes: &[u8]| -> IoResult<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let v = f64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap());
            pos += 8;
            if !v.is_finite() {
                return Err(IoError::Format {
                    path: p(),
                    message: format!("non-finite value at float index {i}"),
                });
            }
            out.push(v);
        }
        Ok(out)
    };
    let mut x_vecs = Vec::with_capacity(k);
    for _ in 0..k {
        x_vecs.push(read_f64_block(m, &bytes)?);
    }
    let mut y_cols = Vec::with_capacity(k);
    for _ in 0..k {
        y_cols.push(read_f64_block(n, &bytes)?);
    }
    let lambdas = read_f64_block(k, &bytes)?;

    let x = OrthoBasis::from_vectors(m, x_vecs)?;
    Ok(ApproxState::from_parts(
        x,
        y_cols,
        lambdas,
        iteration,
        columns_seen,
        n,
    )?)
}
