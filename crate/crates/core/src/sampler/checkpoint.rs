//! Binary chain checkpoints: little-endian fields behind a magic tag and a
//! format version.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chain::ChainState;
use super::SamplerConfig;
use crate::error::{KinkError, Result};

const MAGIC: &[u8; 4] = b"KFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub(crate) fn encode(id: u64, cfg: &SamplerConfig, st: &ChainState) -> Vec<u8> {
    let mut out = Vec::with_capacity(160 + 8 * st.values.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&id.to_le_bytes());
    // fingerprint of the target, checked on resume
    out.extend_from_slice(&cfg.eps.to_le_bytes());
    out.extend_from_slice(&cfg.charge.to_le_bytes());
    out.extend_from_slice(&(cfg.grid.n_interior() as u64).to_le_bytes());
    out.extend_from_slice(&cfg.grid.half_length().to_le_bytes());
    for v in [
        st.step,
        st.accepted,
        st.proposed,
        st.accepted_sampling,
        st.proposed_sampling,
        st.window_accepted,
        st.window_proposed,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&st.beta.to_le_bytes());
    out.extend_from_slice(&st.potential.to_le_bytes());
    out.extend_from_slice(&(st.values.len() as u64).to_le_bytes());
    for v in &st.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&st.rng.get_seed());
    out.extend_from_slice(&st.rng.get_stream().to_le_bytes());
    out.extend_from_slice(&st.rng.get_word_pos().to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(KinkError::Checkpoint("truncated checkpoint".into()));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("slice of length N"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub(crate) fn decode(cfg: &SamplerConfig, bytes: &[u8]) -> Result<(u64, ChainState)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(KinkError::Checkpoint("not a chain checkpoint".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(KinkError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let id = r.u64()?;
    let eps = r.f64()?;
    let charge = r.i32()?;
    let n_interior = r.u64()?;
    let half_length = r.f64()?;
    if eps.to_bits() != cfg.eps.to_bits()
        || charge != cfg.charge
        || n_interior != cfg.grid.n_interior() as u64
        || half_length.to_bits() != cfg.grid.half_length().to_bits()
    {
        return Err(KinkError::Checkpoint("checkpoint was written for a different target".into()));
    }
    let step = r.u64()?;
    let accepted = r.u64()?;
    let proposed = r.u64()?;
    let accepted_sampling = r.u64()?;
    let proposed_sampling = r.u64()?;
    let window_accepted = r.u64()?;
    let window_proposed = r.u64()?;
    let beta = r.f64()?;
    let potential = r.f64()?;
    let len = r.u64()? as usize;
    if len != cfg.grid.n_nodes() {
        return Err(KinkError::Checkpoint(format!("field has {len} nodes, grid has {}", cfg.grid.n_nodes())));
    }
    let values = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let seed: [u8; 32] = r.array()?;
    let stream = r.u64()?;
    let word_pos = r.u128()?;
    if r.pos != bytes.len() {
        return Err(KinkError::Checkpoint("trailing bytes after checkpoint".into()));
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word_pos);
    Ok((
        id,
        ChainState {
            values,
            potential,
            step,
            accepted,
            proposed,
            accepted_sampling,
            proposed_sampling,
            window_accepted,
            window_proposed,
            beta,
            rng,
        },
    ))
}
