//! Binary checkpoint format for a [`PolicyBundle`].
//!
//! ```text
//! b"CEPN1"
//! u32 network count (3: actor, critic, target critic)
//! per network: u32 layer count, then u32 width per layer
//! per network: f64 parameters in layer order
//! ```
//!
//! All integers and floats are little-endian. Decoding then re-encoding is
//! byte-identical.

use std::fs;
use std::path::Path;

use super::mlp::Mlp;
use super::policy::PolicyBundle;
use super::NeuralError;

pub const MAGIC: &[u8; 5] = b"CEPN1";

pub fn encode(bundle: &PolicyBundle) -> Vec<u8> {
    let nets = [&bundle.actor, &bundle.critic, &bundle.target_critic];
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(nets.len() as u32).to_le_bytes());
    for net in nets {
        out.extend_from_slice(&(net.widths().len() as u32).to_le_bytes());
        for &w in net.widths() {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
    }
    for net in nets {
        for p in net.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NeuralError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(NeuralError::Checkpoint(format!(
                "truncated at byte {} (wanted {n} more)",
                self.pos
            ))),
        }
    }

    fn u32(&mut self) -> Result<u32, NeuralError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, NeuralError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<PolicyBundle, NeuralError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(NeuralError::Checkpoint("bad magic".into()));
    }
    let count = r.u32()?;
    if count != 3 {
        return Err(NeuralError::Checkpoint(format!(
            "expected 3 networks, found {count}"
        )));
    }
    let mut shapes = Vec::with_capacity(3);
    for _ in 0..count {
        let layers = r.u32()? as usize;
        if !(2..=64).contains(&layers) {
            return Err(NeuralError::Checkpoint(format!(
                "implausible layer count {layers}"
            )));
        }
        let widths = (0..layers)
            .map(|_| r.u32().map(|w| w as usize))
            .collect::<Result<Vec<_>, _>>()?;
        shapes.push(widths);
    }
    let mut nets = Vec::with_capacity(3);
    for widths in &shapes {
        let n = super::mlp::param_count(widths);
        if n.saturating_mul(8) > bytes.len() {
            return Err(NeuralError::Checkpoint(
                "parameter block larger than file".into(),
            ));
        }
        let params = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        nets.push(
            Mlp::from_params(widths, params).map_err(|e| NeuralError::Checkpoint(e.to_string()))?,
        );
    }
    if r.pos != bytes.len() {
        return Err(NeuralError::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let target_critic = nets.pop().unwrap();
    let critic = nets.pop().unwrap();
    let actor = nets.pop().unwrap();
    let bundle = PolicyBundle {
        actor,
        critic,
        target_critic,
    };
    let state_dim = bundle.state_dim();
    let consistent = bundle.actor.output_dim() == 4
        && bundle.critic.input_dim() == state_dim + 2
        && bundle.critic.output_dim() == 1
        && bundle.critic.same_shape(&bundle.target_critic);
    if !consistent {
        return Err(NeuralError::Checkpoint(
            "actor/critic widths disagree".into(),
        ));
    }
    Ok(bundle)
}

pub fn save(bundle: &PolicyBundle, path: &Path) -> Result<(), NeuralError> {
    fs::write(path, encode(bundle))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PolicyBundle, NeuralError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bundle() -> PolicyBundle {
        PolicyBundle::new(6, &[5, 4], &mut ChaCha8Rng::seed_from_u64(1))
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let b = bundle();
        let bytes = encode(&b);
        assert_eq!(&bytes[..5], MAGIC);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let bytes = encode(&bundle());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(NeuralError::Checkpoint(_))));
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(decode(&long).is_err());
        // critic input width no longer matches the actor
        let mut widths = bytes.clone();
        let critic_first_width = 5 + 4 + 4 + 4 * 4 + 4;
        widths[critic_first_width] = 7;
        assert!(decode(&widths).is_err());
    }
}
