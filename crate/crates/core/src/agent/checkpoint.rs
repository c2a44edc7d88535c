//! Versioned binary container for trained networks.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "RLMSCKPT" | u32 version | u32 h | u32 M | u64 episodes_done
//! f64 time_scale | f64 cap | u32 num_models | u32 max_layers
//! u32 n_arrays, then per array: u16 name_len | name | u64 len | len x f64
//! ```

use std::collections::HashSet;

use thiserror::Error;

use super::codec::{action_width, state_width, FeatureNorms};
use super::lstm::{Head, LstmNet, NetShape};
use super::policy::Policy;

pub const MAGIC: &[u8; 8] = b"RLMSCKPT";
pub const VERSION: u32 = 1;

pub const ACTOR: &str = "actor";
pub const CRITIC: &str = "critic";
pub const ACTOR_TARGET: &str = "actor_target";
pub const CRITIC_TARGET: &str = "critic_target";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes after last array")]
    Trailing(usize),
    #[error("invalid header: {0}")]
    Header(String),
    #[error("array name is not UTF-8")]
    Name,
    #[error("array `{0}` appears twice")]
    Duplicate(String),
    #[error("array `{0}` is missing")]
    Missing(String),
    #[error("array `{name}` has {found} values, expected {expected}")]
    Length { name: String, expected: usize, found: usize },
    #[error("array `{0}` holds a non-finite value")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hidden: usize,
    pub num_sas: usize,
    pub episodes_done: u64,
    pub norms: FeatureNorms,
    pub arrays: Vec<(String, Vec<f64>)>,
}

pub fn actor_shape(hidden: usize, num_sas: usize) -> Result<NetShape, CheckpointError> {
    NetShape::new(state_width(num_sas), hidden, action_width(num_sas), Head::Tanh)
        .map_err(|e| CheckpointError::Header(e.to_string()))
}

pub fn critic_shape(hidden: usize, num_sas: usize) -> Result<NetShape, CheckpointError> {
    NetShape::new(state_width(num_sas) + action_width(num_sas), hidden, 1, Head::Linear)
        .map_err(|e| CheckpointError::Header(e.to_string()))
}

fn expected_len(name: &str, hidden: usize, num_sas: usize) -> Result<Option<usize>, CheckpointError> {
    Ok(match name {
        ACTOR | ACTOR_TARGET => Some(actor_shape(hidden, num_sas)?.param_count()),
        CRITIC | CRITIC_TARGET => Some(critic_shape(hidden, num_sas)?.param_count()),
        _ => None,
    })
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(CheckpointError::Truncated(self.pos))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn from_policy(policy: &Policy, episodes_done: u64) -> Self {
        Checkpoint {
            hidden: policy.actor.shape().hidden,
            num_sas: policy.num_sas(),
            episodes_done,
            norms: policy.norms,
            arrays: vec![(ACTOR.to_string(), policy.actor.params().to_vec())],
        }
    }

    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    fn net(&self, name: &str, shape: NetShape) -> Result<LstmNet, CheckpointError> {
        let params = self.array(name).ok_or_else(|| CheckpointError::Missing(name.to_string()))?;
        LstmNet::from_params(shape, params.to_vec()).map_err(|_| CheckpointError::Length {
            name: name.to_string(),
            expected: shape.param_count(),
            found: params.len(),
        })
    }

    pub fn actor_net(&self, name: &str) -> Result<LstmNet, CheckpointError> {
        self.net(name, actor_shape(self.hidden, self.num_sas)?)
    }

    pub fn critic_net(&self, name: &str) -> Result<LstmNet, CheckpointError> {
        self.net(name, critic_shape(self.hidden, self.num_sas)?)
    }

    pub fn policy(&self) -> Result<Policy, CheckpointError> {
        Policy::new(self.actor_net(ACTOR)?, self.norms).map_err(|e| CheckpointError::Header(e.to_string()))
    }

    pub fn encode(&self) -> Vec<u8> {
        let payload: usize = self.arrays.iter().map(|(n, v)| 10 + n.len() + 8 * v.len()).sum();
        let mut out = Vec::with_capacity(56 + payload);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.hidden as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_sas as u32).to_le_bytes());
        out.extend_from_slice(&self.episodes_done.to_le_bytes());
        out.extend_from_slice(&self.norms.time_scale.to_le_bytes());
        out.extend_from_slice(&self.norms.cap.to_le_bytes());
        out.extend_from_slice(&(self.norms.num_models as u32).to_le_bytes());
        out.extend_from_slice(&(self.norms.max_layers as u32).to_le_bytes());
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for (name, values) in &self.arrays {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(MAGIC.len()).map_err(|_| CheckpointError::BadMagic)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hidden = r.u32()? as usize;
        let num_sas = r.u32()? as usize;
        let episodes_done = r.u64()?;
        let time_scale = r.f64()?;
        let cap = r.f64()?;
        let num_models = r.u32()? as usize;
        let max_layers = r.u32()? as usize;
        if hidden == 0 || hidden % 2 != 0 || hidden > 1 << 16 {
            return Err(CheckpointError::Header(format!("hidden size {hidden}")));
        }
        if num_sas == 0 || num_sas > 1 << 12 {
            return Err(CheckpointError::Header(format!("SA count {num_sas}")));
        }
        if !(time_scale > 0.0 && time_scale.is_finite()) || !(cap > 0.0 && cap.is_finite()) {
            return Err(CheckpointError::Header("normalisation constants must be positive".into()));
        }
        let n_arrays = r.u32()?;
        let mut seen = HashSet::new();
        let mut arrays = Vec::new();
        for _ in 0..n_arrays {
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| CheckpointError::Name)?.to_string();
            if !seen.insert(name.clone()) {
                return Err(CheckpointError::Duplicate(name));
            }
            let len = r.u64()?;
            if len > (r.remaining() / 8) as u64 {
                return Err(CheckpointError::Truncated(r.pos));
            }
            let len = len as usize;
            if let Some(expected) = expected_len(&name, hidden, num_sas)? {
                if expected != len {
                    return Err(CheckpointError::Length { name, expected, found: len });
                }
            }
            let raw = r.take(len * 8)?;
            let values: Vec<f64> =
                raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(CheckpointError::NonFinite(name));
            }
            arrays.push((name, values));
        }
        if r.remaining() != 0 {
            return Err(CheckpointError::Trailing(r.remaining()));
        }
        Ok(Checkpoint {
            hidden,
            num_sas,
            episodes_done,
            norms: FeatureNorms { time_scale, cap, num_models, max_layers },
            arrays,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = LstmNet::init(actor_shape(4, 2).unwrap(), &mut rng);
        let critic = LstmNet::init(critic_shape(4, 2).unwrap(), &mut rng);
        Checkpoint {
            hidden: 4,
            num_sas: 2,
            episodes_done: 17,
            norms: FeatureNorms { time_scale: 1000.0, cap: 10.0, num_models: 2, max_layers: 3 },
            arrays: vec![
                (ACTOR.into(), actor.params().to_vec()),
                (CRITIC.into(), critic.params().to_vec()),
            ],
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let bytes = c.encode();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.policy().unwrap().num_sas(), 2);
        assert!(back.critic_net(CRITIC).is_ok());
        assert_eq!(back.actor_net(ACTOR_TARGET), Err(CheckpointError::Missing(ACTOR_TARGET.into())));
    }

    #[test]
    fn rejects_corruption() {
        let bytes = sample().encode();
        assert_eq!(Checkpoint::decode(b"nope"), Err(CheckpointError::BadMagic));
        let mut v = bytes.clone();
        v[8] = 9;
        assert_eq!(Checkpoint::decode(&v), Err(CheckpointError::Version(9)));
        for cut in [10, 40, 60, bytes.len() - 1] {
            assert!(Checkpoint::decode(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(Checkpoint::decode(&extra), Err(CheckpointError::Trailing(1)));
        let mut nan = bytes.clone();
        let n = nan.len();
        nan[n - 8..].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(Checkpoint::decode(&nan), Err(CheckpointError::NonFinite(_))));
    }

    #[test]
    fn wrong_array_length() {
        let mut c = sample();
        c.arrays[0].1.pop();
        assert!(matches!(Checkpoint::decode(&c.encode()), Err(CheckpointError::Length { .. })));
    }

    #[test]
    fn huge_declared_length_does_not_allocate() {
        let mut c = sample();
        c.arrays = vec![("x".into(), vec![])];
        let mut bytes = c.encode();
        let n = bytes.len();
        bytes[n - 8..].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(Checkpoint::decode(&bytes), Err(CheckpointError::Truncated(_))));
    }
}
