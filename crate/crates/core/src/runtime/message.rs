//! Worker/server messages and their byte framing.
//!
//! Frame layout, little-endian:
//!
//! ```text
//! u8 tag (1 = WorkerUpdate, 2 = ServerBroadcast)
//! u32 task_id | u32 round | u32 d | d x f64 payload
//! trailing 8-byte scalars in field order
//!   WorkerUpdate:    f64 local_obj_gain, u64 wall_micros
//!   ServerBroadcast: f64 sigma_ii, f64 rho
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TAG_WORKER_UPDATE: u8 = 1;
const TAG_SERVER_BROADCAST: u8 = 2;
const HEADER: usize = 1 + 4 + 4 + 4;
const TRAILER: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerUpdateMsg {
    pub task_id: u32,
    pub round: u32,
    /// eta-scaled change of b_i this round
    pub delta_b: Vec<f64>,
    pub local_obj_gain: f64,
    pub wall_micros: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerBroadcastMsg {
    pub task_id: u32,
    pub round: u32,
    pub w_i: Vec<f64>,
    pub sigma_ii: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    WorkerUpdate(WorkerUpdateMsg),
    ServerBroadcast(ServerBroadcastMsg),
}

impl From<WorkerUpdateMsg> for Message {
    fn from(m: WorkerUpdateMsg) -> Self {
        Message::WorkerUpdate(m)
    }
}

impl From<ServerBroadcastMsg> for Message {
    fn from(m: ServerBroadcastMsg) -> Self {
        Message::ServerBroadcast(m)
    }
}

fn put_header(out: &mut Vec<u8>, tag: u8, task_id: u32, round: u32, payload: &[f64]) {
    out.push(tag);
    out.extend_from_slice(&task_id.to_le_bytes());
    out.extend_from_slice(&round.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_msg(msg: &Message) -> Vec<u8> {
    match msg {
        Message::WorkerUpdate(m) => {
            let mut out = Vec::with_capacity(HEADER + 8 * m.delta_b.len() + TRAILER);
            put_header(&mut out, TAG_WORKER_UPDATE, m.task_id, m.round, &m.delta_b);
            out.extend_from_slice(&m.local_obj_gain.to_le_bytes());
            out.extend_from_slice(&m.wall_micros.to_le_bytes());
            out
        }
        Message::ServerBroadcast(m) => {
            let mut out = Vec::with_capacity(HEADER + 8 * m.w_i.len() + TRAILER);
            put_header(&mut out, TAG_SERVER_BROADCAST, m.task_id, m.round, &m.w_i);
            out.extend_from_slice(&m.sigma_ii.to_le_bytes());
            out.extend_from_slice(&m.rho.to_le_bytes());
            out
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let bytes = self.buf.get(self.pos..end).ok_or(Error::TruncatedFrame {
            needed: end,
            got: self.buf.len(),
        })?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn decode_msg(bytes: &[u8]) -> Result<Message> {
    let tag = *bytes.first().ok_or(Error::TruncatedFrame { needed: 1, got: 0 })?;
    if tag != TAG_WORKER_UPDATE && tag != TAG_SERVER_BROADCAST {
        return Err(Error::BadTag(tag));
    }
    let mut r = Reader { buf: bytes, pos: 1 };
    let task_id = r.u32()?;
    let round = r.u32()?;
    let d = r.u32()? as usize;
    let needed = HEADER + 8 * d + TRAILER;
    if bytes.len() < needed {
        return Err(Error::TruncatedFrame {
            needed,
            got: bytes.len(),
        });
    }
    if bytes.len() > needed {
        return Err(Error::TrailingBytes {
            extra: bytes.len() - needed,
        });
    }
    let payload = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let msg = if tag == TAG_WORKER_UPDATE {
        Message::WorkerUpdate(WorkerUpdateMsg {
            task_id,
            round,
            delta_b: payload,
            local_obj_gain: r.f64()?,
            wall_micros: r.u64()?,
        })
    } else {
        Message::ServerBroadcast(ServerBroadcastMsg {
            task_id,
            round,
            w_i: payload,
            sigma_ii: r.f64()?,
            rho: r.f64()?,
        })
    };
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn update(delta_b: Vec<f64>) -> Message {
        WorkerUpdateMsg {
            task_id: 3,
            round: 7,
            delta_b,
            local_obj_gain: 0.25,
            wall_micros: 1234,
        }
        .into()
    }

    #[test]
    fn frame_length() {
        let bytes = encode_msg(&update(vec![1.0, 0.0]));
        assert_eq!(bytes.len(), 45);
        assert_eq!(bytes[0], 1);
        assert_eq!(&bytes[13..21], &1.0f64.to_le_bytes());
    }

    #[test]
    fn errors() {
        let bytes = encode_msg(&update(vec![1.0, 0.0]));
        for cut in [0, 1, 12, 20, 44] {
            assert!(matches!(
                decode_msg(&bytes[..cut]),
                Err(Error::TruncatedFrame { .. })
            ));
        }
        let mut bad = bytes.clone();
        bad[0] = 9;
        assert_eq!(decode_msg(&bad), Err(Error::BadTag(9)));
        let mut long = bytes;
        long.push(0);
        assert_eq!(decode_msg(&long), Err(Error::TrailingBytes { extra: 1 }));
    }

    proptest! {
        #[test]
        fn round_trip(task_id: u32, round: u32,
                      payload in proptest::collection::vec(any::<f64>().prop_filter("nan", |v| !v.is_nan()), 0..20),
                      a in any::<f64>().prop_filter("nan", |v| !v.is_nan()),
                      b in any::<f64>().prop_filter("nan", |v| !v.is_nan()),
                      micros: u64, broadcast: bool) {
            let msg: Message = if broadcast {
                ServerBroadcastMsg { task_id, round, w_i: payload, sigma_ii: a, rho: b }.into()
            } else {
                WorkerUpdateMsg { task_id, round, delta_b: payload, local_obj_gain: a, wall_micros: micros }.into()
            };
            let bytes = encode_msg(&msg);
            prop_assert_eq!(decode_msg(&bytes).unwrap(), msg);
        }
    }
}
