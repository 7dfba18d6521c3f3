//! Protocol messages exchanged between controller and learners. Model
//! payloads travel as opaque blob bytes (see [`crate::codec::ModelBlob`]);
//! decoding them needs scheme parameters the frame layer does not hold.

use crate::codec::Reader;
use crate::{Result, WireError};

pub const TYPE_REGISTER: u8 = 1;
pub const TYPE_COMMUNITY_MODEL: u8 = 2;
pub const TYPE_LOCAL_MODEL: u8 = 3;
pub const TYPE_METRICS_ACK: u8 = 4;
pub const TYPE_SHUTDOWN: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Learner joins the federation, declaring its dataset size p_k.
    Register { learner_id: u32, contribution: u64 },
    /// Controller broadcasts the round's community model.
    CommunityModel { round: u32, model: Vec<u8> },
    /// Learner returns its trained local model for the round.
    LocalModel {
        round: u32,
        learner_id: u32,
        model: Vec<u8>,
    },
    /// Bare acknowledgement.
    MetricsAck,
    /// Orderly end of the session.
    Shutdown,
}

impl Message {
    /// Splits into the frame type byte and the payload bytes.
    pub fn encode_payload(&self) -> (u8, Vec<u8>) {
        match self {
            Message::Register {
                learner_id,
                contribution,
            } => {
                let mut p = Vec::with_capacity(12);
                p.extend_from_slice(&learner_id.to_le_bytes());
                p.extend_from_slice(&contribution.to_le_bytes());
                (TYPE_REGISTER, p)
            }
            Message::CommunityModel { round, model } => {
                let mut p = Vec::with_capacity(4 + model.len());
                p.extend_from_slice(&round.to_le_bytes());
                p.extend_from_slice(model);
                (TYPE_COMMUNITY_MODEL, p)
            }
            Message::LocalModel {
                round,
                learner_id,
                model,
            } => {
                let mut p = Vec::with_capacity(8 + model.len());
                p.extend_from_slice(&round.to_le_bytes());
                p.extend_from_slice(&learner_id.to_le_bytes());
                p.extend_from_slice(model);
                (TYPE_LOCAL_MODEL, p)
            }
            Message::MetricsAck => (TYPE_METRICS_ACK, Vec::new()),
            Message::Shutdown => (TYPE_SHUTDOWN, Vec::new()),
        }
    }

    /// Rebuilds a message from a frame's type byte and payload.
    pub fn decode_payload(msg_type: u8, payload: &[u8]) -> Result<Self> {
        match msg_type {
            TYPE_REGISTER => {
                let mut r = Reader::new(payload);
                let learner_id = r.u32("register learner id")?;
                let contribution = r.u64("register contribution")?;
                r.finish("register")?;
                Ok(Message::Register {
                    learner_id,
                    contribution,
                })
            }
            TYPE_COMMUNITY_MODEL => {
                let mut r = Reader::new(payload);
                let round = r.u32("community model round")?;
                Ok(Message::CommunityModel {
                    round,
                    model: payload[4..].to_vec(),
                })
            }
            TYPE_LOCAL_MODEL => {
                let mut r = Reader::new(payload);
                let round = r.u32("local model round")?;
                let learner_id = r.u32("local model learner id")?;
                Ok(Message::LocalModel {
                    round,
                    learner_id,
                    model: payload[8..].to_vec(),
                })
            }
            TYPE_METRICS_ACK => {
                if !payload.is_empty() {
                    return Err(WireError::Malformed {
                        context: "metrics ack",
                        detail: format!("{} payload bytes", payload.len()),
                    });
                }
                Ok(Message::MetricsAck)
            }
            TYPE_SHUTDOWN => {
                if !payload.is_empty() {
                    return Err(WireError::Malformed {
                        context: "shutdown",
                        detail: format!("{} payload bytes", payload.len()),
                    });
                }
                Ok(Message::Shutdown)
            }
            other => Err(WireError::UnknownMessageType(other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{frame_decode, frame_encode};
    use std::io::Cursor;

    #[test]
    fn every_variant_round_trips() {
        let messages = vec![
            Message::Register {
                learner_id: 7,
                contribution: 1045,
            },
            Message::CommunityModel {
                round: 3,
                model: vec![1, 2, 3, 4, 5],
            },
            Message::LocalModel {
                round: 3,
                learner_id: 7,
                model: vec![9; 100],
            },
            Message::MetricsAck,
            Message::Shutdown,
        ];
        for msg in messages {
            let bytes = frame_encode(&msg);
            let back = frame_decode(&mut Cursor::new(bytes)).unwrap();
            assert_eq!(back, msg);
        }
    }
}
