//! Frame format: `magic "FHE1" | type u8 | payload_len u64 LE | payload |
//! crc32(payload) u32 LE`. The decoder consumes exactly one frame, never
//! reads past the declared payload, and reports every malformation as a
//! structured error — corrupt frames leave the stream aligned on the next
//! frame boundary.

use std::io::{ErrorKind, Read};

use crate::message::Message;
use crate::{Result, WireError};

pub const MAGIC: [u8; 4] = *b"FHE1";
pub const HEADER_LEN: usize = 4 + 1 + 8;
pub const TRAILER_LEN: usize = 4;

/// Default payload cap: 2 GiB.
pub const MAX_PAYLOAD_DEFAULT: u64 = 2 * 1024 * 1024 * 1024;

/// Payloads are read in bounded steps so a lying length prefix cannot force
/// a huge up-front allocation.
const READ_CHUNK: usize = 64 * 1024;

/// Encodes one message as a complete frame.
pub fn frame_encode(msg: &Message) -> Vec<u8> {
    let (msg_type, payload) = msg.encode_payload();
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + TRAILER_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(msg_type);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out
}

/// Reads exactly `buf.len()` bytes, mapping EOF to a truncation error.
/// `at_start` distinguishes a clean close (no bytes of the frame seen yet)
/// from a mid-frame cut.
fn read_exact_or(
    stream: &mut impl Read,
    buf: &mut [u8],
    context: &'static str,
    at_start: bool,
) -> Result<()> {
    let mut filled = 0usize;
    while filled < buf.len() {
        match stream.read(&mut buf[filled..]) {
            Ok(0) => {
                return if at_start && filled == 0 {
                    Err(WireError::Disconnected)
                } else {
                    Err(WireError::Truncated {
                        needed: buf.len() - filled,
                        context,
                    })
                };
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => continue,
            Err(e) => return Err(WireError::Io(e)),
        }
    }
    Ok(())
}

/// Decodes one frame from the stream with the default payload cap.
pub fn frame_decode(stream: &mut impl Read) -> Result<Message> {
    frame_decode_with_cap(stream, MAX_PAYLOAD_DEFAULT)
}

/// Decodes one frame, rejecting payloads longer than `max_payload` before
/// any payload byte is read.
pub fn frame_decode_with_cap(stream: &mut impl Read, max_payload: u64) -> Result<Message> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or(stream, &mut header, "frame header", true)?;

    let magic: [u8; 4] = header[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let msg_type = header[4];
    let payload_len = u64::from_le_bytes(header[5..13].try_into().unwrap());
    if payload_len > max_payload {
        return Err(WireError::OversizePayload {
            got: payload_len,
            cap: max_payload,
        });
    }

    // Incremental fill: allocation grows only as bytes actually arrive.
    let payload_len = payload_len as usize;
    let mut payload = Vec::new();
    while payload.len() < payload_len {
        let step = READ_CHUNK.min(payload_len - payload.len());
        let start = payload.len();
        payload.resize(start + step, 0);
        read_exact_or(stream, &mut payload[start..], "frame payload", false)?;
    }

    let mut crc_bytes = [0u8; TRAILER_LEN];
    read_exact_or(stream, &mut crc_bytes, "frame checksum", false)?;
    let stored = u32::from_le_bytes(crc_bytes);
    let computed = crc32fast::hash(&payload);
    if stored != computed {
        return Err(WireError::CrcMismatch { stored, computed });
    }

    Message::decode_payload(msg_type, &payload)
}
