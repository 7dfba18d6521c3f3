//! Binary wire protocol between the federation controller and learners.
//!
//! Layers:
//!
//! - [`codec`]: byte encodings for ciphertexts, public keys, model layouts,
//!   and packed or plain models. All encoders are bit-exact inverses of the
//!   matching decoders. Secret keys deliberately have no encoding.
//! - [`frame`]: length-prefixed frames — magic `FHE1`, a message-type byte,
//!   a little-endian payload length, the payload, and a CRC32 of the payload.
//! - [`message`]: the protocol message set (register, community model, local
//!   model, ack, shutdown).
//! - [`transport`]: a framed channel over any ordered byte stream, with TCP
//!   and in-process pipe implementations that produce identical bytes.

pub mod codec;
pub mod frame;
pub mod message;
pub mod transport;

pub use frame::{frame_decode, frame_encode, MAX_PAYLOAD_DEFAULT};
pub use message::Message;
pub use transport::{duplex_pipe, Channel, FramedChannel, PipeEnd};

/// Errors produced while encoding, decoding, or transporting messages.
#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("peer closed the connection")]
    Disconnected,

    #[error("bad frame magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("payload CRC mismatch: stored {stored:08x}, computed {computed:08x}")]
    CrcMismatch { stored: u32, computed: u32 },

    #[error("unknown message type {0}")]
    UnknownMessageType(u8),

    #[error("payload length {got} exceeds the cap of {cap} bytes")]
    OversizePayload { got: u64, cap: u64 },

    #[error("truncated input: needed {needed} more bytes for {context}")]
    Truncated { needed: usize, context: &'static str },

    #[error("malformed {context}: {detail}")]
    Malformed {
        context: &'static str,
        detail: String,
    },

    #[error("serialized data does not fit the supplied parameters: {0}")]
    ParamsMismatch(String),

    #[error(transparent)]
    Core(#[from] fedhe_core::Error),
}

pub type Result<T> = std::result::Result<T, WireError>;
