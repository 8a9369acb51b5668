//! Two-process deployment: a teacher endpoint answering label requests over a
//! length-prefixed frame protocol, and a student client that trains against it.
//!
//! ```text
//! frame   = length: u32 BE | type: u8 | payload (length bytes, at most 2^24)
//! HELLO      0x01  version u16 | digest u64 | n u16 | n x (len u16 | UTF-8)
//! HELLO_ACK  0x02  same layout as HELLO
//! LABEL_REQ  0x10  step u64
//! LABEL_RESP 0x11  step u64 | class u16
//! BYE        0x0F  empty
//! ERROR      0x7F  code u16 | UTF-8 message
//! ```

mod client;
mod frame;
mod message;
mod server;

pub use client::{connect, handshake, run_student_client, TeacherConnection, DEFAULT_TIMEOUT};
pub use frame::{decode_frame, encode_frame, read_frame, write_frame, Decoded, Frame, FrameType, MAX_PAYLOAD};
pub use message::{ErrorCode, Handshake, Message, PROTOCOL_VERSION};
pub use server::{ServeSummary, TeacherServer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("timed out waiting for the peer")]
    Timeout,
    #[error("connection closed by peer")]
    Closed,
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("payload of {0} bytes exceeds the frame limit")]
    Oversize(usize),
    #[error("unknown frame type {0:#04x}")]
    UnknownType(u8),
    #[error("peer refused the handshake ({code:?}): {message}")]
    Refused { code: ErrorCode, message: String },
    #[error("peer reported an error ({code:?}): {message}")]
    Remote { code: ErrorCode, message: String },
    #[error(transparent)]
    Kt(#[from] ktedge_core::kt::KtError),
}

impl LinkError {
    pub(crate) fn from_io(e: std::io::Error) -> Self {
        match e.kind() {
            std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => LinkError::Timeout,
            std::io::ErrorKind::UnexpectedEof
            | std::io::ErrorKind::ConnectionReset
            | std::io::ErrorKind::ConnectionAborted
            | std::io::ErrorKind::BrokenPipe => LinkError::Closed,
            _ => LinkError::Io(e),
        }
    }
}
