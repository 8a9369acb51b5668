use crate::frame::{Frame, FrameType};
use crate::LinkError;

pub const PROTOCOL_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCode {
    VersionMismatch,
    DigestMismatch,
    StepOutOfRange,
    UnexpectedFrame,
    TeacherFailure,
    Malformed,
    Other(u16),
}

impl ErrorCode {
    pub fn to_u16(self) -> u16 {
        match self {
            ErrorCode::VersionMismatch => 1,
            ErrorCode::DigestMismatch => 2,
            ErrorCode::StepOutOfRange => 3,
            ErrorCode::UnexpectedFrame => 4,
            ErrorCode::TeacherFailure => 5,
            ErrorCode::Malformed => 6,
            ErrorCode::Other(c) => c,
        }
    }

    pub fn from_u16(c: u16) -> Self {
        match c {
            1 => ErrorCode::VersionMismatch,
            2 => ErrorCode::DigestMismatch,
            3 => ErrorCode::StepOutOfRange,
            4 => ErrorCode::UnexpectedFrame,
            5 => ErrorCode::TeacherFailure,
            6 => ErrorCode::Malformed,
            other => ErrorCode::Other(other),
        }
    }
}

/// What each side presents before label traffic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Handshake {
    pub version: u16,
    pub digest: u64,
    pub teacher_classes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Hello(Handshake),
    HelloAck(Handshake),
    LabelReq { step: u64 },
    LabelResp { step: u64, class: u16 },
    Bye,
    Error { code: ErrorCode, message: String },
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LinkError> {
        if self.0.len() < n {
            return Err(LinkError::Protocol("payload too short".into()));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u16(&mut self) -> Result<u16, LinkError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LinkError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn text(&mut self, n: usize) -> Result<String, LinkError> {
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| LinkError::Protocol("text is not UTF-8".into()))
    }

    fn finish(self) -> Result<(), LinkError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(LinkError::Protocol(format!("{} unexpected trailing bytes", self.0.len())))
        }
    }
}

fn encode_handshake(h: &Handshake) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&h.version.to_be_bytes());
    out.extend_from_slice(&h.digest.to_be_bytes());
    out.extend_from_slice(&(h.teacher_classes.len() as u16).to_be_bytes());
    for c in &h.teacher_classes {
        out.extend_from_slice(&(c.len() as u16).to_be_bytes());
        out.extend_from_slice(c.as_bytes());
    }
    out
}

fn decode_handshake(c: &mut Cursor) -> Result<Handshake, LinkError> {
    let version = c.u16()?;
    let digest = c.u64()?;
    let n = c.u16()? as usize;
    let mut teacher_classes = Vec::with_capacity(n);
    for _ in 0..n {
        let len = c.u16()? as usize;
        teacher_classes.push(c.text(len)?);
    }
    Ok(Handshake { version, digest, teacher_classes })
}

impl Message {
    pub fn to_frame(&self) -> (FrameType, Vec<u8>) {
        match self {
            Message::Hello(h) => (FrameType::Hello, encode_handshake(h)),
            Message::HelloAck(h) => (FrameType::HelloAck, encode_handshake(h)),
            Message::LabelReq { step } => (FrameType::LabelReq, step.to_be_bytes().to_vec()),
            Message::LabelResp { step, class } => {
                let mut p = step.to_be_bytes().to_vec();
                p.extend_from_slice(&class.to_be_bytes());
                (FrameType::LabelResp, p)
            }
            Message::Bye => (FrameType::Bye, Vec::new()),
            Message::Error { code, message } => {
                let mut p = code.to_u16().to_be_bytes().to_vec();
                p.extend_from_slice(message.as_bytes());
                (FrameType::Error, p)
            }
        }
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, LinkError> {
        let mut c = Cursor(&frame.payload);
        let msg = match frame.kind {
            FrameType::Hello => Message::Hello(decode_handshake(&mut c)?),
            FrameType::HelloAck => Message::HelloAck(decode_handshake(&mut c)?),
            FrameType::LabelReq => Message::LabelReq { step: c.u64()? },
            FrameType::LabelResp => Message::LabelResp { step: c.u64()?, class: c.u16()? },
            FrameType::Bye => Message::Bye,
            FrameType::Error => {
                let code = ErrorCode::from_u16(c.u16()?);
                let rest = c.0.len();
                Message::Error { code, message: c.text(rest)? }
            }
        };
        c.finish()?;
        Ok(msg)
    }

    pub fn write(&self, w: &mut impl std::io::Write) -> Result<(), LinkError> {
        let (kind, payload) = self.to_frame();
        crate::frame::write_frame(w, kind, &payload)
    }

    /// `Ok(None)` on a clean close.
    pub fn read(r: &mut impl std::io::Read) -> Result<Option<Self>, LinkError> {
        match crate::frame::read_frame(r)? {
            None => Ok(None),
            Some(f) => Message::from_frame(&f).map(Some),
        }
    }
}
