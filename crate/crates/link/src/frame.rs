use std::io::{Read, Write};

use crate::LinkError;

pub const MAX_PAYLOAD: usize = 1 << 24;
const HEADER: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Hello = 0x01,
    HelloAck = 0x02,
    LabelReq = 0x10,
    LabelResp = 0x11,
    Bye = 0x0F,
    Error = 0x7F,
}

impl TryFrom<u8> for FrameType {
    type Error = LinkError;

    fn try_from(b: u8) -> Result<Self, LinkError> {
        Ok(match b {
            0x01 => FrameType::Hello,
            0x02 => FrameType::HelloAck,
            0x10 => FrameType::LabelReq,
            0x11 => FrameType::LabelResp,
            0x0F => FrameType::Bye,
            0x7F => FrameType::Error,
            other => return Err(LinkError::UnknownType(other)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub kind: FrameType,
    pub payload: Vec<u8>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum Decoded {
    /// A whole frame and the number of bytes it occupied.
    Frame(Frame, usize),
    /// At least this many more bytes are needed.
    NeedMore(usize),
}

pub fn encode_frame(kind: FrameType, payload: &[u8]) -> Result<Vec<u8>, LinkError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(LinkError::Oversize(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.push(kind as u8);
    out.extend_from_slice(payload);
    Ok(out)
}

fn parse_header(header: &[u8]) -> Result<(usize, FrameType), LinkError> {
    let len = u32::from_be_bytes(header[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(LinkError::Oversize(len));
    }
    Ok((len, FrameType::try_from(header[4])?))
}

pub fn decode_frame(bytes: &[u8]) -> Result<Decoded, LinkError> {
    if bytes.len() < HEADER {
        return Ok(Decoded::NeedMore(HEADER - bytes.len()));
    }
    let (len, kind) = parse_header(&bytes[..HEADER])?;
    let end = HEADER + len;
    if bytes.len() < end {
        return Ok(Decoded::NeedMore(end - bytes.len()));
    }
    Ok(Decoded::Frame(Frame { kind, payload: bytes[HEADER..end].to_vec() }, end))
}

/// Reads one frame. `Ok(None)` is a clean close between frames. A frame of
/// unknown type is consumed whole before the error is returned, so the
/// stream stays aligned.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>, LinkError> {
    let mut header = [0u8; HEADER];
    let mut got = 0;
    while got < HEADER {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(LinkError::Closed),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(LinkError::from_io(e)),
        }
    }
    let len = u32::from_be_bytes(header[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(LinkError::Oversize(len));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(LinkError::from_io)?;
    let kind = FrameType::try_from(header[4])?;
    Ok(Some(Frame { kind, payload }))
}

pub fn write_frame(w: &mut impl Write, kind: FrameType, payload: &[u8]) -> Result<(), LinkError> {
    w.write_all(&encode_frame(kind, payload)?).map_err(LinkError::from_io)?;
    w.flush().map_err(LinkError::from_io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes() {
        assert_eq!(encode_frame(FrameType::Bye, &[]).unwrap().len(), 5);
        assert_eq!(encode_frame(FrameType::LabelReq, &[7]).unwrap().len(), 6);
        assert!(matches!(encode_frame(FrameType::Error, &vec![0; MAX_PAYLOAD + 1]), Err(LinkError::Oversize(_))));
        assert!(encode_frame(FrameType::Error, &vec![0; MAX_PAYLOAD]).is_ok());
    }

    #[test]
    fn empty_round_trip() {
        let bytes = encode_frame(FrameType::Bye, &[]).unwrap();
        assert_eq!(decode_frame(&bytes).unwrap(), Decoded::Frame(Frame { kind: FrameType::Bye, payload: vec![] }, 5));
    }

    #[test]
    fn truncation_and_bad_headers() {
        let bytes = encode_frame(FrameType::LabelReq, &[1, 2, 3]).unwrap();
        assert_eq!(decode_frame(&bytes[..2]).unwrap(), Decoded::NeedMore(3));
        assert_eq!(decode_frame(&bytes[..6]).unwrap(), Decoded::NeedMore(2));
        let mut unknown = bytes.clone();
        unknown[4] = 0x55;
        assert!(matches!(decode_frame(&unknown), Err(LinkError::UnknownType(0x55))));
        let mut huge = bytes;
        huge[..4].copy_from_slice(&((MAX_PAYLOAD + 1) as u32).to_be_bytes());
        assert!(matches!(decode_frame(&huge), Err(LinkError::Oversize(_))));
    }

    #[test]
    fn reader_consumes_unknown_frames_whole() {
        let mut wire = encode_frame(FrameType::Bye, &[9, 9]).unwrap();
        wire[4] = 0x42;
        wire.extend(encode_frame(FrameType::LabelReq, &[1]).unwrap());
        let mut r = wire.as_slice();
        assert!(matches!(read_frame(&mut r), Err(LinkError::UnknownType(0x42))));
        assert_eq!(read_frame(&mut r).unwrap().unwrap().kind, FrameType::LabelReq);
        assert!(read_frame(&mut r).unwrap().is_none());
        let mut cut: &[u8] = &[0, 0];
        assert!(matches!(read_frame(&mut cut), Err(LinkError::Closed)));
    }

    proptest! {
        #[test]
        fn random_payloads_round_trip(payload in proptest::collection::vec(any::<u8>(), 0..4096), t in 0usize..6) {
            let kinds = [FrameType::Hello, FrameType::HelloAck, FrameType::LabelReq, FrameType::LabelResp, FrameType::Bye, FrameType::Error];
            let bytes = encode_frame(kinds[t], &payload).unwrap();
            prop_assert_eq!(bytes.len(), 5 + payload.len());
            match decode_frame(&bytes).unwrap() {
                Decoded::Frame(f, used) => {
                    prop_assert_eq!(used, bytes.len());
                    prop_assert_eq!(f.kind, kinds[t]);
                    prop_assert_eq!(f.payload, payload.clone());
                }
                Decoded::NeedMore(_) => prop_assert!(false),
            }
            let mut r = bytes.as_slice();
            prop_assert_eq!(read_frame(&mut r).unwrap().unwrap().payload, payload);
        }
    }
}
