use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use ktedge_core::data::Sample;
use ktedge_core::kt::{run_online, ClassMapping, KtError, KtOptions, RunResult};
use ktedge_core::models::{Adam, Model};

use crate::message::{Handshake, Message, PROTOCOL_VERSION};
use crate::LinkError;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// A handshaken connection to a teacher endpoint.
pub struct TeacherConnection<S> {
    stream: S,
    peer: Handshake,
}

/// Presents the student's mapping and waits for the teacher's acknowledgement.
pub fn handshake<S: Read + Write>(mut stream: S, mapping: &ClassMapping) -> Result<TeacherConnection<S>, LinkError> {
    let mine = Handshake {
        version: PROTOCOL_VERSION,
        digest: mapping.digest(),
        teacher_classes: mapping.teacher_classes().to_vec(),
    };
    Message::Hello(mine.clone()).write(&mut stream)?;
    match Message::read(&mut stream)? {
        Some(Message::HelloAck(peer)) => {
            if peer.version != mine.version || peer.digest != mine.digest {
                return Err(LinkError::Protocol("teacher acknowledged with a different version or digest".into()));
            }
            Ok(TeacherConnection { stream, peer })
        }
        Some(Message::Error { code, message }) => Err(LinkError::Refused { code, message }),
        Some(other) => Err(LinkError::Protocol(format!("expected HELLO_ACK, got {other:?}"))),
        None => Err(LinkError::Closed),
    }
}

/// TCP connect with the given read/write timeout, then handshake.
pub fn connect(
    addr: impl ToSocketAddrs,
    mapping: &ClassMapping,
    timeout: Duration,
) -> Result<TeacherConnection<TcpStream>, LinkError> {
    let addr = addr
        .to_socket_addrs()?
        .next()
        .ok_or_else(|| LinkError::Protocol("address resolved to nothing".into()))?;
    let stream = TcpStream::connect_timeout(&addr, timeout).map_err(LinkError::from_io)?;
    stream.set_read_timeout(Some(timeout))?;
    stream.set_write_timeout(Some(timeout))?;
    stream.set_nodelay(true)?;
    handshake(stream, mapping)
}

impl<S: Read + Write> TeacherConnection<S> {
    pub fn peer(&self) -> &Handshake {
        &self.peer
    }

    /// Teacher class for stream position `step`.
    pub fn request_label(&mut self, step: u64) -> Result<usize, LinkError> {
        Message::LabelReq { step }.write(&mut self.stream)?;
        match Message::read(&mut self.stream)? {
            Some(Message::LabelResp { step: s, class }) if s == step => Ok(class as usize),
            Some(Message::LabelResp { step: s, .. }) => {
                Err(LinkError::Protocol(format!("asked for step {step}, got step {s}")))
            }
            Some(Message::Error { code, message }) => Err(LinkError::Remote { code, message }),
            Some(other) => Err(LinkError::Protocol(format!("expected LABEL_RESP, got {other:?}"))),
            None => Err(LinkError::Closed),
        }
    }

    pub fn close(mut self) -> Result<(), LinkError> {
        Message::Bye.write(&mut self.stream)
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

/// The online loop with each teacher label fetched from the connection.
/// Any transport or remote failure ends the run with a partial result.
pub fn run_student_client<S: Read + Write>(
    student: Model,
    student_samples: &[Sample],
    truth: Option<&[usize]>,
    mapping: &ClassMapping,
    connection: &mut TeacherConnection<S>,
    optimizer: &mut Adam,
    options: &KtOptions,
) -> Result<RunResult, LinkError> {
    let result = run_online(student, student_samples, truth, mapping, optimizer, options, |i| {
        connection.request_label(i as u64).map_err(|e| match e {
            LinkError::Kt(k) => k,
            other => KtError::Transport(other.to_string()),
        })
    })?;
    Ok(result)
}
