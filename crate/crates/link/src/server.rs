use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use ktedge_core::data::Sample;
use ktedge_core::kt::{ClassMapping, KtError, Teacher};

use crate::message::{ErrorCode, Handshake, Message, PROTOCOL_VERSION};
use crate::LinkError;

/// Serves teacher labels for a fixed sequence of teacher-side samples.
pub struct TeacherServer {
    teacher: Arc<dyn Teacher + Send + Sync>,
    samples: Arc<Vec<Sample>>,
    mapping: ClassMapping,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ServeSummary {
    pub labels_served: u64,
    pub errors_sent: u64,
    pub handshake_ok: bool,
    pub said_bye: bool,
}

impl TeacherServer {
    pub fn new(
        teacher: Arc<dyn Teacher + Send + Sync>,
        samples: Arc<Vec<Sample>>,
        mapping: ClassMapping,
    ) -> Result<Self, LinkError> {
        if teacher.num_classes() != mapping.len() {
            return Err(KtError::ClassCountMismatch { teacher: teacher.num_classes(), student: mapping.len() }.into());
        }
        Ok(Self { teacher, samples, mapping })
    }

    pub fn handshake(&self) -> Handshake {
        Handshake {
            version: PROTOCOL_VERSION,
            digest: self.mapping.digest(),
            teacher_classes: self.mapping.teacher_classes().to_vec(),
        }
    }

    fn send_error<S: Write>(s: &mut S, sum: &mut ServeSummary, code: ErrorCode, msg: String) -> Result<(), LinkError> {
        sum.errors_sent += 1;
        Message::Error { code, message: msg }.write(s)
    }

    /// Answers frames on one connection until the peer says BYE or closes.
    pub fn serve_connection<S: Read + Write>(&self, stream: &mut S) -> Result<ServeSummary, LinkError> {
        let mut sum = ServeSummary::default();
        loop {
            let msg = match Message::read(stream) {
                Ok(None) => return Ok(sum),
                Ok(Some(m)) => m,
                Err(e @ (LinkError::UnknownType(_) | LinkError::Protocol(_))) => {
                    Self::send_error(stream, &mut sum, ErrorCode::Malformed, e.to_string())?;
                    continue;
                }
                Err(e @ LinkError::Oversize(_)) => {
                    Self::send_error(stream, &mut sum, ErrorCode::Malformed, e.to_string())?;
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            match msg {
                Message::Hello(h) => {
                    let mine = self.handshake();
                    if h.version != mine.version {
                        let text = format!("protocol version {} unsupported, expected {}", h.version, mine.version);
                        Self::send_error(stream, &mut sum, ErrorCode::VersionMismatch, text)?;
                        return Ok(sum);
                    }
                    if h.digest != mine.digest {
                        let text = format!("mapping digest {:016x} differs from {:016x}", h.digest, mine.digest);
                        Self::send_error(stream, &mut sum, ErrorCode::DigestMismatch, text)?;
                        return Ok(sum);
                    }
                    sum.handshake_ok = true;
                    Message::HelloAck(mine).write(stream)?;
                }
                Message::LabelReq { .. } if !sum.handshake_ok => {
                    Self::send_error(stream, &mut sum, ErrorCode::UnexpectedFrame, "handshake first".into())?;
                }
                Message::LabelReq { step } => {
                    let Some(sample) = usize::try_from(step).ok().and_then(|i| self.samples.get(i)) else {
                        let text = format!("step {step} outside a stream of {}", self.samples.len());
                        Self::send_error(stream, &mut sum, ErrorCode::StepOutOfRange, text)?;
                        continue;
                    };
                    match self.teacher.predict(sample) {
                        Ok(class) => {
                            sum.labels_served += 1;
                            Message::LabelResp { step, class: class as u16 }.write(stream)?;
                        }
                        Err(e) => Self::send_error(stream, &mut sum, ErrorCode::TeacherFailure, e.to_string())?,
                    }
                }
                Message::Bye => {
                    sum.said_bye = true;
                    return Ok(sum);
                }
                other => {
                    let text = format!("unexpected {:?} from a student", other.to_frame().0);
                    Self::send_error(stream, &mut sum, ErrorCode::UnexpectedFrame, text)?;
                }
            }
        }
    }

    /// Accepts connections, one thread each. Stops after `max_connections` if given.
    pub fn serve(self: Arc<Self>, listener: TcpListener, max_connections: Option<usize>) -> Result<(), LinkError> {
        let mut workers = Vec::new();
        for (n, conn) in listener.incoming().enumerate() {
            let mut conn = conn?;
            conn.set_nodelay(true)?;
            let server = Arc::clone(&self);
            workers.push(thread::spawn(move || server.serve_connection(&mut conn)));
            if max_connections.is_some_and(|m| n + 1 >= m) {
                break;
            }
        }
        for w in workers {
            let _ = w.join();
        }
        Ok(())
    }

    /// Binds `addr` and serves in a background thread; returns the bound address.
    pub fn spawn(
        self: Arc<Self>,
        addr: &str,
        max_connections: Option<usize>,
    ) -> Result<(SocketAddr, JoinHandle<Result<(), LinkError>>), LinkError> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        Ok((local, thread::spawn(move || self.serve(listener, max_connections))))
    }
}
