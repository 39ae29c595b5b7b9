//! Reliable in-order frame transport over any byte stream.

use std::collections::VecDeque;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc;

use thiserror::Error;

use super::frame::{write_frame, Frame, FrameError, FrameType, HEADER_LEN, MAX_PAYLOAD};

/// Chunk size used when splitting bulk payloads across frames.
pub const CHUNK_BYTES: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("expected {expected:?} frame, got {got:?}")]
    Unexpected { expected: FrameType, got: FrameType },
    #[error("peer aborted: {0}")]
    PeerAborted(String),
    #[error("expected {expected} bytes of {ty:?} payload, got {got}")]
    Length { ty: FrameType, expected: usize, got: usize },
}

impl From<io::Error> for TransportError {
    fn from(e: io::Error) -> Self {
        TransportError::Frame(FrameError::Io(e))
    }
}

/// Byte counters for one direction, split by frame type.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrafficStats {
    /// Total bytes including frame headers.
    pub bytes: u64,
    pub frames: u64,
    /// Payload bytes indexed by frame type tag.
    pub payload_by_type: [u64; 10],
}

impl TrafficStats {
    fn record(&mut self, ty: FrameType, payload: usize) {
        self.bytes += (HEADER_LEN + payload) as u64;
        self.frames += 1;
        self.payload_by_type[ty as usize] += payload as u64;
    }

    pub fn payload(&self, ty: FrameType) -> u64 {
        self.payload_by_type[ty as usize]
    }
}

/// One end of a connection to a peer.
pub struct Channel {
    reader: Box<dyn Read + Send>,
    writer: Box<dyn Write + Send>,
    sent: TrafficStats,
    received: TrafficStats,
}

impl std::fmt::Debug for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Channel").field("sent", &self.sent).field("received", &self.received).finish()
    }
}

impl Channel {
    pub fn new<R, W>(reader: R, writer: W) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        Channel {
            reader: Box::new(BufReader::with_capacity(1 << 16, reader)),
            writer: Box::new(BufWriter::with_capacity(1 << 16, writer)),
            sent: TrafficStats::default(),
            received: TrafficStats::default(),
        }
    }

    pub fn tcp(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        Ok(Channel::new(reader, stream))
    }

    pub fn sent(&self) -> &TrafficStats {
        &self.sent
    }

    pub fn received(&self) -> &TrafficStats {
        &self.received
    }

    /// Sends one frame and flushes.
    pub fn send(&mut self, ty: FrameType, payload: &[u8]) -> Result<(), TransportError> {
        write_frame(&mut self.writer, ty, payload)?;
        self.writer.flush()?;
        self.sent.record(ty, payload.len());
        Ok(())
    }

    /// Sends `bytes` as one or more frames of type `ty`, each at most
    /// [`CHUNK_BYTES`] long. An empty payload still produces one frame.
    pub fn send_chunked(&mut self, ty: FrameType, bytes: &[u8]) -> Result<(), TransportError> {
        if bytes.is_empty() {
            return self.send(ty, bytes);
        }
        for chunk in bytes.chunks(CHUNK_BYTES.min(MAX_PAYLOAD)) {
            write_frame(&mut self.writer, ty, chunk)?;
            self.sent.record(ty, chunk.len());
        }
        self.writer.flush()?;
        Ok(())
    }

    pub fn recv(&mut self) -> Result<Frame, TransportError> {
        let frame = Frame::read_from(&mut self.reader)?;
        self.received.record(frame.ty, frame.payload.len());
        Ok(frame)
    }

    /// Receives one frame of type `ty`. An ABORT frame surfaces as
    /// [`TransportError::PeerAborted`].
    pub fn expect(&mut self, ty: FrameType) -> Result<Vec<u8>, TransportError> {
        let frame = self.recv()?;
        if frame.ty == FrameType::Abort && ty != FrameType::Abort {
            return Err(TransportError::PeerAborted(String::from_utf8_lossy(&frame.payload).into_owned()));
        }
        if frame.ty != ty {
            return Err(TransportError::Unexpected { expected: ty, got: frame.ty });
        }
        Ok(frame.payload)
    }

    /// Receives exactly `len` bytes spread over frames of type `ty`.
    pub fn expect_chunked(&mut self, ty: FrameType, len: usize) -> Result<Vec<u8>, TransportError> {
        let mut out = self.expect(ty)?;
        while out.len() < len {
            let more = self.expect(ty)?;
            if more.is_empty() {
                break;
            }
            out.extend_from_slice(&more);
        }
        if out.len() != len {
            return Err(TransportError::Length { ty, expected: len, got: out.len() });
        }
        Ok(out)
    }

    /// Receives exactly `len` bytes in a single frame of type `ty`.
    pub fn expect_len(&mut self, ty: FrameType, len: usize) -> Result<Vec<u8>, TransportError> {
        let payload = self.expect(ty)?;
        if payload.len() != len {
            return Err(TransportError::Length { ty, expected: len, got: payload.len() });
        }
        Ok(payload)
    }

    /// Best-effort ABORT notification; errors are ignored since the session
    /// is already failing.
    pub fn abort(&mut self, reason: &str) {
        let _ = self.send(FrameType::Abort, reason.as_bytes());
    }
}

/// Writer half of an in-memory byte pipe.
pub struct PipeWriter(mpsc::Sender<Vec<u8>>);

/// Reader half of an in-memory byte pipe.
pub struct PipeReader {
    rx: mpsc::Receiver<Vec<u8>>,
    buf: VecDeque<u8>,
}

impl Write for PipeWriter {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        self.0
            .send(data.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "pipe reader dropped"))?;
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl Read for PipeReader {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        if self.buf.is_empty() {
            match self.rx.recv() {
                Ok(chunk) => self.buf.extend(chunk),
                Err(_) => return Ok(0),
            }
        }
        let n = out.len().min(self.buf.len());
        for (dst, src) in out.iter_mut().zip(self.buf.drain(..n)) {
            *dst = src;
        }
        Ok(n)
    }
}

pub fn pipe() -> (PipeWriter, PipeReader) {
    let (tx, rx) = mpsc::channel();
    (PipeWriter(tx), PipeReader { rx, buf: VecDeque::new() })
}

/// Two connected in-process channel ends.
pub fn mem_pair() -> (Channel, Channel) {
    let (w1, r1) = pipe();
    let (w2, r2) = pipe();
    (Channel::new(r2, w1), Channel::new(r1, w2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mem_pair_carries_frames_and_counts_bytes() {
        let (mut a, mut b) = mem_pair();
        a.send(FrameType::Hello, b"hi").unwrap();
        a.send_chunked(FrameType::GcChunk, &vec![7u8; CHUNK_BYTES + 10]).unwrap();
        assert_eq!(b.expect(FrameType::Hello).unwrap(), b"hi");
        let bulk = b.expect_chunked(FrameType::GcChunk, CHUNK_BYTES + 10).unwrap();
        assert_eq!(bulk.len(), CHUNK_BYTES + 10);
        assert_eq!(a.sent().payload(FrameType::GcChunk), (CHUNK_BYTES + 10) as u64);
        assert_eq!(a.sent().bytes, b.received().bytes);
        assert_eq!(a.sent().frames, 3);
    }

    #[test]
    fn abort_and_unexpected_frames() {
        let (mut a, mut b) = mem_pair();
        a.abort("config mismatch");
        assert!(matches!(b.expect(FrameType::Shares), Err(TransportError::PeerAborted(m)) if m == "config mismatch"));
        a.send(FrameType::Result, &[]).unwrap();
        assert!(matches!(
            b.expect(FrameType::Shares),
            Err(TransportError::Unexpected { expected: FrameType::Shares, got: FrameType::Result })
        ));
    }

    #[test]
    fn disconnect_is_a_short_read() {
        let (a, mut b) = mem_pair();
        drop(a);
        assert!(matches!(b.recv(), Err(TransportError::Frame(FrameError::ShortRead))));
    }

    #[test]
    fn length_checks() {
        let (mut a, mut b) = mem_pair();
        a.send(FrameType::BaseOtMsg, &[1, 2, 3]).unwrap();
        assert!(matches!(b.expect_len(FrameType::BaseOtMsg, 4), Err(TransportError::Length { .. })));
    }
}
