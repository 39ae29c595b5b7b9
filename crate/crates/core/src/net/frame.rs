//! Length-prefixed frames: 4-byte big-endian payload length, 1-byte type,
//! payload.

use std::io::{self, Read, Write};

use thiserror::Error;

/// Largest payload a single frame may carry.
pub const MAX_PAYLOAD: usize = 1 << 24;
pub const HEADER_LEN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Hello = 1,
    Shares = 2,
    GcChunk = 3,
    GarblerLabels = 4,
    BaseOtMsg = 5,
    ExtOtMsg = 6,
    DecodeTable = 7,
    Result = 8,
    Abort = 9,
}

impl FrameType {
    pub const ALL: [FrameType; 9] = [
        FrameType::Hello,
        FrameType::Shares,
        FrameType::GcChunk,
        FrameType::GarblerLabels,
        FrameType::BaseOtMsg,
        FrameType::ExtOtMsg,
        FrameType::DecodeTable,
        FrameType::Result,
        FrameType::Abort,
    ];

    pub fn from_u8(tag: u8) -> Option<FrameType> {
        Self::ALL.get((tag as usize).wrapping_sub(1)).copied()
    }
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("stream ended inside a frame")]
    ShortRead,
    #[error("frame payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    Oversize(usize),
    #[error("unknown frame type {0}")]
    UnknownType(u8),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub ty: FrameType,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(ty: FrameType, payload: Vec<u8>) -> Self {
        Frame { ty, payload }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.write_to(&mut out)?;
        Ok(out)
    }

    /// Decodes one frame from the front of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), FrameError> {
        let mut cursor = bytes;
        let frame = Self::read_from(&mut cursor)?;
        Ok((frame, bytes.len() - cursor.len()))
    }

    pub fn write_to<W: Write + ?Sized>(&self, w: &mut W) -> Result<(), FrameError> {
        write_frame(w, self.ty, &self.payload)
    }

    pub fn read_from<R: Read + ?Sized>(r: &mut R) -> Result<Frame, FrameError> {
        let mut header = [0u8; HEADER_LEN];
        read_full(r, &mut header)?;
        let len = u32::from_be_bytes(header[..4].try_into().expect("4 bytes")) as usize;
        if len > MAX_PAYLOAD {
            return Err(FrameError::Oversize(len));
        }
        let ty = FrameType::from_u8(header[4]).ok_or(FrameError::UnknownType(header[4]))?;
        let mut payload = vec![0u8; len];
        read_full(r, &mut payload)?;
        Ok(Frame { ty, payload })
    }
}

pub(crate) fn write_frame<W: Write + ?Sized>(w: &mut W, ty: FrameType, payload: &[u8]) -> Result<(), FrameError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(FrameError::Oversize(payload.len()));
    }
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&(payload.len() as u32).to_be_bytes());
    header[4] = ty as u8;
    w.write_all(&header)?;
    w.write_all(payload)?;
    Ok(())
}

fn read_full<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> Result<(), FrameError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::ShortRead,
        _ => FrameError::Io(e),
    })
}
