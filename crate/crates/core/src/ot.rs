//! 1-out-of-2 oblivious transfer of κ-bit messages.
//!
//! Three backends share one calling convention:
//! * a dealer that hands the receiver both messages (no security; tests only),
//! * a Diffie–Hellman base OT over the Ristretto group,
//! * IKNP extension, which turns κ base OTs (roles reversed) into any number
//!   of OTs using only hashing and a PRG.
//!
//! The protocols are semi-honest: no consistency checks are performed.

use curve25519_dalek::constants::RISTRETTO_BASEPOINT_TABLE;
use curve25519_dalek::ristretto::{CompressedRistretto, RistrettoPoint};
use curve25519_dalek::scalar::Scalar;
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::garble::KAPPA;
use crate::net::channel::{Channel, TransportError};
use crate::net::frame::FrameType;
use crate::par::{self, Exec};

/// A κ-bit OT message.
pub type Block = u128;

const BLOCK_BYTES: usize = 16;
const POINT_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("{pairs} message pairs but {choices} choice bits")]
    CountMismatch { pairs: usize, choices: usize },
    #[error("malformed group element at index {0}")]
    MalformedPoint(usize),
    #[error("OT matrix size mismatch: expected {expected} bytes, got {got}")]
    MatrixSize { expected: usize, got: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Sender messages and receiver choices for a batch, used by the dealer.
#[derive(Clone, Debug, Default)]
pub struct OtBatch {
    pub pairs: Vec<(Block, Block)>,
    pub choices: Vec<bool>,
}

impl OtBatch {
    pub fn count(&self) -> usize {
        self.pairs.len()
    }
}

/// Returns the chosen messages directly. Provides no security whatsoever.
pub fn dealer_ot(batch: &OtBatch) -> Result<Vec<Block>, OtError> {
    if batch.pairs.len() != batch.choices.len() {
        return Err(OtError::CountMismatch { pairs: batch.pairs.len(), choices: batch.choices.len() });
    }
    Ok(batch.pairs.iter().zip(&batch.choices).map(|(&(m0, m1), &c)| if c { m1 } else { m0 }).collect())
}

/// Dealer over a channel: the sender ships both messages of every pair.
pub fn dealer_send(ch: &mut Channel, pairs: &[(Block, Block)]) -> Result<(), OtError> {
    let mut bytes = Vec::with_capacity(pairs.len() * 2 * BLOCK_BYTES);
    for &(m0, m1) in pairs {
        bytes.extend_from_slice(&m0.to_le_bytes());
        bytes.extend_from_slice(&m1.to_le_bytes());
    }
    ch.send_chunked(FrameType::ExtOtMsg, &bytes)?;
    Ok(())
}

pub fn dealer_receive(ch: &mut Channel, choices: &[bool]) -> Result<Vec<Block>, OtError> {
    let bytes = ch.expect_chunked(FrameType::ExtOtMsg, choices.len() * 2 * BLOCK_BYTES)?;
    let pairs = read_pairs(&bytes);
    dealer_ot(&OtBatch { pairs, choices: choices.to_vec() })
}

fn read_block(b: &[u8]) -> Block {
    Block::from_le_bytes(b[..BLOCK_BYTES].try_into().expect("16 bytes"))
}

fn read_pairs(bytes: &[u8]) -> Vec<(Block, Block)> {
    bytes.chunks_exact(2 * BLOCK_BYTES).map(|c| (read_block(c), read_block(&c[BLOCK_BYTES..]))).collect()
}

fn point_key(index: usize, sender_point: &CompressedRistretto, receiver_point: &[u8], shared: &RistrettoPoint) -> Block {
    let mut h = Sha256::new();
    h.update(b"mpsi-base-ot");
    h.update((index as u64).to_le_bytes());
    h.update(sender_point.as_bytes());
    h.update(receiver_point);
    h.update(shared.compress().as_bytes());
    read_block(&h.finalize())
}

fn decompress(bytes: &[u8], index: usize) -> Result<RistrettoPoint, OtError> {
    CompressedRistretto::from_slice(bytes)
        .ok()
        .and_then(|c| c.decompress())
        .ok_or(OtError::MalformedPoint(index))
}

/// Base OT, sender side. Transcript: one point out, one point per instance
/// in, two masked messages per instance out.
pub fn base_ot_send<R: RngCore + CryptoRng>(
    ch: &mut Channel,
    pairs: &[(Block, Block)],
    rng: &mut R,
) -> Result<(), OtError> {
    let a = Scalar::random(rng);
    let big_a = &a * RISTRETTO_BASEPOINT_TABLE;
    let a_bytes = big_a.compress();
    ch.send(FrameType::BaseOtMsg, a_bytes.as_bytes())?;

    let received = ch.expect_len(FrameType::BaseOtMsg, pairs.len() * POINT_BYTES)?;
    let mut reply = Vec::with_capacity(pairs.len() * 2 * BLOCK_BYTES);
    for (i, (&(m0, m1), raw)) in pairs.iter().zip(received.chunks_exact(POINT_BYTES)).enumerate() {
        let big_b = decompress(raw, i)?;
        let k0 = point_key(i, &a_bytes, raw, &(a * big_b));
        let k1 = point_key(i, &a_bytes, raw, &(a * (big_b - big_a)));
        reply.extend_from_slice(&(m0 ^ k0).to_le_bytes());
        reply.extend_from_slice(&(m1 ^ k1).to_le_bytes());
    }
    ch.send(FrameType::BaseOtMsg, &reply)?;
    Ok(())
}

/// Base OT, receiver side.
pub fn base_ot_receive<R: RngCore + CryptoRng>(
    ch: &mut Channel,
    choices: &[bool],
    rng: &mut R,
) -> Result<Vec<Block>, OtError> {
    let a_raw = ch.expect_len(FrameType::BaseOtMsg, POINT_BYTES)?;
    let big_a = decompress(&a_raw, 0)?;
    let a_bytes = big_a.compress();

    let mut scalars = Vec::with_capacity(choices.len());
    let mut points = Vec::with_capacity(choices.len() * POINT_BYTES);
    for &c in choices {
        let b = Scalar::random(rng);
        let mut big_b = &b * RISTRETTO_BASEPOINT_TABLE;
        if c {
            big_b += big_a;
        }
        points.extend_from_slice(big_b.compress().as_bytes());
        scalars.push(b);
    }
    ch.send(FrameType::BaseOtMsg, &points)?;

    let reply = ch.expect_len(FrameType::BaseOtMsg, choices.len() * 2 * BLOCK_BYTES)?;
    Ok(read_pairs(&reply)
        .into_iter()
        .enumerate()
        .map(|(i, (e0, e1))| {
            let raw = &points[i * POINT_BYTES..(i + 1) * POINT_BYTES];
            let key = point_key(i, &a_bytes, raw, &(scalars[i] * big_a));
            (if choices[i] { e1 } else { e0 }) ^ key
        })
        .collect())
}

/// Expands a κ-bit seed into `bytes` pseudorandom bytes.
fn prg(seed: Block, bytes: usize) -> Vec<u8> {
    let mut key = [0u8; 32];
    key[..BLOCK_BYTES].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    let mut out = vec![0u8; bytes];
    rng.fill_bytes(&mut out);
    out
}

fn row_hash(index: usize, row: u128) -> Block {
    let mut h = Sha256::new();
    h.update(b"mpsi-iknp");
    h.update((index as u64).to_le_bytes());
    h.update(row.to_le_bytes());
    read_block(&h.finalize())
}

/// Transposes κ columns of `count` bits each into `count` rows of κ bits.
fn transpose(columns: &[Vec<u8>], count: usize, exec: Exec) -> Vec<u128> {
    let mut rows = vec![0u128; count];
    par::for_each_chunk_mut(exec, &mut rows, 4096, |chunk, start| {
        for (i, col) in columns.iter().enumerate() {
            for (k, row) in chunk.iter_mut().enumerate() {
                let j = start + k;
                let bit = (col[j / 8] >> (j % 8)) & 1;
                *row |= (bit as u128) << i;
            }
        }
    });
    rows
}

fn pack_choices(choices: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; choices.len().div_ceil(8)];
    for (j, &c) in choices.iter().enumerate() {
        out[j / 8] |= (c as u8) << (j % 8);
    }
    out
}

/// IKNP sender. Acts as base-OT receiver with a random κ-bit secret `s`.
pub fn ext_send<R: RngCore + CryptoRng>(
    ch: &mut Channel,
    pairs: &[(Block, Block)],
    rng: &mut R,
    exec: Exec,
) -> Result<(), OtError> {
    let count = pairs.len();
    let s_bits: Vec<bool> = (0..KAPPA).map(|_| rng.next_u32() & 1 == 1).collect();
    let s = s_bits.iter().enumerate().fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i));
    let seeds = base_ot_receive(ch, &s_bits, rng)?;

    let col_bytes = count.div_ceil(8);
    let u = ch.expect_chunked(FrameType::ExtOtMsg, KAPPA * col_bytes)?;
    if u.len() != KAPPA * col_bytes {
        return Err(OtError::MatrixSize { expected: KAPPA * col_bytes, got: u.len() });
    }
    let columns: Vec<Vec<u8>> = par::map_range(exec, KAPPA, |i| {
        let mut q = prg(seeds[i], col_bytes);
        if s_bits[i] {
            for (qb, ub) in q.iter_mut().zip(&u[i * col_bytes..(i + 1) * col_bytes]) {
                *qb ^= ub;
            }
        }
        q
    });
    let rows = transpose(&columns, count, exec);
    let masked: Vec<[u8; 2 * BLOCK_BYTES]> = par::map_range(exec, count, |j| {
        let y0 = pairs[j].0 ^ row_hash(j, rows[j]);
        let y1 = pairs[j].1 ^ row_hash(j, rows[j] ^ s);
        let mut out = [0u8; 2 * BLOCK_BYTES];
        out[..BLOCK_BYTES].copy_from_slice(&y0.to_le_bytes());
        out[BLOCK_BYTES..].copy_from_slice(&y1.to_le_bytes());
        out
    });
    ch.send_chunked(FrameType::ExtOtMsg, &masked.concat())?;
    Ok(())
}

/// IKNP receiver. Acts as base-OT sender with κ random seed pairs.
pub fn ext_receive<R: RngCore + CryptoRng>(
    ch: &mut Channel,
    choices: &[bool],
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Block>, OtError> {
    let count = choices.len();
    let seeds: Vec<(Block, Block)> = (0..KAPPA)
        .map(|_| {
            let mut b = [0u8; 2 * BLOCK_BYTES];
            rng.fill_bytes(&mut b);
            (read_block(&b), read_block(&b[BLOCK_BYTES..]))
        })
        .collect();
    base_ot_send(ch, &seeds, rng)?;

    let col_bytes = count.div_ceil(8);
    let r = pack_choices(choices);
    let cols: Vec<(Vec<u8>, Vec<u8>)> = par::map_range(exec, KAPPA, |i| {
        let t = prg(seeds[i].0, col_bytes);
        let mut u = prg(seeds[i].1, col_bytes);
        for ((ub, tb), rb) in u.iter_mut().zip(&t).zip(&r) {
            *ub ^= tb ^ rb;
        }
        (t, u)
    });
    let mut u_all = Vec::with_capacity(KAPPA * col_bytes);
    for (_, u) in &cols {
        u_all.extend_from_slice(u);
    }
    ch.send_chunked(FrameType::ExtOtMsg, &u_all)?;

    let t_cols: Vec<Vec<u8>> = cols.into_iter().map(|(t, _)| t).collect();
    let rows = transpose(&t_cols, count, exec);
    let y = ch.expect_chunked(FrameType::ExtOtMsg, count * 2 * BLOCK_BYTES)?;
    let pairs = read_pairs(&y);
    if pairs.len() != count {
        return Err(OtError::MatrixSize { expected: count * 2 * BLOCK_BYTES, got: y.len() });
    }
    Ok(par::map_range(exec, count, |j| {
        let y = if choices[j] { pairs[j].1 } else { pairs[j].0 };
        y ^ row_hash(j, rows[j])
    }))
}

/// OT backend selection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OtBackend {
    /// Insecure; both messages travel to the receiver.
    Dealer,
    /// Base OT plus IKNP extension.
    Real,
}

impl OtBackend {
    pub fn as_str(self) -> &'static str {
        match self {
            OtBackend::Dealer => "dealer",
            OtBackend::Real => "real",
        }
    }
}

impl std::str::FromStr for OtBackend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dealer" => Ok(OtBackend::Dealer),
            "real" => Ok(OtBackend::Real),
            other => Err(format!("unknown OT backend `{other}`")),
        }
    }
}

pub fn send<R: RngCore + CryptoRng>(
    backend: OtBackend,
    ch: &mut Channel,
    pairs: &[(Block, Block)],
    rng: &mut R,
    exec: Exec,
) -> Result<(), OtError> {
    match backend {
        OtBackend::Dealer => dealer_send(ch, pairs),
        OtBackend::Real => ext_send(ch, pairs, rng, exec),
    }
}

pub fn receive<R: RngCore + CryptoRng>(
    backend: OtBackend,
    ch: &mut Channel,
    choices: &[bool],
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Block>, OtError> {
    match backend {
        OtBackend::Dealer => dealer_receive(ch, choices),
        OtBackend::Real => ext_receive(ch, choices, rng, exec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::channel::mem_pair;
    use rand::Rng;
    use std::thread;

    fn random_batch(count: usize, seed: u64) -> OtBatch {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        OtBatch {
            pairs: (0..count).map(|_| (rng.gen(), rng.gen())).collect(),
            choices: (0..count).map(|_| rng.gen()).collect(),
        }
    }

    fn expected(batch: &OtBatch) -> Vec<Block> {
        batch.pairs.iter().zip(&batch.choices).map(|(p, &c)| if c { p.1 } else { p.0 }).collect()
    }

    #[test]
    fn dealer_examples() {
        let (a, b) = (0xAAu128, 0xBBu128);
        assert_eq!(dealer_ot(&OtBatch { pairs: vec![(a, b)], choices: vec![false] }).unwrap(), vec![a]);
        assert_eq!(dealer_ot(&OtBatch { pairs: vec![(a, b)], choices: vec![true] }).unwrap(), vec![b]);
        let batch = random_batch(1000, 1);
        assert_eq!(dealer_ot(&batch).unwrap(), expected(&batch));
        assert!(matches!(
            dealer_ot(&OtBatch { pairs: vec![(a, b)], choices: vec![] }),
            Err(OtError::CountMismatch { pairs: 1, choices: 0 })
        ));
    }

    fn run_pair<S, R>(send: S, recv: R) -> (Vec<Block>, Channel, Channel)
    where
        S: FnOnce(&mut Channel) -> Result<(), OtError> + Send + 'static,
        R: FnOnce(&mut Channel) -> Result<Vec<Block>, OtError>,
    {
        let (mut tx, mut rx) = mem_pair();
        let h = thread::spawn(move || {
            send(&mut tx).unwrap();
            tx
        });
        let out = recv(&mut rx).unwrap();
        (out, h.join().unwrap(), rx)
    }

    #[test]
    fn base_ot_delivers_choices_and_transcript_is_linear() {
        for count in [1usize, 16, 64] {
            let batch = random_batch(count, count as u64);
            let pairs = batch.pairs.clone();
            let choices = batch.choices.clone();
            let (out, tx, rx) = run_pair(
                move |ch| base_ot_send(ch, &pairs, &mut ChaCha20Rng::seed_from_u64(7)),
                |ch| base_ot_receive(ch, &choices, &mut ChaCha20Rng::seed_from_u64(8)),
            );
            assert_eq!(out, expected(&batch));
            let total = tx.sent().bytes + rx.sent().bytes;
            // 3 frame headers + A + per instance (B_i + two masked messages)
            assert_eq!(total, 15 + 32 + count as u64 * (32 + 32));
        }
    }

    #[test]
    fn base_ot_all_zero_choices() {
        let batch = random_batch(8, 3);
        let pairs = batch.pairs.clone();
        let (out, _, _) = run_pair(
            move |ch| base_ot_send(ch, &pairs, &mut ChaCha20Rng::seed_from_u64(1)),
            |ch| base_ot_receive(ch, &[false; 8], &mut ChaCha20Rng::seed_from_u64(2)),
        );
        assert_eq!(out, batch.pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    }

    #[test]
    fn malformed_point_aborts() {
        let (mut tx, mut rx) = mem_pair();
        rx.send(FrameType::BaseOtMsg, &[0xFF; 32]).unwrap();
        let err = base_ot_receive(&mut tx, &[true], &mut ChaCha20Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, OtError::MalformedPoint(0)));
    }

    #[test]
    fn extension_delivers_choices() {
        for (count, exec) in [(KAPPA, Exec::Sequential), (1000, Exec::Parallel), (37, Exec::Parallel)] {
            let batch = random_batch(count, 40 + count as u64);
            let pairs = batch.pairs.clone();
            let choices = batch.choices.clone();
            let (out, tx, _) = run_pair(
                move |ch| ext_send(ch, &pairs, &mut ChaCha20Rng::seed_from_u64(11), exec),
                |ch| ext_receive(ch, &choices, &mut ChaCha20Rng::seed_from_u64(12), exec),
            );
            assert_eq!(out, expected(&batch));
            assert!(tx.sent().payload(FrameType::ExtOtMsg) == count as u64 * 32);
        }
    }

    #[test]
    fn extension_all_zero_choices() {
        let batch = random_batch(300, 5);
        let pairs = batch.pairs.clone();
        let (out, _, _) = run_pair(
            move |ch| ext_send(ch, &pairs, &mut ChaCha20Rng::seed_from_u64(1), Exec::Sequential),
            |ch| ext_receive(ch, &[false; 300], &mut ChaCha20Rng::seed_from_u64(2), Exec::Sequential),
        );
        assert_eq!(out, batch.pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    }

    #[test]
    fn extension_rejects_wrong_matrix() {
        let (mut tx, mut rx) = mem_pair();
        let h = thread::spawn(move || {
            // Play base-OT sender honestly, then send a short u matrix.
            let seeds = vec![(1u128, 2u128); KAPPA];
            base_ot_send(&mut rx, &seeds, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
            rx.send(FrameType::ExtOtMsg, &[0u8; 10]).unwrap();
            rx.send(FrameType::ExtOtMsg, &[]).unwrap();
        });
        let pairs = vec![(0u128, 1u128); 64];
        let err = ext_send(&mut tx, &pairs, &mut ChaCha20Rng::seed_from_u64(4), Exec::Sequential).unwrap_err();
        assert!(matches!(err, OtError::Transport(TransportError::Length { .. })));
        h.join().unwrap();
    }

    #[test]
    fn dealer_over_channel() {
        let batch = random_batch(50, 9);
        let pairs = batch.pairs.clone();
        let choices = batch.choices.clone();
        let (out, _, _) = run_pair(move |ch| dealer_send(ch, &pairs), |ch| dealer_receive(ch, &choices));
        assert_eq!(out, expected(&batch));
    }

    #[test]
    fn backend_names() {
        assert_eq!("dealer".parse::<OtBackend>().unwrap(), OtBackend::Dealer);
        assert_eq!("real".parse::<OtBackend>().unwrap().as_str(), "real");
        assert!("x".parse::<OtBackend>().is_err());
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let _: u8 = rng.gen();
    }
}
