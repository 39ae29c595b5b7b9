//! Party state machines. Contributors secret-share their sets to P1 and P2,
//! P1 garbles the Ex-SCS circuit, P2 evaluates it and announces the result.

use std::collections::BTreeMap;
use std::io;
use std::net::{TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{CryptoRng, Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::channel::{mem_pair, Channel, TrafficStats, TransportError};
use super::config::{Role, SessionConfig};
use super::frame::FrameType;
use crate::blocks::{route_waksman, BlockError};
use crate::garble::{self, DecodeTable, GarbleError, GarbledTables, Side, WireLabel, AND_TABLE_BYTES, LABEL_BYTES};
use crate::ot::{self, OtBackend, OtError};
use crate::par::Exec;
use crate::psi::{assemble_side, build_ex_scs, derive_layout, PsiError, PsiParams, SideInputs};

const HELLO_LEN: usize = 4 + 32 + 8;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid input set: {0}")]
    InvalidSet(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("configuration hash mismatch with party {peer}")]
    HelloMismatch { peer: usize },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Garble(#[from] GarbleError),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error("network setup: {0}")]
    Io(#[from] io::Error),
}

impl SessionError {
    /// True when this party failed only because a peer aborted.
    pub fn is_peer_abort(&self) -> bool {
        matches!(
            self,
            SessionError::Transport(TransportError::PeerAborted(_))
                | SessionError::Ot(OtError::Transport(TransportError::PeerAborted(_)))
        )
    }
}

/// A party's private input plus the set size it declares publicly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyInput {
    /// Exactly `n` distinct nonzero `σ`-bit elements, padding included.
    pub set: Vec<u128>,
    /// Size of the real set before padding, announced in HELLO.
    pub declared_size: u64,
}

impl PartyInput {
    pub fn new(set: Vec<u128>) -> Self {
        let declared_size = set.len() as u64;
        PartyInput { set, declared_size }
    }
}

/// What the output parties learn.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PsiResult {
    /// Intersection, ascending, when the mode reveals elements.
    pub intersection: Option<Vec<u128>>,
    pub cardinality: Option<u64>,
}

/// Result plus per-session measurements.
#[derive(Clone, Debug, Default)]
pub struct SessionReport {
    pub party_id: usize,
    pub result: PsiResult,
    /// Declared set sizes of every party, own included.
    pub declared_sizes: BTreeMap<usize, u64>,
    /// Peer id → (sent, received).
    pub traffic: BTreeMap<usize, (TrafficStats, TrafficStats)>,
    /// Named phases in execution order.
    pub timings: Vec<(&'static str, Duration)>,
}

impl SessionReport {
    pub fn bytes_sent(&self) -> u64 {
        self.traffic.values().map(|(s, _)| s.bytes).sum()
    }

    pub fn bytes_with(&self, peer: usize) -> u64 {
        self.traffic.get(&peer).map_or(0, |(s, r)| s.bytes + r.bytes)
    }

    pub fn total_time(&self) -> Duration {
        self.timings.iter().map(|(_, d)| *d).sum()
    }
}

/// Connections to this party's peers, keyed by party id.
#[derive(Debug, Default)]
pub struct Links {
    channels: BTreeMap<usize, Channel>,
    /// HELLO payloads already read while identifying inbound connections.
    prefetched: BTreeMap<usize, Vec<u8>>,
    /// Peers our HELLO already went to while dialing.
    hello_sent: std::collections::BTreeSet<usize>,
}

impl Links {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, peer: usize, ch: Channel) {
        self.channels.insert(peer, ch);
    }

    pub fn peers(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels.keys().copied()
    }

    fn get(&mut self, peer: usize) -> Result<&mut Channel, SessionError> {
        self.channels.get_mut(&peer).ok_or_else(|| SessionError::Config(format!("no link to party {peer}")))
    }

    fn abort_all(&mut self, reason: &str) {
        for ch in self.channels.values_mut() {
            ch.abort(reason);
        }
    }
}

/// Peers a party talks to: output parties talk to everyone, contributors to
/// P1 and P2 only.
pub fn required_peers(party: usize, parties: usize) -> Vec<usize> {
    match Role::for_party(party) {
        Role::Contributor => vec![1, 2],
        _ => (1..=parties).filter(|&p| p != party).collect(),
    }
}

/// Fully wired in-memory network; element `i` belongs to party `i + 1`.
pub fn mem_network(parties: usize) -> Vec<Links> {
    let mut links: Vec<Links> = (0..parties).map(|_| Links::new()).collect();
    for a in 1..=parties {
        for b in a + 1..=parties {
            if Role::for_party(b) == Role::Contributor && Role::for_party(a) == Role::Contributor {
                continue;
            }
            let (x, y) = mem_pair();
            links[a - 1].insert(b, x);
            links[b - 1].insert(a, y);
        }
    }
    links
}

/// Opens TCP connections per the roster. P1 and P2 listen; P2 dials P1 and
/// contributors dial both. Dialing retries until `timeout`. The dialer sends
/// its HELLO at once so the listener can tell who connected.
pub fn connect_tcp(cfg: &SessionConfig, declared_size: u64, timeout: Duration) -> Result<Links, SessionError> {
    let addr = |p: usize| {
        cfg.roster.get(&p).cloned().ok_or_else(|| SessionError::Config(format!("roster lacks party {p}")))
    };
    let deadline = Instant::now() + timeout;
    let mut links = Links::new();
    let listener = match cfg.role {
        Role::Contributor => None,
        _ => Some(TcpListener::bind(addr(cfg.party_id)?)?),
    };
    let dial = match cfg.role {
        Role::Garbler => vec![],
        Role::Evaluator => vec![1],
        Role::Contributor => vec![1, 2],
    };
    for peer in dial {
        let stream = dial_until(&addr(peer)?, deadline)?;
        let mut ch = Channel::tcp(stream)?;
        ch.send(FrameType::Hello, &encode_hello(cfg.party_id, &cfg.hash(), declared_size))?;
        links.hello_sent.insert(peer);
        links.insert(peer, ch);
    }
    if let Some(listener) = listener {
        let inbound = cfg.params.parties - cfg.party_id;
        for _ in 0..inbound {
            let (stream, _) = listener.accept()?;
            let mut ch = Channel::tcp(stream)?;
            let hello = ch.expect(FrameType::Hello)?;
            let (peer, _, _) = parse_hello(&hello)?;
            if peer <= cfg.party_id || peer > cfg.params.parties || links.channels.contains_key(&peer) {
                ch.abort("unexpected party id");
                return Err(SessionError::Protocol(format!("unexpected inbound party {peer}")));
            }
            links.prefetched.insert(peer, hello);
            links.insert(peer, ch);
        }
    }
    Ok(links)
}

fn dial_until(addr: &str, deadline: Instant) -> io::Result<TcpStream> {
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => thread::sleep(Duration::from_millis(50)),
        }
    }
}

fn encode_hello(party: usize, hash: &[u8; 32], declared: u64) -> Vec<u8> {
    let mut v = Vec::with_capacity(HELLO_LEN);
    v.extend_from_slice(&(party as u32).to_be_bytes());
    v.extend_from_slice(hash);
    v.extend_from_slice(&declared.to_be_bytes());
    v
}

fn parse_hello(p: &[u8]) -> Result<(usize, [u8; 32], u64), SessionError> {
    if p.len() != HELLO_LEN {
        return Err(SessionError::Protocol(format!("HELLO of {} bytes", p.len())));
    }
    let party = u32::from_be_bytes(p[..4].try_into().unwrap()) as usize;
    let hash = p[4..36].try_into().unwrap();
    let declared = u64::from_be_bytes(p[36..].try_into().unwrap());
    Ok((party, hash, declared))
}

/// Exchanges HELLO with `peer`; the higher id speaks first so the lower id
/// can reject a mismatch before revealing anything.
fn handshake(
    cfg: &SessionConfig,
    links: &mut Links,
    peer: usize,
    declared: u64,
) -> Result<u64, SessionError> {
    let hash = cfg.hash();
    let hello = encode_hello(cfg.party_id, &hash, declared);
    let prefetched = links.prefetched.remove(&peer);
    let already_sent = links.hello_sent.contains(&peer);
    let ch = links.get(peer)?;
    if cfg.party_id > peer && !already_sent {
        ch.send(FrameType::Hello, &hello)?;
    }
    let payload = match prefetched {
        Some(p) => p,
        None => ch.expect(FrameType::Hello)?,
    };
    let (id, peer_hash, peer_declared) = parse_hello(&payload)?;
    if id != peer {
        ch.abort("party id mismatch");
        return Err(SessionError::Protocol(format!("party {peer} introduced itself as {id}")));
    }
    if peer_hash != hash {
        ch.abort("config hash mismatch");
        return Err(SessionError::HelloMismatch { peer });
    }
    if cfg.party_id < peer {
        ch.send(FrameType::Hello, &hello)?;
    }
    Ok(peer_declared)
}

/// Checks a local set and returns it sorted ascending.
pub fn validate_set(params: &PsiParams, set: &[u128]) -> Result<Vec<u128>, SessionError> {
    if set.len() != params.set_size {
        return Err(SessionError::InvalidSet(format!("{} elements, expected {}", set.len(), params.set_size)));
    }
    let limit = if params.sigma == 128 { u128::MAX } else { (1u128 << params.sigma) - 1 };
    if let Some(x) = set.iter().find(|&&x| x == 0 || x > limit) {
        return Err(SessionError::InvalidSet(format!("element {x:#x} outside 1..2^{}", params.sigma)));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(SessionError::InvalidSet("duplicate elements".into()));
    }
    Ok(sorted)
}

/// LSB-first bit packing.
pub fn pack_bools(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

pub fn unpack_bools(bytes: &[u8], len: usize) -> Vec<bool> {
    (0..len).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

fn pack_elements(values: &[u128], sigma: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(values.len() * sigma);
    for &v in values {
        crate::psi::pack_element(v, sigma, &mut bits);
    }
    pack_bools(&bits)
}

fn unpack_elements(bytes: &[u8], count: usize, sigma: usize) -> Vec<u128> {
    unpack_bools(bytes, count * sigma).chunks(sigma).map(crate::psi::unpack_bits).collect()
}

fn shares_len(p: &PsiParams) -> usize {
    4 + (p.set_size * p.sigma).div_ceil(8)
}

fn encode_result(r: &PsiResult) -> Vec<u8> {
    let flags = r.intersection.is_some() as u8 | (r.cardinality.is_some() as u8) << 1;
    let elements = r.intersection.as_deref().unwrap_or_default();
    let mut v = vec![flags];
    v.extend_from_slice(&(elements.len() as u32).to_be_bytes());
    for e in elements {
        v.extend_from_slice(&e.to_be_bytes());
    }
    if let Some(c) = r.cardinality {
        v.extend_from_slice(&c.to_be_bytes());
    }
    v
}

fn decode_result(p: &[u8]) -> Result<PsiResult, SessionError> {
    let bad = || SessionError::Protocol("malformed RESULT".into());
    let (&flags, rest) = p.split_first().ok_or_else(bad)?;
    let count = u32::from_be_bytes(rest.get(..4).ok_or_else(bad)?.try_into().unwrap()) as usize;
    let body = &rest[4..];
    let elems_len = count.checked_mul(16).ok_or_else(bad)?;
    let card_len = if flags & 2 != 0 { 8 } else { 0 };
    if flags > 3 || body.len() != elems_len + card_len || (flags & 1 == 0 && count != 0) {
        return Err(bad());
    }
    let elements: Vec<u128> = body[..elems_len].chunks(16).map(|c| u128::from_be_bytes(c.try_into().unwrap())).collect();
    Ok(PsiResult {
        intersection: (flags & 1 != 0).then_some(elements),
        cardinality: (flags & 2 != 0).then(|| u64::from_be_bytes(body[elems_len..].try_into().unwrap())),
    })
}

struct Clock {
    last: Instant,
    timings: Vec<(&'static str, Duration)>,
}

impl Clock {
    fn new() -> Self {
        Clock { last: Instant::now(), timings: Vec::new() }
    }

    fn lap(&mut self, phase: &'static str) {
        let now = Instant::now();
        self.timings.push((phase, now - self.last));
        self.last = now;
    }
}

/// Runs one party to completion. On any failure the party sends ABORT to
/// every peer before returning the error; no output material is sent.
pub fn run_party<R: RngCore + CryptoRng>(
    cfg: &SessionConfig,
    links: &mut Links,
    input: &PartyInput,
    rng: &mut R,
    exec: Exec,
) -> Result<SessionReport, SessionError> {
    let outcome = run_inner(cfg, links, input, rng, exec);
    if let Err(e) = &outcome {
        links.abort_all(&e.to_string());
    }
    outcome
}

fn run_inner<R: RngCore + CryptoRng>(
    cfg: &SessionConfig,
    links: &mut Links,
    input: &PartyInput,
    rng: &mut R,
    exec: Exec,
) -> Result<SessionReport, SessionError> {
    let params = cfg.params;
    params.validate()?;
    if Role::for_party(cfg.party_id) != cfg.role || cfg.party_id == 0 || cfg.party_id > params.parties {
        return Err(SessionError::Config(format!("party {} cannot act as {}", cfg.party_id, cfg.role.as_str())));
    }
    let set = validate_set(&params, &input.set)?;
    let peers = required_peers(cfg.party_id, params.parties);
    if links.peers().ne(peers.iter().copied()) {
        return Err(SessionError::Config(format!("links must cover exactly parties {peers:?}")));
    }

    let mut clock = Clock::new();
    let mut declared_sizes = BTreeMap::from([(cfg.party_id, input.declared_size)]);
    for &peer in &peers {
        let d = handshake(cfg, links, peer, input.declared_size)?;
        declared_sizes.insert(peer, d);
    }
    clock.lap("handshake");

    let result = match cfg.role {
        Role::Contributor => run_contributor(cfg.party_id, &params, links, &set, rng, &mut clock)?,
        Role::Garbler => run_garbler(cfg, links, &set, rng, exec, &mut clock)?,
        Role::Evaluator => run_evaluator(cfg, links, &set, rng, exec, &mut clock)?,
    };

    let traffic = links.channels.iter().map(|(&p, ch)| (p, (ch.sent().clone(), ch.received().clone()))).collect();
    Ok(SessionReport { party_id: cfg.party_id, result, declared_sizes, traffic, timings: clock.timings })
}

/// Splits `set` into two uniformly random XOR shares.
pub fn share_set<R: RngCore + CryptoRng>(set: &[u128], sigma: usize, rng: &mut R) -> (Vec<u128>, Vec<u128>) {
    let mask = if sigma == 128 { u128::MAX } else { (1u128 << sigma) - 1 };
    let r: Vec<u128> = set.iter().map(|_| rng.gen::<u128>() & mask).collect();
    let r2 = set.iter().zip(&r).map(|(v, r)| v ^ r).collect();
    (r, r2)
}

fn shares_payload(party: usize, share: &[u128], sigma: usize) -> Vec<u8> {
    let mut v = (party as u32).to_be_bytes().to_vec();
    v.extend(pack_elements(share, sigma));
    v
}

fn run_contributor<R: RngCore + CryptoRng>(
    party: usize,
    params: &PsiParams,
    links: &mut Links,
    set: &[u128],
    rng: &mut R,
    clock: &mut Clock,
) -> Result<PsiResult, SessionError> {
    let (r, r2) = share_set(set, params.sigma, rng);
    links.get(1)?.send(FrameType::Shares, &shares_payload(party, &r, params.sigma))?;
    links.get(2)?.send(FrameType::Shares, &shares_payload(party, &r2, params.sigma))?;
    clock.lap("share");
    let result = decode_result(&links.get(2)?.expect(FrameType::Result)?)?;
    clock.lap("await result");
    Ok(result)
}

fn collect_shares(params: &PsiParams, links: &mut Links) -> Result<Vec<(usize, Vec<u128>)>, SessionError> {
    (3..=params.parties)
        .map(|party| {
            let payload = links.get(party)?.expect_len(FrameType::Shares, shares_len(params))?;
            let claimed = u32::from_be_bytes(payload[..4].try_into().unwrap()) as usize;
            if claimed != party {
                return Err(SessionError::Protocol(format!("party {party} sent shares labelled {claimed}")));
            }
            Ok((party, unpack_elements(&payload[4..], params.set_size, params.sigma)))
        })
        .collect()
}

/// Uniformly random permutation (Fisher-Yates) as Waksman controls.
fn random_shuffle<R: RngCore>(params: &PsiParams, rng: &mut R) -> Result<Vec<bool>, SessionError> {
    if params.shuffle_controls() == 0 {
        return Ok(Vec::new());
    }
    let mut pi: Vec<usize> = (0..params.set_size).collect();
    pi.shuffle(rng);
    Ok(route_waksman(&pi)?)
}

fn side_bits(
    params: &PsiParams,
    layout: &crate::psi::SideLayout,
    set: &[u128],
    shares: &[(usize, Vec<u128>)],
    controls: &[bool],
) -> Vec<bool> {
    let inputs = SideInputs {
        direct: set,
        shares: shares.iter().map(|(p, s)| (*p, s.as_slice())).collect(),
        controls,
    };
    assemble_side(layout, params.sigma, &inputs)
}

fn run_garbler<R: RngCore + CryptoRng>(
    cfg: &SessionConfig,
    links: &mut Links,
    set: &[u128],
    rng: &mut R,
    exec: Exec,
    clock: &mut Clock,
) -> Result<PsiResult, SessionError> {
    let params = cfg.params;
    let shares = collect_shares(&params, links)?;
    clock.lap("collect shares");

    let layout = derive_layout(&params)?;
    let psi = build_ex_scs(&layout)?;
    let controls = random_shuffle(&params, rng)?;
    let bits = side_bits(&params, &layout.garbler, set, &shares, &controls);
    clock.lap("build circuit");

    let gc = garble::garble_with(&psi.circuit, rng.gen(), exec);
    let active = gc.labels.encode(&bits, Side::Garbler)?;
    clock.lap("garble");

    let ch = links.get(2)?;
    let label_bytes: Vec<u8> = active.iter().flat_map(|l| l.to_bytes()).collect();
    ch.send_chunked(FrameType::GarblerLabels, &label_bytes)?;
    ch.send_chunked(FrameType::GcChunk, &gc.tables.to_bytes())?;
    ch.send(FrameType::DecodeTable, &pack_bools(&gc.decode.0))?;
    clock.lap("send circuit");

    let pairs: Vec<(u128, u128)> = gc.labels.pairs(Side::Evaluator).into_iter().map(|(a, b)| (a.0, b.0)).collect();
    ot::send(cfg.ot_backend, ch, &pairs, rng, exec)?;
    clock.lap("oblivious transfer");

    let result = decode_result(&ch.expect(FrameType::Result)?)?;
    clock.lap("await result");
    Ok(result)
}

fn run_evaluator<R: RngCore + CryptoRng>(
    cfg: &SessionConfig,
    links: &mut Links,
    set: &[u128],
    rng: &mut R,
    exec: Exec,
    clock: &mut Clock,
) -> Result<PsiResult, SessionError> {
    let params = cfg.params;
    let shares = collect_shares(&params, links)?;
    clock.lap("collect shares");

    let layout = derive_layout(&params)?;
    let psi = build_ex_scs(&layout)?;
    let controls = random_shuffle(&params, rng)?;
    let bits = side_bits(&params, &layout.evaluator, set, &shares, &controls);
    clock.lap("build circuit");

    let circuit = &psi.circuit;
    let ch = links.get(1)?;
    let label_bytes = ch.expect_chunked(FrameType::GarblerLabels, circuit.garbler_inputs().len() * LABEL_BYTES)?;
    let garbler_active: Vec<WireLabel> =
        label_bytes.chunks(LABEL_BYTES).map(|c| WireLabel::from_bytes(c.try_into().unwrap())).collect();
    let tables = GarbledTables::from_bytes(&ch.expect_chunked(FrameType::GcChunk, circuit.and_count() * AND_TABLE_BYTES)?)?;
    let outputs = circuit.outputs().len();
    let decode = DecodeTable(unpack_bools(&ch.expect_len(FrameType::DecodeTable, outputs.div_ceil(8))?, outputs));
    clock.lap("receive circuit");

    let evaluator_active: Vec<WireLabel> =
        ot::receive(cfg.ot_backend, ch, &bits, rng, exec)?.into_iter().map(WireLabel).collect();
    clock.lap("oblivious transfer");

    let out_labels = garble::evaluate_with(circuit, &tables, &garbler_active, &evaluator_active, exec)?;
    let out = psi.decode(&garble::decode_outputs(&decode, &out_labels)?)?;
    let result = PsiResult {
        intersection: params.mode.reveals_elements().then(|| out.elements()),
        cardinality: out.cardinality,
    };
    clock.lap("evaluate");

    let payload = encode_result(&result);
    for peer in required_peers(cfg.party_id, params.parties) {
        links.get(peer)?.send(FrameType::Result, &payload)?;
    }
    clock.lap("announce");
    Ok(result)
}

/// Both sides' circuit inputs for the given sets, assembled exactly as the
/// protocol does (fresh shares, independent random shuffles) but without any
/// cryptography. Returns `(garbler bits, evaluator bits)`.
pub fn simulate_inputs<R: RngCore + CryptoRng>(
    params: &PsiParams,
    sets: &[Vec<u128>],
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>), SessionError> {
    if sets.len() != params.parties {
        return Err(SessionError::Config(format!("{} sets for {} parties", sets.len(), params.parties)));
    }
    let sorted = sets.iter().map(|s| validate_set(params, s)).collect::<Result<Vec<_>, _>>()?;
    let layout = derive_layout(params)?;
    let (mut to_g, mut to_e) = (Vec::new(), Vec::new());
    for (i, set) in sorted.iter().enumerate().skip(2) {
        let (r, r2) = share_set(set, params.sigma, rng);
        to_g.push((i + 1, r));
        to_e.push((i + 1, r2));
    }
    let controls_g = random_shuffle(params, rng)?;
    let controls_e = random_shuffle(params, rng)?;
    Ok((
        side_bits(params, &layout.garbler, &sorted[0], &to_g, &controls_g),
        side_bits(params, &layout.evaluator, &sorted[1], &to_e, &controls_e),
    ))
}

/// Runs all parties in-process over [`mem_network`]. With `seed`, party
/// randomness is reproducible; otherwise it comes from the OS.
pub fn run_local(
    params: PsiParams,
    backend: OtBackend,
    inputs: &[PartyInput],
    exec: Exec,
    seed: Option<u64>,
) -> Result<Vec<SessionReport>, SessionError> {
    if inputs.len() != params.parties {
        return Err(SessionError::Config(format!("{} inputs for {} parties", inputs.len(), params.parties)));
    }
    let base = SessionConfig::local(params, 1, backend);
    let outcomes: Vec<Result<SessionReport, SessionError>> = thread::scope(|scope| {
        let handles: Vec<_> = mem_network(params.parties)
            .into_iter()
            .zip(inputs)
            .enumerate()
            .map(|(i, (mut links, input))| {
                let cfg = base.for_party(i + 1);
                scope.spawn(move || {
                    let mut rng = match seed {
                        Some(s) => ChaCha20Rng::seed_from_u64(s.wrapping_mul(0x9e37_79b9).wrapping_add(i as u64)),
                        None => ChaCha20Rng::from_entropy(),
                    };
                    run_party(&cfg, &mut links, input, &mut rng, exec)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("party thread panicked")).collect()
    });
    let mut reports = Vec::with_capacity(outcomes.len());
    let mut first_err: Option<SessionError> = None;
    for o in outcomes {
        match o {
            Ok(r) => reports.push(r),
            Err(e) => {
                if first_err.as_ref().is_none_or(|f| f.is_peer_abort() && !e.is_peer_abort()) {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(reports),
    }
}
