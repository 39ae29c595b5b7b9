//! Gate-count and communication reports.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use mpsi_core::net::config::auto_sigma;
use mpsi_core::net::frame::FrameType;
use mpsi_core::net::session::{run_local, PartyInput, SessionError};
use mpsi_core::ot::OtBackend;
use mpsi_core::psi::{build_ex_scs, count_ex_scs, derive_layout, Mode, PsiError, PsiParams};
use mpsi_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Element width requested on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaChoice {
    Bits(usize),
    /// 40 + 2·log₂n − 1.
    Auto,
}

impl SigmaChoice {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            SigmaChoice::Bits(b) => b,
            SigmaChoice::Auto => auto_sigma(n),
        }
    }
}

impl std::str::FromStr for SigmaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(SigmaChoice::Auto);
        }
        s.parse().map(SigmaChoice::Bits).map_err(|_| format!("sigma must be a bit width or `auto`, got `{s}`"))
    }
}

impl std::fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SigmaChoice::Bits(b) => write!(f, "{b}"),
            SigmaChoice::Auto => f.write_str("auto"),
        }
    }
}

/// Published per-element non-free gates and depth for m = 3.
pub fn published_gate_reference(n: usize, sigma: SigmaChoice) -> Option<(u64, u32)> {
    match (sigma, n) {
        (SigmaChoice::Bits(32), 4096) => Some((1826, 120)),
        (SigmaChoice::Bits(32), 65536) => Some((2628, 160)),
        (SigmaChoice::Bits(32), 1_048_576) => Some((3946, 200)),
        (SigmaChoice::Auto, 4096) => Some((2175, 143)),
        (SigmaChoice::Auto, 65536) => Some((3235, 197)),
        (SigmaChoice::Auto, 1_048_576) => Some((4972, 252)),
        _ => None,
    }
}

/// Published running time (s) and communication (MB) at σ = 32.
pub fn published_session_reference(m: usize, n: usize) -> Option<(f64, f64)> {
    let table = [
        (3, 256, 0.48, 20.19),
        (3, 4096, 5.29, 408.46),
        (3, 65536, 102.93, 6832.88),
        (5, 256, 0.81, 68.77),
        (5, 4096, 12.32, 1432.14),
        (5, 65536, 230.17, 32977.2),
        (7, 256, 1.33, 160.18),
        (7, 4096, 19.36, 2801.66),
        (7, 65536, 377.41, 82886.3),
        (9, 256, 1.93, 237.32),
        (9, 4096, 26.43, 3720.98),
        (9, 65536, 514.65, 126341.9),
    ];
    table.iter().find(|r| r.0 == m && r.1 == n).map(|r| (r.2, r.3))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateRow {
    pub m: usize,
    pub n: usize,
    pub sigma: SigmaChoice,
    pub sigma_bits: usize,
    pub and_count: u64,
    pub and_depth: u32,
    pub total_gates: u64,
    pub published: Option<(u64, u32)>,
}

impl GateRow {
    pub fn per_element(&self) -> f64 {
        self.and_count as f64 / self.n as f64
    }
}

/// Counts gates without materializing the circuit, so large `n` is cheap.
pub fn gate_row(m: usize, n: usize, sigma: SigmaChoice) -> Result<GateRow, PsiError> {
    let sigma_bits = sigma.resolve(n);
    let params = PsiParams::new(m, n, sigma_bits, Mode::Intersection)?;
    let stats = count_ex_scs(&derive_layout(&params)?)?.stats();
    Ok(GateRow {
        m,
        n,
        sigma,
        sigma_bits,
        and_count: stats.and_count,
        and_depth: stats.and_depth,
        total_gates: stats.total_gates,
        published: if m == 3 { published_gate_reference(n, sigma) } else { None },
    })
}

pub fn gate_csv(rows: &[GateRow]) -> String {
    let mut s = String::from("m,n,sigma,sigma_bits,and_count,and_per_element,and_depth,total_gates,published_per_element,published_depth\n");
    for r in rows {
        let (pe, pd) = r.published.map_or((String::new(), String::new()), |(e, d)| (e.to_string(), d.to_string()));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.2},{},{},{},{}",
            r.m, r.n, r.sigma, r.sigma_bits, r.and_count, r.per_element(), r.and_depth, r.total_gates, pe, pd
        );
    }
    s
}

pub fn gate_table(rows: &[GateRow]) -> String {
    let mut s = format!(
        "{:>3} {:>8} {:>6} {:>14} {:>10} {:>7} {:>18}\n",
        "m", "n", "sigma", "AND gates", "AND/elem", "depth", "published AND/elem,dep"
    );
    for r in rows {
        let published = r.published.map_or("-".to_string(), |(e, d)| format!("{e},{d}"));
        let sigma = if r.sigma == SigmaChoice::Auto { format!("{}*", r.sigma_bits) } else { r.sigma_bits.to_string() };
        let _ = writeln!(
            s,
            "{:>3} {:>8} {:>6} {:>14} {:>10.1} {:>7} {:>18}",
            r.m, r.n, sigma, r.and_count, r.per_element(), r.and_depth, published
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiveRow {
    pub m: usize,
    pub n: usize,
    pub sigma: usize,
    pub backend: OtBackend,
    pub and_count: u64,
    pub table_bytes: u64,
    pub p1_to_p2: u64,
    pub p2_to_p1: u64,
    /// Sum of bytes sent by every party.
    pub total_bytes: u64,
    /// Wall-clock time of the whole session, circuit construction included.
    pub elapsed: Duration,
    pub cardinality: u64,
    pub published: Option<(f64, f64)>,
}

/// `m` random sets of `n` distinct nonzero σ-bit elements sharing a random
/// core of about a quarter of the set.
pub fn random_sets<R: Rng>(rng: &mut R, m: usize, n: usize, sigma: usize) -> Vec<Vec<u128>> {
    let mask = if sigma == 128 { u128::MAX } else { (1u128 << sigma) - 1 };
    let fresh = |rng: &mut R| loop {
        let v = rng.gen::<u128>() & mask;
        if v != 0 {
            return v;
        }
    };
    let mut core = BTreeSet::new();
    while core.len() < n / 4 {
        core.insert(fresh(rng));
    }
    (0..m)
        .map(|_| {
            let mut s = core.clone();
            while s.len() < n {
                s.insert(fresh(rng));
            }
            s.into_iter().collect()
        })
        .collect()
}

/// Runs a full in-process session on random sets and measures traffic and
/// time.
pub fn live_row(m: usize, n: usize, sigma: usize, backend: OtBackend, exec: Exec, seed: u64) -> Result<LiveRow, SessionError> {
    let params = PsiParams::new(m, n, sigma, Mode::Both)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let inputs: Vec<PartyInput> = random_sets(&mut rng, m, n, sigma).into_iter().map(PartyInput::new).collect();
    let start = Instant::now();
    let reports = run_local(params, backend, &inputs, exec, Some(seed))?;
    let elapsed = start.elapsed();
    let and_count = build_ex_scs(&derive_layout(&params)?)?.circuit.and_count() as u64;
    let (to_p2, from_p2) = &reports[0].traffic[&2];
    Ok(LiveRow {
        m,
        n,
        sigma,
        backend,
        and_count,
        table_bytes: to_p2.payload(FrameType::GcChunk),
        p1_to_p2: to_p2.bytes,
        p2_to_p1: from_p2.bytes,
        total_bytes: reports.iter().map(|r| r.bytes_sent()).sum(),
        elapsed,
        cardinality: reports[1].result.cardinality.unwrap_or(0),
        published: if sigma == 32 { published_session_reference(m, n) } else { None },
    })
}

const MB: f64 = 1e6;

pub fn live_csv(rows: &[LiveRow]) -> String {
    let mut s = String::from(
        "m,n,sigma,ot_backend,and_count,table_bytes,p1_to_p2_bytes,p2_to_p1_bytes,total_bytes,seconds,published_seconds,published_mb\n",
    );
    for r in rows {
        let (ps, pm) = r.published.map_or((String::new(), String::new()), |(t, c)| (t.to_string(), c.to_string()));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{:.3},{},{}",
            r.m,
            r.n,
            r.sigma,
            r.backend.as_str(),
            r.and_count,
            r.table_bytes,
            r.p1_to_p2,
            r.p2_to_p1,
            r.total_bytes,
            r.elapsed.as_secs_f64(),
            ps,
            pm
        );
    }
    s
}

pub fn live_table(rows: &[LiveRow]) -> String {
    let mut s = format!(
        "{:>3} {:>6} {:>6} {:>12} {:>12} {:>12} {:>9} {:>16}\n",
        "m", "n", "sigma", "AND gates", "P1->P2 MB", "P2->P1 MB", "seconds", "published s / MB"
    );
    for r in rows {
        let published = r.published.map_or("-".to_string(), |(t, c)| format!("{t} / {c}"));
        let _ = writeln!(
            s,
            "{:>3} {:>6} {:>6} {:>12} {:>12.2} {:>12.2} {:>9.3} {:>16}",
            r.m,
            r.n,
            r.sigma,
            r.and_count,
            r.p1_to_p2 as f64 / MB,
            r.p2_to_p1 as f64 / MB,
            r.elapsed.as_secs_f64(),
            published
        );
    }
    s
}
