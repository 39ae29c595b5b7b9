//! Half-gates garbling with free-XOR and point-and-permute.
//!
//! Every wire carries a 128-bit label; the two labels of a wire differ by a
//! global offset `Δ` whose low bit is 1, so the low bit of a label is its
//! color. XOR and INV gates need no table material. Each AND gate emits two
//! ciphertexts, hashed under a per-gate tweak. Constant wires carry the public
//! active label zero.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};
use crate::par::{self, Exec};

/// Computational security parameter in bits.
pub const KAPPA: usize = 128;
/// Bytes per label / ciphertext.
pub const LABEL_BYTES: usize = KAPPA / 8;
/// Bytes of table material per AND gate.
pub const AND_TABLE_BYTES: usize = 2 * LABEL_BYTES;

/// AND layers smaller than this are processed on the calling thread.
const PAR_LAYER_MIN: usize = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GarbleError {
    #[error("garbled table stream truncated: need {needed} AND tables, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("garbled table bytes must be a multiple of {AND_TABLE_BYTES}, got {0}")]
    Misaligned(usize),
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct WireLabel(pub u128);

impl WireLabel {
    #[inline]
    pub fn color(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn to_bytes(self) -> [u8; LABEL_BYTES] {
        self.0.to_le_bytes()
    }

    pub fn from_bytes(b: [u8; LABEL_BYTES]) -> Self {
        WireLabel(u128::from_le_bytes(b))
    }
}

impl std::ops::BitXor for WireLabel {
    type Output = WireLabel;
    #[inline]
    fn bitxor(self, rhs: WireLabel) -> WireLabel {
        WireLabel(self.0 ^ rhs.0)
    }
}

/// Tweakable hash: SHA-256 of (label, tweak) truncated to κ bits.
#[inline]
pub fn tweak_hash(label: WireLabel, tweak: u64) -> WireLabel {
    let mut h = Sha256::new();
    h.update(label.0.to_le_bytes());
    h.update(tweak.to_le_bytes());
    let digest = h.finalize();
    let mut out = [0u8; LABEL_BYTES];
    out.copy_from_slice(&digest[..LABEL_BYTES]);
    WireLabel(u128::from_le_bytes(out))
}

#[inline]
fn select(bit: bool, label: WireLabel) -> WireLabel {
    WireLabel(label.0 & (bit as u128).wrapping_neg())
}

/// Which party's inputs a label set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Garbler,
    Evaluator,
}

/// Zero-labels for every input wire plus the global offset.
#[derive(Clone, Debug)]
pub struct InputLabels {
    delta: WireLabel,
    garbler: Vec<WireLabel>,
    evaluator: Vec<WireLabel>,
}

impl InputLabels {
    pub fn delta(&self) -> WireLabel {
        self.delta
    }

    fn zeros(&self, side: Side) -> &[WireLabel] {
        match side {
            Side::Garbler => &self.garbler,
            Side::Evaluator => &self.evaluator,
        }
    }

    /// Active labels for `bits`: the zero-label, or zero-label ⊕ Δ.
    pub fn encode(&self, bits: &[bool], side: Side) -> Result<Vec<WireLabel>, GarbleError> {
        let zeros = self.zeros(side);
        if zeros.len() != bits.len() {
            return Err(GarbleError::LabelCount { expected: zeros.len(), got: bits.len() });
        }
        Ok(zeros.iter().zip(bits).map(|(&z, &b)| z ^ select(b, self.delta)).collect())
    }

    /// `(label for 0, label for 1)` per input wire; OT sender messages.
    pub fn pairs(&self, side: Side) -> Vec<(WireLabel, WireLabel)> {
        self.zeros(side).iter().map(|&z| (z, z ^ self.delta)).collect()
    }
}

/// Two ciphertexts per AND gate, in gate order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GarbledTables(pub Vec<[WireLabel; 2]>);

impl GarbledTables {
    pub fn byte_len(&self) -> usize {
        self.0.len() * AND_TABLE_BYTES
    }

    /// Raw concatenated ciphertexts, no per-gate headers.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        for [g, e] in &self.0 {
            out.extend_from_slice(&g.to_bytes());
            out.extend_from_slice(&e.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GarbleError> {
        if bytes.len() % AND_TABLE_BYTES != 0 {
            return Err(GarbleError::Misaligned(bytes.len()));
        }
        let label = |b: &[u8]| WireLabel::from_bytes(b.try_into().expect("16 bytes"));
        Ok(GarbledTables(
            bytes
                .chunks_exact(AND_TABLE_BYTES)
                .map(|c| [label(&c[..LABEL_BYTES]), label(&c[LABEL_BYTES..])])
                .collect(),
        ))
    }
}

/// Per output wire, the color bit of its zero-label.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodeTable(pub Vec<bool>);

#[derive(Clone, Debug)]
pub struct GarbledCircuit {
    pub labels: InputLabels,
    pub tables: GarbledTables,
    pub decode: DecodeTable,
}

/// Evaluation order that exposes parallelism: AND gates of equal AND-depth
/// are independent of each other.
struct Schedule {
    /// Per level: AND gates as `(gate index, AND ordinal)`, then free gates.
    levels: Vec<(Vec<(u32, u32)>, Vec<u32>)>,
}

impl Schedule {
    fn new(circuit: &Circuit) -> Self {
        let depth = circuit.wire_depths();
        let max = circuit.gates().iter().map(|g| depth[g.output.index()]).max().unwrap_or(0) as usize;
        let mut levels = vec![(Vec::new(), Vec::new()); max + 1];
        let mut ordinal = 0u32;
        for (i, g) in circuit.gates().iter().enumerate() {
            let d = depth[g.output.index()] as usize;
            if g.kind == GateKind::And {
                levels[d].0.push((i as u32, ordinal));
                ordinal += 1;
            } else {
                levels[d].1.push(i as u32);
            }
        }
        Schedule { levels }
    }
}

#[inline]
fn garble_and(a0: WireLabel, b0: WireLabel, delta: WireLabel, ordinal: u64) -> (WireLabel, [WireLabel; 2]) {
    let (pa, pb) = (a0.color(), b0.color());
    let (j0, j1) = (2 * ordinal, 2 * ordinal + 1);
    let ha0 = tweak_hash(a0, j0);
    let ha1 = tweak_hash(a0 ^ delta, j0);
    let hb0 = tweak_hash(b0, j1);
    let hb1 = tweak_hash(b0 ^ delta, j1);
    // garbler half: a ∧ p_b
    let tg = ha0 ^ ha1 ^ select(pb, delta);
    let wg = ha0 ^ select(pa, tg);
    // evaluator half: a ∧ (b ⊕ p_b)
    let te = hb0 ^ hb1 ^ a0;
    let we = hb0 ^ select(pb, te ^ a0);
    (wg ^ we, [tg, te])
}

#[inline]
fn eval_and(a: WireLabel, b: WireLabel, table: &[WireLabel; 2], ordinal: u64) -> WireLabel {
    let (j0, j1) = (2 * ordinal, 2 * ordinal + 1);
    let wg = tweak_hash(a, j0) ^ select(a.color(), table[0]);
    let we = tweak_hash(b, j1) ^ select(b.color(), table[1] ^ a);
    wg ^ we
}

fn seeded_rng(seed: [u8; 16]) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key.copy_from_slice(&Sha256::digest(seed));
    ChaCha20Rng::from_seed(key)
}

fn random_label(rng: &mut ChaCha20Rng) -> WireLabel {
    let mut b = [0u8; LABEL_BYTES];
    rng.fill_bytes(&mut b);
    WireLabel::from_bytes(b)
}

pub fn garble(circuit: &Circuit, seed: [u8; 16]) -> GarbledCircuit {
    garble_with(circuit, seed, Exec::default())
}

/// Garbles `circuit`; the output depends only on `circuit` and `seed`, not on
/// the execution strategy.
pub fn garble_with(circuit: &Circuit, seed: [u8; 16], exec: Exec) -> GarbledCircuit {
    let mut rng = seeded_rng(seed);
    let delta = WireLabel(random_label(&mut rng).0 | 1);
    let garbler: Vec<_> = circuit.garbler_inputs().iter().map(|_| random_label(&mut rng)).collect();
    let evaluator: Vec<_> = circuit.evaluator_inputs().iter().map(|_| random_label(&mut rng)).collect();

    let mut zero = vec![WireLabel::default(); circuit.num_wires()];
    for (w, &l) in circuit.garbler_inputs().iter().zip(&garbler) {
        zero[w.index()] = l;
    }
    for (w, &l) in circuit.evaluator_inputs().iter().zip(&evaluator) {
        zero[w.index()] = l;
    }

    let gates = circuit.gates();
    let free = |zero: &mut [WireLabel], gi: usize| {
        let g = &gates[gi];
        let [a, b] = g.inputs;
        zero[g.output.index()] = match g.kind {
            GateKind::Xor => zero[a.index()] ^ zero[b.index()],
            GateKind::Inv => zero[a.index()] ^ delta,
            GateKind::Const0 => WireLabel(0),
            GateKind::Const1 => delta,
            GateKind::And => unreachable!("AND handled separately"),
        };
    };

    let mut tables = Vec::with_capacity(circuit.and_count());
    if exec.is_parallel() {
        tables.resize(circuit.and_count(), [WireLabel::default(); 2]);
        let schedule = Schedule::new(circuit);
        for (ands, frees) in &schedule.levels {
            let work = |&(gi, ord): &(u32, u32)| {
                let g = &gates[gi as usize];
                garble_and(zero[g.inputs[0].index()], zero[g.inputs[1].index()], delta, ord as u64)
            };
            let layer_exec = if ands.len() >= PAR_LAYER_MIN { exec } else { Exec::Sequential };
            let results = par::map_slice(layer_exec, ands, work);
            for (&(gi, ord), (out, table)) in ands.iter().zip(results) {
                zero[gates[gi as usize].output.index()] = out;
                tables[ord as usize] = table;
            }
            for &gi in frees {
                free(&mut zero, gi as usize);
            }
        }
    } else {
        for (gi, g) in gates.iter().enumerate() {
            if g.kind == GateKind::And {
                let ord = tables.len() as u64;
                let (out, table) = garble_and(zero[g.inputs[0].index()], zero[g.inputs[1].index()], delta, ord);
                zero[g.output.index()] = out;
                tables.push(table);
            } else {
                free(&mut zero, gi);
            }
        }
    }

    let decode = DecodeTable(circuit.outputs().iter().map(|w| zero[w.index()].color()).collect());
    GarbledCircuit {
        labels: InputLabels { delta, garbler, evaluator },
        tables: GarbledTables(tables),
        decode,
    }
}

pub fn evaluate(
    circuit: &Circuit,
    tables: &GarbledTables,
    garbler_active: &[WireLabel],
    evaluator_active: &[WireLabel],
) -> Result<Vec<WireLabel>, GarbleError> {
    evaluate_with(circuit, tables, garbler_active, evaluator_active, Exec::default())
}

/// Evaluates with one active label per input wire; needs neither `Δ` nor any
/// inactive label.
pub fn evaluate_with(
    circuit: &Circuit,
    tables: &GarbledTables,
    garbler_active: &[WireLabel],
    evaluator_active: &[WireLabel],
    exec: Exec,
) -> Result<Vec<WireLabel>, GarbleError> {
    let needed = circuit.and_count();
    if tables.0.len() < needed {
        return Err(GarbleError::Truncated { needed, have: tables.0.len() });
    }
    for (expected, got) in [
        (circuit.garbler_inputs().len(), garbler_active.len()),
        (circuit.evaluator_inputs().len(), evaluator_active.len()),
    ] {
        if expected != got {
            return Err(GarbleError::LabelCount { expected, got });
        }
    }

    let mut active = vec![WireLabel::default(); circuit.num_wires()];
    for (w, &l) in circuit.garbler_inputs().iter().zip(garbler_active) {
        active[w.index()] = l;
    }
    for (w, &l) in circuit.evaluator_inputs().iter().zip(evaluator_active) {
        active[w.index()] = l;
    }

    let gates = circuit.gates();
    let free = |active: &mut [WireLabel], gi: usize| {
        let g = &gates[gi];
        let [a, b] = g.inputs;
        active[g.output.index()] = match g.kind {
            GateKind::Xor => active[a.index()] ^ active[b.index()],
            GateKind::Inv => active[a.index()],
            GateKind::Const0 | GateKind::Const1 => WireLabel(0),
            GateKind::And => unreachable!("AND handled separately"),
        };
    };

    if exec.is_parallel() {
        let schedule = Schedule::new(circuit);
        for (ands, frees) in &schedule.levels {
            let work = |&(gi, ord): &(u32, u32)| {
                let g = &gates[gi as usize];
                eval_and(active[g.inputs[0].index()], active[g.inputs[1].index()], &tables.0[ord as usize], ord as u64)
            };
            let layer_exec = if ands.len() >= PAR_LAYER_MIN { exec } else { Exec::Sequential };
            let results = par::map_slice(layer_exec, ands, work);
            for (&(gi, _), out) in ands.iter().zip(results) {
                active[gates[gi as usize].output.index()] = out;
            }
            for &gi in frees {
                free(&mut active, gi as usize);
            }
        }
    } else {
        let mut ord = 0usize;
        for (gi, g) in gates.iter().enumerate() {
            if g.kind == GateKind::And {
                active[g.output.index()] =
                    eval_and(active[g.inputs[0].index()], active[g.inputs[1].index()], &tables.0[ord], ord as u64);
                ord += 1;
            } else {
                free(&mut active, gi);
            }
        }
    }
    Ok(circuit.outputs().iter().map(|w| active[w.index()]).collect())
}

/// `bit = color(label) ⊕ table entry`.
pub fn decode_outputs(table: &DecodeTable, labels: &[WireLabel]) -> Result<Vec<bool>, GarbleError> {
    if table.0.len() != labels.len() {
        return Err(GarbleError::LabelCount { expected: table.0.len(), got: labels.len() });
    }
    Ok(labels.iter().zip(&table.0).map(|(l, &d)| l.color() ^ d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitBuilder, GateSink};

    fn single(kind: GateKind) -> Circuit {
        let mut b = CircuitBuilder::new();
        let x = b.garbler_input();
        let y = b.evaluator_input();
        let o = match kind {
            GateKind::And => b.and(x, y),
            GateKind::Xor => b.xor(x, y),
            _ => unreachable!(),
        };
        b.output(o);
        b.finish().unwrap()
    }

    fn run(c: &Circuit, g: &[bool], e: &[bool], exec: Exec) -> Vec<bool> {
        let gc = garble_with(c, [7; 16], exec);
        let ga = gc.labels.encode(g, Side::Garbler).unwrap();
        let ea = gc.labels.encode(e, Side::Evaluator).unwrap();
        let out = evaluate_with(c, &gc.tables, &ga, &ea, exec).unwrap();
        decode_outputs(&gc.decode, &out).unwrap()
    }

    #[test]
    fn and_gate_table_size_and_truth_table() {
        let c = single(GateKind::And);
        let gc = garble(&c, [1; 16]);
        assert_eq!(gc.tables.byte_len(), 2 * KAPPA / 8);
        for (x, y) in [(false, false), (false, true), (true, false), (true, true)] {
            assert_eq!(run(&c, &[x], &[y], Exec::Sequential), vec![x & y]);
        }
    }

    #[test]
    fn xor_gate_is_free() {
        let c = single(GateKind::Xor);
        assert!(garble(&c, [1; 16]).tables.0.is_empty());
        assert_eq!(run(&c, &[true], &[false], Exec::Sequential), vec![true]);
    }

    #[test]
    fn constants_and_inverters() {
        let mut b = CircuitBuilder::new();
        let z = b.constant(false);
        let one = b.inv(z);
        let o = b.constant(true);
        let x = b.garbler_input();
        let t = b.and(x, o);
        b.output(z);
        b.output(one);
        b.output(t);
        let c = b.finish().unwrap();
        assert_eq!(run(&c, &[true], &[], Exec::Sequential), vec![false, true, true]);
        assert_eq!(run(&c, &[false], &[], Exec::Parallel), vec![false, true, false]);
    }

    #[test]
    fn encode_selects_labels() {
        let c = single(GateKind::And);
        let gc = garble(&c, [3; 16]);
        let zero = gc.labels.encode(&[false], Side::Garbler).unwrap()[0];
        let one = gc.labels.encode(&[true], Side::Garbler).unwrap()[0];
        assert_eq!(one, zero ^ gc.labels.delta());
        assert!(gc.labels.delta().color());
        assert_eq!(gc.labels.pairs(Side::Garbler), vec![(zero, one)]);
        assert!(matches!(gc.labels.encode(&[true, false], Side::Evaluator), Err(GarbleError::LabelCount { .. })));
    }

    #[test]
    fn truncated_tables_are_rejected() {
        let c = single(GateKind::And);
        let err = evaluate(&c, &GarbledTables::default(), &[WireLabel(0)], &[WireLabel(0)]).unwrap_err();
        assert_eq!(err, GarbleError::Truncated { needed: 1, have: 0 });
        assert_eq!(GarbledTables::from_bytes(&[0; 33]).unwrap_err(), GarbleError::Misaligned(33));
    }

    #[test]
    fn table_bytes_round_trip() {
        let c = single(GateKind::And);
        let gc = garble(&c, [9; 16]);
        assert_eq!(GarbledTables::from_bytes(&gc.tables.to_bytes()).unwrap(), gc.tables);
    }

    #[test]
    fn deterministic_for_seed_and_strategy() {
        let mut b = CircuitBuilder::new();
        let xs: Vec<_> = (0..64).map(|_| b.garbler_input()).collect();
        let ys: Vec<_> = (0..64).map(|_| b.evaluator_input()).collect();
        // wide AND layer to cross the parallel threshold
        let mut acc = Vec::new();
        for i in 0..64 {
            for j in 0..16 {
                acc.push(b.and(xs[i], ys[(i + j) % 64]));
            }
        }
        for w in acc {
            b.output(w);
        }
        let c = b.finish().unwrap();
        let s = garble_with(&c, [5; 16], Exec::Sequential);
        let p = garble_with(&c, [5; 16], Exec::Parallel);
        assert_eq!(s.tables, p.tables);
        assert_eq!(s.decode, p.decode);
        assert_ne!(garble_with(&c, [6; 16], Exec::Sequential).tables, s.tables);
    }
}
