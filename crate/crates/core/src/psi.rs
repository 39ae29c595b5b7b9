//! Composition of the m-party Ex-SCS circuit.
//!
//! P1 and P2 feed their sorted sets directly; every other party's sorted set
//! enters as two XOR shares, one per side, and is reconstructed for free.
//! Iteration k merges the running intermediate with the next party's set,
//! selects duplicates, and either compacts (intermediate iterations) or, in
//! the last iteration, shuffles and/or counts.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

use crate::blocks::{
    build_3dupselection, build_bitonic_merger, build_compaction, build_counter, build_nonzero,
    build_waksman, counter_width, waksman_switch_count, BlockError, Bus,
};
use crate::circuit::{Circuit, CircuitBuilder, CircuitError, GateCounter, GateSink, PlainSink, WireId};

/// Largest supported element width.
pub const MAX_SIGMA: usize = 128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PsiError {
    #[error("at least two parties are required, got {0}")]
    TooFewParties(usize),
    #[error("set size {0} must be a power of two >= 2")]
    SetSize(usize),
    #[error("element width {0} must be in 2..={MAX_SIGMA}")]
    Sigma(usize),
    #[error("input ranges overlap or exceed the side's input count: {0}")]
    LayoutOverlap(String),
    #[error("party {0} does not contribute shares")]
    NotAContributor(usize),
    #[error("expected {expected} output bits, got {got}")]
    OutputLength { expected: usize, got: usize },
    #[error(transparent)]
    Block(#[from] BlockError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// What the final iteration reveals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Intersection,
    Cardinality,
    Both,
}

impl Mode {
    pub fn reveals_elements(self) -> bool {
        matches!(self, Mode::Intersection | Mode::Both)
    }

    pub fn reveals_count(self) -> bool {
        matches!(self, Mode::Cardinality | Mode::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Intersection => "intersection",
            Mode::Cardinality => "cardinality",
            Mode::Both => "both",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intersection" => Ok(Mode::Intersection),
            "cardinality" => Ok(Mode::Cardinality),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Circuit-shaping parameters shared by all parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PsiParams {
    pub parties: usize,
    pub set_size: usize,
    pub sigma: usize,
    pub mode: Mode,
}

impl PsiParams {
    pub fn new(parties: usize, set_size: usize, sigma: usize, mode: Mode) -> Result<Self, PsiError> {
        let p = PsiParams { parties, set_size, sigma, mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PsiError> {
        if self.parties < 2 {
            return Err(PsiError::TooFewParties(self.parties));
        }
        if self.set_size < 2 || !self.set_size.is_power_of_two() {
            return Err(PsiError::SetSize(self.set_size));
        }
        if !(2..=MAX_SIGMA).contains(&self.sigma) {
            return Err(PsiError::Sigma(self.sigma));
        }
        Ok(())
    }

    fn set_bits(&self) -> usize {
        self.set_size * self.sigma
    }

    pub fn shuffle_controls(&self) -> usize {
        if self.mode.reveals_elements() {
            waksman_switch_count(self.set_size)
        } else {
            0
        }
    }
}

/// Bit offsets into one side's input vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SideLayout {
    /// The side's own sorted set (P1 for the garbler, P2 for the evaluator).
    pub direct: Range<usize>,
    /// `(party, range)` for the share of each contributing party 3..=m.
    pub shares: Vec<(usize, Range<usize>)>,
    /// This side's private shuffle controls.
    pub controls: Range<usize>,
    pub total: usize,
}

impl SideLayout {
    fn derive(p: &PsiParams) -> Self {
        let bits = p.set_bits();
        let direct = 0..bits;
        let mut next = bits;
        let shares = (3..=p.parties)
            .map(|party| {
                let r = next..next + bits;
                next += bits;
                (party, r)
            })
            .collect();
        let controls = next..next + p.shuffle_controls();
        SideLayout { direct, shares, total: controls.end, controls }
    }

    pub fn share_range(&self, party: usize) -> Option<Range<usize>> {
        self.shares.iter().find(|(p, _)| *p == party).map(|(_, r)| r.clone())
    }

    fn validate(&self, name: &str) -> Result<(), PsiError> {
        let mut ranges: Vec<Range<usize>> = vec![self.direct.clone(), self.controls.clone()];
        ranges.extend(self.shares.iter().map(|(_, r)| r.clone()));
        ranges.retain(|r| !r.is_empty());
        ranges.sort_by_key(|r| r.start);
        for pair in ranges.windows(2) {
            if pair[0].end > pair[1].start {
                return Err(PsiError::LayoutOverlap(format!("{name}: {:?} and {:?}", pair[0], pair[1])));
            }
        }
        if ranges.last().is_some_and(|r| r.end > self.total) {
            return Err(PsiError::LayoutOverlap(format!("{name}: range beyond {} inputs", self.total)));
        }
        Ok(())
    }
}

/// Canonical assignment of every input bit, derivable by all parties from
/// the public parameters alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputLayout {
    pub params: PsiParams,
    pub garbler: SideLayout,
    pub evaluator: SideLayout,
}

impl InputLayout {
    pub fn validate(&self) -> Result<(), PsiError> {
        self.params.validate()?;
        self.garbler.validate("garbler")?;
        self.evaluator.validate("evaluator")
    }
}

pub fn derive_layout(params: &PsiParams) -> Result<InputLayout, PsiError> {
    params.validate()?;
    let side = SideLayout::derive(params);
    Ok(InputLayout { params: *params, garbler: side.clone(), evaluator: side })
}

/// Splits a bit range into `set_size` buses of `sigma` wires each.
fn buses<W: Copy>(wires: &[W], range: Range<usize>, sigma: usize) -> Vec<Bus<W>> {
    wires[range].chunks(sigma).map(|c| Bus(c.to_vec())).collect()
}

/// XOR of the two share ranges of contributor `party`; no AND gates.
pub fn build_reconstruction<S: GateSink>(
    s: &mut S,
    layout: &InputLayout,
    garbler_wires: &[S::Wire],
    evaluator_wires: &[S::Wire],
    party: usize,
) -> Result<Vec<Bus<S::Wire>>, PsiError> {
    layout.validate()?;
    let sigma = layout.params.sigma;
    let (Some(g), Some(e)) = (layout.garbler.share_range(party), layout.evaluator.share_range(party)) else {
        return Err(PsiError::NotAContributor(party));
    };
    let left = buses(garbler_wires, g, sigma);
    let right = buses(evaluator_wires, e, sigma);
    left.iter()
        .zip(&right)
        .map(|(r, r2)| Bus::xor(s, r, r2).map_err(PsiError::from))
        .collect()
}

/// Everything the composer produced, in terms of the sink's wire handle.
#[derive(Clone, Debug)]
pub struct Composition<W> {
    pub intersection: Option<Vec<Bus<W>>>,
    pub cardinality: Option<Bus<W>>,
    /// Compacted intermediate after each non-final iteration.
    pub intermediates: Vec<Vec<Bus<W>>>,
    /// Number of dup-selection outputs per iteration.
    pub selection_widths: Vec<usize>,
}

/// Emits the full Ex-SCS circuit into `s`, allocating inputs per `layout` and
/// registering outputs: intersection buses first, then the counter bus.
pub fn compose<S: GateSink>(s: &mut S, layout: &InputLayout) -> Result<Composition<S::Wire>, PsiError> {
    layout.validate()?;
    let p = layout.params;
    let sigma = p.sigma;
    let g_wires: Vec<_> = (0..layout.garbler.total).map(|_| s.garbler_input()).collect();
    let e_wires: Vec<_> = (0..layout.evaluator.total).map(|_| s.evaluator_input()).collect();

    let mut sets = Vec::with_capacity(p.parties);
    sets.push(buses(&g_wires, layout.garbler.direct.clone(), sigma));
    sets.push(buses(&e_wires, layout.evaluator.direct.clone(), sigma));
    for party in 3..=p.parties {
        sets.push(build_reconstruction(s, layout, &g_wires, &e_wires, party)?);
    }

    let zero = Bus::constant(s, 0, sigma);
    let mut intermediates = Vec::new();
    let mut selection_widths = Vec::new();
    let mut current = sets[0].clone();
    let mut result = None;

    for (iteration, next_set) in sets.iter().enumerate().skip(1) {
        let last = iteration + 1 == p.parties;
        let merged = build_bitonic_merger(s, &current, next_set)?;
        let mut selected = Vec::with_capacity(p.set_size);
        let mut matches = Vec::with_capacity(p.set_size);
        // Middles sit at even 1-based positions, i.e. odd 0-based indices.
        for i in 0..p.set_size {
            let mid = 2 * i + 1;
            let right = merged.get(mid + 1).unwrap_or(&zero);
            let (out, m) = build_3dupselection(s, &merged[mid - 1], &merged[mid], right)?;
            selected.push(out);
            matches.push(m);
        }
        selection_widths.push(selected.len());

        if !last {
            current = build_compaction(s, &selected)?;
            intermediates.push(current.clone());
            continue;
        }

        let intersection = if p.mode.reveals_elements() {
            let controls_g = &g_wires[layout.garbler.controls.clone()];
            let controls_e = &e_wires[layout.evaluator.controls.clone()];
            let once = build_waksman(s, &selected, controls_g)?;
            Some(build_waksman(s, &once, controls_e)?)
        } else {
            None
        };
        let cardinality = if p.mode.reveals_count() {
            // Dummy-dummy neighbours also raise the match bit once dummies
            // exist in the running intermediate, so count nonzero outputs.
            let hits: Vec<_> = if iteration == 1 {
                matches
            } else {
                selected.iter().map(|b| build_nonzero(s, b)).collect()
            };
            Some(build_counter(s, &hits))
        } else {
            None
        };
        result = Some((intersection, cardinality));
    }

    let (intersection, cardinality) = result.expect("at least one iteration");
    for bus in intersection.iter().flatten().chain(cardinality.iter()) {
        for &w in bus.wires() {
            s.output(w);
        }
    }
    Ok(Composition { intersection, cardinality, intermediates, selection_widths })
}

/// The materialized Ex-SCS circuit with its layout and output map.
#[derive(Clone, Debug)]
pub struct PsiCircuit {
    pub circuit: Circuit,
    pub layout: InputLayout,
    pub mode: Mode,
    pub intersection_outputs: Vec<Bus<WireId>>,
    pub cardinality_output: Option<Bus<WireId>>,
}

/// Decoded circuit output.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PsiOutput {
    /// All `n` revealed slots in shuffled order, dummies included.
    pub slots: Vec<u128>,
    pub cardinality: Option<u64>,
}

impl PsiOutput {
    /// Revealed intersection with dummies removed, ascending.
    pub fn elements(&self) -> Vec<u128> {
        let mut v: Vec<u128> = self.slots.iter().copied().filter(|&x| x != 0).collect();
        v.sort_unstable();
        v
    }
}

pub fn build_ex_scs(layout: &InputLayout) -> Result<PsiCircuit, PsiError> {
    let mut b = CircuitBuilder::new();
    let comp = compose(&mut b, layout)?;
    let circuit = b.finish()?;
    Ok(PsiCircuit {
        circuit,
        layout: layout.clone(),
        mode: layout.params.mode,
        intersection_outputs: comp.intersection.unwrap_or_default(),
        cardinality_output: comp.cardinality,
    })
}

/// Gate statistics of the Ex-SCS circuit without materializing it.
pub fn count_ex_scs(layout: &InputLayout) -> Result<GateCounter, PsiError> {
    let mut counter = GateCounter::new();
    compose(&mut counter, layout)?;
    Ok(counter)
}

/// Evaluates the composition directly on input bits, returning the decoded
/// output along with the compacted intermediates (for staged checks).
pub fn eval_ex_scs_plain(
    layout: &InputLayout,
    garbler_bits: Vec<bool>,
    evaluator_bits: Vec<bool>,
) -> Result<(PsiOutput, Vec<Vec<u128>>), PsiError> {
    let mut sink = PlainSink::new(garbler_bits, evaluator_bits);
    let comp = compose(&mut sink, layout)?;
    let bits = sink.finish()?;
    let out = decode_output(&layout.params, &bits)?;
    let inter = comp
        .intermediates
        .iter()
        .map(|list| list.iter().map(|b| unpack_bits(b.wires())).collect())
        .collect();
    Ok((out, inter))
}

impl PsiCircuit {
    pub fn decode(&self, bits: &[bool]) -> Result<PsiOutput, PsiError> {
        decode_output(&self.layout.params, bits)
    }
}

/// Total output bits for the given parameters.
pub fn output_len(p: &PsiParams) -> usize {
    let mut len = 0;
    if p.mode.reveals_elements() {
        len += p.set_bits();
    }
    if p.mode.reveals_count() {
        len += counter_width(p.set_size);
    }
    len
}

pub fn decode_output(p: &PsiParams, bits: &[bool]) -> Result<PsiOutput, PsiError> {
    let expected = output_len(p);
    if bits.len() != expected {
        return Err(PsiError::OutputLength { expected, got: bits.len() });
    }
    let mut out = PsiOutput::default();
    let mut rest = bits;
    if p.mode.reveals_elements() {
        let (slots, tail) = rest.split_at(p.set_bits());
        out.slots = slots.chunks(p.sigma).map(unpack_bits).collect();
        rest = tail;
    }
    if p.mode.reveals_count() {
        out.cardinality = Some(unpack_bits(rest) as u64);
    }
    Ok(out)
}

/// Little-endian bits to an integer.
pub fn unpack_bits(bits: &[bool]) -> u128 {
    bits.iter().enumerate().fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i))
}

/// Appends the `sigma` low bits of `value`, least significant first.
pub fn pack_element(value: u128, sigma: usize, out: &mut Vec<bool>) {
    out.extend((0..sigma).map(|i| (value >> i) & 1 == 1));
}

/// Input bit vectors for one side, assembled per layout.
#[derive(Clone, Debug)]
pub struct SideInputs<'a> {
    /// Own sorted set.
    pub direct: &'a [u128],
    /// `(party, share elements)` for each contributor.
    pub shares: Vec<(usize, &'a [u128])>,
    pub controls: &'a [bool],
}

pub fn assemble_side(layout: &SideLayout, sigma: usize, inputs: &SideInputs<'_>) -> Vec<bool> {
    let mut bits = Vec::with_capacity(layout.total);
    for &v in inputs.direct {
        pack_element(v, sigma, &mut bits);
    }
    for (party, _) in &layout.shares {
        let share = inputs
            .shares
            .iter()
            .find(|(p, _)| p == party)
            .map(|(_, s)| *s)
            .unwrap_or_else(|| panic!("missing share for party {party}"));
        for &v in share {
            pack_element(v, sigma, &mut bits);
        }
    }
    bits.extend_from_slice(inputs.controls);
    assert_eq!(bits.len(), layout.total, "side inputs do not match layout");
    bits
}
