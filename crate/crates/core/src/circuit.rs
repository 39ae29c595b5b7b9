//! Boolean circuit representation over the gate set {XOR, AND, INV, CONST}.
//!
//! Wires are dense indices assigned in creation order. A [`Circuit`] is
//! immutable once built and can be shared across threads for evaluation,
//! garbling and cost accounting.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

/// Dense wire index. Every gate's inputs have smaller indices than its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WireId(pub u32);

impl WireId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for WireId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Xor,
    And,
    Inv,
    Const0,
    Const1,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Xor | GateKind::And => 2,
            GateKind::Inv => 1,
            GateKind::Const0 | GateKind::Const1 => 0,
        }
    }

    /// Only AND gates produce garbled-table material.
    pub fn is_free(self) -> bool {
        self != GateKind::And
    }

    fn mnemonic(self) -> &'static str {
        match self {
            GateKind::Xor => "XOR",
            GateKind::And => "AND",
            GateKind::Inv => "INV",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }
}

/// A single gate. Unused input slots are ignored according to `kind.arity()`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: [WireId; 2],
    pub output: WireId,
}

impl Gate {
    pub fn xor(a: WireId, b: WireId, output: WireId) -> Self {
        Gate { kind: GateKind::Xor, inputs: [a, b], output }
    }

    pub fn and(a: WireId, b: WireId, output: WireId) -> Self {
        Gate { kind: GateKind::And, inputs: [a, b], output }
    }

    pub fn inv(a: WireId, output: WireId) -> Self {
        Gate { kind: GateKind::Inv, inputs: [a, a], output }
    }

    pub fn constant(value: bool, output: WireId) -> Self {
        let kind = if value { GateKind::Const1 } else { GateKind::Const0 };
        Gate { kind, inputs: [output, output], output }
    }

    /// Input wires actually read by this gate.
    pub fn used_inputs(&self) -> &[WireId] {
        &self.inputs[..self.kind.arity()]
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.mnemonic())?;
        for w in self.used_inputs() {
            write!(f, " {w}")?;
        }
        write!(f, " -> {}", self.output)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("wire {0} is assigned more than once")]
    DuplicateWire(WireId),
    #[error("gate {gate} reads wire {wire} before it is defined")]
    DanglingInput { gate: usize, wire: WireId },
    #[error("gate {gate} has arity {got}, {kind:?} expects {expected}")]
    WrongArity { gate: usize, kind: GateKind, expected: usize, got: usize },
    #[error("wire {0} is never assigned")]
    UndefinedWire(WireId),
    #[error("output wire {0} does not exist")]
    UnknownOutput(WireId),
    #[error("input length mismatch: expected {expected} bits, got {got}")]
    InputLength { expected: usize, got: usize },
}

/// How a wire acquires its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Undefined,
    Garbler,
    Evaluator,
    Gate,
}

/// Validated Boolean circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    num_wires: usize,
    gates: Vec<Gate>,
    garbler_inputs: Vec<WireId>,
    evaluator_inputs: Vec<WireId>,
    outputs: Vec<WireId>,
}

/// Cost summary: AND count, AND-depth over output paths, total gates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CircuitStats {
    pub and_count: u64,
    pub and_depth: u32,
    pub total_gates: u64,
}

/// One raw gate record as accepted by [`Circuit::build`]. Unlike [`Gate`] the
/// arity is explicit so malformed streams can be reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawGate {
    pub kind: GateKind,
    pub inputs: Vec<WireId>,
    pub output: WireId,
}

impl From<Gate> for RawGate {
    fn from(g: Gate) -> Self {
        RawGate { kind: g.kind, inputs: g.used_inputs().to_vec(), output: g.output }
    }
}

impl Circuit {
    /// Validates a gate stream and its input/output partition.
    ///
    /// Input wires may appear anywhere in the dense index space, but every
    /// wire below the highest index must be assigned exactly once, either as
    /// an input or as a gate output, and every gate may only read wires with
    /// smaller indices that are already assigned.
    pub fn build<I>(
        gate_stream: I,
        garbler_inputs: Vec<WireId>,
        evaluator_inputs: Vec<WireId>,
        outputs: Vec<WireId>,
    ) -> Result<Circuit, CircuitError>
    where
        I: IntoIterator,
        I::Item: Into<RawGate>,
    {
        let mut gates = Vec::new();
        for (idx, raw) in gate_stream.into_iter().enumerate() {
            let raw: RawGate = raw.into();
            let expected = raw.kind.arity();
            if raw.inputs.len() != expected {
                return Err(CircuitError::WrongArity {
                    gate: idx,
                    kind: raw.kind,
                    expected,
                    got: raw.inputs.len(),
                });
            }
            let mut inputs = [raw.output; 2];
            for (slot, w) in raw.inputs.iter().enumerate() {
                inputs[slot] = *w;
            }
            if expected == 1 {
                inputs[1] = inputs[0];
            }
            gates.push(Gate { kind: raw.kind, inputs, output: raw.output });
        }
        Self::from_parts(gates, garbler_inputs, evaluator_inputs, outputs)
    }

    pub(crate) fn from_parts(
        gates: Vec<Gate>,
        garbler_inputs: Vec<WireId>,
        evaluator_inputs: Vec<WireId>,
        outputs: Vec<WireId>,
    ) -> Result<Circuit, CircuitError> {
        let num_wires = garbler_inputs
            .iter()
            .chain(&evaluator_inputs)
            .chain(gates.iter().map(|g| &g.output))
            .map(|w| w.index() + 1)
            .max()
            .unwrap_or(0);

        let mut source = vec![Source::Undefined; num_wires];
        for (list, tag) in [(&garbler_inputs, Source::Garbler), (&evaluator_inputs, Source::Evaluator)] {
            for &w in list.iter() {
                if source[w.index()] != Source::Undefined {
                    return Err(CircuitError::DuplicateWire(w));
                }
                source[w.index()] = tag;
            }
        }

        // Inputs are defined up front; gates must respect index order so the
        // gate list is a topological order.
        for (idx, g) in gates.iter().enumerate() {
            for &w in g.used_inputs() {
                if w >= g.output || source[w.index()] == Source::Undefined {
                    return Err(CircuitError::DanglingInput { gate: idx, wire: w });
                }
            }
            if source[g.output.index()] != Source::Undefined {
                return Err(CircuitError::DuplicateWire(g.output));
            }
            source[g.output.index()] = Source::Gate;
        }

        if let Some(pos) = source.iter().position(|s| *s == Source::Undefined) {
            return Err(CircuitError::UndefinedWire(WireId(pos as u32)));
        }
        if let Some(&w) = outputs.iter().find(|w| w.index() >= num_wires) {
            return Err(CircuitError::UnknownOutput(w));
        }

        Ok(Circuit { num_wires, gates, garbler_inputs, evaluator_inputs, outputs })
    }

    /// Re-runs validation on this circuit's own parts.
    pub fn revalidate(&self) -> Result<(), CircuitError> {
        Self::from_parts(
            self.gates.clone(),
            self.garbler_inputs.clone(),
            self.evaluator_inputs.clone(),
            self.outputs.clone(),
        )
        .map(|_| ())
    }

    pub fn num_wires(&self) -> usize {
        self.num_wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn garbler_inputs(&self) -> &[WireId] {
        &self.garbler_inputs
    }

    pub fn evaluator_inputs(&self) -> &[WireId] {
        &self.evaluator_inputs
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    pub fn and_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == GateKind::And).count()
    }

    /// Evaluates the circuit in the clear.
    pub fn eval_plaintext(
        &self,
        garbler_bits: &[bool],
        evaluator_bits: &[bool],
    ) -> Result<Vec<bool>, CircuitError> {
        check_len(self.garbler_inputs.len(), garbler_bits.len())?;
        check_len(self.evaluator_inputs.len(), evaluator_bits.len())?;

        let mut values = vec![false; self.num_wires];
        for (w, &b) in self.garbler_inputs.iter().zip(garbler_bits) {
            values[w.index()] = b;
        }
        for (w, &b) in self.evaluator_inputs.iter().zip(evaluator_bits) {
            values[w.index()] = b;
        }
        for g in &self.gates {
            let [a, b] = g.inputs;
            values[g.output.index()] = match g.kind {
                GateKind::Xor => values[a.index()] ^ values[b.index()],
                GateKind::And => values[a.index()] & values[b.index()],
                GateKind::Inv => !values[a.index()],
                GateKind::Const0 => false,
                GateKind::Const1 => true,
            };
        }
        Ok(self.outputs.iter().map(|w| values[w.index()]).collect())
    }

    /// Per-wire AND-depth: inputs and constants are depth 0, XOR/INV take the
    /// max of their inputs, AND adds one.
    pub fn wire_depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.num_wires];
        for g in &self.gates {
            let d = g.used_inputs().iter().map(|w| depth[w.index()]).max().unwrap_or(0);
            depth[g.output.index()] = if g.kind == GateKind::And { d + 1 } else { d };
        }
        depth
    }

    pub fn stats(&self) -> CircuitStats {
        let depth = self.wire_depths();
        CircuitStats {
            and_count: self.and_count() as u64,
            and_depth: self.outputs.iter().map(|w| depth[w.index()]).max().unwrap_or(0),
            total_gates: self.gates.len() as u64,
        }
    }

    /// Writes one gate per line as `<KIND> <in...> -> <out>`, preceded by the
    /// input and output wire lists.
    pub fn write_netlist<W: Write>(&self, mut out: W) -> io::Result<()> {
        let list = |ws: &[WireId]| ws.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "# garbler {}", list(&self.garbler_inputs))?;
        writeln!(out, "# evaluator {}", list(&self.evaluator_inputs))?;
        for g in &self.gates {
            writeln!(out, "{g}")?;
        }
        writeln!(out, "# outputs {}", list(&self.outputs))
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), CircuitError> {
    if expected != got {
        return Err(CircuitError::InputLength { expected, got });
    }
    Ok(())
}

/// A random valid circuit with `gates` gates over the given input counts,
/// for differential testing. Gate inputs are drawn from all earlier wires.
pub fn random_circuit<R: rand::Rng>(
    rng: &mut R,
    garbler_inputs: usize,
    evaluator_inputs: usize,
    gates: usize,
    outputs: usize,
) -> Circuit {
    assert!(garbler_inputs + evaluator_inputs > 0, "need at least one input");
    let mut b = CircuitBuilder::new();
    let mut wires: Vec<WireId> = (0..garbler_inputs).map(|_| b.garbler_input()).collect();
    wires.extend((0..evaluator_inputs).map(|_| b.evaluator_input()));
    for _ in 0..gates {
        let a = wires[rng.gen_range(0..wires.len())];
        let c = wires[rng.gen_range(0..wires.len())];
        let w = match rng.gen_range(0..10) {
            0..=3 => b.and(a, c),
            4..=7 => b.xor(a, c),
            8 => b.inv(a),
            _ => {
                let k = b.constant(rng.gen());
                b.xor(k, a)
            }
        };
        wires.push(w);
    }
    for _ in 0..outputs {
        let w = wires[rng.gen_range(0..wires.len())];
        b.output(w);
    }
    b.finish().expect("generated circuit is valid")
}

/// Gate-emitting interface shared by the materializing [`CircuitBuilder`] and
/// the allocation-free [`GateCounter`]. Every block builder is generic over it.
pub trait GateSink {
    type Wire: Copy;

    fn garbler_input(&mut self) -> Self::Wire;
    fn evaluator_input(&mut self) -> Self::Wire;
    fn xor(&mut self, a: Self::Wire, b: Self::Wire) -> Self::Wire;
    fn and(&mut self, a: Self::Wire, b: Self::Wire) -> Self::Wire;
    fn inv(&mut self, a: Self::Wire) -> Self::Wire;
    fn constant(&mut self, value: bool) -> Self::Wire;
    fn output(&mut self, w: Self::Wire);

    /// `a ∨ b` via De Morgan; one AND gate.
    fn or(&mut self, a: Self::Wire, b: Self::Wire) -> Self::Wire {
        let na = self.inv(a);
        let nb = self.inv(b);
        let n = self.and(na, nb);
        self.inv(n)
    }
}

/// Builds a [`Circuit`] incrementally. Constants are emitted once and reused.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    next: u32,
    gates: Vec<Gate>,
    garbler_inputs: Vec<WireId>,
    evaluator_inputs: Vec<WireId>,
    outputs: Vec<WireId>,
    consts: [Option<WireId>; 2],
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> WireId {
        let w = WireId(self.next);
        self.next = self.next.checked_add(1).expect("wire index overflow");
        w
    }

    fn push(&mut self, gate: Gate) -> WireId {
        self.gates.push(gate);
        gate.output
    }

    pub fn finish(self) -> Result<Circuit, CircuitError> {
        Circuit::from_parts(self.gates, self.garbler_inputs, self.evaluator_inputs, self.outputs)
    }
}

impl GateSink for CircuitBuilder {
    type Wire = WireId;

    fn garbler_input(&mut self) -> WireId {
        let w = self.fresh();
        self.garbler_inputs.push(w);
        w
    }

    fn evaluator_input(&mut self) -> WireId {
        let w = self.fresh();
        self.evaluator_inputs.push(w);
        w
    }

    fn xor(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.push(Gate::xor(a, b, out))
    }

    fn and(&mut self, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.push(Gate::and(a, b, out))
    }

    fn inv(&mut self, a: WireId) -> WireId {
        let out = self.fresh();
        self.push(Gate::inv(a, out))
    }

    fn constant(&mut self, value: bool) -> WireId {
        if let Some(w) = self.consts[value as usize] {
            return w;
        }
        let out = self.fresh();
        let w = self.push(Gate::constant(value, out));
        self.consts[value as usize] = Some(w);
        w
    }

    fn output(&mut self, w: WireId) {
        self.outputs.push(w);
    }
}

/// Counts gates and tracks AND-depth without materializing the circuit; the
/// wire handle is the wire's AND-depth. Produces the same [`CircuitStats`] as
/// building the circuit and calling [`Circuit::stats`].
#[derive(Debug, Default, Clone)]
pub struct GateCounter {
    and_count: u64,
    total_gates: u64,
    output_depth: u32,
    consts: [bool; 2],
    garbler_inputs: u64,
    evaluator_inputs: u64,
}

impl GateCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> CircuitStats {
        CircuitStats {
            and_count: self.and_count,
            and_depth: self.output_depth,
            total_gates: self.total_gates,
        }
    }

    pub fn garbler_inputs(&self) -> u64 {
        self.garbler_inputs
    }

    pub fn evaluator_inputs(&self) -> u64 {
        self.evaluator_inputs
    }
}

impl GateSink for GateCounter {
    type Wire = u32;

    fn garbler_input(&mut self) -> u32 {
        self.garbler_inputs += 1;
        0
    }

    fn evaluator_input(&mut self) -> u32 {
        self.evaluator_inputs += 1;
        0
    }

    fn xor(&mut self, a: u32, b: u32) -> u32 {
        self.total_gates += 1;
        a.max(b)
    }

    fn and(&mut self, a: u32, b: u32) -> u32 {
        self.total_gates += 1;
        self.and_count += 1;
        a.max(b) + 1
    }

    fn inv(&mut self, a: u32) -> u32 {
        self.total_gates += 1;
        a
    }

    fn constant(&mut self, value: bool) -> u32 {
        if !self.consts[value as usize] {
            self.consts[value as usize] = true;
            self.total_gates += 1;
        }
        0
    }

    fn output(&mut self, w: u32) {
        self.output_depth = self.output_depth.max(w);
    }
}

/// Evaluates gates as they are emitted, with `bool` as the wire handle.
/// Inputs are consumed from the supplied bit vectors in allocation order.
#[derive(Debug, Default)]
pub struct PlainSink {
    garbler: Vec<bool>,
    evaluator: Vec<bool>,
    next_garbler: usize,
    next_evaluator: usize,
    outputs: Vec<bool>,
    overrun: bool,
}

impl PlainSink {
    pub fn new(garbler: Vec<bool>, evaluator: Vec<bool>) -> Self {
        PlainSink { garbler, evaluator, ..Default::default() }
    }

    /// Output bits, or an error if the number of inputs requested by the
    /// builder differs from what was supplied.
    pub fn finish(self) -> Result<Vec<bool>, CircuitError> {
        if self.overrun || self.next_garbler != self.garbler.len() {
            return Err(CircuitError::InputLength { expected: self.next_garbler, got: self.garbler.len() });
        }
        if self.next_evaluator != self.evaluator.len() {
            return Err(CircuitError::InputLength { expected: self.next_evaluator, got: self.evaluator.len() });
        }
        Ok(self.outputs)
    }
}

impl GateSink for PlainSink {
    type Wire = bool;

    fn garbler_input(&mut self) -> bool {
        let bit = self.garbler.get(self.next_garbler).copied();
        self.next_garbler += 1;
        self.overrun |= bit.is_none();
        bit.unwrap_or(false)
    }

    fn evaluator_input(&mut self) -> bool {
        let bit = self.evaluator.get(self.next_evaluator).copied();
        self.next_evaluator += 1;
        self.overrun |= bit.is_none();
        bit.unwrap_or(false)
    }

    fn xor(&mut self, a: bool, b: bool) -> bool {
        a ^ b
    }

    fn and(&mut self, a: bool, b: bool) -> bool {
        a & b
    }

    fn inv(&mut self, a: bool) -> bool {
        !a
    }

    fn constant(&mut self, value: bool) -> bool {
        value
    }

    fn output(&mut self, w: bool) {
        self.outputs.push(w);
    }
}
