//! Circuit blocks for the Sort-Compare-Shuffle pipeline.
//!
//! All builders are generic over [`GateSink`] so the same code drives both
//! circuit materialization and gate counting. Buses are LSB first.

use thiserror::Error;

use crate::circuit::GateSink;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BlockError {
    #[error("bus width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("list length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("network size {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("expected {expected} switch controls, got {got}")]
    ControlCount { expected: usize, got: usize },
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
}

/// One σ-bit element on the wires, least significant bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bus<W>(pub Vec<W>);

impl<W: Copy> Bus<W> {
    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn wires(&self) -> &[W] {
        &self.0
    }

    pub fn constant<S: GateSink<Wire = W>>(sink: &mut S, value: u128, width: usize) -> Self {
        Bus((0..width).map(|i| sink.constant((value >> i) & 1 == 1)).collect())
    }

    pub fn xor<S: GateSink<Wire = W>>(sink: &mut S, x: &Self, y: &Self) -> Result<Self, BlockError> {
        same_width(x, y)?;
        Ok(Bus(x.0.iter().zip(&y.0).map(|(&a, &b)| sink.xor(a, b)).collect()))
    }
}

fn same_width<W>(x: &Bus<W>, y: &Bus<W>) -> Result<(), BlockError> {
    if x.0.len() != y.0.len() {
        return Err(BlockError::WidthMismatch(x.0.len(), y.0.len()));
    }
    Ok(())
}

fn check_pow2(n: usize) -> Result<u32, BlockError> {
    if n < 2 || !n.is_power_of_two() {
        return Err(BlockError::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// `x > y` as unsigned integers; one AND per bit.
pub fn build_gt<S: GateSink>(s: &mut S, x: &Bus<S::Wire>, y: &Bus<S::Wire>) -> Result<S::Wire, BlockError> {
    same_width(x, y)?;
    // c_{i+1} = x_i ^ ((x_i ^ c_i) & (y_i ^ c_i)), c_0 = 0
    let mut carry: Option<S::Wire> = None;
    for (&xi, &yi) in x.0.iter().zip(&y.0) {
        let next = match carry {
            None => {
                let t = s.and(xi, yi);
                s.xor(xi, t)
            }
            Some(c) => {
                let a = s.xor(xi, c);
                let b = s.xor(yi, c);
                let t = s.and(a, b);
                s.xor(xi, t)
            }
        };
        carry = Some(next);
    }
    Ok(carry.unwrap_or_else(|| s.constant(false)))
}

/// AND of all wires by balanced tree; `len - 1` AND gates.
fn and_tree<S: GateSink>(s: &mut S, mut layer: Vec<S::Wire>) -> S::Wire {
    if layer.is_empty() {
        return s.constant(true);
    }
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        for pair in layer.chunks(2) {
            next.push(if pair.len() == 2 { s.and(pair[0], pair[1]) } else { pair[0] });
        }
        layer = next;
    }
    layer[0]
}

/// `x == y`; σ−1 AND gates.
pub fn build_eq<S: GateSink>(s: &mut S, x: &Bus<S::Wire>, y: &Bus<S::Wire>) -> Result<S::Wire, BlockError> {
    same_width(x, y)?;
    let xnor: Vec<_> = x
        .0
        .iter()
        .zip(&y.0)
        .map(|(&a, &b)| {
            let d = s.xor(a, b);
            s.inv(d)
        })
        .collect();
    Ok(and_tree(s, xnor))
}

/// 1 iff any bit is set; σ−1 AND gates.
pub fn build_nonzero<S: GateSink>(s: &mut S, x: &Bus<S::Wire>) -> S::Wire {
    let inverted: Vec<_> = x.0.iter().map(|&b| s.inv(b)).collect();
    let all_zero = and_tree(s, inverted);
    s.inv(all_zero)
}

/// `sel ? x : y`; σ AND gates.
pub fn build_mux<S: GateSink>(
    s: &mut S,
    sel: S::Wire,
    x: &Bus<S::Wire>,
    y: &Bus<S::Wire>,
) -> Result<Bus<S::Wire>, BlockError> {
    same_width(x, y)?;
    Ok(Bus(
        x.0.iter()
            .zip(&y.0)
            .map(|(&xi, &yi)| {
                let d = s.xor(xi, yi);
                let t = s.and(sel, d);
                s.xor(yi, t)
            })
            .collect(),
    ))
}

/// Swaps `x` and `y` when `sel` is 1; σ AND gates.
pub fn build_cond_swap<S: GateSink>(
    s: &mut S,
    sel: S::Wire,
    x: &Bus<S::Wire>,
    y: &Bus<S::Wire>,
) -> Result<(Bus<S::Wire>, Bus<S::Wire>), BlockError> {
    same_width(x, y)?;
    let mut lo = Vec::with_capacity(x.width());
    let mut hi = Vec::with_capacity(x.width());
    for (&xi, &yi) in x.0.iter().zip(&y.0) {
        let d = s.xor(xi, yi);
        let t = s.and(sel, d);
        lo.push(s.xor(xi, t));
        hi.push(s.xor(yi, t));
    }
    Ok((Bus(lo), Bus(hi)))
}

/// Outputs `(min, max)`; 2σ AND gates.
pub fn build_2sorter<S: GateSink>(
    s: &mut S,
    x: &Bus<S::Wire>,
    y: &Bus<S::Wire>,
) -> Result<(Bus<S::Wire>, Bus<S::Wire>), BlockError> {
    let gt = build_gt(s, x, y)?;
    build_cond_swap(s, gt, x, y)
}

/// Given three consecutive entries of a sorted sequence, emits the middle one
/// if it equals either neighbour and the dummy `0^σ` otherwise, together with
/// the match bit. 3σ−1 AND gates.
pub fn build_3dupselection<S: GateSink>(
    s: &mut S,
    a: &Bus<S::Wire>,
    b: &Bus<S::Wire>,
    c: &Bus<S::Wire>,
) -> Result<(Bus<S::Wire>, S::Wire), BlockError> {
    same_width(a, b)?;
    same_width(b, c)?;
    let left = build_eq(s, a, b)?;
    let right = build_eq(s, b, c)?;
    let matched = s.or(left, right);
    let out = Bus(b.0.iter().map(|&bi| s.and(matched, bi)).collect());
    Ok((out, matched))
}

fn compare_exchange<S: GateSink>(
    s: &mut S,
    v: &mut [Bus<S::Wire>],
    i: usize,
    j: usize,
    ascending: bool,
) -> Result<(), BlockError> {
    let (lo, hi) = build_2sorter(s, &v[i], &v[j])?;
    if ascending {
        v[i] = lo;
        v[j] = hi;
    } else {
        v[i] = hi;
        v[j] = lo;
    }
    Ok(())
}

/// Half-cleaner cascade that sorts a bitonic sequence of power-of-two length.
fn bitonic_clean<S: GateSink>(
    s: &mut S,
    v: &mut [Bus<S::Wire>],
    ascending: bool,
) -> Result<(), BlockError> {
    let n = v.len();
    let mut half = n / 2;
    while half >= 1 {
        for block in (0..n).step_by(2 * half) {
            for i in block..block + half {
                compare_exchange(s, v, i, i + half, ascending)?;
            }
        }
        half /= 2;
    }
    Ok(())
}

/// Merges two ascending lists of equal power-of-two length into one
/// ascending list of `2n` entries. Uses `n·log₂(2n)` 2-Sorters.
pub fn build_bitonic_merger<S: GateSink>(
    s: &mut S,
    a: &[Bus<S::Wire>],
    b: &[Bus<S::Wire>],
) -> Result<Vec<Bus<S::Wire>>, BlockError> {
    if a.len() != b.len() {
        return Err(BlockError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() != 1 {
        check_pow2(a.len())?;
    }
    let mut v: Vec<_> = a.iter().cloned().chain(b.iter().rev().cloned()).collect();
    bitonic_clean(s, &mut v, true)?;
    Ok(v)
}

/// Full bitonic sorting network keyed on the element value.
pub fn build_bitonic_sort<S: GateSink>(
    s: &mut S,
    v: &[Bus<S::Wire>],
) -> Result<Vec<Bus<S::Wire>>, BlockError> {
    let n = v.len();
    let mut v = v.to_vec();
    if n <= 1 {
        return Ok(v);
    }
    check_pow2(n)?;
    let mut k = 2;
    while k <= n {
        let mut j = k / 2;
        while j >= 1 {
            for i in 0..n {
                let l = i ^ j;
                if l > i {
                    compare_exchange(s, &mut v, i, l, i & k == 0)?;
                }
            }
            j /= 2;
        }
        k *= 2;
    }
    Ok(v)
}

/// Moves every dummy `0^σ` to the front and leaves the real values ascending.
///
/// Realized as a full sort on the element value: the dummy is the smallest
/// possible value, so sorting is a valid compaction for any input.
pub fn build_compaction<S: GateSink>(
    s: &mut S,
    v: &[Bus<S::Wire>],
) -> Result<Vec<Bus<S::Wire>>, BlockError> {
    build_bitonic_sort(s, v)
}

/// Number of 2×2 switches in a Waksman network on `n` inputs.
pub fn waksman_switch_count(n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    let log = n.trailing_zeros() as usize;
    n * log - n + 1
}

/// Applies the switch network to `v`. Controls are consumed in canonical
/// order: input column, upper subnetwork, lower subnetwork, output column.
pub fn build_waksman<S: GateSink>(
    s: &mut S,
    v: &[Bus<S::Wire>],
    controls: &[S::Wire],
) -> Result<Vec<Bus<S::Wire>>, BlockError> {
    let n = v.len();
    check_pow2(n)?;
    let expected = waksman_switch_count(n);
    if controls.len() != expected {
        return Err(BlockError::ControlCount { expected, got: controls.len() });
    }
    for bus in v {
        same_width(&v[0], bus)?;
    }
    let mut swap = |pair: (Bus<S::Wire>, Bus<S::Wire>), c: &S::Wire| {
        build_cond_swap(s, *c, &pair.0, &pair.1)
    };
    let mut ctl = controls.iter();
    apply_network(v.to_vec(), &mut ctl, &mut swap)
}

/// Recursive network walk shared by the circuit builder and the plaintext
/// reference. `swap` receives each switch's two inputs and its control.
fn apply_network<T, C, E, F>(
    v: Vec<T>,
    controls: &mut std::slice::Iter<'_, C>,
    swap: &mut F,
) -> Result<Vec<T>, E>
where
    T: Clone,
    F: FnMut((T, T), &C) -> Result<(T, T), E>,
{
    let n = v.len();
    if n == 2 {
        let c = controls.next().expect("control count checked by caller");
        let (a, b) = swap((v[0].clone(), v[1].clone()), c)?;
        return Ok(vec![a, b]);
    }
    let half = n / 2;
    let mut upper = Vec::with_capacity(half);
    let mut lower = Vec::with_capacity(half);
    for i in 0..half {
        let c = controls.next().expect("control count checked by caller");
        let (a, b) = swap((v[2 * i].clone(), v[2 * i + 1].clone()), c)?;
        upper.push(a);
        lower.push(b);
    }
    let upper = apply_network(upper, controls, swap)?;
    let lower = apply_network(lower, controls, swap)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..half {
        if i + 1 == half {
            out.push(upper[i].clone());
            out.push(lower[i].clone());
        } else {
            let c = controls.next().expect("control count checked by caller");
            let (a, b) = swap((upper[i].clone(), lower[i].clone()), c)?;
            out.push(a);
            out.push(b);
        }
    }
    Ok(out)
}

/// Applies Waksman controls to a plain slice. `out[pi[i]] = v[i]` when the
/// controls come from [`route_waksman(pi)`](route_waksman).
pub fn apply_waksman_plain<T: Clone>(v: &[T], controls: &[bool]) -> Result<Vec<T>, BlockError> {
    let n = v.len();
    check_pow2(n)?;
    let expected = waksman_switch_count(n);
    if controls.len() != expected {
        return Err(BlockError::ControlCount { expected, got: controls.len() });
    }
    let mut swap = |(a, b): (T, T), c: &bool| -> Result<(T, T), BlockError> {
        Ok(if *c { (b, a) } else { (a, b) })
    };
    apply_network(v.to_vec(), &mut controls.iter(), &mut swap)
}

/// Computes switch controls realizing `pi`, where input `i` is routed to
/// output `pi[i]`. Uses the looping algorithm; deterministic.
pub fn route_waksman(pi: &[usize]) -> Result<Vec<bool>, BlockError> {
    let n = pi.len();
    check_pow2(n)?;
    let mut inverse = vec![usize::MAX; n];
    for (i, &d) in pi.iter().enumerate() {
        if d >= n || inverse[d] != usize::MAX {
            return Err(BlockError::NotAPermutation(n));
        }
        inverse[d] = i;
    }
    let mut controls = Vec::with_capacity(waksman_switch_count(n));
    route_into(pi, &inverse, &mut controls);
    Ok(controls)
}

fn route_into(pi: &[usize], inverse: &[usize], controls: &mut Vec<bool>) {
    let n = pi.len();
    if n == 2 {
        controls.push(pi[0] == 1);
        return;
    }
    let half = n / 2;
    // side[i]: false = upper subnetwork, true = lower
    let mut side: Vec<Option<bool>> = vec![None; n];

    // The last output switch is fixed straight: output n-1 must arrive from
    // the lower subnetwork. Seed the first loop with that constraint.
    let mut seed = Some((inverse[n - 1], true));
    loop {
        let (start, start_side) = match seed.take() {
            Some(s) => s,
            None => match side.iter().position(Option::is_none) {
                Some(i) => (i, false),
                None => break,
            },
        };
        let mut input = start;
        let is_lower = start_side;
        while side[input].is_none() {
            side[input] = Some(is_lower);
            // Switch partner on the input side takes the other subnetwork.
            let partner = input ^ 1;
            if side[partner].is_some() {
                break;
            }
            side[partner] = Some(!is_lower);
            // The output sharing a switch with partner's destination must be
            // fed from the opposite subnetwork to partner, i.e. `is_lower`.
            input = inverse[pi[partner] ^ 1];
        }
    }

    let mut upper_pi = vec![0usize; half];
    let mut lower_pi = vec![0usize; half];
    for i in 0..half {
        let top_lower = side[2 * i].expect("all inputs assigned");
        controls.push(top_lower);
        let (up, low) = if top_lower { (2 * i + 1, 2 * i) } else { (2 * i, 2 * i + 1) };
        upper_pi[i] = pi[up] / 2;
        lower_pi[i] = pi[low] / 2;
    }
    let sub_inverse = |p: &[usize]| {
        let mut inv = vec![0usize; p.len()];
        for (i, &d) in p.iter().enumerate() {
            inv[d] = i;
        }
        inv
    };
    let upper_inv = sub_inverse(&upper_pi);
    let lower_inv = sub_inverse(&lower_pi);
    route_into(&upper_pi, &upper_inv, controls);
    route_into(&lower_pi, &lower_inv, controls);
    for (j, &from_upper) in upper_inv.iter().enumerate().take(half - 1) {
        // Upper subnetwork output j carries the element bound for 2j or 2j+1.
        let element = if side[2 * from_upper] == Some(false) { 2 * from_upper } else { 2 * from_upper + 1 };
        controls.push(pi[element] == 2 * j + 1);
    }
}

/// Adds two little-endian numbers of possibly different widths; output is one
/// bit wider than the longer operand. One AND per bit position.
fn build_adder<S: GateSink>(s: &mut S, x: &[S::Wire], y: &[S::Wire]) -> Vec<S::Wire> {
    let (long, short) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let mut out = Vec::with_capacity(long.len() + 1);
    let mut carry: Option<S::Wire> = None;
    for (i, &a) in long.iter().enumerate() {
        match (short.get(i), carry) {
            (Some(&b), None) => {
                out.push(s.xor(a, b));
                carry = Some(s.and(a, b));
            }
            (Some(&b), Some(c)) => {
                let ab = s.xor(a, b);
                out.push(s.xor(ab, c));
                let ac = s.xor(a, c);
                let bc = s.xor(b, c);
                let t = s.and(ac, bc);
                carry = Some(s.xor(c, t));
            }
            (None, Some(c)) => {
                out.push(s.xor(a, c));
                carry = Some(s.and(a, c));
            }
            (None, None) => out.push(a),
        }
    }
    match carry {
        Some(c) => out.push(c),
        None => out.push(s.constant(false)),
    }
    out
}

/// Output width of the counter over `n` match bits: ⌈log₂(n+1)⌉.
pub fn counter_width(n: usize) -> usize {
    (usize::BITS - n.leading_zeros()) as usize
}

/// Hamming weight of `bits` via a balanced adder tree whose operands grow by
/// one bit per level.
pub fn build_counter<S: GateSink>(s: &mut S, bits: &[S::Wire]) -> Bus<S::Wire> {
    let width = counter_width(bits.len());
    if bits.is_empty() {
        return Bus(Vec::new());
    }
    let mut layer: Vec<Vec<S::Wire>> = bits.iter().map(|&b| vec![b]).collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        let mut it = layer.into_iter();
        while let Some(x) = it.next() {
            match it.next() {
                Some(y) => next.push(build_adder(s, &x, &y)),
                None => next.push(x),
            }
        }
        layer = next;
    }
    let mut sum = layer.pop().expect("nonempty");
    // The sum never exceeds n, so any bits beyond `width` are constant zero.
    sum.truncate(width);
    while sum.len() < width {
        sum.push(s.constant(false));
    }
    Bus(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, CircuitBuilder, GateCounter};

    fn to_bits(v: u128, width: usize) -> Vec<bool> {
        (0..width).map(|i| (v >> i) & 1 == 1).collect()
    }

    fn from_bits(bits: &[bool]) -> u128 {
        bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u128) << i))
    }

    /// Circuit over `k` garbler-input buses of width `w`, outputs produced by `f`.
    fn harness<F>(k: usize, w: usize, f: F) -> Circuit
    where
        F: FnOnce(&mut CircuitBuilder, Vec<Bus<crate::circuit::WireId>>) -> Vec<crate::circuit::WireId>,
    {
        let mut b = CircuitBuilder::new();
        let buses: Vec<_> = (0..k).map(|_| Bus((0..w).map(|_| b.garbler_input()).collect())).collect();
        for o in f(&mut b, buses) {
            b.output(o);
        }
        b.finish().unwrap()
    }

    fn run(c: &Circuit, values: &[u128], w: usize) -> Vec<bool> {
        let bits: Vec<bool> = values.iter().flat_map(|&v| to_bits(v, w)).collect();
        c.eval_plaintext(&bits, &[]).unwrap()
    }

    #[test]
    fn gt_examples_and_exhaustive() {
        let c = harness(2, 2, |b, v| vec![build_gt(b, &v[0], &v[1]).unwrap()]);
        assert_eq!(run(&c, &[2, 1], 2), vec![true]);
        assert_eq!(run(&c, &[3, 3], 2), vec![false]);
        let c = harness(2, 3, |b, v| vec![build_gt(b, &v[0], &v[1]).unwrap()]);
        for x in 0..8 {
            for y in 0..8 {
                assert_eq!(run(&c, &[x, y], 3), vec![x > y], "{x} > {y}");
            }
        }
        assert_eq!(c.and_count(), 3);
    }

    #[test]
    fn eq_examples() {
        let c = harness(2, 4, |b, v| vec![build_eq(b, &v[0], &v[1]).unwrap()]);
        assert_eq!(run(&c, &[0, 0], 4), vec![true]);
        assert_eq!(run(&c, &[5, 4], 4), vec![false]);
        assert_eq!(c.and_count(), 3);
    }

    #[test]
    fn mux_and_swap_examples() {
        let c = harness(3, 3, |b, v| build_mux(b, v[0].0[0], &v[1], &v[2]).unwrap().0);
        assert_eq!(from_bits(&run(&c, &[0, 7, 2], 3)), 2);
        assert_eq!(from_bits(&run(&c, &[1, 7, 2], 3)), 7);

        let c = harness(3, 4, |b, v| {
            let (x, y) = build_cond_swap(b, v[0].0[0], &v[1], &v[2]).unwrap();
            x.0.into_iter().chain(y.0).collect()
        });
        let out = run(&c, &[0, 9, 4], 4);
        assert_eq!((from_bits(&out[..4]), from_bits(&out[4..])), (9, 4));
        let c1 = harness(3, 1, |b, v| {
            let (x, y) = build_cond_swap(b, v[0].0[0], &v[1], &v[2]).unwrap();
            vec![x.0[0], y.0[0]]
        });
        assert_eq!(run(&c1, &[1, 1, 0], 1), vec![false, true]);
    }

    #[test]
    fn sorter_examples() {
        let c = harness(2, 4, |b, v| {
            let (x, y) = build_2sorter(b, &v[0], &v[1]).unwrap();
            x.0.into_iter().chain(y.0).collect()
        });
        let out = run(&c, &[5, 3], 4);
        assert_eq!((from_bits(&out[..4]), from_bits(&out[4..])), (3, 5));
        let out = run(&c, &[3, 3], 4);
        assert_eq!((from_bits(&out[..4]), from_bits(&out[4..])), (3, 3));
    }

    #[test]
    fn dupselection_examples() {
        let c = harness(3, 4, |b, v| {
            let (o, m) = build_3dupselection(b, &v[0], &v[1], &v[2]).unwrap();
            o.0.into_iter().chain([m]).collect()
        });
        let check = |vals: [u128; 3], val: u128, m: bool| {
            let out = run(&c, &vals, 4);
            assert_eq!((from_bits(&out[..4]), out[4]), (val, m), "{vals:?}");
        };
        check([2, 2, 5], 2, true);
        check([1, 2, 3], 0, false);
        check([0, 0, 4], 0, true);
    }

    #[test]
    fn width_mismatch_is_reported() {
        let mut b = CircuitBuilder::new();
        let x = Bus(vec![b.garbler_input(); 2]);
        let y = Bus(vec![b.garbler_input(); 3]);
        assert_eq!(build_gt(&mut b, &x, &y).unwrap_err(), BlockError::WidthMismatch(2, 3));
        assert_eq!(build_eq(&mut b, &x, &y).unwrap_err(), BlockError::WidthMismatch(2, 3));
        assert!(build_mux(&mut b, x.0[0], &x, &y).is_err());
        assert!(build_2sorter(&mut b, &x, &y).is_err());
        assert!(build_3dupselection(&mut b, &x, &x, &y).is_err());
    }

    #[test]
    fn and_count_formulas() {
        for sigma in [1usize, 3, 8, 32] {
            let count = |k: usize, f: &dyn Fn(&mut GateCounter, &[Bus<u32>])| {
                let mut c = GateCounter::new();
                let buses: Vec<_> = (0..k).map(|_| Bus(vec![0u32; sigma])).collect();
                f(&mut c, &buses);
                c.stats().and_count as usize
            };
            let s = sigma;
            assert_eq!(count(2, &|c, v| { build_gt(c, &v[0], &v[1]).unwrap(); }), s);
            assert_eq!(count(2, &|c, v| { build_eq(c, &v[0], &v[1]).unwrap(); }), s - 1);
            assert_eq!(count(2, &|c, v| { build_mux(c, 0, &v[0], &v[1]).unwrap(); }), s);
            assert_eq!(count(2, &|c, v| { build_cond_swap(c, 0, &v[0], &v[1]).unwrap(); }), s);
            assert_eq!(count(2, &|c, v| { build_2sorter(c, &v[0], &v[1]).unwrap(); }), 2 * s);
            assert_eq!(
                count(3, &|c, v| { build_3dupselection(c, &v[0], &v[1], &v[2]).unwrap(); }),
                3 * s - 1
            );
        }
    }

    #[test]
    fn merger_examples() {
        let c = harness(4, 4, |b, v| {
            build_bitonic_merger(b, &v[..2], &v[2..]).unwrap().into_iter().flat_map(|x| x.0).collect()
        });
        let decode = |out: Vec<bool>| out.chunks(4).map(from_bits).collect::<Vec<_>>();
        assert_eq!(decode(run(&c, &[1, 3, 2, 4], 4)), vec![1, 2, 3, 4]);
        assert_eq!(decode(run(&c, &[0, 0, 5, 9], 4)), vec![0, 0, 5, 9]);
    }

    #[test]
    fn merger_comparator_count() {
        for n in [1usize, 2, 4, 8, 16] {
            let mut c = GateCounter::new();
            let a: Vec<_> = (0..n).map(|_| Bus(vec![0u32; 5])).collect();
            build_bitonic_merger(&mut c, &a, &a).unwrap();
            let log = (2 * n).trailing_zeros() as u64;
            assert_eq!(c.stats().and_count, n as u64 * log * 10);
        }
    }

    #[test]
    fn merger_rejects_bad_lengths() {
        let mut c = GateCounter::new();
        let a: Vec<_> = (0..3).map(|_| Bus(vec![0u32; 2])).collect();
        assert_eq!(build_bitonic_merger(&mut c, &a, &a).unwrap_err(), BlockError::NotPowerOfTwo(3));
        assert_eq!(build_bitonic_merger(&mut c, &a[..2], &a).unwrap_err(), BlockError::LengthMismatch(2, 3));
    }

    #[test]
    fn compaction_examples() {
        let c = harness(4, 3, |b, v| build_compaction(b, &v).unwrap().into_iter().flat_map(|x| x.0).collect());
        let decode = |out: Vec<bool>| out.chunks(3).map(from_bits).collect::<Vec<_>>();
        assert_eq!(decode(run(&c, &[5, 0, 7, 0], 3)), vec![0, 0, 5, 7]);
        assert_eq!(decode(run(&c, &[0, 0, 0, 0], 3)), vec![0, 0, 0, 0]);
    }

    #[test]
    fn waksman_counts_and_small_cases() {
        assert_eq!(
            [2, 4, 8, 16].map(waksman_switch_count),
            [1, 5, 17, 49]
        );
        assert_eq!(route_waksman(&[1, 0]).unwrap(), vec![true]);
        assert_eq!(route_waksman(&[0, 1]).unwrap(), vec![false]);
        assert_eq!(apply_waksman_plain(&['a', 'b'], &[true]).unwrap(), vec!['b', 'a']);
        assert_eq!(apply_waksman_plain(&[1, 2, 3, 4], &[false; 5]).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn waksman_rejects_bad_input() {
        assert_eq!(route_waksman(&[0, 0]).unwrap_err(), BlockError::NotAPermutation(2));
        assert_eq!(route_waksman(&[0, 1, 2]).unwrap_err(), BlockError::NotPowerOfTwo(3));
        assert_eq!(route_waksman(&[0, 1, 2, 7]).unwrap_err(), BlockError::NotAPermutation(4));
        assert_eq!(
            apply_waksman_plain(&[1, 2, 3, 4], &[false; 4]).unwrap_err(),
            BlockError::ControlCount { expected: 5, got: 4 }
        );
    }

    #[test]
    fn waksman_circuit_matches_plain() {
        let n = 8;
        let pi = [3usize, 7, 0, 5, 1, 6, 2, 4];
        let controls = route_waksman(&pi).unwrap();
        let mut b = CircuitBuilder::new();
        let buses: Vec<_> = (0..n).map(|_| Bus((0..4).map(|_| b.garbler_input()).collect())).collect();
        let ctl: Vec<_> = controls.iter().map(|_| b.evaluator_input()).collect();
        for bus in build_waksman(&mut b, &buses, &ctl).unwrap() {
            for w in bus.0 {
                b.output(w);
            }
        }
        let c = b.finish().unwrap();
        assert_eq!(c.and_count(), 17 * 4);
        let values: Vec<u128> = (1..=8).collect();
        let out = c
            .eval_plaintext(&values.iter().flat_map(|&v| to_bits(v, 4)).collect::<Vec<_>>(), &controls)
            .unwrap();
        let got: Vec<u128> = out.chunks(4).map(from_bits).collect();
        let mut expected = vec![0u128; n];
        for (i, &d) in pi.iter().enumerate() {
            expected[d] = values[i];
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn counter_examples() {
        let mut b = CircuitBuilder::new();
        let bits: Vec<_> = (0..4).map(|_| b.garbler_input()).collect();
        for w in build_counter(&mut b, &bits).0 {
            b.output(w);
        }
        let c = b.finish().unwrap();
        assert_eq!(c.outputs().len(), 3);
        assert_eq!(from_bits(&c.eval_plaintext(&[true, false, true, true], &[]).unwrap()), 3);

        let mut b = CircuitBuilder::new();
        let bits: Vec<_> = (0..8).map(|_| b.garbler_input()).collect();
        for w in build_counter(&mut b, &bits).0 {
            b.output(w);
        }
        let c = b.finish().unwrap();
        assert_eq!(c.outputs().len(), 4);
        assert_eq!(from_bits(&c.eval_plaintext(&[false; 8], &[]).unwrap()), 0);
        assert_eq!(from_bits(&c.eval_plaintext(&[true; 8], &[]).unwrap()), 8);
    }

    #[test]
    fn counter_widths() {
        assert_eq!([1, 2, 3, 4, 7, 8, 16, 255, 256].map(counter_width), [1, 2, 2, 3, 3, 4, 5, 8, 9]);
    }

    #[test]
    fn nonzero_detects_any_bit() {
        let c = harness(1, 3, |b, v| vec![build_nonzero(b, &v[0])]);
        for x in 0..8 {
            assert_eq!(run(&c, &[x], 3), vec![x != 0]);
        }
        assert_eq!(c.and_count(), 2);
    }
}
