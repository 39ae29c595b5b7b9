//! Brute-force ground truth for tests. Nothing here touches the circuit path.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_rational::Ratio;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

/// Significance level for uniformity tests.
pub const ALPHA: f64 = 0.001;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("Jaccard similarity of two empty sets is undefined")]
    EmptySets,
    #[error("n = {0} is outside 1..=5")]
    TooLarge(usize),
    #[error("{got} samples, need at least {needed}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample {0} is not a permutation of 0..n")]
    NotAPermutation(usize),
}

/// An expected/observed comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport<T> {
    pub expected: T,
    pub observed: T,
    pub pass: bool,
    pub context: String,
}

impl<T: PartialEq> OracleReport<T> {
    pub fn compare(expected: T, observed: T, context: impl Into<String>) -> Self {
        let pass = expected == observed;
        OracleReport { expected, observed, pass, context: context.into() }
    }
}

impl<T: fmt::Debug> fmt::Display for OracleReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "ok" } else { "MISMATCH" };
        write!(f, "{verdict} [{}]: expected {:?}, observed {:?}", self.context, self.expected, self.observed)
    }
}

/// m-way intersection by hashing. An empty list of sets yields the empty set.
pub fn intersect_oracle(sets: &[Vec<u128>]) -> BTreeSet<u128> {
    let Some((first, rest)) = sets.split_first() else {
        return BTreeSet::new();
    };
    let mut counts: HashMap<u128, usize> = first.iter().map(|&x| (x, 1)).collect();
    for s in rest {
        let unique: HashSet<u128> = s.iter().copied().collect();
        for x in unique {
            if let Some(c) = counts.get_mut(&x) {
                *c += 1;
            }
        }
    }
    counts.into_iter().filter(|&(_, c)| c == sets.len()).map(|(x, _)| x).collect()
}

/// m-way intersection by repeated sorted merges; a cross-check for
/// [`intersect_oracle`].
pub fn intersect_sorted_merge(sets: &[Vec<u128>]) -> Vec<u128> {
    let sorted = |s: &Vec<u128>| {
        let mut v = s.clone();
        v.sort_unstable();
        v.dedup();
        v
    };
    let Some((first, rest)) = sets.split_first() else {
        return Vec::new();
    };
    rest.iter().fold(sorted(first), |acc, s| {
        let other = sorted(s);
        let (mut i, mut j, mut out) = (0, 0, Vec::new());
        while i < acc.len() && j < other.len() {
            match acc[i].cmp(&other[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(acc[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out
    })
}

/// `|A∩B| / |A∪B|`, exact.
pub fn jaccard_oracle(a: &[u128], b: &[u128]) -> Result<Ratio<u64>, OracleError> {
    let a: BTreeSet<u128> = a.iter().copied().collect();
    let b: BTreeSet<u128> = b.iter().copied().collect();
    let union = a.union(&b).count() as u64;
    if union == 0 {
        return Err(OracleError::EmptySets);
    }
    Ok(Ratio::new(a.intersection(&b).count() as u64, union))
}

/// Evaluates a textual netlist gate by gate with a map of wire values.
/// Independent of the in-memory circuit representation.
pub fn interpret_netlist(text: &str, garbler: &[bool], evaluator: &[bool]) -> Result<Vec<bool>, String> {
    let ids = |rest: &str| -> Result<Vec<u32>, String> {
        rest.split_whitespace().map(|t| t.parse::<u32>().map_err(|e| format!("bad wire `{t}`: {e}"))).collect()
    };
    let mut values: HashMap<u32, bool> = HashMap::new();
    let mut outputs = None;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# garbler") {
            let w = ids(rest)?;
            if w.len() != garbler.len() {
                return Err(format!("{} garbler bits for {} wires", garbler.len(), w.len()));
            }
            values.extend(w.into_iter().zip(garbler.iter().copied()));
        } else if let Some(rest) = line.strip_prefix("# evaluator") {
            let w = ids(rest)?;
            if w.len() != evaluator.len() {
                return Err(format!("{} evaluator bits for {} wires", evaluator.len(), w.len()));
            }
            values.extend(w.into_iter().zip(evaluator.iter().copied()));
        } else if let Some(rest) = line.strip_prefix("# outputs") {
            outputs = Some(ids(rest)?);
        } else {
            let (lhs, out) = line.split_once(" -> ").ok_or_else(|| format!("bad line `{line}`"))?;
            let out: u32 = out.trim().parse().map_err(|_| format!("bad output in `{line}`"))?;
            let mut parts = lhs.split_whitespace();
            let op = parts.next().ok_or_else(|| format!("empty gate `{line}`"))?;
            let args = parts
                .map(|t| t.parse::<u32>().ok().and_then(|w| values.get(&w).copied()))
                .collect::<Option<Vec<bool>>>()
                .ok_or_else(|| format!("undefined input in `{line}`"))?;
            let v = match (op, args.as_slice()) {
                ("XOR", [a, b]) => a != b,
                ("AND", [a, b]) => *a && *b,
                ("INV", [a]) => !a,
                ("CONST0", []) => false,
                ("CONST1", []) => true,
                _ => return Err(format!("unknown gate `{line}`")),
            };
            values.insert(out, v);
        }
    }
    outputs
        .ok_or("missing outputs line")?
        .iter()
        .map(|w| values.get(w).copied().ok_or_else(|| format!("output {w} undefined")))
        .collect()
}

/// Number of ones.
pub fn popcount_oracle(bits: &[bool]) -> u64 {
    bits.iter().filter(|&&b| b).count() as u64
}

/// Ascending with all zeros (dummies) first. Zeros are the minimum anyway,
/// so this is a plain stable sort.
pub fn sort_oracle(v: &[u128]) -> Vec<u128> {
    let mut out = v.to_vec();
    out.sort();
    out
}

pub fn is_sorted(v: &[u128]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Same multiset of values.
pub fn same_multiset(a: &[u128], b: &[u128]) -> bool {
    let count = |v: &[u128]| {
        let mut m: HashMap<u128, usize> = HashMap::new();
        for &x in v {
            *m.entry(x).or_default() += 1;
        }
        m
    };
    a.len() == b.len() && count(a) == count(b)
}

/// All `2^len` 0-1 vectors, as integers with bit `i` = position `i`.
pub fn zero_one_vectors(len: usize) -> impl Iterator<Item = Vec<u128>> {
    assert!(len < 32, "0-1 enumeration is exponential");
    (0u64..1 << len).map(move |mask| (0..len).map(|i| ((mask >> i) & 1) as u128).collect())
}

/// Outcome of a chi-square goodness-of-fit test against the uniform
/// distribution on permutations.
#[derive(Clone, Debug, PartialEq)]
pub struct Uniformity {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// Lexicographic rank of a permutation of `0..n`, computed by counting.
pub fn permutation_rank(p: &[usize]) -> Option<usize> {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut rank = 0;
    for (i, &x) in p.iter().enumerate() {
        if x >= n || seen[x] {
            return None;
        }
        let smaller_unused = (0..x).filter(|&y| !seen[y]).count();
        rank = rank * (n - i) + smaller_unused;
        seen[x] = true;
    }
    Some(rank)
}

/// Chi-square test over the `n!` cells; passes iff the p-value exceeds
/// [`ALPHA`].
pub fn uniformity_check(samples: &[Vec<usize>], n: usize) -> Result<Uniformity, OracleError> {
    if !(1..=5).contains(&n) {
        return Err(OracleError::TooLarge(n));
    }
    let cells: usize = (1..=n).product();
    if samples.len() < 10 * cells {
        return Err(OracleError::TooFewSamples { needed: 10 * cells, got: samples.len() });
    }
    let mut counts = vec![0u64; cells];
    for (i, s) in samples.iter().enumerate() {
        if s.len() != n {
            return Err(OracleError::NotAPermutation(i));
        }
        counts[permutation_rank(s).ok_or(OracleError::NotAPermutation(i))?] += 1;
    }
    let expected = samples.len() as f64 / cells as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let degrees_of_freedom = cells - 1;
    let p_value = if degrees_of_freedom == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(degrees_of_freedom as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    Ok(Uniformity { statistic, degrees_of_freedom, p_value, pass: p_value > ALPHA })
}
