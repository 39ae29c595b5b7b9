//! Jaccard scoring of a traffic window against peer blacklists.

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ThresholdError {
    #[error("threshold `{0}` is not a decimal or fraction")]
    Syntax(String),
    #[error("threshold {0} lies outside [0, 1]")]
    Range(String),
}

/// Parses `0.4`, `2/5`, `1` or `0` exactly.
pub fn parse_threshold(s: &str) -> Result<Ratio<u64>, ThresholdError> {
    let s = s.trim();
    let syntax = || ThresholdError::Syntax(s.to_string());
    let t = if let Some((n, d)) = s.split_once('/') {
        let (n, d): (u64, u64) = (n.trim().parse().map_err(|_| syntax())?, d.trim().parse().map_err(|_| syntax())?);
        if d == 0 {
            return Err(syntax());
        }
        Ratio::new(n, d)
    } else {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(syntax());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| syntax())? };
        let scale = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| syntax())? };
        Ratio::new(int.checked_mul(scale).and_then(|x| x.checked_add(frac)).ok_or_else(syntax)?, scale)
    };
    if t > Ratio::from_integer(1) {
        return Err(ThresholdError::Range(s.to_string()));
    }
    Ok(t)
}

/// `c / (n₁ + n₂ − c)` from the revealed cardinality and the public sizes.
pub fn jaccard_from_cardinality(c: u64, n1: u64, n2: u64) -> Option<Ratio<u64>> {
    let union = (n1 + n2).checked_sub(c)?;
    (union > 0 && c <= n1.min(n2)).then(|| Ratio::new(c, union))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    Anomalous,
    Regular,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Anomalous => "anomalous",
            Label::Regular => "regular",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnomalyVerdict {
    pub peer: String,
    pub jaccard: Ratio<u64>,
    pub threshold: Ratio<u64>,
    pub label: Label,
}

impl AnomalyVerdict {
    /// Anomalous iff the similarity strictly exceeds the threshold.
    pub fn new(peer: impl Into<String>, jaccard: Ratio<u64>, threshold: Ratio<u64>) -> Self {
        let label = if jaccard > threshold { Label::Anomalous } else { Label::Regular };
        AnomalyVerdict { peer: peer.into(), jaccard, threshold, label }
    }
}

impl fmt::Display for AnomalyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "peer {}: jaccard {} vs threshold {} -> {}", self.peer, self.jaccard, self.threshold, self.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(parse_threshold("0.4").unwrap(), Ratio::new(2, 5));
        assert_eq!(parse_threshold("2/5").unwrap(), Ratio::new(2, 5));
        assert_eq!(parse_threshold("1").unwrap(), Ratio::from_integer(1));
        assert_eq!(parse_threshold(".5").unwrap(), Ratio::new(1, 2));
        assert_eq!(parse_threshold("0.").unwrap(), Ratio::from_integer(0));
        assert!(matches!(parse_threshold("1.5"), Err(ThresholdError::Range(_))));
        for bad in ["", ".", "x", "-0.1", "1/0", "0.1.2"] {
            assert!(matches!(parse_threshold(bad), Err(ThresholdError::Syntax(_))), "{bad}");
        }
    }

    #[test]
    fn jaccard_and_labels() {
        let j = jaccard_from_cardinality(2, 3, 3).unwrap();
        assert_eq!(j, Ratio::new(1, 2));
        assert_eq!(AnomalyVerdict::new("2", j, Ratio::new(2, 5)).label, Label::Anomalous);
        assert_eq!(AnomalyVerdict::new("2", j, Ratio::new(1, 2)).label, Label::Regular);
        assert_eq!(jaccard_from_cardinality(0, 0, 0), None);
        assert_eq!(jaccard_from_cardinality(4, 3, 5), None);
        assert!(AnomalyVerdict::new("p", j, Ratio::new(2, 5)).to_string().contains("1/2"));
    }
}
