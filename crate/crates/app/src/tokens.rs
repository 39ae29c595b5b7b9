//! Token files and their encoding into σ-bit set elements.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("tokens `{0}` and `{1}` hash to the same element")]
    Collision(String, String),
    #[error("{got} distinct tokens exceed the set size {n}")]
    TooMany { n: usize, got: usize },
    #[error("input set is empty")]
    Empty,
    #[error("σ = {sigma} leaves no room for padding values of {parties} parties")]
    NoPaddingRoom { sigma: usize, parties: usize },
    #[error("party {party} is outside 1..={parties}")]
    Party { party: usize, parties: usize },
}

/// Newline-delimited tokens; blank lines and `#` comments are skipped and
/// duplicates removed, keeping first-seen order.
pub fn parse_tokens(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter(|l| seen.insert(l.to_string()))
        .map(str::to_string)
        .collect()
}

/// SHA-256 of the token, first 16 bytes big-endian, truncated to `sigma` low
/// bits. Zero maps to 1 so that no token encodes the dummy.
pub fn hash_token(token: &str, sigma: usize) -> u128 {
    let digest = Sha256::digest(token.as_bytes());
    let wide = u128::from_be_bytes(digest[..16].try_into().expect("16 bytes"));
    let v = if sigma == 128 { wide } else { wide & ((1u128 << sigma) - 1) };
    v.max(1)
}

/// Encoded elements with the inverse map back to the owner's tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EncodedSet {
    pub elements: Vec<u128>,
    pub tokens: BTreeMap<u128, String>,
}

impl EncodedSet {
    pub fn token(&self, element: u128) -> Option<&str> {
        self.tokens.get(&element).map(String::as_str)
    }
}

/// Hashes deduplicated tokens. Refuses the run if two distinct tokens
/// collide, since that would shrink the set.
pub fn encode_elements(tokens: &[String], sigma: usize) -> Result<EncodedSet, TokenError> {
    let mut out = EncodedSet::default();
    for t in tokens {
        let e = hash_token(t, sigma);
        match out.tokens.get(&e) {
            Some(prev) if prev != t => return Err(TokenError::Collision(prev.clone(), t.clone())),
            Some(_) => continue,
            None => {
                out.tokens.insert(e, t.clone());
                out.elements.push(e);
            }
        }
    }
    Ok(out)
}

/// Bits reserved for the party tag in padding values.
fn tag_bits(parties: usize) -> usize {
    (usize::BITS - parties.leading_zeros()) as usize
}

/// Fills `elements` up to `n` with values whose top bits carry `party`, so
/// padding of different parties never coincides. Values already present are
/// skipped.
pub fn pad_set(elements: &[u128], n: usize, party: usize, parties: usize, sigma: usize) -> Result<Vec<u128>, TokenError> {
    if elements.is_empty() {
        return Err(TokenError::Empty);
    }
    if elements.len() > n {
        return Err(TokenError::TooMany { n, got: elements.len() });
    }
    if party == 0 || party > parties {
        return Err(TokenError::Party { party, parties });
    }
    let tag = tag_bits(parties);
    let low = sigma.saturating_sub(tag);
    let needed = (n - elements.len()) as u128;
    if low == 0 || (low < 127 && (1u128 << low) - 1 < needed) {
        return Err(TokenError::NoPaddingRoom { sigma, parties });
    }
    let present: BTreeSet<u128> = elements.iter().copied().collect();
    let mut out = elements.to_vec();
    let mut i = 1u128;
    while out.len() < n {
        let v = ((party as u128) << low) | i;
        if !present.contains(&v) {
            out.push(v);
        }
        i += 1;
        if low < 127 && i >> low != 0 {
            return Err(TokenError::NoPaddingRoom { sigma, parties });
        }
    }
    Ok(out)
}

/// Smallest admissible set size (a power of two, at least 2) holding `len`.
pub fn set_size_for(len: usize) -> usize {
    len.max(2).next_power_of_two()
}
