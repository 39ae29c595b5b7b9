//! Session configuration: flat `key=value` text with keys `m`, `n`, `sigma`,
//! `mode`, `role`, `party_id`, `ot_backend` and `roster.<id>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::garble::KAPPA;
use crate::ot::OtBackend;
use crate::psi::{Mode, PsiError, PsiParams};

/// Statistical security parameter. Carried in the config, unused by the
/// protocol logic.
pub const LAMBDA: usize = 80;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("duplicate key `{0}`")]
    Duplicate(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value}")]
    Value { key: String, value: String },
    #[error("role {role} does not match party id {party}")]
    RoleMismatch { role: &'static str, party: usize },
    #[error("roster must list parties 1..={0} exactly")]
    Roster(usize),
    #[error(transparent)]
    Params(#[from] PsiError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    /// P1: garbles the circuit.
    Garbler,
    /// P2: evaluates and announces the result.
    Evaluator,
    /// P3..Pm: secret-share their sets to P1 and P2.
    Contributor,
}

impl Role {
    pub fn for_party(party: usize) -> Role {
        match party {
            1 => Role::Garbler,
            2 => Role::Evaluator,
            _ => Role::Contributor,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Garbler => "garbler",
            Role::Evaluator => "evaluator",
            Role::Contributor => "contributor",
        }
    }

    fn parse(s: &str) -> Option<Role> {
        match s {
            "garbler" | "p1-garbler" => Some(Role::Garbler),
            "evaluator" | "p2-evaluator" => Some(Role::Evaluator),
            "contributor" => Some(Role::Contributor),
            _ => None,
        }
    }
}

/// Auto-selected element width for `n` elements: 40 + 2·log₂n − 1, which
/// keeps the chance of any hash collision below 2⁻⁴⁰.
pub fn auto_sigma(n: usize) -> usize {
    let log = usize::BITS as usize - 1 - n.max(1).leading_zeros() as usize;
    40 + 2 * log - 1
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionConfig {
    pub params: PsiParams,
    pub party_id: usize,
    pub role: Role,
    pub ot_backend: OtBackend,
    /// Party id → `host:port`.
    pub roster: BTreeMap<usize, String>,
}

impl SessionConfig {
    pub fn kappa(&self) -> usize {
        KAPPA
    }

    pub fn lambda(&self) -> usize {
        LAMBDA
    }

    /// Config for `party_id` with an empty roster, for in-process sessions.
    pub fn local(params: PsiParams, party_id: usize, ot_backend: OtBackend) -> Self {
        let roster = (1..=params.parties).map(|p| (p, format!("127.0.0.1:{}", 40000 + p))).collect();
        SessionConfig { params, party_id, role: Role::for_party(party_id), ot_backend, roster }
    }

    pub fn for_party(&self, party_id: usize) -> Self {
        SessionConfig { party_id, role: Role::for_party(party_id), ..self.clone() }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if kv.insert(k.clone(), v).is_some() {
                return Err(ConfigError::Duplicate(k));
            }
        }

        let bad = |key: &str, value: &str| ConfigError::Value { key: key.into(), value: value.into() };
        let take = |kv: &mut BTreeMap<String, String>, key: &'static str| kv.remove(key).ok_or(ConfigError::Missing(key));
        let num = |key: &'static str, v: String| v.parse::<usize>().map_err(|_| bad(key, &v));

        let m = num("m", take(&mut kv, "m")?)?;
        let n = num("n", take(&mut kv, "n")?)?;
        let sigma_raw = take(&mut kv, "sigma")?;
        let sigma = if sigma_raw == "auto" { auto_sigma(n) } else { num("sigma", sigma_raw)? };
        let mode_raw = take(&mut kv, "mode")?;
        let mode: Mode = mode_raw.parse().map_err(|_| bad("mode", &mode_raw))?;
        let party_id = num("party_id", take(&mut kv, "party_id")?)?;
        let role_raw = take(&mut kv, "role")?;
        let role = Role::parse(&role_raw).ok_or_else(|| bad("role", &role_raw))?;
        let ot_raw = kv.remove("ot_backend").unwrap_or_else(|| "real".into());
        let ot_backend: OtBackend = ot_raw.parse().map_err(|_| bad("ot_backend", &ot_raw))?;

        let mut roster = BTreeMap::new();
        for (k, v) in std::mem::take(&mut kv) {
            let Some(id) = k.strip_prefix("roster.") else {
                return Err(ConfigError::UnknownKey(k));
            };
            let id = id.parse::<usize>().map_err(|_| ConfigError::UnknownKey(k.clone()))?;
            roster.insert(id, v);
        }

        let params = PsiParams::new(m, n, sigma, mode)?;
        if roster.len() != m || roster.keys().copied().ne(1..=m) {
            return Err(ConfigError::Roster(m));
        }
        if party_id == 0 || party_id > m {
            return Err(bad("party_id", &party_id.to_string()));
        }
        if Role::for_party(party_id) != role {
            return Err(ConfigError::RoleMismatch { role: role.as_str(), party: party_id });
        }
        Ok(SessionConfig { params, party_id, role, ot_backend, roster })
    }

    pub fn to_text(&self) -> String {
        let mut s = self.shared_text();
        let _ = writeln!(s, "role={}", self.role.as_str());
        let _ = writeln!(s, "party_id={}", self.party_id);
        s
    }

    /// Canonical serialization of the fields every party must agree on.
    fn shared_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "m={}", p.parties);
        let _ = writeln!(s, "n={}", p.set_size);
        let _ = writeln!(s, "sigma={}", p.sigma);
        let _ = writeln!(s, "mode={}", p.mode);
        let _ = writeln!(s, "ot_backend={}", self.ot_backend.as_str());
        for (id, addr) in &self.roster {
            let _ = writeln!(s, "roster.{id}={addr}");
        }
        s
    }

    /// SHA-256 of the shared fields, exchanged in HELLO.
    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(format!("kappa={KAPPA}\nlambda={LAMBDA}\n"));
        h.update(self.shared_text());
        h.finalize().into()
    }
}
