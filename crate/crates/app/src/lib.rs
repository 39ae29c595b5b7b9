//! Driver layer for multi-party PSI sessions: token encoding, session
//! orchestration, Jaccard anomaly scoring and gate/communication reports.

pub mod anomaly;
pub mod report;
pub mod tokens;

use std::time::Duration;

use mpsi_core::net::config::{ConfigError, SessionConfig};
use mpsi_core::net::session::{connect_tcp, run_local, run_party, PartyInput, SessionError, SessionReport};
use mpsi_core::ot::OtBackend;
use mpsi_core::psi::{Mode, PsiParams};
use mpsi_core::Exec;
use num_rational::Ratio;
use rand::rngs::OsRng;
use thiserror::Error;

use anomaly::{jaccard_from_cardinality, AnomalyVerdict};
use tokens::{encode_elements, pad_set, set_size_for, EncodedSet, TokenError};

/// How long dialing parties keep retrying before giving up.
pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum AppError {
    #[error("input error: {0}")]
    Input(String),
    #[error("protocol aborted: {0}")]
    Protocol(SessionError),
}

impl AppError {
    /// 1 for protocol aborts, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Protocol(_) => 1,
            AppError::Input(_) => 2,
        }
    }
}

impl From<SessionError> for AppError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::InvalidSet(_) | SessionError::Config(_) | SessionError::Psi(_) => AppError::Input(e.to_string()),
            other => AppError::Protocol(other),
        }
    }
}

impl From<TokenError> for AppError {
    fn from(e: TokenError) -> Self {
        AppError::Input(e.to_string())
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Input(e.to_string())
    }
}

/// Command-line overrides applied on top of a config file. Every party must
/// apply the same overrides or the HELLO hash check fails.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub sigma: Option<report::SigmaChoice>,
}

pub fn load_config(text: &str, overrides: Overrides) -> Result<SessionConfig, AppError> {
    let mut cfg = SessionConfig::parse(text)?;
    if let Some(mode) = overrides.mode {
        cfg.params.mode = mode;
    }
    if let Some(sigma) = overrides.sigma {
        cfg.params.sigma = sigma.resolve(cfg.params.set_size);
    }
    cfg.params.validate().map_err(|e| AppError::Input(e.to_string()))?;
    Ok(cfg)
}

/// Encodes and pads a token list into this party's protocol input.
pub fn prepare_input(cfg: &SessionConfig, tokens: &[String]) -> Result<(PartyInput, EncodedSet), AppError> {
    let p = cfg.params;
    let encoded = encode_elements(tokens, p.sigma)?;
    let set = pad_set(&encoded.elements, p.set_size, cfg.party_id, p.parties, p.sigma)?;
    let input = PartyInput { set, declared_size: encoded.elements.len() as u64 };
    Ok((input, encoded))
}

/// One party of a networked session.
pub fn run_networked(cfg: &SessionConfig, tokens: &[String], exec: Exec) -> Result<(SessionReport, EncodedSet), AppError> {
    let (input, encoded) = prepare_input(cfg, tokens)?;
    let mut links = connect_tcp(cfg, input.declared_size, CONNECT_TIMEOUT)?;
    let report = run_party(cfg, &mut links, &input, &mut OsRng, exec)?;
    Ok((report, encoded))
}

/// Renders an intersection using the local party's own tokens where it can
/// invert the encoding, hex otherwise.
pub fn render_intersection(elements: &[u128], own: &EncodedSet) -> String {
    let mut items: Vec<String> =
        elements.iter().map(|&e| own.token(e).map_or_else(|| format!("{e:#x}"), str::to_string)).collect();
    items.sort();
    format!("{{{}}}", items.join(", "))
}

/// Verdict for a finished two-party cardinality session, seen from party
/// `me`.
pub fn verdict_from_report(report: &SessionReport, peer: usize, threshold: Ratio<u64>) -> Result<AnomalyVerdict, AppError> {
    let c = report.result.cardinality.ok_or_else(|| AppError::Input("session did not reveal a cardinality".into()))?;
    let n1 = report.declared_sizes[&report.party_id];
    let n2 = *report.declared_sizes.get(&peer).ok_or_else(|| AppError::Input(format!("no size from party {peer}")))?;
    let j = jaccard_from_cardinality(c, n1, n2)
        .ok_or_else(|| AppError::Input(format!("inconsistent sizes: c={c}, n1={n1}, n2={n2}")))?;
    Ok(AnomalyVerdict::new(peer.to_string(), j, threshold))
}

/// Scores `window` against each blacklist with one in-process two-party
/// cardinality session per peer. Peers are named by their index.
pub fn anomaly_local(
    window: &[String],
    blacklists: &[Vec<String>],
    threshold: Ratio<u64>,
    sigma: report::SigmaChoice,
    backend: OtBackend,
    exec: Exec,
) -> Result<Vec<AnomalyVerdict>, AppError> {
    if window.is_empty() || blacklists.iter().any(Vec::is_empty) {
        return Err(TokenError::Empty.into());
    }
    blacklists
        .iter()
        .enumerate()
        .map(|(i, list)| {
            let n = set_size_for(window.len().max(list.len()));
            let params = PsiParams::new(2, n, sigma.resolve(n), Mode::Cardinality).map_err(|e| AppError::Input(e.to_string()))?;
            let mut inputs = Vec::new();
            for (party, tokens) in [(1, window), (2, list)] {
                let enc = encode_elements(tokens, params.sigma)?;
                let set = pad_set(&enc.elements, n, party, 2, params.sigma)?;
                inputs.push(PartyInput { set, declared_size: enc.elements.len() as u64 });
            }
            let reports = run_local(params, backend, &inputs, exec, None)?;
            let mut v = verdict_from_report(&reports[0], 2, threshold)?;
            v.peer = (i + 1).to_string();
            Ok(v)
        })
        .collect()
}
