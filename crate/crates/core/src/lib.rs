//! Multi-party private set intersection from Sort-Compare-Shuffle circuits.
//!
//! Contributors XOR-share their sorted sets to two output parties, who run a
//! half-gates garbled circuit that merges, deduplicates and shuffles the sets
//! iteratively. Data-parallel garbling, evaluation and OT extension use rayon
//! behind the `parallel` feature; [`par::Exec`] selects the strategy at run
//! time.

pub mod blocks;
pub mod circuit;
pub mod garble;
pub mod net;
pub mod oracle;
pub mod ot;
pub mod par;
pub mod psi;

pub use circuit::{Circuit, CircuitBuilder, CircuitStats, Gate, GateCounter, GateKind, GateSink, WireId};
pub use net::config::SessionConfig;
pub use net::session::{run_local, run_party, PartyInput, PsiResult, SessionError, SessionReport};
pub use par::Exec;
pub use psi::{Mode, PsiParams};
