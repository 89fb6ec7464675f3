//! Verification laboratory for the two-observer all-versus-nothing argument
//! against local realism built on a two-photon polarization/path state.
//!
//! The crate is layered bottom-up:
//!
//! - [`hilbert`]: exact dense linear algebra on the 16-dimensional space of
//!   two photons carrying one polarization and one path qubit each.
//! - [`avn`]: parity constraint systems over ±1 value assignments, exhaustive
//!   satisfiability and GF(2) infeasibility witnesses.
//! - [`game`]: the two nonlocal games, their classical and quantum values and
//!   round-by-round simulation.
//! - [`loophole`]: instruction-set ensembles with refusals to answer and the
//!   critical detection efficiency found by an exact rational LP.
//! - [`bell`]: the two-observer Bell expression, its local bound, quantum
//!   value and finite-shot estimation.
//! - [`cli`]: machine-readable reports for every verification.

pub mod avn;
pub mod bell;
pub mod cli;
pub mod game;
pub mod hilbert;
pub mod loophole;
pub mod rational;
pub mod sign;

pub use rational::Rational;
pub use sign::Sign;

use serde::{Deserialize, Serialize};

/// Which of the two all-versus-nothing arguments a computation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// The four-prediction argument.
    New4,
    /// The earlier nine-prediction argument.
    Old9,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::New4, Variant::Old9];

    /// Short flag name used on the command line (`new` / `old`).
    pub fn flag(self) -> &'static str {
        match self {
            Variant::New4 => "new",
            Variant::Old9 => "old",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.flag())
    }
}
