//! The squeezed-state key distribution protocol as two parties exchanging
//! public messages.
//!
//! A run has two layers. The physical layer prepares `⌈(4+δ)n⌉` signals,
//! sends them through the channel (and any eavesdropper) and records each
//! party's basis and outcome. The classical layer is an ordered transcript:
//!
//! 1. `basis_reveal`: both basis lists; mismatched bases are discarded.
//! 2. `residue_announce`: `2n` sifted values, which `n` are checks, and
//!    Alice's residue of each value modulo the code spacing.
//! 3. `check_reveal`: raw bits of the checks. Abort if the error rate in
//!    either basis exceeds the threshold.
//! 4. `coset_announce`: a permutation of the key bits and, per CSS block,
//!    Alice's bits masked by a random `C₁` codeword.
//!
//! Each party runs a [`PartySession`] over the transcript; [`replay`]
//! combines both into a [`ProtocolOutcome`].

mod config;
mod session;
mod sim;
mod transcript;

pub use config::{EveModel, ProtocolConfig};
pub use session::{replay, PartySession, PartyView, Role, Verification};
pub use sim::{
    build_transcript, estimate_error_rates, measure_all, predicted_difference_width, predicted_error_rate,
    run_protocol, simulate, ErrorRateEstimate, ProtocolRun, MIN_ESTIMATE_TRIALS,
};
pub use transcript::{Message, Transcript, TranscriptSummary};

use serde::{Deserialize, Serialize};

use crate::gaussian_channel::Quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    AbortedTooFewSifted,
    AbortedVerification,
}

impl Status {
    pub fn is_completed(self) -> bool {
        self == Status::Completed
    }
}

/// One party's basis choice and measured value for every oscillator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartyRecord {
    pub bases: Vec<Quadrature>,
    pub values: Vec<f64>,
}

impl PartyRecord {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            bases: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub status: Status,
    pub oscillators: usize,
    pub sifted_count: usize,
    /// Check error rate among `q`-basis checks; `None` if there were none.
    pub p_hat_z: Option<f64>,
    /// Check error rate among `p`-basis checks.
    pub p_hat_x: Option<f64>,
    pub checks_z: usize,
    pub errors_z: usize,
    pub checks_x: usize,
    pub errors_x: usize,
    /// Sampling bound on the untested `q` values exceeding the abort
    /// threshold, when `0 < p̂_Z < threshold`.
    pub sample_bound_z: Option<f64>,
    pub sample_bound_x: Option<f64>,
    pub key_alice: Vec<u8>,
    pub key_bob: Vec<u8>,
    pub transcript_summary: TranscriptSummary,
}

impl ProtocolOutcome {
    pub fn keys_agree(&self) -> bool {
        self.key_alice == self.key_bob
    }
}
