use serde::{Deserialize, Serialize};

use crate::css_postprocess::Permutation;
use crate::gaussian_channel::Quadrature;

/// One public announcement on the authenticated classical channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    /// Both parties' basis choices for every oscillator.
    BasisReveal {
        alice_bases: Vec<Quadrature>,
        bob_bases: Vec<Quadrature>,
    },
    /// The `2n` retained oscillators (increasing index), which of them are
    /// checks, and Alice's quantized residue for each.
    ResidueAnnounce {
        selected: Vec<usize>,
        check: Vec<bool>,
        ticks: Vec<u64>,
        m_bits: u32,
    },
    /// Raw bits of the check positions, in selection order.
    CheckReveal { alice_bits: Vec<u8>, bob_bits: Vec<u8> },
    /// Permutation of the key positions and `u ⊕ v` for each CSS block.
    CosetAnnounce {
        permutation: Permutation,
        blocks: Vec<Vec<u8>>,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::BasisReveal { .. } => "basis_reveal",
            Message::ResidueAnnounce { .. } => "residue_announce",
            Message::CheckReveal { .. } => "check_reveal",
            Message::CosetAnnounce { .. } => "coset_announce",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSummary {
    pub basis_reveal: usize,
    pub residue_announce: usize,
    pub check_reveal: usize,
    pub coset_announce: usize,
}

impl TranscriptSummary {
    pub(crate) fn record(&mut self, message: &Message) {
        match message {
            Message::BasisReveal { .. } => self.basis_reveal += 1,
            Message::ResidueAnnounce { .. } => self.residue_announce += 1,
            Message::CheckReveal { .. } => self.check_reveal += 1,
            Message::CosetAnnounce { .. } => self.coset_announce += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub messages: Vec<Message>,
}

impl Transcript {
    pub fn summary(&self) -> TranscriptSummary {
        let mut s = TranscriptSummary::default();
        for m in &self.messages {
            s.record(m);
        }
        s
    }
}
