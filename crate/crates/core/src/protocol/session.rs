//! Message-driven state machine each party runs over the public transcript.

use serde::{Deserialize, Serialize};

use super::config::ProtocolConfig;
use super::transcript::{Message, Transcript, TranscriptSummary};
use super::{PartyRecord, ProtocolOutcome, Status};
use crate::css_postprocess::{coset_label, recover_key, sample_bound, xor_bits, Permutation, SampleMode};
use crate::gaussian_channel::Quadrature;
use crate::gkp_code::{code_params, correct_and_extract, AnnouncedResidue, CodeLattice};
use crate::{QkdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

fn violation(msg: impl Into<String>) -> QkdError {
    QkdError::ProtocolViolation(msg.into())
}

/// Raw key bit of one measured value given the announced residue.
pub(crate) fn raw_bit(value: f64, basis: Quadrature, announced: &AnnouncedResidue, lattice: &CodeLattice) -> u8 {
    correct_and_extract(value, announced, lattice.spacing(basis)).0
}

/// Per-basis tallies of the check comparison. `q` checks estimate the bit
/// error rate `p_Z`, `p` checks the phase error rate `p_X`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub checks_z: usize,
    pub errors_z: usize,
    pub checks_x: usize,
    pub errors_x: usize,
    /// Retained (check + key) values per basis.
    pub selected_z: usize,
    pub selected_x: usize,
}

impl Verification {
    pub(crate) fn tally(bases: &[Quadrature], alice: &[u8], bob: &[u8]) -> Self {
        let mut v = Self::default();
        for ((&b, &a), &o) in bases.iter().zip(alice).zip(bob) {
            let err = (a != o) as usize;
            match b {
                Quadrature::Q => {
                    v.checks_z += 1;
                    v.errors_z += err;
                }
                Quadrature::P => {
                    v.checks_x += 1;
                    v.errors_x += err;
                }
            }
        }
        v
    }

    /// Observed error rate; `None` when the basis had no checks.
    pub fn rate(&self, basis: Quadrature) -> Option<f64> {
        let (c, e) = match basis {
            Quadrature::Q => (self.checks_z, self.errors_z),
            Quadrature::P => (self.checks_x, self.errors_x),
        };
        (c > 0).then(|| e as f64 / c as f64)
    }

    pub fn aborts(&self, threshold: f64) -> bool {
        Quadrature::BOTH
            .iter()
            .any(|&b| self.rate(b).is_some_and(|p| p > threshold))
    }

    /// Bound on the chance that the untested values of `basis` exceed
    /// `threshold` given the observed rate, when that is meaningful.
    pub fn sample_bound(&self, basis: Quadrature, threshold: f64) -> Option<f64> {
        let p = self.rate(basis)?;
        let (tested, total) = match basis {
            Quadrature::Q => (self.checks_z, self.selected_z),
            Quadrature::P => (self.checks_x, self.selected_x),
        };
        if !(p > 0.0 && p < threshold) {
            return None;
        }
        sample_bound(
            tested as u64,
            p,
            threshold - p,
            SampleMode::General {
                tested: tested as f64,
                total: total as f64,
            },
        )
        .ok()
    }
}

#[derive(Debug, Clone)]
struct Retained {
    basis: Quadrature,
    bit: u8,
    check: bool,
}

#[derive(Debug, Clone)]
enum Stage {
    AwaitBases,
    AwaitResidues { sifted: Vec<usize> },
    AwaitChecks { retained: Vec<Retained> },
    AwaitCoset { key_bits: Vec<u8> },
    Finished,
}

impl Stage {
    fn name(&self) -> &'static str {
        match self {
            Stage::AwaitBases => "basis_reveal",
            Stage::AwaitResidues { .. } => "residue_announce",
            Stage::AwaitChecks { .. } => "check_reveal",
            Stage::AwaitCoset { .. } => "coset_announce",
            Stage::Finished => "end of transcript",
        }
    }
}

/// What one party concludes from the transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyView {
    pub role: Role,
    pub status: Status,
    pub sifted_count: usize,
    pub verification: Option<Verification>,
    pub key: Vec<u8>,
    pub summary: TranscriptSummary,
}

/// One party's side of the classical post-processing. Messages must arrive
/// in protocol order; anything else is rejected.
#[derive(Debug, Clone)]
pub struct PartySession<'a> {
    role: Role,
    config: &'a ProtocolConfig,
    record: &'a PartyRecord,
    lattice: CodeLattice,
    stage: Stage,
    status: Option<Status>,
    sifted_count: usize,
    verification: Option<Verification>,
    key: Vec<u8>,
    summary: TranscriptSummary,
}

impl<'a> PartySession<'a> {
    pub fn new(role: Role, config: &'a ProtocolConfig, record: &'a PartyRecord) -> Result<Self> {
        config.validate()?;
        let expected = config.oscillators();
        if record.bases.len() != expected || record.values.len() != expected {
            return Err(QkdError::LengthMismatch {
                expected,
                actual: record.bases.len().min(record.values.len()),
            });
        }
        Ok(Self {
            role,
            config,
            record,
            lattice: code_params(2, config.alpha)?,
            stage: Stage::AwaitBases,
            status: None,
            sifted_count: 0,
            verification: None,
            key: Vec::new(),
            summary: TranscriptSummary::default(),
        })
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.stage, Stage::Finished)
    }

    pub fn receive(&mut self, message: &Message) -> Result<()> {
        let stage = std::mem::replace(&mut self.stage, Stage::Finished);
        let next = match (stage, message) {
            (Stage::AwaitBases, Message::BasisReveal { alice_bases, bob_bases }) => {
                self.on_bases(alice_bases, bob_bases)?
            }
            (
                Stage::AwaitResidues { sifted },
                Message::ResidueAnnounce {
                    selected,
                    check,
                    ticks,
                    m_bits,
                },
            ) => self.on_residues(&sifted, selected, check, ticks, *m_bits)?,
            (Stage::AwaitChecks { retained }, Message::CheckReveal { alice_bits, bob_bits }) => {
                self.on_checks(retained, alice_bits, bob_bits)?
            }
            (Stage::AwaitCoset { key_bits }, Message::CosetAnnounce { permutation, blocks }) => {
                self.on_coset(&key_bits, permutation, blocks)?
            }
            (stage, message) => {
                let expected = stage.name();
                self.stage = stage;
                return Err(violation(format!(
                    "received {} while expecting {expected}",
                    message.kind()
                )));
            }
        };
        self.summary.record(message);
        self.stage = next;
        Ok(())
    }

    fn on_bases(&mut self, alice_bases: &[Quadrature], bob_bases: &[Quadrature]) -> Result<Stage> {
        let n_osc = self.config.oscillators();
        if alice_bases.len() != n_osc || bob_bases.len() != n_osc {
            return Err(violation(format!("basis lists must cover all {n_osc} oscillators")));
        }
        let own = match self.role {
            Role::Alice => alice_bases,
            Role::Bob => bob_bases,
        };
        if own != self.record.bases.as_slice() {
            return Err(violation("announced bases differ from the local record"));
        }
        let sifted: Vec<usize> = (0..n_osc).filter(|&i| alice_bases[i] == bob_bases[i]).collect();
        self.sifted_count = sifted.len();
        if sifted.len() < 2 * self.config.n {
            self.status = Some(Status::AbortedTooFewSifted);
            return Ok(Stage::Finished);
        }
        Ok(Stage::AwaitResidues { sifted })
    }

    fn on_residues(
        &mut self,
        sifted: &[usize],
        selected: &[usize],
        check: &[bool],
        ticks: &[u64],
        m_bits: u32,
    ) -> Result<Stage> {
        let n = self.config.n;
        if m_bits != self.config.m_bits {
            return Err(violation(format!(
                "residues use {m_bits} bits, expected {}",
                self.config.m_bits
            )));
        }
        if selected.len() != 2 * n || check.len() != 2 * n || ticks.len() != 2 * n {
            return Err(violation(format!(
                "residue announcement must cover exactly {} values",
                2 * n
            )));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(violation("selected indices must be strictly increasing"));
        }
        if let Some(&i) = selected.iter().find(|i| sifted.binary_search(i).is_err()) {
            return Err(violation(format!("oscillator {i} was not sifted")));
        }
        if check.iter().filter(|&&c| c).count() != n {
            return Err(violation(format!("exactly {n} values must be marked as checks")));
        }
        let retained = selected
            .iter()
            .zip(check)
            .zip(ticks)
            .map(|((&i, &check), &t)| {
                let announced = AnnouncedResidue::new(t, m_bits).map_err(|e| violation(e.to_string()))?;
                let basis = self.record.bases[i];
                Ok(Retained {
                    basis,
                    bit: raw_bit(self.record.values[i], basis, &announced, &self.lattice),
                    check,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Stage::AwaitChecks { retained })
    }

    fn on_checks(&mut self, retained: Vec<Retained>, alice_bits: &[u8], bob_bits: &[u8]) -> Result<Stage> {
        let n = self.config.n;
        if alice_bits.len() != n || bob_bits.len() != n {
            return Err(violation(format!("check reveal must carry {n} bits per party")));
        }
        if alice_bits.iter().chain(bob_bits).any(|&b| b > 1) {
            return Err(violation("check bits must be 0 or 1"));
        }
        let (checks, keys): (Vec<&Retained>, Vec<&Retained>) = retained.iter().partition(|r| r.check);
        let own_checks: Vec<u8> = checks.iter().map(|r| r.bit).collect();
        let claimed = match self.role {
            Role::Alice => alice_bits,
            Role::Bob => bob_bits,
        };
        if own_checks != claimed {
            return Err(violation("revealed check bits differ from the local record"));
        }
        let bases: Vec<Quadrature> = checks.iter().map(|r| r.basis).collect();
        let mut verification = Verification::tally(&bases, alice_bits, bob_bits);
        verification.selected_z = retained.iter().filter(|r| r.basis == Quadrature::Q).count();
        verification.selected_x = retained.len() - verification.selected_z;
        self.verification = Some(verification);
        if verification.aborts(self.config.abort_threshold) {
            self.status = Some(Status::AbortedVerification);
            return Ok(Stage::Finished);
        }
        Ok(Stage::AwaitCoset {
            key_bits: keys.iter().map(|r| r.bit).collect(),
        })
    }

    fn on_coset(&mut self, key_bits: &[u8], permutation: &Permutation, blocks: &[Vec<u8>]) -> Result<Stage> {
        let css = &self.config.css;
        let permuted = permutation
            .apply(key_bits)
            .map_err(|_| violation(format!("permutation must have length {}", key_bits.len())))?;
        if blocks.len() != self.config.key_blocks() {
            return Err(violation(format!(
                "expected {} coset blocks, got {}",
                self.config.key_blocks(),
                blocks.len()
            )));
        }
        let mut key = Vec::with_capacity(self.config.key_len());
        for (own, announced) in permuted.chunks_exact(css.n()).zip(blocks) {
            let block_key = match self.role {
                Role::Alice => {
                    let v = xor_bits(own, announced).map_err(|e| violation(e.to_string()))?;
                    coset_label(css, &v)
                }
                Role::Bob => recover_key(css, own, announced),
            }
            .map_err(|e| violation(format!("bad coset block: {e}")))?;
            key.extend(block_key);
        }
        self.key = key;
        self.status = Some(Status::Completed);
        Ok(Stage::Finished)
    }

    pub fn finish(self) -> Result<PartyView> {
        match (self.stage, self.status) {
            (Stage::Finished, Some(status)) => Ok(PartyView {
                role: self.role,
                status,
                sifted_count: self.sifted_count,
                verification: self.verification,
                key: self.key,
                summary: self.summary,
            }),
            (stage, _) => Err(violation(format!("transcript ended while expecting {}", stage.name()))),
        }
    }
}

/// Runs both parties over `transcript` and combines their conclusions.
pub fn replay(
    config: &ProtocolConfig,
    alice: &PartyRecord,
    bob: &PartyRecord,
    transcript: &Transcript,
) -> Result<ProtocolOutcome> {
    let mut a = PartySession::new(Role::Alice, config, alice)?;
    let mut b = PartySession::new(Role::Bob, config, bob)?;
    for message in &transcript.messages {
        a.receive(message)?;
        b.receive(message)?;
    }
    let a = a.finish()?;
    let b = b.finish()?;
    debug_assert_eq!(a.status, b.status);
    debug_assert_eq!(a.verification, b.verification);
    let v = a.verification.unwrap_or_default();
    let threshold = config.abort_threshold;
    Ok(ProtocolOutcome {
        status: a.status,
        oscillators: config.oscillators(),
        sifted_count: a.sifted_count,
        p_hat_z: a.verification.and_then(|v| v.rate(Quadrature::Q)),
        p_hat_x: a.verification.and_then(|v| v.rate(Quadrature::P)),
        checks_z: v.checks_z,
        errors_z: v.errors_z,
        checks_x: v.checks_x,
        errors_x: v.errors_x,
        sample_bound_z: v.sample_bound(Quadrature::Q, threshold),
        sample_bound_x: v.sample_bound(Quadrature::P, threshold),
        key_alice: a.key,
        key_bob: b.key,
        transcript_summary: a.summary,
    })
}
