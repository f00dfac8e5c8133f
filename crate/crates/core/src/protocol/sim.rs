//! Physical layer, Alice's side of the public discussion, and Monte-Carlo
//! error-rate estimation.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EveModel, ProtocolConfig};
use super::session::{raw_bit, replay, Verification};
use super::transcript::{Message, Transcript};
use super::{PartyRecord, ProtocolOutcome};
use crate::css_postprocess::{announce_coset, Permutation};
use crate::gaussian_channel::{sample_center, ChannelModel, ModeState, Quadrature, SqueezedSource};
use crate::gkp_code::{code_params, quantize_residue, residue, shift_error_prob, CodeLattice, ErrorMethod};
use crate::rng::{self, ALICE_CONTROL_STREAM};
use crate::security_analysis::{delta_xi, delta_xi_rescaled, LossScenario};
use crate::{QkdError, Result};

/// Source, channel and attacker for one run.
#[derive(Debug, Clone, Copy)]
struct Physics {
    source: SqueezedSource,
    channel: ChannelModel,
    eve: EveModel,
}

impl Physics {
    fn new(config: &ProtocolConfig) -> Result<Self> {
        Ok(Self {
            source: config.source()?,
            channel: config.channel()?,
            eve: config.eve,
        })
    }

    /// Alice's outcome and Bob's (rescaled) outcome for one oscillator.
    fn transmit<R: Rng + ?Sized>(&self, alice: Quadrature, bob: Quadrature, rng: &mut R) -> Result<(f64, f64)> {
        let center = sample_center(&self.source, alice, rng);
        let sent = ModeState::signal(&self.source, center, alice)?;
        let received = self.eve.act(self.channel.transmit(sent)?, rng)?;
        Ok((center, received.measure(bob, rng) * self.channel.outcome_scale()))
    }
}

/// Everything a simulated run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRun {
    pub outcome: ProtocolOutcome,
    pub transcript: Transcript,
    pub alice: PartyRecord,
    pub bob: PartyRecord,
}

/// Prepares and measures every oscillator. Oscillator `i` draws from its own
/// stream, so the records do not depend on the thread count.
pub fn measure_all(config: &ProtocolConfig) -> Result<(PartyRecord, PartyRecord)> {
    config.validate()?;
    let physics = Physics::new(config)?;
    let rows = (0..config.oscillators() as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(config.seed, i);
            let a = Quadrature::random(&mut r);
            let b = Quadrature::random(&mut r);
            let (qa, yb) = physics.transmit(a, b, &mut r)?;
            Ok((a, qa, b, yb))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut alice = PartyRecord::with_capacity(rows.len());
    let mut bob = PartyRecord::with_capacity(rows.len());
    for (a, qa, b, yb) in rows {
        alice.bases.push(a);
        alice.values.push(qa);
        bob.bases.push(b);
        bob.values.push(yb);
    }
    Ok((alice, bob))
}

/// Alice drives the public discussion from both records, drawing her
/// choices (sample, check split, permutation, masks) from `control`.
pub fn build_transcript<R: Rng + ?Sized>(
    config: &ProtocolConfig,
    alice: &PartyRecord,
    bob: &PartyRecord,
    control: &mut R,
) -> Result<Transcript> {
    let n = config.n;
    let lattice = code_params(2, config.alpha)?;
    let mut messages = vec![Message::BasisReveal {
        alice_bases: alice.bases.clone(),
        bob_bases: bob.bases.clone(),
    }];
    let sifted: Vec<usize> = (0..alice.len()).filter(|&i| alice.bases[i] == bob.bases[i]).collect();
    if sifted.len() < 2 * n {
        return Ok(Transcript { messages });
    }

    let mut picks = index::sample(control, sifted.len(), 2 * n).into_vec();
    picks.sort_unstable();
    let selected: Vec<usize> = picks.into_iter().map(|p| sifted[p]).collect();
    let mut check = vec![false; 2 * n];
    for c in index::sample(control, 2 * n, n) {
        check[c] = true;
    }
    let announced = selected
        .iter()
        .map(|&i| announce_residue(alice.values[i], alice.bases[i], &lattice, config.m_bits))
        .collect::<Result<Vec<_>>>()?;
    messages.push(Message::ResidueAnnounce {
        selected: selected.clone(),
        check: check.clone(),
        ticks: announced.iter().map(|a| a.ticks).collect(),
        m_bits: config.m_bits,
    });

    let bits = |record: &PartyRecord| -> Vec<u8> {
        selected
            .iter()
            .zip(&announced)
            .map(|(&i, a)| raw_bit(record.values[i], record.bases[i], a, &lattice))
            .collect()
    };
    let (alice_bits, bob_bits) = (bits(alice), bits(bob));
    let pick = |bits: &[u8], want: bool| -> Vec<u8> {
        bits.iter()
            .zip(&check)
            .filter(|(_, &c)| c == want)
            .map(|(&b, _)| b)
            .collect()
    };
    let check_bases: Vec<Quadrature> = selected
        .iter()
        .zip(&check)
        .filter(|(_, &c)| c)
        .map(|(&i, _)| alice.bases[i])
        .collect();
    let (alice_checks, bob_checks) = (pick(&alice_bits, true), pick(&bob_bits, true));
    let verification = Verification::tally(&check_bases, &alice_checks, &bob_checks);
    messages.push(Message::CheckReveal {
        alice_bits: alice_checks,
        bob_bits: bob_checks,
    });
    if verification.aborts(config.abort_threshold) {
        return Ok(Transcript { messages });
    }

    let permutation = Permutation::random(n, control);
    let key_bits = permutation.apply(&pick(&alice_bits, false))?;
    let blocks = key_bits
        .chunks_exact(config.css.n())
        .map(|block| announce_coset(&config.css, block, control).map(|(announced, _)| announced))
        .collect::<Result<Vec<_>>>()?;
    messages.push(Message::CosetAnnounce { permutation, blocks });
    Ok(Transcript { messages })
}

fn announce_residue(
    value: f64,
    basis: Quadrature,
    lattice: &CodeLattice,
    m_bits: u32,
) -> Result<crate::gkp_code::AnnouncedResidue> {
    let spacing = lattice.spacing(basis);
    let (_, r) = residue(value, spacing);
    quantize_residue(r, spacing, m_bits)
}

/// Runs the whole protocol and keeps the records and transcript.
pub fn simulate(config: &ProtocolConfig) -> Result<ProtocolRun> {
    let (alice, bob) = measure_all(config)?;
    let mut control = rng::stream(config.seed, ALICE_CONTROL_STREAM);
    let transcript = build_transcript(config, &alice, &bob, &mut control)?;
    let outcome = replay(config, &alice, &bob, &transcript)?;
    Ok(ProtocolRun {
        outcome,
        transcript,
        alice,
        bob,
    })
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    simulate(config).map(|run| run.outcome)
}

pub const MIN_ESTIMATE_TRIALS: u64 = 1000;

/// Monte-Carlo raw-bit error rates with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRateEstimate {
    /// Oscillators simulated per basis.
    pub trials: u64,
    pub flips_z: u64,
    pub flips_x: u64,
    pub p_hat_z: f64,
    pub p_hat_x: f64,
    pub stderr_z: f64,
    pub stderr_x: f64,
}

impl ErrorRateEstimate {
    pub fn rate(&self, basis: Quadrature) -> (f64, f64) {
        match basis {
            Quadrature::Q => (self.p_hat_z, self.stderr_z),
            Quadrature::P => (self.p_hat_x, self.stderr_x),
        }
    }
}

/// Sends `trials` fresh oscillators in each basis with Bob in the matching
/// basis and counts raw-bit disagreements. Trial `t` in basis `b` uses
/// stream `2t + b`.
pub fn estimate_error_rates(config: &ProtocolConfig, trials: u64) -> Result<ErrorRateEstimate> {
    if trials < MIN_ESTIMATE_TRIALS {
        return Err(QkdError::param("trials", trials as f64, "trials >= 1000"));
    }
    config.validate()?;
    let physics = Physics::new(config)?;
    let lattice = code_params(2, config.alpha)?;
    let flips = |basis: Quadrature, offset: u64| -> Result<u64> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::stream(config.seed, 2 * t + offset);
                let (qa, yb) = physics.transmit(basis, basis, &mut r)?;
                let announced = announce_residue(qa, basis, &lattice, config.m_bits)?;
                let a = raw_bit(qa, basis, &announced, &lattice);
                let b = raw_bit(yb, basis, &announced, &lattice);
                Ok((a != b) as u64)
            })
            .try_reduce(|| 0, |x, y| Ok(x + y))
    };
    let flips_z = flips(Quadrature::Q, 0)?;
    let flips_x = flips(Quadrature::P, 1)?;
    let rate = |f: u64| f as f64 / trials as f64;
    let stderr = |p: f64| (p * (1.0 - p) / trials as f64).sqrt();
    Ok(ErrorRateEstimate {
        trials,
        flips_z,
        flips_x,
        p_hat_z: rate(flips_z),
        p_hat_x: rate(flips_x),
        stderr_z: stderr(rate(flips_z)),
        stderr_x: stderr(rate(flips_x)),
    })
}

/// Width of the `Alice − Bob` difference in units where the code spacing
/// is `√π`, ignoring any eavesdropper.
pub fn predicted_difference_width(config: &ProtocolConfig, basis: Quadrature) -> Result<f64> {
    let source = config.source()?;
    let width = source.width(basis);
    let scale = match basis {
        Quadrature::Q => config.alpha,
        Quadrature::P => 1.0 / config.alpha,
    };
    let delta = if config.amplified {
        delta_xi_rescaled(width, config.kappa_d)?
    } else {
        delta_xi(width, LossScenario::new(config.kappa_d, false)?)?
    };
    Ok(delta / scale)
}

/// Analytic raw-bit error rate for the channel in `config`, ignoring any
/// eavesdropper and residue quantization.
pub fn predicted_error_rate(config: &ProtocolConfig, basis: Quadrature) -> Result<f64> {
    shift_error_prob(predicted_difference_width(config, basis)?, ErrorMethod::ExactSeries)
}
