use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::css_postprocess::{steane_css, CssPair, MAX_DECODE_LEN};
use crate::gaussian_channel::{ChannelModel, Compensation, ModeState, Quadrature, SqueezedSource};
use crate::gkp_code::MAX_ANNOUNCE_BITS;
use crate::security_analysis::DEFAULT_ERROR_THRESHOLD;
use crate::{QkdError, Result};

/// Attack applied to each signal between the channel and Bob's detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EveModel {
    #[default]
    None,
    /// Measure a uniformly random quadrature and resend a squeezed state of
    /// width `resend_width` centered on the outcome.
    InterceptResend { resend_width: f64 },
    /// Displace every signal by `(dq, dp)`.
    FixedShift { dq: f64, dp: f64 },
}

impl EveModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EveModel::None => Ok(()),
            EveModel::InterceptResend { resend_width } => {
                if resend_width > 0.0 && resend_width.is_finite() {
                    Ok(())
                } else {
                    Err(QkdError::param("resend_width", resend_width, "a finite width > 0"))
                }
            }
            EveModel::FixedShift { dq, dp } => {
                if dq.is_finite() && dp.is_finite() {
                    Ok(())
                } else {
                    Err(QkdError::param(
                        "shift",
                        if dq.is_finite() { dp } else { dq },
                        "finite dq and dp",
                    ))
                }
            }
        }
    }

    pub(crate) fn act<R: Rng + ?Sized>(&self, state: ModeState, rng: &mut R) -> Result<ModeState> {
        match *self {
            EveModel::None => Ok(state),
            EveModel::InterceptResend { resend_width } => {
                let basis = Quadrature::random(rng);
                let outcome = state.measure(basis, rng);
                ModeState::squeezed(basis, outcome, resend_width)
            }
            EveModel::FixedShift { dq, dp } => Ok(state.displaced(dq, dp)),
        }
    }
}

fn default_n() -> usize {
    700
}
fn default_slack() -> f64 {
    0.4
}
fn default_tilde_delta() -> f64 {
    0.5
}
fn default_alpha() -> f64 {
    1.0
}
fn default_m_bits() -> u32 {
    16
}
fn default_threshold() -> f64 {
    DEFAULT_ERROR_THRESHOLD
}

/// Everything needed to run the protocol reproducibly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Raw key bits wanted; `2n` sifted values are kept, half as checks.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Extra oscillators beyond `4n`, as a multiple of `n`.
    #[serde(default = "default_slack")]
    pub delta_slack: f64,
    #[serde(default = "default_tilde_delta")]
    pub tilde_delta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Bits of precision in each residue announcement.
    #[serde(default = "default_m_bits")]
    pub m_bits: u32,
    #[serde(default)]
    pub kappa_d: f64,
    /// Bob rescales his outcomes by `ξ⁻¹`.
    #[serde(default)]
    pub amplified: bool,
    /// Abort when the check error rate in either basis exceeds this.
    #[serde(default = "default_threshold")]
    pub abort_threshold: f64,
    #[serde(default = "steane_css")]
    pub css: CssPair,
    #[serde(default)]
    pub eve: EveModel,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            delta_slack: default_slack(),
            tilde_delta: default_tilde_delta(),
            alpha: default_alpha(),
            m_bits: default_m_bits(),
            kappa_d: 0.0,
            amplified: false,
            abort_threshold: default_threshold(),
            css: steane_css(),
            eve: EveModel::None,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(QkdError::param("n", 0.0, "n >= 1"));
        }
        if !(self.delta_slack > 0.0 && self.delta_slack.is_finite()) {
            return Err(QkdError::param("delta_slack", self.delta_slack, "a finite value > 0"));
        }
        self.source()?;
        self.channel()?;
        if !(1..=MAX_ANNOUNCE_BITS).contains(&self.m_bits) {
            return Err(QkdError::param("m_bits", self.m_bits as f64, "1 <= m <= 63"));
        }
        if !(self.abort_threshold > 0.0 && self.abort_threshold < 1.0) {
            return Err(QkdError::param(
                "abort_threshold",
                self.abort_threshold,
                "0 < threshold < 1",
            ));
        }
        if self.css.n() > MAX_DECODE_LEN {
            return Err(QkdError::Config(format!(
                "css block length {} exceeds the decodable limit {MAX_DECODE_LEN}",
                self.css.n()
            )));
        }
        self.eve.validate()
    }

    /// Oscillators Alice prepares: `⌈(4+δ)n⌉`.
    pub fn oscillators(&self) -> usize {
        let exact = (4.0 + self.delta_slack) * self.n as f64;
        // 4.4 * 700 = 3080.0000000000005 should not round up to 3081
        let nearest = exact.round();
        if (exact - nearest).abs() <= 1e-9 * exact {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }

    pub fn source(&self) -> Result<SqueezedSource> {
        SqueezedSource::new(self.tilde_delta, self.alpha)
    }

    pub fn channel(&self) -> Result<ChannelModel> {
        let compensation = if self.amplified {
            Compensation::ClassicalRescale
        } else {
            Compensation::None
        };
        ChannelModel::fiber(self.kappa_d, compensation)
    }

    /// Whole CSS blocks that fit in `n` key bits.
    pub fn key_blocks(&self) -> usize {
        self.n / self.css.n()
    }

    pub fn key_len(&self) -> usize {
        self.key_blocks() * self.css.key_bits()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| QkdError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}
