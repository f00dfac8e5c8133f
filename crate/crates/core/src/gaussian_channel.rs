//! Gaussian outcome statistics for the states and channels of the protocol.
//!
//! Units are `ħ = 1` with `q = (a + a†)/√2`, so the vacuum has quadrature
//! variance `1/2`. A wave packet of width `Δ̃` (amplitude `exp(-(q-q₀)²/2Δ̃²)`)
//! has outcome variance `Δ̃²/2`; use [`width_to_variance`] and
//! [`variance_to_width`] to move between the two.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::security_analysis::delta_from_tilde;
use crate::{QkdError, Result};

pub const VACUUM_VARIANCE: f64 = 0.5;

pub fn width_to_variance(width: f64) -> f64 {
    width * width / 2.0
}

pub fn variance_to_width(variance: f64) -> f64 {
    (2.0 * variance).sqrt()
}

/// Mean and variance of the outcome distribution of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMarginal {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianMarginal {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(QkdError::param("mean", mean, "a finite value"));
        }
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(QkdError::param("variance", variance, "a finite value >= 0"));
        }
        Ok(Self { mean, variance })
    }

    pub const fn vacuum() -> Self {
        Self {
            mean: 0.0,
            variance: VACUUM_VARIANCE,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn shifted(self, by: f64) -> Self {
        Self {
            mean: self.mean + by,
            ..self
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.std_dev() * z
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi <= 1.0 {
        Ok(())
    } else {
        Err(QkdError::param("xi", xi, "0 < xi <= 1"))
    }
}

fn check_gain(gain: f64) -> Result<()> {
    if gain >= 1.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(QkdError::param("gain", gain, "a finite gain >= 1"))
    }
}

/// Damping channel with amplitude factor `xi`: `⟨q⟩ → ξ⟨q⟩` and
/// `Δq² - 1/2 → ξ²(Δq² - 1/2)`.
pub fn apply_loss(state: GaussianMarginal, xi: f64) -> Result<GaussianMarginal> {
    check_xi(xi)?;
    let xi2 = xi * xi;
    Ok(GaussianMarginal {
        mean: xi * state.mean,
        variance: xi2 * state.variance + (1.0 - xi2) * VACUUM_VARIANCE,
    })
}

/// Phase-insensitive quantum amplifier with power gain `gain`:
/// `⟨q⟩ → √g⟨q⟩` and `Δq² → gΔq² + (g-1)/2`.
pub fn apply_gain(state: GaussianMarginal, gain: f64) -> Result<GaussianMarginal> {
    check_gain(gain)?;
    Ok(GaussianMarginal {
        mean: gain.sqrt() * state.mean,
        variance: gain * state.variance + (gain - 1.0) * VACUUM_VARIANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

impl Quadrature {
    pub const BOTH: [Quadrature; 2] = [Quadrature::Q, Quadrature::P];

    pub fn conjugate(self) -> Self {
        match self {
            Quadrature::Q => Quadrature::P,
            Quadrature::P => Quadrature::Q,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Quadrature::P
        } else {
            Quadrature::Q
        }
    }
}

impl std::fmt::Display for Quadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quadrature::Q => "q",
            Quadrature::P => "p",
        })
    }
}

/// Alice's source, obtained by measuring one half of a two-mode Gaussian
/// entangled pair.
///
/// Signals squeezed in `q` have width `Δ̃·α`; signals squeezed in `p` have
/// width `Δ̃/α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedSource {
    pub tilde_delta: f64,
    pub alpha: f64,
}

impl SqueezedSource {
    pub fn new(tilde_delta: f64, alpha: f64) -> Result<Self> {
        if !(tilde_delta > 0.0 && tilde_delta <= 1.0) {
            return Err(QkdError::param("tilde_delta", tilde_delta, "0 < tilde_delta <= 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(QkdError::param("alpha", alpha, "a finite alpha > 0"));
        }
        let source = Self { tilde_delta, alpha };
        for basis in Quadrature::BOTH {
            let width = source.width(basis);
            if width > 1.0 {
                return Err(QkdError::param(
                    "tilde_delta (after alpha rescale)",
                    width,
                    "a basis width <= 1",
                ));
            }
        }
        Ok(source)
    }

    pub fn symmetric(tilde_delta: f64) -> Result<Self> {
        Self::new(tilde_delta, 1.0)
    }

    /// Signal wave-packet width in `basis` after the `α` rescale.
    pub fn width(&self, basis: Quadrature) -> f64 {
        match basis {
            Quadrature::Q => self.tilde_delta * self.alpha,
            Quadrature::P => self.tilde_delta / self.alpha,
        }
    }

    /// Variance of the distribution Alice samples her center from.
    pub fn center_variance(&self, basis: Quadrature) -> f64 {
        let w = self.width(basis);
        1.0 / (2.0 * w * w)
    }

    pub fn signal_variance(&self, basis: Quadrature) -> f64 {
        width_to_variance(self.width(basis))
    }

    /// Factor `√(1-Δ̃⁴)` relating Alice's outcome to the signal center.
    pub fn shrink(&self, basis: Quadrature) -> f64 {
        let w = self.width(basis);
        (1.0 - w.powi(4)).max(0.0).sqrt()
    }

    /// Two-mode width `Δ` of the entangled pair this basis corresponds to.
    pub fn epr_delta(&self, basis: Quadrature) -> Result<f64> {
        delta_from_tilde(self.width(basis))
    }
}

/// Draws Alice's outcome `q_A` (or `p_A`), distributed as
/// `N(0, 1/(2Δ̃_b²))`.
pub fn sample_center<R: Rng + ?Sized>(source: &SqueezedSource, basis: Quadrature, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * source.center_variance(basis).sqrt()
}

/// Distribution of the squeezed quadrature of the signal Alice sends after
/// obtaining outcome `center`: mean `√(1-Δ̃_b⁴)·center`, variance `Δ̃_b²/2`.
pub fn conditional_signal(source: &SqueezedSource, center: f64, basis: Quadrature) -> Result<GaussianMarginal> {
    if !center.is_finite() {
        return Err(QkdError::param("center", center, "a finite value"));
    }
    let width = source.width(basis);
    if !(width > 0.0 && width <= 1.0) {
        return Err(QkdError::param(
            "tilde_delta (after alpha rescale)",
            width,
            "0 < width <= 1",
        ));
    }
    Ok(GaussianMarginal {
        mean: source.shrink(basis) * center,
        variance: source.signal_variance(basis),
    })
}

/// Both quadrature marginals of a single-mode Gaussian state whose
/// covariance is diagonal in `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub q: GaussianMarginal,
    pub p: GaussianMarginal,
}

impl ModeState {
    pub const fn vacuum() -> Self {
        Self {
            q: GaussianMarginal::vacuum(),
            p: GaussianMarginal::vacuum(),
        }
    }

    /// Minimum-uncertainty packet of width `width` in `basis`, centered at
    /// `center` in that quadrature and at zero in the conjugate one.
    pub fn squeezed(basis: Quadrature, center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(QkdError::param("width", width, "a finite width > 0"));
        }
        let squeezed = GaussianMarginal::new(center, width_to_variance(width))?;
        let anti = GaussianMarginal::new(0.0, 1.0 / (2.0 * width * width))?;
        Ok(match basis {
            Quadrature::Q => Self { q: squeezed, p: anti },
            Quadrature::P => Self { q: anti, p: squeezed },
        })
    }

    /// The signal Alice sends after obtaining `center` in `basis`.
    pub fn signal(source: &SqueezedSource, center: f64, basis: Quadrature) -> Result<Self> {
        let squeezed = conditional_signal(source, center, basis)?;
        Ok(Self::squeezed(basis, 0.0, source.width(basis))?.with(basis, squeezed))
    }

    pub fn marginal(&self, basis: Quadrature) -> GaussianMarginal {
        match basis {
            Quadrature::Q => self.q,
            Quadrature::P => self.p,
        }
    }

    pub fn with(mut self, basis: Quadrature, marginal: GaussianMarginal) -> Self {
        match basis {
            Quadrature::Q => self.q = marginal,
            Quadrature::P => self.p = marginal,
        }
        self
    }

    pub fn displaced(self, dq: f64, dp: f64) -> Self {
        Self {
            q: self.q.shifted(dq),
            p: self.p.shifted(dp),
        }
    }

    pub fn measure<R: Rng + ?Sized>(&self, basis: Quadrature, rng: &mut R) -> f64 {
        self.marginal(basis).sample(rng)
    }
}

/// Loss channel optionally followed by an amplifier, plus the option for
/// Bob to rescale his outcomes classically by `ξ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub xi: f64,
    pub gain: f64,
    pub classical_rescale: bool,
}

/// How Bob compensates for channel loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    #[default]
    None,
    /// Multiply measured values by `ξ⁻¹`.
    ClassicalRescale,
    /// Phase-insensitive amplifier with gain `ξ⁻²` before detection.
    QuantumAmplifier,
}

impl ChannelModel {
    pub fn new(xi: f64, gain: f64, classical_rescale: bool) -> Result<Self> {
        check_xi(xi)?;
        check_gain(gain)?;
        if xi * gain.sqrt() > 1.0 + 1e-12 {
            return Err(QkdError::param("gain", gain, "xi * sqrt(gain) <= 1"));
        }
        Ok(Self {
            xi,
            gain,
            classical_rescale,
        })
    }

    pub fn lossless() -> Self {
        Self {
            xi: 1.0,
            gain: 1.0,
            classical_rescale: false,
        }
    }

    /// Fiber of `kappa_d` attenuation lengths, `ξ = e^{-κd/2}`.
    pub fn fiber(kappa_d: f64, compensation: Compensation) -> Result<Self> {
        if !(kappa_d >= 0.0 && kappa_d.is_finite()) {
            return Err(QkdError::param("kappa_d", kappa_d, "a finite value >= 0"));
        }
        let xi = (-kappa_d / 2.0).exp();
        match compensation {
            Compensation::None => Self::new(xi, 1.0, false),
            Compensation::ClassicalRescale => Self::new(xi, 1.0, true),
            Compensation::QuantumAmplifier => Self::new(xi, (kappa_d).exp(), false),
        }
    }

    pub fn transmit_marginal(&self, state: GaussianMarginal) -> Result<GaussianMarginal> {
        apply_gain(apply_loss(state, self.xi)?, self.gain)
    }

    pub fn transmit(&self, state: ModeState) -> Result<ModeState> {
        Ok(ModeState {
            q: self.transmit_marginal(state.q)?,
            p: self.transmit_marginal(state.p)?,
        })
    }

    /// Factor Bob applies to his raw outcomes before decoding.
    pub fn outcome_scale(&self) -> f64 {
        if self.classical_rescale {
            1.0 / self.xi
        } else {
            1.0
        }
    }
}
