//! Closed-form security mathematics: squeezing conversions, entanglement
//! measures, key-rate bounds, loss-degraded widths and the distance limits
//! they imply.
//!
//! Two widths appear throughout. `Δ` belongs to the two-mode entangled pair
//! (`Δ² = 2e^{-2r}`, vacuum product at `Δ = √2`) and sets the distribution of
//! `q_A - q_B`. `Δ̃` is the width of the single-mode signal Alice actually
//! sends (`Δ̃ = e^{-r}`, vacuum at `Δ̃ = 1`). They are related by
//! `Δ̃² = Δ²/(1 + Δ⁴/4)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use crate::gkp_code::{shift_error_prob, ErrorMethod};
use crate::{QkdError, Result};

/// Raw-bit error rate at which the asymptotic CSS key rate reaches zero.
pub const DEFAULT_ERROR_THRESHOLD: f64 = 0.11;

const BISECTION_TOL: f64 = 1e-12;
const GOLDEN_TOL: f64 = 1e-7;
const MIN_SEARCH_TILDE: f64 = 1e-3;

pub fn delta_from_tilde(tilde_delta: f64) -> Result<f64> {
    if !(tilde_delta > 0.0 && tilde_delta <= 1.0) {
        return Err(QkdError::param("tilde_delta", tilde_delta, "0 < tilde_delta <= 1"));
    }
    let t2 = tilde_delta * tilde_delta;
    let s = (1.0 - t2 * t2).max(0.0).sqrt();
    Ok((2.0 * t2 / (1.0 + s)).sqrt())
}

pub fn tilde_from_delta(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= SQRT_2 * (1.0 + 1e-15)) {
        return Err(QkdError::param("delta", delta, "0 < delta <= sqrt(2)"));
    }
    let d2 = delta * delta;
    Ok((d2 / (1.0 + d2 * d2 / 4.0)).sqrt().min(1.0))
}

/// All equivalent descriptions of one squeezing level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    /// Two-mode width `Δ`.
    pub delta: f64,
    /// Single-mode signal width `Δ̃`.
    pub tilde_delta: f64,
    /// Single-mode squeeze parameter, `Δ̃ = e^{-r}`.
    pub r: f64,
    /// Two-mode squeeze parameter, `Δ² = 2e^{-2r}`.
    pub r_two_mode: f64,
    /// Noise suppression of the squeezed quadrature, `10·log₁₀(Δ̃⁻²)`.
    pub db: f64,
}

/// The one quantity [`convert`] starts from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezeSpec {
    Delta(f64),
    TildeDelta(f64),
    R(f64),
    RTwoMode(f64),
    Db(f64),
}

pub fn convert(spec: SqueezeSpec) -> Result<SqueezeParams> {
    let (delta, tilde_delta) = match spec {
        SqueezeSpec::Delta(d) => (d, tilde_from_delta(d)?),
        SqueezeSpec::TildeDelta(t) => (delta_from_tilde(t)?, t),
        SqueezeSpec::R(r) => {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(QkdError::param("r", r, "a finite r >= 0"));
            }
            let t = (-r).exp();
            (delta_from_tilde(t)?, t)
        }
        SqueezeSpec::RTwoMode(r) => {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(QkdError::param("r_two_mode", r, "a finite r >= 0"));
            }
            let d = SQRT_2 * (-r).exp();
            (d, tilde_from_delta(d)?)
        }
        SqueezeSpec::Db(db) => {
            if !(db >= 0.0 && db.is_finite()) {
                return Err(QkdError::param("db", db, "a finite value >= 0"));
            }
            let t = 10f64.powf(-db / 20.0);
            (delta_from_tilde(t)?, t)
        }
    };
    Ok(SqueezeParams {
        delta,
        tilde_delta,
        r: -tilde_delta.ln(),
        r_two_mode: -(delta / SQRT_2).ln(),
        db: -20.0 * tilde_delta.log10(),
    })
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Entanglement of the two-mode pair in ebits,
/// `cosh²r·log₂cosh²r − sinh²r·log₂sinh²r`.
pub fn ebits(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= SQRT_2) {
        return Err(QkdError::param("delta", delta, "0 < delta <= sqrt(2)"));
    }
    let r = -(delta / SQRT_2).ln();
    let c = r.cosh().powi(2);
    let s = r.sinh().powi(2);
    Ok((xlog2x(c) - xlog2x(s)).max(0.0))
}

/// Entanglement of formation of a Bell-diagonal pair with fidelity `F`.
pub fn entanglement_of_formation(fidelity: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&fidelity) {
        return Err(QkdError::param("fidelity", fidelity, "1/2 <= F <= 1"));
    }
    Ok(binary_entropy(0.5 + (fidelity * (1.0 - fidelity)).sqrt()))
}

/// Asymptotic CSS key rate `min(1 − 2H₂(p_Z), 1 − 2H₂(p_X))`, clamped at 0.
pub fn key_rate(p_z: f64, p_x: f64) -> Result<f64> {
    for (name, p) in [("p_z", p_z), ("p_x", p_x)] {
        if !(0.0..=0.5).contains(&p) {
            return Err(QkdError::param(name, p, "0 <= p <= 1/2"));
        }
    }
    let rate = (1.0 - 2.0 * binary_entropy(p_z)).min(1.0 - 2.0 * binary_entropy(p_x));
    Ok(rate.max(0.0))
}

fn bisect<F: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, above: F) -> f64 {
    // invariant: !above(lo), above(hi)
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest `Δ` whose first-window error probability stays at `threshold`.
///
/// The window error grows monotonically on `(0, √2]`, so the root is
/// bracketed by a tiny width and the vacuum width.
pub fn solve_secure_delta(threshold: f64) -> Result<f64> {
    let lo = 1e-3;
    let hi = SQRT_2;
    let window = |d: f64| shift_error_prob(d, ErrorMethod::Window).expect("positive width");
    if !(threshold > window(lo) && threshold < window(hi)) {
        return Err(QkdError::param(
            "threshold",
            threshold,
            "a window error probability reachable with 0 < delta <= sqrt(2) (about 0.3677 at most)",
        ));
    }
    Ok(bisect(lo, hi, |d| window(d) > threshold))
}

/// `Δ*` for the default 11% threshold, computed once.
pub fn secure_delta() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| solve_secure_delta(DEFAULT_ERROR_THRESHOLD).expect("default threshold is reachable"))
}

/// `Δ̃*`, the signal width at which `Δ = Δ*` with no loss.
pub fn secure_tilde_delta() -> f64 {
    tilde_from_delta(secure_delta()).expect("secure delta is physical")
}

/// A fiber of `kappa_d` attenuation lengths, with or without Bob's
/// loss-compensating amplifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossScenario {
    pub kappa_d: f64,
    pub amplified: bool,
}

impl LossScenario {
    pub fn new(kappa_d: f64, amplified: bool) -> Result<Self> {
        if !(kappa_d >= 0.0 && kappa_d.is_finite()) {
            return Err(QkdError::param("kappa_d", kappa_d, "a finite value >= 0"));
        }
        Ok(Self { kappa_d, amplified })
    }

    pub fn xi(&self) -> f64 {
        (-self.kappa_d / 2.0).exp()
    }

    /// Amplifier power gain `ξ⁻²` (1 when unamplified).
    pub fn gain(&self) -> f64 {
        if self.amplified {
            self.kappa_d.exp()
        } else {
            1.0
        }
    }
}

fn check_tilde(tilde_delta: f64) -> Result<()> {
    if tilde_delta > 0.0 && tilde_delta <= 1.0 {
        Ok(())
    } else {
        Err(QkdError::param("tilde_delta", tilde_delta, "0 < tilde_delta <= 1"))
    }
}

/// Width of the `q_A − q_B` distribution after the channel.
///
/// Unamplified: `Δ_ξ² = (1 + ξ² − 2ξ√(1−Δ̃⁴) + (1−ξ²)Δ̃²)/Δ̃²`.
/// Amplified (loss then a quantum amplifier of gain `ξ⁻²`):
/// `(Δ_ξ)²_amp = 2(1 − √(1−Δ̃⁴) + (ξ⁻²−1)Δ̃²)/Δ̃²`.
pub fn delta_xi(tilde_delta: f64, scenario: LossScenario) -> Result<f64> {
    check_tilde(tilde_delta)?;
    let scenario = LossScenario::new(scenario.kappa_d, scenario.amplified)?;
    let t2 = tilde_delta * tilde_delta;
    let s = (1.0 - t2 * t2).max(0.0).sqrt();
    let width2 = if scenario.amplified {
        let excess = scenario.kappa_d.exp_m1();
        2.0 * (1.0 - s + excess * t2) / t2
    } else {
        let xi = scenario.xi();
        let xi2 = xi * xi;
        (1.0 + xi2 - 2.0 * xi * s + (1.0 - xi2) * t2) / t2
    };
    Ok(width2.sqrt())
}

/// Width of `q_A − q_B/ξ` when Bob compensates the loss by rescaling his
/// outcome classically: `Δ² + (ξ⁻² − 1)`.
pub fn delta_xi_rescaled(tilde_delta: f64, kappa_d: f64) -> Result<f64> {
    let delta = delta_from_tilde(tilde_delta)?;
    let scenario = LossScenario::new(kappa_d, true)?;
    Ok((delta * delta + scenario.kappa_d.exp_m1()).sqrt())
}

/// Longest channel `κd` for which the difference width stays below `Δ*`.
/// Returns 0 when the signal is already too wide without loss.
pub fn max_distance(tilde_delta: f64, amplified: bool) -> f64 {
    let target = secure_delta();
    if tilde_delta.is_nan() || tilde_delta <= 0.0 || tilde_delta >= secure_tilde_delta() {
        return 0.0;
    }
    let width = |kd: f64| delta_xi(tilde_delta, LossScenario { kappa_d: kd, amplified }).expect("validated width");
    if width(0.0) >= target {
        return 0.0;
    }
    let mut hi = 1.0;
    while width(hi) < target {
        hi *= 2.0;
    }
    bisect(0.0, hi, |kd| width(kd) >= target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub tilde_delta: f64,
    pub kappa_d: f64,
}

/// Signal width maximizing [`max_distance`], by golden-section search over
/// `[10⁻³, Δ̃*]`.
///
/// The amplified curve decreases monotonically, so its optimum is the lower
/// end of the search interval; the supremum `ln(1 + Δ*²/2)` is only reached
/// as `Δ̃ → 0`.
pub fn optimal_operating_point(amplified: bool) -> OperatingPoint {
    let f = |t: f64| max_distance(t, amplified);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (MIN_SEARCH_TILDE, secure_tilde_delta());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = 0.5 * (a + b);
    if f(MIN_SEARCH_TILDE) > f(best) {
        best = MIN_SEARCH_TILDE;
    }
    OperatingPoint {
        tilde_delta: best,
        kappa_d: f(best),
    }
}

/// Limit of the amplified distance as `Δ̃ → 0`: `ln(1 + Δ*²/2)`.
pub fn amplified_distance_limit() -> f64 {
    let d = secure_delta();
    (d * d / 2.0).ln_1p()
}

/// Holevo bound on the eavesdropper's information about `k` key bits when
/// the distilled pairs have fidelity `1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveInfoBound {
    /// Entropy of the maximal-entropy state with top eigenvalue `1 − δ` in
    /// dimension `2^{2k}`.
    pub exact: f64,
    /// First-order form `δ(1/ln2 + 2k + log₂(1/δ))`.
    pub linearized: f64,
}

pub fn eve_info_bound(delta_fid: f64, k: u32) -> Result<EveInfoBound> {
    if !(delta_fid > 0.0 && delta_fid < 0.5) {
        return Err(QkdError::param("delta", delta_fid, "0 < delta < 1/2"));
    }
    if k == 0 {
        return Err(QkdError::param("k", 0.0, "k >= 1"));
    }
    let two_k = 2.0 * k as f64;
    // log₂(2^{2k} − 1) without forming 2^{2k}
    let log2_dm1 = two_k + (-(2f64.powf(-two_k))).ln_1p() / std::f64::consts::LN_2;
    let d = delta_fid;
    let exact = -xlog2x(1.0 - d) - d * (d.log2() - log2_dm1);
    let linearized = d * (1.0 / std::f64::consts::LN_2 + two_k + (1.0 / d).log2());
    Ok(EveInfoBound { exact, linearized })
}
