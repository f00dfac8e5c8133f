//! Shift-resistant oscillator code: residues modulo the code spacing,
//! nearest-multiple correction, raw-bit extraction and shift-error
//! probabilities.
//!
//! For the qubit code (`d = 2`, `α = 1`) the codewords sit on multiples of
//! `√π`, a raw bit is the parity of the multiple, and any shift with
//! `|Δq| < √π/2` is corrected.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::gaussian_channel::Quadrature;
use crate::{QkdError, Result};

pub fn sqrt_pi() -> f64 {
    PI.sqrt()
}

/// Spacings and correctable radii of the `d`-dimensional code with
/// asymmetry `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeLattice {
    pub dim: u32,
    pub alpha: f64,
    /// Codeword spacing in `q`: `α·√(2π/d)` (`√π·α` for `d = 2`).
    pub spacing_q: f64,
    /// Codeword spacing in `p`: `√(2π/d)/α` (`√π/α` for `d = 2`).
    pub spacing_p: f64,
    pub radius_q: f64,
    pub radius_p: f64,
}

impl CodeLattice {
    pub fn spacing(&self, basis: Quadrature) -> f64 {
        match basis {
            Quadrature::Q => self.spacing_q,
            Quadrature::P => self.spacing_p,
        }
    }

    pub fn radius(&self, basis: Quadrature) -> f64 {
        match basis {
            Quadrature::Q => self.radius_q,
            Quadrature::P => self.radius_p,
        }
    }
}

pub fn code_params(dim: u32, alpha: f64) -> Result<CodeLattice> {
    if dim < 2 {
        return Err(QkdError::param("dim", dim as f64, "dim >= 2"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(QkdError::param("alpha", alpha, "a finite alpha > 0"));
    }
    let unit = (2.0 * PI / dim as f64).sqrt();
    Ok(CodeLattice {
        dim,
        alpha,
        spacing_q: alpha * unit,
        spacing_p: unit / alpha,
        radius_q: alpha * unit / 2.0,
        radius_p: unit / (2.0 * alpha),
    })
}

/// Splits `x = n·spacing + r` with `r ∈ [0, spacing)`.
pub fn residue(x: f64, spacing: f64) -> (i64, f64) {
    debug_assert!(spacing > 0.0);
    let mut n = (x / spacing).floor();
    let mut r = x - n * spacing;
    // floor() can land one cell off when x/spacing rounds across an integer
    if r >= spacing {
        n += 1.0;
        r -= spacing;
    }
    if r < 0.0 {
        n -= 1.0;
        r += spacing;
        if r >= spacing {
            r = 0.0;
            n += 1.0;
        }
    }
    (n as i64, r)
}

pub const MAX_ANNOUNCE_BITS: u32 = 63;

/// A residue announced as an `m`-bit fraction of the spacing:
/// `value = ticks / 2^m · spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnouncedResidue {
    pub ticks: u64,
    pub m_bits: u32,
}

impl AnnouncedResidue {
    pub fn new(ticks: u64, m_bits: u32) -> Result<Self> {
        check_m_bits(m_bits)?;
        if ticks >> m_bits != 0 {
            return Err(QkdError::param("ticks", ticks as f64, "ticks < 2^m"));
        }
        Ok(Self { ticks, m_bits })
    }

    pub fn fraction(&self) -> f64 {
        self.ticks as f64 / (1u64 << self.m_bits) as f64
    }

    pub fn value(&self, spacing: f64) -> f64 {
        self.fraction() * spacing
    }
}

fn check_m_bits(m: u32) -> Result<()> {
    if (1..=MAX_ANNOUNCE_BITS).contains(&m) {
        Ok(())
    } else {
        Err(QkdError::param("m_bits", m as f64, "1 <= m <= 63"))
    }
}

/// Rounds `r/spacing` to `m` fractional bits (ties to even). A value that
/// rounds up to a full spacing wraps to zero.
pub fn quantize_residue(r: f64, spacing: f64, m: u32) -> Result<AnnouncedResidue> {
    check_m_bits(m)?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(QkdError::param("spacing", spacing, "a finite spacing > 0"));
    }
    if !(r >= 0.0 && r < spacing) {
        return Err(QkdError::param("r", r, "0 <= r < spacing"));
    }
    let bins = 1u64 << m;
    let ticks = ((r / spacing) * bins as f64).round_ties_even() as u64;
    Ok(AnnouncedResidue {
        ticks: if ticks >= bins { 0 } else { ticks },
        m_bits: m,
    })
}

/// Subtracts the announced residue from `y`, rounds to the nearest multiple
/// of `spacing` (ties to even) and returns `(parity, multiple)`.
pub fn correct_and_extract(y: f64, announced: &AnnouncedResidue, spacing: f64) -> (u8, i64) {
    let multiple = ((y - announced.value(spacing)) / spacing).round_ties_even() as i64;
    (multiple.rem_euclid(2) as u8, multiple)
}

/// How to evaluate the probability that a Gaussian shift of width `Δ`
/// (density `∝ exp(-x²/Δ²)`) is decoded to an odd multiple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMethod {
    /// `P(|x| > √π/2)`, an upper bound.
    TailBound,
    /// Mass in the first odd window, `√π/2 ≤ |x| < 3√π/2`.
    Window,
    /// Mass in every odd window.
    ExactSeries,
}

const SERIES_CUTOFF: f64 = 1e-18;
const SERIES_MAX_TERMS: usize = 10_000_000;

// Mass of N(0, Δ²/2) in a ≤ |x| < b, from complementary error functions so
// small masses keep full relative precision.
fn window_mass(a: f64, b: f64, delta: f64) -> f64 {
    (libm::erfc(a / delta) - libm::erfc(b / delta)).max(0.0)
}

pub fn shift_error_prob(delta: f64, method: ErrorMethod) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(QkdError::param("delta", delta, "a finite delta > 0"));
    }
    let s = sqrt_pi();
    Ok(match method {
        ErrorMethod::TailBound => libm::erfc(s / (2.0 * delta)),
        ErrorMethod::Window => window_mass(0.5 * s, 1.5 * s, delta),
        ErrorMethod::ExactSeries => {
            let mut total = 0.0;
            let mut k = 1.0;
            for _ in 0..SERIES_MAX_TERMS {
                let term = window_mass((k - 0.5) * s, (k + 0.5) * s, delta);
                total += term;
                if term < SERIES_CUTOFF {
                    break;
                }
                k += 2.0;
            }
            total
        }
    })
}
