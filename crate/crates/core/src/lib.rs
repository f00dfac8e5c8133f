//! Simulation and security analysis of squeezed-state continuous-variable
//! quantum key distribution.
//!
//! Alice sends Gaussian wave packets squeezed in `q` or `p` whose centers are
//! drawn from a broad Gaussian. Bob measures a random quadrature, the parties
//! sift, and each retained value carries one raw key bit: the parity of the
//! nearest multiple of `√π` after Bob subtracts Alice's announced residue.
//! Raw bits are verified on a random check sample and then reconciled and
//! privacy-amplified with a CSS code pair (`C₂ ⊂ C₁`, key = coset of `C₂`).
//!
//! Every state, channel and measurement involved is Gaussian, so the
//! simulator tracks outcome means and variances rather than wavefunctions.
//!
//! Modules:
//! - [`gaussian_channel`]: quadrature statistics, the squeezed source, loss and amplifier maps.
//! - [`gkp_code`]: residue arithmetic modulo the code spacing and shift-error probabilities.
//! - [`security_analysis`]: squeezing conversions, entanglement measures, thresholds, loss limits.
//! - [`css_postprocess`]: GF(2) codes, nearest-codeword decoding, coset keys, sampling bound.
//! - [`protocol`]: the two-party protocol as a message-driven state machine.

pub mod css_postprocess;
mod error;
pub mod gaussian_channel;
pub mod gkp_code;
pub mod protocol;
pub mod rng;
pub mod security_analysis;

pub use error::{QkdError, Result};
