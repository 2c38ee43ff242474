//! Arbitrary-precision complete elliptic integrals, singular moduli and the
//! Legendre-function series for `Γ(1/4)² / π^(3/2)`.
//!
//! Module map:
//! - [`numeric`]: precision contexts, [`BigReal`] and elementary functions.
//! - [`oracle`]: AGM-based `K`/`E`, the θ₃ q-series and reference constants.
//! - [`moduli`]: singular moduli `k_r`, Landen ascent, multipliers `M_n`.
//! - [`series`]: the `₂F₁`/Legendre series engine and its specializations.
//! - [`verify`]: the runnable invariant suite used by the CLI.

pub mod error;
pub mod moduli;
pub mod numeric;
pub mod oracle;
pub mod series;
pub mod verify;

pub use error::{Error, Result};
pub use moduli::{ModulusPair, MultiplierResult, Provenance};
pub use num_rational::Rational64;
pub use numeric::{make_context, BigReal, PrecisionContext};
pub use series::{ConvergenceReport, SeriesSpec};
