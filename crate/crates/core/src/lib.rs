//! Multipoint Padé approximants through tridiagonal linear pencils.
//!
//! A continued fraction
//!
//! ```text
//! 1/β₀(z) − α₀ᴸ(z)α₀ᴿ(z)/β₁(z) − α₁ᴸ(z)α₁ᴿ(z)/β₂(z) − …
//! ```
//!
//! with `β_n`, `α_nᴸ`, `α_nᴿ` of degree at most one is encoded as a
//! tridiagonal pencil `zB − A`. Its convergents `p_n/q_n` are multipoint
//! Padé approximants of the m-function `⟨(zB − A)⁻¹e₀, e₀⟩`, interpolating
//! at the roots of the `α` polynomials.
//!
//! The crate is organised bottom-up:
//!
//! * [`poly`] and [`pencil`]: degree-one polynomials, pencils, finite sections.
//! * [`recurrence`]: the three-term recurrence, convergents, scaled solutions.
//! * [`resolvent`]: resolvent entries, decay diagnostics, the m-function.
//! * [`markov`]: pencils built from a discrete measure and conjugate nodes.
//! * [`contour`] and [`factorization`]: LU/UL factorizations, Christoffel and
//!   Geronimus transforms, and the biorthogonality functionals.

// Negated comparisons are deliberate: they reject NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
mod dd;
pub mod error;
pub mod factorization;
pub mod linalg;
pub mod markov;
pub mod pencil;
pub mod poly;
pub mod recurrence;
pub mod resolvent;

pub use num_complex::Complex64;

pub use contour::{Contour, ContourSpec};
pub use error::{Error, Result};
pub use factorization::{Gram, LuFactors, MultiChristoffel, UlFactors};
pub use markov::{DiscreteMeasure, MarkovPencil, NodePlan, ThieleStep};
pub use pencil::{FiniteSection, TridiagonalPencil};
pub use poly::{LinearPoly, NodePoint};
pub use recurrence::{RecurrenceTable, ScaledTable};
pub use resolvent::{DecayFit, MEstimate, ResolventProbe};

/// Shorthand for the complex scalar used throughout.
pub type C64 = Complex64;
