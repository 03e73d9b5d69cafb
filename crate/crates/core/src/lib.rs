//! Futaki invariants, energy functionals and Deligne-pairing norms of
//! complete intersections in projective space.
//!
//! * [`poly_core`]: polynomials, varieties, group elements, vector fields.
//! * [`futaki_exact`]: exact rational Futaki invariants and Chow weights.
//! * [`variety_numerics`]: fiber solving and Monte-Carlo integration on `M`.
//! * [`functionals`]: Aubin-Yau, Futaki and Mabuchi functionals along orbits.
//! * [`deligne_norms`]: the polynomial norms and the identities relating them
//!   to the functionals.

pub mod deligne_norms;
pub mod error;
pub mod functionals;
pub mod futaki_exact;
pub mod poly_core;
pub mod variety_numerics;

pub use error::{Error, Result};
pub use num_complex::Complex64;
