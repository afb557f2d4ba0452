//! adhesim — a numerical laboratory for the one-dimensional adhesive
//! obstacle energy with bending.
//!
//! The energy under study is
//!
//! ```text
//! E_eps[u] = eps² ∫ κ² ds + ∫ ds − ∫_{u=ψ} (1−α) ds,     u ≥ ψ,
//! ```
//!
//! a membrane above an obstacle ψ that pays bending and tension but earns an
//! adhesion discount α ∈ (0,1) where it coincides with the obstacle. The
//! crate computes:
//!
//! * exact-structure minimizers of the ε = 0 energy (alternating adhered
//!   intervals and straight chords, contact angles satisfying the Young law
//!   cos θ = α) via dynamic programming plus Newton refinement;
//! * the singular-limit functional F = Σ 4(√2 − √(1+α)) over free-boundary
//!   points, and recovery profiles built from boundary-layer ODE solutions,
//!   radius-ε circular arcs and a segment, realizing F in the ε ↓ 0 limit;
//! * approximate minimizers of E_ε itself by annealed smoothed-adhesion
//!   projected descent;
//! * certification sweeps: the Modica–Mortola-type inequality
//!   εB + (1/ε)(L − L̄) ≥ W on curves, equipartition along layers, and the
//!   asymptotic expansion inf E_ε = inf E_0 + ε·inf F + o(ε).

pub mod curves;
pub mod e0;
pub mod energy;
pub mod error;
pub mod layers;
pub mod quad;
pub mod scene;
pub mod spline;

pub use error::{AdhesimError, Result};
