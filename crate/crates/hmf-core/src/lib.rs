//! Kinetic toolbox for the Hamiltonian mean-field (HMF) model.
//!
//! The crate evaluates the formal stability functional `I[f]` for stationary
//! states of the HMF Vlasov equation, builds the narrow-bump perturbation
//! families used to probe stability in Sobolev norms, integrates the Vlasov
//! equation with a semi-Lagrangian scheme, and exercises the bound machinery
//! (orbit averages, separatrix partitions, weighted-norm estimates) that the
//! stability analysis rests on.
//!
//! Module map:
//! * [`elliptic`] — complete elliptic integrals `K`, `E` by AGM iteration.
//! * [`pendulum`] — the integrable one-body pendulum: orbit classification,
//!   modulus, angle-averaged observables and their magnetization derivatives.
//! * [`grid`] — the truncated phase-space grid shared by solver and norms.
//! * [`stability`] — the functional `I[f]`, stationary-state construction,
//!   self-consistent magnetization, and perturbation builders.
//! * [`norms`] — grid-based `L^p` / `W^{1,p}` and spectral `H^s` estimators.
//! * [`vlasov`] — Strang-split semi-Lagrangian time integration.
//! * [`neighborhood`] — `ΔI` decomposition, separatrix-band bounds, and the
//!   parameter-sweep campaigns.

pub mod elliptic;
pub mod error;
pub mod grid;
pub mod neighborhood;
pub mod norms;
pub mod pendulum;
pub mod quad;
mod spline;
pub mod stability;
pub mod vlasov;

pub use error::{Error, Result};
