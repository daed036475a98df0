//! Radial solutions of `Δ²u = |x|^α e^u` and `Δu + |x|^α e^u = 0`: shooting for
//! the separatrix, asymptotic expansions, energy functions and stability.

pub mod asymptotics;
pub mod bounds;
pub mod error;
pub mod io;
pub mod logcoord;
pub mod ode;
pub mod par;
pub mod quadrature;
pub mod radial;
pub mod second_order;
pub mod shooting;
pub mod stability;
pub mod sweep;

pub use error::{Error, Result};
pub use par::Execution;
pub use radial::{integrate, IntegrateOptions, ProblemParams, RadialProfile, RadialState};
pub use shooting::{find_beta0, ShootOptions, ShootResult};
