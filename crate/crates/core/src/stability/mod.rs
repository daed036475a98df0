//! Stability of radial solutions: Hardy certificates, discretized quadratic
//! forms, the threshold `N_α` and the roots of `Q_N`.

pub mod banded;
pub mod beta1;
pub mod form;
pub mod hardy;
pub mod nalpha;
pub mod qn;
pub mod report;

pub use beta1::{find_beta1, Beta1Options, Beta1Result};
pub use form::{min_eig, min_eig_potential, Grid, MinEig, Potential};
pub use hardy::{beta_prime, hardy_check, hardy_constant, hardy_weight, tail_certificate, HardyMargin};
pub use nalpha::{n_alpha, threshold_poly};
pub use qn::{qn_roots, QnRoots};
pub use report::{classify_stability, StabilityClass, StabilityOptions, StabilityReport};
