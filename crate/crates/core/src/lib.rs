//! Two-qubit concurrence from weak measurements on one qubit.
//!
//! Alice's qubit is weakly coupled to a Laguerre-Gaussian pointer through
//! `sigma_x`, then post-selected on `|0>` and on `|1>`. The two complex weak
//! values read off the pointer centroids determine the concurrence of a pure
//! joint state:
//!
//! ```text
//! C^2 = 4 (1 - m0 m1) m0 m1 / (m0 + m1)^2,    m_i = |w_i|
//! ```
//!
//! The crate covers the exact weak values ([`weak_values`], [`estimator`]),
//! a simulation of the optics ([`pointer`]), finite photon statistics
//! ([`photon_mc`]) and bounds for nearly pure mixed states ([`robustness`]).

pub mod cli;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linalg;
pub mod photon_mc;
pub mod pointer;
pub mod qubit_core;
pub mod random;
pub mod robustness;
pub mod weak_values;

pub use error::{Error, Result};
