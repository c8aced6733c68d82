//! Linear algebra of hyper-Kähler vector spaces.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! * [`exterior`]: exterior algebra over an oriented inner-product space,
//!   the induced metrics, volume form and Hodge star;
//! * [`quaternionic`]: hyper-Kähler vector spaces `(g, I, J, K)` and their
//!   Kähler forms;
//! * [`lefschetz`]: Lefschetz operators, the pairings
//!   `ϖ_A(τ, η) = vol-coefficient of τ ∧ L_A^{n-1} η` and the operator
//!   identities relating them to the quaternionic structure;
//! * [`reconstruct`]: recovery of a metric and quaternionic structure from
//!   three symplectic forms;
//! * [`torus`]: tangent models of flat `G`-bundle moduli over flat tori,
//!   with a twisted lattice Laplacian as an independent check.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod exterior;
pub mod lefschetz;
pub mod linalg;
pub mod quaternionic;
pub mod reconstruct;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
pub use exterior::{BasisIndex, KForm, MetricData, Orientation};
pub use quaternionic::{Axis, HyperKahlerSpace};
