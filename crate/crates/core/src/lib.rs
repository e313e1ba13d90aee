//! Exactly k-wise independent ±1 families, an adversarial pairwise family
//! whose walks drift by Θ(√n lg n), and the certificates used to bound the
//! maximal excursion of k-wise independent walks and insertion-stream trackers.
//!
//! The crate is organised by subsystem:
//!
//! * [`sign_families`] builds and samples sign families and computes their
//!   first two moments exactly.
//! * [`walks`] turns sampled sign vectors into excursion statistics and
//!   scaling experiments.
//! * [`dyadic_matrix`] is the dyadic certificate matrix for the pairwise
//!   second-moment bound.
//! * [`maximal_inequality`] holds the nested-interval construction behind the
//!   4-wise maximal inequality.
//! * [`streams`] covers insertion-only streams, their ε-net hierarchy and the
//!   chaining forms that dominate the running inner product.

pub mod dyadic_matrix;
pub mod error;
pub mod gf2;
pub mod maximal_inequality;
pub mod parallel;
pub mod rng;
pub mod sign_families;
pub mod stats;
pub mod streams;
pub mod walks;

pub use error::{Error, Result};
pub use sign_families::{FamilyKind, FamilySpec, Sampler, SignVector, Stage};
