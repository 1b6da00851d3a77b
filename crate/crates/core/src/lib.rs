//! Ambiguity-aware adaptive margin contrastive learning for point clouds.
//!
//! The crate is `no_std` (with `alloc`) so the numerics can be embedded
//! anywhere; enable the `std` feature for `std::error::Error` impls.
//!
//! Pipeline, per resolution layer of a [`cloud::LayerStack`]:
//!
//! 1. [`knn`] finds each point's K nearest neighbours and splits them into
//!    same-label (intra) and other-label (inter) sets.
//! 2. [`ambiguity`] turns the two sets into closeness centralities and a
//!    per-point ambiguity `a_i` in `[0, 1]`.
//! 3. [`margin`] maps ambiguity to a margin `m_i = mu * a_i + nu`.
//! 4. [`contrast`] evaluates the margin-shifted supervised contrastive loss
//!    and its gradient on decoder features.
//! 5. [`model`] trains a small encoder-decoder network jointly with
//!    cross-entropy and reports segmentation metrics.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod ambiguity;
pub mod cloud;
pub mod contrast;
pub mod error;
pub mod knn;
pub mod margin;
mod math;
pub mod model;

pub use error::{Error, Result};
