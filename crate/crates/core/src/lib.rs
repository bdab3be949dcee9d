//! Isochronous centers and weak instability for the integrable system
//! `ẍ = −g(x)`, `ÿ = −g′(x)y`.
//!
//! The crate is `no_std` with `alloc`. Floating point special functions come
//! from `libm` through `num-traits`; when another crate in the build links
//! std, the inherent float methods win and the `Float` imports go unused.

#![no_std]
// `!(x > 0.0)` deliberately rejects NaN; quadrature tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod expr;
pub mod hill;
pub mod isochrony;
pub mod jet;
pub mod model;
pub mod numeric;
pub mod period;
pub mod superint;

pub use error::{Error, Result};
