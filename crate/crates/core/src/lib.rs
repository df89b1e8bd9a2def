//! Isomonodromic deformations of rank-two Fuchsian and q-Fuchsian systems with
//! four singular points, the sixth Painleve equation and its q-analogue, their
//! spaces of initial conditions, and the limit q -> 1.
//!
//! Formula code is generic over [`arith::Field`], so every identity can be
//! checked exactly over Gaussian rationals or rational functions of `q`, and
//! evaluated numerically over `Complex64`.

pub mod arith;
pub mod birkhoff;
pub mod confluence;
pub mod error;
pub mod fuchsian_diff;
pub mod fuchsian_q;
pub mod ode;
pub mod okamoto;
pub mod qp6_dynamics;
pub mod verify;

pub use error::{Error, Result};
