//! Wind-induced gravity harmonics of a gas giant.
//!
//! The forward problem maps a zonal wind field to the dynamic harmonics
//! `δJ_n` through either the thermal-wind balance (TWE) or the
//! thermo-gravitational wind balance (TGWE), the latter solved as a Helmholtz
//! problem on the orthonormal spherical-Bessel eigenbasis of the ball. The
//! inverse problem fits the parameters of a radial wind-decay profile to
//! observed harmonics.

pub mod basis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod exec;
pub mod forward;
pub mod io;
pub mod inverse;
pub mod numerics;
pub mod planet;
pub mod selftest;
pub mod wind;

mod error;

pub use error::{Error, Result};
pub use exec::Execution;
