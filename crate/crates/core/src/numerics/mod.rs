//! Special functions, quadrature and root finding.

mod bessel;
mod legendre;
mod quadrature;
mod zeros;

pub use bessel::{sph_bessel_j, sph_bessel_j_prime, sph_bessel_j_second, sph_j, sph_j_minus_one};
pub use legendre::{legendre_p, legendre_p_and_derivative, legendre_table, sph_harmonic, zonal_harmonic};
pub use quadrature::{gauss_legendre, QuadratureRule, MAX_ORDER};
pub use zeros::{find_bessel_zeros, zeros_of_order, ZeroTable};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("root bracketing failed: {0}")]
    RootBracket(String),
}
