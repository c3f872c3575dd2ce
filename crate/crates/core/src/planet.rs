//! Planet constants and the index-one polytrope background state.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numerics::sph_j;
use crate::{Error, Result};

pub const GRAVITATIONAL_CONSTANT: f64 = 6.67430e-11;

/// Below this fraction of `R`, `r / ρ₀'(r)` uses its limit at the centre.
const CENTRE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanetModel {
    /// Radius (m).
    pub radius: f64,
    /// Mass (kg).
    pub mass: f64,
    /// Rotation rate (rad/s).
    pub omega: f64,
    /// Gravitational constant (m³ kg⁻¹ s⁻²).
    pub g: f64,
}

impl PlanetModel {
    pub fn new(radius: f64, mass: f64, omega: f64, g: f64) -> Result<Self> {
        for (name, v) in [("radius", radius), ("mass", mass), ("omega", omega), ("G", g)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(Self { radius, mass, omega, g })
    }

    /// `R = M = Ω = G = 1`.
    pub fn normalized() -> Self {
        Self { radius: 1.0, mass: 1.0, omega: 1.0, g: 1.0 }
    }

    /// Polytrope constant `K = 2 G R² / π`.
    pub fn k(&self) -> f64 {
        2.0 * self.g * self.radius * self.radius / PI
    }

    /// Mean density `3M / (4π R³)`.
    pub fn rho_bar(&self) -> f64 {
        3.0 * self.mass / (4.0 * PI * self.radius.powi(3))
    }

    pub fn gm(&self) -> f64 {
        self.g * self.mass
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if (0.0..=self.radius).contains(&r) {
            Ok(())
        } else {
            Err(Error::Domain(format!("r = {r} outside [0, {}]", self.radius)))
        }
    }

    /// `ρ₀(r) = ρ̄ (π²/3) j₀(π r / R)`.
    pub fn background_density(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.density_unchecked(r))
    }

    pub(crate) fn density_unchecked(&self, r: f64) -> f64 {
        self.rho_bar() * PI * PI / 3.0 * sph_j(0, PI * r / self.radius)
    }

    /// `ρ₀'(r) = -ρ̄ (π²/3)(π/R) j₁(π r / R)`.
    pub fn background_density_gradient(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.gradient_unchecked(r))
    }

    pub(crate) fn gradient_unchecked(&self, r: f64) -> f64 {
        -self.rho_bar() * PI * PI / 3.0 * (PI / self.radius) * sph_j(1, PI * r / self.radius)
    }

    /// `r / ρ₀'(r)`, continued by its limit `-9R² / (ρ̄ π⁴)` at the centre.
    pub fn r_over_drho(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(self.r_over_drho_unchecked(r))
    }

    pub(crate) fn r_over_drho_unchecked(&self, r: f64) -> f64 {
        if r < CENTRE_LIMIT * self.radius {
            -9.0 * self.radius * self.radius / (self.rho_bar() * PI.powi(4))
        } else {
            r / self.gradient_unchecked(r)
        }
    }

    /// Background coefficient `J⁰_n`: zero for the radial polytrope unless an
    /// override table supplies a value.
    pub fn background_jn(&self, n: u32, overrides: Option<&BackgroundJ>) -> Result<f64> {
        if n < 2 {
            return Err(Error::Domain(format!("J_n defined for n >= 2, got {n}")));
        }
        Ok(overrides.and_then(|b| b.get(n)).unwrap_or(0.0))
    }
}

/// Externally supplied hydrostatic coefficients `J⁰_n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BackgroundJ {
    values: BTreeMap<u32, f64>,
}

impl BackgroundJ {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut last = 1;
        for (n, v) in pairs {
            if n <= last {
                return Err(Error::Parameter(format!("background n must be >= 2 and ascending, got {n}")));
            }
            if !v.is_finite() {
                return Err(Error::Parameter(format!("non-finite J0 at n = {n}")));
            }
            values.insert(n, v);
            last = n;
        }
        Ok(Self { values })
    }

    pub fn get(&self, n: u32) -> Option<f64> {
        self.values.get(&n).copied()
    }

    /// CSV with header `n,J0`.
    pub fn load(path: &Path) -> Result<Self> {
        let rows = crate::io::read_numeric_csv(path, &[&["n", "J0"]])?;
        let mut pairs = Vec::with_capacity(rows.rows.len());
        for (line, row) in rows.rows {
            let n = crate::io::as_index(row[0], path, line)?;
            pairs.push((n, row[1]));
        }
        Self::from_pairs(pairs).map_err(|e| Error::Parse { path: path.into(), line: 0, msg: e.to_string() })
    }
}
