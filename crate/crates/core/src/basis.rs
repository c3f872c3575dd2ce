//! Orthonormal eigenbasis `u_{m,n,j}(rξ) = B_{m,n}(r) Y_{n,j}(ξ)` of `L²(B_R)`.
//!
//! The radial factors are
//! `B_{m,n}(r) = sqrt(2 / (R³ j_n(λ_{n,m})²)) j_n(λ_{n,m} r / R)`
//! with `λ_{n,m}` the `m`-th positive zero of `j_{n-1}`. The normalization
//! constant is always taken positive; `B_{m,n}(R)` then carries the sign of
//! `j_n(λ_{n,m})` and equals `±sqrt(2/R³)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::{
    find_bessel_zeros, gauss_legendre, legendre_p, sph_bessel_j_prime, sph_bessel_j_second, sph_j, QuadratureRule,
    ZeroTable,
};
use crate::{Error, Result};

/// Index `(m, n, j)` of a basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub m: u32,
    pub n: u32,
    pub j: i32,
}

impl BasisIndex {
    pub fn new(m: u32, n: u32, j: i32) -> Result<Self> {
        if m < 1 {
            return Err(Error::Domain(format!("radial order m = {m} must be >= 1")));
        }
        if j.unsigned_abs() > n {
            return Err(Error::Domain(format!("|j| = {} exceeds n = {n}", j.abs())));
        }
        Ok(Self { m, n, j })
    }

    pub fn zonal(m: u32, n: u32) -> Result<Self> {
        Self::new(m, n, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureOrders {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self { radial: 256, angular: 256 }
    }
}

#[derive(Debug, Clone)]
pub struct BasisContext {
    radius: f64,
    zeros: ZeroTable,
    norm: Vec<f64>,
    radial_rule: QuadratureRule,
    angular_rule: QuadratureRule,
    orders: QuadratureOrders,
}

impl BasisContext {
    pub fn new(radius: f64, m_max: u32, n_max: u32, orders: QuadratureOrders) -> Result<Self> {
        let zeros = find_bessel_zeros(n_max, m_max)?;
        Self::with_zeros(radius, zeros, orders)
    }

    /// Builds a context around an existing zero table, verified or not.
    pub fn with_zeros(radius: f64, zeros: ZeroTable, orders: QuadratureOrders) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter(format!("radius {radius} must be positive")));
        }
        if orders.radial < 1 || orders.radial > crate::numerics::MAX_ORDER {
            return Err(Error::Parameter(format!("radial quadrature order {}", orders.radial)));
        }
        if orders.angular < 2 || orders.angular % 2 != 0 || orders.angular / 2 > crate::numerics::MAX_ORDER {
            return Err(Error::Parameter(format!(
                "angular quadrature order {} must be even and >= 2",
                orders.angular
            )));
        }
        let r3 = radius.powi(3);
        let mut norm = Vec::with_capacity(((zeros.n_max() + 1) * zeros.m_max()) as usize);
        for n in 0..=zeros.n_max() {
            for m in 1..=zeros.m_max() {
                let jl = sph_j(n, zeros.lambda(n, m));
                norm.push((2.0 / (r3 * jl * jl)).sqrt());
            }
        }
        Ok(Self {
            radius,
            radial_rule: gauss_legendre(orders.radial).mapped(0.0, radius),
            angular_rule: gauss_legendre(orders.angular / 2).split_at_origin(),
            zeros,
            norm,
            orders,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn m_max(&self) -> u32 {
        self.zeros.m_max()
    }

    pub fn n_max(&self) -> u32 {
        self.zeros.n_max()
    }

    pub fn zeros(&self) -> &ZeroTable {
        &self.zeros
    }

    pub fn orders(&self) -> QuadratureOrders {
        self.orders
    }

    /// Gauss–Legendre rule on `[0, R]` (unweighted; multiply by `r²` for `L²_w`).
    pub fn radial_rule(&self) -> &QuadratureRule {
        &self.radial_rule
    }

    /// Two-panel Gauss–Legendre rule in `t = cos ϑ` on `[-1, 0] ∪ [0, 1]`.
    pub fn angular_rule(&self) -> &QuadratureRule {
        &self.angular_rule
    }

    fn check(&self, m: u32, n: u32) -> Result<()> {
        if self.zeros.contains(m, n) {
            Ok(())
        } else {
            Err(Error::BasisIndex { m, n, m_max: self.m_max(), n_max: self.n_max() })
        }
    }

    /// `γ_{n,m} = λ_{n,m} / R`.
    pub fn gamma(&self, m: u32, n: u32) -> Result<f64> {
        self.check(m, n)?;
        Ok(self.zeros.lambda(n, m) / self.radius)
    }

    /// Positive normalization constant `sqrt(2 / (R³ j_n(λ_{n,m})²))`.
    pub fn norm(&self, m: u32, n: u32) -> Result<f64> {
        self.check(m, n)?;
        Ok(self.norm[(n * self.m_max() + m - 1) as usize])
    }

    pub fn radial_basis_eval(&self, m: u32, n: u32, r: f64) -> Result<f64> {
        let g = self.gamma(m, n)?;
        Ok(self.norm(m, n)? * sph_j(n, g * r))
    }

    /// `B'_{m,n}(r)` from the Bessel recurrence.
    pub fn radial_basis_derivative(&self, m: u32, n: u32, r: f64) -> Result<f64> {
        let g = self.gamma(m, n)?;
        Ok(self.norm(m, n)? * g * sph_bessel_j_prime(n, g * r))
    }

    /// `B''_{m,n}(r)` from the Bessel recurrences.
    pub fn radial_basis_second_derivative(&self, m: u32, n: u32, r: f64) -> Result<f64> {
        let g = self.gamma(m, n)?;
        if r == 0.0 {
            // j_n''(0) is 0 except j_0''(0) = -1/3 and j_2''(0) = 2/15
            let d2 = match n {
                0 => -1.0 / 3.0,
                2 => 2.0 / 15.0,
                _ => 0.0,
            };
            return Ok(self.norm(m, n)? * g * g * d2);
        }
        Ok(self.norm(m, n)? * g * g * sph_bessel_j_second(n, g * r))
    }

    /// `u_{m,n,j}(r, φ, t)`.
    pub fn basis_function(&self, idx: BasisIndex, r: f64, phi: f64, t: f64) -> Result<f64> {
        let radial = self.radial_basis_eval(idx.m, idx.n, r)?;
        Ok(radial * crate::numerics::sph_harmonic(idx.n, idx.j, phi, t)?)
    }

    /// `∫_0^R f g r² dr`.
    pub fn radial_inner_product<F, G>(&self, f: F, g: G) -> f64
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        self.radial_rule.nodes.iter().zip(&self.radial_rule.weights).map(|(&r, &w)| w * r * r * f(r) * g(r)).sum()
    }

    /// `⟨F, u_{m,n,0}⟩_{L²(B)}` for an axisymmetric field `F(r, t)`.
    pub fn field_coefficient<F>(&self, field: F, m: u32, n: u32) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        let norm = self.norm(m, n)?;
        let g = self.gamma(m, n)?;
        let ynorm = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
        let ang = &self.angular_rule;
        let pn: Vec<f64> = ang.nodes.iter().map(|&t| legendre_p(n, t)).collect();
        let mut acc = 0.0;
        for (&r, &wr) in self.radial_rule.nodes.iter().zip(&self.radial_rule.weights) {
            let mut inner = 0.0;
            for ((&t, &wt), p) in ang.nodes.iter().zip(&ang.weights).zip(&pn) {
                inner += wt * field(r, t) * p;
            }
            acc += wr * r * r * norm * sph_j(n, g * r) * inner;
        }
        Ok(2.0 * PI * ynorm * acc)
    }

    /// First `count` coefficients `⟨f, B_{m,n}⟩_{L²_w(0,R)}`.
    pub fn radial_expand<F>(&self, f: F, n: u32, count: u32) -> Result<Vec<f64>>
    where
        F: Fn(f64) -> f64,
    {
        self.check(count.max(1), n)?;
        let fr: Vec<f64> = self.radial_rule.nodes.iter().map(|&r| f(r)).collect();
        (1..=count)
            .map(|m| {
                let norm = self.norm(m, n)?;
                let g = self.gamma(m, n)?;
                Ok(self
                    .radial_rule
                    .nodes
                    .iter()
                    .zip(&self.radial_rule.weights)
                    .zip(&fr)
                    .map(|((&r, &w), &fv)| w * r * r * fv * norm * sph_j(n, g * r))
                    .sum())
            })
            .collect()
    }

    /// `Σ_m c_m B_{m,n}(r)` with `coeffs[0]` multiplying `B_{1,n}`.
    pub fn radial_synthesize(&self, coeffs: &[f64], n: u32, r: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            if *c != 0.0 {
                acc += c * self.radial_basis_eval(i as u32 + 1, n, r)?;
            }
        }
        Ok(acc)
    }

    /// `B_{m,n}` at every radial quadrature node, for `m = 1..=m_max`, `n` fixed.
    pub fn radial_table(&self, n: u32, m_max: u32) -> Result<Vec<Vec<f64>>> {
        (1..=m_max)
            .map(|m| {
                let norm = self.norm(m, n)?;
                let g = self.gamma(m, n)?;
                Ok(self.radial_rule.nodes.iter().map(|&r| norm * sph_j(n, g * r)).collect())
            })
            .collect()
    }
}

/// Sparse coefficients of an axisymmetric field in `u_{m,n,0}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoeffSet {
    m_max: u32,
    n_max: u32,
    entries: BTreeMap<(u32, u32), f64>,
}

impl CoeffSet {
    pub fn new(m_max: u32, n_max: u32) -> Self {
        Self { m_max, n_max, entries: BTreeMap::new() }
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn insert(&mut self, m: u32, n: u32, value: f64) -> Result<()> {
        if m < 1 || m > self.m_max || n > self.n_max {
            return Err(Error::BasisIndex { m, n, m_max: self.m_max, n_max: self.n_max });
        }
        if !value.is_finite() {
            return Err(Error::Domain(format!("non-finite coefficient at ({m}, {n})")));
        }
        self.entries.insert((m, n), value);
        Ok(())
    }

    /// Coefficient at `(m, n)`, zero when absent.
    pub fn get(&self, m: u32, n: u32) -> f64 {
        self.entries.get(&(m, n)).copied().unwrap_or(0.0)
    }

    /// Entries in `(m, n)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
