//! Thermal-wind source term and the wind-induced harmonics `δJ_n`.
//!
//! The source term is
//!
//! ```text
//! S^u(r, t) = -(4πG/K) (r / ∂_r ρ₀) ∫_{-1}^{t} (Ω·∇)(ρ₀ u_φ)(r, τ) / √(1 - τ²) dτ
//! ```
//!
//! The τ-integral is evaluated in colatitude, `dτ / √(1 - τ²) = -dϑ`, which
//! removes the endpoint singularity. A wind that jumps across the equatorial
//! plane contributes its distributional axial derivative there:
//! `Ω ρ₀(r) [u_φ]_{S→N} / r` is added for every `t >= 0`.
//!
//! Under TWE the density perturbation is `ρ' = S^u / (4πG)` up to a radial
//! function that does not affect `δJ_n` for `n >= 2`. Under TGWE the potential
//! solves `(Δ + π²/R²) V' = S^u + η(r)`, which is diagonal in the eigenbasis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisContext, CoeffSet};
use crate::exec::Execution;
use crate::numerics::{gauss_legendre, legendre_p, legendre_table, QuadratureRule};
use crate::planet::PlanetModel;
use crate::wind::{DecayParams, WindField};
use crate::{Error, Result};

/// Relative threshold below which a Helmholtz denominator counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Number of trailing series terms used for the truncation estimate.
pub const TAIL_TERMS: usize = 5;

/// Default Gauss–Legendre order per colatitude segment of the source integral.
pub const DEFAULT_SEGMENT_ORDER: usize = 8;

/// Sub-panels per smooth piece for pointwise source evaluation.
const POINTWISE_PANELS: usize = 64;

/// An axisymmetric scalar field with its partial derivatives in `(r, t)`.
pub trait AxisymmetricField {
    fn value(&self, r: f64, t: f64) -> f64;
    /// `(∂F/∂r, ∂F/∂t)`.
    fn partials(&self, r: f64, t: f64) -> (f64, f64);
}

impl<F> AxisymmetricField for F
where
    F: Fn(f64, f64) -> (f64, f64, f64),
{
    fn value(&self, r: f64, t: f64) -> f64 {
        self(r, t).0
    }

    fn partials(&self, r: f64, t: f64) -> (f64, f64) {
        let (_, dr, dt) = self(r, t);
        (dr, dt)
    }
}

/// `∂F/∂x₃ = t ∂_r F + ((1 - t²)/r) ∂_t F`.
pub fn axial_derivative<F: AxisymmetricField + ?Sized>(field: &F, r: f64, t: f64) -> f64 {
    let (dr, dt) = field.partials(r, t);
    t * dr + (1.0 - t * t) / r * dt
}

/// `ρ₀ u_φ`.
#[derive(Debug, Clone, Copy)]
pub struct MassFlux<'a> {
    pub planet: &'a PlanetModel,
    pub wind: &'a WindField,
}

impl AxisymmetricField for MassFlux<'_> {
    fn value(&self, r: f64, t: f64) -> f64 {
        self.planet.density_unchecked(r) * self.wind.value(r, t)
    }

    fn partials(&self, r: f64, t: f64) -> (f64, f64) {
        let rho = self.planet.density_unchecked(r);
        let drho = self.planet.gradient_unchecked(r);
        let (u, ur, ut) = self.wind.value_and_partials(r, t);
        (drho * u + rho * ur, rho * ut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicModel {
    #[serde(rename = "TWE")]
    Twe,
    #[serde(rename = "TGWE")]
    Tgwe,
}

impl std::fmt::Display for DynamicModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DynamicModel::Twe => "TWE",
            DynamicModel::Tgwe => "TGWE",
        })
    }
}

/// Evaluates `S^u` for a planet and wind field.
#[derive(Debug, Clone)]
pub struct SourceEvaluator<'a> {
    planet: &'a PlanetModel,
    wind: &'a WindField,
    segment_rule: QuadratureRule,
}

impl<'a> SourceEvaluator<'a> {
    pub fn new(planet: &'a PlanetModel, wind: &'a WindField) -> Self {
        Self::with_segment_order(planet, wind, DEFAULT_SEGMENT_ORDER)
    }

    pub fn with_segment_order(planet: &'a PlanetModel, wind: &'a WindField, order: usize) -> Self {
        Self { planet, wind, segment_rule: gauss_legendre(order.max(1)) }
    }

    fn flux(&self) -> MassFlux<'a> {
        MassFlux { planet: self.planet, wind: self.wind }
    }

    /// `-(4πG/K) · r / ∂_r ρ₀(r)`.
    pub fn prefactor(&self, r: f64) -> f64 {
        -4.0 * PI * self.planet.g / self.planet.k() * self.planet.r_over_drho_unchecked(r)
    }

    /// `(Ω·∇)(ρ₀ u_φ)` at colatitude `theta`.
    fn integrand(&self, r: f64, theta: f64) -> f64 {
        self.planet.omega * axial_derivative(&self.flux(), r, theta.cos())
    }

    fn jump_term(&self, r: f64) -> f64 {
        self.planet.omega * self.planet.density_unchecked(r) * self.wind.equatorial_jump(r) / r
    }

    fn segment(&self, r: f64, lo: f64, hi: f64) -> f64 {
        self.segment_of(|theta| self.integrand(r, theta), lo, hi)
    }

    fn segment_of<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.segment_rule.nodes.iter().zip(&self.segment_rule.weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
            * half
    }

    fn panels(&self, r: f64, lo: f64, hi: f64) -> f64 {
        let width = (hi - lo) / POINTWISE_PANELS as f64;
        (0..POINTWISE_PANELS).map(|i| self.segment(r, lo + i as f64 * width, lo + (i + 1) as f64 * width)).sum()
    }

    /// Points in `t` where the integrand is not smooth, ascending, flagged when
    /// the wind jumps there.
    fn breaks(&self) -> Vec<(f64, bool)> {
        match self.wind.smoothing {
            Some(eps) => vec![(-eps, false), (eps, false)],
            None => vec![(0.0, true)],
        }
    }

    /// `∫_{-1}^{t} (Ω·∇)(ρ₀ u_φ)(r, τ) / √(1 - τ²) dτ`, including the equatorial jump for `t >= 0`.
    pub fn cumulative_integral(&self, r: f64, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        let mut acc = 0.0;
        let mut upper = PI;
        for (tb, jump) in self.breaks() {
            if tb > t || (tb == t && !jump) {
                break;
            }
            let theta_b = tb.acos();
            acc += self.panels(r, theta_b, upper);
            if jump {
                acc += self.jump_term(r);
            }
            upper = theta_b;
        }
        acc + self.panels(r, t.acos(), upper)
    }

    /// `S^u(r, t)` by direct adaptive-free panel quadrature.
    pub fn source_term(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > 0.0 && r <= self.planet.radius) {
            return Err(Error::Domain(format!("source term needs r in (0, R], got {r}")));
        }
        Ok(self.prefactor(r) * self.cumulative_integral(r, t))
    }

    /// `S^u` on the tensor quadrature grid of `ctx`, accumulating the
    /// τ-integral node to node so each radius costs one pass over `t`.
    pub fn tabulate(&self, ctx: &BasisContext, exec: Execution) -> SourceGrid {
        self.tabulate_with(ctx, exec, |r, theta| self.integrand(r, theta), |r| self.jump_term(r))
    }

    /// Prefactor times the cumulative colatitude integral of `integrand(r, ϑ)`,
    /// with `jump(r)` added on crossing a flagged break.
    fn tabulate_with<F, J>(&self, ctx: &BasisContext, exec: Execution, integrand: F, jump: J) -> SourceGrid
    where
        F: Fn(f64, f64) -> f64 + Sync,
        J: Fn(f64) -> f64 + Sync,
    {
        let radial = ctx.radial_rule();
        let angular = ctx.angular_rule();
        let thetas: Vec<f64> = angular.nodes.iter().map(|t| t.acos()).collect();
        let breaks = self.breaks();
        let rows = exec.map_slice(&radial.nodes, |&r| {
            let f = |theta: f64| integrand(r, theta);
            let mut out = vec![0.0; thetas.len()];
            let mut acc = 0.0;
            let mut upper = PI;
            let mut pending = breaks.iter().peekable();
            for (k, (&theta, &t)) in thetas.iter().zip(&angular.nodes).enumerate() {
                while let Some(&&(tb, flagged)) = pending.peek() {
                    if tb > t {
                        break;
                    }
                    let theta_b = tb.acos();
                    acc += self.segment_of(f, theta_b, upper);
                    if flagged {
                        acc += jump(r);
                    }
                    upper = theta_b;
                    pending.next();
                }
                acc += self.segment_of(f, theta, upper);
                upper = theta;
                out[k] = acc;
            }
            let pre = self.prefactor(r);
            out.iter_mut().for_each(|v| *v *= pre);
            out
        });
        SourceGrid::from_rows(ctx, rows)
    }

    /// Tabulates the decay-independent parts of `S^u` for a radial decay `Q(r)`:
    /// `S^u = Q(r) A(r, t) + Q'(r) C(r, t)`. The decay set on the wind is ignored.
    pub fn tabulate_decay_split(&self, ctx: &BasisContext, exec: Execution) -> DecaySplitSource {
        let bare = self.wind.with_decay(DecayParams::none());
        let inner = SourceEvaluator { planet: self.planet, wind: &bare, segment_rule: self.segment_rule.clone() };
        let a = inner.tabulate(ctx, exec);
        let omega = self.planet.omega;
        let c = inner.tabulate_with(
            ctx,
            exec,
            |r, theta| {
                let t = theta.cos();
                omega * self.planet.density_unchecked(r) * bare.value(r, t) * t
            },
            |_| 0.0,
        );
        DecaySplitSource { a, c, radius: self.planet.radius }
    }
}

/// Decay-independent pieces of a wind source; see [`SourceEvaluator::tabulate_decay_split`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySplitSource {
    a: SourceGrid,
    c: SourceGrid,
    radius: f64,
}

impl DecaySplitSource {
    /// `Q A + Q' C` on the grid.
    pub fn combine(&self, decay: &DecayParams) -> SourceGrid {
        let mut out = self.a.clone();
        let nt = out.t.len();
        for (i, &r) in self.a.radii.iter().enumerate() {
            let (q, dq) = decay.factor_with_derivative(r, self.radius);
            for k in i * nt..(i + 1) * nt {
                out.values[k] = q * self.a.values[k] + dq * self.c.values[k];
            }
        }
        out
    }
}

/// Samples of a source on the tensor quadrature grid of a [`BasisContext`].
#[derive(Debug, Clone, PartialEq)]
pub struct SourceGrid {
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    t: Vec<f64>,
    t_weights: Vec<f64>,
    /// Row-major `[radius][t]`.
    values: Vec<f64>,
}

impl SourceGrid {
    fn from_rows(ctx: &BasisContext, rows: Vec<Vec<f64>>) -> Self {
        Self {
            radii: ctx.radial_rule().nodes.clone(),
            radial_weights: ctx.radial_rule().weights.clone(),
            t: ctx.angular_rule().nodes.clone(),
            t_weights: ctx.angular_rule().weights.clone(),
            values: rows.into_iter().flatten().collect(),
        }
    }

    /// Samples an arbitrary source `f(r, t)`.
    pub fn from_fn<F>(ctx: &BasisContext, f: F, exec: Execution) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let t = &ctx.angular_rule().nodes;
        let rows = exec.map_slice(&ctx.radial_rule().nodes, |&r| t.iter().map(|&tt| f(r, tt)).collect());
        Self::from_rows(ctx, rows)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.t.len() + k]
    }

    /// Adds a radial function `η(r)` to every sample.
    pub fn add_radial<F: Fn(f64) -> f64>(&mut self, eta: F) {
        let nt = self.t.len();
        for (i, &r) in self.radii.iter().enumerate() {
            let e = eta(r);
            self.values[i * nt..(i + 1) * nt].iter_mut().for_each(|v| *v += e);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// `a_n(r_i) = ∫_{S²} S(r_i ξ) P_n(ξ₃) dω` for all `n <= n_max`, indexed `[n][i]`.
    pub fn angular_moments(&self, n_max: u32, exec: Execution) -> Vec<Vec<f64>> {
        let nt = self.t.len();
        let tables: Vec<Vec<f64>> = self.t.iter().map(|&t| legendre_table(n_max, t)).collect();
        let per_radius = exec.map_range(self.radii.len(), |i| {
            let row = &self.values[i * nt..(i + 1) * nt];
            let mut acc = vec![0.0; n_max as usize + 1];
            for ((s, w), p) in row.iter().zip(&self.t_weights).zip(&tables) {
                let sw = s * w;
                for (a, pn) in acc.iter_mut().zip(p) {
                    *a += sw * pn;
                }
            }
            acc.iter_mut().for_each(|a| *a *= 2.0 * PI);
            acc
        });
        (0..=n_max as usize).map(|n| per_radius.iter().map(|row| row[n]).collect()).collect()
    }

    /// `⟨S, u_{m,n,0}⟩_{L²(B)}` for `m = 1..=m_max`, given the degree-`n` moments.
    fn projections(&self, ctx: &BasisContext, moments: &[f64], n: u32, m_max: u32) -> Result<Vec<f64>> {
        Ok(self.projections_with(moments, n, &ctx.radial_table(n, m_max)?))
    }

    /// As [`Self::projections`] with `table[m-1][i] = B_{m,n}(r_i)` supplied.
    fn projections_with(&self, moments: &[f64], n: u32, table: &[Vec<f64>]) -> Vec<f64> {
        let ynorm = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt();
        table
            .iter()
            .map(|b| {
                let mut acc = 0.0;
                for (((r, w), a), bm) in self.radii.iter().zip(&self.radial_weights).zip(moments).zip(b) {
                    acc += w * r * r * bm * a;
                }
                ynorm * acc
            })
            .collect()
    }

    /// `⟨S, u_{m,n,0}⟩` for all `m <= m_max`, `n <= n_max`, indexed `[n][m-1]`.
    pub fn basis_projections(&self, ctx: &BasisContext, m_max: u32, n_max: u32, exec: Execution) -> Result<Vec<Vec<f64>>> {
        let moments = self.angular_moments(n_max, exec);
        exec.map_range(n_max as usize + 1, |n| self.projections(ctx, &moments[n], n as u32, m_max))
            .into_iter()
            .collect()
    }
}

/// `(π/R)² - γ_{n,m}²`, failing on a degenerate value other than `(1, 1)`.
pub fn helmholtz_denominator(ctx: &BasisContext, m: u32, n: u32) -> Result<f64> {
    let k2 = (PI / ctx.radius()).powi(2);
    let d = k2 - ctx.gamma(m, n)?.powi(2);
    if (m, n) != (1, 1) && d.abs() < DEGENERACY_TOL * k2 {
        return Err(Error::DegenerateDenominator { m, n, value: d });
    }
    Ok(d)
}

/// Coefficients `⟨V', u_{m,n,0}⟩` of the TGWE potential. The `(1,1)`
/// coefficient and every `n = 0` coefficient are zero by convention.
pub fn potential_coefficients(ctx: &BasisContext, grid: &SourceGrid, m_max: u32, n_max: u32, exec: Execution) -> Result<CoeffSet> {
    let proj = grid.basis_projections(ctx, m_max, n_max, exec)?;
    potential_from_projections(ctx, &proj, m_max, n_max)
}

/// Same as [`potential_coefficients`] from precomputed `⟨S, u_{m,n,0}⟩`, indexed `[n][m-1]`.
pub fn potential_from_projections(ctx: &BasisContext, proj: &[Vec<f64>], m_max: u32, n_max: u32) -> Result<CoeffSet> {
    let mut out = CoeffSet::new(m_max, n_max);
    for n in 1..=n_max {
        for m in 1..=m_max {
            if (m, n) == (1, 1) {
                continue;
            }
            let d = helmholtz_denominator(ctx, m, n)?;
            out.insert(m, n, proj[n as usize][m as usize - 1] / d)?;
        }
    }
    Ok(out)
}

/// A truncated series for one `δJ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// `Σ |term|` over the last few terms.
    pub tail: f64,
    pub terms: Vec<f64>,
}

impl SeriesValue {
    pub fn magnitude(&self) -> f64 {
        self.terms.iter().map(|t| t.abs()).sum()
    }

    /// Tail exceeds 1% of the partial sum and lies above `noise_floor`.
    pub fn tail_warning(&self, noise_floor: f64) -> bool {
        self.tail > 0.01 * self.value.abs() && self.tail > noise_floor
    }
}

fn tgwe_series(ctx: &BasisContext, planet: &PlanetModel, n: u32, proj: &[f64]) -> Result<SeriesValue> {
    let pre = ((2 * n + 1) as f64 / (4.0 * PI)).sqrt() * ctx.radius() / planet.gm();
    let r = ctx.radius();
    let mut terms = Vec::with_capacity(proj.len());
    for (i, s) in proj.iter().enumerate() {
        let m = i as u32 + 1;
        let d = helmholtz_denominator(ctx, m, n)?;
        terms.push(pre * s / d * ctx.radial_basis_eval(m, n, r)?);
    }
    let value = terms.iter().sum();
    let tail = terms.iter().rev().take(TAIL_TERMS).map(|t| t.abs()).sum();
    Ok(SeriesValue { value, tail, terms })
}

/// `δJ_n` under TGWE:
/// `√((2n+1)/(4π)) (R/GM) Σ_m ⟨S^u, u_{m,n,0}⟩ / ((π/R)² - γ_{n,m}²) B_{m,n}(R)`.
pub fn delta_jn_tgwe(
    ctx: &BasisContext,
    planet: &PlanetModel,
    grid: &SourceGrid,
    n: u32,
    m_max: u32,
    exec: Execution,
) -> Result<SeriesValue> {
    if n < 2 {
        return Err(Error::Domain(format!("δJ_n defined for n >= 2, got {n}")));
    }
    let moments = grid.angular_moments(n, exec);
    let proj = grid.projections(ctx, &moments[n as usize], n, m_max)?;
    tgwe_series(ctx, planet, n, &proj)
}

/// `δJ_n` under TWE, `-(1/(M Rⁿ)) ∫_B |x|ⁿ P_n ρ'` with `ρ' = S^u / (4πG)`.
pub fn delta_jn_twe(planet: &PlanetModel, grid: &SourceGrid, n: u32, exec: Execution) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("δJ_n defined for n >= 2, got {n}")));
    }
    let moments = grid.angular_moments(n, exec);
    Ok(twe_from_moments(planet, grid, &moments[n as usize], n))
}

fn twe_from_moments(planet: &PlanetModel, grid: &SourceGrid, moments: &[f64], n: u32) -> f64 {
    let mut acc = 0.0;
    for ((r, w), a) in grid.radii.iter().zip(&grid.radial_weights).zip(moments) {
        acc += w * r.powi(n as i32 + 2) * a;
    }
    -acc / (4.0 * PI * planet.g) / (planet.mass * planet.radius.powi(n as i32))
}

/// `B_{m,n}(r_i)` on the radial nodes for a block of degrees, reusable across sources.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTables {
    n_min: u32,
    m_max: u32,
    /// `[n - n_min][m - 1][i]`.
    tables: Vec<Vec<Vec<f64>>>,
}

impl RadialTables {
    pub fn new(ctx: &BasisContext, n_min: u32, n_max: u32, m_max: u32, exec: Execution) -> Result<Self> {
        let tables = exec
            .map_range((n_max + 1).saturating_sub(n_min) as usize, |i| ctx.radial_table(n_min + i as u32, m_max))
            .into_iter()
            .collect::<Result<_>>()?;
        Ok(Self { n_min, m_max, tables })
    }

    fn get(&self, n: u32) -> Option<&[Vec<f64>]> {
        n.checked_sub(self.n_min).and_then(|k| self.tables.get(k as usize)).map(Vec::as_slice)
    }
}

/// `δJ_n` for every `n` in `n_min..=n_max` under the chosen model.
pub fn delta_j_range(
    ctx: &BasisContext,
    planet: &PlanetModel,
    grid: &SourceGrid,
    model: DynamicModel,
    n_min: u32,
    n_max: u32,
    m_max: u32,
    exec: Execution,
) -> Result<Vec<SeriesValue>> {
    delta_j_range_with(ctx, planet, grid, model, n_min, n_max, m_max, None, exec)
}

/// [`delta_j_range`] with optional precomputed radial tables.
#[allow(clippy::too_many_arguments)]
pub fn delta_j_range_with(
    ctx: &BasisContext,
    planet: &PlanetModel,
    grid: &SourceGrid,
    model: DynamicModel,
    n_min: u32,
    n_max: u32,
    m_max: u32,
    tables: Option<&RadialTables>,
    exec: Execution,
) -> Result<Vec<SeriesValue>> {
    if n_min < 2 || n_max < n_min {
        return Err(Error::Domain(format!("invalid degree range {n_min}..={n_max}")));
    }
    let moments = grid.angular_moments(n_max, exec);
    match model {
        DynamicModel::Twe => Ok((n_min..=n_max)
            .map(|n| {
                let value = twe_from_moments(planet, grid, &moments[n as usize], n);
                SeriesValue { value, tail: 0.0, terms: vec![value] }
            })
            .collect()),
        DynamicModel::Tgwe => exec
            .map_range((n_max - n_min + 1) as usize, |i| {
                let n = n_min + i as u32;
                let a = &moments[n as usize];
                let proj = match tables.filter(|t| t.m_max == m_max).and_then(|t| t.get(n)) {
                    Some(table) => grid.projections_with(a, n, table),
                    None => grid.projections(ctx, a, n, m_max)?,
                };
                tgwe_series(ctx, planet, n, &proj)
            })
            .into_iter()
            .collect(),
    }
}

/// `δJ_n = (2n+1)/(4π) (R/GM) ∫_{S²} V'(Rξ) P_n(ξ₃) dω` with `V'` synthesized from its coefficients.
pub fn surface_potential_jn(ctx: &BasisContext, planet: &PlanetModel, coeffs: &CoeffSet, n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("δJ_n defined for n >= 2, got {n}")));
    }
    let r = ctx.radius();
    let mut boundary = vec![0.0; coeffs.n_max() as usize + 1];
    for ((m, nn), c) in coeffs.iter() {
        boundary[nn as usize] += c * ctx.radial_basis_eval(m, nn, r)?;
    }
    let ang = ctx.angular_rule();
    let mut acc = 0.0;
    for (&t, &w) in ang.nodes.iter().zip(&ang.weights) {
        let mut v = 0.0;
        for (nn, b) in boundary.iter().enumerate() {
            if *b != 0.0 {
                v += b * ((2 * nn + 1) as f64 / (4.0 * PI)).sqrt() * legendre_p(nn as u32, t);
            }
        }
        acc += w * v * legendre_p(n, t);
    }
    Ok((2 * n + 1) as f64 / (4.0 * PI) * r / planet.gm() * 2.0 * PI * acc)
}

pub const SIGN_CONVENTION: &str = "J_n = -(1/(M R^n)) * integral over the ball of |x|^n P_n(x3/|x|) rho(x)";

fn default_convention() -> String {
    SIGN_CONVENTION.to_owned()
}

/// Serialized set of harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityCoeffs {
    pub model: DynamicModel,
    #[serde(rename = "GM")]
    pub gm: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: Vec<u32>,
    #[serde(rename = "dJ")]
    pub dj: Vec<f64>,
    pub m_max: u32,
    #[serde(default = "default_convention")]
    pub convention: String,
}

impl GravityCoeffs {
    pub fn get(&self, n: u32) -> Option<f64> {
        self.n.iter().position(|&k| k == n).map(|i| self.dj[i])
    }
}

/// `V(r, t) = -(GM/r) (1 - Σ_n J_n (R/r)ⁿ P_n(t))` outside the planet.
pub fn external_potential(coeffs: &GravityCoeffs, r: f64, t: f64) -> Result<f64> {
    if !(r > coeffs.radius) {
        return Err(Error::Domain(format!("exterior expansion needs r > R, got r = {r}")));
    }
    let ratio = coeffs.radius / r;
    let sum: f64 = coeffs.n.iter().zip(&coeffs.dj).map(|(&n, &j)| j * ratio.powi(n as i32) * legendre_p(n, t)).sum();
    Ok(-coeffs.gm / r * (1.0 - sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::QuadratureOrders;
    use crate::numerics::zonal_harmonic;
    use crate::wind::{DecayFamily, DecayParams, SurfaceWindProfile};

    const SEQ: Execution = Execution::Sequential;

    fn ctx(m_max: u32, n_max: u32) -> BasisContext {
        BasisContext::new(1.0, m_max, n_max, QuadratureOrders { radial: 128, angular: 128 }).unwrap()
    }

    fn smooth_wind(scale: f64) -> WindField {
        let p = SurfaceWindProfile::from_fn(|t| scale * (100.0 * (5.0 * t).cos() + 30.0 * t), 241).unwrap();
        WindField::new(p, DecayParams::new(DecayFamily::Exponential, vec![0.1]).unwrap(), Some(0.1), 1.0).unwrap()
    }

    #[test]
    fn axial_derivative_examples() {
        let x3 = |r: f64, t: f64| (r * t, t, r);
        let cyl = |r: f64, t: f64| (r * r * (1.0 - t * t), 2.0 * r * (1.0 - t * t), -2.0 * r * r * t);
        for &(r, t) in &[(0.3, 0.2), (0.9, -0.7), (0.5, 0.0)] {
            assert!((axial_derivative(&x3, r, t) - 1.0).abs() < 1e-15);
            assert!(axial_derivative(&cyl, r, t).abs() < 1e-15);
        }
        // ρ₀(r) t against a Cartesian finite difference in x3
        let p = PlanetModel::normalized();
        let f = |r: f64, t: f64| {
            (p.density_unchecked(r) * t, p.gradient_unchecked(r) * t, p.density_unchecked(r))
        };
        let cart = |x1: f64, x3: f64| {
            let r = (x1 * x1 + x3 * x3).sqrt();
            p.density_unchecked(r) * x3 / r
        };
        for &(r, t) in &[(0.4f64, 0.3f64), (0.8, -0.5)] {
            let x1 = r * (1.0 - t * t).sqrt();
            let x3 = r * t;
            let h = 1e-6;
            let fd = (cart(x1, x3 + h) - cart(x1, x3 - h)) / (2.0 * h);
            assert!((axial_derivative(&f, r, t) - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_wind_gives_zero_source() {
        let planet = PlanetModel::normalized();
        let p = SurfaceWindProfile::from_fn(|_| 0.0, 11).unwrap();
        let w = WindField::new(p, DecayParams::none(), None, 1.0).unwrap();
        let ev = SourceEvaluator::new(&planet, &w);
        assert_eq!(ev.source_term(0.5, 0.3).unwrap(), 0.0);
        let c = ctx(10, 4);
        let g = ev.tabulate(&c, SEQ);
        assert!(g.values.iter().all(|v| *v == 0.0));
        assert_eq!(delta_jn_tgwe(&c, &planet, &g, 2, 10, SEQ).unwrap().value, 0.0);
        assert_eq!(delta_jn_twe(&planet, &g, 2, SEQ).unwrap(), 0.0);
    }

    #[test]
    fn geostrophic_input_gives_zero_source() {
        // u = F(d) / ρ₀ with d the cylinder radius: ρ₀ u is constant along x3.
        let planet = PlanetModel::normalized();
        let field = |r: f64, t: f64| {
            let s2 = 1.0 - t * t;
            let g = (r * r * s2).cos();
            let dg_dr = -(r * r * s2).sin() * 2.0 * r * s2;
            let dg_dt = (r * r * s2).sin() * 2.0 * r * r * t;
            (g, dg_dr, dg_dt)
        };
        for &(r, t) in &[(0.2, 0.9), (0.7, -0.3), (0.95, 0.01)] {
            assert!(axial_derivative(&field, r, t).abs() < 1e-14);
        }
        let _ = planet;
    }

    #[test]
    fn source_is_linear_in_wind() {
        let planet = PlanetModel::normalized();
        let w1 = smooth_wind(1.0);
        let w2 = smooth_wind(2.0);
        let e1 = SourceEvaluator::new(&planet, &w1);
        let e2 = SourceEvaluator::new(&planet, &w2);
        for &(r, t) in &[(0.3, -0.8), (0.6, 0.02), (0.99, 0.7)] {
            let a = e1.source_term(r, t).unwrap();
            let b = e2.source_term(r, t).unwrap();
            assert!((b - 2.0 * a).abs() <= 1e-12 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn tabulated_source_matches_pointwise() {
        let planet = PlanetModel::normalized();
        let w = smooth_wind(1.0);
        let ev = SourceEvaluator::new(&planet, &w);
        let c = ctx(10, 4);
        let g = ev.tabulate(&c, SEQ);
        let nt = g.t.len();
        let mut scale: f64 = 0.0;
        for v in &g.values {
            scale = scale.max(v.abs());
        }
        for &i in &[3usize, 60, 127] {
            for &k in &[0usize, 40, nt / 2 - 1, nt / 2, 100, nt - 1] {
                let want = ev.source_term(g.radii[i], g.t[k]).unwrap();
                assert!((g.value(i, k) - want).abs() < 1e-9 * scale, "i={i} k={k}: {} vs {want}", g.value(i, k));
            }
        }
    }

    #[test]
    fn decay_split_matches_direct_tabulation() {
        let planet = PlanetModel::normalized();
        let c = ctx(10, 4);
        let p = SurfaceWindProfile::from_fn(|t| 100.0 * (5.0 * t).cos() + 30.0 * t, 241).unwrap();
        for smoothing in [None, Some(0.05)] {
            let w = WindField::new(p.clone(), DecayParams::none(), smoothing, 1.0).unwrap();
            let split = SourceEvaluator::new(&planet, &w).tabulate_decay_split(&c, SEQ);
            for dp in [
                DecayParams::new(DecayFamily::Exponential, vec![0.07]).unwrap(),
                DecayParams::new(DecayFamily::TanhStep, vec![0.9, 0.02]).unwrap(),
            ] {
                let decayed = w.with_decay(dp.clone());
                let direct = SourceEvaluator::new(&planet, &decayed).tabulate(&c, SEQ);
                let combined = split.combine(&dp);
                let scale = direct.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (a, b) in direct.values.iter().zip(&combined.values) {
                    assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn jump_term_is_the_sharp_limit_of_smoothing() {
        let planet = PlanetModel::normalized();
        let p = SurfaceWindProfile::from_fn(|t| 80.0 * (4.0 * t).sin() + 20.0, 201).unwrap();
        let sharp = WindField::new(p.clone(), DecayParams::none(), None, 1.0).unwrap();
        let soft = WindField::new(p, DecayParams::none(), Some(1e-4), 1.0).unwrap();
        let a = SourceEvaluator::new(&planet, &sharp);
        let b = SourceEvaluator::new(&planet, &soft);
        for &(r, t) in &[(0.5, 0.3), (0.8, 0.6)] {
            let sa = a.source_term(r, t).unwrap();
            let sb = b.source_term(r, t).unwrap();
            assert!((sa - sb).abs() < 1e-3 * sa.abs(), "{sa} vs {sb}");
        }
    }

    #[test]
    fn manufactured_mode_single_term() {
        let c = ctx(8, 4);
        let planet = PlanetModel::normalized();
        let d = helmholtz_denominator(&c, 1, 2).unwrap();
        let g = SourceGrid::from_fn(&c, |r, t| d * c.radial_basis_eval(1, 2, r).unwrap() * zonal_harmonic(2, t), SEQ);
        let dj = delta_jn_tgwe(&c, &planet, &g, 2, 8, SEQ).unwrap();
        assert!((dj.value - (5.0 / (2.0 * PI)).sqrt()).abs() < 1e-7, "{}", dj.value);
        let v = potential_coefficients(&c, &g, 8, 4, SEQ).unwrap();
        for ((m, n), val) in v.iter() {
            let want = if (m, n) == (1, 2) { 1.0 } else { 0.0 };
            assert!((val - want).abs() < 1e-8, "({m},{n}) {val}");
        }
        let oracle = surface_potential_jn(&c, &planet, &v, 2).unwrap();
        assert!((oracle - dj.value).abs() < 1e-6);
    }

    #[test]
    fn radial_source_has_no_potential() {
        let c = ctx(8, 4);
        let g = SourceGrid::from_fn(&c, |r, _| (3.0 * r).cos(), SEQ);
        let v = potential_coefficients(&c, &g, 8, 4, SEQ).unwrap();
        assert!(v.iter().all(|(_, x)| x.abs() < 1e-12));
        assert!(v.iter().all(|((_, n), _)| n >= 1));
    }

    #[test]
    fn coefficient_space_inverse() {
        let c = ctx(12, 6);
        let g = SourceGrid::from_fn(&c, |r, t| (r * 2.0).sin() * (1.0 + t * t * t) + r * t, SEQ);
        let proj = g.basis_projections(&c, 12, 6, SEQ).unwrap();
        let v = potential_coefficients(&c, &g, 12, 6, SEQ).unwrap();
        for ((m, n), val) in v.iter() {
            let back = helmholtz_denominator(&c, m, n).unwrap() * val;
            assert_eq!(back, proj[n as usize][m as usize - 1] / helmholtz_denominator(&c, m, n).unwrap() * helmholtz_denominator(&c, m, n).unwrap());
            assert!((back - proj[n as usize][m as usize - 1]).abs() <= 1e-15 * proj[n as usize][m as usize - 1].abs().max(1e-300));
        }
    }

    #[test]
    fn degenerate_denominator_is_rejected() {
        let zeros = crate::numerics::find_bessel_zeros(3, 3).unwrap();
        let mut raw: Vec<f64> = (0..=3).flat_map(|n| zeros.row(n).to_vec()).collect();
        raw[2 * 3] = PI; // λ_{2,1} forced onto π
        let bad = crate::numerics::ZeroTable::from_raw(3, 3, raw);
        let c = BasisContext::with_zeros(1.0, bad, QuadratureOrders { radial: 32, angular: 32 }).unwrap();
        let g = SourceGrid::from_fn(&c, |r, t| r * t * t, SEQ);
        assert!(matches!(potential_coefficients(&c, &g, 3, 3, SEQ), Err(Error::DegenerateDenominator { m: 1, n: 2, .. })));
    }

    #[test]
    fn twe_ignores_radial_gauge() {
        let planet = PlanetModel::normalized();
        let w = smooth_wind(1.0);
        let c = ctx(10, 6);
        let mut g = SourceEvaluator::new(&planet, &w).tabulate(&c, SEQ);
        let before: Vec<f64> = (2..=6).map(|n| delta_jn_twe(&planet, &g, n, SEQ).unwrap()).collect();
        g.add_radial(|r| 4.0 * PI * planet.g * (1.0 + r * r).ln() * 1e3);
        for (n, b) in (2..=6).zip(before) {
            let a = delta_jn_twe(&planet, &g, n, SEQ).unwrap();
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "n={n}");
        }
    }

    #[test]
    fn parity_of_symmetric_and_antisymmetric_winds() {
        let planet = PlanetModel::normalized();
        let c = ctx(20, 8);
        let even = SurfaceWindProfile::from_fn(|t| 100.0 * (6.0 * t * t).cos(), 201).unwrap();
        let odd = SurfaceWindProfile::from_fn(|t| 100.0 * (3.0 * t).sin(), 201).unwrap();
        let dp = DecayParams::new(DecayFamily::Exponential, vec![0.1]).unwrap();
        for (profile, vanishing) in [(even, 1u32), (odd, 0u32)] {
            let w = WindField::new(profile, dp.clone(), None, 1.0).unwrap();
            let g = SourceEvaluator::new(&planet, &w).tabulate(&c, SEQ);
            for model in [DynamicModel::Tgwe, DynamicModel::Twe] {
                let vals = delta_j_range(&c, &planet, &g, model, 2, 8, 20, SEQ).unwrap();
                for (n, v) in (2..=8u32).zip(&vals) {
                    if n % 2 == vanishing {
                        assert!(v.value.abs() < 1e-9, "{model} n={n}: {}", v.value);
                    }
                }
            }
        }
    }

    #[test]
    fn external_potential_examples() {
        let mut j = GravityCoeffs {
            model: DynamicModel::Tgwe,
            gm: 2.0,
            radius: 1.0,
            n: vec![2, 3],
            dj: vec![0.0, 0.0],
            m_max: 10,
            convention: default_convention(),
        };
        assert!((external_potential(&j, 3.0, 0.4).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert!((external_potential(&j, 1e12, 0.4).unwrap() * 1e12 + 2.0).abs() < 1e-9);
        assert!(external_potential(&j, 1.0, 0.0).is_err());
        j.dj = vec![1e-5, 0.0];
        let want = -2.0 / 2.0 * (1.0 - 1e-5 / 4.0);
        assert!((external_potential(&j, 2.0, 1.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn surface_potential_respects_legendre_orthogonality() {
        let c = ctx(6, 6);
        let planet = PlanetModel::normalized();
        let mut v = CoeffSet::new(6, 6);
        v.insert(2, 5, 0.7).unwrap();
        v.insert(4, 5, -0.2).unwrap();
        assert!(surface_potential_jn(&c, &planet, &v, 4).unwrap().abs() < 1e-13);
        assert_eq!(surface_potential_jn(&c, &planet, &CoeffSet::new(6, 6), 3).unwrap(), 0.0);
    }

    #[test]
    fn gravity_coeffs_json_shape() {
        let j = GravityCoeffs {
            model: DynamicModel::Twe,
            gm: 1.0,
            radius: 1.0,
            n: vec![2],
            dj: vec![0.5],
            m_max: 60,
            convention: default_convention(),
        };
        let v: serde_json::Value = serde_json::to_value(&j).unwrap();
        assert_eq!(v["model"], "TWE");
        assert_eq!(v["GM"], 1.0);
        assert_eq!(v["dJ"][0], 0.5);
        let back: GravityCoeffs = serde_json::from_value(v).unwrap();
        assert_eq!(back, j);
    }
}
