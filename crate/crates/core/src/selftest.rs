//! Built-in invariant suites run by `zonalgrav selftest`.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::basis::{BasisContext, QuadratureOrders};
use crate::dynamics::{
    delta_j_range, delta_jn_tgwe, helmholtz_denominator, potential_coefficients, surface_potential_jn, DynamicModel,
    SourceEvaluator, SourceGrid,
};
use crate::exec::Execution;
use crate::numerics::{find_bessel_zeros, zonal_harmonic, ZeroTable};
use crate::planet::PlanetModel;
use crate::wind::{DecayFamily, DecayParams, SurfaceWindProfile, WindField};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self { name: name.into(), residual, tolerance, passed: residual < tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {}", if self.passed() { "PASS" } else { "FAIL" }, self.suite)?;
        for c in &self.checks {
            writeln!(
                f,
                "    {:<4} {:<44} residual {:>10.3e}  tol {:.0e}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    /// Added to every tabulated zero; fault injection for the eigenfunction suite.
    pub zero_perturbation: Option<f64>,
    pub exec: Execution,
}

const N_MAX: u32 = 8;
const M_MAX: u32 = 100;

fn sub_table(z: &ZeroTable, n_max: u32, m_max: u32) -> ZeroTable {
    let raw = (0..=n_max).flat_map(|n| z.row(n)[..m_max as usize].to_vec()).collect();
    ZeroTable::from_raw(n_max, m_max, raw)
}

/// Runs every suite.
pub fn run_all(opts: SelftestOptions) -> Result<Vec<SuiteReport>> {
    let mut zeros = find_bessel_zeros(N_MAX, M_MAX)?;
    if let Some(d) = opts.zero_perturbation {
        zeros = zeros.perturbed(d);
    }
    let ctx = |n_max, m_max, order| {
        BasisContext::with_zeros(1.0, sub_table(&zeros, n_max, m_max), QuadratureOrders { radial: order, angular: 128 })
    };
    Ok(vec![
        orthonormality(&ctx(N_MAX, 10, 256)?),
        eigenfunction(&ctx(N_MAX, 20, 64)?)?,
        dini(&ctx(0, M_MAX, 512)?)?,
        parity(&ctx(N_MAX, 20, 128)?, opts.exec)?,
        manufactured(&ctx(4, 10, 128)?, opts.exec)?,
    ])
}

/// Gram matrix of `B_{m,n}`, `m <= m_max`, against the identity.
pub fn orthonormality(ctx: &BasisContext) -> SuiteReport {
    let rule = ctx.radial_rule();
    let mut checks = Vec::new();
    for n in 0..=ctx.n_max() {
        let table = ctx.radial_table(n, ctx.m_max()).expect("within table");
        let mut worst: f64 = 0.0;
        for (a, ba) in table.iter().enumerate() {
            for (b, bb) in table.iter().enumerate().skip(a) {
                let g: f64 = rule.nodes.iter().zip(&rule.weights).zip(ba.iter().zip(bb)).map(|((r, w), (x, y))| w * r * r * x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
        checks.push(Check::below(format!("gram deviation n={n} m<={}", ctx.m_max()), worst, 1e-9));
    }
    SuiteReport { suite: "orthonormality", checks }
}

/// Robin boundary condition and radial eigen-equation residual.
pub fn eigenfunction(ctx: &BasisContext) -> Result<SuiteReport> {
    let r_out = ctx.radius();
    let mut bc: f64 = 0.0;
    let mut ode: f64 = 0.0;
    for n in 0..=ctx.n_max() {
        let nn = n as f64;
        for m in 1..=ctx.m_max() {
            let b_r = ctx.radial_basis_eval(m, n, r_out)?;
            let db_r = ctx.radial_basis_derivative(m, n, r_out)?;
            bc = bc.max((db_r + (nn + 1.0) / r_out * b_r).abs() / db_r.abs());
            let g2 = ctx.gamma(m, n)?.powi(2);
            let mut worst: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..=100 {
                let r = r_out * k as f64 / 100.0;
                let b = ctx.radial_basis_eval(m, n, r)?;
                let d1 = ctx.radial_basis_derivative(m, n, r)?;
                let d2 = ctx.radial_basis_second_derivative(m, n, r)?;
                worst = worst.max((r * r * d2 + 2.0 * r * d1 - nn * (nn + 1.0) * b + g2 * r * r * b).abs());
                scale = scale.max(b.abs());
            }
            ode = ode.max(worst / scale);
        }
    }
    let span = format!("n<={} m<={}", ctx.n_max(), ctx.m_max());
    Ok(SuiteReport {
        suite: "eigenfunction",
        checks: vec![
            Check::below(format!("boundary condition {span}"), bc, 1e-9),
            Check::below(format!("eigen-equation residual {span}"), ode, 1e-9),
        ],
    })
}

/// Dini–Bessel reconstruction of `r²(R - r)` at `n = 0`, and coefficient decay.
pub fn dini(ctx: &BasisContext) -> Result<SuiteReport> {
    let r_out = ctx.radius();
    let f = |r: f64| r * r * (r_out - r);
    let coeffs = ctx.radial_expand(f, 0, ctx.m_max())?;
    let mut errors = Vec::new();
    for m in [10usize, 20, 40, 80] {
        let mut worst: f64 = 0.0;
        for k in 0..=80 {
            let r = r_out * (0.1 + 0.8 * k as f64 / 80.0);
            worst = worst.max((ctx.radial_synthesize(&coeffs[..m], 0, r)? - f(r)).abs());
        }
        errors.push(worst);
    }
    let growth = errors.windows(2).map(|w| w[1] / (1.1 * w[0])).fold(0.0, f64::max);
    let mid = (ctx.radial_synthesize(&coeffs[..40], 0, 0.5 * r_out)? - f(0.5 * r_out)).abs();
    // |c_m| (m - 3/4) must stay bounded: its peak over the upper half of the range
    // may not exceed the peak over the lower half.
    let ratio = |m: usize| coeffs[m - 1].abs() * (m as f64 - 0.75);
    let low = (20..60).map(ratio).fold(0.0, f64::max);
    let high = (60..=ctx.m_max() as usize).map(ratio).fold(0.0, f64::max);
    Ok(SuiteReport {
        suite: "dini",
        checks: vec![
            Check::below("error ratio per doubling M=10..80 (/1.1)", growth, 1.0),
            Check::below("reconstruction error at R/2, M=40", mid, 1e-3),
            Check::below("decay ratio high/low half, m in [20,100]", high / low.max(f64::MIN_POSITIVE), 1.0 + 1e-12),
        ],
    })
}

/// Equatorially symmetric and antisymmetric winds under both models.
pub fn parity(ctx: &BasisContext, exec: Execution) -> Result<SuiteReport> {
    let planet = PlanetModel::normalized();
    let dp = DecayParams::new(DecayFamily::Exponential, vec![0.1])?;
    let cases = [
        ("symmetric", SurfaceWindProfile::from_fn(|t| 100.0 * (6.0 * t * t).cos(), 181)?, 1u32),
        ("antisymmetric", SurfaceWindProfile::from_fn(|t| 100.0 * (3.0 * t).sin(), 181)?, 0u32),
    ];
    let mut checks = Vec::new();
    for (label, profile, vanishing) in cases {
        let wind = WindField::new(profile, dp.clone(), None, planet.radius)?;
        let grid = SourceEvaluator::new(&planet, &wind).tabulate(ctx, exec);
        for model in [DynamicModel::Tgwe, DynamicModel::Twe] {
            let vals = delta_j_range(ctx, &planet, &grid, model, 2, ctx.n_max(), ctx.m_max(), exec)?;
            let worst = (2..=ctx.n_max())
                .zip(&vals)
                .filter(|(n, _)| n % 2 == vanishing)
                .map(|(_, v)| v.value.abs())
                .fold(0.0, f64::max);
            let which = if vanishing == 1 { "odd" } else { "even" };
            checks.push(Check::below(format!("{label} wind, {model} {which} δJ_n"), worst, 1e-9));
        }
    }
    Ok(SuiteReport { suite: "parity", checks })
}

/// Single-mode source `((π/R)² - γ²) u_{1,2,0}` against `δJ₂ = √(5/(2π))`.
pub fn manufactured(ctx: &BasisContext, exec: Execution) -> Result<SuiteReport> {
    let planet = PlanetModel::normalized();
    let d = helmholtz_denominator(ctx, 1, 2)?;
    let grid = SourceGrid::from_fn(ctx, |r, t| d * ctx.radial_basis_eval(1, 2, r).unwrap_or(0.0) * zonal_harmonic(2, t), exec);
    let exact = (5.0 / (2.0 * PI)).sqrt();
    let dj = delta_jn_tgwe(ctx, &planet, &grid, 2, ctx.m_max(), exec)?.value;
    let coeffs = potential_coefficients(ctx, &grid, ctx.m_max(), ctx.n_max(), exec)?;
    let oracle = surface_potential_jn(ctx, &planet, &coeffs, 2)?;
    let others = (3..=ctx.n_max())
        .map(|n| delta_jn_tgwe(ctx, &planet, &grid, n, ctx.m_max(), exec).map(|s| s.value.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(SuiteReport {
        suite: "manufactured",
        checks: vec![
            Check::below("δJ_2 against sqrt(5/(2π))", (dj - exact).abs(), 1e-6),
            Check::below("surface-potential oracle agreement", (oracle - dj).abs(), 1e-6),
            Check::below("other degrees vanish", others, 1e-9),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let reports = run_all(SelftestOptions { zero_perturbation: None, exec: Execution::Sequential }).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r}");
        }
        assert_eq!(reports.len(), 5);
    }

    #[test]
    fn perturbed_zeros_fail_the_eigenfunction_suite() {
        let reports = run_all(SelftestOptions { zero_perturbation: Some(1e-6), exec: Execution::Sequential }).unwrap();
        let eig = reports.iter().find(|r| r.suite == "eigenfunction").unwrap();
        assert!(!eig.passed());
        assert!(format!("{eig}").contains("residual"));
    }
}
