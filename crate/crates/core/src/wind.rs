//! Surface wind ingestion, cylindrical inward projection and radial decay.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Natural cubic spline through strictly increasing knots, continued linearly
/// outside the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalCubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Parameter(format!("spline needs >= 2 matching samples, got {} and {}", n, y.len())));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("spline knots must be strictly increasing".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    fn segment(&self, t: f64) -> usize {
        match self.x.partition_point(|&k| k <= t) {
            0 => 0,
            i => (i - 1).min(self.x.len() - 2),
        }
    }

    /// `(s(t), s'(t))`.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let n = self.x.len();
        if t < self.x[0] || t > self.x[n - 1] {
            let (i, edge) = if t < self.x[0] { (0, self.x[0]) } else { (n - 2, self.x[n - 1]) };
            let (v, d) = self.cubic(i, edge);
            return (v + d * (t - edge), d);
        }
        self.cubic(self.segment(t), t)
    }

    fn cubic(&self, i: usize, t: f64) -> (f64, f64) {
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1] + ((a.powi(3) - a) * m0 + (b.powi(3) - b) * m1) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        (v, d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_derivative(t).0
    }
}

/// Observed surface wind `u^surf(t)`, `t = sin(latitude)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceWindProfile {
    t: Vec<f64>,
    u: Vec<f64>,
    spline: NaturalCubicSpline,
}

impl SurfaceWindProfile {
    /// Samples in any order; duplicates in `t` are rejected.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        let mut samples = samples;
        if samples.len() < 4 {
            return Err(Error::Parameter(format!("surface wind needs >= 4 samples, got {}", samples.len())));
        }
        if let Some((t, _)) = samples.iter().find(|(t, u)| !(-1.0..=1.0).contains(t) || !u.is_finite()) {
            return Err(Error::Parameter(format!("sample at t = {t} outside [-1, 1] or non-finite")));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Parameter(format!("duplicate sample at t = {}", w[0].0)));
        }
        let (t, u): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let spline = NaturalCubicSpline::new(t.clone(), u.clone())?;
        Ok(Self { t, u, spline })
    }

    /// Samples `f` at `count` points uniformly spaced in `t` over `[-1, 1]`.
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, count: usize) -> Result<Self> {
        let count = count.max(4);
        let samples =
            (0..count).map(|i| -1.0 + 2.0 * i as f64 / (count - 1) as f64).map(|t| (t, f(t))).collect();
        Self::from_samples(samples)
    }

    /// CSV with header `latitude_deg,u_mps` or `t,u_mps`.
    pub fn load(path: &Path) -> Result<Self> {
        let table = crate::io::read_numeric_csv(path, &[&["latitude_deg", "u_mps"], &["t", "u_mps"]])?;
        let by_latitude = table.variant == 0;
        let mut samples = Vec::with_capacity(table.rows.len());
        for (line, row) in &table.rows {
            let t = if by_latitude {
                if !(-90.0..=90.0).contains(&row[0]) {
                    let msg = format!("latitude {} out of range", row[0]);
                    return Err(Error::Parse { path: path.into(), line: *line, msg });
                }
                row[0].to_radians().sin()
            } else {
                row[0]
            };
            samples.push((t, row[1], *line));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = samples.windows(2).find(|w| w[0].0 == w[1].0) {
            let msg = format!("duplicate sample at t = {} (also on line {})", w[0].0, w[0].2.min(w[1].2));
            return Err(Error::Parse { path: path.into(), line: w[0].2.max(w[1].2), msg });
        }
        Self::from_samples(samples.into_iter().map(|(t, u, _)| (t, u)).collect())
            .map_err(|e| Error::Parse { path: path.into(), line: 0, msg: e.to_string() })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.spline.eval(t)
    }

    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        self.spline.eval_with_derivative(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayFamily {
    /// `exp(-(R - r)/H)`, params `[H]` (m).
    Exponential,
    /// `(1 + tanh((r - r_c)/w)) / 2`, params `[r_c, w]` (m).
    TanhStep,
    /// No decay.
    None,
}

impl DecayFamily {
    pub fn arity(self) -> usize {
        match self {
            DecayFamily::Exponential => 1,
            DecayFamily::TanhStep => 2,
            DecayFamily::None => 0,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            DecayFamily::Exponential => &["depth"],
            DecayFamily::TanhStep => &["center", "width"],
            DecayFamily::None => &[],
        }
    }
}

/// Axis-aligned parameter box `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Parameter("bounds must be non-empty with matching lengths".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::Parameter("every bound interval must be finite with lower < upper".into()));
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub family: DecayFamily,
    pub params: Vec<f64>,
}

impl DecayParams {
    pub fn new(family: DecayFamily, params: Vec<f64>) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::Parameter(format!(
                "{family:?} takes {} parameter(s), got {}",
                family.arity(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Parameter("decay parameters must be finite".into()));
        }
        match family {
            DecayFamily::Exponential if params[0] <= 0.0 => {
                Err(Error::Parameter(format!("decay depth H = {} must be positive", params[0])))
            }
            DecayFamily::TanhStep if params[1] <= 0.0 => {
                Err(Error::Parameter(format!("step width w = {} must be positive", params[1])))
            }
            _ => Ok(Self { family, params }),
        }
    }

    pub fn none() -> Self {
        Self { family: DecayFamily::None, params: Vec::new() }
    }

    pub fn within(&self, bounds: &ParamBounds) -> bool {
        bounds.contains(&self.params)
    }

    /// `(Q(r), Q'(r))`.
    pub fn factor_with_derivative(&self, r: f64, radius: f64) -> (f64, f64) {
        match self.family {
            DecayFamily::Exponential => {
                let h = self.params[0];
                let q = (-(radius - r) / h).exp();
                (q, q / h)
            }
            DecayFamily::TanhStep => {
                let (rc, w) = (self.params[0], self.params[1]);
                let th = ((r - rc) / w).tanh();
                (0.5 * (1.0 + th), 0.5 * (1.0 - th * th) / w)
            }
            DecayFamily::None => (1.0, 0.0),
        }
    }
}

/// `Q_p(r)`. Both families are radial, so `t` does not enter.
pub fn decay_factor(dp: &DecayParams, r: f64, _t: f64, radius: f64) -> f64 {
    dp.factor_with_derivative(r, radius).0
}

fn hemisphere(t: f64) -> f64 {
    if t < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `√(1 - (r/R)²(1 - t²))`: `|t|` of the surface point on the same axis-parallel line.
fn surface_abs_t(r: f64, t: f64, radius: f64) -> f64 {
    let s = r / radius;
    (1.0 - s * s * (1.0 - t * t)).max(0.0).sqrt()
}

/// `u^surf(sgn(t) √(1 - (r/R)²(1 - t²)))` with `sgn(0) = +1`.
pub fn cylindrical_projection(profile: &SurfaceWindProfile, r: f64, t: f64, radius: f64) -> f64 {
    profile.eval(hemisphere(t) * surface_abs_t(r, t, radius))
}

/// Zonal wind `u_φ = Q_p(r) u^proj_c`, optionally blended across the equator
/// over `|t| < ε_t` with weight `(1 + sin(π t / (2 ε_t))) / 2` on the northern value.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    pub profile: SurfaceWindProfile,
    pub decay: DecayParams,
    pub smoothing: Option<f64>,
    pub radius: f64,
}

impl WindField {
    pub fn new(profile: SurfaceWindProfile, decay: DecayParams, smoothing: Option<f64>, radius: f64) -> Result<Self> {
        if let Some(eps) = smoothing {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Parameter(format!("smoothing width {eps} must lie in (0, 1)")));
            }
        }
        if !(radius > 0.0) {
            return Err(Error::Parameter("radius must be positive".into()));
        }
        Ok(Self { profile, decay, smoothing, radius })
    }

    pub fn with_decay(&self, decay: DecayParams) -> Self {
        Self { decay, ..self.clone() }
    }

    fn blend_weight(&self, t: f64) -> Option<(f64, f64)> {
        let eps = self.smoothing?;
        if t.abs() >= eps {
            return None;
        }
        let arg = PI * t / (2.0 * eps);
        Some((0.5 * (1.0 + arg.sin()), PI / (4.0 * eps) * arg.cos()))
    }

    /// Projected wind before decay, `u^proj_c` or its blended variant.
    pub fn projected(&self, r: f64, t: f64) -> f64 {
        let q = surface_abs_t(r, t, self.radius);
        match self.blend_weight(t) {
            Some((w, _)) => w * self.profile.eval(q) + (1.0 - w) * self.profile.eval(-q),
            None => self.profile.eval(hemisphere(t) * q),
        }
    }

    pub fn value(&self, r: f64, t: f64) -> f64 {
        self.decay.factor_with_derivative(r, self.radius).0 * self.projected(r, t)
    }

    /// `(u, ∂u/∂r, ∂u/∂t)` at fixed `(r, t)`.
    pub fn value_and_partials(&self, r: f64, t: f64) -> (f64, f64, f64) {
        let rr = self.radius * self.radius;
        let q = surface_abs_t(r, t, self.radius);
        let (dq_dr, dq_dt) = if q > 0.0 { (-r * (1.0 - t * t) / (rr * q), r * r * t / (rr * q)) } else { (0.0, 0.0) };
        // branch value and partials for the surface point at signed t = h q
        let branch = |h: f64| {
            let (u, du) = self.profile.eval_with_derivative(h * q);
            (u, h * du * dq_dr, h * du * dq_dt)
        };
        let (p, pr, pt) = match self.blend_weight(t) {
            Some((w, dw)) => {
                let (un, unr, unt) = branch(1.0);
                let (us, usr, ust) = branch(-1.0);
                (w * un + (1.0 - w) * us, w * unr + (1.0 - w) * usr, w * unt + (1.0 - w) * ust + dw * (un - us))
            }
            None => branch(hemisphere(t)),
        };
        let (qd, dqd) = self.decay.factor_with_derivative(r, self.radius);
        (qd * p, dqd * p + qd * pr, qd * pt)
    }

    /// North-minus-south jump of `u_φ` across the equatorial plane at radius `r`;
    /// zero when smoothing is on.
    pub fn equatorial_jump(&self, r: f64) -> f64 {
        if self.smoothing.is_some() {
            return 0.0;
        }
        let q = surface_abs_t(r, 0.0, self.radius);
        let qd = self.decay.factor_with_derivative(r, self.radius).0;
        qd * (self.profile.eval(q) - self.profile.eval(-q))
    }
}

/// Free-function form of [`WindField::value`].
pub fn zonal_wind(
    profile: &SurfaceWindProfile,
    dp: &DecayParams,
    smoothing: Option<f64>,
    r: f64,
    t: f64,
    radius: f64,
) -> Result<f64> {
    Ok(WindField::new(profile.clone(), dp.clone(), smoothing, radius)?.value(r, t))
}
