//! Decay-parameter fit: minimize `L(p) = Σ_n w_n (J_n - (J⁰_n + δJ_n(p)))²` over a box.
//!
//! The optimizer is Nelder–Mead on box-normalized coordinates `u ∈ [0,1]^d`,
//! with trial points clamped to the box. Convergence thresholds are relative
//! (simplex diameter in `u`, objective spread against the start value), so a
//! common rescaling of the weights by a power of two replays the same
//! evaluation sequence bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::FitConfig;
use crate::exec::Execution;
use crate::forward::ForwardModel;
use crate::wind::{DecayFamily, DecayParams, ParamBounds};
use crate::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
/// Initial simplex edge in normalized coordinates.
const INITIAL_STEP: f64 = 0.1;

/// Observed harmonics `J_n` with optional 1σ uncertainties.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedCoeffs {
    n: Vec<u32>,
    j: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl ObservedCoeffs {
    pub fn new(n: Vec<u32>, j: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        if n.is_empty() || n.len() != j.len() || sigma.as_ref().is_some_and(|s| s.len() != n.len()) {
            return Err(Error::Parameter("observed n, J and sigma must be non-empty with equal lengths".into()));
        }
        if n[0] < 2 || n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("observed degrees must start at n >= 2 and ascend strictly".into()));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("observed J must be finite".into()));
        }
        if let Some(s) = &sigma {
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::Parameter("sigma must be positive and finite".into()));
            }
        }
        Ok(Self { n, j, sigma })
    }

    /// CSV `n,J` or `n,J,sigma`.
    pub fn load(path: &Path) -> Result<Self> {
        let table = crate::io::read_numeric_csv(path, &[&["n", "J"], &["n", "J", "sigma"]])?;
        let mut n = Vec::new();
        let mut j = Vec::new();
        let mut sigma = Vec::new();
        for (line, row) in &table.rows {
            n.push(crate::io::as_index(row[0], path, *line)?);
            j.push(row[1]);
            if table.variant == 1 {
                sigma.push(row[2]);
            }
        }
        let sigma = (table.variant == 1).then_some(sigma);
        Self::new(n, j, sigma).map_err(|e| Error::Parse { path: path.into(), line: 0, msg: e.to_string() })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.j
    }

    pub fn has_sigma(&self) -> bool {
        self.sigma.is_some()
    }

    /// Highest observed degree.
    pub fn extent(&self) -> u32 {
        *self.n.last().expect("non-empty by construction")
    }

    /// `w_n = 1/σ_n²`, or 1 without uncertainties.
    pub fn weights(&self) -> Vec<f64> {
        match &self.sigma {
            Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
            None => vec![1.0; self.n.len()],
        }
    }
}

/// `Σ w_n (J_n - (J⁰_n + δJ_n))²` over the observed degrees; `background` and
/// `delta` are indexed by `n - 2`.
pub fn objective(observed: &ObservedCoeffs, weights: &[f64], background: &[f64], delta: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for ((&n, &j), &w) in observed.n.iter().zip(&observed.j).zip(weights) {
        let k = (n - 2) as usize;
        let (Some(b), Some(d)) = (background.get(k), delta.get(k)) else {
            return Err(Error::Parameter(format!("model has no δJ_{n}")));
        };
        let r = j - (b + d);
        acc += w * r * r;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// The objective did not vary over the initial simplex.
    Flat,
    MaxEvaluations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    pub tol_x: f64,
    pub tol_f: f64,
}

impl From<&FitConfig> for NelderMeadOptions {
    fn from(c: &FitConfig) -> Self {
        Self { max_evaluations: c.max_evaluations, tol_x: c.tol_x, tol_f: c.tol_f }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub status: FitStatus,
    /// Lowest simplex value after each iteration.
    pub history: Vec<f64>,
}

struct BoxMap<'a> {
    bounds: &'a ParamBounds,
}

impl BoxMap<'_> {
    fn to_x(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.bounds.lower.iter().zip(&self.bounds.upper))
            .map(|(u, (l, h))| (l + u.clamp(0.0, 1.0) * (h - l)).clamp(*l, *h))
            .collect()
    }

    fn to_u(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.bounds.lower.iter().zip(&self.bounds.upper)).map(|(x, (l, h))| (x - l) / (h - l)).collect()
    }
}

fn clamp_unit(u: Vec<f64>) -> Vec<f64> {
    u.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

/// Bounded Nelder–Mead from `start`.
pub fn nelder_mead<F>(mut f: F, bounds: &ParamBounds, start: &[f64], opts: NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !bounds.contains(start) {
        return Err(Error::Parameter(format!("start point {start:?} lies outside the bounds")));
    }
    let map = BoxMap { bounds };
    let d = bounds.dim();
    let mut evaluations = 0usize;
    let mut eval = |u: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = f(&map.to_x(u))?;
        if v.is_nan() {
            return Err(Error::Domain("objective returned NaN".into()));
        }
        Ok(v)
    };

    let u0 = map.to_u(start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(&u0, &mut evaluations)?;
    simplex.push((u0.clone(), f0));
    for i in 0..d {
        let mut u = u0.clone();
        u[i] += if u[i] + INITIAL_STEP <= 1.0 { INITIAL_STEP } else { -INITIAL_STEP };
        let v = eval(&u, &mut evaluations)?;
        simplex.push((u, v));
    }
    if simplex.iter().all(|(_, v)| *v == f0) {
        return Ok(Minimum { x: start.to_vec(), value: f0, evaluations, status: FitStatus::Flat, history: vec![f0] });
    }
    let f_ref = f0.abs();
    let mut history = Vec::new();

    let status = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        history.push(simplex[0].1);
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(u, _)| u.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread = simplex[d].1 - simplex[0].1;
        if diameter < opts.tol_x || spread <= opts.tol_f * f_ref {
            break FitStatus::Converged;
        }
        if evaluations >= opts.max_evaluations {
            break FitStatus::MaxEvaluations;
        }

        let mut centroid = vec![0.0; d];
        for (u, _) in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(u) {
                *c += x / d as f64;
            }
        }
        let toward = |from: &[f64], coef: f64, target: &[f64]| -> Vec<f64> {
            clamp_unit(from.iter().zip(target).map(|(c, t)| c + coef * (t - c)).collect())
        };
        let worst = simplex[d].clone();
        let reflected = toward(&centroid, -REFLECT, &worst.0);
        let fr = eval(&reflected, &mut evaluations)?;
        if fr < simplex[0].1 {
            let expanded = toward(&centroid, EXPAND, &reflected);
            let fe = eval(&expanded, &mut evaluations)?;
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
            continue;
        }
        let (contracted, limit) = if fr < worst.1 {
            (toward(&centroid, CONTRACT, &reflected), fr)
        } else {
            (toward(&centroid, CONTRACT, &worst.0), worst.1)
        };
        let fc = eval(&contracted, &mut evaluations)?;
        if fc < limit {
            simplex[d] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let u = toward(&anchor, SHRINK, &vertex.0);
            let v = eval(&u, &mut evaluations)?;
            *vertex = (u, v);
        }
    };
    let (u, value) = simplex.swap_remove(0);
    Ok(Minimum { x: map.to_x(&u), value, evaluations, status, history })
}

/// Objective on a regular grid of `points` per dimension, in row-major order
/// with the first parameter varying slowest.
pub fn grid_search<F>(f: F, bounds: &ParamBounds, points: usize, exec: Execution) -> Result<Vec<(Vec<f64>, f64)>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    if points < 2 {
        return Err(Error::Parameter(format!("grid search needs >= 2 points per dimension, got {points}")));
    }
    let d = bounds.dim();
    let total = points.pow(d as u32);
    let point = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let step = k % points;
            k /= points;
            let (l, h) = (bounds.lower[i], bounds.upper[i]);
            x[i] = if step == points - 1 { h } else { l + (h - l) * step as f64 / (points - 1) as f64 };
        }
        x
    };
    exec.map_range(total, |k| {
        let x = point(k);
        f(&x).map(|v| (x, v))
    })
    .into_iter()
    .collect()
}

/// First point attaining the minimum.
fn argmin(values: &[(Vec<f64>, f64)]) -> Option<&(Vec<f64>, f64)> {
    values.iter().fold(None, |best: Option<&(Vec<f64>, f64)>, cur| match best {
        Some(b) if b.1 <= cur.1 => Some(b),
        _ => Some(cur),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub n: u32,
    pub observed: f64,
    pub background: f64,
    pub model: f64,
    /// `J_n - (J⁰_n + δJ_n)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: DecayFamily,
    pub param_names: Vec<String>,
    pub p_best: Vec<f64>,
    pub objective_value: f64,
    pub evaluations: usize,
    pub status: FitStatus,
    pub converged: bool,
    /// `"sigma"` or `"unit"`.
    pub weights: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub residuals: Vec<Residual>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_best: Option<Vec<f64>>,
    pub best_history: Vec<f64>,
}

/// A fit of one decay family against observed harmonics.
pub struct FitProblem<'a> {
    pub forward: &'a ForwardModel,
    pub observed: &'a ObservedCoeffs,
    pub family: DecayFamily,
    pub bounds: &'a ParamBounds,
    /// Common factor applied to every weight.
    pub weight_scale: f64,
}

impl FitProblem<'_> {
    fn weights(&self) -> Vec<f64> {
        self.observed.weights().into_iter().map(|w| w * self.weight_scale).collect()
    }

    fn check(&self) -> Result<()> {
        if !self.forward.is_wind_driven() {
            return Err(Error::Config("fits need a wind source".into()));
        }
        if self.family.arity() == 0 || self.bounds.dim() != self.family.arity() {
            return Err(Error::Config(format!(
                "family {:?} with {} bound dimension(s) cannot be fitted",
                self.family,
                self.bounds.dim()
            )));
        }
        if self.observed.extent() > self.forward.degree() {
            return Err(Error::Config(format!(
                "observed degree {} exceeds model degree {}",
                self.observed.extent(),
                self.forward.degree()
            )));
        }
        Ok(())
    }

    /// `L(p)`.
    pub fn evaluate(&self, p: &[f64]) -> Result<f64> {
        let dp = DecayParams::new(self.family, p.to_vec())?;
        let delta = self.forward.delta_j(Some(&dp))?;
        objective(self.observed, &self.weights(), &self.forward.background()?, &delta)
    }

    fn residuals(&self, p: &[f64]) -> Result<Vec<Residual>> {
        let dp = DecayParams::new(self.family, p.to_vec())?;
        let delta = self.forward.delta_j(Some(&dp))?;
        let background = self.forward.background()?;
        Ok(self
            .observed
            .n
            .iter()
            .zip(&self.observed.j)
            .map(|(&n, &j)| {
                let k = (n - 2) as usize;
                Residual { n, observed: j, background: background[k], model: delta[k], residual: j - (background[k] + delta[k]) }
            })
            .collect())
    }

    /// Grid pre-pass (when `grid_points >= 2`) followed by Nelder–Mead from the
    /// grid minimum, or from `start`, or from the box centre.
    pub fn fit(&self, options: &FitConfig, exec: Execution) -> Result<FitResult> {
        self.check()?;
        let mut evaluations = 0;
        let mut grid_best = None;
        let start = if options.grid_points >= 2 {
            let grid = grid_search(|p| self.evaluate(p), self.bounds, options.grid_points, exec)?;
            evaluations += grid.len();
            let best = argmin(&grid).expect("grid is non-empty").0.clone();
            grid_best = Some(best.clone());
            best
        } else if let Some(s) = &options.start {
            s.clone()
        } else {
            self.bounds.lower.iter().zip(&self.bounds.upper).map(|(l, h)| 0.5 * (l + h)).collect()
        };
        let min = nelder_mead(|p| self.evaluate(p), self.bounds, &start, options.into())?;
        evaluations += min.evaluations;
        let weights = if self.observed.has_sigma() { "sigma" } else { "unit" };
        let note = (!self.observed.has_sigma()).then(|| "observed file has no sigma column; unit weights used".to_owned());
        Ok(FitResult {
            family: self.family,
            param_names: self.family.param_names().iter().map(|s| s.to_string()).collect(),
            residuals: self.residuals(&min.x)?,
            p_best: min.x,
            objective_value: min.value,
            evaluations,
            status: min.status,
            converged: min.status == FitStatus::Converged,
            weights: weights.to_owned(),
            note,
            grid_best,
            best_history: min.history,
        })
    }
}
