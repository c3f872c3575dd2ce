//! Forward driver: planet, basis and source in, `δJ_n` for `n = 2..=N` out.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::Path;

use crate::basis::BasisContext;
use crate::config::{RunConfig, SourceConfig};
use crate::dynamics::{
    delta_j_range_with, helmholtz_denominator, RadialTables, DecaySplitSource, DynamicModel, GravityCoeffs, SeriesValue, SourceEvaluator,
    SourceGrid, SIGN_CONVENTION,
};
use crate::exec::Execution;
use crate::numerics::zonal_harmonic;
use crate::planet::{BackgroundJ, PlanetModel};
use crate::wind::{DecayParams, SurfaceWindProfile, WindField};
use crate::{Error, Result};

#[derive(Debug, Clone)]
enum PreparedSource {
    /// Wind source with its decay left open.
    Wind { split: DecaySplitSource, decay: Option<DecayParams> },
    Fixed(SourceGrid),
}

/// A forward model with the basis and the source tabulated once.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    planet: PlanetModel,
    ctx: BasisContext,
    model: DynamicModel,
    m_max: u32,
    degree: u32,
    background: Option<BackgroundJ>,
    source: PreparedSource,
    tables: Option<RadialTables>,
    exec: Execution,
}

impl ForwardModel {
    /// Wind-driven model. The wind's own decay is kept as the default and may
    /// be replaced per evaluation.
    pub fn from_wind(
        planet: PlanetModel,
        ctx: BasisContext,
        model: DynamicModel,
        wind: &WindField,
        degree: u32,
        exec: Execution,
    ) -> Result<Self> {
        Self::check_degree(&ctx, degree)?;
        let split = SourceEvaluator::new(&planet, wind).tabulate_decay_split(&ctx, exec);
        let source = PreparedSource::Wind { split, decay: Some(wind.decay.clone()) };
        Self::assemble(planet, ctx, model, source, degree, exec)
    }

    /// Model driven by a fixed, already tabulated source.
    pub fn from_grid(
        planet: PlanetModel,
        ctx: BasisContext,
        model: DynamicModel,
        grid: SourceGrid,
        degree: u32,
        exec: Execution,
    ) -> Result<Self> {
        Self::check_degree(&ctx, degree)?;
        Self::assemble(planet, ctx, model, PreparedSource::Fixed(grid), degree, exec)
    }

    fn assemble(
        planet: PlanetModel,
        ctx: BasisContext,
        model: DynamicModel,
        source: PreparedSource,
        degree: u32,
        exec: Execution,
    ) -> Result<Self> {
        let m_max = ctx.m_max();
        let tables = match model {
            DynamicModel::Tgwe => Some(RadialTables::new(&ctx, 2, degree, m_max, exec)?),
            DynamicModel::Twe => None,
        };
        Ok(Self { planet, ctx, model, m_max, degree, background: None, source, tables, exec })
    }

    /// `S = ((π/R)² - γ_{n,m}²) u_{m,n,0}`.
    pub fn manufactured(
        planet: PlanetModel,
        ctx: BasisContext,
        model: DynamicModel,
        m: u32,
        n: u32,
        degree: u32,
        exec: Execution,
    ) -> Result<Self> {
        let d = helmholtz_denominator(&ctx, m, n)?;
        let grid = SourceGrid::from_fn(
            &ctx,
            |r, t| d * ctx.radial_basis_eval(m, n, r).unwrap_or(0.0) * zonal_harmonic(n, t),
            exec,
        );
        Self::from_grid(planet, ctx, model, grid, degree, exec)
    }

    /// Builds the model described by `cfg`. `degree` overrides the configured `N`.
    pub fn from_config(cfg: &RunConfig, degree: Option<u32>, exec: Execution) -> Result<Self> {
        let planet = cfg.planet.model()?;
        let t = cfg.truncation;
        let degree = degree.or(t.degree).unwrap_or(t.n_max);
        if degree < 2 {
            return Err(Error::Config(format!("output degree must be >= 2, got {degree}")));
        }
        let ctx = BasisContext::new(planet.radius, t.m_max, t.n_max.max(degree), cfg.quadrature)?;
        let mut fm = match &cfg.source {
            SourceConfig::Manufactured { m, n } => Self::manufactured(planet, ctx, cfg.model, *m, *n, degree, exec)?,
            SourceConfig::Wind(w) => {
                let profile = SurfaceWindProfile::load(&cfg.resolve(&w.profile))?;
                let decay = match &w.decay.params {
                    Some(p) => Some(DecayParams::new(w.decay.family, p.clone())?),
                    None if w.decay.family.arity() == 0 => Some(DecayParams::none()),
                    None => None,
                };
                let wind = WindField::new(profile, decay.clone().unwrap_or_else(DecayParams::none), w.smoothing, planet.radius)?;
                let mut fm = Self::from_wind(planet, ctx, cfg.model, &wind, degree, exec)?;
                if let PreparedSource::Wind { decay: d, .. } = &mut fm.source {
                    *d = decay;
                }
                fm
            }
        };
        if let Some(p) = &cfg.planet.background_j {
            fm.background = Some(BackgroundJ::load(&cfg.resolve(p))?);
        }
        Ok(fm)
    }

    fn check_degree(ctx: &BasisContext, degree: u32) -> Result<()> {
        if degree < 2 || degree > ctx.n_max() {
            return Err(Error::Config(format!("output degree {degree} must lie in [2, {}]", ctx.n_max())));
        }
        Ok(())
    }

    pub fn planet(&self) -> &PlanetModel {
        &self.planet
    }

    pub fn context(&self) -> &BasisContext {
        &self.ctx
    }

    pub fn model(&self) -> DynamicModel {
        self.model
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn degrees(&self) -> Vec<u32> {
        (2..=self.degree).collect()
    }

    pub fn with_background(mut self, background: Option<BackgroundJ>) -> Self {
        self.background = background;
        self
    }

    /// `J⁰_n` for `n = 2..=N`.
    pub fn background(&self) -> Result<Vec<f64>> {
        self.degrees().into_iter().map(|n| self.planet.background_jn(n, self.background.as_ref())).collect()
    }

    /// The configured decay of a wind source, if any.
    pub fn configured_decay(&self) -> Option<&DecayParams> {
        match &self.source {
            PreparedSource::Wind { decay, .. } => decay.as_ref(),
            PreparedSource::Fixed(_) => None,
        }
    }

    pub fn is_wind_driven(&self) -> bool {
        matches!(self.source, PreparedSource::Wind { .. })
    }

    /// Source samples for `decay`, or for the configured decay when `None`.
    pub fn grid(&self, decay: Option<&DecayParams>) -> Result<Cow<'_, SourceGrid>> {
        match &self.source {
            PreparedSource::Fixed(g) => Ok(Cow::Borrowed(g)),
            PreparedSource::Wind { split, decay: configured } => {
                let d = decay
                    .or(configured.as_ref())
                    .ok_or_else(|| Error::Config("forward run needs decay.params".into()))?;
                Ok(Cow::Owned(split.combine(d)))
            }
        }
    }

    /// Full series for each `n = 2..=N`.
    pub fn series(&self, decay: Option<&DecayParams>) -> Result<Vec<SeriesValue>> {
        let grid = self.grid(decay)?;
        delta_j_range_with(
            &self.ctx,
            &self.planet,
            &grid,
            self.model,
            2,
            self.degree,
            self.m_max,
            self.tables.as_ref(),
            self.exec,
        )
    }

    /// `δJ_n` for `n = 2..=N`.
    pub fn delta_j(&self, decay: Option<&DecayParams>) -> Result<Vec<f64>> {
        Ok(self.series(decay)?.into_iter().map(|s| s.value).collect())
    }

    pub fn run(&self) -> Result<ForwardResult> {
        let series = self.series(None)?;
        Ok(ForwardResult {
            coeffs: GravityCoeffs {
                model: self.model,
                gm: self.planet.gm(),
                radius: self.planet.radius,
                n: self.degrees(),
                dj: series.iter().map(|s| s.value).collect(),
                m_max: self.m_max,
                convention: SIGN_CONVENTION.to_owned(),
            },
            series,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    pub coeffs: GravityCoeffs,
    pub series: Vec<SeriesValue>,
}

impl ForwardResult {
    /// Long-format table `n,m,term,partial_sum`; TWE rows carry `m = 0`.
    pub fn contributions_csv(&self) -> String {
        let mut out = String::from("n,m,term,partial_sum\n");
        for (n, s) in self.coeffs.n.iter().zip(&self.series) {
            let mut acc = 0.0;
            for (i, term) in s.terms.iter().enumerate() {
                acc += term;
                let m = if self.coeffs.model == DynamicModel::Twe { 0 } else { i + 1 };
                let _ = writeln!(out, "{n},{m},{term:e},{acc:e}");
            }
        }
        out
    }

    /// Degrees whose truncation tail is large relative to the partial sum,
    /// ignoring tails at round-off level of the largest series.
    pub fn warnings(&self) -> Vec<String> {
        let floor = 1e-10 * self.series.iter().map(SeriesValue::magnitude).fold(0.0, f64::max);
        self.coeffs
            .n
            .iter()
            .zip(&self.series)
            .filter(|(_, s)| s.tail_warning(floor))
            .map(|(n, s)| {
                format!("δJ_{n}: tail estimate {:e} exceeds 1% of the partial sum {:e}; raise m_max", s.tail, s.value)
            })
            .collect()
    }

    pub fn write(&self, coeffs: &Path, contributions: Option<&Path>) -> Result<()> {
        crate::io::write_text(coeffs, &crate::io::to_json_string(&self.coeffs)?)?;
        if let Some(p) = contributions {
            crate::io::write_text(p, &self.contributions_csv())?;
        }
        Ok(())
    }
}
