//! JSON run configuration. Rates are given in MHz and converted with `2π`.

use serde::{Deserialize, Serialize};
use spincav::boundary::NscSettings;
use spincav::integrate::IntegratorConfig;
use spincav::model::{cooperativity, gaussian_ensemble, mhz, ClusterEnsemble, CumulantOrder, PhysicalParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsMhz,
    pub ensemble: EnsembleSpec,
    pub order: CumulantOrder,
    pub integrator: IntegratorConfig,
    pub sweep: SweepSpec,
    pub boundary: BoundarySpec,
    pub oracle: OracleSpec,
    pub out: String,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsMhz::default(),
            ensemble: EnsembleSpec::default(),
            order: CumulantOrder::Ce3,
            integrator: IntegratorConfig::default(),
            sweep: SweepSpec::default(),
            boundary: BoundarySpec::default(),
            oracle: OracleSpec::default(),
            out: "spincav-out".into(),
            workers: 1,
        }
    }
}

/// Rates in MHz (`κ = 2π·kappa`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsMhz {
    pub kappa: f64,
    pub gamma_h: f64,
    pub gamma_p: f64,
    pub delta_c: f64,
}

impl Default for ParamsMhz {
    fn default() -> Self {
        Self { kappa: 1.0, gamma_h: 0.5, gamma_p: 0.0, delta_c: 0.0 }
    }
}

impl ParamsMhz {
    pub fn physical(&self) -> PhysicalParams {
        PhysicalParams {
            kappa: mhz(self.kappa),
            gamma_h: mhz(self.gamma_h),
            gamma_p: mhz(self.gamma_p),
            delta_c: mhz(self.delta_c),
            eta: 0.0,
        }
    }
}

/// Either a homogeneous resonant ensemble or a Gaussian distribution on
/// `clusters` equidistant frequencies spanning `±span·Γ`. The coupling is
/// given directly (`g_mhz`) or through the cooperativity `c` of the
/// unbroadened ensemble with the same `N` and `g`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    Homogeneous {
        n: f64,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        g_mhz: Option<f64>,
    },
    Gaussian {
        n: f64,
        gamma_mhz: f64,
        clusters: usize,
        span: f64,
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        g_mhz: Option<f64>,
    },
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec::Homogeneous { n: 100.0, c: Some(14.0), g_mhz: None }
    }
}

impl EnsembleSpec {
    pub fn n(&self) -> f64 {
        match self {
            EnsembleSpec::Homogeneous { n, .. } | EnsembleSpec::Gaussian { n, .. } => *n,
        }
    }

    fn coupling(&self, p: &PhysicalParams, c_override: Option<f64>) -> Result<f64, String> {
        let (c, g) = match self {
            EnsembleSpec::Homogeneous { c, g_mhz, .. } | EnsembleSpec::Gaussian { c, g_mhz, .. } => (*c, *g_mhz),
        };
        let from_c = |c: f64| (c * p.kappa * p.gamma_h / self.n()).sqrt();
        if let Some(c) = c_override {
            return Ok(from_c(c));
        }
        match (c, g) {
            (Some(c), None) => Ok(from_c(c)),
            (None, Some(g)) => Ok(mhz(g)),
            (Some(_), Some(_)) => Err("ensemble: give either c or g_mhz, not both".into()),
            (None, None) => Err("ensemble: one of c or g_mhz is required".into()),
        }
    }

    /// Builds the ensemble, optionally overriding the cooperativity or the width.
    pub fn build(&self, p: &PhysicalParams, c: Option<f64>, gamma_mhz: Option<f64>) -> Result<ClusterEnsemble, String> {
        let n = self.n();
        if !(n > 0.0) {
            return Err(format!("ensemble: n must be positive, got {n}"));
        }
        let g = self.coupling(p, c)?;
        match self {
            EnsembleSpec::Homogeneous { .. } => {
                if gamma_mhz.is_some() {
                    return Err("sweep.gamma_values_mhz needs a gaussian ensemble".into());
                }
                Ok(ClusterEnsemble::homogeneous(n, g))
            }
            EnsembleSpec::Gaussian { gamma_mhz: w, clusters, span, .. } => {
                gaussian_ensemble(n, mhz(gamma_mhz.unwrap_or(*w)), *clusters, *span, g).map_err(|e| e.to_string())
            }
        }
    }
}

/// A list of values or an evenly spaced (optionally logarithmic) range.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range(Range),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Range(r) => {
                if r.points < 2 {
                    return Err("grid range needs at least 2 points".into());
                }
                if r.log && !(r.from > 0.0 && r.to > 0.0) {
                    return Err("logarithmic grid needs positive bounds".into());
                }
                let k = (r.points - 1) as f64;
                Ok((0..r.points)
                    .map(|i| {
                        let s = i as f64 / k;
                        if r.log {
                            r.from * (r.to / r.from).powf(s)
                        } else {
                            r.from + (r.to - r.from) * s
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Rows of cooperativities (replaces the ensemble's `c`).
    pub c_values: Option<Vec<f64>>,
    /// Rows of Gaussian widths (Gaussian ensembles only).
    pub gamma_values_mhz: Option<Vec<f64>>,
    /// Absolute drives for `steady`, in MHz.
    pub eta_mhz: Option<Grid>,
    /// Drives as multiples of `η⁺_crit`.
    pub eta_ratios: Grid,
    /// Ensemble sizes; the ensemble is rescaled at fixed cooperativity.
    pub n_values: Option<Grid>,
    /// Trajectory length and sample count for `evolve` (µs).
    pub t_end: f64,
    pub samples: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            c_values: None,
            gamma_values_mhz: None,
            eta_mhz: None,
            eta_ratios: Grid::List(vec![1.05]),
            n_values: None,
            t_end: 20.0,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundarySpec {
    pub delta_eps: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points_per_decade: usize,
    pub confirm_points: usize,
}

impl Default for BoundarySpec {
    fn default() -> Self {
        let d = NscSettings::default();
        Self {
            delta_eps: d.delta_eps,
            n_min: d.n_min,
            n_max: d.n_max,
            points_per_decade: d.points_per_decade,
            confirm_points: d.confirm_points,
        }
    }
}

impl BoundarySpec {
    pub fn settings(&self, integrator: IntegratorConfig) -> NscSettings {
        NscSettings {
            delta_eps: self.delta_eps,
            n_min: self.n_min,
            n_max: self.n_max,
            points_per_decade: self.points_per_decade,
            confirm_points: self.confirm_points,
            integrator,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub spins: usize,
    /// Random density matrices per cluster partition.
    pub samples: usize,
    pub seed: u64,
    pub photon_cutoff: usize,
    pub max_photons: usize,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { spins: 2, samples: 100, seed: 1, photon_cutoff: 7, max_photons: 2 }
    }
}

/// A labelled ensemble row of a sweep.
pub struct Row {
    pub label: f64,
    pub ensemble: ClusterEnsemble,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.params.physical().with_eta(1.0).validate().map_err(|e| e.to_string())?;
        self.integrator.validate().map_err(|e| e.to_string())?;
        self.boundary.settings(self.integrator).validate().map_err(|e| e.to_string())?;
        if self.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        if self.sweep.c_values.is_some() && self.sweep.gamma_values_mhz.is_some() {
            return Err("sweep: c_values and gamma_values_mhz are mutually exclusive".into());
        }
        if !(self.sweep.t_end > 0.0) || self.sweep.samples < 2 {
            return Err("sweep: t_end must be positive and samples >= 2".into());
        }
        self.sweep.eta_ratios.values()?;
        if let Some(g) = &self.sweep.eta_mhz {
            g.values()?;
        }
        if let Some(g) = &self.sweep.n_values {
            if g.values()?.iter().any(|n| !(*n > 0.0)) {
                return Err("sweep: n_values must be positive".into());
            }
        }
        self.rows()?;
        Ok(())
    }

    /// Column name of the row label.
    pub fn label_column(&self) -> &'static str {
        if self.sweep.gamma_values_mhz.is_some() {
            "gamma_mhz"
        } else {
            "c"
        }
    }

    pub fn rows(&self) -> Result<Vec<Row>, String> {
        let p = self.params.physical();
        if let Some(cs) = &self.sweep.c_values {
            return cs
                .iter()
                .map(|&c| {
                    if !(c >= 0.0) {
                        return Err(format!("sweep: negative cooperativity {c}"));
                    }
                    Ok(Row { label: c, ensemble: self.ensemble.build(&p, Some(c), None)? })
                })
                .collect();
        }
        if let Some(gs) = &self.sweep.gamma_values_mhz {
            return gs.iter().map(|&g| Ok(Row { label: g, ensemble: self.ensemble.build(&p, None, Some(g))? })).collect();
        }
        let e = self.ensemble.build(&p, None, None)?;
        // rounded so that labels and file names stay readable
        let c = (cooperativity(&e, &p) * 1e9).round() / 1e9;
        Ok(vec![Row { label: c, ensemble: e }])
    }

    pub fn n_values(&self) -> Vec<f64> {
        self.sweep.n_values.as_ref().and_then(|g| g.values().ok()).unwrap_or_else(|| vec![self.ensemble.n()])
    }
}
