//! Normalized transmissions, relative deviations between closure orders and
//! the semiclassical-to-quantum boundary `N_sc`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::{Family, MomentEquations};
use crate::error::{Error, Result};
use crate::integrate::{basin_scan, default_basin_grid, IntegratorConfig};
use crate::model::{scale_ensemble, ClusterEnsemble, CumulantOrder, PhysicalParams};
use crate::semiclassical::SelfConsistency;

const ORDERS: [CumulantOrder; 3] = [CumulantOrder::Ce1, CumulantOrder::Ce2, CumulantOrder::Ce3];

/// `x_ce / x_sc`.
pub fn normalized_amplitude(x_ce: f64, x_sc: f64) -> Result<f64> {
    if x_sc == 0.0 || !x_sc.is_finite() {
        return Err(Error::UndefinedNormalization);
    }
    Ok(x_ce / x_sc)
}

/// `|x_n − x_m| / x_m`.
pub fn relative_deviation(x_n: f64, x_m: f64) -> f64 {
    (x_n - x_m).abs() / x_m
}

/// Relative deviations of the stationary `|⟨a⟩|²` between closure orders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationTriple {
    pub d12: f64,
    pub d23: f64,
    pub d13: f64,
}

impl DeviationTriple {
    /// From the CE1, CE2 and CE3 amplitudes; denominators are the higher order.
    pub fn from_amplitudes(x: [f64; 3]) -> Self {
        Self {
            d12: relative_deviation(x[0], x[1]),
            d23: relative_deviation(x[1], x[2]),
            d13: relative_deviation(x[0], x[2]),
        }
    }

    pub fn max(&self) -> f64 {
        self.d12.max(self.d23).max(self.d13)
    }

    /// True when all three deviations are finite and below `eps`.
    pub fn below(&self, eps: f64) -> bool {
        [self.d12, self.d23, self.d13].iter().all(|d| d.is_finite() && *d < eps)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d12, self.d23, self.d13]
    }
}

/// Stationary amplitudes of all three orders plus the basin start used by each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviations {
    pub amplitudes: [f64; 3],
    pub sz0: [f64; 3],
    pub triple: DeviationTriple,
}

/// `η/η⁺_crit` of the CE1 problem, or 0 when it is undefined (no coupling).
pub fn drive_ratio(ensemble: &ClusterEnsemble, params: &PhysicalParams) -> f64 {
    if ensemble.clusters().iter().all(|c| c.g == 0.0 || c.weight == 0.0) {
        return 0.0;
    }
    let eta_plus = SelfConsistency::new(ensemble, params).eta_plus_crit();
    if eta_plus > 0.0 && eta_plus.is_finite() {
        params.eta / eta_plus
    } else {
        0.0
    }
}

/// Stationary `|⟨a⟩|²` at one closure order, starting unexcited and falling
/// back to the basin grid. Returns the amplitude and the `sz0` that converged.
pub fn stationary_amplitude(
    order: CumulantOrder,
    ensemble: &ClusterEnsemble,
    params: &PhysicalParams,
    config: &IntegratorConfig,
) -> Result<(f64, f64)> {
    let ratio = drive_ratio(ensemble, params);
    let mut eqs = MomentEquations::new(order, ensemble.clone(), *params)?;
    match basin_scan(&mut eqs, &default_basin_grid(), config, ratio) {
        Ok(r) => Ok((eqs.layout().get(&r.state, Family::A, 0, 0).norm_sqr(), r.sz0)),
        Err(Error::BasinExhausted(attempts)) => {
            let outcome = attempts.into_iter().next().map(|(_, o)| o).expect("nonempty grid");
            Err(Error::NotStationary { order, outcome })
        }
        Err(e) => Err(e),
    }
}

/// Runs CE1, CE2 and CE3 to stationarity and forms the deviation triple.
pub fn deviation_triple(
    ensemble: &ClusterEnsemble,
    params: &PhysicalParams,
    config: &IntegratorConfig,
) -> Result<Deviations> {
    let mut amplitudes = [0.0; 3];
    let mut sz0 = [0.0; 3];
    for (i, order) in ORDERS.into_iter().enumerate() {
        let (x, z) = stationary_amplitude(order, ensemble, params, config)?;
        amplitudes[i] = x;
        sz0[i] = z;
    }
    Ok(Deviations { amplitudes, sz0, triple: DeviationTriple::from_amplitudes(amplitudes) })
}

/// Search settings for [`nsc_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NscSettings {
    pub delta_eps: f64,
    pub n_min: f64,
    pub n_max: f64,
    /// Geometric grid density.
    pub points_per_decade: usize,
    /// Larger grid values that must also satisfy the criterion.
    pub confirm_points: usize,
    pub integrator: IntegratorConfig,
}

impl Default for NscSettings {
    fn default() -> Self {
        Self {
            delta_eps: 1e-2,
            n_min: 10.0,
            n_max: 1e6,
            points_per_decade: 10,
            confirm_points: 3,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl NscSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_eps > 0.0) {
            return Err(Error::InvalidParameter("delta_eps must be positive".into()));
        }
        if !(self.n_min > 0.0 && self.n_max >= self.n_min) {
            return Err(Error::InvalidParameter(format!("bad N range [{}, {}]", self.n_min, self.n_max)));
        }
        if self.points_per_decade == 0 || self.confirm_points < 2 {
            return Err(Error::InvalidParameter("need points_per_decade >= 1 and confirm_points >= 2".into()));
        }
        self.integrator.validate()
    }

    fn grid_value(&self, k: usize) -> f64 {
        self.n_min * 10f64.powf(k as f64 / self.points_per_decade as f64)
    }
}

/// One evaluation during the search: `N` and its deviations (if all orders converged).
pub type TraceEntry = (f64, Option<[f64; 3]>);

/// Boundary result for one drive ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub eta_ratio: f64,
    pub n_sc: f64,
    pub deviations: Deviations,
    pub trace: Vec<TraceEntry>,
}

/// Rescales `base` to any `N` at fixed cooperativity, with the drive set to
/// `eta_ratio · η⁺_crit`.
pub fn fixed_cooperativity_factory(
    base: ClusterEnsemble,
    params: PhysicalParams,
    eta_ratio: f64,
) -> impl Fn(f64) -> Result<(ClusterEnsemble, PhysicalParams)> + Sync {
    let eta = eta_ratio * SelfConsistency::new(&base, &params).eta_plus_crit();
    let params = params.with_eta(eta);
    move |n| scale_ensemble(&base, &params, n)
}

/// Smallest `N` for which all three deviations stay below `delta_eps`, confirmed
/// on the next `confirm_points` grid values and refined by bisection.
pub fn nsc_search<F>(factory: F, eta_ratio: f64, settings: &NscSettings) -> Result<BoundaryPoint>
where
    F: Fn(f64) -> Result<(ClusterEnsemble, PhysicalParams)>,
{
    settings.validate()?;
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut eval = |n: f64| -> Result<Option<Deviations>> {
        let (e, p) = factory(n)?;
        let d = match deviation_triple(&e, &p, &settings.integrator) {
            Ok(d) => Some(d),
            Err(Error::NotStationary { .. }) => None,
            Err(e) => return Err(e),
        };
        trace.push((n, d.as_ref().map(|d| d.triple.as_array())));
        Ok(d.filter(|d| d.triple.below(settings.delta_eps)))
    };
    let mut passed: Vec<Option<Deviations>> = Vec::new();
    let mut k = 0;
    let hit = loop {
        let n = settings.grid_value(k);
        if n > settings.n_max * (1.0 + 1e-12) {
            break None;
        }
        while passed.len() <= k + settings.confirm_points {
            let v = eval(settings.grid_value(passed.len()))?;
            let ok = v.is_some();
            passed.push(v);
            if !ok {
                break;
            }
        }
        if (k..=k + settings.confirm_points).all(|i| passed.get(i).is_some_and(Option::is_some)) {
            break Some(k);
        }
        let last_fail = (k..passed.len()).rev().find(|&i| passed[i].is_none()).unwrap_or(k);
        k = last_fail + 1;
    };
    let Some(k) = hit else {
        return Err(Error::BoundaryNotFound { n_min: settings.n_min, n_max: settings.n_max, trace });
    };
    let hi_dev = passed[k].clone().expect("checked");
    if k == 0 {
        return Ok(BoundaryPoint { eta_ratio, n_sc: settings.n_min, deviations: hi_dev, trace });
    }
    let (mut lo, mut hi) = (settings.grid_value(k - 1), settings.grid_value(k));
    let mut best = (hi, hi_dev);
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        match eval(mid)? {
            Some(d) => {
                hi = mid;
                best = (mid, d);
            }
            None => lo = mid,
        }
    }
    let n_int = best.0.ceil();
    if n_int != best.0 {
        if let Some(d) = eval(n_int)? {
            best = (n_int, d);
        }
    }
    Ok(BoundaryPoint { eta_ratio, n_sc: best.0.ceil(), deviations: best.1, trace })
}

/// One row of a boundary sweep: a label (C or Γ in MHz), a base ensemble and
/// its parameters. The drive is set per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: f64,
    pub ensemble: ClusterEnsemble,
    pub params: PhysicalParams,
}

/// Result of one grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: f64,
    pub eta_ratio: f64,
    pub result: Result<BoundaryPoint>,
}

impl SweepPoint {
    pub fn status(&self) -> String {
        match &self.result {
            Ok(_) => "ok".into(),
            Err(Error::BoundaryNotFound { .. }) => "not_found".into(),
            Err(Error::NotStationary { order, outcome }) => format!("{order}_{}", outcome.label()),
            Err(Error::Contract(_)) => "excluded".into(),
            Err(_) => "error".into(),
        }
    }
}

/// `nsc_search` over every (row, drive ratio) pair. Points are computed in
/// parallel on the current rayon pool and returned in grid order.
pub fn boundary_sweep(rows: &[SweepRow], eta_ratios: &[f64], settings: &NscSettings) -> Vec<SweepPoint> {
    let tasks: Vec<(&SweepRow, f64)> = rows.iter().flat_map(|r| eta_ratios.iter().map(move |&q| (r, q))).collect();
    tasks
        .into_par_iter()
        .map(|(row, q)| {
            let result = if q == 1.0 {
                Err(Error::Contract("eta ratio 1 is excluded (critical slowing down)".into()))
            } else {
                nsc_search(fixed_cooperativity_factory(row.ensemble.clone(), row.params, q), q, settings)
            };
            SweepPoint { label: row.label, eta_ratio: q, result }
        })
        .collect()
}

/// Boundary CSV with columns `label_column, eta_over_etacrit, n_sc, d12, d23, d13, status`.
pub fn boundary_csv(label_column: &str, points: &[SweepPoint]) -> String {
    let mut s = format!("{label_column},eta_over_etacrit,n_sc,d12,d23,d13,status\n");
    for p in points {
        match &p.result {
            Ok(b) => {
                let t = b.deviations.triple;
                s.push_str(&format!("{},{},{},{},{},{},ok\n", p.label, p.eta_ratio, b.n_sc, t.d12, t.d23, t.d13));
            }
            Err(_) => s.push_str(&format!("{},{},,,,,{}\n", p.label, p.eta_ratio, p.status())),
        }
    }
    s
}
