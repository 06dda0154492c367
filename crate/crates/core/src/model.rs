//! Physical parameters, spin ensembles and derived quantities.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a frequency in MHz to an angular frequency in rad/µs.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Cavity and spin rates plus drive, all in rad/µs.
///
/// `gamma_p` enters the dissipator as `γ_p (σz ρ σz − ρ)`, so the transverse
/// spin coherence decays at `γ_h + 2γ_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub kappa: f64,
    pub gamma_h: f64,
    pub gamma_p: f64,
    pub delta_c: f64,
    pub eta: f64,
}

impl Default for PhysicalParams {
    /// κ = 2γ_h = 2π × 1 MHz, resonant, undriven.
    fn default() -> Self {
        Self { kappa: mhz(1.0), gamma_h: mhz(0.5), gamma_p: 0.0, delta_c: 0.0, eta: 0.0 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa > 0.0
            && self.gamma_h > 0.0
            && self.gamma_p >= 0.0
            && self.eta >= 0.0
            && self.delta_c.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{self:?}")))
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Transverse decay rate γ_⊥ = γ_h + 2γ_p.
    pub fn gamma_perp(&self) -> f64 {
        self.gamma_h + 2.0 * self.gamma_p
    }
}

/// One frequency cluster: detuning, coupling and (real-valued) spin count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub delta: f64,
    pub g: f64,
    pub weight: f64,
}

/// An ordered set of frequency clusters with strictly increasing detunings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEnsemble {
    clusters: Vec<Cluster>,
    total_spins: f64,
}

impl ClusterEnsemble {
    pub fn new(clusters: Vec<Cluster>) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::InvalidGrid("ensemble needs at least one cluster".into()));
        }
        for c in &clusters {
            if !(c.weight >= 0.0) || !c.g.is_finite() || !c.delta.is_finite() {
                return Err(Error::InvalidGrid(format!("bad cluster {c:?}")));
            }
        }
        if clusters.windows(2).any(|w| w[1].delta <= w[0].delta) {
            return Err(Error::InvalidGrid("cluster detunings must be strictly increasing".into()));
        }
        let total_spins = clusters.iter().map(|c| c.weight).sum();
        Ok(Self { clusters, total_spins })
    }

    /// Single resonant cluster holding all `n` spins.
    pub fn homogeneous(n: f64, g: f64) -> Self {
        Self { clusters: vec![Cluster { delta: 0.0, g, weight: n }], total_spins: n }
    }

    /// Homogeneous resonant ensemble with coupling chosen to give cooperativity `c`.
    pub fn with_cooperativity(n: f64, c: f64, params: &PhysicalParams) -> Self {
        let g = (c * params.kappa * params.gamma_h / n).sqrt();
        Self::homogeneous(n, g)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn total_spins(&self) -> f64 {
        self.total_spins
    }

    /// Replaces every coupling with `g`, keeping detunings and weights.
    pub fn with_uniform_coupling(&self, g: f64) -> Self {
        let clusters = self.clusters.iter().map(|c| Cluster { g, ..*c }).collect();
        Self { clusters, total_spins: self.total_spins }
    }
}

/// Closure order of the cumulant expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CumulantOrder {
    Ce1,
    Ce2,
    Ce3,
}

impl CumulantOrder {
    pub const ALL: [CumulantOrder; 3] = [CumulantOrder::Ce1, CumulantOrder::Ce2, CumulantOrder::Ce3];

    pub fn level(self) -> usize {
        match self {
            CumulantOrder::Ce1 => 1,
            CumulantOrder::Ce2 => 2,
            CumulantOrder::Ce3 => 3,
        }
    }
}

impl fmt::Display for CumulantOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CumulantOrder::Ce1 => "CE1",
            CumulantOrder::Ce2 => "CE2",
            CumulantOrder::Ce3 => "CE3",
        })
    }
}

impl std::str::FromStr for CumulantOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce1" | "1" => Ok(CumulantOrder::Ce1),
            "ce2" | "2" => Ok(CumulantOrder::Ce2),
            "ce3" | "3" => Ok(CumulantOrder::Ce3),
            _ => Err(Error::InvalidParameter(format!("unknown closure order '{s}'"))),
        }
    }
}

/// Collective cooperativity `C = (1/κγ_h) Σ_μ M_μ g_μ² / (1 + Δ_μ²/γ_h²)`.
pub fn cooperativity(ensemble: &ClusterEnsemble, params: &PhysicalParams) -> f64 {
    let gh = params.gamma_h;
    let sum: f64 = ensemble
        .clusters
        .iter()
        .map(|c| c.weight * c.g * c.g / (1.0 + (c.delta / gh).powi(2)))
        .sum();
    sum / (params.kappa * gh)
}

/// Photon saturation number `n₀ = γ_h² / 2g²`.
pub fn saturation_photon_number(g: f64, gamma_h: f64) -> Result<f64> {
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidParameter(format!("saturation photon number needs g != 0, got {g}")));
    }
    Ok(gamma_h * gamma_h / (2.0 * g * g))
}

/// Rescales to `n_target` spins so that the CE1 equations are unchanged:
/// `g → g √(N/N')`, `η → η √(N'/N)`, cluster shape kept.
pub fn scale_ensemble(
    ensemble: &ClusterEnsemble,
    params: &PhysicalParams,
    n_target: f64,
) -> Result<(ClusterEnsemble, PhysicalParams)> {
    if !(n_target > 0.0) {
        return Err(Error::InvalidParameter(format!("n_target must be positive, got {n_target}")));
    }
    let n = ensemble.total_spins;
    let ratio = n_target / n;
    let g_factor = ratio.sqrt().recip();
    let clusters = ensemble
        .clusters
        .iter()
        .map(|c| Cluster { delta: c.delta, g: c.g * g_factor, weight: c.weight * ratio })
        .collect();
    let scaled = ClusterEnsemble { clusters, total_spins: n_target };
    let params = PhysicalParams { eta: params.eta * ratio.sqrt(), ..*params };
    Ok((scaled, params))
}

/// Gaussian spin distribution on `l` equidistant clusters spanning
/// `[−span·Γ, +span·Γ]`, every cluster with coupling `g`.
///
/// `gamma_fwhm` is an angular full width at half maximum (rad/µs).
pub fn gaussian_ensemble(n: f64, gamma_fwhm: f64, l: usize, span: f64, g: f64) -> Result<ClusterEnsemble> {
    if l < 3 || l % 2 == 0 {
        return Err(Error::InvalidGrid(format!("cluster count must be odd and >= 3, got {l}")));
    }
    if !(gamma_fwhm > 0.0) || !(span > 0.0) || !(n > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need n > 0, gamma > 0, span > 0 (got {n}, {gamma_fwhm}, {span})"
        )));
    }
    let half = (l / 2) as f64;
    let step = span * gamma_fwhm / half;
    let detunings: Vec<f64> = (0..l).map(|i| (i as f64 - half) * step).collect();
    let profile: Vec<f64> = detunings
        .iter()
        .map(|d| (-4.0 * std::f64::consts::LN_2 * d * d / (gamma_fwhm * gamma_fwhm)).exp())
        .collect();
    let norm: f64 = profile.iter().sum();
    let clusters = detunings
        .iter()
        .zip(&profile)
        .map(|(&delta, &p)| Cluster { delta, g, weight: n * p / norm })
        .collect();
    ClusterEnsemble::new(clusters)
}
