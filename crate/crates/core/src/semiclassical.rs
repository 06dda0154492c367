//! Stationary states of the first-order (Maxwell–Bloch) closure.
//!
//! For a homogeneous resonant ensemble the stationary intensity `x = |⟨a⟩|²`
//! obeys `x (1 + C/(1 + x/n₀))² = η²/κ²`, a cubic in `x`. For a clustered
//! ensemble the same structure survives: the drive is an explicit function of
//! `x`, `η(x) = √x · |D(x)|` with
//! `D(x) = κ + iΔ_c + Σ_μ M_μ g_μ² s_μ(x) / (γ_⊥ + iΔ_μ)` and
//! `s_μ(x) = −⟨σz_μ⟩ = 1/(1 + 2g_μ²γ_⊥x / (γ_h(γ_⊥² + Δ_μ²)))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, PhysicalParams};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Middle,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Stationary |⟨a⟩|².
    pub x: f64,
    pub eta: f64,
    pub branch: Branch,
    pub stable: bool,
    /// Set when this root is a (numerically) double root of the stationary condition.
    pub tangency: bool,
}

/// Turning points of the stationary curve bounding the bistable window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalDrives {
    pub eta_minus: f64,
    pub eta_plus: f64,
    pub x_at_eta_minus: f64,
    pub x_at_eta_plus: f64,
}

pub fn is_bistable(c: f64) -> bool {
    c > 8.0
}

/// Real roots of `u³ + b u² + c u + d`, ascending, each polished by Newton.
/// Double roots are returned once with the flag set.
fn cubic_roots(b: f64, c: f64, d: f64) -> Vec<(f64, bool)> {
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let shift = -b / 3.0;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;

    let mut roots: Vec<(f64, bool)> = if scale == 0.0 {
        vec![(shift, true)]
    } else if disc.abs() <= 1e-12 * scale && p != 0.0 {
        // one simple and one double root
        let double = -3.0 * q / (2.0 * p);
        let single = 3.0 * q / p;
        vec![(double + shift, true), (single + shift, false)]
    } else if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| (m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift, false))
            .collect()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let t = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        vec![(t + shift, false)]
    };

    for (u, double) in roots.iter_mut() {
        let f = ((*u + b) * *u + c) * *u + d;
        let df = (3.0 * *u + 2.0 * b) * *u + c;
        if !*double && df != 0.0 {
            *u -= f / df;
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    roots
}

/// All nonnegative stationary intensities of the homogeneous resonant CE1 problem.
pub fn homogeneous_steady_states(c: f64, n0: f64, eta: f64, kappa: f64) -> Vec<BranchPoint> {
    let y = eta * eta / (kappa * kappa * n0);
    let a = 1.0 + c;
    let roots = cubic_roots(2.0 * a - y, a * a - 2.0 * y, -y);
    let roots: Vec<(f64, bool)> = roots.into_iter().filter(|(u, _)| *u >= 0.0).collect();

    let mk = |u: f64, branch, stable, tangency| BranchPoint { x: u * n0, eta, branch, stable, tangency };
    match roots.as_slice() {
        [] => vec![mk(0.0, Branch::Lower, true, false)],
        [(u, t)] => {
            let branch = single_branch_label(c, *u);
            vec![mk(*u, branch, !*t, *t)]
        }
        [(u0, t0), (u1, t1)] => {
            // tangency: the double root is either the lower/middle pair or the middle/upper pair
            if *t0 {
                vec![mk(*u0, Branch::Lower, false, true), mk(*u1, Branch::Upper, true, false)]
            } else {
                vec![mk(*u0, Branch::Lower, true, false), mk(*u1, Branch::Upper, false, *t1)]
            }
        }
        [(u0, _), (u1, _), (u2, _), ..] => vec![
            mk(*u0, Branch::Lower, true, false),
            mk(*u1, Branch::Middle, false, false),
            mk(*u2, Branch::Upper, true, false),
        ],
    }
}

fn single_branch_label(c: f64, u: f64) -> Branch {
    if c <= 0.0 {
        return Branch::Upper;
    }
    let u_ref = match homogeneous_turning_points(c) {
        Some((u_minus, u_plus)) => 0.5 * (u_minus + u_plus),
        None => max_slope_u(c),
    };
    if u < u_ref {
        Branch::Lower
    } else {
        Branch::Upper
    }
}

/// Roots of `u² + (2 − C)u + (1 + C) = 0`, i.e. `(u₋, u₊)` with `u₋ < u₊`.
/// `u₋` is the end of the lower branch (η⁺), `u₊` the end of the upper branch (η⁻).
pub fn homogeneous_turning_points(c: f64) -> Option<(f64, f64)> {
    if !is_bistable(c) {
        return None;
    }
    let root = (c * (c - 8.0)).sqrt();
    // product of roots is 1 + C; use it for the smaller root to avoid cancellation
    let u_plus = 0.5 * ((c - 2.0) + root);
    let u_minus = (1.0 + c) / u_plus;
    Some((u_minus, u_plus))
}

/// Drive at which the homogeneous stationary intensity equals `x`.
pub fn homogeneous_eta(c: f64, n0: f64, kappa: f64, x: f64) -> f64 {
    let u = x / n0;
    kappa * x.sqrt() * (1.0 + c / (1.0 + u))
}

/// Turning points of the homogeneous curve, present only for `C > 8`.
pub fn critical_drives(c: f64, n0: f64, kappa: f64) -> Option<CriticalDrives> {
    let (u_minus, u_plus) = homogeneous_turning_points(c)?;
    let x_plus = u_minus * n0;
    let x_minus = u_plus * n0;
    Some(CriticalDrives {
        eta_plus: homogeneous_eta(c, n0, kappa, x_plus),
        eta_minus: homogeneous_eta(c, n0, kappa, x_minus),
        x_at_eta_plus: x_plus,
        x_at_eta_minus: x_minus,
    })
}

/// `dη/du` in units of `κ√n₀`.
fn homogeneous_slope_inv(c: f64, u: f64) -> f64 {
    let s = 1.0 + u;
    (1.0 + c / s) / (2.0 * u.sqrt()) - u.sqrt() * c / (s * s)
}

/// `dη/ds` for `s = √u`, in units of `κ√n₀`.
fn homogeneous_amp_slope_inv(c: f64, s: f64) -> f64 {
    let q = 1.0 + s * s;
    1.0 + c * (1.0 - s * s) / (q * q)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Bracket the first interior local minimum of `f` on a log grid over `[lo, hi]`.
fn first_local_min_bracket(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let grid: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    (1..n - 1)
        .find(|&i| vals[i] < vals[i - 1] && vals[i] <= vals[i + 1])
        .map(|i| (grid[i - 1], grid[i + 1]))
}

/// Scaled intensity `u = x/n₀` of maximal slope for a non-bistable curve.
///
/// Uses the local maximum of `dx/dη` when it exists; for small `C` that
/// intensity slope has no finite maximum and the maximum of `d|⟨a⟩|/dη` is
/// used instead.
pub fn max_slope_u(c: f64) -> f64 {
    // at C = 8 the turning points merge into a double zero of dη/dx, which a
    // bracketing search only resolves to ~√ε
    if c == 8.0 {
        return 3.0;
    }
    let lo = 1e-4;
    let hi = 1e4 * (1.0 + c);
    let f = |u: f64| homogeneous_slope_inv(c, u);
    if let Some((a, b)) = first_local_min_bracket(&f, lo, hi, 4001) {
        return golden_min(f, a, b, 1e-12);
    }
    let g = |s: f64| homogeneous_amp_slope_inv(c, s);
    match first_local_min_bracket(&g, lo.sqrt(), hi.sqrt(), 4001) {
        Some((a, b)) => {
            let s = golden_min(g, a, b, 1e-12);
            s * s
        }
        None => 1.0,
    }
}

/// Drive and intensity of maximal slope for `C ≤ 8`.
pub fn max_slope_drive(c: f64, n0: f64, kappa: f64) -> (f64, f64) {
    let x = max_slope_u(c) * n0;
    (homogeneous_eta(c, n0, kappa, x), x)
}

/// Reference drive η⁺_crit: the upper turning point for `C > 8`, otherwise the
/// drive of maximal slope.
pub fn eta_plus_crit(c: f64, n0: f64, kappa: f64) -> f64 {
    match critical_drives(c, n0, kappa) {
        Some(cd) => cd.eta_plus,
        None => max_slope_drive(c, n0, kappa).0,
    }
}

/// Stationary CE1 self-consistency for a clustered ensemble.
#[derive(Debug, Clone)]
pub struct SelfConsistency {
    params: PhysicalParams,
    /// (M g², b_μ, Δ_μ, g_μ) per cluster
    terms: Vec<(f64, f64, f64, f64)>,
    gamma_perp: f64,
}

impl SelfConsistency {
    pub fn new(ensemble: &ClusterEnsemble, params: &PhysicalParams) -> Self {
        let gp = params.gamma_perp();
        let terms = ensemble
            .clusters()
            .iter()
            .map(|c| {
                let b = 2.0 * c.g * c.g * gp / (params.gamma_h * (gp * gp + c.delta * c.delta));
                (c.weight * c.g * c.g, b, c.delta, c.g)
            })
            .collect();
        Self { params: *params, terms, gamma_perp: gp }
    }

    fn denominator(&self, x: f64) -> (C64, C64) {
        let mut d = C64::new(self.params.kappa, self.params.delta_c);
        let mut dd = C64::new(0.0, 0.0);
        for &(mg2, b, delta, _) in &self.terms {
            let s = 1.0 / (1.0 + b * x);
            let inv = C64::new(self.gamma_perp, delta).inv();
            d += mg2 * s * inv;
            dd += -mg2 * b * s * s * inv;
        }
        (d, dd)
    }

    /// Drive that makes `x` stationary.
    pub fn eta_of_x(&self, x: f64) -> f64 {
        x.sqrt() * self.denominator(x).0.norm()
    }

    /// `d(η²)/dx`.
    pub fn d_eta_sq(&self, x: f64) -> f64 {
        let (d, dd) = self.denominator(x);
        d.norm_sqr() + 2.0 * x * (d.conj() * dd).re
    }

    /// Stationary cavity amplitude for intensity `x` and drive `eta`.
    pub fn amplitude(&self, x: f64, eta: f64) -> C64 {
        eta / self.denominator(x).0
    }

    /// Stationary per-cluster `(⟨σ⁻⟩, ⟨σz⟩)` given the cavity amplitude.
    pub fn spins(&self, x: f64, a: C64) -> Vec<(C64, f64)> {
        self.terms
            .iter()
            .map(|&(_, b, delta, g)| {
                let sz = -1.0 / (1.0 + b * x);
                (C64::i() * g * sz * a / C64::new(self.gamma_perp, delta), sz)
            })
            .collect()
    }

    /// Relative residual of the fixed-point map `x ↦ η²/|D(x)|²`.
    pub fn residual(&self, x: f64, eta: f64) -> f64 {
        let mapped = eta * eta / self.denominator(x).0.norm_sqr();
        (mapped - x).abs() / x.max(f64::MIN_POSITIVE)
    }

    /// Intensity scale at which the most easily saturated cluster saturates.
    fn x_scale(&self) -> f64 {
        let b_max = self.terms.iter().map(|t| t.1).fold(0.0, f64::max);
        if b_max > 0.0 {
            1.0 / b_max
        } else {
            1.0
        }
    }

    fn coupling_strength(&self) -> f64 {
        let total: f64 = self.terms.iter().map(|t| t.0).sum();
        total / (self.params.kappa * self.params.gamma_h)
    }

    /// Local extrema of η(x), ascending in x.
    pub fn turning_points(&self) -> Vec<f64> {
        let xs = self.x_scale();
        let lo = 1e-6 * xs;
        let hi = 1e4 * xs * (1.0 + self.coupling_strength());
        let n = 4001;
        let grid: Vec<f64> = (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.d_eta_sq(x)).collect();
        let mut out = Vec::new();
        for i in 0..n - 1 {
            if vals[i].signum() != vals[i + 1].signum() {
                out.push(bisect(|x| self.d_eta_sq(x), grid[i], grid[i + 1], 1e-15));
            }
        }
        out
    }

    /// η⁺ (end of the lower branch) and η⁻ (end of the upper branch), if bistable.
    pub fn critical_drives(&self) -> Option<CriticalDrives> {
        let tp = self.turning_points();
        if tp.len() < 2 {
            return None;
        }
        Some(CriticalDrives {
            eta_plus: self.eta_of_x(tp[0]),
            eta_minus: self.eta_of_x(tp[1]),
            x_at_eta_plus: tp[0],
            x_at_eta_minus: tp[1],
        })
    }

    /// Drive of maximal slope (local maximum of dx/dη, else of d|⟨a⟩|/dη).
    pub fn max_slope_drive(&self) -> (f64, f64) {
        let xs = self.x_scale();
        let lo = 1e-4 * xs;
        let hi = 1e4 * xs * (1.0 + self.coupling_strength());
        let slope_inv = |x: f64| self.d_eta_sq(x) / (2.0 * self.eta_of_x(x));
        let x = if let Some((a, b)) = first_local_min_bracket(&slope_inv, lo, hi, 4001) {
            golden_min(slope_inv, a, b, 1e-12)
        } else {
            // dη/d√x = 2√x dη/dx
            let amp = |s: f64| 2.0 * s * slope_inv(s * s);
            match first_local_min_bracket(&amp, lo.sqrt(), hi.sqrt(), 4001) {
                Some((a, b)) => golden_min(amp, a, b, 1e-12).powi(2),
                None => xs,
            }
        };
        (self.eta_of_x(x), x)
    }

    pub fn eta_plus_crit(&self) -> f64 {
        match self.critical_drives() {
            Some(cd) => cd.eta_plus,
            None => self.max_slope_drive().0,
        }
    }

    /// Monotone segments of η(x) as `[x_lo, x_hi]` intervals.
    fn segments(&self) -> Vec<(f64, f64)> {
        let mut edges = vec![0.0];
        edges.extend(self.turning_points());
        edges.push(f64::INFINITY);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn solve_on_segment(&self, eta: f64, lo: f64, hi: f64) -> Option<f64> {
        let f = |x: f64| self.eta_of_x(x) - eta;
        let f_lo = f(lo);
        let mut hi = hi;
        if hi.is_infinite() {
            hi = lo.max(self.x_scale()).max(eta * eta / self.params.kappa.powi(2)) * 2.0 + 1.0;
            while f(hi) < 0.0 {
                hi *= 4.0;
            }
        }
        let f_hi = f(hi);
        if f_lo == 0.0 {
            return Some(lo);
        }
        if f_lo.signum() == f_hi.signum() {
            return None;
        }
        Some(bisect(f, lo, hi, 1e-15))
    }

    fn label(&self, n_segments: usize, idx: usize, x: f64) -> (Branch, bool) {
        match (n_segments, idx) {
            (1, _) => {
                let (_, x_ms) = self.max_slope_drive();
                (if x < x_ms { Branch::Lower } else { Branch::Upper }, true)
            }
            (_, 0) => (Branch::Lower, true),
            (n, i) if i + 1 == n => (Branch::Upper, true),
            _ => (Branch::Middle, false),
        }
    }

    /// Every stationary intensity at drive `eta`, ascending.
    pub fn all_solutions(&self, eta: f64) -> Vec<BranchPoint> {
        if eta == 0.0 {
            return vec![BranchPoint { x: 0.0, eta, branch: Branch::Lower, stable: true, tangency: false }];
        }
        let segs = self.segments();
        let n = segs.len();
        segs.iter()
            .enumerate()
            .filter_map(|(i, &(lo, hi))| {
                let x = self.solve_on_segment(eta, lo, hi)?;
                let (branch, stable) = self.label(n, i, x);
                Some(BranchPoint { x, eta, branch, stable, tangency: false })
            })
            .collect()
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs() {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stationary CE1 state of a clustered ensemble on the branch selected by `x_guess`.
pub fn inhom_steady_state(
    ensemble: &ClusterEnsemble,
    params: &PhysicalParams,
    eta: f64,
    x_guess: f64,
) -> Result<BranchPoint> {
    let sc = SelfConsistency::new(ensemble, params);
    let sols = sc.all_solutions(eta);
    let best = sols
        .into_iter()
        .min_by(|a, b| (a.x - x_guess).abs().total_cmp(&(b.x - x_guess).abs()))
        .ok_or(Error::NoConvergence { residual: f64::NAN })?;
    let residual = if best.x > 0.0 { sc.residual(best.x, eta) } else { 0.0 };
    if residual > 1e-10 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(best)
}

/// Stationary solutions along an ascending drive grid.
pub fn semiclassical_curve(
    ensemble: &ClusterEnsemble,
    params: &PhysicalParams,
    eta_grid: &[f64],
) -> Result<Vec<BranchPoint>> {
    if eta_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("eta grid must be ascending".into()));
    }
    let sc = SelfConsistency::new(ensemble, params);
    let mut out = Vec::new();
    for &eta in eta_grid {
        for p in sc.all_solutions(eta) {
            if p.x > 0.0 && sc.residual(p.x, eta) > 1e-10 {
                return Err(Error::NoConvergence { residual: sc.residual(p.x, eta) });
            }
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense oracle: count roots of the stationary condition by sign changes.
    fn count_roots_by_scan(c: f64, n0: f64, eta: f64, kappa: f64) -> usize {
        let y = eta * eta / (kappa * kappa);
        let f = |x: f64| x * (1.0 + c / (1.0 + x / n0)).powi(2) - y;
        let n = 200_000;
        let hi = y * 1.5 + 10.0 * n0;
        let mut count = 0;
        let mut prev = f(0.0);
        for i in 1..=n {
            let x = hi * (i as f64 / n as f64).powi(2);
            let v = f(x);
            if v.signum() != prev.signum() {
                count += 1;
            }
            prev = v;
        }
        count
    }

    #[test]
    fn uncoupled_root_is_free_cavity() {
        let r = homogeneous_steady_states(0.0, 1.0, 3.0, 2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0].x - 2.25).abs() < 1e-14);
    }

    #[test]
    fn c14_critical_drives_match_closed_form() {
        // oracle: turning points u = 6 ∓ √21, η = √u (1 + 14/(1+u))
        let um = 6.0 - 21f64.sqrt();
        let up = 6.0 + 21f64.sqrt();
        let eta_p = um.sqrt() * (1.0 + 14.0 / (1.0 + um));
        let eta_m = up.sqrt() * (1.0 + 14.0 / (1.0 + up));
        assert!((eta_p - 8.0855).abs() < 1e-4);
        assert!((eta_m - 7.1852).abs() < 1e-4);
        let cd = critical_drives(14.0, 1.0, 1.0).unwrap();
        assert!((cd.eta_plus - eta_p).abs() < 1e-12);
        assert!((cd.eta_minus - eta_m).abs() < 1e-12);
        assert!((cd.x_at_eta_plus - um).abs() < 1e-12);
        // dense scan around the window edges agrees
        assert_eq!(count_roots_by_scan(14.0, 1.0, eta_p * 0.999, 1.0), 3);
        assert_eq!(count_roots_by_scan(14.0, 1.0, eta_p * 1.001, 1.0), 1);
        assert_eq!(count_roots_by_scan(14.0, 1.0, eta_m * 1.001, 1.0), 3);
        assert_eq!(count_roots_by_scan(14.0, 1.0, eta_m * 0.999, 1.0), 1);
    }

    #[test]
    fn tangency_at_eta_plus() {
        let cd = critical_drives(14.0, 1.0, 1.0).unwrap();
        let r = homogeneous_steady_states(14.0, 1.0, cd.eta_plus, 1.0);
        assert_eq!(r.len(), 2);
        assert!(r[0].tangency);
        assert!((r[0].x - (6.0 - 21f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn three_roots_inside_window() {
        let cd = critical_drives(14.0, 1.0, 1.0).unwrap();
        let eta = 0.5 * (cd.eta_minus + cd.eta_plus);
        let r = homogeneous_steady_states(14.0, 1.0, eta, 1.0);
        assert_eq!(r.len(), 3);
        assert_eq!(r[1].branch, Branch::Middle);
        assert!(!r[1].stable && r[0].stable && r[2].stable);
    }

    #[test]
    fn c8_merged_turning_point() {
        assert!(critical_drives(8.0, 1.0, 1.0).is_none());
        assert!(!is_bistable(8.0));
        assert!(is_bistable(8.0 + 1e-9));
        // C slightly above 8: both turning points close to u = 3
        let (um, up) = homogeneous_turning_points(8.0 + 1e-12).unwrap();
        assert!((um - 3.0).abs() < 1e-5 && (up - 3.0).abs() < 1e-5);
        // C = 8: η = κ√(27 n₀) at u = 3
        assert!((homogeneous_eta(8.0, 2.0, 1.5, 6.0) - 1.5 * (27.0f64 * 2.0).sqrt()).abs() < 1e-12);
        assert!((max_slope_u(8.0) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn c4_has_max_slope_drive_only() {
        assert!(critical_drives(4.0, 1.0, 1.0).is_none());
        let (eta, x) = max_slope_drive(4.0, 1.0, 1.0);
        assert!(eta > 0.0 && x > 0.0);
        assert_eq!(homogeneous_steady_states(4.0, 1.0, eta, 1.0).len(), 1);
    }

    #[test]
    fn single_cluster_matches_homogeneous() {
        let p = PhysicalParams::default();
        let n = 250.0;
        let c = 14.0;
        let e = ClusterEnsemble::with_cooperativity(n, c, &p);
        let g = e.clusters()[0].g;
        let n0 = crate::model::saturation_photon_number(g, p.gamma_h).unwrap();
        let cd = critical_drives(c, n0, p.kappa).unwrap();
        let sc = SelfConsistency::new(&e, &p);
        let icd = sc.critical_drives().unwrap();
        assert!((icd.eta_plus - cd.eta_plus).abs() < 1e-9 * cd.eta_plus);
        assert!((icd.eta_minus - cd.eta_minus).abs() < 1e-9 * cd.eta_minus);
        for i in 0..20 {
            let eta = cd.eta_plus * (0.213 + 0.1 * i as f64);
            let h = homogeneous_steady_states(c, n0, eta, p.kappa);
            let inh = sc.all_solutions(eta);
            assert_eq!(h.len(), inh.len(), "eta {eta}");
            for (a, b) in h.iter().zip(&inh) {
                assert!((a.x - b.x).abs() < 1e-9 * a.x, "{a:?} vs {b:?}");
                assert_eq!(a.branch, b.branch);
            }
        }
    }

    #[test]
    fn inhom_solution_residual_small() {
        let p = PhysicalParams::default();
        let g = (18.0 * p.kappa * p.gamma_h / 1000.0).sqrt();
        let e = crate::model::gaussian_ensemble(1000.0, crate::model::mhz(1.0), 51, 2.0, g).unwrap();
        let sc = SelfConsistency::new(&e, &p);
        let eta = 0.9 * sc.eta_plus_crit();
        let bp = inhom_steady_state(&e, &p, eta, 0.0).unwrap();
        assert_eq!(bp.branch, Branch::Lower);
        assert!(sc.residual(bp.x, eta) < 1e-10);
    }

    #[test]
    fn broadening_narrows_bistable_window() {
        let p = PhysicalParams::default();
        let n = 1000.0;
        let g = (18.0 * p.kappa * p.gamma_h / n).sqrt();
        let hom = SelfConsistency::new(&ClusterEnsemble::homogeneous(n, g), &p).critical_drives().unwrap();
        let e = crate::model::gaussian_ensemble(n, crate::model::mhz(1.0), 51, 2.0, g).unwrap();
        let br = SelfConsistency::new(&e, &p).critical_drives().unwrap();
        let w_hom = hom.eta_plus / hom.eta_minus;
        let w_br = br.eta_plus / br.eta_minus;
        assert!(w_br < w_hom, "{w_br} vs {w_hom}");
    }

    #[test]
    fn root_count_matches_scan_for_c10() {
        let n0 = 1.0;
        let cd = critical_drives(10.0, n0, 1.0).unwrap();
        for i in 0..1000 {
            let eta = cd.eta_minus * 0.8 + (cd.eta_plus * 1.2 - cd.eta_minus * 0.8) * (i as f64 + 0.5) / 1000.0;
            let r = homogeneous_steady_states(10.0, n0, eta, 1.0);
            assert_eq!(r.len(), count_roots_by_scan(10.0, n0, eta, 1.0), "eta {eta}");
        }
    }

    #[test]
    fn curve_for_uncoupled_is_parabola() {
        let p = PhysicalParams::default();
        let e = ClusterEnsemble::homogeneous(10.0, 0.0);
        let grid: Vec<f64> = (1..50).map(|i| i as f64 * 0.3).collect();
        let pts = semiclassical_curve(&e, &p, &grid).unwrap();
        assert_eq!(pts.len(), grid.len());
        for (pt, eta) in pts.iter().zip(&grid) {
            let x = eta * eta / (p.kappa * p.kappa);
            assert!((pt.x - x).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn curve_family_is_s_shaped_only_above_eight() {
        let p = PhysicalParams::default();
        for c in [4.0, 6.0, 8.0, 10.0, 12.0, 14.0] {
            let e = ClusterEnsemble::with_cooperativity(100.0, c, &p);
            let sc = SelfConsistency::new(&e, &p);
            let eta_ref = sc.eta_plus_crit();
            let grid: Vec<f64> = (1..400).map(|i| eta_ref * i as f64 / 200.0).collect();
            let pts = semiclassical_curve(&e, &p, &grid).unwrap();
            let multi = pts.len() > grid.len();
            assert_eq!(multi, c > 8.0, "C = {c}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn two_turning_points_iff_above_eight(c in 0.0f64..40.0) {
                let tp = homogeneous_turning_points(c);
                prop_assert_eq!(tp.is_some(), c > 8.0);
                prop_assert_eq!(c * (c - 8.0) > 0.0 || c <= 8.0, true);
                if let Some((a, b)) = tp {
                    prop_assert!(a < b || c - 8.0 < 1e-12);
                    for u in [a, b] {
                        prop_assert!((u * u + (2.0 - c) * u + 1.0 + c).abs() < 1e-9 * (1.0 + c * u));
                    }
                }
            }
        }

        proptest! {
            #[test]
            fn roots_satisfy_stationary_condition(c in 0.0f64..30.0, n0 in 0.01f64..100.0, r in 0.01f64..3.0) {
                let kappa = 2.0;
                let eta = r * eta_plus_crit(c.max(1e-3), n0, kappa);
                for p in homogeneous_steady_states(c, n0, eta, kappa) {
                    let lhs = p.x * (1.0 + c / (1.0 + p.x / n0)).powi(2);
                    let y = eta * eta / (kappa * kappa);
                    let tol = if p.tangency { 1e-7 } else { 1e-10 };
                    prop_assert!((lhs - y).abs() < tol * y, "x={} lhs={} y={}", p.x, lhs, y);
                }
            }

            #[test]
            fn lower_branch_monotone(c in 8.5f64..30.0) {
                let cd = critical_drives(c, 1.0, 1.0).unwrap();
                let mut last = 0.0;
                for i in 1..200 {
                    let eta = cd.eta_plus * i as f64 / 200.0;
                    let x = homogeneous_steady_states(c, 1.0, eta, 1.0)[0].x;
                    prop_assert!(x > last);
                    last = x;
                }
            }
        }
    }
}
