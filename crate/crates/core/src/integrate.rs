//! Adaptive Dormand–Prince 5(4) integration of the moment equations,
//! stationarity detection and outcome classification.

use serde::{Deserialize, Serialize};

use crate::cumulant::{Family, MomentEquations, StateLayout};
use crate::error::{Error, Result};
use crate::C64;

/// Tolerances and horizons for one integration. Times are in µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Integration horizon; `None` picks `10³/κ · max(1, 1/|1 − η/η⁺|)`
    /// through [`IntegratorConfig::resolved_max_time`].
    pub max_time: Option<f64>,
    /// Stationarity threshold on `‖f(y)‖₂ / ‖y‖₂`.
    pub ss_rel_tol: f64,
    /// Trailing observation window.
    pub window: f64,
    pub phys_tol: f64,
    /// Step-size cap; `None` means `1/(10κ)`.
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_time: None, ss_rel_tol: 1e-8, window: 2.0, phys_tol: 1e-6, max_step: None }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad("rtol and atol must be positive");
        }
        if !(self.ss_rel_tol > 0.0 && self.window > 0.0 && self.phys_tol >= 0.0) {
            return bad("ss_rel_tol and window must be positive, phys_tol nonnegative");
        }
        if matches!(self.max_time, Some(t) if !(t > 0.0)) || matches!(self.max_step, Some(h) if !(h > 0.0)) {
            return bad("max_time and max_step must be positive");
        }
        Ok(())
    }

    /// Horizon for a run at drive ratio `eta_ratio = η/η⁺` (use 0 if unknown).
    pub fn resolved_max_time(&self, kappa: f64, eta_ratio: f64) -> f64 {
        self.max_time.unwrap_or_else(|| {
            let d = (1.0 - eta_ratio).abs();
            let stretch = if d > 0.0 { (1.0 / d).max(1.0) } else { 1e3 };
            1e3 / kappa * stretch
        })
    }

    pub fn resolved_max_step(&self, kappa: f64) -> f64 {
        self.max_step.unwrap_or(0.1 / kappa)
    }
}

/// Classification of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Stationary { t: f64, residual: f64 },
    LimitCycle { t: f64, peak_to_peak: f64, mean: f64 },
    Unphysical { t: f64, variable: String, value: f64 },
    Timeout { t: f64, residual: f64 },
}

impl Outcome {
    pub fn is_stationary(&self) -> bool {
        matches!(self, Outcome::Stationary { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Stationary { .. } => "stationary",
            Outcome::LimitCycle { .. } => "limit_cycle",
            Outcome::Unphysical { .. } => "unphysical",
            Outcome::Timeout { .. } => "timeout",
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Dormand–Prince 5(4) stepper with PI step control and a fourth-order
/// continuous extension over the last accepted step.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    t: f64,
    h: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    cont: [Vec<f64>; 5],
    t_prev: f64,
    err_prev: f64,
    started: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: &[f64], rtol: f64, atol: f64, max_step: f64) -> Self {
        let n = y0.len();
        let z = || vec![0.0; n];
        Self {
            rtol,
            atol,
            max_step,
            t: t0,
            h: 0.0,
            y: y0.to_vec(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
            cont: [z(), z(), z(), z(), z()],
            t_prev: t0,
            err_prev: 1e-4,
            started: false,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `f(t, y)` at the current point (valid after the first step).
    pub fn derivative(&self) -> &[f64] {
        &self.k[0]
    }

    pub fn last_step(&self) -> (f64, f64) {
        (self.t_prev, self.t)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(&mut self, f: &mut F) -> f64 {
        let n = self.y.len();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            d0 += (self.y[i] / sk).powi(2);
            d1 += (self.k[0][i] / sk).powi(2);
        }
        let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.max_step);
        for i in 0..n {
            self.tmp[i] = self.y[i] + h0 * self.k[0][i];
        }
        f(self.t + h0, &self.tmp, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..n {
            let sk = self.scale(self.y[i], self.y[i]);
            d2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(self.max_step)
    }

    /// Advances by one accepted step, not beyond `t_end`.
    pub fn step<F: FnMut(f64, &[f64], &mut [f64])>(&mut self, f: &mut F, t_end: f64) -> Result<()> {
        let n = self.y.len();
        if !self.started {
            f(self.t, &self.y, &mut self.k[0]);
            self.h = self.initial_step(f);
            self.started = true;
        }
        loop {
            let mut h = self.h.min(self.max_step);
            let last = self.t + h >= t_end;
            if last {
                h = t_end - self.t;
            }
            if h.abs() < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t, h });
            }
            let t = self.t;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let (y, tmp, yn) = (&self.y, &mut self.tmp, &mut self.y_new);
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, tmp, k5);
            for i in 0..n {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, tmp, k6);
            for i in 0..n {
                yn[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, yn, k7);
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = self.atol + self.rtol * y[i].abs().max(yn[i].abs());
                err += (e / sk).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                self.h = h * 0.1;
                self.rejected += 1;
                continue;
            }
            if err <= 1.0 {
                // PI controller (Hairer's beta = 0.04)
                let fac = (err.powf(0.2 - 0.04 * 0.75) / self.err_prev.powf(0.04) / 0.9).clamp(0.1, 5.0);
                let fac = 1.0 / fac;
                for i in 0..n {
                    let ydiff = yn[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    self.cont[0][i] = y[i];
                    self.cont[1][i] = ydiff;
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = ydiff - h * k7[i] - bspl;
                    self.cont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                std::mem::swap(k1, k7);
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.t_prev = t;
                self.t = if last { t_end } else { t + h };
                self.err_prev = err.max(1e-4);
                self.h = h * fac;
                self.accepted += 1;
                return Ok(());
            }
            let fac = (err.powf(0.2) / 0.9).min(10.0);
            self.h = h / fac;
            self.rejected += 1;
        }
    }

    /// Dense output at `t` within the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        let th = if h > 0.0 { (t - self.t_prev) / h } else { 1.0 };
        let th1 = 1.0 - th;
        let c = &self.cont;
        for i in 0..out.len() {
            out[i] = c[0][i] + th * (c[1][i] + th1 * (c[2][i] + th * (c[3][i] + th1 * c[4][i])));
        }
    }
}

/// One trajectory sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub a: C64,
    pub n_phot: f64,
    pub sz: Vec<f64>,
}

impl Sample {
    pub fn from_state(layout: &StateLayout, t: f64, y: &[f64]) -> Self {
        let a = layout.get(y, Family::A, 0, 0);
        let n_phot = if layout.contains(Family::AdA) { layout.get(y, Family::AdA, 0, 0).re } else { a.norm_sqr() };
        let sz = (0..layout.clusters()).map(|mu| layout.get(y, Family::Sz, mu, 0).re).collect();
        Self { t, a, n_phot, sz }
    }

    pub fn abs_a_sq(&self) -> f64 {
        self.a.norm_sqr()
    }
}

/// Sampled trajectory; `unphysical` is set when the run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub unphysical: Option<Outcome>,
}

impl Trajectory {
    /// CSV with columns `t,re_a,im_a,abs_a_sq,n_phot,sz_0,…`.
    pub fn to_csv(&self) -> String {
        let l = self.samples.first().map_or(0, |s| s.sz.len());
        let mut s = String::from("t,re_a,im_a,abs_a_sq,n_phot");
        for mu in 0..l {
            s.push_str(&format!(",sz_{mu}"));
        }
        s.push('\n');
        for p in &self.samples {
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}", p.t, p.a.re, p.a.im, p.abs_a_sq(), p.n_phot));
            for z in &p.sz {
                s.push_str(&format!(",{z:e}"));
            }
            s.push('\n');
        }
        s
    }
}

fn check_physical(layout: &StateLayout, y: &[f64], t: f64, phys_tol: f64) -> Option<Outcome> {
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Some(Outcome::Unphysical { t, variable: format!("state[{i}]"), value: y[i] });
    }
    for mu in 0..layout.clusters() {
        let z = layout.get(y, Family::Sz, mu, 0).re;
        if z.abs() > 1.0 + phys_tol {
            return Some(Outcome::Unphysical { t, variable: format!("sz_{mu}"), value: z });
        }
    }
    None
}

fn rhs_closure(eqs: &mut MomentEquations) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    move |_, y, dy| eqs.rhs(y, dy).expect("state length fixed by the layout")
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integrates from `state0` at `t = 0` and samples at `sample_times`.
pub fn evolve(
    eqs: &mut MomentEquations,
    state0: &[f64],
    config: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    if state0.len() != eqs.dim() {
        return Err(Error::DimensionMismatch { expected: eqs.dim(), got: state0.len() });
    }
    if sample_times.windows(2).any(|w| w[1] < w[0]) || sample_times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::Contract("sample times must be ascending and nonnegative".into()));
    }
    let layout = eqs.layout().clone();
    let kappa = eqs.params().kappa;
    let mut st = Dopri5::new(0.0, state0, config.rtol, config.atol, config.resolved_max_step(kappa));
    let mut f = rhs_closure(eqs);
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut buf = vec![0.0; state0.len()];
    let t_end = sample_times.last().copied().unwrap_or(0.0);
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] <= 0.0 {
        samples.push(Sample::from_state(&layout, sample_times[next], state0));
        next += 1;
    }
    while next < sample_times.len() {
        st.step(&mut f, t_end)?;
        while next < sample_times.len() && sample_times[next] <= st.t() {
            st.interpolate(sample_times[next], &mut buf);
            samples.push(Sample::from_state(&layout, sample_times[next], &buf));
            next += 1;
        }
        if let Some(o) = check_physical(&layout, st.y(), st.t(), config.phys_tol) {
            return Ok(Trajectory { samples, unphysical: Some(o) });
        }
    }
    Ok(Trajectory { samples, unphysical: None })
}

/// Peak-to-peak and extremum statistics of `|⟨a⟩|²` over one window.
#[derive(Debug, Clone, Copy)]
struct WindowStats {
    min: f64,
    max: f64,
    sum: f64,
    count: usize,
    turns: usize,
    last: f64,
    rising: Option<bool>,
}

impl WindowStats {
    fn new() -> Self {
        Self { min: f64::INFINITY, max: f64::NEG_INFINITY, sum: 0.0, count: 0, turns: 0, last: f64::NAN, rising: None }
    }

    fn push(&mut self, v: f64) {
        if self.count > 0 && v != self.last {
            let up = v > self.last;
            if self.rising.is_some_and(|r| r != up) {
                self.turns += 1;
            }
            self.rising = Some(up);
        }
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum += v;
        self.count += 1;
        self.last = v;
    }

    fn ptp(&self) -> f64 {
        self.max - self.min
    }

    fn mean(&self) -> f64 {
        self.sum / self.count.max(1) as f64
    }
}

/// Integrates until the state is stationary, oscillates persistently,
/// becomes unphysical, or reaches the horizon for drive ratio `eta_ratio`
/// (pass 0 when not near a critical point).
pub fn find_stationary(
    eqs: &mut MomentEquations,
    state0: &[f64],
    config: &IntegratorConfig,
    eta_ratio: f64,
) -> Result<(Vec<f64>, Outcome)> {
    config.validate()?;
    if state0.len() != eqs.dim() {
        return Err(Error::DimensionMismatch { expected: eqs.dim(), got: state0.len() });
    }
    let layout = eqs.layout().clone();
    let kappa = eqs.params().kappa;
    let t_max = config.resolved_max_time(kappa, eta_ratio);
    let mut st = Dopri5::new(0.0, state0, config.rtol, config.atol, config.resolved_max_step(kappa));
    let mut f = rhs_closure(eqs);
    let mut quiet_since: Option<f64> = None;
    let mut window_start = 0.0;
    let mut cur = WindowStats::new();
    let mut history: Vec<WindowStats> = Vec::new();
    let a_of = |y: &[f64]| layout.get(y, Family::A, 0, 0).norm_sqr();
    loop {
        st.step(&mut f, t_max)?;
        let t = st.t();
        let y = st.y();
        if let Some(o) = check_physical(&layout, y, t, config.phys_tol) {
            return Ok((y.to_vec(), o));
        }
        let residual = norm2(st.derivative()) / norm2(y).max(f64::MIN_POSITIVE);
        if residual <= config.ss_rel_tol {
            let since = *quiet_since.get_or_insert(t);
            if t - since >= config.window {
                return Ok((y.to_vec(), Outcome::Stationary { t, residual }));
            }
        } else {
            quiet_since = None;
        }
        cur.push(a_of(y));
        if t - window_start >= config.window {
            history.push(cur);
            if let Some(o) = limit_cycle(&history, config.ss_rel_tol, t) {
                return Ok((y.to_vec(), o));
            }
            cur = WindowStats::new();
            window_start = t;
        }
        if t >= t_max {
            return Ok((y.to_vec(), Outcome::Timeout { t, residual }));
        }
    }
}

/// Bounded, non-decaying oscillation over the last three windows.
fn limit_cycle(history: &[WindowStats], ss_rel_tol: f64, t: f64) -> Option<Outcome> {
    let n = history.len();
    if n < 3 {
        return None;
    }
    let w = &history[n - 3..];
    let oscillating = w.iter().all(|s| s.turns >= 2 && s.ptp() > 10.0 * ss_rel_tol * s.mean().abs().max(1e-300));
    let steady = w.windows(2).all(|p| {
        let r = p[1].ptp() / p[0].ptp();
        (0.9..=1.1).contains(&r)
    });
    (oscillating && steady).then(|| Outcome::LimitCycle { t, peak_to_peak: w[2].ptp(), mean: w[2].mean() })
}

/// Result of a basin scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinResult {
    pub sz0: f64,
    pub state: Vec<f64>,
    pub outcome: Outcome,
    pub attempts: Vec<(f64, Outcome)>,
}

/// Runs [`find_stationary`] from factorized states with uniform `⟨σz⟩ = sz0`
/// for each grid value in order and returns the first stationary result.
pub fn basin_scan(
    eqs: &mut MomentEquations,
    sz0_grid: &[f64],
    config: &IntegratorConfig,
    eta_ratio: f64,
) -> Result<BasinResult> {
    if sz0_grid.is_empty() {
        return Err(Error::Contract("basin scan needs a nonempty sz0 grid".into()));
    }
    if let Some(bad) = sz0_grid.iter().find(|z| !(-1.0..=-0.5).contains(*z)) {
        return Err(Error::InvalidInitialState(format!("basin scan value {bad} outside [-1, -0.5]")));
    }
    let l = eqs.layout().clusters();
    let mut attempts = Vec::new();
    for &z in sz0_grid {
        let y0 = eqs.initial_state(&vec![z; l])?;
        let (state, outcome) = find_stationary(eqs, &y0, config, eta_ratio)?;
        attempts.push((z, outcome.clone()));
        if outcome.is_stationary() {
            return Ok(BasinResult { sz0: z, state, outcome, attempts });
        }
    }
    Err(Error::BasinExhausted(attempts))
}

/// Default basin grid: `−1, −0.95, …, −0.5`.
pub fn default_basin_grid() -> Vec<f64> {
    (0..=10).map(|i| -1.0 + 0.05 * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn windows(signal: impl Fn(f64) -> f64, n_windows: usize) -> Vec<WindowStats> {
        (0..n_windows)
            .map(|w| {
                let mut s = WindowStats::new();
                for i in 0..400 {
                    s.push(signal(w as f64 * 2.0 + i as f64 * 0.005));
                }
                s
            })
            .collect()
    }

    #[test]
    fn steady_oscillation_is_a_limit_cycle() {
        let h = windows(|t| 5.0 + 0.3 * (7.0 * t).sin(), 3);
        match limit_cycle(&h, 1e-8, 6.0) {
            Some(Outcome::LimitCycle { peak_to_peak, mean, .. }) => {
                assert!((peak_to_peak - 0.6).abs() < 1e-3);
                assert!((mean - 5.0).abs() < 0.05);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn decaying_or_monotone_signals_are_not_limit_cycles() {
        let decaying = windows(|t| 5.0 + (-t).exp() * (7.0 * t).sin(), 3);
        assert!(limit_cycle(&decaying, 1e-8, 6.0).is_none());
        let monotone = windows(|t| 5.0 - (-t).exp(), 3);
        assert!(limit_cycle(&monotone, 1e-8, 6.0).is_none());
        let short = windows(|t| 5.0 + 0.3 * (7.0 * t).sin(), 2);
        assert!(limit_cycle(&short, 1e-8, 4.0).is_none());
    }

    #[test]
    fn physicality_check_flags_large_inversion() {
        let layout = StateLayout::new(crate::model::CumulantOrder::Ce1, 2);
        let mut y = vec![0.0; layout.total_real_count()];
        layout.set(&mut y, Family::Sz, 1, 0, C64::new(-1.01, 0.0));
        match check_physical(&layout, &y, 1.0, 1e-6) {
            Some(Outcome::Unphysical { variable, value, .. }) => {
                assert_eq!(variable, "sz_1");
                assert_eq!(value, -1.01);
            }
            o => panic!("{o:?}"),
        }
        y[0] = f64::NAN;
        assert!(matches!(check_physical(&layout, &y, 1.0, 1e-6), Some(Outcome::Unphysical { .. })));
    }

    #[test]
    fn horizon_stretches_near_critical_drive() {
        let c = IntegratorConfig::default();
        assert_eq!(c.resolved_max_time(2.0, 0.0), 500.0);
        assert!((c.resolved_max_time(2.0, 0.99) - 5e4).abs() < 1e-6);
        assert_eq!(IntegratorConfig { max_time: Some(3.0), ..c }.resolved_max_time(2.0, 0.99), 3.0);
        assert!(IntegratorConfig { rtol: 0.0, ..c }.validate().is_err());
    }
}
