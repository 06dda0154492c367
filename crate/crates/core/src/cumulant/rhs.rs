//! Right-hand side of the moment hierarchy, one hand-written equation per
//! tracked family.

use super::layout::{Family, StateLayout, ValueKind};
use super::moments::{ClosedMoments, Mom, Moments, Partials, Triple};
use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, CumulantOrder, PhysicalParams};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Evaluates the time derivative of every tracked variable of `layout`
/// with moments supplied by `m`.
pub fn eval_with<M: Moments>(m: &M, layout: &StateLayout, p: &PhysicalParams, out: &mut [f64]) {
    for f in layout.families() {
        for (mu, nu) in layout.indices(f) {
            let d = derivative(m, p, f, mu, nu);
            let d = if f.kind() == ValueKind::Real { C64::new(d.re, 0.0) } else { d };
            layout.set(out, f, mu, nu, d);
        }
    }
}

/// Derivative of a single variable `(f, μ, ν)`.
pub fn derivative<M: Moments>(m: &M, p: &PhysicalParams, f: Family, mu: usize, nu: usize) -> C64 {
    use Mom::*;
    let cl = m.ensemble().clusters();
    let (kappa, gh, gp, dc, eta) = (p.kappa, p.gamma_h, p.gamma_p, p.delta_c, p.eta);
    let (dm, gm) = (cl[mu].delta, cl[mu].g);
    let (dn, gn) = (cl[nu].delta, cl[nu].g);
    let x = |q: Mom| m.get(q, mu, nu);
    let xr = |q: Mom| m.get(q, nu, mu);
    let xn = |q: Mom| m.get(q, nu, 0);
    let a = x(A);
    let im2 = |z: C64| z - z.conj();
    let c = |re: f64, im: f64| C64::new(re, im);
    match f {
        Family::A => -c(kappa, dc) * a - I * m.sum_all(Sm) + eta,
        Family::Sm => -c(gh + 2.0 * gp, dm) * x(Sm) + I * gm * x(SzA),
        Family::Sz => -2.0 * gh * (x(Sz) + 1.0) + 2.0 * I * gm * im2(x(SmAd)),
        Family::SzA => {
            -c(kappa + 2.0 * gh, dc) * x(SzA) - 2.0 * gh * a + eta * x(Sz) - I * m.sum_other(SzSm, mu, false)
                + I * gm * x(Sm)
                + 2.0 * I * gm * (x(SmAdA) - x(SmAdAd).conj())
        }
        Family::SzSm => {
            -c(3.0 * gh + 2.0 * gp, dn) * x(SzSm) - 2.0 * gh * xn(Sm)
                + I * gn * x(SzSzA)
                + 2.0 * I * gm * (x(SmSmAd) - x(SpSmA))
        }
        Family::SmAd => {
            -c(kappa + gh + 2.0 * gp, dm - dc) * x(SmAd) + eta * x(Sm) + I * m.sum_other(SpSm, mu, true)
                + I * gm / 2.0 * (x(Sz) + 1.0)
                + I * gm * x(SzAdA)
        }
        Family::SpSm => -c(2.0 * gh + 4.0 * gp, dn - dm) * x(SpSm) - I * gm * x(SzSmAd) + I * gn * xr(SzSmAd).conj(),
        Family::SmA => {
            -c(kappa + gh + 2.0 * gp, dm + dc) * x(SmA) + eta * x(Sm) - I * m.sum_other(SmSm, mu, false)
                + I * gm * x(SzAA)
        }
        Family::AdAd => -2.0 * c(kappa, -dc) * x(AdAd) + 2.0 * I * m.sum_all(SmA).conj() + 2.0 * eta * a.conj(),
        Family::AdA => -2.0 * kappa * x(AdA) - I * im2(m.sum_all(SmAd)) + eta * (a + a.conj()),
        Family::SzSz => {
            -2.0 * gh * (x(Sz) + xn(Sz) + 2.0 * x(SzSz))
                + 2.0 * I * gm * im2(xr(SzSmAd))
                + 2.0 * I * gn * im2(x(SzSmAd))
        }
        Family::SmSm => -c(2.0 * gh + 4.0 * gp, dm + dn) * x(SmSm) + I * gm * x(SzSmA) + I * gn * xr(SzSmA),
        Family::SzAdA => {
            -2.0 * (kappa + gh) * x(SzAdA) - 2.0 * gh * x(AdA) + eta * (x(SzA) + x(SzA).conj())
                - I * im2(m.sum_other(SzSmAd, mu, false))
                + I * gm * im2(x(SmAd))
                + 2.0 * I * gm * im2(x(SmAdAdA))
        }
        Family::SmAdA => {
            -c(2.0 * (kappa + gp) + gh, dm) * x(SmAdA) + eta * (x(SmAd) + x(SmA)) + I * gm * x(SzAdAA)
                + I * (m.sum_other(SpSmA, mu, true) - m.sum_other(SmSmAd, mu, false))
                + I * gm / 2.0 * (x(SzA) + a)
        }
        Family::SmAdAd => {
            -c(2.0 * (kappa + gp) + gh, dm - 2.0 * dc) * x(SmAdAd)
                + 2.0 * eta * x(SmAd)
                + 2.0 * I * m.sum_other(SpSmA, mu, false).conj()
                + I * gm * (x(SzA).conj() + a.conj())
                + I * gm * x(SzAdAA).conj()
        }
        Family::SzAA => {
            -2.0 * c(kappa + gh, dc) * x(SzAA) - 2.0 * gh * x(AdAd).conj() + 2.0 * eta * x(SzA)
                + 2.0 * I * gm * x(SmA)
                - 2.0 * I * m.sum_other(SzSmA, mu, false)
                + 2.0 * I * gm * (x(SmAdAA) - x(SpAAA))
        }
        Family::SmAA => {
            -c(2.0 * (kappa + gp) + gh, dm + 2.0 * dc) * x(SmAA) + 2.0 * eta * x(SmA)
                - 2.0 * I * m.sum_other(SmSmA, mu, false)
                + I * gm * x(SzAAA)
        }
        Family::AdAA => {
            -c(3.0 * kappa, dc) * x(AdAA) - 2.0 * I * m.sum_all(SmAdA)
                + I * m.sum_all(SmAdAd).conj()
                + 2.0 * eta * x(AdA)
                + eta * x(AdAd).conj()
        }
        Family::AAA => -3.0 * c(kappa, dc) * x(AAA) - 3.0 * I * m.sum_all(SmAA) + 3.0 * eta * x(AdAd).conj(),
        Family::SzSzA => {
            -c(kappa, dc) * x(SzSzA) - 2.0 * gh * (x(SzA) + xn(SzA) + 2.0 * x(SzSzA)) + eta * x(SzSz)
                + 2.0 * I * (gm * xr(SzSmAdA) + gn * x(SzSmAdA) - gm * xr(SzSpAA) - gn * x(SzSpAA))
                - I * m.sum_triple(Triple::ZzM, mu, nu)
                + I * gm * xr(SzSm)
                + I * gn * x(SzSm)
        }
        Family::SmSmAd => {
            -c(kappa + 2.0 * gh + 4.0 * gp, dm + dn - dc) * x(SmSmAd) + eta * x(SmSm)
                + I * m.sum_triple(Triple::PmMM, mu, nu)
                + I * gm / 2.0 * (xn(Sm) + x(SzSm))
                + I * gn / 2.0 * (x(Sm) + xr(SzSm))
                + I * gm * x(SzSmAdA)
                + I * gn * xr(SzSmAdA)
        }
        Family::SpSmA => {
            -c(kappa + 2.0 * gh + 4.0 * gp, dn - dm + dc) * x(SpSmA) + eta * x(SpSm)
                - I * m.sum_triple(Triple::PMMm, mu, nu)
                - I * gm / 2.0 * (xn(Sm) + x(SzSm))
                - I * gm * x(SzSmAdA)
                + I * gn * xr(SzSpAA)
        }
        Family::SzSmAd => {
            -c(kappa + 3.0 * gh + 2.0 * gp, dn - dc) * x(SzSmAd) - 2.0 * gh * xn(SmAd)
                + eta * x(SzSm)
                + I * m.sum_triple(Triple::PmZM, mu, nu)
                - I * gm * x(SpSm)
                + I * gn / 2.0 * (x(Sz) + x(SzSz))
                + I * gn * x(SzSzAdA)
                + 2.0 * I * gm * (x(SmSmAdAd) - x(SpSmAdA))
        }
        Family::SzSmA => {
            -c(kappa + 3.0 * gh + 2.0 * gp, dn + dc) * x(SzSmA) - 2.0 * gh * xn(SmA) + eta * x(SzSm)
                - I * m.sum_triple(Triple::ZMMm, mu, nu)
                + I * gm * x(SmSm)
                + I * gn * x(SzSzAA)
                + 2.0 * I * gm * (x(SmSmAdA) - x(SpSmAA))
        }
        Family::SmSmA => {
            -c(kappa + 2.0 * gh + 4.0 * gp, dm + dn + dc) * x(SmSmA) + eta * x(SmSm)
                - I * m.sum_triple(Triple::MMMm, mu, nu)
                + I * gm * x(SzSmAA)
                + I * gn * xr(SzSmAA)
        }
    }
}

/// The closed moment equations for one ensemble, closure order and set of
/// rates, with private scratch so distinct instances never share state.
#[derive(Debug, Clone)]
pub struct MomentEquations {
    layout: StateLayout,
    params: PhysicalParams,
    ensemble: ClusterEnsemble,
    partials: Partials,
}

impl MomentEquations {
    pub fn new(order: CumulantOrder, ensemble: ClusterEnsemble, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let layout = StateLayout::new(order, ensemble.len());
        Ok(Self { layout, params, ensemble, partials: Partials::default() })
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn ensemble(&self) -> &ClusterEnsemble {
        &self.ensemble
    }

    pub fn order(&self) -> CumulantOrder {
        self.layout.order()
    }

    pub fn dim(&self) -> usize {
        self.layout.total_real_count()
    }

    /// Writes `d state/dt` into `out`.
    pub fn rhs(&mut self, state: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.dim();
        if state.len() != n || out.len() != n {
            return Err(Error::Contract(format!(
                "state/derivative length {}/{} does not match layout size {n}",
                state.len(),
                out.len()
            )));
        }
        let m = ClosedMoments::new(&self.layout, &self.ensemble, state, &mut self.partials);
        eval_with(&m, &self.layout, &self.params, out);
        Ok(())
    }

    /// `d state/dt` as a new vector.
    pub fn rhs_vec(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.rhs(state, &mut out)?;
        Ok(out)
    }

    /// Fully factorized state with `⟨a⟩ = 0`, `⟨σ⁻⟩ = 0` and the given
    /// per-cluster `⟨σz⟩`.
    pub fn initial_state(&self, sz0: &[f64]) -> Result<Vec<f64>> {
        initial_state(&self.layout, sz0)
    }
}

/// Fully factorized initial state: every cumulant of order ≥ 2 vanishes,
/// so the only nonzero moments are `⟨σz_μ⟩ = sz0_μ` and `⟨σz_μ σz_ν⟩ = sz0_μ sz0_ν`.
pub fn initial_state(layout: &StateLayout, sz0: &[f64]) -> Result<Vec<f64>> {
    if sz0.len() != layout.clusters() {
        return Err(Error::DimensionMismatch { expected: layout.clusters(), got: sz0.len() });
    }
    if let Some(bad) = sz0.iter().find(|z| !(-1.0..=0.0).contains(*z)) {
        return Err(Error::InvalidInitialState(format!("sz0 = {bad} outside [-1, 0]")));
    }
    let mut s = vec![0.0; layout.total_real_count()];
    for (mu, &z) in sz0.iter().enumerate() {
        layout.set(&mut s, Family::Sz, mu, 0, C64::new(z, 0.0));
    }
    if layout.contains(Family::SzSz) {
        for (mu, nu) in layout.indices(Family::SzSz) {
            layout.set(&mut s, Family::SzSz, mu, nu, C64::new(sz0[mu] * sz0[nu], 0.0));
        }
    }
    Ok(s)
}
