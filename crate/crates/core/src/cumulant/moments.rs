//! Access to every expectation value that appears on a right-hand side.
//!
//! Pair moments `(μ, ν)` refer to two distinct spins `k ∈ μ`, `j ∈ ν`, the
//! first operator acting on `k`. Sums run over spins with cluster
//! multiplicities as weights.

use super::closure::{cumulant_close3, cumulant_close4};
use super::layout::{Family, StateLayout};
use super::pauli::SpinOp;
use crate::model::ClusterEnsemble;
use crate::C64;

/// Every moment the hierarchy refers to: the 25 tracked families plus the
/// fourth-order moments that only appear on right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mom {
    A,
    Sm,
    Sz,
    SzA,
    SzSm,
    SmAd,
    SpSm,
    SmA,
    AdAd,
    AdA,
    SzSz,
    SmSm,
    SzAdA,
    SmAdA,
    SmAdAd,
    SzAA,
    SmAA,
    AdAA,
    AAA,
    SzSzA,
    SmSmAd,
    SpSmA,
    SzSmAd,
    SzSmA,
    SmSmA,
    SmAdAdA,
    SzAdAA,
    SmAdAA,
    SpAAA,
    SzAAA,
    SzSmAdA,
    SzSpAA,
    SzSzAdA,
    SmSmAdAd,
    SpSmAdA,
    SzSzAA,
    SmSmAdA,
    SpSmAA,
    SzSmAA,
}

impl Mom {
    pub fn family(self) -> Option<Family> {
        use Family as F;
        Some(match self {
            Mom::A => F::A,
            Mom::Sm => F::Sm,
            Mom::Sz => F::Sz,
            Mom::SzA => F::SzA,
            Mom::SzSm => F::SzSm,
            Mom::SmAd => F::SmAd,
            Mom::SpSm => F::SpSm,
            Mom::SmA => F::SmA,
            Mom::AdAd => F::AdAd,
            Mom::AdA => F::AdA,
            Mom::SzSz => F::SzSz,
            Mom::SmSm => F::SmSm,
            Mom::SzAdA => F::SzAdA,
            Mom::SmAdA => F::SmAdA,
            Mom::SmAdAd => F::SmAdAd,
            Mom::SzAA => F::SzAA,
            Mom::SmAA => F::SmAA,
            Mom::AdAA => F::AdAA,
            Mom::AAA => F::AAA,
            Mom::SzSzA => F::SzSzA,
            Mom::SmSmAd => F::SmSmAd,
            Mom::SpSmA => F::SpSmA,
            Mom::SzSmAd => F::SzSmAd,
            Mom::SzSmA => F::SzSmA,
            Mom::SmSmA => F::SmSmA,
            _ => return None,
        })
    }

    /// Spin operators (in index order), number of `a†` and number of `a`.
    pub fn operators(self) -> (&'static [SpinOp], usize, usize) {
        use SpinOp::{Minus as M, Plus as P, Z};
        match self {
            Mom::A => (&[], 0, 1),
            Mom::Sm => (&[M], 0, 0),
            Mom::Sz => (&[Z], 0, 0),
            Mom::SzA => (&[Z], 0, 1),
            Mom::SzSm => (&[Z, M], 0, 0),
            Mom::SmAd => (&[M], 1, 0),
            Mom::SpSm => (&[P, M], 0, 0),
            Mom::SmA => (&[M], 0, 1),
            Mom::AdAd => (&[], 2, 0),
            Mom::AdA => (&[], 1, 1),
            Mom::SzSz => (&[Z, Z], 0, 0),
            Mom::SmSm => (&[M, M], 0, 0),
            Mom::SzAdA => (&[Z], 1, 1),
            Mom::SmAdA => (&[M], 1, 1),
            Mom::SmAdAd => (&[M], 2, 0),
            Mom::SzAA => (&[Z], 0, 2),
            Mom::SmAA => (&[M], 0, 2),
            Mom::AdAA => (&[], 1, 2),
            Mom::AAA => (&[], 0, 3),
            Mom::SzSzA => (&[Z, Z], 0, 1),
            Mom::SmSmAd => (&[M, M], 1, 0),
            Mom::SpSmA => (&[P, M], 0, 1),
            Mom::SzSmAd => (&[Z, M], 1, 0),
            Mom::SzSmA => (&[Z, M], 0, 1),
            Mom::SmSmA => (&[M, M], 0, 1),
            Mom::SmAdAdA => (&[M], 2, 1),
            Mom::SzAdAA => (&[Z], 1, 2),
            Mom::SmAdAA => (&[M], 1, 2),
            Mom::SpAAA => (&[P], 0, 3),
            Mom::SzAAA => (&[Z], 0, 3),
            Mom::SzSmAdA => (&[Z, M], 1, 1),
            Mom::SzSpAA => (&[Z, P], 0, 2),
            Mom::SzSzAdA => (&[Z, Z], 1, 1),
            Mom::SmSmAdAd => (&[M, M], 2, 0),
            Mom::SpSmAdA => (&[P, M], 1, 1),
            Mom::SzSzAA => (&[Z, Z], 0, 2),
            Mom::SmSmAdA => (&[M, M], 1, 1),
            Mom::SpSmAA => (&[P, M], 0, 2),
            Mom::SzSmAA => (&[Z, M], 0, 2),
        }
    }

    pub fn order(self) -> usize {
        let (s, n, m) = self.operators();
        s.len() + n + m
    }
}

/// Spin-only triple sums `Σ_{m≠k,j} g_m ⟨…⟩` for `k ∈ μ`, `j ∈ ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triple {
    /// `⟨σz_k σz_j σ⁻_m⟩`
    ZzM,
    /// `⟨σ⁺_m σ⁻_k σ⁻_j⟩`
    PmMM,
    /// `⟨σ⁺_k σ⁻_j σ⁻_m⟩`
    PMMm,
    /// `⟨σ⁺_m σz_k σ⁻_j⟩`
    PmZM,
    /// `⟨σz_k σ⁻_j σ⁻_m⟩`
    ZMMm,
    /// `⟨σ⁻_k σ⁻_j σ⁻_m⟩`
    MMMm,
}

/// Which spin an operator of a triple acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    K,
    J,
    M,
}

impl Triple {
    pub const ALL: [Triple; 6] = [Triple::ZzM, Triple::PmMM, Triple::PMMm, Triple::PmZM, Triple::ZMMm, Triple::MMMm];

    pub fn operators(self) -> [(Role, SpinOp); 3] {
        use Role::*;
        use SpinOp::{Minus, Plus, Z};
        match self {
            Triple::ZzM => [(K, Z), (J, Z), (M, Minus)],
            Triple::PmMM => [(M, Plus), (K, Minus), (J, Minus)],
            Triple::PMMm => [(K, Plus), (J, Minus), (M, Minus)],
            Triple::PmZM => [(M, Plus), (K, Z), (J, Minus)],
            Triple::ZMMm => [(K, Z), (J, Minus), (M, Minus)],
            Triple::MMMm => [(K, Minus), (J, Minus), (M, Minus)],
        }
    }
}

/// Source of moments for the right-hand side.
pub trait Moments {
    fn ensemble(&self) -> &ClusterEnsemble;

    /// `⟨X⟩` for cluster indices `(μ, ν)`; unused indices are ignored.
    fn get(&self, m: Mom, mu: usize, nu: usize) -> C64;

    /// `Σ_k g_k ⟨X_k⟩` over all spins, for a single-spin moment.
    fn sum_all(&self, m: Mom) -> C64 {
        self.ensemble()
            .clusters()
            .iter()
            .enumerate()
            .map(|(r, c)| c.weight * c.g * self.get(m, r, 0))
            .sum()
    }

    /// `Σ_{j≠k} g_j ⟨X(k, j)⟩` for `k ∈ μ`, or `⟨X(j, k)⟩` when `reversed`.
    fn sum_other(&self, m: Mom, mu: usize, reversed: bool) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (r, c) in self.ensemble().clusters().iter().enumerate() {
            let w = c.weight - if r == mu { 1.0 } else { 0.0 };
            let x = if reversed { self.get(m, r, mu) } else { self.get(m, mu, r) };
            s += w * c.g * x;
        }
        s
    }

    fn sum_triple(&self, t: Triple, mu: usize, nu: usize) -> C64;
}

/// Collective partial sums shared by all spin-only triple closures.
#[derive(Debug, Clone, Default)]
pub struct Partials {
    s1: C64,
    zm: Vec<C64>,
    pm: Vec<C64>,
    pm_rev: Vec<C64>,
    mm: Vec<C64>,
}

/// Moments read from a state vector; anything not tracked is closed with
/// the cumulant rule of its order.
pub struct ClosedMoments<'a> {
    layout: &'a StateLayout,
    ensemble: &'a ClusterEnsemble,
    state: &'a [f64],
    partials: &'a Partials,
}

impl<'a> ClosedMoments<'a> {
    /// Fills `partials` (only needed when third-order spin triples occur).
    pub fn new(
        layout: &'a StateLayout,
        ensemble: &'a ClusterEnsemble,
        state: &'a [f64],
        partials: &'a mut Partials,
    ) -> Self {
        if layout.contains(Family::SzSzA) {
            let l = layout.clusters();
            partials.zm.resize(l, C64::default());
            partials.pm.resize(l, C64::default());
            partials.pm_rev.resize(l, C64::default());
            partials.mm.resize(l, C64::default());
            let cl = ensemble.clusters();
            let mut s1 = C64::default();
            for (r, c) in cl.iter().enumerate() {
                s1 += c.weight * c.g * layout.get(state, Family::Sm, r, 0);
            }
            partials.s1 = s1;
            for mu in 0..l {
                let (mut zm, mut pm, mut pm_rev, mut mm) = (C64::default(), C64::default(), C64::default(), C64::default());
                for (r, c) in cl.iter().enumerate() {
                    let wg = c.weight * c.g;
                    zm += wg * layout.get(state, Family::SzSm, mu, r);
                    pm += wg * layout.get(state, Family::SpSm, mu, r);
                    pm_rev += wg * layout.get(state, Family::SpSm, r, mu);
                    mm += wg * layout.get(state, Family::SmSm, mu, r);
                }
                partials.zm[mu] = zm;
                partials.pm[mu] = pm;
                partials.pm_rev[mu] = pm_rev;
                partials.mm[mu] = mm;
            }
        }
        Self { layout, ensemble, state, partials }
    }

    #[inline]
    fn g(&self, mu: usize) -> f64 {
        self.ensemble.clusters()[mu].g
    }

    fn close(&self, m: Mom, mu: usize, nu: usize) -> C64 {
        use Mom::*;
        let x = |f: Mom| self.get(f, mu, nu);
        let xn = |f: Mom| self.get(f, nu, 0);
        let a = x(A);
        let ac = a.conj();
        let aa = || x(AdAd).conj();
        let c3 = cumulant_close3;
        let c4 = cumulant_close4;
        match m {
            // second order: products of means
            SzA => x(Sz) * a,
            SmAd => x(Sm) * ac,
            SmA => x(Sm) * a,
            AdAd => ac * ac,
            AdA => ac * a,
            SzSm => x(Sz) * xn(Sm),
            SpSm => x(Sm).conj() * xn(Sm),
            SzSz => x(Sz) * xn(Sz),
            SmSm => x(Sm) * xn(Sm),
            // third order
            SzAdA => c3([x(Sz), ac, a], [x(SzA).conj(), x(SzA), x(AdA)]),
            SmAdA => c3([x(Sm), ac, a], [x(SmAd), x(SmA), x(AdA)]),
            SmAdAd => c3([x(Sm), ac, ac], [x(SmAd), x(SmAd), x(AdAd)]),
            SzAA => c3([x(Sz), a, a], [x(SzA), x(SzA), aa()]),
            SmAA => c3([x(Sm), a, a], [x(SmA), x(SmA), aa()]),
            AdAA => c3([ac, a, a], [x(AdA), x(AdA), aa()]),
            AAA => {
                let p = aa();
                c3([a, a, a], [p, p, p])
            }
            SzSzA => c3([x(Sz), xn(Sz), a], [x(SzSz), x(SzA), xn(SzA)]),
            SmSmAd => c3([x(Sm), xn(Sm), ac], [x(SmSm), x(SmAd), xn(SmAd)]),
            SpSmA => c3([x(Sm).conj(), xn(Sm), a], [x(SpSm), x(SmAd).conj(), xn(SmA)]),
            SzSmAd => c3([x(Sz), xn(Sm), ac], [x(SzSm), x(SzA).conj(), xn(SmAd)]),
            SzSmA => c3([x(Sz), xn(Sm), a], [x(SzSm), x(SzA), xn(SmA)]),
            SmSmA => c3([x(Sm), xn(Sm), a], [x(SmSm), x(SmA), xn(SmA)]),
            // fourth order; pairs [AB, AC, AD, BC, BD, CD], triples [BCD, ACD, ABD, ABC]
            SmAdAdA => {
                let (smad, smada, ada) = (x(SmAd), x(SmAdA), x(AdA));
                c4(
                    [x(Sm), ac, ac, a],
                    [smad, smad, x(SmA), x(AdAd), ada, ada],
                    [x(AdAA).conj(), smada, smada, x(SmAdAd)],
                )
            }
            SzAdAA => {
                let (sza, ada, szada) = (x(SzA), x(AdA), x(SzAdA));
                c4([x(Sz), ac, a, a], [sza.conj(), sza, sza, ada, ada, aa()], [x(AdAA), x(SzAA), szada, szada])
            }
            SmAdAA => {
                let (sma, ada, smada) = (x(SmA), x(AdA), x(SmAdA));
                c4([x(Sm), ac, a, a], [x(SmAd), sma, sma, ada, ada, aa()], [x(AdAA), x(SmAA), smada, smada])
            }
            SpAAA => {
                let (spa, p, spaa) = (x(SmAd).conj(), aa(), x(SmAdAd).conj());
                c4([x(Sm).conj(), a, a, a], [spa, spa, spa, p, p, p], [x(AAA), spaa, spaa, spaa])
            }
            SzAAA => {
                let (sza, p, szaa) = (x(SzA), aa(), x(SzAA));
                c4([x(Sz), a, a, a], [sza, sza, sza, p, p, p], [x(AAA), szaa, szaa, szaa])
            }
            SzSmAdA => {
                let sza = x(SzA);
                c4(
                    [x(Sz), xn(Sm), ac, a],
                    [x(SzSm), sza.conj(), sza, xn(SmAd), xn(SmA), x(AdA)],
                    [xn(SmAdA), x(SzAdA), x(SzSmA), x(SzSmAd)],
                )
            }
            SzSpAA => {
                let (sza, spa, zpa) = (x(SzA), xn(SmAd).conj(), x(SzSmAd).conj());
                c4(
                    [x(Sz), xn(Sm).conj(), a, a],
                    [x(SzSm).conj(), sza, sza, spa, spa, aa()],
                    [xn(SmAdAd).conj(), x(SzAA), zpa, zpa],
                )
            }
            SzSzAdA => {
                let (sza, szan, szsza) = (x(SzA), xn(SzA), x(SzSzA));
                c4(
                    [x(Sz), xn(Sz), ac, a],
                    [x(SzSz), sza.conj(), sza, szan.conj(), szan, x(AdA)],
                    [xn(SzAdA), x(SzAdA), szsza, szsza.conj()],
                )
            }
            SmSmAdAd => {
                let (smad, smadn, smsmad) = (x(SmAd), xn(SmAd), x(SmSmAd));
                c4(
                    [x(Sm), xn(Sm), ac, ac],
                    [x(SmSm), smad, smad, smadn, smadn, x(AdAd)],
                    [xn(SmAdAd), x(SmAdAd), smsmad, smsmad],
                )
            }
            SpSmAdA => c4(
                [x(Sm).conj(), xn(Sm), ac, a],
                [x(SpSm), x(SmA).conj(), x(SmAd).conj(), xn(SmAd), xn(SmA), x(AdA)],
                [xn(SmAdA), x(SmAdA).conj(), x(SpSmA), self.get(SpSmA, nu, mu).conj()],
            ),
            SzSzAA => {
                let (sza, szan, szsza) = (x(SzA), xn(SzA), x(SzSzA));
                c4(
                    [x(Sz), xn(Sz), a, a],
                    [x(SzSz), sza, sza, szan, szan, aa()],
                    [xn(SzAA), x(SzAA), szsza, szsza],
                )
            }
            SmSmAdA => c4(
                [x(Sm), xn(Sm), ac, a],
                [x(SmSm), x(SmAd), x(SmA), xn(SmAd), xn(SmA), x(AdA)],
                [xn(SmAdA), x(SmAdA), x(SmSmA), x(SmSmAd)],
            ),
            SpSmAA => {
                let (spa, sman, spsma) = (x(SmAd).conj(), xn(SmA), x(SpSmA));
                c4(
                    [x(Sm).conj(), xn(Sm), a, a],
                    [x(SpSm), spa, spa, sman, sman, aa()],
                    [xn(SmAA), x(SmAdAd).conj(), spsma, spsma],
                )
            }
            SzSmAA => {
                let (sza, sman, szsma) = (x(SzA), xn(SmA), x(SzSmA));
                c4(
                    [x(Sz), xn(Sm), a, a],
                    [x(SzSm), sza, sza, sman, sman, aa()],
                    [xn(SmAA), x(SzAA), szsma, szsma],
                )
            }
            A | Sm | Sz => unreachable!("first-order moments are always tracked"),
        }
    }
}

impl Moments for ClosedMoments<'_> {
    fn ensemble(&self) -> &ClusterEnsemble {
        self.ensemble
    }

    #[inline]
    fn get(&self, m: Mom, mu: usize, nu: usize) -> C64 {
        match m.family() {
            Some(f) if self.layout.contains(f) => self.layout.get(self.state, f, mu, nu),
            _ => self.close(m, mu, nu),
        }
    }

    /// Third-order closure of the spin triples, summed through the
    /// collective partial sums: `Σ_{m≠k,j} g_m f(m) = Σ_ρ M_ρ g_ρ f(ρ) − g_μ f(μ) − g_ν f(ν)`.
    fn sum_triple(&self, t: Triple, mu: usize, nu: usize) -> C64 {
        let p = self.partials;
        let (gm, gn) = (self.g(mu), self.g(nu));
        let l = self.layout;
        let s = self.state;
        let sm = |r| l.get(s, Family::Sm, r, 0);
        let sz = |r| l.get(s, Family::Sz, r, 0);
        let szsm = |r, q| l.get(s, Family::SzSm, r, q);
        let spsm = |r, q| l.get(s, Family::SpSm, r, q);
        let smsm = |r, q| l.get(s, Family::SmSm, r, q);
        let (sm_mu, sm_nu) = (sm(mu), sm(nu));
        // Σ g_m ⟨σ⁻_m⟩ over m ≠ k, j
        let s_sm = p.s1 - gm * sm_mu - gn * sm_nu;
        match t {
            Triple::ZzM => {
                let (z_mu, z_nu) = (sz(mu), sz(nu));
                let s_zm_mu = p.zm[mu] - gm * szsm(mu, mu) - gn * szsm(mu, nu);
                let s_zm_nu = p.zm[nu] - gm * szsm(nu, mu) - gn * szsm(nu, nu);
                l.get(s, Family::SzSz, mu, nu) * s_sm + z_nu * s_zm_mu + z_mu * s_zm_nu - 2.0 * z_mu * z_nu * s_sm
            }
            Triple::PmMM => {
                let s_pm_mu = p.pm_rev[mu] - gm * spsm(mu, mu) - gn * spsm(nu, mu);
                let s_pm_nu = p.pm_rev[nu] - gm * spsm(mu, nu) - gn * spsm(nu, nu);
                s_pm_mu * sm_nu + s_pm_nu * sm_mu + smsm(mu, nu) * s_sm.conj() - 2.0 * s_sm.conj() * sm_mu * sm_nu
            }
            Triple::PMMm => {
                let s_pm = p.pm[mu] - gm * spsm(mu, mu) - gn * spsm(mu, nu);
                let s_mm = p.mm[nu] - gm * smsm(nu, mu) - gn * smsm(nu, nu);
                let sp_mu = sm_mu.conj();
                spsm(mu, nu) * s_sm + s_pm * sm_nu + s_mm * sp_mu - 2.0 * sp_mu * sm_nu * s_sm
            }
            Triple::PmZM => {
                let z_mu = sz(mu);
                let s_zm = p.zm[mu] - gm * szsm(mu, mu) - gn * szsm(mu, nu);
                let s_pm_nu = p.pm_rev[nu] - gm * spsm(mu, nu) - gn * spsm(nu, nu);
                s_zm.conj() * sm_nu + s_pm_nu * z_mu + szsm(mu, nu) * s_sm.conj() - 2.0 * s_sm.conj() * z_mu * sm_nu
            }
            Triple::ZMMm => {
                let z_mu = sz(mu);
                let s_zm = p.zm[mu] - gm * szsm(mu, mu) - gn * szsm(mu, nu);
                let s_mm = p.mm[nu] - gm * smsm(nu, mu) - gn * smsm(nu, nu);
                szsm(mu, nu) * s_sm + s_zm * sm_nu + s_mm * z_mu - 2.0 * z_mu * sm_nu * s_sm
            }
            Triple::MMMm => {
                let s_mm_mu = p.mm[mu] - gm * smsm(mu, mu) - gn * smsm(mu, nu);
                let s_mm_nu = p.mm[nu] - gm * smsm(nu, mu) - gn * smsm(nu, nu);
                smsm(mu, nu) * s_sm + s_mm_mu * sm_nu + s_mm_nu * sm_mu - 2.0 * sm_mu * sm_nu * s_sm
            }
        }
    }
}
