//! Moments assembled from explicit operator products.
//!
//! [`ByOpList`] turns every [`Moments`] query into a list of [`Factor`]s on
//! concrete spins and hands it to an [`OpEval`]. The exact density-matrix
//! oracle and the slow [`ReferenceClosure`] both plug in here, so the
//! right-hand side can be checked against either without going through the
//! hand-written closures of [`ClosedMoments`](super::ClosedMoments).

use super::closure::{cumulant_close3, cumulant_close4};
use super::layout::{Family, StateLayout};
use super::moments::{Mom, Moments, Role, Triple};
use super::pauli::SpinOp;
use crate::model::ClusterEnsemble;
use crate::C64;

/// A spin identified by its cluster and a slot within the cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinRef {
    pub cluster: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Spin(SpinRef, SpinOp),
    Ad,
    A,
}

/// Evaluates normal-ordered products of operators on distinct spins.
pub trait OpEval {
    fn eval(&self, factors: &[Factor]) -> C64;

    /// Whether the spin exists (an exact evaluator has finitely many).
    fn available(&self, spin: SpinRef) -> bool;

    /// Spins of `cluster` not among the first `used` slots, each with its
    /// weight in a sum over distinct spins. `weight` is `M_cluster − used`.
    fn others(&self, cluster: usize, used: usize, weight: f64) -> Vec<(SpinRef, f64)>;
}

pub struct ByOpList<'a, E> {
    ensemble: &'a ClusterEnsemble,
    eval: E,
}

impl<'a, E: OpEval> ByOpList<'a, E> {
    pub fn new(ensemble: &'a ClusterEnsemble, eval: E) -> Self {
        Self { ensemble, eval }
    }

    pub fn evaluator(&self) -> &E {
        &self.eval
    }

    fn build(ops: &[(SpinRef, SpinOp)], n_ad: usize, n_a: usize) -> Vec<Factor> {
        let mut f: Vec<Factor> = ops.iter().map(|&(s, o)| Factor::Spin(s, o)).collect();
        f.extend(std::iter::repeat(Factor::Ad).take(n_ad));
        f.extend(std::iter::repeat(Factor::A).take(n_a));
        f
    }

    fn eval_on(&self, m: Mom, spins: &[SpinRef]) -> C64 {
        let (ops, n_ad, n_a) = m.operators();
        if spins[..ops.len()].iter().any(|s| !self.eval.available(*s)) {
            return C64::new(0.0, 0.0);
        }
        let list: Vec<(SpinRef, SpinOp)> = spins.iter().copied().zip(ops.iter().copied()).collect();
        self.eval.eval(&Self::build(&list, n_ad, n_a))
    }

    fn slot_after(cluster: usize, taken: &[SpinRef]) -> SpinRef {
        SpinRef { cluster, slot: taken.iter().filter(|s| s.cluster == cluster).count() }
    }

    fn pair(mu: usize, nu: usize) -> [SpinRef; 2] {
        let k = SpinRef { cluster: mu, slot: 0 };
        [k, Self::slot_after(nu, &[k])]
    }

    fn sum_over_others(&self, taken: &[SpinRef], mut f: impl FnMut(SpinRef) -> C64) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (r, c) in self.ensemble.clusters().iter().enumerate() {
            let used = taken.iter().filter(|t| t.cluster == r).count();
            for (spin, w) in self.eval.others(r, used, c.weight - used as f64) {
                if w != 0.0 {
                    s += w * c.g * f(spin);
                }
            }
        }
        s
    }
}

impl<E: OpEval> Moments for ByOpList<'_, E> {
    fn ensemble(&self) -> &ClusterEnsemble {
        self.ensemble
    }

    fn get(&self, m: Mom, mu: usize, nu: usize) -> C64 {
        let (ops, _, _) = m.operators();
        match ops.len() {
            0 | 1 => self.eval_on(m, &[SpinRef { cluster: mu, slot: 0 }]),
            _ => self.eval_on(m, &Self::pair(mu, nu)),
        }
    }

    fn sum_all(&self, m: Mom) -> C64 {
        self.sum_over_others(&[], |s| self.eval_on(m, &[s]))
    }

    fn sum_other(&self, m: Mom, mu: usize, reversed: bool) -> C64 {
        let k = SpinRef { cluster: mu, slot: 0 };
        if !self.eval.available(k) {
            return C64::new(0.0, 0.0);
        }
        self.sum_over_others(&[k], |j| if reversed { self.eval_on(m, &[j, k]) } else { self.eval_on(m, &[k, j]) })
    }

    fn sum_triple(&self, t: Triple, mu: usize, nu: usize) -> C64 {
        let [k, j] = Self::pair(mu, nu);
        if !self.eval.available(k) || !self.eval.available(j) {
            return C64::new(0.0, 0.0);
        }
        self.sum_over_others(&[k, j], |m| {
            let list: Vec<(SpinRef, SpinOp)> = t
                .operators()
                .iter()
                .map(|&(role, op)| {
                    let s = match role {
                        Role::K => k,
                        Role::J => j,
                        Role::M => m,
                    };
                    (s, op)
                })
                .collect();
            self.eval.eval(&Self::build(&list, 0, 0))
        })
    }
}

/// Slow generic closure over a state vector: looks a product up in the
/// layout (directly or through conjugation and index symmetry) or, if it is
/// not tracked, closes it by setting its top cumulant to zero, recursively.
/// Spin-only triples are always closed.
pub struct ReferenceClosure<'a> {
    layout: &'a StateLayout,
    state: &'a [f64],
}

impl<'a> ReferenceClosure<'a> {
    pub fn new(layout: &'a StateLayout, state: &'a [f64]) -> Self {
        Self { layout, state }
    }

    fn dagger(factors: &[Factor]) -> Vec<Factor> {
        let mut spins: Vec<Factor> = Vec::new();
        let (mut n_ad, mut n_a) = (0, 0);
        for f in factors {
            match *f {
                Factor::Spin(s, o) => spins.push(Factor::Spin(s, o.dagger())),
                Factor::Ad => n_a += 1,
                Factor::A => n_ad += 1,
            }
        }
        spins.extend(std::iter::repeat(Factor::Ad).take(n_ad));
        spins.extend(std::iter::repeat(Factor::A).take(n_a));
        spins
    }

    fn lookup_direct(&self, factors: &[Factor]) -> Option<C64> {
        let mut spins: Vec<(SpinRef, SpinOp)> = Vec::new();
        let (mut n_ad, mut n_a) = (0, 0);
        for f in factors {
            match *f {
                Factor::Spin(s, o) => spins.push((s, o)),
                Factor::Ad => n_ad += 1,
                Factor::A => n_a += 1,
            }
        }
        let ops = |v: &[(SpinRef, SpinOp)]| -> Vec<char> {
            v.iter()
                .map(|(_, o)| match o {
                    SpinOp::Plus => '+',
                    SpinOp::Minus => '-',
                    SpinOp::Z => 'z',
                })
                .collect()
        };
        let mut orders = vec![spins.clone()];
        if spins.len() == 2 {
            orders.push(vec![spins[1], spins[0]]);
        }
        for f in Family::ALL {
            if !self.layout.contains(f) {
                continue;
            }
            let (fo, cav) = f.operators();
            if cav != (n_ad, n_a) || fo.len() != spins.len() {
                continue;
            }
            for ord in &orders {
                if ops(ord) == fo {
                    let mu = ord.first().map_or(0, |s| s.0.cluster);
                    let nu = ord.get(1).map_or(0, |s| s.0.cluster);
                    return Some(self.layout.get(self.state, f, mu, nu));
                }
            }
        }
        None
    }

    fn lookup(&self, factors: &[Factor]) -> Option<C64> {
        self.lookup_direct(factors).or_else(|| self.lookup_direct(&Self::dagger(factors)).map(|v| v.conj()))
    }

    fn sub(factors: &[Factor], keep: &[usize]) -> Vec<Factor> {
        keep.iter().map(|&i| factors[i]).collect()
    }
}

impl OpEval for ReferenceClosure<'_> {
    fn eval(&self, factors: &[Factor]) -> C64 {
        let n = factors.len();
        let spin_only = factors.iter().all(|f| matches!(f, Factor::Spin(..)));
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        if !(n == 3 && spin_only) {
            if let Some(v) = self.lookup(factors) {
                return v;
            }
        }
        let e = |keep: &[usize]| self.eval(&Self::sub(factors, keep));
        match n {
            2 => e(&[0]) * e(&[1]),
            3 => cumulant_close3([e(&[0]), e(&[1]), e(&[2])], [e(&[0, 1]), e(&[0, 2]), e(&[1, 2])]),
            4 => cumulant_close4(
                [e(&[0]), e(&[1]), e(&[2]), e(&[3])],
                [e(&[0, 1]), e(&[0, 2]), e(&[0, 3]), e(&[1, 2]), e(&[1, 3]), e(&[2, 3])],
                [e(&[1, 2, 3]), e(&[0, 2, 3]), e(&[0, 1, 3]), e(&[0, 1, 2])],
            ),
            _ => panic!("no closure for a product of {n} operators"),
        }
    }

    fn available(&self, _: SpinRef) -> bool {
        true
    }

    fn others(&self, cluster: usize, used: usize, weight: f64) -> Vec<(SpinRef, f64)> {
        vec![(SpinRef { cluster, slot: used }, weight)]
    }
}
