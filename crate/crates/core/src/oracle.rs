//! Exact reference for few spins: dense density-matrix evolution in a
//! truncated Fock space and term-by-term checks of the moment equations.
//!
//! Basis ordering: spins in index order, then the cavity, i.e. the Kronecker
//! chain `spin_0 ⊗ … ⊗ spin_{n−1} ⊗ cavity`. Each spin has basis
//! `(|e⟩, |g⟩)` so that `σz = diag(1, −1)`.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::cumulant::{derivative, ByOpList, Factor, Family, OpEval, SpinOp, SpinRef, StateLayout};
use crate::error::{Error, Result};
use crate::integrate::Dopri5;
use crate::model::{ClusterEnsemble, CumulantOrder, PhysicalParams};
use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Detuning and coupling of one spin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSpec {
    pub delta: f64,
    pub g: f64,
}

/// A few-spin system with a truncated cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertConfig {
    pub params: PhysicalParams,
    pub spins: Vec<SpinSpec>,
    pub photon_cutoff: usize,
}

const MAX_DIM: usize = 1 << 12;

impl HilbertConfig {
    pub fn new(params: PhysicalParams, spins: Vec<SpinSpec>, photon_cutoff: usize) -> Result<Self> {
        params.validate()?;
        if spins.len() > 4 {
            return Err(Error::InvalidParameter(format!("{} spins, at most 4 supported", spins.len())));
        }
        let cfg = Self { params, spins, photon_cutoff };
        if cfg.dim() > MAX_DIM {
            return Err(Error::InvalidParameter(format!("Hilbert dimension {} exceeds {MAX_DIM}", cfg.dim())));
        }
        Ok(cfg)
    }

    /// One spin per unit of weight; weights must be integers.
    pub fn from_ensemble(params: PhysicalParams, ensemble: &ClusterEnsemble, photon_cutoff: usize) -> Result<Self> {
        let mut spins = Vec::new();
        for c in ensemble.clusters() {
            if c.weight.fract() != 0.0 {
                return Err(Error::InvalidParameter(format!("non-integer cluster weight {}", c.weight)));
            }
            spins.extend(std::iter::repeat(SpinSpec { delta: c.delta, g: c.g }).take(c.weight as usize));
        }
        Self::new(params, spins, photon_cutoff)
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    pub fn fock_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        (1usize << self.n_spins()) * self.fock_dim()
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn local_spin(op: SpinOp) -> CMatrix {
    let z = C64::new(0.0, 0.0);
    match op {
        SpinOp::Z => CMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c(-1.0)]),
        SpinOp::Minus => CMatrix::from_row_slice(2, 2, &[z, z, c(1.0), z]),
        SpinOp::Plus => CMatrix::from_row_slice(2, 2, &[z, c(1.0), z, z]),
    }
}

fn annihilation(fock: usize) -> CMatrix {
    let mut m = CMatrix::zeros(fock, fock);
    for n in 1..fock {
        m[(n - 1, n)] = c((n as f64).sqrt());
    }
    m
}

/// Operator factory for one configuration.
#[derive(Debug, Clone)]
pub struct Operators {
    n_spins: usize,
    fock: usize,
}

impl Operators {
    pub fn new(cfg: &HilbertConfig) -> Self {
        Self { n_spins: cfg.n_spins(), fock: cfg.fock_dim() }
    }

    /// Kronecker product with the given spin factors and cavity factor.
    pub fn product(&self, spins: &[CMatrix], cavity: &CMatrix) -> CMatrix {
        let mut m = CMatrix::identity(1, 1);
        for s in spins {
            m = kron(&m, s);
        }
        kron(&m, cavity)
    }

    pub fn spin(&self, j: usize, op: SpinOp) -> CMatrix {
        let mut s = vec![CMatrix::identity(2, 2); self.n_spins];
        s[j] = local_spin(op);
        self.product(&s, &CMatrix::identity(self.fock, self.fock))
    }

    pub fn a(&self) -> CMatrix {
        self.product(&vec![CMatrix::identity(2, 2); self.n_spins], &annihilation(self.fock))
    }

    pub fn identity(&self) -> CMatrix {
        let d = (1 << self.n_spins) * self.fock;
        CMatrix::identity(d, d)
    }
}

/// Precomputed pieces of the Lindblad generator
/// `L(ρ) = −i(H_eff ρ − ρ H_eff†) + 2κ aρa† + 2γ_h Σ σ⁻ρσ⁺ + γ_p Σ σzρσz − nγ_p ρ`.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    cfg: HilbertConfig,
    h_eff: CMatrix,
    a: CMatrix,
    sm: Vec<CMatrix>,
    sz: Vec<CMatrix>,
}

impl Liouvillian {
    pub fn new(cfg: &HilbertConfig) -> Self {
        let ops = Operators::new(cfg);
        let p = &cfg.params;
        let a = ops.a();
        let ad = a.adjoint();
        let n = ops.identity().nrows();
        let mut h = CMatrix::zeros(n, n);
        h += &ad * &a * c(p.delta_c);
        h += (&ad - &a) * C64::new(0.0, p.eta);
        let mut sm = Vec::new();
        let mut sz = Vec::new();
        let mut decay = &ad * &a * c(p.kappa);
        for (j, s) in cfg.spins.iter().enumerate() {
            let m = ops.spin(j, SpinOp::Minus);
            let z = ops.spin(j, SpinOp::Z);
            let pl = m.adjoint();
            h += &z * c(s.delta / 2.0);
            h += (&ad * &m + &pl * &a) * c(s.g);
            decay += &pl * &m * c(p.gamma_h);
            sm.push(m);
            sz.push(z);
        }
        let h_eff = h - decay * C64::new(0.0, 1.0);
        Self { cfg: cfg.clone(), h_eff, a, sm, sz }
    }

    pub fn config(&self) -> &HilbertConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let n = self.dim();
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: rho.nrows() });
        }
        let p = &self.cfg.params;
        let mi = C64::new(0.0, -1.0);
        let hr = &self.h_eff * rho;
        let mut out = (&hr - hr.adjoint()) * mi;
        out += &self.a * rho * self.a.adjoint() * c(2.0 * p.kappa);
        for (m, z) in self.sm.iter().zip(&self.sz) {
            out += m * rho * m.adjoint() * c(2.0 * p.gamma_h);
            if p.gamma_p > 0.0 {
                out += z * rho * z * c(p.gamma_p);
            }
        }
        if p.gamma_p > 0.0 {
            out -= rho * c(p.gamma_p * self.sm.len() as f64);
        }
        Ok(out)
    }
}

/// `−i[H, ρ] + L_D(ρ)`.
pub fn liouvillian_apply(cfg: &HilbertConfig, rho: &CMatrix) -> Result<CMatrix> {
    Liouvillian::new(cfg).apply(rho)
}

fn flatten(m: &CMatrix, out: &mut [f64]) {
    for (i, z) in m.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
}

fn unflatten(v: &[f64], n: usize) -> CMatrix {
    CMatrix::from_iterator(n, n, (0..n * n).map(|i| C64::new(v[2 * i], v[2 * i + 1])))
}

/// Population of the highest Fock level.
pub fn top_fock_population(cfg: &HilbertConfig, rho: &CMatrix) -> f64 {
    let fock = cfg.fock_dim();
    (0..(1 << cfg.n_spins())).map(|s| rho[(s * fock + fock - 1, s * fock + fock - 1)].re).sum()
}

/// Integrates the master equation and returns `ρ(t)` on `t_grid`.
pub fn evolve_density(cfg: &HilbertConfig, rho0: &CMatrix, t_grid: &[f64]) -> Result<Vec<CMatrix>> {
    evolve_density_tol(cfg, rho0, t_grid, 1e-10, 1e-12)
}

pub fn evolve_density_tol(cfg: &HilbertConfig, rho0: &CMatrix, t_grid: &[f64], rtol: f64, atol: f64) -> Result<Vec<CMatrix>> {
    let l = Liouvillian::new(cfg);
    let n = l.dim();
    if rho0.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rho0.nrows() });
    }
    let mut y0 = vec![0.0; 2 * n * n];
    flatten(rho0, &mut y0);
    let mut f = |_: f64, y: &[f64], dy: &mut [f64]| {
        let d = l.apply(&unflatten(y, n)).expect("dimension fixed");
        flatten(&d, dy);
    };
    let mut st = Dopri5::new(0.0, &y0, rtol, atol, 0.1 / cfg.params.kappa);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut buf = vec![0.0; y0.len()];
    let t_end = t_grid.last().copied().unwrap_or(0.0);
    let mut next = 0;
    let push = |rho: CMatrix, out: &mut Vec<CMatrix>| -> Result<()> {
        let pop = top_fock_population(cfg, &rho);
        if pop > 1e-8 {
            return Err(Error::Truncation { population: pop });
        }
        out.push(rho);
        Ok(())
    };
    while next < t_grid.len() && t_grid[next] <= 0.0 {
        push(rho0.clone(), &mut out)?;
        next += 1;
    }
    while next < t_grid.len() {
        st.step(&mut f, t_end)?;
        while next < t_grid.len() && t_grid[next] <= st.t() {
            st.interpolate(t_grid[next], &mut buf);
            let rho = unflatten(&buf, n);
            push((&rho + rho.adjoint()) * c(0.5), &mut out)?;
            next += 1;
        }
    }
    Ok(out)
}

/// Vacuum cavity and all spins in `|g⟩`.
pub fn ground_state(cfg: &HilbertConfig) -> CMatrix {
    let n = cfg.dim();
    let mut rho = CMatrix::zeros(n, n);
    let idx = ((1 << cfg.n_spins()) - 1) * cfg.fock_dim();
    rho[(idx, idx)] = c(1.0);
    rho
}

/// Parses a product such as `"sp0 sm1 ad a"` (tokens `a`, `ad`, `sp<j>`,
/// `sm<j>`, `sz<j>`, multiplied left to right; empty means identity).
pub fn parse_moment(cfg: &HilbertConfig, spec: &str) -> Result<CMatrix> {
    let ops = Operators::new(cfg);
    let mut m = ops.identity();
    let a = ops.a();
    for tok in spec.split_whitespace() {
        let f = match tok {
            "a" => a.clone(),
            "ad" => a.adjoint(),
            _ => {
                let (op, rest) = match tok.get(..2) {
                    Some("sp") => (SpinOp::Plus, &tok[2..]),
                    Some("sm") => (SpinOp::Minus, &tok[2..]),
                    Some("sz") => (SpinOp::Z, &tok[2..]),
                    _ => return Err(Error::UnknownMoment(tok.to_string())),
                };
                let j: usize = rest.parse().map_err(|_| Error::UnknownMoment(tok.to_string()))?;
                if j >= cfg.n_spins() {
                    return Err(Error::UnknownMoment(format!("{tok}: no spin {j}")));
                }
                ops.spin(j, op)
            }
        };
        m = m * f;
    }
    Ok(m)
}

/// `Tr(O ρ)`.
pub fn trace_product(o: &CMatrix, rho: &CMatrix) -> C64 {
    let n = o.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += o[(i, j)] * rho[(j, i)];
        }
    }
    s
}

/// `Tr(O ρ)` for a product given as in [`parse_moment`].
pub fn expectation(cfg: &HilbertConfig, rho: &CMatrix, spec: &str) -> Result<C64> {
    Ok(trace_product(&parse_moment(cfg, spec)?, rho))
}

/// Exact moments of a density matrix, with spins grouped into clusters.
pub struct ExactEval<'a> {
    cfg: &'a HilbertConfig,
    rho: &'a CMatrix,
    cluster_spins: Vec<Vec<usize>>,
    cache: RefCell<HashMap<Vec<Factor>, C64>>,
}

impl<'a> ExactEval<'a> {
    /// `cluster_spins[μ]` lists the spin indices of cluster `μ`.
    pub fn new(cfg: &'a HilbertConfig, rho: &'a CMatrix, cluster_spins: Vec<Vec<usize>>) -> Self {
        Self { cfg, rho, cluster_spins, cache: RefCell::new(HashMap::new()) }
    }

    fn operator(&self, factors: &[Factor]) -> CMatrix {
        let n = self.cfg.n_spins();
        let fock = self.cfg.fock_dim();
        let mut spins = vec![CMatrix::identity(2, 2); n];
        let a = annihilation(fock);
        let ad = a.adjoint();
        let mut cav = CMatrix::identity(fock, fock);
        for f in factors {
            match *f {
                Factor::Spin(s, op) => {
                    let j = self.cluster_spins[s.cluster][s.slot];
                    spins[j] = &spins[j] * local_spin(op);
                }
                Factor::Ad => cav = cav * &ad,
                Factor::A => cav = cav * &a,
            }
        }
        Operators::new(self.cfg).product(&spins, &cav)
    }
}

impl OpEval for ExactEval<'_> {
    fn eval(&self, factors: &[Factor]) -> C64 {
        if let Some(v) = self.cache.borrow().get(factors) {
            return *v;
        }
        let v = trace_product(&self.operator(factors), self.rho);
        self.cache.borrow_mut().insert(factors.to_vec(), v);
        v
    }

    fn available(&self, spin: SpinRef) -> bool {
        spin.slot < self.cluster_spins[spin.cluster].len()
    }

    fn others(&self, cluster: usize, used: usize, _weight: f64) -> Vec<(SpinRef, f64)> {
        (used..self.cluster_spins[cluster].len()).map(|slot| (SpinRef { cluster, slot }, 1.0)).collect()
    }
}

/// Consecutive spin indices per cluster for integer weights.
pub fn cluster_spin_map(ensemble: &ClusterEnsemble) -> Vec<Vec<usize>> {
    let mut next = 0;
    ensemble
        .clusters()
        .iter()
        .map(|c| {
            let k = c.weight as usize;
            let v = (next..next + k).collect();
            next += k;
            v
        })
        .collect()
}

/// Averages `ρ` over all permutations of spins within each cluster.
pub fn symmetrize_clusters(cfg: &HilbertConfig, rho: &CMatrix, cluster_spins: &[Vec<usize>]) -> CMatrix {
    let n = cfg.n_spins();
    let mut perms: Vec<Vec<usize>> = vec![(0..n).collect()];
    for group in cluster_spins {
        let mut next = Vec::new();
        for p in &perms {
            for q in permutations(group) {
                let mut r = p.clone();
                for (from, to) in group.iter().zip(&q) {
                    r[*from] = p[*to];
                }
                next.push(r);
            }
        }
        perms = next;
    }
    let fock = cfg.fock_dim();
    let dim = cfg.dim();
    let map = |perm: &[usize], idx: usize| -> usize {
        let (s, f) = (idx / fock, idx % fock);
        let mut t = 0;
        for j in 0..n {
            let bit = (s >> (n - 1 - j)) & 1;
            t |= bit << (n - 1 - perm[j]);
        }
        t * fock + f
    };
    let mut out = CMatrix::zeros(dim, dim);
    for p in &perms {
        for i in 0..dim {
            let pi = map(p, i);
            for j in 0..dim {
                out[(pi, map(p, j))] += rho[(i, j)];
            }
        }
    }
    out * c(1.0 / perms.len() as f64)
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Random density matrix supported on Fock states `≤ max_photons`,
/// built from a complex Gaussian matrix `X` as `X X† / Tr`.
pub fn random_density<R: rand::Rng>(cfg: &HilbertConfig, max_photons: usize, rng: &mut R) -> CMatrix {
    let fock = cfg.fock_dim();
    let dim = cfg.dim();
    let mut x = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        if i % fock > max_photons {
            continue;
        }
        for j in 0..dim {
            x[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let rho = &x * x.adjoint();
    let tr = rho.trace();
    rho / tr
}

/// One line of a residual report.
#[derive(Debug, Clone, PartialEq)]
pub struct EomRow {
    pub family: Family,
    pub mu: usize,
    pub nu: usize,
    pub exact: C64,
    pub hierarchy: C64,
    /// `|hierarchy − exact| / max(1, |exact|)`; `None` if skipped.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EomReport {
    pub rows: Vec<EomRow>,
}

impl EomReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().filter_map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn skipped(&self) -> usize {
        self.rows.iter().filter(|r| r.residual.is_none()).count()
    }

    /// CSV with columns `family,indices,residual` (`skipped` when the
    /// cluster has no second spin).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,indices,residual\n");
        for r in &self.rows {
            let idx = match r.family.arity() {
                0 => String::new(),
                1 => format!("{}", r.mu),
                _ => format!("{}-{}", r.mu, r.nu),
            };
            match r.residual {
                Some(v) => s.push_str(&format!("{},{},{:e}\n", r.family.name(), idx, v)),
                None => s.push_str(&format!("{},{},skipped\n", r.family.name(), idx)),
            }
        }
        s
    }
}

fn family_operator(f: Family, mu: usize, nu: usize) -> Vec<Factor> {
    let (ops, (n_ad, n_a)) = f.operators();
    let mut out = Vec::new();
    let k = SpinRef { cluster: mu, slot: 0 };
    let j = SpinRef { cluster: nu, slot: usize::from(mu == nu) };
    for (i, ch) in ops.iter().enumerate() {
        let op = match ch {
            '+' => SpinOp::Plus,
            '-' => SpinOp::Minus,
            _ => SpinOp::Z,
        };
        out.push(Factor::Spin(if i == 0 { k } else { j }, op));
    }
    out.extend(std::iter::repeat(Factor::Ad).take(n_ad));
    out.extend(std::iter::repeat(Factor::A).take(n_a));
    out
}

/// Compares, for every variable of the `order` inventory, the exact
/// `Tr(O L(ρ))` with the hierarchy's right-hand side evaluated on exact
/// moments of `ρ` (no closure). `ensemble` must have integer weights
/// matching the spins of `cfg` in order; `ρ` should be symmetric under
/// permutations within clusters.
pub fn verify_eom(cfg: &HilbertConfig, ensemble: &ClusterEnsemble, rho: &CMatrix, order: CumulantOrder) -> Result<EomReport> {
    let map = cluster_spin_map(ensemble);
    if map.iter().map(Vec::len).sum::<usize>() != cfg.n_spins() {
        return Err(Error::DimensionMismatch { expected: cfg.n_spins(), got: map.iter().map(Vec::len).sum() });
    }
    let lrho = liouvillian_apply(cfg, rho)?;
    let exact_moments = ByOpList::new(ensemble, ExactEval::new(cfg, rho, map.clone()));
    let exact_deriv = ExactEval::new(cfg, &lrho, map.clone());
    let layout = StateLayout::new(order, ensemble.len());
    let mut rows = Vec::new();
    for f in layout.families() {
        for (mu, nu) in layout.indices(f) {
            let pair_missing = f.arity() == 2 && mu == nu && map[mu].len() < 2;
            let single_missing = f.arity() >= 1 && map[mu].is_empty() || f.arity() == 2 && map[nu].is_empty();
            if pair_missing || single_missing {
                rows.push(EomRow { family: f, mu, nu, exact: C64::default(), hierarchy: C64::default(), residual: None });
                continue;
            }
            let exact = exact_deriv.eval(&family_operator(f, mu, nu));
            let hierarchy = derivative(&exact_moments, &cfg.params, f, mu, nu);
            let residual = (hierarchy - exact).norm() / exact.norm().max(1.0);
            rows.push(EomRow { family: f, mu, nu, exact, hierarchy, residual: Some(residual) });
        }
    }
    Ok(EomReport { rows })
}

/// Random rates and detunings with clusters of the given integer sizes.
pub fn random_system<R: rand::Rng>(rng: &mut R, weights: &[usize]) -> Result<(PhysicalParams, ClusterEnsemble)> {
    let params = PhysicalParams {
        kappa: rng.gen_range(0.5..2.0),
        gamma_h: rng.gen_range(0.2..1.5),
        gamma_p: rng.gen_range(0.1..1.0),
        delta_c: rng.gen_range(-1.0..1.0),
        eta: rng.gen_range(0.1..2.0),
    };
    let mut deltas: Vec<f64> = weights.iter().map(|_| rng.gen_range(-2.0..2.0)).collect();
    deltas.sort_by(f64::total_cmp);
    let clusters = weights
        .iter()
        .zip(deltas)
        .map(|(&w, delta)| crate::model::Cluster { delta, g: rng.gen_range(0.2..1.5), weight: w as f64 })
        .collect();
    Ok((params, ClusterEnsemble::new(clusters)?))
}

/// [`verify_eom`] on `samples` random systems with cluster sizes `weights`, each
/// with a random cluster-symmetric density matrix on Fock states
/// `≤ max_photons`. Keeps, per variable, the sample with the largest residual.
pub fn verify_random<R: rand::Rng>(
    rng: &mut R,
    weights: &[usize],
    samples: usize,
    order: CumulantOrder,
    photon_cutoff: usize,
    max_photons: usize,
) -> Result<EomReport> {
    let mut worst: Option<EomReport> = None;
    for _ in 0..samples {
        let (params, ens) = random_system(rng, weights)?;
        let cfg = HilbertConfig::from_ensemble(params, &ens, photon_cutoff)?;
        let rho = random_density(&cfg, max_photons, rng);
        let rho = symmetrize_clusters(&cfg, &rho, &cluster_spin_map(&ens));
        let report = verify_eom(&cfg, &ens, &rho, order)?;
        match &mut worst {
            None => worst = Some(report),
            Some(w) => {
                for (a, b) in w.rows.iter_mut().zip(report.rows) {
                    if b.residual > a.residual {
                        *a = b;
                    }
                }
            }
        }
    }
    worst.ok_or_else(|| Error::Contract("verify_random needs at least one sample".into()))
}

/// [`verify_random`] with a seeded generator, for callers without their own RNG.
pub fn verify_seeded(
    seed: u64,
    weights: &[usize],
    samples: usize,
    order: CumulantOrder,
    photon_cutoff: usize,
    max_photons: usize,
) -> Result<EomReport> {
    use rand::SeedableRng;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    verify_random(&mut rng, weights, samples, order, photon_cutoff, max_photons)
}
