//! Python bindings: parameters, ensembles, semiclassical curves, moment-equation
//! runs, the boundary search and the exact-oracle check.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spincav::boundary::{self, NscSettings};
use spincav::cumulant::{MomentEquations, StateLayout};
use spincav::integrate::{self, IntegratorConfig};
use spincav::model::{self, Cluster, ClusterEnsemble, CumulantOrder, PhysicalParams};
use spincav::semiclassical::{self, Branch, SelfConsistency};
use spincav::{oracle, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidGrid(_)
        | Error::InvalidInitialState(_)
        | Error::DimensionMismatch { .. }
        | Error::UnknownMoment(_)
        | Error::Contract(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn order(s: &str) -> PyResult<CumulantOrder> {
    s.parse().map_err(to_py)
}

/// Cavity and spin rates plus drive, in rad/µs.
#[pyclass(name = "Params", module = "spincav_py", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyParams {
    inner: PhysicalParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (kappa=None, gamma_h=None, gamma_p=None, delta_c=None, eta=None))]
    fn new(
        kappa: Option<f64>,
        gamma_h: Option<f64>,
        gamma_p: Option<f64>,
        delta_c: Option<f64>,
        eta: Option<f64>,
    ) -> PyResult<Self> {
        let d = PhysicalParams::default();
        let inner = PhysicalParams {
            kappa: kappa.unwrap_or(d.kappa),
            gamma_h: gamma_h.unwrap_or(d.gamma_h),
            gamma_p: gamma_p.unwrap_or(d.gamma_p),
            delta_c: delta_c.unwrap_or(d.delta_c),
            eta: eta.unwrap_or(d.eta),
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Same parameters given in MHz (multiplied by 2π).
    #[staticmethod]
    #[pyo3(signature = (kappa=1.0, gamma_h=0.5, gamma_p=0.0, delta_c=0.0, eta=0.0))]
    fn from_mhz(kappa: f64, gamma_h: f64, gamma_p: f64, delta_c: f64, eta: f64) -> PyResult<Self> {
        let m = model::mhz;
        Self::new(Some(m(kappa)), Some(m(gamma_h)), Some(m(gamma_p)), Some(m(delta_c)), Some(m(eta)))
    }

    fn with_eta(&self, eta: f64) -> Self {
        Self { inner: self.inner.with_eta(eta) }
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn gamma_h(&self) -> f64 {
        self.inner.gamma_h
    }
    #[getter]
    fn gamma_p(&self) -> f64 {
        self.inner.gamma_p
    }
    #[getter]
    fn delta_c(&self) -> f64 {
        self.inner.delta_c
    }
    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!(
            "Params(kappa={}, gamma_h={}, gamma_p={}, delta_c={}, eta={})",
            p.kappa, p.gamma_h, p.gamma_p, p.delta_c, p.eta
        )
    }
}

/// Spin ensemble as frequency clusters of (detuning, coupling, weight).
#[pyclass(name = "Ensemble", module = "spincav_py", skip_from_py_object)]
#[derive(Clone)]
struct PyEnsemble {
    inner: ClusterEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    fn new(clusters: Vec<(f64, f64, f64)>) -> PyResult<Self> {
        let clusters = clusters.into_iter().map(|(delta, g, weight)| Cluster { delta, g, weight }).collect();
        Ok(Self { inner: ClusterEnsemble::new(clusters).map_err(to_py)? })
    }

    #[staticmethod]
    fn homogeneous(n: f64, g: f64) -> Self {
        Self { inner: ClusterEnsemble::homogeneous(n, g) }
    }

    #[staticmethod]
    fn with_cooperativity(n: f64, c: f64, params: &PyParams) -> Self {
        Self { inner: ClusterEnsemble::with_cooperativity(n, c, &params.inner) }
    }

    /// Gaussian distribution of angular FWHM `gamma` on `clusters` points in `±span·gamma`.
    #[staticmethod]
    fn gaussian(n: f64, gamma: f64, clusters: usize, span: f64, g: f64) -> PyResult<Self> {
        Ok(Self { inner: model::gaussian_ensemble(n, gamma, clusters, span, g).map_err(to_py)? })
    }

    #[getter]
    fn clusters(&self) -> Vec<(f64, f64, f64)> {
        self.inner.clusters().iter().map(|c| (c.delta, c.g, c.weight)).collect()
    }

    #[getter]
    fn total_spins(&self) -> f64 {
        self.inner.total_spins()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn cooperativity(&self, params: &PyParams) -> f64 {
        model::cooperativity(&self.inner, &params.inner)
    }

    /// CE1-invariant rescaling to `n` spins; returns the new ensemble and parameters.
    fn scaled(&self, params: &PyParams, n: f64) -> PyResult<(PyEnsemble, PyParams)> {
        let (e, p) = model::scale_ensemble(&self.inner, &params.inner, n).map_err(to_py)?;
        Ok((PyEnsemble { inner: e }, PyParams { inner: p }))
    }

    /// Upper critical drive of the semiclassical problem.
    fn eta_plus_crit(&self, params: &PyParams) -> f64 {
        SelfConsistency::new(&self.inner, &params.inner).eta_plus_crit()
    }

    /// `(eta_minus, eta_plus)` when the semiclassical curve is bistable.
    fn critical_drives(&self, params: &PyParams) -> Option<(f64, f64)> {
        SelfConsistency::new(&self.inner, &params.inner).critical_drives().map(|c| (c.eta_minus, c.eta_plus))
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(clusters={}, total_spins={})", self.inner.len(), self.inner.total_spins())
    }
}

/// Integration tolerances; `max_time=None` uses the drive-dependent default horizon.
#[pyclass(name = "Integrator", module = "spincav_py", skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyIntegrator {
    inner: IntegratorConfig,
}

#[pymethods]
impl PyIntegrator {
    #[new]
    #[pyo3(signature = (rtol=1e-8, atol=1e-10, max_time=None, ss_rel_tol=1e-8, window=2.0, phys_tol=1e-6, max_step=None))]
    fn new(
        rtol: f64,
        atol: f64,
        max_time: Option<f64>,
        ss_rel_tol: f64,
        window: f64,
        phys_tol: f64,
        max_step: Option<f64>,
    ) -> PyResult<Self> {
        let inner = IntegratorConfig { rtol, atol, max_time, ss_rel_tol, window, phys_tol, max_step };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }
}

fn integrator(cfg: Option<&PyIntegrator>) -> IntegratorConfig {
    cfg.map_or_else(IntegratorConfig::default, |c| c.inner)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Lower => "lower",
        Branch::Middle => "middle",
        Branch::Upper => "upper",
    }
}

#[pyfunction]
fn mhz(f: f64) -> f64 {
    model::mhz(f)
}

/// Semiclassical stationary states along an ascending drive grid as
/// `(eta, |<a>|^2, branch, stable)` tuples.
#[pyfunction]
fn steady_curve(ensemble: &PyEnsemble, params: &PyParams, etas: Vec<f64>) -> PyResult<Vec<(f64, f64, &'static str, bool)>> {
    let pts = semiclassical::semiclassical_curve(&ensemble.inner, &params.inner, &etas).map_err(to_py)?;
    Ok(pts.into_iter().map(|b| (b.eta, b.x, branch_name(b.branch), b.stable)).collect())
}

/// Stationary `|<a>|^2` at one closure order and the initial inversion that reached it.
#[pyfunction]
#[pyo3(signature = (order, ensemble, params, integrator=None))]
fn stationary_amplitude(
    py: Python<'_>,
    order: &str,
    ensemble: &PyEnsemble,
    params: &PyParams,
    integrator: Option<&PyIntegrator>,
) -> PyResult<(f64, f64)> {
    let (o, e, p, cfg) = (self::order(order)?, ensemble.inner.clone(), params.inner, self::integrator(integrator));
    py.detach(|| boundary::stationary_amplitude(o, &e, &p, &cfg)).map_err(to_py)
}

/// CE1, CE2, CE3 stationary amplitudes and the relative deviations d12, d23, d13.
#[pyfunction]
#[pyo3(signature = (ensemble, params, integrator=None))]
fn deviation_triple<'py>(
    py: Python<'py>,
    ensemble: &PyEnsemble,
    params: &PyParams,
    integrator: Option<&PyIntegrator>,
) -> PyResult<Bound<'py, PyDict>> {
    let (e, p, cfg) = (ensemble.inner.clone(), params.inner, self::integrator(integrator));
    let d = py.detach(|| boundary::deviation_triple(&e, &p, &cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("amplitudes", d.amplitudes.to_vec())?;
    out.set_item("sz0", d.sz0.to_vec())?;
    out.set_item("d12", d.triple.d12)?;
    out.set_item("d23", d.triple.d23)?;
    out.set_item("d13", d.triple.d13)?;
    Ok(out)
}

/// Trajectory from factorized initial conditions with uniform inversion `sz0`.
#[pyfunction]
#[pyo3(signature = (order, ensemble, params, times, sz0=-1.0, integrator=None))]
fn evolve<'py>(
    py: Python<'py>,
    order: &str,
    ensemble: &PyEnsemble,
    params: &PyParams,
    times: Vec<f64>,
    sz0: f64,
    integrator: Option<&PyIntegrator>,
) -> PyResult<Bound<'py, PyDict>> {
    let o = self::order(order)?;
    let (e, p, cfg) = (ensemble.inner.clone(), params.inner, self::integrator(integrator));
    let tr = py
        .detach(|| {
            let mut eqs = MomentEquations::new(o, e, p)?;
            let y0 = eqs.initial_state(&vec![sz0; eqs.layout().clusters()])?;
            integrate::evolve(&mut eqs, &y0, &cfg, &times)
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("t", tr.samples.iter().map(|s| s.t).collect::<Vec<_>>())?;
    out.set_item("a", tr.samples.iter().map(|s| (s.a.re, s.a.im)).collect::<Vec<_>>())?;
    out.set_item("abs_a_sq", tr.samples.iter().map(|s| s.abs_a_sq()).collect::<Vec<_>>())?;
    out.set_item("n_phot", tr.samples.iter().map(|s| s.n_phot).collect::<Vec<_>>())?;
    out.set_item("sz", tr.samples.iter().map(|s| s.sz.clone()).collect::<Vec<_>>())?;
    out.set_item("unphysical", tr.unphysical.map(|o| format!("{o:?}")))?;
    Ok(out)
}

/// Smallest N (at fixed cooperativity and drive ratio) where all closure
/// orders agree within `delta_eps`.
#[pyfunction]
#[pyo3(signature = (ensemble, params, eta_ratio, delta_eps=1e-2, n_min=10.0, n_max=1e6, points_per_decade=10, confirm_points=3, integrator=None))]
#[allow(clippy::too_many_arguments)]
fn nsc_search<'py>(
    py: Python<'py>,
    ensemble: &PyEnsemble,
    params: &PyParams,
    eta_ratio: f64,
    delta_eps: f64,
    n_min: f64,
    n_max: f64,
    points_per_decade: usize,
    confirm_points: usize,
    integrator: Option<&PyIntegrator>,
) -> PyResult<Bound<'py, PyDict>> {
    if eta_ratio == 1.0 {
        return Err(PyValueError::new_err("eta_ratio 1 is excluded (critical slowing down)"));
    }
    let settings =
        NscSettings { delta_eps, n_min, n_max, points_per_decade, confirm_points, integrator: self::integrator(integrator) };
    let (e, p) = (ensemble.inner.clone(), params.inner);
    let b = py
        .detach(|| boundary::nsc_search(boundary::fixed_cooperativity_factory(e, p, eta_ratio), eta_ratio, &settings))
        .map_err(to_py)?;
    let t = b.deviations.triple;
    let out = PyDict::new(py);
    out.set_item("eta_ratio", b.eta_ratio)?;
    out.set_item("n_sc", b.n_sc)?;
    out.set_item("deviations", (t.d12, t.d23, t.d13))?;
    out.set_item("trace", b.trace)?;
    Ok(out)
}

/// Number of real variables of a closure order for `clusters` clusters.
#[pyfunction]
fn inventory_count(order: &str, clusters: usize) -> PyResult<usize> {
    Ok(StateLayout::new(self::order(order)?, clusters).total_real_count())
}

/// Largest relative residual between the moment equations and the exact
/// master equation over random systems with the given cluster sizes.
#[pyfunction]
#[pyo3(signature = (weights, samples=20, order="ce3", seed=1, photon_cutoff=7, max_photons=2))]
fn oracle_max_residual(
    py: Python<'_>,
    weights: Vec<usize>,
    samples: usize,
    order: &str,
    seed: u64,
    photon_cutoff: usize,
    max_photons: usize,
) -> PyResult<f64> {
    let o = self::order(order)?;
    py.detach(|| oracle::verify_seeded(seed, &weights, samples, o, photon_cutoff, max_photons))
        .map(|r| r.max_residual())
        .map_err(to_py)
}

#[pymodule]
fn spincav_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyIntegrator>()?;
    m.add_function(wrap_pyfunction!(mhz, m)?)?;
    m.add_function(wrap_pyfunction!(steady_curve, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(deviation_triple, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(nsc_search, m)?)?;
    m.add_function(wrap_pyfunction!(inventory_count, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_max_residual, m)?)?;
    Ok(())
}
