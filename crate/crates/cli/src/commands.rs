use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;
use spincav::boundary::{
    boundary_csv, boundary_sweep, fixed_cooperativity_factory, normalized_amplitude, stationary_amplitude,
    SweepRow, TraceEntry,
};
use spincav::cumulant::{MomentEquations, StateLayout};
use spincav::integrate::{evolve as run_trajectory, Outcome};
use spincav::model::{cooperativity, mhz, CumulantOrder};
use spincav::oracle::verify_seeded;
use spincav::semiclassical::{semiclassical_curve, Branch, SelfConsistency};
use spincav::Error;

use crate::config::RunConfig;
use crate::svg::{line_chart, Series};

/// Why a command failed; maps onto the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    NotConverged(String),
    Unphysical(String),
    Io(String),
    Other(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::NotConverged(_) => 3,
            Failure::Unphysical(_) => 4,
            Failure::Io(_) | Failure::Other(_) => 1,
        }
    }

    fn from_error(e: &Error, context: &str) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            Error::NotStationary { outcome: Outcome::Unphysical { .. }, .. } => Failure::Unphysical(msg),
            Error::NotStationary { .. }
            | Error::BoundaryNotFound { .. }
            | Error::BasinExhausted(_)
            | Error::StepSizeUnderflow { .. }
            | Error::NoConvergence { .. }
            | Error::Truncation { .. } => Failure::NotConverged(msg),
            Error::InvalidParameter(_) | Error::InvalidGrid(_) | Error::Contract(_) => Failure::Config(msg),
            _ => Failure::Other(msg),
        }
    }

    /// Keeps the more severe of two failures (unphysical > not converged > rest).
    fn worse(a: Option<Failure>, b: Failure) -> Option<Failure> {
        let rank = |f: &Failure| match f {
            Failure::Unphysical(_) => 3,
            Failure::NotConverged(_) => 2,
            _ => 1,
        };
        match a {
            Some(a) if rank(&a) >= rank(&b) => Some(a),
            _ => Some(b),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
            Failure::Unphysical(m) => write!(f, "unphysical: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Other(m) => write!(f, "{m}"),
        }
    }
}

/// Output directory plus the list of files written.
pub struct Output {
    dir: PathBuf,
    svg: bool,
    files: Vec<String>,
}

impl Output {
    pub fn new(dir: PathBuf, svg: bool) -> Result<Self, Failure> {
        std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, svg, files: Vec::new() })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn chart(&mut self, name: &str, title: &str, axes: (&str, &str), series: &[Series], log: (bool, bool)) -> Result<(), Failure> {
        if !self.svg {
            return Ok(());
        }
        self.write(name, &line_chart(title, axes.0, axes.1, series, log.0, log.1))
    }

    /// JSON record of the run: resolved config, version, timing and files.
    pub fn sidecar(&mut self, command: &str, cfg: &RunConfig, wall_s: f64, status: &str) -> Result<(), Failure> {
        let name = format!("{command}.json");
        let mut files = self.files.clone();
        files.push(name.clone());
        let doc = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
            "wall_time_s": wall_s,
            "status": status,
            "files": files,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Other(e.to_string()))?;
        self.write(&name, &(text + "\n"))
    }
}

fn rows(cfg: &RunConfig) -> Result<Vec<crate::config::Row>, Failure> {
    cfg.rows().map_err(Failure::Config)
}

fn ratios(cfg: &RunConfig) -> Result<Vec<f64>, Failure> {
    let r = cfg.sweep.eta_ratios.values().map_err(Failure::Config)?;
    if r.iter().any(|q| !(*q >= 0.0)) {
        return Err(Failure::Config("sweep.eta_ratios must be nonnegative".into()));
    }
    Ok(r)
}

/// Every (row, N, η/η⁺) combination in row-major order.
fn grid3(rows: usize, ns: &[f64], qs: &[f64]) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::with_capacity(rows * ns.len() * qs.len());
    for r in 0..rows {
        for &n in ns {
            for &q in qs {
                out.push((r, n, q));
            }
        }
    }
    out
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Lower => "lower",
        Branch::Middle => "middle",
        Branch::Upper => "upper",
    }
}

/// Semiclassical stationary curves, one CSV per row plus the critical drives.
pub fn steady(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let p = cfg.params.physical();
    let rows = rows(cfg)?;
    let col = cfg.label_column();
    let eta_plus: Vec<f64> = rows.iter().map(|r| SelfConsistency::new(&r.ensemble, &p).eta_plus_crit()).collect();
    let grid: Vec<f64> = match &cfg.sweep.eta_mhz {
        Some(g) => g.values().map_err(Failure::Config)?.into_iter().map(mhz).collect(),
        None => {
            let top = 1.5 * eta_plus.iter().copied().fold(0.0, f64::max);
            (0..301).map(|i| top * i as f64 / 300.0).collect()
        }
    };
    let curves: Vec<_> = rows.par_iter().map(|r| semiclassical_curve(&r.ensemble, &p, &grid)).collect();
    let mut critical = format!("{col},cooperativity,bistable,eta_minus_mhz,eta_plus_mhz\n");
    let mut series = Vec::new();
    for ((row, curve), ep) in rows.iter().zip(curves).zip(&eta_plus) {
        let curve = curve.map_err(|e| Failure::from_error(&e, &format!("{col}={}", row.label)))?;
        let mut s = String::from("eta_mhz,eta_over_etacrit,abs_a_sq,branch,stable\n");
        for b in &curve {
            s.push_str(&format!("{},{},{},{},{}\n", b.eta / mhz(1.0), b.eta / ep, b.x, branch_name(b.branch), b.stable));
        }
        out.write(&format!("steady_{col}{}.csv", row.label), &s)?;
        let sc = SelfConsistency::new(&row.ensemble, &p);
        let c = cooperativity(&row.ensemble, &p);
        match sc.critical_drives() {
            Some(cd) => critical.push_str(&format!(
                "{},{c},true,{},{}\n",
                row.label,
                cd.eta_minus / mhz(1.0),
                cd.eta_plus / mhz(1.0)
            )),
            None => critical.push_str(&format!("{},{c},false,,\n", row.label)),
        }
        let mut pts: Vec<(f64, f64)> = curve.iter().map(|b| (b.x, b.eta / mhz(1.0))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        series.push(Series { name: format!("{col}={}", row.label), points: pts.into_iter().map(|(x, e)| (e, x)).collect() });
    }
    out.write("steady_critical.csv", &critical)?;
    out.chart("steady.svg", "Semiclassical stationary intensity", ("eta (MHz)", "|<a>|^2"), &series, (false, false))
}

/// Time traces from the empty cavity with unexcited spins.
pub fn evolve(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let p = cfg.params.physical();
    let rows = rows(cfg)?;
    let col = cfg.label_column();
    let qs = ratios(cfg)?;
    let ns = cfg.n_values();
    let k = (cfg.sweep.samples - 1) as f64;
    let times: Vec<f64> = (0..cfg.sweep.samples).map(|i| cfg.sweep.t_end * i as f64 / k).collect();
    let tasks = grid3(rows.len(), &ns, &qs);
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(r, n, q)| {
            let (e, pp) = fixed_cooperativity_factory(rows[r].ensemble.clone(), p, q)(n)?;
            let mut eqs = MomentEquations::new(cfg.order, e, pp)?;
            let y0 = eqs.initial_state(&vec![-1.0; eqs.layout().clusters()])?;
            run_trajectory(&mut eqs, &y0, &cfg.integrator, &times)
        })
        .collect();
    let mut failure = None;
    let mut series = Vec::new();
    for (&(r, n, q), res) in tasks.iter().zip(results) {
        let tag = format!("{col}{}_n{n}_r{q}", rows[r].label);
        match res {
            Ok(tr) => {
                out.write(&format!("evolve_{tag}.csv"), &tr.to_csv())?;
                if let Some(o) = &tr.unphysical {
                    failure = Failure::worse(failure, Failure::Unphysical(format!("{tag}: {o:?}")));
                }
                series.push(Series { name: tag, points: tr.samples.iter().map(|s| (s.t, s.abs_a_sq())).collect() });
            }
            Err(e) => failure = Failure::worse(failure, Failure::from_error(&e, &tag)),
        }
    }
    out.chart("evolve.svg", &format!("{} time traces", cfg.order), ("t (us)", "|<a>|^2"), &series, (false, false))?;
    failure.map_or(Ok(()), Err)
}

struct StationaryPoint {
    row: usize,
    n: f64,
    q: f64,
    eta: f64,
    result: Result<(f64, f64, f64), Error>,
}

/// CE1 and chosen-order stationary amplitudes over rows × N × η/η⁺.
fn stationary_table(cfg: &RunConfig, rows: &[crate::config::Row]) -> Result<Vec<StationaryPoint>, Failure> {
    let p = cfg.params.physical();
    let qs = ratios(cfg)?;
    let ns = cfg.n_values();
    let tasks = grid3(rows.len(), &ns, &qs);
    Ok(tasks
        .into_par_iter()
        .map(|(row, n, q)| {
            let scaled = fixed_cooperativity_factory(rows[row].ensemble.clone(), p, q)(n);
            let eta = scaled.as_ref().map_or(f64::NAN, |(_, pp)| pp.eta);
            let result = scaled.and_then(|(e, pp)| {
                let (x1, _) = stationary_amplitude(CumulantOrder::Ce1, &e, &pp, &cfg.integrator)?;
                let (x, z) = if cfg.order == CumulantOrder::Ce1 {
                    (x1, -1.0)
                } else {
                    stationary_amplitude(cfg.order, &e, &pp, &cfg.integrator)?
                };
                Ok((x1, x, z))
            });
            StationaryPoint { row, n, q, eta, result }
        })
        .collect())
}

fn status_of(e: &Error) -> String {
    match e {
        Error::NotStationary { order, outcome } => format!("{order}_{}", outcome.label()),
        _ => "error".into(),
    }
}

fn table_csv(
    cfg: &RunConfig,
    rows: &[crate::config::Row],
    points: &[StationaryPoint],
) -> (String, Option<Failure>) {
    let col = cfg.label_column();
    let mut s = format!("{col},n,eta_over_etacrit,eta_mhz,x_ce1,x_ce,normalized,sz0,status\n");
    let mut failure = None;
    for pt in points {
        let label = rows[pt.row].label;
        let head = format!("{label},{},{},{}", pt.n, pt.q, pt.eta / mhz(1.0));
        match &pt.result {
            Ok((x1, x, z)) => {
                let norm = normalized_amplitude(*x, *x1).map_or(String::new(), |v| v.to_string());
                s.push_str(&format!("{head},{x1},{x},{norm},{z},ok\n"));
            }
            Err(e) => {
                s.push_str(&format!("{head},,,,,{}\n", status_of(e)));
                let ctx = format!("{col}={label} n={} ratio={}", pt.n, pt.q);
                failure = Failure::worse(failure, Failure::from_error(e, &ctx));
            }
        }
    }
    (s, failure)
}

/// Stationary |⟨a⟩|² against η/η⁺, one curve per (row, N).
pub fn scan(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let rows = rows(cfg)?;
    let points = stationary_table(cfg, &rows)?;
    let (csv, failure) = table_csv(cfg, &rows, &points);
    out.write("scan.csv", &csv)?;
    let mut series: Vec<Series> = Vec::new();
    for pt in &points {
        let name = format!("{}={} N={}", cfg.label_column(), rows[pt.row].label, pt.n);
        if series.last().is_none_or(|s| s.name != name) {
            series.push(Series { name, points: Vec::new() });
        }
        if let Ok((_, x, _)) = pt.result {
            series.last_mut().expect("pushed").points.push((pt.q, x));
        }
    }
    out.chart("scan.svg", &format!("{} stationary intensity", cfg.order), ("eta/eta+", "|<a>|^2"), &series, (false, false))?;
    failure.map_or(Ok(()), Err)
}

/// Normalized amplitude x_CE / x_CE1 against N, one curve per (row, η/η⁺).
pub fn normalized(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let rows = rows(cfg)?;
    let points = stationary_table(cfg, &rows)?;
    let (csv, failure) = table_csv(cfg, &rows, &points);
    out.write("normalized.csv", &csv)?;
    let mut series: Vec<Series> = Vec::new();
    for pt in &points {
        let name = format!("{}={} r={}", cfg.label_column(), rows[pt.row].label, pt.q);
        let idx = match series.iter().position(|s| s.name == name) {
            Some(i) => i,
            None => {
                series.push(Series { name, points: Vec::new() });
                series.len() - 1
            }
        };
        if let Ok((x1, x, _)) = pt.result {
            if let Ok(v) = normalized_amplitude(x, x1) {
                series[idx].points.push((pt.n, v));
            }
        }
    }
    out.chart("normalized.svg", "Normalized amplitude", ("N", "x_CE / x_CE1"), &series, (true, false))?;
    failure.map_or(Ok(()), Err)
}

fn trace_csv(col: &str, points: &[spincav::boundary::SweepPoint]) -> String {
    let mut s = format!("{col},eta_over_etacrit,n,d12,d23,d13\n");
    for p in points {
        let trace: &[TraceEntry] = match &p.result {
            Ok(b) => &b.trace,
            Err(Error::BoundaryNotFound { trace, .. }) => trace,
            Err(_) => &[],
        };
        for (n, d) in trace {
            match d {
                Some([a, b, c]) => s.push_str(&format!("{},{},{n},{a},{b},{c}\n", p.label, p.eta_ratio)),
                None => s.push_str(&format!("{},{},{n},,,\n", p.label, p.eta_ratio)),
            }
        }
    }
    s
}

/// N_sc over every (row, η/η⁺) pair.
pub fn boundary(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let p = cfg.params.physical();
    let qs = ratios(cfg)?;
    if qs.contains(&1.0) {
        return Err(Failure::Config("sweep.eta_ratios must exclude 1 (critical slowing down)".into()));
    }
    let rows: Vec<SweepRow> =
        rows(cfg)?.into_iter().map(|r| SweepRow { label: r.label, ensemble: r.ensemble, params: p }).collect();
    let col = cfg.label_column();
    let points = boundary_sweep(&rows, &qs, &cfg.boundary.settings(cfg.integrator));
    out.write("boundary.csv", &boundary_csv(col, &points))?;
    out.write("boundary_trace.csv", &trace_csv(col, &points))?;
    let mut failure = None;
    let mut series: Vec<Series> = Vec::new();
    for pt in &points {
        let name = format!("{col}={}", pt.label);
        if series.last().is_none_or(|s| s.name != name) {
            series.push(Series { name, points: Vec::new() });
        }
        match &pt.result {
            Ok(b) => series.last_mut().expect("pushed").points.push((pt.eta_ratio, b.n_sc)),
            Err(e) => {
                let ctx = format!("{col}={} ratio={}", pt.label, pt.eta_ratio);
                failure = Failure::worse(failure, Failure::from_error(e, &ctx));
            }
        }
    }
    out.chart("boundary.svg", "Semiclassical boundary", ("eta/eta+", "N_sc"), &series, (false, true))?;
    failure.map_or(Ok(()), Err)
}

/// Integer partitions of `n` in descending lexicographic order.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for k in (1..=n.min(max)).rev() {
            prefix.push(k);
            go(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// Moment equations against the exact master equation for every way of
/// grouping `spins` spins into clusters.
pub fn oracle_verify(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let o = cfg.oracle;
    if !(1..=4).contains(&o.spins) {
        return Err(Failure::Config(format!("oracle.spins must be 1..=4, got {}", o.spins)));
    }
    if o.samples == 0 {
        return Err(Failure::Config("oracle.samples must be at least 1".into()));
    }
    let parts = partitions(o.spins);
    let reports: Vec<_> = parts
        .par_iter()
        .enumerate()
        .map(|(i, w)| verify_seeded(o.seed.wrapping_add(i as u64), w, o.samples, cfg.order, o.photon_cutoff, o.max_photons))
        .collect();
    let mut summary = String::from("clusters,variables,max_residual\n");
    let mut max = 0.0f64;
    for (w, rep) in parts.iter().zip(reports) {
        let tag = w.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
        let rep = rep.map_err(|e| Failure::from_error(&e, &format!("clusters {tag}")))?;
        out.write(&format!("oracle_{tag}.csv"), &rep.to_csv())?;
        summary.push_str(&format!("{tag},{},{:e}\n", rep.rows.len(), rep.max_residual()));
        max = max.max(rep.max_residual());
    }
    out.write("oracle_summary.csv", &summary)?;
    println!("max residual {max:e}");
    Ok(())
}

/// Variable inventory of the chosen order for `clusters` clusters.
pub fn inventory(cfg: &RunConfig, clusters: Option<usize>, out: &mut Output) -> Result<(), Failure> {
    let l = match clusters {
        Some(0) => return Err(Failure::Config("--clusters must be at least 1".into())),
        Some(l) => l,
        None => rows(cfg)?[0].ensemble.len(),
    };
    let layout = StateLayout::new(cfg.order, l);
    out.write("inventory.csv", &layout.describe_csv())?;
    let mut fam = String::from("family,real_count\n");
    for (f, c) in layout.family_counts() {
        fam.push_str(&format!("{f},{c}\n"));
    }
    out.write("inventory_families.csv", &fam)?;
    println!("{}", layout.total_real_count());
    Ok(())
}
