use spincav::cumulant::{Family, MomentEquations};
use spincav::integrate::{
    basin_scan, default_basin_grid, evolve, find_stationary, Dopri5, IntegratorConfig, Outcome,
};
use spincav::model::{saturation_photon_number, ClusterEnsemble, CumulantOrder, PhysicalParams};
use spincav::semiclassical::{critical_drives, homogeneous_steady_states};
use spincav::{Error, C64};

fn times(n: usize, t_end: f64) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

#[test]
fn decoupled_cavity_fills_exponentially() {
    let p = PhysicalParams::default().with_eta(5.0);
    for order in CumulantOrder::ALL {
        let mut eqs = MomentEquations::new(order, ClusterEnsemble::homogeneous(10.0, 0.0), p).unwrap();
        let y0 = eqs.initial_state(&[-1.0]).unwrap();
        let tr = evolve(&mut eqs, &y0, &IntegratorConfig::default(), &times(50, 3.0)).unwrap();
        assert!(tr.unphysical.is_none());
        for s in &tr.samples {
            let exact = p.eta / p.kappa * (1.0 - (-p.kappa * s.t).exp());
            assert!((s.a - C64::new(exact, 0.0)).norm() < 1e-7, "{order} t={}: {} vs {exact}", s.t, s.a);
            assert!((s.n_phot - exact * exact).abs() < 1e-6);
        }
    }
}

#[test]
fn excited_spin_decays_radiatively() {
    let p = PhysicalParams::default().with_eta(0.0);
    let mut eqs = MomentEquations::new(CumulantOrder::Ce1, ClusterEnsemble::homogeneous(1.0, 0.0), p).unwrap();
    let mut y0 = vec![0.0; eqs.dim()];
    eqs.layout().set(&mut y0, Family::Sz, 0, 0, C64::new(1.0, 0.0));
    let tr = evolve(&mut eqs, &y0, &IntegratorConfig::default(), &times(40, 2.0)).unwrap();
    for s in &tr.samples {
        let exact = -1.0 + 2.0 * (-2.0 * p.gamma_h * s.t).exp();
        assert!((s.sz[0] - exact).abs() < 1e-7, "t={}: {} vs {exact}", s.t, s.sz[0]);
    }
}

#[test]
fn stepper_error_shrinks_with_tolerance() {
    // y'' = −y, exact solution (cos t, −sin t)
    let mut f = |_: f64, y: &[f64], d: &mut [f64]| {
        d[0] = y[1];
        d[1] = -y[0];
    };
    let mut errors = Vec::new();
    for rtol in [1e-4, 1e-7, 1e-10] {
        let mut st = Dopri5::new(0.0, &[1.0, 0.0], rtol, rtol * 1e-2, 1.0);
        while st.t() < 10.0 {
            st.step(&mut f, 10.0).unwrap();
        }
        assert_eq!(st.t(), 10.0);
        let y = st.y();
        errors.push((y[0] - 10f64.cos()).abs().max((y[1] + 10f64.sin()).abs()));
    }
    assert!(errors[0] < 1e-3 && errors[1] < 1e-6 && errors[2] < 1e-9, "{errors:?}");
    assert!(errors[2] < errors[1] && errors[1] < errors[0]);
}

#[test]
fn dense_output_matches_solution_inside_steps() {
    let mut f = |_: f64, y: &[f64], d: &mut [f64]| d[0] = -2.0 * y[0];
    let mut st = Dopri5::new(0.0, &[1.0], 1e-10, 1e-12, 0.5);
    let mut out = [0.0];
    while st.t() < 3.0 {
        let t0 = st.t();
        st.step(&mut f, 3.0).unwrap();
        let tm = 0.5 * (t0 + st.t());
        st.interpolate(tm, &mut out);
        assert!((out[0] - (-2.0 * tm).exp()).abs() < 1e-9);
    }
}

#[test]
fn decoupled_cavity_stationary_intensity() {
    let p = PhysicalParams { delta_c: 1.3, ..PhysicalParams::default().with_eta(4.0) };
    for order in CumulantOrder::ALL {
        let mut eqs = MomentEquations::new(order, ClusterEnsemble::homogeneous(5.0, 0.0), p).unwrap();
        let y0 = eqs.initial_state(&[-1.0]).unwrap();
        let (y, o) = find_stationary(&mut eqs, &y0, &IntegratorConfig::default(), 0.0).unwrap();
        assert!(o.is_stationary(), "{o:?}");
        let x = eqs.layout().get(&y, Family::A, 0, 0).norm_sqr();
        let exact = p.eta * p.eta / (p.kappa * p.kappa + p.delta_c * p.delta_c);
        assert!((x - exact).abs() < 1e-6 * exact);
    }
}

#[test]
fn zero_coupling_keeps_cumulants_zero() {
    let p = PhysicalParams { delta_c: 0.4, ..PhysicalParams::default().with_eta(3.0) };
    let e = ClusterEnsemble::homogeneous(20.0, 0.0);
    let mut eqs = MomentEquations::new(CumulantOrder::Ce3, e, p).unwrap();
    let y0 = eqs.initial_state(&[-0.7]).unwrap();
    let (y, _) = find_stationary(
        &mut eqs,
        &y0,
        &IntegratorConfig { max_time: Some(10.0), ..Default::default() },
        0.0,
    )
    .unwrap();
    let l = eqs.layout();
    let g = |f| l.get(&y, f, 0, 0);
    let a = g(Family::A);
    let z = g(Family::Sz);
    let cumulants = [
        g(Family::SzA) - z * a,
        g(Family::AdA) - a.norm_sqr(),
        g(Family::AdAd) - a.conj() * a.conj(),
        g(Family::SzSz) - z * z,
        g(Family::AAA) - a * a * a,
        g(Family::AdAA) - a.conj() * a * a,
        g(Family::SzAdA) - z * a.norm_sqr(),
        g(Family::SzSzA) - z * z * a,
    ];
    for (i, c) in cumulants.iter().enumerate() {
        assert!(c.norm() < 1e-10, "cumulant {i}: {c}");
    }
}

#[test]
fn critical_drive_times_out_with_short_horizon() {
    let p = PhysicalParams::default();
    let c = 14.0;
    let e = ClusterEnsemble::with_cooperativity(100.0, c, &p);
    let n0 = saturation_photon_number(e.clusters()[0].g, p.gamma_h).unwrap();
    let eta = critical_drives(c, n0, p.kappa).unwrap().eta_plus;
    let mut eqs = MomentEquations::new(CumulantOrder::Ce1, e, p.with_eta(eta)).unwrap();
    let y0 = eqs.initial_state(&[-1.0]).unwrap();
    let cfg = IntegratorConfig { max_time: Some(20.0), ..Default::default() };
    let (_, o) = find_stationary(&mut eqs, &y0, &cfg, 1.0).unwrap();
    assert!(matches!(o, Outcome::Timeout { .. }), "{o:?}");
}

#[test]
fn first_order_relaxes_to_the_lower_branch() {
    let p = PhysicalParams::default();
    let (c, n) = (14.0, 40.0);
    let e = ClusterEnsemble::with_cooperativity(n, c, &p);
    let n0 = saturation_photon_number(e.clusters()[0].g, p.gamma_h).unwrap();
    let eta = 0.9 * critical_drives(c, n0, p.kappa).unwrap().eta_plus;
    let mut eqs = MomentEquations::new(CumulantOrder::Ce1, e, p.with_eta(eta)).unwrap();
    let y0 = eqs.initial_state(&[-1.0]).unwrap();
    let (y, o) = find_stationary(&mut eqs, &y0, &IntegratorConfig::default(), 0.9).unwrap();
    assert!(o.is_stationary());
    let x = eqs.layout().get(&y, Family::A, 0, 0).norm_sqr();
    let lower = homogeneous_steady_states(c, n0, eta, p.kappa)[0].x;
    assert!((x - lower).abs() < 1e-6 * lower, "{x} vs {lower}");
}

#[test]
fn reruns_are_bit_identical() {
    let p = PhysicalParams::default();
    let e = ClusterEnsemble::with_cooperativity(60.0, 14.0, &p);
    let run = || {
        let mut eqs = MomentEquations::new(CumulantOrder::Ce3, e.clone(), p.with_eta(30.0)).unwrap();
        let y0 = eqs.initial_state(&[-1.0]).unwrap();
        find_stationary(&mut eqs, &y0, &IntegratorConfig::default(), 0.0).unwrap()
    };
    let (y1, o1) = run();
    let (y2, o2) = run();
    assert_eq!(o1, o2);
    assert!(y1.iter().zip(&y2).all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn basin_scan_contract() {
    let p = PhysicalParams::default().with_eta(2.0);
    let mut eqs = MomentEquations::new(CumulantOrder::Ce2, ClusterEnsemble::homogeneous(10.0, 0.5), p).unwrap();
    let cfg = IntegratorConfig::default();
    assert!(matches!(basin_scan(&mut eqs, &[], &cfg, 0.0), Err(Error::Contract(_))));
    assert!(matches!(basin_scan(&mut eqs, &[-0.2], &cfg, 0.0), Err(Error::InvalidInitialState(_))));
    let r = basin_scan(&mut eqs, &default_basin_grid(), &cfg, 0.0).unwrap();
    assert_eq!(r.sz0, -1.0);
    assert_eq!(r.attempts.len(), 1);
}

#[test]
fn initial_state_is_factorized() {
    let p = PhysicalParams::default();
    let e = ClusterEnsemble::new(vec![
        spincav::model::Cluster { delta: -1.0, g: 0.3, weight: 4.0 },
        spincav::model::Cluster { delta: 1.0, g: 0.3, weight: 2.0 },
    ])
    .unwrap();
    let eqs = MomentEquations::new(CumulantOrder::Ce3, e, p).unwrap();
    let y = eqs.initial_state(&[-1.0, -0.5]).unwrap();
    let l = eqs.layout();
    assert_eq!(l.get(&y, Family::Sz, 1, 0).re, -0.5);
    assert_eq!(l.get(&y, Family::SzSz, 0, 1).re, 0.5);
    assert_eq!(l.get(&y, Family::SzSz, 1, 1).re, 0.25);
    assert_eq!(l.get(&y, Family::SzSz, 0, 0).re, 1.0);
    let nonzero = y.iter().filter(|v| **v != 0.0).count();
    assert_eq!(nonzero, 2 + 3);
    assert!(matches!(eqs.initial_state(&[0.5, -1.0]), Err(Error::InvalidInitialState(_))));
}
