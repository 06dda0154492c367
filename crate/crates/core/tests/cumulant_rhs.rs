use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spincav::cumulant::{eval_with, ByOpList, Family, MomentEquations, ReferenceClosure, StateLayout, ValueKind};
use spincav::model::{scale_ensemble, Cluster, ClusterEnsemble, CumulantOrder, PhysicalParams};
use spincav::C64;

fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams {
    PhysicalParams {
        kappa: rng.gen_range(0.5..2.0),
        gamma_h: rng.gen_range(0.2..1.5),
        gamma_p: rng.gen_range(0.0..1.0),
        delta_c: rng.gen_range(-1.0..1.0),
        eta: rng.gen_range(0.1..2.0),
    }
}

fn random_ensemble(rng: &mut ChaCha8Rng, l: usize) -> ClusterEnsemble {
    let mut deltas: Vec<f64> = (0..l).map(|_| rng.gen_range(-3.0..3.0)).collect();
    deltas.sort_by(f64::total_cmp);
    let clusters = deltas
        .into_iter()
        .map(|d| Cluster { delta: d, g: rng.gen_range(0.1..1.5), weight: rng.gen_range(0.5..7.0) })
        .collect();
    ClusterEnsemble::new(clusters).unwrap()
}

/// Random values for every slot; diagonal `⟨σ⁺σ⁻⟩` kept real.
fn random_state(rng: &mut ChaCha8Rng, layout: &StateLayout) -> Vec<f64> {
    let mut s: Vec<f64> = (0..layout.total_real_count()).map(|_| rng.gen_range(-0.8..0.8)).collect();
    if layout.contains(Family::SpSm) {
        for mu in 0..layout.clusters() {
            let v = layout.get(&s, Family::SpSm, mu, mu);
            layout.set(&mut s, Family::SpSm, mu, mu, C64::new(v.re, 0.0));
        }
    }
    s
}

#[test]
fn fast_rhs_matches_generic_closure() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for order in CumulantOrder::ALL {
        for l in [1, 2, 3, 4] {
            for _ in 0..4 {
                let p = random_params(&mut rng);
                let e = random_ensemble(&mut rng, l);
                let mut eqs = MomentEquations::new(order, e.clone(), p).unwrap();
                let state = random_state(&mut rng, eqs.layout());
                let fast = eqs.rhs_vec(&state).unwrap();
                let layout = eqs.layout().clone();
                let reference = ByOpList::new(&e, ReferenceClosure::new(&layout, &state));
                let mut slow = vec![0.0; fast.len()];
                eval_with(&reference, &layout, &p, &mut slow);
                for (i, (a, b)) in fast.iter().zip(&slow).enumerate() {
                    assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{order} L={l} slot {i}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn uncoupled_cavity_is_a_driven_damped_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for order in CumulantOrder::ALL {
        let p = random_params(&mut rng);
        let e = random_ensemble(&mut rng, 3).with_uniform_coupling(0.0);
        let mut eqs = MomentEquations::new(order, e, p).unwrap();
        let state = random_state(&mut rng, eqs.layout());
        let d = eqs.rhs_vec(&state).unwrap();
        let l = eqs.layout();
        let a = l.get(&state, Family::A, 0, 0);
        let expected = -C64::new(p.kappa, p.delta_c) * a + p.eta;
        assert!((l.get(&d, Family::A, 0, 0) - expected).norm() < 1e-14);
    }
}

#[test]
fn first_order_closure_is_maxwell_bloch() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let p = random_params(&mut rng);
    let e = random_ensemble(&mut rng, 4);
    let mut eqs = MomentEquations::new(CumulantOrder::Ce1, e.clone(), p).unwrap();
    let state = random_state(&mut rng, eqs.layout());
    let d = eqs.rhs_vec(&state).unwrap();
    let l = eqs.layout();
    let a = l.get(&state, Family::A, 0, 0);
    let i = C64::new(0.0, 1.0);
    let mut coll = C64::new(0.0, 0.0);
    for (mu, c) in e.clusters().iter().enumerate() {
        let sm = l.get(&state, Family::Sm, mu, 0);
        let sz = l.get(&state, Family::Sz, mu, 0).re;
        coll += c.weight * c.g * sm;
        let dsm = -C64::new(p.gamma_h + 2.0 * p.gamma_p, c.delta) * sm + i * c.g * sz * a;
        let dsz = -2.0 * p.gamma_h * (sz + 1.0) + 2.0 * i * c.g * (sm * a.conj() - sm.conj() * a);
        assert!((l.get(&d, Family::Sm, mu, 0) - dsm).norm() < 1e-13);
        assert!((l.get(&d, Family::Sz, mu, 0).re - dsz.re).abs() < 1e-13);
    }
    let da = -C64::new(p.kappa, p.delta_c) * a - i * coll + p.eta;
    assert!((l.get(&d, Family::A, 0, 0) - da).norm() < 1e-13);
}

/// Every stored entry `X` and its conjugate partner obey `d(X*)/dt = (dX/dt)*`;
/// checked through the paired `⟨σ⁺σ⁻⟩` family, whose reversed entry is a
/// conjugate, by evaluating the hierarchy with the cluster labels swapped.
#[test]
fn conjugation_consistency_of_paired_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for order in [CumulantOrder::Ce2, CumulantOrder::Ce3] {
        let p = random_params(&mut rng);
        let e = random_ensemble(&mut rng, 3);
        let eqs = MomentEquations::new(order, e.clone(), p).unwrap();
        let layout = eqs.layout().clone();
        let state = random_state(&mut rng, &layout);
        let m = ByOpList::new(&e, ReferenceClosure::new(&layout, &state));
        for mu in 0..3 {
            for nu in 0..3 {
                let fwd = spincav::cumulant::derivative(&m, &p, Family::SpSm, mu, nu);
                let rev = spincav::cumulant::derivative(&m, &p, Family::SpSm, nu, mu);
                assert!((fwd - rev.conj()).norm() < 1e-12, "({mu},{nu}) {fwd} vs {rev}");
            }
        }
    }
}

#[test]
fn hermitian_families_have_real_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let p = random_params(&mut rng);
    let e = random_ensemble(&mut rng, 3);
    let eqs = MomentEquations::new(CumulantOrder::Ce3, e.clone(), p).unwrap();
    let layout = eqs.layout().clone();
    let state = random_state(&mut rng, &layout);
    let m = ByOpList::new(&e, ReferenceClosure::new(&layout, &state));
    for f in layout.families() {
        if f.kind() != ValueKind::Real {
            continue;
        }
        for (mu, nu) in layout.indices(f) {
            let d = spincav::cumulant::derivative(&m, &p, f, mu, nu);
            assert!(d.im.abs() <= 1e-12 * d.norm().max(1.0), "{f} ({mu},{nu}) {d}");
        }
    }
    for mu in 0..3 {
        let d = spincav::cumulant::derivative(&m, &p, Family::SpSm, mu, mu);
        assert!(d.im.abs() <= 1e-12 * d.norm().max(1.0));
    }
}

/// Splitting one cluster of weight `M` into two equal clusters of weight
/// `M/2` (same coupling, detunings `±ε`) with every cluster entry copied
/// from the merged state leaves the derivative unchanged up to `O(ε)`.
#[test]
fn cluster_splitting_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let eps = 1e-13;
    for order in CumulantOrder::ALL {
        let p = random_params(&mut rng);
        let (g, m) = (0.6, 9.0);
        let merged = ClusterEnsemble::new(vec![Cluster { delta: 0.0, g, weight: m }]).unwrap();
        let split = ClusterEnsemble::new(vec![
            Cluster { delta: -eps, g, weight: m / 2.0 },
            Cluster { delta: eps, g, weight: m / 2.0 },
        ])
        .unwrap();
        let mut e1 = MomentEquations::new(order, merged, p).unwrap();
        let mut e2 = MomentEquations::new(order, split, p).unwrap();
        let (l1, l2) = (e1.layout().clone(), e2.layout().clone());
        let s1 = random_state(&mut rng, &l1);
        let mut s2 = vec![0.0; l2.total_real_count()];
        for f in l2.families() {
            for (mu, nu) in l2.indices(f) {
                l2.set(&mut s2, f, mu, nu, l1.get(&s1, f, 0, 0));
            }
        }
        let d1 = e1.rhs_vec(&s1).unwrap();
        let d2 = e2.rhs_vec(&s2).unwrap();
        for f in l2.families() {
            for (mu, nu) in l2.indices(f) {
                let (a, b) = (l1.get(&d1, f, 0, 0), l2.get(&d2, f, mu, nu));
                assert!((a - b).norm() < 1e-10 * a.norm().max(1.0), "{order} {f} ({mu},{nu}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn first_order_rhs_is_scale_covariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = random_params(&mut rng);
    let e = random_ensemble(&mut rng, 3);
    let mut eqs = MomentEquations::new(CumulantOrder::Ce1, e.clone(), p).unwrap();
    let state = random_state(&mut rng, eqs.layout());
    let d = eqs.rhs_vec(&state).unwrap();
    for target in [17.0, 4.0 * e.total_spins(), 1e4] {
        let (e2, p2) = scale_ensemble(&e, &p, target).unwrap();
        let s = (target / e.total_spins()).sqrt();
        let mut eqs2 = MomentEquations::new(CumulantOrder::Ce1, e2, p2).unwrap();
        let l = eqs2.layout().clone();
        let mut state2 = state.clone();
        let a = l.get(&state, Family::A, 0, 0);
        l.set(&mut state2, Family::A, 0, 0, a * s);
        let d2 = eqs2.rhs_vec(&state2).unwrap();
        let da = l.get(&d, Family::A, 0, 0) * s;
        assert!((l.get(&d2, Family::A, 0, 0) - da).norm() < 1e-12 * da.norm().max(1.0));
        for mu in 0..3 {
            for f in [Family::Sm, Family::Sz] {
                let (x, y) = (l.get(&d, f, mu, 0), l.get(&d2, f, mu, 0));
                assert!((x - y).norm() < 1e-12 * x.norm().max(1.0));
            }
        }
    }
}
