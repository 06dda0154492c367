use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spincav::model::CumulantOrder;
use spincav::oracle::verify_random;

fn worst(weights: &[usize], samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = verify_random(&mut rng, weights, samples, CumulantOrder::Ce3, 7, 2).unwrap();
    for r in report.rows.iter().filter(|r| r.residual.is_some_and(|v| v > 1e-8)) {
        eprintln!("{:?} {} {} exact {} hier {} res {:?}", r.family, r.mu, r.nu, r.exact, r.hierarchy, r.residual);
    }
    report.max_residual()
}

#[test]
fn appendix_two_spins_one_cluster() {
    assert!(worst(&[2], 5, 1) < 1e-8);
}

#[test]
fn appendix_two_spins_two_clusters() {
    assert!(worst(&[1, 1], 5, 2) < 1e-8);
}

#[test]
fn appendix_three_spins() {
    assert!(worst(&[2, 1], 3, 3) < 1e-8);
    assert!(worst(&[1, 1, 1], 3, 4) < 1e-8);
}

#[test]
fn lower_orders_match_too() {
    assert!(worst(&[2], 2, 5) < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for order in [CumulantOrder::Ce1, CumulantOrder::Ce2] {
        let r = verify_random(&mut rng, &[1, 2], 2, order, 7, 2).unwrap();
        assert!(r.max_residual() < 1e-8);
    }
}
