use polymer_bounds::laws::Law;
use polymer_bounds::oracle::partition_by_paths;
use polymer_bounds::polymer::{dp_partition, reachable_sites, ConeSlice, Environment};
use polymer_bounds::StreamKey;

fn laws() -> [Law; 3] {
    [
        Law::Gaussian { mean: 0.0, sd: 1.0 },
        Law::Rademacher,
        Law::Bernoulli { p: 0.3, lo: -0.5, hi: 2.0 },
    ]
}

#[test]
fn dp_equals_path_enumeration() {
    for (d, n_max) in [(1u32, 6u32), (2, 5)] {
        for n in 1..=n_max {
            for rep in 0..50u64 {
                let law = laws()[rep as usize % 3];
                let beta = 0.2 + 0.03 * rep as f64;
                let lambda = law.log_mgf(beta).unwrap();
                let env = Environment::sample(d, n, &law, StreamKey::new(1000 + n as u64, rep));
                let (_, dp) = dp_partition(&env, beta, lambda);
                let brute = partition_by_paths(&env, beta, lambda);
                let rel = ((dp - brute) / brute.abs().max(1e-300)).abs();
                assert!(
                    rel < 1e-10 || (dp - brute).abs() < 1e-13,
                    "d={d} n={n} rep={rep}: dp={dp} brute={brute}"
                );
            }
        }
    }
}

#[test]
fn beta_zero_normalisation_every_environment() {
    for d in 1..=3u32 {
        for rep in 0..20u64 {
            let env = Environment::sample(d, 8, &Law::Laplace { scale: 2.0 }, StreamKey::new(3, rep));
            let (state, total) = dp_partition(&env, 0.0, 0.0);
            assert!(total.abs() < 1e-12);
            assert_eq!(state.log_w().len(), ConeSlice::new(d, 8).len());
        }
    }
}

#[test]
fn cone_sizes() {
    assert_eq!(reachable_sites(1, 2).len(), 3);
    assert_eq!(reachable_sites(2, 4).len(), 25);
    let total: usize = (1..=100).map(|k| ConeSlice::new(1, k).len()).sum();
    assert_eq!(total, 5150);
    // |L_k| in d = 3 is the number of parity-correct points of the ℓ¹ ball.
    let mut count = 0;
    for x in -4i32..=4 {
        for y in -4i32..=4 {
            for z in -4i32..=4 {
                if x.abs() + y.abs() + z.abs() <= 4 && (x + y + z).rem_euclid(2) == 0 {
                    count += 1;
                }
            }
        }
    }
    assert_eq!(reachable_sites(3, 4).len(), count);
}
