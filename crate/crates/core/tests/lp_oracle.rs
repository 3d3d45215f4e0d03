mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sicp_core::lp::{solve_bounded_lp, LpStatus};

fn check(seed: u64, n: usize, k: usize) -> std::result::Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lp = common::random_lp(&mut rng, n, k);
    let sol = solve_bounded_lp(&lp).unwrap();
    match common::enumerate_lp(&lp) {
        None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        Some(best) => {
            prop_assert_eq!(sol.status, LpStatus::Optimal);
            prop_assert!((sol.value - best).abs() <= 1e-9 * (1.0 + best.abs()), "{} vs {}", sol.value, best);
            let gap = (sol.value - sol.dual_value(&lp)).abs();
            prop_assert!(gap <= 1e-8 * (1.0 + sol.value.abs()), "gap {}", gap);
            let aw = &lp.a * &sol.w;
            for i in 0..n {
                prop_assert!(aw[i] >= lp.l[i] - 1e-9 && aw[i] <= lp.u[i] + 1e-9);
            }
            for j in 0..k {
                prop_assert!(sol.w[j] >= 0.0);
                prop_assert!(sol.reduced_cost(&lp, j) <= 1e-8);
            }
            for &j in &sol.basic_columns {
                prop_assert!(sol.reduced_cost(&lp, j).abs() <= 1e-8);
            }
            prop_assert!(sol.w.iter().filter(|v| **v > 0.0).count() <= n);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_basis_enumeration(seed in any::<u64>(), n in 1usize..=5, k in 1usize..=8) {
        check(seed, n, k)?;
    }
}

#[test]
fn small_fixed_instances() {
    for seed in 0..50 {
        check(seed, 4, 6).unwrap();
    }
}
