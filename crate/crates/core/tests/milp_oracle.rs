mod support;

use mgs_core::lpcore::RowSense;
use mgs_core::{solve_milp, LpProblem, LpStatus, SolveSettings};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn compare(p: &LpProblem) {
    let settings = SolveSettings::default();
    let sol = solve_milp(p, &settings).unwrap();
    match support::enumerate_optimum(p, 1e-9) {
        Some(best) => {
            assert_eq!(sol.status, LpStatus::Optimal, "oracle found {best}");
            let tol = settings.mip_gap * best.abs().max(1.0) + 1e-9;
            assert!((sol.objective - best).abs() <= tol, "{} vs oracle {best}", sol.objective);
            for &j in &p.binary_cols {
                let v = sol.primal[j];
                assert!(v.abs() < 1e-6 || (v - 1.0).abs() < 1e-6);
            }
        }
        None => assert_eq!(sol.status, LpStatus::Infeasible),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_milps_match_enumeration(seed in any::<u64>(), b in 1usize..=6, extra in 0usize..=2, m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        compare(&support::random_milp(&mut rng, b + extra, m, b));
    }
}

#[test]
fn knapsack_with_eight_items() {
    let values = [10.0, 13.0, 7.0, 8.0, 9.0, 4.0, 6.0, 11.0];
    let weights = [5.0, 7.0, 3.0, 4.0, 5.0, 2.0, 3.0, 6.0];
    let mut p = LpProblem::new("knapsack");
    let cols: Vec<usize> = values.iter().map(|&v| p.add_binary_col(-v)).collect();
    let row: Vec<(usize, f64)> = cols.iter().zip(weights).map(|(&c, w)| (c, w)).collect();
    p.add_row(RowSense::Le, 17.0, &row);
    compare(&p);
}

#[test]
fn mode_pattern_forbids_simultaneous_flows() {
    // Charging and discharging both look attractive, but a binary mode
    // column allows only one of them per period.
    let mut p = LpProblem::new("modes");
    for _ in 0..3 {
        let up = p.add_col(-1.0, 0.0, 4.0);
        let down = p.add_col(-0.7, 0.0, 5.0);
        let u = p.add_binary_col(0.0);
        p.add_row(RowSense::Le, 0.0, &[(up, 1.0), (u, -4.0)]);
        p.add_row(RowSense::Le, 5.0, &[(down, 1.0), (u, 5.0)]);
    }
    compare(&p);
    let sol = solve_milp(&p, &SolveSettings::default()).unwrap();
    for t in 0..3 {
        assert!(sol.primal[3 * t] * sol.primal[3 * t + 1] <= 1e-9);
    }
}
