use ndarray::Array2;
use oirs_core::split::region_sizes;
use oirs_core::{
    brute_force_grouping, compose_target_field, optimize_grouping, ratio_deviation, FieldGrid, PowerMatrix,
    SplitConfig, SplitError, SplitSpec, SplitTarget, Vec3,
};
use proptest::prelude::*;

fn matrices(rows: usize, cols: usize, m: usize, v: &[f64]) -> Vec<PowerMatrix> {
    (0..m)
        .map(|k| PowerMatrix::new(Array2::from_shape_fn((rows, cols), |(i, j)| v[(k * 7 + i * cols + j) % v.len()])).unwrap())
        .collect()
}

fn best(r: Result<oirs_core::Partition, SplitError>) -> Option<oirs_core::Partition> {
    match r {
        Ok(p) => Some(p),
        Err(SplitError::InfeasibleRatio { best, .. }) => Some(*best),
        Err(_) => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn partition_invariants(
        rows in 1usize..5, cols in 1usize..5, m in 1usize..4,
        v in prop::collection::vec(0.05..1.0f64, 5..30),
        w in prop::collection::vec(0.5..4.0f64, 3),
        seed in 0u64..100,
    ) {
        let mats = matrices(rows, cols, m, &v);
        let weights = &w[..m];
        let cfg = SplitConfig { restarts: 4, seed, ..Default::default() };
        let p = best(optimize_grouping(&mats, weights, &cfg)).unwrap();
        prop_assert_eq!(p.assignment().len(), rows * cols);
        prop_assert!(p.assignment().iter().all(|&g| g <= m));
        for g in 1..=m {
            let sum: f64 = p.assignment().iter().enumerate().filter(|(_, &a)| a == g).map(|(i, _)| mats[g - 1].get(i)).sum();
            prop_assert!((p.group_power()[g - 1] - sum).abs() < 1e-12);
        }
        prop_assert!((p.total_power() - p.group_power().iter().sum::<f64>()).abs() < 1e-12);
        prop_assert!((p.deviation(weights) - ratio_deviation(p.group_power(), weights)).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_search_dominates(
        v in prop::collection::vec(0.05..1.0f64, 6..12),
        seed in 0u64..100,
    ) {
        let mats = matrices(2, 3, 2, &v);
        let w = [1.0, 2.0];
        if let (Ok(h), Ok(b)) = (
            optimize_grouping(&mats, &w, &SplitConfig { restarts: 4, seed, ..Default::default() }),
            brute_force_grouping(&mats, &w, 0.05),
        ) {
            prop_assert!(h.total_power() <= b.total_power() + 1e-12);
        }
    }

    #[test]
    fn looser_tolerance_never_loses_power(v in prop::collection::vec(0.05..1.0f64, 6..12), eps in 0.01..0.2f64) {
        let mats = matrices(2, 3, 2, &v);
        let w = [1.0, 3.0];
        if let Ok(tight) = brute_force_grouping(&mats, &w, eps) {
            let loose = brute_force_grouping(&mats, &w, eps * 2.0).unwrap();
            prop_assert!(loose.total_power() >= tight.total_power() - 1e-12);
        }
    }

    #[test]
    fn composed_energy_counts_cells(
        k1 in 0.1..5.0f64, k2 in 0.1..5.0f64,
        x1 in -20.0..-6.0f64, x2 in 6.0..20.0f64,
        r1 in 1.0..5.0f64, r2 in 1.0..5.0f64,
    ) {
        let grid = FieldGrid::zeros(64, 64, 1.0, 1.0).unwrap();
        let t = |x: f64, k: f64, r: f64| SplitTarget { center: Vec3::new(x, 3.0, 0.0), weight: k, radius: r };
        let spec = SplitSpec::new(vec![t(x1, k1, r1), t(x2, k2, r2)]).unwrap();
        let e = compose_target_field(&spec, &grid).unwrap();
        let n = region_sizes(&grid, &spec);
        let want = (k1 * n[0] as f64 + k2 * n[1] as f64) * grid.cell_area();
        prop_assert!((e.energy() - want).abs() <= 1e-9 * want);
    }
}

#[test]
fn equal_disks_get_equal_cell_counts() {
    let grid = FieldGrid::zeros(128, 128, 0.5, 0.5).unwrap();
    let t = |x: f64, y: f64| SplitTarget { center: Vec3::new(x, y, 0.0), weight: 1.0, radius: 4.0 };
    let spec = SplitSpec::new(vec![t(10.0, 15.0), t(-15.0, -20.0), t(-20.0, 15.0)]).unwrap();
    let n = region_sizes(&grid, &spec);
    assert!(n.iter().all(|&c| c == n[0]), "{n:?}");
}

#[test]
fn impossible_ratio_reports_best_effort() {
    let mats = matrices(1, 1, 2, &[1.0]);
    match optimize_grouping(&mats, &[1.0, 1.0], &SplitConfig::default()) {
        Err(SplitError::InfeasibleRatio { best_deviation, best }) => {
            assert!(best_deviation > 0.05);
            assert_eq!(best.assignment().len(), 1);
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}
