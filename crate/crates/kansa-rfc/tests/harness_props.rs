//! Cross-module invariants of the experiment harness.

use std::collections::HashSet;

use kansa_rfc::discretization::{assemble_system, make_uniform_grid, perturb_centers};
use kansa_rfc::harness::{
    run_benchmark, run_single_trial, run_table1, trial_seed, ExperimentConfig,
};
use kansa_rfc::kernel::MQKernel;
use kansa_rfc::operators::{ProblemSpec, VelocityField};

fn cfg(n_per_side: usize, delta: f64) -> ExperimentConfig {
    ExperimentConfig {
        n_per_side,
        delta,
        trials: 1,
        ..ExperimentConfig::default()
    }
}

#[test]
fn rmse_is_continuous_in_delta_at_zero() {
    // same seed, vanishing delta: the center draw stream is identical, so
    // the solution must approach the delta=0 one
    let seed = trial_seed(42, 0);
    let base = run_single_trial(&cfg(7, 0.0), 0, seed).unwrap().rmse.unwrap();
    let mut prev_gap = f64::INFINITY;
    for delta in [1e-6, 1e-9, 1e-12] {
        let r = run_single_trial(&cfg(7, delta), 0, seed).unwrap().rmse.unwrap();
        let gap = (r - base).abs() / base;
        assert!(gap <= prev_gap.max(1e-12), "delta={delta}: gap {gap:e} grew");
        prev_gap = gap;
    }
    assert!(prev_gap < 1e-6, "delta=1e-12 gap {prev_gap:e}");
}

#[test]
fn rmse_decreases_with_refinement_small_grids() {
    let coarse = run_single_trial(&cfg(7, 0.0), 0, trial_seed(42, 0)).unwrap().rmse.unwrap();
    let fine = run_single_trial(&cfg(13, 0.0), 0, trial_seed(42, 0)).unwrap().rmse.unwrap();
    assert!(fine < coarse, "coarse {coarse:e} fine {fine:e}");
}

#[test]
fn condition_estimate_grows_with_n() {
    let c11 = run_single_trial(&cfg(11, 0.0), 0, trial_seed(42, 0))
        .unwrap()
        .condition_estimate;
    let c21 = run_single_trial(&cfg(21, 0.0), 0, trial_seed(42, 0))
        .unwrap()
        .condition_estimate;
    assert!(c11 > 1.0 && c21 > c11, "cond(11)={c11:e} cond(21)={c21:e}");
}

#[test]
fn trial_seeds_do_not_collide() {
    let mut seen = HashSet::new();
    for base in [0u64, 42, u64::MAX] {
        for index in 0..1000 {
            assert!(seen.insert(trial_seed(base, index)));
        }
    }
}

#[test]
fn benchmark_aggregate_brackets_trials() {
    let cfg = ExperimentConfig {
        n_per_side: 9,
        delta: 0.01,
        trials: 8,
        ..ExperimentConfig::default()
    };
    let agg = run_benchmark(&cfg).unwrap();
    let mut rmses = Vec::new();
    for l in 0..cfg.trials {
        let t = run_single_trial(&cfg, l, trial_seed(cfg.base_seed, l as u64)).unwrap();
        rmses.push(t.rmse.unwrap());
    }
    let min = rmses.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = rmses.iter().cloned().fold(0.0f64, f64::max);
    assert_eq!(agg.rmse_min.to_bits(), min.to_bits());
    assert_eq!(agg.rmse_max.to_bits(), max.to_bits());
    assert!(agg.rmse_geomean >= min && agg.rmse_geomean <= max);
    assert_eq!(agg.singular_count, 0);
}

#[test]
fn table1_filtered_sweep_shape() {
    let mut buf = Vec::new();
    let rows = run_table1(2.5, 1, 1, Some([1.0, 1.0]), &mut buf).unwrap();
    assert_eq!(rows.len(), 16);
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("N,n,epsilon,vx,vy,delta,m,"));
    for row in &rows {
        assert_eq!(row.config.velocity, [1.0, 1.0]);
        assert!(row.rmse_geomean.is_finite() && row.rmse_geomean > 0.0);
    }
    // sweep order: grid sizes outer, deltas inner
    assert_eq!(rows[0].config.n_per_side, 11);
    assert_eq!(rows[0].config.delta, 0.1);
    assert_eq!(rows[3].config.delta, 0.0);
    assert_eq!(rows[15].config.n_per_side, 41);
}

#[test]
fn perturbation_stream_is_shared_across_deltas() {
    // same seed, different delta: perturbations are proportional
    let grid = make_uniform_grid::<f64>(6).unwrap();
    let a = perturb_centers(&grid, 0.1, 11).unwrap();
    let b = perturb_centers(&grid, 0.01, 11).unwrap();
    for i in 0..grid.n_total() {
        let p = grid.point(i);
        for axis in 0..2 {
            let da = a.centers[i].coords[axis] - p.coords[axis];
            let db = b.centers[i].coords[axis] - p.coords[axis];
            assert!((da - 10.0 * db).abs() < 1e-12, "point {i} axis {axis}");
        }
    }
}

#[test]
fn delta_zero_assembly_has_unit_dirichlet_diagonal() {
    let kernel = MQKernel::new(2.5).unwrap();
    let spec = ProblemSpec::manufactured(kernel, VelocityField::Constant([0.0, 0.0]));
    let grid = make_uniform_grid::<f64>(5).unwrap();
    let centers = perturb_centers(&grid, 0.0, 0).unwrap();
    let sys = assemble_system(&spec, &grid, &centers).unwrap();
    for (k, bp) in grid.boundary.iter().enumerate() {
        let i = grid.n_interior() + k;
        if bp.tag == kansa_rfc::operators::BoundaryTag::Dirichlet {
            // phi(0) = 1 on the diagonal of the Dirichlet rows
            assert_eq!(sys.matrix[(i, i)], 1.0);
        }
    }
}
