//! Brute-force minimizer of `λ_min(C)` over the yaw angle, independent of the
//! polynomial eigenvalue route.

use super::select::lambda_min;
use crate::constraints::CostPoly;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub half_range_deg: f64,
    pub coarse_deg: f64,
    /// Final bracket width, in radians of yaw.
    pub refine_tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            half_range_deg: 179.0,
            coarse_deg: 0.01,
            refine_tol: 1e-10,
        }
    }
}

/// Returns `(v*, λ_min(v*))` where `v` is the cost's yaw variable.
pub fn grid_oracle(cp: &CostPoly, opts: &GridOptions) -> (f64, f64) {
    let mode = cp.mode;
    let cost = |theta: f64| lambda_min(cp, mode.variable_from_angle(theta));

    let half = opts.half_range_deg.to_radians();
    let step = opts.coarse_deg.to_radians();
    let n = (2.0 * opts.half_range_deg / opts.coarse_deg).round() as usize;
    let (mut best_theta, mut best) = (0.0f64, f64::INFINITY);
    for k in 0..=n {
        let theta = -half + k as f64 * step;
        let value = cost(theta);
        if value < best || (value == best && theta.abs() < best_theta.abs()) {
            best = value;
            best_theta = theta;
        }
    }

    // golden-section search on the bracketing cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (best_theta - step, best_theta + step);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    while b - a > opts.refine_tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = cost(x2);
        }
    }
    let mid = 0.5 * (a + b);
    let refined = cost(mid);
    let theta = if refined <= best { mid } else { best_theta };
    let v = mode.variable_from_angle(theta);
    (v, lambda_min(cp, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_cost, build_rows, stack_cost, SolverMode};
    use crate::solver::fixtures::instance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coarse() -> GridOptions {
        GridOptions {
            coarse_deg: 0.05,
            ..Default::default()
        }
    }

    #[test]
    fn noise_free_minimum_is_truth() {
        let inst = instance(21, None, 10, 0.0);
        let cp = build_cost(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap();
        let (v, _) = grid_oracle(&cp, &GridOptions::default());
        let err = (2.0 * v.atan() - inst.pose.yaw()).abs().to_degrees();
        assert!(err <= 1e-6, "{err:e}");
    }

    #[test]
    fn beats_random_probes() {
        let inst = instance(22, None, 20, 1.0);
        let cp = build_cost(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap();
        let (_, lambda) = grid_oracle(&cp, &coarse());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let theta: f64 = rng.random_range(-179f64..179.0).to_radians();
            assert!(lambda <= lambda_min(&cp, (theta / 2.0).tan()) + 1e-15);
        }
    }

    #[test]
    fn mirrored_rows_give_even_cost() {
        let inst = instance(23, None, 10, 1.0);
        let mut rows = build_rows(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap();
        let mirrored: Vec<_> = rows
            .iter()
            .map(|r| {
                let mut m = *r;
                for entry in &mut m.coeffs {
                    entry[1] = -entry[1];
                }
                m
            })
            .collect();
        rows.extend(mirrored);
        let cp = stack_cost(&rows, SolverMode::Full).unwrap();
        for v in [0.05, 0.3, 1.7] {
            assert!((lambda_min(&cp, v) - lambda_min(&cp, -v)).abs() <= 1e-12 * (1.0 + lambda_min(&cp, v)));
        }
        let (v, lambda) = grid_oracle(&cp, &coarse());
        assert!(lambda <= lambda_min(&cp, -v) + 1e-15);
    }
}
