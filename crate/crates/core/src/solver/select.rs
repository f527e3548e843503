use nalgebra::{Matrix4, SymmetricEigen, Vector4};

use super::companion::Candidate;
use crate::constraints::{eval_cost, CostPoly};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Below this `|t̂₄|` of the unit eigenvector the translation scale is
/// undefined and only its direction is returned.
pub const DEGENERATE_T4: f64 = 1e-9;

/// Smallest eigenvalue of a symmetric 4×4 matrix and its unit eigenvector.
pub fn min_eigen(m: Matrix4<f64>) -> (f64, Vector4<f64>) {
    let eig = SymmetricEigen::new(m);
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

pub fn lambda_min(cp: &CostPoly, v: f64) -> f64 {
    SymmetricEigen::new(eval_cost(cp, v)).eigenvalues.min()
}

/// Translation read from the eigenvector of the smallest eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationEstimate {
    pub lambda_min: f64,
    /// `t̃`, or a unit direction when `degenerate` is set.
    pub t_tilde: Vec3,
    pub degenerate: bool,
}

pub fn translation_at(cp: &CostPoly, v: f64) -> TranslationEstimate {
    let (lambda_min, e) = min_eigen(eval_cost(cp, v));
    let head = Vec3::new(e[0], e[1], e[2]);
    if e[3].abs() < DEGENERATE_T4 {
        let n = head.norm();
        TranslationEstimate {
            lambda_min,
            t_tilde: if n > 0.0 { head / n } else { head },
            degenerate: true,
        }
    } else {
        TranslationEstimate {
            lambda_min,
            t_tilde: head / e[3],
            degenerate: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub value: f64,
    pub translation: TranslationEstimate,
    /// Every candidate with its `λ_min`, in input order.
    pub scores: Vec<(Candidate, f64)>,
}

/// Scores every candidate by `λ_min(C(v))` and keeps the smallest; ties go to
/// the smallest `|v|`.
pub fn select_solution(candidates: &[Candidate], cp: &CostPoly) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Eigen("no candidate yaw values".into()));
    }
    let scores: Vec<(Candidate, f64)> = candidates
        .iter()
        .map(|c| (*c, lambda_min(cp, c.value)))
        .collect();
    let best = scores
        .iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| a.0.value.abs().total_cmp(&b.0.value.abs()))
        })
        .map(|(c, _)| c.value)
        .unwrap_or(0.0);
    Ok(Selection {
        value: best,
        translation: translation_at(cp, best),
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_cost, stack_cost, RowPoly, SolverMode};
    use crate::solver::companion::Provenance;
    use crate::solver::fixtures::instance;

    fn cand(value: f64) -> Candidate {
        Candidate {
            value,
            provenance: Provenance::Companion,
        }
    }

    #[test]
    fn pure_rotation_gives_zero_translation() {
        let mut inst = instance(8, None, 10, 0.0);
        inst.pose.t_tilde = Vec3::zeros();
        let inst = {
            let motion = crate::synth::MotionSample { pose: inst.pose, imu_i: inst.imu_i, imu_j: inst.imu_j };
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
            crate::synth::generate_instance(&inst.rig, &motion, &Default::default(), &mut rng).unwrap()
        };
        let cp = build_cost(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap();
        let est = translation_at(&cp, inst.pose.s);
        assert!(!est.degenerate);
        assert!(est.t_tilde.norm() <= 1e-10, "{}", est.t_tilde);
    }

    #[test]
    fn vanishing_fourth_entry_is_degenerate() {
        // rows never involve the constant column
        let rows: Vec<RowPoly> = (0..6)
            .map(|k| {
                let mut coeffs = [[0.0; 3]; 4];
                coeffs[k % 3][0] = 1.0 + k as f64;
                coeffs[(k + 1) % 3][1] = 0.5;
                RowPoly { coeffs }
            })
            .collect();
        let cp = stack_cost(&rows, SolverMode::Full).unwrap();
        // λ_min = 0 along the constant direction is not what we want here:
        // shift the spectrum so that a translation direction is smallest
        let mut cp2 = cp.clone();
        cp2.entries[3][3] = cp.entries[0][0].clone() + cp.entries[1][1].clone() + cp.entries[2][2].clone();
        let est = translation_at(&cp2, 0.0);
        assert!(est.degenerate);
        assert!((est.t_tilde.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_smaller_magnitude() {
        let rows: Vec<RowPoly> = (0..6)
            .map(|k| {
                let mut coeffs = [[0.0; 3]; 4];
                coeffs[k % 4][0] = 1.0;
                RowPoly { coeffs }
            })
            .collect();
        // constant cost: every candidate ties
        let cp = stack_cost(&rows, SolverMode::Full).unwrap();
        let sel = select_solution(&[cand(0.3), cand(-0.1), cand(0.2)], &cp).unwrap();
        let a = lambda_min(&cp, 0.3);
        let b = lambda_min(&cp, -0.1);
        if a == b {
            assert_eq!(sel.value, -0.1);
        }
        assert!(select_solution(&[], &cp).is_err());
    }
}
