//! Pose chaining and absolute trajectory error.

use crate::error::{Error, Result};
use crate::geometry::{Mat3, RelativePose, Vec3};

/// Absolute pose of a body frame in the world frame: `X_world = R X_body + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsolutePose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl AbsolutePose {
    pub fn identity() -> Self {
        Self {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }
}

/// Chains relative poses from the identity. Each relative pose maps frame
/// `k` coordinates into frame `k+1`, so the next absolute pose is
/// `P_{k+1} = P_k · T⁻¹`. Returns `relatives.len() + 1` poses.
pub fn accumulate_trajectory(relatives: &[RelativePose]) -> Vec<AbsolutePose> {
    let mut out = Vec::with_capacity(relatives.len() + 1);
    let mut current = AbsolutePose::identity();
    out.push(current);
    for rel in relatives {
        let r_inv = rel.rotation.transpose();
        let t_inv = -(r_inv * rel.translation);
        current = AbsolutePose {
            rotation: current.rotation * r_inv,
            translation: current.rotation * t_inv + current.translation,
        };
        out.push(current);
    }
    out
}

/// Per-frame position errors, no alignment.
pub fn position_errors(est: &[AbsolutePose], gt: &[AbsolutePose]) -> Result<Vec<f64>> {
    if est.len() != gt.len() {
        return Err(Error::LengthMismatch(est.len(), gt.len()));
    }
    Ok(est
        .iter()
        .zip(gt)
        .map(|(a, b)| (a.translation - b.translation).norm())
        .collect())
}

/// Root-mean-square position error of two trajectories sharing their first
/// frame.
pub fn ate(est: &[AbsolutePose], gt: &[AbsolutePose]) -> Result<f64> {
    let errors = position_errors(est, gt)?;
    if errors.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    Ok(crate::metrics::rms(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_y;

    fn step(theta: f64, t: Vec3) -> RelativePose {
        RelativePose::new(rot_y(theta), t)
    }

    #[test]
    fn chain_of_identities() {
        let poses = accumulate_trajectory(&[RelativePose::identity(); 3]);
        assert_eq!(poses.len(), 4);
        assert!(poses.iter().all(|p| *p == AbsolutePose::identity()));
    }

    #[test]
    fn forward_steps_accumulate() {
        // the body moves +1 along z, so points appear 1 closer
        let rel = step(0.0, Vec3::new(0.0, 0.0, -1.0));
        let poses = accumulate_trajectory(&[rel; 5]);
        assert!((poses[5].translation - Vec3::new(0.0, 0.0, 5.0)).norm() < 1e-12);
    }

    #[test]
    fn closed_square_returns_home() {
        let quarter = std::f64::consts::FRAC_PI_2;
        let rel = step(quarter, Vec3::new(0.0, 0.0, -1.0));
        let poses = accumulate_trajectory(&[rel; 4]);
        assert!(poses[4].translation.norm() < 1e-12);
        assert!((poses[4].rotation - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn ate_of_identical_chains_is_zero() {
        let rels: Vec<_> = (0..10).map(|k| step(0.01 * k as f64, Vec3::new(0.1, 0.0, -1.0))).collect();
        let a = accumulate_trajectory(&rels);
        assert_eq!(ate(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_offset() {
        let gt = [AbsolutePose::identity()];
        let delta = Vec3::new(0.3, -0.4, 1.2);
        let est = [AbsolutePose {
            translation: delta,
            ..AbsolutePose::identity()
        }];
        assert!((ate(&est, &gt).unwrap() - delta.norm()).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        let a = accumulate_trajectory(&[RelativePose::identity()]);
        assert!(matches!(ate(&a, &a[..1]), Err(Error::LengthMismatch(2, 1))));
    }
}
