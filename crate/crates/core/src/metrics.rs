//! Pose error metrics, reported in degrees where they are angles.

use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Angle of `R_gt Rᵀ`, in degrees: `arccos((trace − 1) / 2)`.
///
/// Evaluated as `atan2(sin, cos)` with the sine taken from the skew part, which
/// equals the arccos form but keeps full precision near zero.
pub fn eps_rotation(r_gt: &Mat3, r: &Mat3) -> f64 {
    let m = r_gt * r.transpose();
    let cos = (m.trace() - 1.0) / 2.0;
    let sin = 0.5
        * Vec3::new(
            m[(2, 1)] - m[(1, 2)],
            m[(0, 2)] - m[(2, 0)],
            m[(1, 0)] - m[(0, 1)],
        )
        .norm();
    sin.atan2(cos.clamp(-1.0, 1.0)).to_degrees()
}

/// `2 ‖t_gt − t‖ / (‖t_gt‖ + ‖t‖)`, in `[0, 2]`. Zero when both are zero.
pub fn eps_translation(t_gt: &Vec3, t: &Vec3) -> f64 {
    let denom = t_gt.norm() + t.norm();
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * (t_gt - t).norm() / denom
}

/// Angle between the two translation directions, in degrees.
pub fn eps_direction(t_gt: &Vec3, t: &Vec3) -> Result<f64> {
    let (a, b) = (t_gt.norm(), t.norm());
    if a <= 1e-12 || b <= 1e-12 {
        return Err(Error::ZeroNorm);
    }
    // arccos(t_gtᵀt / (‖t_gt‖‖t‖)) in atan2 form
    Ok(t_gt.cross(t).norm().atan2(t_gt.dot(t)).to_degrees())
}

/// Root mean square of `values`; zero for an empty slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Empirical CDF evaluated at `thresholds`: fraction of `values` ≤ each one.
pub fn empirical_cdf(values: &[f64], thresholds: &[f64]) -> Vec<f64> {
    let n = values.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&x| values.iter().filter(|&&v| v <= x).count() as f64 / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_y};
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        let r = rot_x(0.3) * rot_y(-0.2);
        assert!(eps_rotation(&r, &r) < 1e-12);
        assert!((eps_rotation(&Mat3::identity(), &rot_y(10f64.to_radians())) - 10.0).abs() < 1e-12);
        let t = Vec3::new(1.0, -2.0, 0.5);
        assert!((eps_translation(&t, &-t) - 2.0).abs() < 1e-15);
        assert!((eps_direction(&t, &-t).unwrap() - 180.0).abs() < 1e-12);
        assert!(matches!(eps_direction(&t, &Vec3::zeros()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn median_and_cdf() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(empirical_cdf(&[1.0, 2.0, 3.0, 4.0], &[0.5, 2.0, 10.0]), vec![0.0, 0.5, 1.0]);
        assert!((rms(&[3.0, 4.0]) - (12.5f64).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metric_ranges(
            a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64,
            t1 in prop::array::uniform3(-5.0..5.0f64),
            t2 in prop::array::uniform3(-5.0..5.0f64),
        ) {
            let r1 = rot_x(a) * rot_y(b);
            let r2 = rot_y(c) * rot_x(b);
            prop_assert!((eps_rotation(&r1, &r2) - eps_rotation(&r2, &r1)).abs() < 1e-9);
            let (u, v) = (Vec3::from(t1), Vec3::from(t2));
            let et = eps_translation(&u, &v);
            prop_assert!((0.0..=2.0 + 1e-15).contains(&et));
            if u.norm() > 1e-6 && v.norm() > 1e-6 {
                let d = eps_direction(&u, &v).unwrap();
                prop_assert!((0.0..=180.0).contains(&d));
            }
        }
    }
}
