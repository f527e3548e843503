//! Rotations, rig description, Plücker lines and the two constraint
//! residuals evaluated directly from the essential matrices.
//!
//! Conventions: a relative pose `(R, t)` maps body coordinates at moment `i`
//! into body coordinates at moment `j`, `X_j = R X_i + t`. A rig camera
//! `(R_k, t_k)` maps camera coordinates into the body frame,
//! `X_body = R_k X_cam + t_k`. The rig-frame `y` axis is vertical, so after
//! removing roll and pitch the remaining rotation is a rotation about `y`.

use nalgebra::{Matrix2, Matrix3, Matrix6, Vector2, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Roll (about `x`) and pitch (about `z`) reported by the IMU, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuAttitude {
    pub roll: f64,
    pub pitch: f64,
}

impl ImuAttitude {
    pub fn new(roll: f64, pitch: f64) -> Self {
        Self { roll, pitch }
    }

    pub fn from_degrees(roll_deg: f64, pitch_deg: f64) -> Self {
        Self::new(roll_deg.to_radians(), pitch_deg.to_radians())
    }

    pub fn rotation(&self) -> Mat3 {
        imu_rotation(self)
    }
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `R_imu = R_x(roll) R_z(pitch)`.
pub fn imu_rotation(att: &ImuAttitude) -> Mat3 {
    rot_x(att.roll) * rot_z(att.pitch)
}

/// Rotation about `y` in Cayley form, `s = tan(θ_y / 2)`.
pub fn cayley_y(s: f64) -> Mat3 {
    cayley_y_numerator(s) / (1.0 + s * s)
}

/// `(1 + s²) · cayley_y(s)`, whose entries are polynomials of degree ≤ 2.
pub fn cayley_y_numerator(s: f64) -> Mat3 {
    let s2 = s * s;
    Mat3::new(
        1.0 - s2,
        0.0,
        2.0 * s,
        0.0,
        1.0 + s2,
        0.0,
        -2.0 * s,
        0.0,
        1.0 - s2,
    )
}

/// First-order rotation about `y`: `[1 0 θ; 0 1 0; −θ 0 1]`. Not orthonormal.
pub fn small_angle_y(theta: f64) -> Mat3 {
    Mat3::new(1.0, 0.0, theta, 0.0, 1.0, 0.0, -theta, 0.0, 1.0)
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Frobenius norm of `RᵀR − I` and `|det R − 1|`, the larger of the two.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    let gram = r.transpose() * r - Mat3::identity();
    gram.norm().max((r.determinant() - 1.0).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigCamera {
    pub id: u32,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigCamera {
    pub fn new(id: u32, rotation: Mat3, translation: Vec3) -> Self {
        Self {
            id,
            rotation,
            translation,
        }
    }
}

/// Cameras of a rig, in a fixed order, with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RigExtrinsics {
    cameras: Vec<RigCamera>,
}

impl RigExtrinsics {
    pub fn new(cameras: Vec<RigCamera>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::InvalidRig("rig has no cameras".into()));
        }
        for (i, cam) in cameras.iter().enumerate() {
            if cameras[..i].iter().any(|c| c.id == cam.id) {
                return Err(Error::InvalidRig(format!("duplicate camera id {}", cam.id)));
            }
        }
        Ok(Self { cameras })
    }

    pub fn cameras(&self) -> &[RigCamera] {
        &self.cameras
    }

    pub fn cameras_mut(&mut self) -> &mut [RigCamera] {
        &mut self.cameras
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }

    pub fn camera(&self, id: u32) -> Result<&RigCamera> {
        self.cameras
            .iter()
            .find(|c| c.id == id)
            .ok_or(Error::UnknownCamera(id))
    }
}

/// A point match between camera `cam_i` at moment `i` and camera `cam_j` at
/// moment `j`, with the local affine transformation of the match.
///
/// Points are normalized homogeneous image coordinates (third entry 1). The
/// affine matrix follows the first-order homography convention
/// `a11 = ∂u_j/∂u_i`, `a12 = ∂v_j/∂u_i`, `a21 = ∂u_j/∂v_i`, `a22 = ∂v_j/∂v_i`,
/// that is, the transpose of the Jacobian of the point transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineCorrespondence {
    pub cam_i: u32,
    pub cam_j: u32,
    pub x_i: Vec3,
    pub x_j: Vec3,
    pub affine: Matrix2<f64>,
}

impl AffineCorrespondence {
    pub fn new(cam_i: u32, cam_j: u32, x_i: [f64; 2], x_j: [f64; 2], affine: Matrix2<f64>) -> Self {
        Self {
            cam_i,
            cam_j,
            x_i: Vec3::new(x_i[0], x_i[1], 1.0),
            x_j: Vec3::new(x_j[0], x_j[1], 1.0),
            affine,
        }
    }

    /// `Â = [A 0; 0 1]`.
    pub fn affine_hat(&self) -> Mat3 {
        let a = &self.affine;
        Mat3::new(
            a[(0, 0)],
            a[(0, 1)],
            0.0,
            a[(1, 0)],
            a[(1, 1)],
            0.0,
            0.0,
            0.0,
            1.0,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerLine {
    pub direction: Vec3,
    pub moment: Vec3,
}

impl PluckerLine {
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.direction.x,
            self.direction.y,
            self.direction.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }
}

/// Ray of an image point in the rig body frame.
pub fn plucker(x: &Vec3, cam: &RigCamera) -> PluckerLine {
    let direction = (cam.rotation * x).normalize();
    PluckerLine {
        direction,
        moment: cam.translation.cross(&direction),
    }
}

/// Pose between the gravity-aligned frames: yaw `s = tan(θ_y / 2)` and
/// translation `t̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPose {
    pub s: f64,
    pub t_tilde: Vec3,
}

impl AlignedPose {
    pub fn new(s: f64, t_tilde: Vec3) -> Self {
        Self { s, t_tilde }
    }

    pub fn from_yaw(theta_y: f64, t_tilde: Vec3) -> Self {
        Self::new((0.5 * theta_y).tan(), t_tilde)
    }

    pub fn yaw(&self) -> f64 {
        2.0 * self.s.atan()
    }

    pub fn rotation(&self) -> Mat3 {
        cayley_y(self.s)
    }
}

/// Body-frame relative pose, `X_j = R X_i + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RelativePose {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }
}

/// `R = R'_imuᵀ R_y(s) R_imu`, `t = R'_imuᵀ t̃`.
pub fn unaligned_pose(p: &AlignedPose, imu_i: &ImuAttitude, imu_j: &ImuAttitude) -> RelativePose {
    let ri = imu_i.rotation();
    let rj_t = imu_j.rotation().transpose();
    RelativePose::new(rj_t * p.rotation() * ri, rj_t * p.t_tilde)
}

/// Inverse of [`unaligned_pose`] for the rotation: `R'_imu R R_imuᵀ`.
pub fn aligned_rotation(r: &Mat3, imu_i: &ImuAttitude, imu_j: &ImuAttitude) -> Mat3 {
    imu_j.rotation() * r * imu_i.rotation().transpose()
}

/// Transform from camera `cam_k` at moment `i` into camera `cam_k2` at
/// moment `j`: `R_ij = R_k'ᵀ R R_k`, `t_ij = R_k'ᵀ (R t_k + t − t_k')`.
pub fn pairwise_transform(cam_k: &RigCamera, cam_k2: &RigCamera, pose: &RelativePose) -> (Mat3, Vec3) {
    let rk2_t = cam_k2.rotation.transpose();
    let r_ij = rk2_t * pose.rotation * cam_k.rotation;
    let t_ij =
        rk2_t * (pose.rotation * cam_k.translation + pose.translation - cam_k2.translation);
    (r_ij, t_ij)
}

/// Essential matrix between two rig cameras across the two moments, in the
/// expanded form `R_k'ᵀ (R [t_k]× + [t − t_k']× R) R_k`.
///
/// The expression is linear in `R`, so it is also meaningful when `R` is the
/// first-order yaw approximation.
pub fn pairwise_essential(cam_k: &RigCamera, cam_k2: &RigCamera, pose: &RelativePose) -> Mat3 {
    let r = &pose.rotation;
    cam_k2.rotation.transpose()
        * (r * skew(&cam_k.translation) + skew(&(pose.translation - cam_k2.translation)) * r)
        * cam_k.rotation
}

/// Generalized essential matrix `[[E, R], [R, 0]]` with `E = [t]× R`.
pub fn generalized_essential(pose: &RelativePose) -> Matrix6<f64> {
    let e = skew(&pose.translation) * pose.rotation;
    let mut g = Matrix6::zeros();
    g.fixed_view_mut::<3, 3>(0, 0).copy_from(&e);
    g.fixed_view_mut::<3, 3>(0, 3).copy_from(&pose.rotation);
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&pose.rotation);
    g
}

/// Generalized epipolar residual and affine residual of one correspondence
/// at a relative pose given directly in the body frame.
pub fn residuals_at_pose(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    pose: &RelativePose,
) -> Result<(f64, Vector2<f64>)> {
    let cam_i = rig.camera(c.cam_i)?;
    let cam_j = rig.camera(c.cam_j)?;

    let line_i = plucker(&c.x_i, cam_i).to_vector();
    let line_j = plucker(&c.x_j, cam_j).to_vector();
    let epipolar = line_j.dot(&(generalized_essential(pose) * line_i));

    let e = pairwise_essential(cam_i, cam_j, pose);
    let lhs = e.transpose() * c.x_j;
    let rhs = c.affine_hat() * e * c.x_i;
    let affine = Vector2::new(lhs.x + rhs.x, lhs.y + rhs.y);

    Ok((epipolar, affine))
}

/// Residuals of one correspondence at an aligned pose: the generalized
/// epipolar residual `I'ᵀ [[E, R], [R, 0]] I` and the affine residual
/// `(E_ijᵀ x')₁,₂ + (Â E_ij x)₁,₂`.
pub fn direct_residuals(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    p: &AlignedPose,
) -> Result<(f64, Vector2<f64>)> {
    residuals_at_pose(c, rig, &unaligned_pose(p, imu_i, imu_j))
}

/// Same as [`direct_residuals`] with an arbitrary yaw matrix in place of the
/// Cayley rotation. Used to check the first-order yaw model.
pub fn direct_residuals_with_yaw(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    yaw: &Mat3,
    t_tilde: &Vec3,
) -> Result<(f64, Vector2<f64>)> {
    let ri = imu_i.rotation();
    let rj_t = imu_j.rotation().transpose();
    let pose = RelativePose::new(rj_t * yaw * ri, rj_t * t_tilde);
    residuals_at_pose(c, rig, &pose)
}
