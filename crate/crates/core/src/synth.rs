//! Synthetic multi-camera scenes with exact affine correspondences, and the
//! noise models used in the evaluation.
//!
//! Cameras are 640×480 pinholes with focal length 400 px and principal point
//! (320, 240). Each scene point lies on its own random plane; the plane
//! induced homography between the two views gives the ground truth affine
//! transformation.

use nalgebra::{Matrix2, Rotation3, Unit};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{
    pairwise_transform, rot_y, unaligned_pose, AffineCorrespondence, AlignedPose, ImuAttitude,
    Mat3, RelativePose, RigCamera, RigExtrinsics, Vec3,
};

pub const FOCAL_PX: f64 = 400.0;
pub const IMAGE_WIDTH: f64 = 640.0;
pub const IMAGE_HEIGHT: f64 = 480.0;
pub const PRINCIPAL_POINT: (f64, f64) = (320.0, 240.0);

/// Maximum number of re-draws for one visible scene point.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigSpec {
    pub count: usize,
    /// Distance of every camera from the rig origin, meters.
    pub radius: f64,
}

impl Default for RigSpec {
    fn default() -> Self {
        Self {
            count: 4,
            radius: 0.5,
        }
    }
}

/// Cameras spaced evenly around the vertical axis in the `x–z` plane, each
/// looking outward along its offset. With four cameras they sit at
/// `(0, 0, r)`, `(r, 0, 0)`, `(0, 0, −r)`, `(−r, 0, 0)`.
pub fn default_rig(spec: &RigSpec) -> Result<RigExtrinsics> {
    if spec.count == 0 || !(spec.radius >= 0.0 && spec.radius.is_finite()) {
        return Err(Error::InvalidConfig(format!("invalid rig spec {spec:?}")));
    }
    let cameras = (0..spec.count)
        .map(|k| {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / spec.count as f64;
            let r = rot_y(phi);
            RigCamera::new(k as u32, r, spec.radius * r.column(2).into_owned())
        })
        .collect();
    RigExtrinsics::new(cameras)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionMode {
    Random,
    Forward,
    Planar,
    Sideways,
}

impl MotionMode {
    pub const ALL: [MotionMode; 4] = [
        MotionMode::Random,
        MotionMode::Forward,
        MotionMode::Planar,
        MotionMode::Sideways,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionMode::Random => "random",
            MotionMode::Forward => "forward",
            MotionMode::Planar => "planar",
            MotionMode::Sideways => "sideways",
        }
    }
}

impl std::str::FromStr for MotionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::format("mode", format!("expected random|forward|planar|sideways, got {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionSample {
    pub pose: AlignedPose,
    pub imu_i: ImuAttitude,
    pub imu_j: ImuAttitude,
}

/// Translation norm of sampled motions, meters.
pub const TRANSLATION_NORM: f64 = 2.0;
/// Bound on sampled yaw, roll and pitch, degrees.
pub const ANGLE_BOUND_DEG: f64 = 10.0;

fn uniform_angle(rng: &mut (impl Rng + ?Sized), bound_deg: f64) -> f64 {
    rng.random_range(-bound_deg..=bound_deg).to_radians()
}

fn random_unit(rng: &mut (impl Rng + ?Sized)) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn random_sign(rng: &mut (impl Rng + ?Sized)) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// Yaw in ±10°, roll and pitch of both frames in ±10°, and a 2 m aligned
/// translation following the motion template.
pub fn sample_motion(mode: MotionMode, rng: &mut (impl Rng + ?Sized)) -> MotionSample {
    sample_motion_with_yaw(mode, ANGLE_BOUND_DEG, rng)
}

pub fn sample_motion_with_yaw(mode: MotionMode, yaw_bound_deg: f64, rng: &mut (impl Rng + ?Sized)) -> MotionSample {
    let theta = uniform_angle(rng, yaw_bound_deg);
    let imu_i = ImuAttitude::new(uniform_angle(rng, ANGLE_BOUND_DEG), uniform_angle(rng, ANGLE_BOUND_DEG));
    let imu_j = ImuAttitude::new(uniform_angle(rng, ANGLE_BOUND_DEG), uniform_angle(rng, ANGLE_BOUND_DEG));
    let dir = match mode {
        MotionMode::Random => random_unit(rng),
        MotionMode::Forward => Vec3::new(0.0, 0.0, random_sign(rng)),
        MotionMode::Planar => {
            let psi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Vec3::new(psi.cos(), 0.0, psi.sin())
        }
        MotionMode::Sideways => Vec3::new(random_sign(rng), 0.0, 0.0),
    };
    MotionSample {
        pose: AlignedPose::from_yaw(theta, TRANSLATION_NORM * dir),
        imu_i,
        imu_j,
    }
}

/// How the two views of a scene point are paired across cameras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Same camera at both moments.
    #[default]
    SameCamera,
    /// A different camera at moment `j`, whichever sees the point.
    CrossCamera,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneOptions {
    pub n_planes: usize,
    /// Range of the point distance along the viewing ray, meters.
    pub depth_range: (f64, f64),
    /// Largest angle between plane normal and viewing ray, degrees.
    pub max_normal_angle_deg: f64,
    pub pairing: Pairing,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            n_planes: 100,
            depth_range: (4.0, 8.0),
            max_normal_angle_deg: 45.0,
            pairing: Pairing::SameCamera,
        }
    }
}

/// Scene plane `nᵀX = d` in camera `cam_i` coordinates at moment `i`, and the
/// calibrated homography it induces into camera `cam_j` at moment `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneRecord {
    pub normal: Vec3,
    pub distance: f64,
    pub homography: Mat3,
    pub point: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub rig: RigExtrinsics,
    pub pose: AlignedPose,
    pub relative: RelativePose,
    pub imu_i: ImuAttitude,
    pub imu_j: ImuAttitude,
    pub correspondences: Vec<AffineCorrespondence>,
    pub planes: Vec<PlaneRecord>,
}

pub fn to_pixels(x: &Vec3) -> (f64, f64) {
    (
        FOCAL_PX * x.x / x.z + PRINCIPAL_POINT.0,
        FOCAL_PX * x.y / x.z + PRINCIPAL_POINT.1,
    )
}

pub fn from_pixels(u: f64, v: f64) -> Vec3 {
    Vec3::new(
        (u - PRINCIPAL_POINT.0) / FOCAL_PX,
        (v - PRINCIPAL_POINT.1) / FOCAL_PX,
        1.0,
    )
}

fn in_frame(x: &Vec3) -> bool {
    if x.z <= 1e-6 {
        return false;
    }
    let (u, v) = to_pixels(x);
    (0.0..IMAGE_WIDTH).contains(&u) && (0.0..IMAGE_HEIGHT).contains(&v)
}

/// First-order affine transformation of the homography at `x_i ↦ x_j`:
/// `a11 = (h11 − h31 u_j)/b`, `a12 = (h21 − h31 v_j)/b`,
/// `a21 = (h12 − h32 u_j)/b`, `a22 = (h22 − h32 v_j)/b`, `b = h₃ᵀ x_i`.
pub fn affine_from_homography(h: &Mat3, x_i: &Vec3, x_j: &Vec3) -> Matrix2<f64> {
    let b = h.row(2).dot(&x_i.transpose());
    let (uj, vj) = (x_j.x, x_j.y);
    Matrix2::new(
        (h[(0, 0)] - h[(2, 0)] * uj) / b,
        (h[(1, 0)] - h[(2, 0)] * vj) / b,
        (h[(0, 1)] - h[(2, 1)] * uj) / b,
        (h[(1, 1)] - h[(2, 1)] * vj) / b,
    )
}

fn random_normal_near(rng: &mut (impl Rng + ?Sized), axis: &Vec3, max_angle: f64) -> Vec3 {
    let u = loop {
        let r = random_unit(rng);
        let perp = r - axis * axis.dot(&r);
        if perp.norm() > 1e-6 {
            break perp.normalize();
        }
    };
    let phi = rng.random_range(0.0..=max_angle);
    axis * phi.cos() + u * phi.sin()
}

pub fn generate_instance(
    rig: &RigExtrinsics,
    motion: &MotionSample,
    opts: &SceneOptions,
    rng: &mut (impl Rng + ?Sized),
) -> Result<SyntheticInstance> {
    let relative = unaligned_pose(&motion.pose, &motion.imu_i, &motion.imu_j);
    let cams = rig.cameras();
    let mut correspondences = Vec::with_capacity(opts.n_planes);
    let mut planes = Vec::with_capacity(opts.n_planes);

    for idx in 0..opts.n_planes {
        let cam_i = &cams[idx % cams.len()];
        let mut attempts = 0;
        let (corr, plane) = loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(Error::FrustumExhausted(MAX_ATTEMPTS));
            }
            let x_i = from_pixels(
                rng.random_range(0.0..IMAGE_WIDTH),
                rng.random_range(0.0..IMAGE_HEIGHT),
            );
            let ray = x_i.normalize();
            let depth = rng.random_range(opts.depth_range.0..=opts.depth_range.1);
            let point = ray * depth;
            let normal = random_normal_near(rng, &ray, opts.max_normal_angle_deg.to_radians());
            let distance = normal.dot(&point);

            let targets: Vec<&RigCamera> = match opts.pairing {
                Pairing::SameCamera => vec![cam_i],
                Pairing::CrossCamera => cams.iter().filter(|c| c.id != cam_i.id).collect(),
            };
            let visible = targets.into_iter().find_map(|cam_j| {
                let (r_ij, t_ij) = pairwise_transform(cam_i, cam_j, &relative);
                let xp = r_ij * point + t_ij;
                in_frame(&xp).then_some((cam_j, r_ij, t_ij, xp / xp.z))
            });
            let Some((cam_j, r_ij, t_ij, x_j)) = visible else {
                continue;
            };
            let homography = r_ij + t_ij * normal.transpose() / distance;
            let affine = affine_from_homography(&homography, &x_i, &x_j);
            break (
                AffineCorrespondence {
                    cam_i: cam_i.id,
                    cam_j: cam_j.id,
                    x_i,
                    x_j,
                    affine,
                },
                PlaneRecord {
                    normal,
                    distance,
                    homography,
                    point,
                },
            );
        };
        correspondences.push(corr);
        planes.push(plane);
    }

    Ok(SyntheticInstance {
        rig: rig.clone(),
        pose: motion.pose,
        relative,
        imu_i: motion.imu_i,
        imu_j: motion.imu_j,
        correspondences,
        planes,
    })
}

/// Noise levels. Pixel and attitude noise are zero-mean Gaussian with the
/// given standard deviation; extrinsic perturbations have exactly the given
/// magnitude in a random direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    /// Pixels.
    pub pixel_sigma: f64,
    /// Degrees.
    pub pitch_sigma: f64,
    /// Degrees.
    pub roll_sigma: f64,
    /// Rotation angle of the extrinsic perturbation, radians.
    pub extrinsic_rot_perturb: f64,
    /// Translation norm of the extrinsic perturbation, meters.
    pub extrinsic_trans_perturb: f64,
    /// Recompute each affine matrix from the true homography at the noisy
    /// point locations.
    pub affine_from_noisy_points: bool,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.pixel_sigma == 0.0
            && self.pitch_sigma == 0.0
            && self.roll_sigma == 0.0
            && self.extrinsic_rot_perturb == 0.0
            && self.extrinsic_trans_perturb == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            ("pixel_sigma", self.pixel_sigma),
            ("pitch_sigma", self.pitch_sigma),
            ("roll_sigma", self.roll_sigma),
            ("extrinsic_rot_perturb", self.extrinsic_rot_perturb),
            ("extrinsic_trans_perturb", self.extrinsic_trans_perturb),
        ];
        for (name, v) in values {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::format(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn gaussian(rng: &mut (impl Rng + ?Sized), sigma: f64) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    sigma * n
}

/// Observations as seen by the solver: noisy points, attitudes and rig. The
/// ground truth pose and planes are carried over unchanged.
pub fn apply_noise(inst: &SyntheticInstance, ns: &NoiseSpec, rng: &mut (impl Rng + ?Sized)) -> SyntheticInstance {
    let mut out = inst.clone();
    if ns.pixel_sigma > 0.0 {
        let sigma = ns.pixel_sigma / FOCAL_PX;
        for (c, plane) in out.correspondences.iter_mut().zip(&inst.planes) {
            c.x_i.x += gaussian(rng, sigma);
            c.x_i.y += gaussian(rng, sigma);
            c.x_j.x += gaussian(rng, sigma);
            c.x_j.y += gaussian(rng, sigma);
            if ns.affine_from_noisy_points {
                c.affine = affine_from_homography(&plane.homography, &c.x_i, &c.x_j);
            }
        }
    }
    for att in [&mut out.imu_i, &mut out.imu_j] {
        if ns.roll_sigma > 0.0 {
            att.roll += gaussian(rng, ns.roll_sigma.to_radians());
        }
        if ns.pitch_sigma > 0.0 {
            att.pitch += gaussian(rng, ns.pitch_sigma.to_radians());
        }
    }
    if ns.extrinsic_rot_perturb > 0.0 || ns.extrinsic_trans_perturb > 0.0 {
        for cam in out.rig.cameras_mut() {
            if ns.extrinsic_rot_perturb > 0.0 {
                let axis = Unit::new_normalize(random_unit(rng));
                let delta = Rotation3::from_axis_angle(&axis, ns.extrinsic_rot_perturb);
                cam.rotation = delta.matrix() * cam.rotation;
            }
            if ns.extrinsic_trans_perturb > 0.0 {
                cam.translation += random_unit(rng) * ns.extrinsic_trans_perturb;
            }
        }
    }
    out
}
