//! Linear constraints on the homogeneous translation `t̂ = [t̃; 1]`.
//!
//! Every affine correspondence yields three rows `m(s)` with `m(s)ᵀ t̂ = 0`
//! at the true pose: one from the generalized epipolar constraint and two
//! from the affine constraint. In the Cayley model every row entry is
//! `(c₀ + c₁s + c₂s²) / (1 + s²)`; in the first-order yaw model the variable is
//! the yaw angle itself, the entries are affine in it and there is no
//! denominator.
//!
//! All three rows come from one bilinear form of two body-frame rays `a`
//! (moment `j`, camera `k'`) and `b` (moment `i`, camera `k`):
//!
//! ```text
//! G(a, b) = aᵀ[t]×R b + aᵀR (t_k × b) + (t_k' × a)ᵀ R b
//! ```
//!
//! with `R = R'_imuᵀ Y R_imu`, `t = R'_imuᵀ t̃`. The `t̃` coefficients are
//! `(Y R_imu b) × (R'_imu a)` and the constant column is the Plücker moment
//! part. Rows are sampled at three values of the yaw variable with the
//! polynomial yaw numerator `Y` and interpolated.

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::geometry::{
    cayley_y_numerator, small_angle_y, AffineCorrespondence, ImuAttitude, Mat3, RigCamera,
    RigExtrinsics, Vec3,
};
use crate::poly::Poly;

/// Yaw model of the cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverMode {
    /// Exact rotation in Cayley form, variable `s = tan(θ_y / 2)`.
    Full,
    /// First-order rotation `I + θ_y [ŷ]×`, variable `θ_y` in radians.
    Linearized,
}

impl SolverMode {
    /// Yaw matrix numerator at the given value of the yaw variable.
    pub fn yaw_numerator(self, v: f64) -> Mat3 {
        match self {
            SolverMode::Full => cayley_y_numerator(v),
            SolverMode::Linearized => small_angle_y(v),
        }
    }

    /// Common denominator of row entries (`1 + s²`, or 1).
    pub fn row_denominator(self, v: f64) -> f64 {
        match self {
            SolverMode::Full => 1.0 + v * v,
            SolverMode::Linearized => 1.0,
        }
    }

    /// Yaw angle in radians for a value of the yaw variable.
    pub fn yaw_angle(self, v: f64) -> f64 {
        match self {
            SolverMode::Full => 2.0 * v.atan(),
            SolverMode::Linearized => v,
        }
    }

    /// Value of the yaw variable for a yaw angle in radians.
    pub fn variable_from_angle(self, theta: f64) -> f64 {
        match self {
            SolverMode::Full => (0.5 * theta).tan(),
            SolverMode::Linearized => theta,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverMode::Full => "full",
            SolverMode::Linearized => "linear",
        }
    }
}

impl std::str::FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SolverMode::Full),
            "linear" | "linearized" => Ok(SolverMode::Linearized),
            other => Err(Error::format("mode", format!("expected full|linear, got {other:?}"))),
        }
    }
}

/// One constraint row; entry `k` holds the numerator `c₀ + c₁v + c₂v²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPoly {
    pub coeffs: [[f64; 3]; 4],
}

impl RowPoly {
    pub const ZERO: RowPoly = RowPoly {
        coeffs: [[0.0; 3]; 4],
    };

    /// Quadratic through the samples at `v = −1, 0, 1`.
    fn interpolate(at_minus: Vector4<f64>, at_zero: Vector4<f64>, at_plus: Vector4<f64>, mode: SolverMode) -> Self {
        let mut coeffs = [[0.0; 3]; 4];
        for (k, c) in coeffs.iter_mut().enumerate() {
            c[0] = at_zero[k];
            c[1] = 0.5 * (at_plus[k] - at_minus[k]);
            c[2] = match mode {
                SolverMode::Full => 0.5 * (at_plus[k] + at_minus[k]) - at_zero[k],
                SolverMode::Linearized => 0.0,
            };
        }
        RowPoly { coeffs }
    }

    /// Numerator vector at `v` (not divided by the denominator).
    pub fn numerator(&self, v: f64) -> Vector4<f64> {
        Vector4::from_fn(|k, _| {
            let [c0, c1, c2] = self.coeffs[k];
            c0 + v * (c1 + v * c2)
        })
    }

    /// Row value `m(v)` including the denominator.
    pub fn eval(&self, v: f64, mode: SolverMode) -> Vector4<f64> {
        self.numerator(v) / mode.row_denominator(v)
    }

    pub fn entry(&self, k: usize) -> Poly {
        Poly::new(self.coeffs[k].to_vec())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flatten().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Per-correspondence quantities that do not depend on the yaw.
struct RayPair<'a> {
    imu_i: Mat3,
    imu_j: Mat3,
    cam_i: &'a RigCamera,
    cam_j: &'a RigCamera,
}

impl<'a> RayPair<'a> {
    fn new(
        c: &AffineCorrespondence,
        rig: &'a RigExtrinsics,
        imu_i: &ImuAttitude,
        imu_j: &ImuAttitude,
    ) -> Result<Self> {
        Ok(Self {
            imu_i: imu_i.rotation(),
            imu_j: imu_j.rotation(),
            cam_i: rig.camera(c.cam_i)?,
            cam_j: rig.camera(c.cam_j)?,
        })
    }

    /// Coefficients of `G(a, b)` in `t̂` for the yaw matrix `yaw`.
    fn form(&self, yaw: &Mat3, a: &Vec3, b: &Vec3) -> Vector4<f64> {
        let ra = self.imu_j * a;
        let yb = yaw * (self.imu_i * b);
        let t = yb.cross(&ra);
        let moment_i = yaw * (self.imu_i * self.cam_i.translation.cross(b));
        let moment_j = self.imu_j * self.cam_j.translation.cross(a);
        Vector4::new(t.x, t.y, t.z, ra.dot(&moment_i) + moment_j.dot(&yb))
    }

    fn epipolar(&self, c: &AffineCorrespondence, yaw: &Mat3) -> Vector4<f64> {
        let f_i = (self.cam_i.rotation * c.x_i).normalize();
        let f_j = (self.cam_j.rotation * c.x_j).normalize();
        self.form(yaw, &f_j, &f_i)
    }

    fn affine(&self, c: &AffineCorrespondence, yaw: &Mat3, r: usize) -> Vector4<f64> {
        let a_row = Vector3::new(c.affine[(r, 0)], c.affine[(r, 1)], 0.0);
        let ray_j = self.cam_j.rotation * c.x_j;
        let ray_i = self.cam_i.rotation * c.x_i;
        self.form(yaw, &ray_j, &self.cam_i.rotation.column(r).into_owned())
            + self.form(yaw, &(self.cam_j.rotation * a_row), &ray_i)
    }
}

fn sampled_row(mode: SolverMode, f: impl Fn(&Mat3) -> Vector4<f64>) -> RowPoly {
    let at = |v: f64| f(&mode.yaw_numerator(v));
    RowPoly::interpolate(at(-1.0), at(0.0), at(1.0), mode)
}

/// Generalized epipolar row of one correspondence.
pub fn epipolar_row(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<RowPoly> {
    let pair = RayPair::new(c, rig, imu_i, imu_j)?;
    Ok(sampled_row(mode, |y| pair.epipolar(c, y)))
}

/// The two affine rows of one correspondence.
pub fn affine_rows(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<[RowPoly; 2]> {
    let pair = RayPair::new(c, rig, imu_i, imu_j)?;
    Ok([
        sampled_row(mode, |y| pair.affine(c, y, 0)),
        sampled_row(mode, |y| pair.affine(c, y, 1)),
    ])
}

/// Epipolar row followed by the two affine rows.
pub fn correspondence_rows(
    c: &AffineCorrespondence,
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<[RowPoly; 3]> {
    let [a0, a1] = affine_rows(c, rig, imu_i, imu_j, mode)?;
    Ok([epipolar_row(c, rig, imu_i, imu_j, mode)?, a0, a1])
}

/// Symmetric 4×4 cost `C(v) = Σ m(v) m(v)ᵀ`, stored as polynomial numerators
/// over the denominator `(1 + s²)²` (or 1 for the first-order model).
#[derive(Debug, Clone, PartialEq)]
pub struct CostPoly {
    pub entries: [[Poly; 4]; 4],
    pub rows: usize,
    pub mode: SolverMode,
}

impl CostPoly {
    pub fn denominator(&self, v: f64) -> f64 {
        let d = self.mode.row_denominator(v);
        d * d
    }

    pub fn numerator(&self, v: f64) -> Matrix4<f64> {
        Matrix4::from_fn(|a, b| self.entries[a][b].eval(v))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |m, p| m.max(p.max_abs()))
    }

    /// Copy scaled by `k` (the minimizer is unchanged for `k > 0`).
    pub fn scaled(&self, k: f64) -> CostPoly {
        CostPoly {
            entries: std::array::from_fn(|a| std::array::from_fn(|b| self.entries[a][b].scale(k))),
            rows: self.rows,
            mode: self.mode,
        }
    }
}

/// Sums the outer products of the rows as exact coefficient convolutions.
pub fn stack_cost(rows: &[RowPoly], mode: SolverMode) -> Result<CostPoly> {
    if rows.len() < 6 {
        return Err(Error::TooFewRows(rows.len()));
    }
    Ok(outer_sum(rows, mode))
}

fn outer_sum(rows: &[RowPoly], mode: SolverMode) -> CostPoly {
    let mut acc = [[[0.0; 5]; 4]; 4];
    for row in rows {
        for a in 0..4 {
            for b in a..4 {
                let (p, q) = (row.coeffs[a], row.coeffs[b]);
                for i in 0..3 {
                    for j in 0..3 {
                        acc[a][b][i + j] += p[i] * q[j];
                    }
                }
            }
        }
    }
    let entries = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Poly::new(acc[lo][hi].to_vec())
        })
    });
    CostPoly {
        entries,
        rows: rows.len(),
        mode,
    }
}

/// `C(v)` with the denominator applied.
pub fn eval_cost(cp: &CostPoly, v: f64) -> Matrix4<f64> {
    cp.numerator(v) / cp.denominator(v)
}

/// Rows of all correspondences, in input order.
pub fn build_rows(
    corrs: &[AffineCorrespondence],
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<Vec<RowPoly>> {
    let mut rows = Vec::with_capacity(3 * corrs.len());
    for c in corrs {
        rows.extend(correspondence_rows(c, rig, imu_i, imu_j, mode)?);
    }
    Ok(rows)
}

/// Cost of a set of correspondences; needs at least two of them.
pub fn build_cost(
    corrs: &[AffineCorrespondence],
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<CostPoly> {
    if corrs.len() < 2 {
        return Err(Error::TooFewCorrespondences(corrs.len()));
    }
    stack_cost(&build_rows(corrs, rig, imu_i, imu_j, mode)?, mode)
}
