//! JSON problem/solution files and text pose chains.
//!
//! JSON is written with a fixed key order and every float as a 17
//! significant digit decimal, so loading and re-saving a file reproduces it
//! byte for byte.

use std::io;
use std::path::Path;

use nalgebra::Matrix2;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::geometry::{orthonormality_error, AffineCorrespondence, ImuAttitude, Mat3, RigCamera, RigExtrinsics, Vec3};
use crate::solver::SolveReport;
use crate::synth::SyntheticInstance;
use crate::trajectory::AbsolutePose;

/// Largest accepted orthonormality error of a loaded rotation.
pub const ROTATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub id: u32,
    /// Row-major.
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<Intrinsics>,
}

#[derive(Debug, Clone, Copy, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeEntry {
    pub roll_deg: f64,
    pub pitch_deg: f64,
}

impl From<&ImuAttitude> for AttitudeEntry {
    fn from(a: &ImuAttitude) -> Self {
        Self {
            roll_deg: a.roll.to_degrees(),
            pitch_deg: a.pitch.to_degrees(),
        }
    }
}

impl From<&AttitudeEntry> for ImuAttitude {
    fn from(a: &AttitudeEntry) -> Self {
        ImuAttitude::from_degrees(a.roll_deg, a.pitch_deg)
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceEntry {
    pub cam_i: u32,
    pub cam_j: u32,
    pub x_i: Vec<f64>,
    pub x_j: Vec<f64>,
    /// `[a11, a12, a21, a22]`.
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub rig: Vec<CameraEntry>,
    pub imu_i: AttitudeEntry,
    pub imu_j: AttitudeEntry,
    pub correspondences: Vec<CorrespondenceEntry>,
    /// Points and affine matrices are given in pixels and converted with the
    /// per-camera intrinsics on load.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub points_in_pixels: bool,
}

/// Inputs of [`crate::solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub rig: RigExtrinsics,
    pub imu_i: ImuAttitude,
    pub imu_j: ImuAttitude,
    pub correspondences: Vec<AffineCorrespondence>,
}

fn fixed<const N: usize>(v: &[f64], field: impl Fn() -> String) -> Result<[f64; N]> {
    let arr: [f64; N] = v
        .try_into()
        .map_err(|_| Error::format(field(), format!("expected {N} numbers, got {}", v.len())))?;
    if let Some(bad) = arr.iter().find(|x| !x.is_finite()) {
        return Err(Error::format(field(), format!("non-finite value {bad}")));
    }
    Ok(arr)
}

pub fn rotation_from_row_major(v: &[f64], field: impl Fn() -> String) -> Result<Mat3> {
    let r = Mat3::from_row_slice(&fixed::<9>(v, &field)?);
    let err = orthonormality_error(&r);
    if err > ROTATION_TOL {
        return Err(Error::format(field(), format!("not a rotation (orthonormality error {err:e})")));
    }
    Ok(r)
}

pub fn row_major(m: &Mat3) -> Vec<f64> {
    (0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect()
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_problem(p: &Problem) -> Self {
        Self {
            rig: p
                .rig
                .cameras()
                .iter()
                .map(|c| CameraEntry {
                    id: c.id,
                    r: row_major(&c.rotation),
                    t: c.translation.iter().copied().collect(),
                    intrinsics: None,
                })
                .collect(),
            imu_i: (&p.imu_i).into(),
            imu_j: (&p.imu_j).into(),
            correspondences: p
                .correspondences
                .iter()
                .map(|c| CorrespondenceEntry {
                    cam_i: c.cam_i,
                    cam_j: c.cam_j,
                    x_i: vec![c.x_i.x, c.x_i.y],
                    x_j: vec![c.x_j.x, c.x_j.y],
                    a: vec![c.affine[(0, 0)], c.affine[(0, 1)], c.affine[(1, 0)], c.affine[(1, 1)]],
                })
                .collect(),
            points_in_pixels: false,
        }
    }

    pub fn from_instance(inst: &SyntheticInstance) -> Self {
        Self::from_problem(&Problem {
            rig: inst.rig.clone(),
            imu_i: inst.imu_i,
            imu_j: inst.imu_j,
            correspondences: inst.correspondences.clone(),
        })
    }

    /// Validates every field and converts pixels to normalized coordinates
    /// when requested.
    pub fn to_problem(&self) -> Result<Problem> {
        let mut cameras = Vec::with_capacity(self.rig.len());
        for (k, cam) in self.rig.iter().enumerate() {
            let rotation = rotation_from_row_major(&cam.r, || format!("rig[{k}].R"))?;
            let t = fixed::<3>(&cam.t, || format!("rig[{k}].t"))?;
            if self.points_in_pixels {
                let Some(k_) = &cam.intrinsics else {
                    return Err(Error::format(format!("rig[{k}].intrinsics"), "required when points_in_pixels is set"));
                };
                if !(k_.fx.abs() > 0.0 && k_.fy.abs() > 0.0) || ![k_.fx, k_.fy, k_.cx, k_.cy].iter().all(|v| v.is_finite()) {
                    return Err(Error::format(format!("rig[{k}].intrinsics"), "focal lengths must be finite and nonzero"));
                }
            }
            cameras.push(RigCamera::new(cam.id, rotation, Vec3::from(t)));
        }
        let rig = RigExtrinsics::new(cameras).map_err(|e| Error::format("rig", e.to_string()))?;
        let attitude = |a: &AttitudeEntry, name: &str| -> Result<ImuAttitude> {
            if !(a.roll_deg.is_finite() && a.pitch_deg.is_finite()) {
                return Err(Error::format(name, "non-finite angle"));
            }
            Ok(a.into())
        };
        let imu_i = attitude(&self.imu_i, "imu_i")?;
        let imu_j = attitude(&self.imu_j, "imu_j")?;

        let intrinsics = |id: u32| self.rig.iter().find(|c| c.id == id).and_then(|c| c.intrinsics.as_ref());
        let mut correspondences = Vec::with_capacity(self.correspondences.len());
        for (n, c) in self.correspondences.iter().enumerate() {
            for (id, which) in [(c.cam_i, "cam_i"), (c.cam_j, "cam_j")] {
                if rig.camera(id).is_err() {
                    return Err(Error::format(format!("correspondences[{n}].{which}"), format!("unknown camera id {id}")));
                }
            }
            let mut x_i = fixed::<2>(&c.x_i, || format!("correspondences[{n}].x_i"))?;
            let mut x_j = fixed::<2>(&c.x_j, || format!("correspondences[{n}].x_j"))?;
            let a = fixed::<4>(&c.a, || format!("correspondences[{n}].A"))?;
            let mut affine = Matrix2::new(a[0], a[1], a[2], a[3]);
            if self.points_in_pixels {
                let (ki, kj) = (intrinsics(c.cam_i).unwrap(), intrinsics(c.cam_j).unwrap());
                x_i = [(x_i[0] - ki.cx) / ki.fx, (x_i[1] - ki.cy) / ki.fy];
                x_j = [(x_j[0] - kj.cx) / kj.fx, (x_j[1] - kj.cy) / kj.fy];
                // A is the transposed Jacobian of the transfer
                affine = Matrix2::new(ki.fx, 0.0, 0.0, ki.fy) * affine * Matrix2::new(1.0 / kj.fx, 0.0, 0.0, 1.0 / kj.fy);
            }
            correspondences.push(AffineCorrespondence::new(c.cam_i, c.cam_j, x_i, x_j, affine));
        }
        Ok(Problem {
            rig,
            imu_i,
            imu_j,
            correspondences,
        })
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct CandidateEntry {
    pub s: f64,
    pub lambda_min: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct SolutionFile {
    pub mode: String,
    pub s: f64,
    pub theta_y_deg: f64,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub t_tilde: Vec<f64>,
    pub lambda_min: f64,
    /// Ascending `lambda_min`.
    pub candidates: Vec<CandidateEntry>,
    pub companion_size: usize,
    pub degenerate_translation: bool,
    pub fallback: bool,
    pub wall_time_ms: f64,
}

impl SolutionFile {
    pub fn from_report(report: &SolveReport, wall_time_ms: f64) -> Self {
        Self {
            mode: report.mode.name().into(),
            s: report.aligned.s,
            theta_y_deg: report.theta_y().to_degrees(),
            r: row_major(&report.relative.rotation),
            t: report.relative.translation.iter().copied().collect(),
            t_tilde: report.aligned.t_tilde.iter().copied().collect(),
            lambda_min: report.lambda_min,
            candidates: report
                .candidates
                .iter()
                .map(|c| CandidateEntry {
                    s: c.s,
                    lambda_min: c.lambda_min,
                })
                .collect(),
            companion_size: report.companion_size,
            degenerate_translation: report.degenerate_translation,
            fallback: report.fallback,
            wall_time_ms,
        }
    }
}

/// Ground truth written next to a synthetic problem.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub motion: String,
    pub s: f64,
    pub theta_y_deg: f64,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub t_tilde: Vec<f64>,
    pub imu_i: AttitudeEntry,
    pub imu_j: AttitudeEntry,
}

impl TruthFile {
    pub fn from_instance(inst: &SyntheticInstance, motion: &str) -> Self {
        Self {
            motion: motion.into(),
            s: inst.pose.s,
            theta_y_deg: inst.pose.yaw().to_degrees(),
            r: row_major(&inst.relative.rotation),
            t: inst.relative.translation.iter().copied().collect(),
            t_tilde: inst.pose.t_tilde.iter().copied().collect(),
            imu_i: (&inst.imu_i).into(),
            imu_j: (&inst.imu_j).into(),
        }
    }
}

/// Pretty printing with every float as `{:.16e}`.
struct CanonicalFormatter(PrettyFormatter<'static>);

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_canonical_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_canonical_json(value)?)?;
    Ok(())
}

/// One pose per line: the 12 entries of `[R | t]` in row-major order.
pub fn parse_pose_chain(text: &str) -> Result<Vec<AbsolutePose>> {
    let mut poses = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = || format!("line {}", n + 1);
        let values = line
            .split_whitespace()
            .map(|tok| tok.parse::<f64>().map_err(|e| Error::format(field(), format!("{tok:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let v = fixed::<12>(&values, field)?;
        let r = [v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]];
        poses.push(AbsolutePose {
            rotation: rotation_from_row_major(&r, field)?,
            translation: Vec3::new(v[3], v[7], v[11]),
        });
    }
    Ok(poses)
}

pub fn load_pose_chain(path: &Path) -> Result<Vec<AbsolutePose>> {
    parse_pose_chain(&std::fs::read_to_string(path)?)
}

pub fn format_pose_chain(poses: &[AbsolutePose]) -> String {
    let mut out = String::new();
    for p in poses {
        let (r, t) = (&p.rotation, &p.translation);
        let row = |i: usize| format!("{:.16e} {:.16e} {:.16e} {:.16e}", r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]);
        out.push_str(&format!("{} {} {}\n", row(0), row(1), row(2)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_y;
    use crate::synth::{default_rig, generate_instance, sample_motion, MotionMode, RigSpec, SceneOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance() -> SyntheticInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rig = default_rig(&RigSpec::default()).unwrap();
        let motion = sample_motion(MotionMode::Random, &mut rng);
        generate_instance(&rig, &motion, &SceneOptions { n_planes: 8, ..Default::default() }, &mut rng).unwrap()
    }

    #[test]
    fn problem_round_trip_is_byte_identical() {
        let file = ProblemFile::from_instance(&instance());
        let text = to_canonical_json(&file).unwrap();
        let again = to_canonical_json(&ProblemFile::from_json(&text).unwrap()).unwrap();
        assert_eq!(text, again);
        let problem = ProblemFile::from_json(&text).unwrap().to_problem().unwrap();
        assert_eq!(problem.correspondences, instance().correspondences);
    }

    #[test]
    fn errors_name_the_field() {
        let mut file = ProblemFile::from_instance(&instance());
        file.rig[1].r[0] = 2.0;
        let err = file.to_problem().unwrap_err().to_string();
        assert!(err.contains("rig[1].R"), "{err}");

        let mut file = ProblemFile::from_instance(&instance());
        file.correspondences[3].a.pop();
        let err = file.to_problem().unwrap_err().to_string();
        assert!(err.contains("correspondences[3].A"), "{err}");

        let mut file = ProblemFile::from_instance(&instance());
        file.correspondences[0].cam_j = 99;
        let err = file.to_problem().unwrap_err().to_string();
        assert!(err.contains("correspondences[0].cam_j"), "{err}");

        let err = ProblemFile::from_json(r#"{"rig": [], "imu_i": {"roll_deg": 0, "pitch_deg": 0}}"#).unwrap_err().to_string();
        assert!(err.contains("imu_j"), "{err}");
    }

    #[test]
    fn pixel_coordinates_are_normalized() {
        let inst = instance();
        let normalized = ProblemFile::from_instance(&inst);
        let mut pixels = normalized.clone();
        let k = Intrinsics { fx: 400.0, fy: 410.0, cx: 320.0, cy: 240.0 };
        for cam in &mut pixels.rig {
            cam.intrinsics = Some(k.clone());
        }
        for c in &mut pixels.correspondences {
            c.x_i = vec![c.x_i[0] * k.fx + k.cx, c.x_i[1] * k.fy + k.cy];
            c.x_j = vec![c.x_j[0] * k.fx + k.cx, c.x_j[1] * k.fy + k.cy];
            // pixel-space transposed Jacobian: diag(1/f) A diag(f)
            c.a = vec![c.a[0], c.a[1] * k.fy / k.fx, c.a[2] * k.fx / k.fy, c.a[3]];
        }
        pixels.points_in_pixels = true;
        let a = normalized.to_problem().unwrap();
        let b = pixels.to_problem().unwrap();
        for (x, y) in a.correspondences.iter().zip(&b.correspondences) {
            assert!((x.x_i - y.x_i).amax() < 1e-14 && (x.x_j - y.x_j).amax() < 1e-14);
            assert!((x.affine - y.affine).amax() < 1e-12);
        }
    }

    #[test]
    fn pose_chain_round_trip() {
        let poses: Vec<AbsolutePose> = (0..4)
            .map(|k| AbsolutePose {
                rotation: rot_y(0.1 * k as f64),
                translation: Vec3::new(k as f64, -0.5, 0.25 * k as f64),
            })
            .collect();
        let text = format_pose_chain(&poses);
        assert_eq!(parse_pose_chain(&text).unwrap(), poses);
        assert!(parse_pose_chain("1 0 0 0 0 1 0 0 0 0 1\n").unwrap_err().to_string().contains("line 1"));
        assert!(parse_pose_chain("2 0 0 0 0 1 0 0 0 0 1 0\n").is_err());
    }
}
