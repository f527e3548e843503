//! Monte Carlo accuracy sweeps over one noise source.
//!
//! Every trial draws its scene and its noise from a ChaCha8 stream selected
//! by the trial index, so all noise levels see the same scenes and the same
//! unit noise samples, and the report does not depend on thread scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{empirical_cdf, eps_direction, eps_rotation, eps_translation, mean, median};
use crate::solver::{solve, SolverMode};
use crate::synth::{apply_noise, default_rig, generate_instance, sample_motion, MotionMode, NoiseSpec, RigSpec, SceneOptions};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GENRELPOSE_THREADS";

pub const CSV_HEADER: &str = "noise_kind,noise_level,trial,eps_r_deg,eps_t,eps_tdir_deg,solve_ms,status";

/// Thresholds of the summary CDFs, degrees.
pub const CDF_THRESHOLDS_DEG: [f64; 6] = [0.01, 0.02, 0.05, 0.1, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Pixels.
    Pixel,
    /// Degrees.
    Pitch,
    /// Degrees.
    Roll,
    /// Radians.
    ExtrinsicRotation,
    /// Meters.
    ExtrinsicTranslation,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Pixel => "pixel",
            NoiseKind::Pitch => "pitch",
            NoiseKind::Roll => "roll",
            NoiseKind::ExtrinsicRotation => "extrinsic_rotation",
            NoiseKind::ExtrinsicTranslation => "extrinsic_translation",
        }
    }

    /// `base` with this source set to `level`.
    pub fn apply(self, base: NoiseSpec, level: f64) -> NoiseSpec {
        let mut ns = base;
        match self {
            NoiseKind::Pixel => ns.pixel_sigma = level,
            NoiseKind::Pitch => ns.pitch_sigma = level,
            NoiseKind::Roll => ns.roll_sigma = level,
            NoiseKind::ExtrinsicRotation => ns.extrinsic_rot_perturb = level,
            NoiseKind::ExtrinsicTranslation => ns.extrinsic_trans_perturb = level,
        }
        ns
    }
}

/// Noise applied in every trial besides the swept source.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseNoise {
    pub pixel: f64,
    pub pitch: f64,
    pub roll: f64,
    pub extrinsic_rotation: f64,
    pub extrinsic_translation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// `random`, `forward`, `planar` or `sideways`.
    #[serde(default = "default_motion")]
    pub motion: String,
    pub noise_kind: NoiseKind,
    pub levels: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_correspondences")]
    pub correspondences: usize,
    /// `full` or `linear`.
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub base_noise: BaseNoise,
    #[serde(default)]
    pub affine_from_noisy_points: bool,
    /// Record per-trial wall time. Off by default so that reports are
    /// byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_rig_count")]
    pub rig_cameras: usize,
    #[serde(default = "default_rig_radius")]
    pub rig_radius: f64,
}

fn default_motion() -> String {
    "random".into()
}
fn default_trials() -> usize {
    1000
}
fn default_correspondences() -> usize {
    100
}
fn default_solver() -> String {
    "full".into()
}
fn default_rig_count() -> usize {
    4
}
fn default_rig_radius() -> f64 {
    0.5
}

impl BenchConfig {
    pub fn new(noise_kind: NoiseKind, levels: Vec<f64>) -> Self {
        Self {
            motion: default_motion(),
            noise_kind,
            levels,
            trials: default_trials(),
            correspondences: default_correspondences(),
            solver: default_solver(),
            seed: 0,
            base_noise: BaseNoise::default(),
            affine_from_noisy_points: false,
            timing: false,
            rig_cameras: default_rig_count(),
            rig_radius: default_rig_radius(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: BenchConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn motion_mode(&self) -> Result<MotionMode> {
        self.motion.parse()
    }

    pub fn solver_mode(&self) -> Result<SolverMode> {
        self.solver.parse()
    }

    pub fn base_spec(&self) -> NoiseSpec {
        NoiseSpec {
            pixel_sigma: self.base_noise.pixel,
            pitch_sigma: self.base_noise.pitch,
            roll_sigma: self.base_noise.roll,
            extrinsic_rot_perturb: self.base_noise.extrinsic_rotation,
            extrinsic_trans_perturb: self.base_noise.extrinsic_translation,
            affine_from_noisy_points: self.affine_from_noisy_points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.motion_mode()?;
        self.solver_mode()?;
        if self.levels.is_empty() {
            return Err(Error::format("levels", "at least one noise level is required"));
        }
        if self.trials == 0 {
            return Err(Error::format("trials", "must be positive"));
        }
        if self.correspondences < 2 {
            return Err(Error::format("correspondences", "must be at least 2"));
        }
        for &level in &self.levels {
            self.noise_kind.apply(self.base_spec(), level).validate()?;
        }
        self.base_spec().validate()?;
        default_rig(&self.rig_spec()).map(|_| ())
    }

    pub fn rig_spec(&self) -> RigSpec {
        RigSpec {
            count: self.rig_cameras,
            radius: self.rig_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    /// Translation scale undefined; direction only.
    Degenerate,
    /// The grid minimizer replaced the companion route.
    Fallback,
    Failed,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::Degenerate => "degenerate",
            TrialStatus::Fallback => "fallback",
            TrialStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub level: f64,
    pub trial: usize,
    /// Degrees; NaN when the trial failed.
    pub eps_r_deg: f64,
    pub eps_t: f64,
    /// Degrees.
    pub eps_tdir_deg: f64,
    pub solve_ms: Option<f64>,
    pub status: TrialStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_eps_r_deg: f64,
    pub median_eps_r_deg: f64,
    pub mean_eps_t: f64,
    pub median_eps_t: f64,
    pub mean_eps_tdir_deg: f64,
    pub median_eps_tdir_deg: f64,
    /// Fraction of trials below each of [`CDF_THRESHOLDS_DEG`].
    pub cdf_eps_r: Vec<f64>,
    pub cdf_eps_tdir: Vec<f64>,
}

impl LevelSummary {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub noise_kind: NoiseKind,
    pub results: Vec<TrialResult>,
    pub summaries: Vec<LevelSummary>,
}

fn scene_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial as u64);
    rng
}

fn noise_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial as u64 + 1);
    rng
}

fn run_trial(cfg: &BenchConfig, motion: MotionMode, solver: SolverMode, rig_spec: &RigSpec, level: f64, trial: usize) -> TrialResult {
    let failed = TrialResult {
        level,
        trial,
        eps_r_deg: f64::NAN,
        eps_t: f64::NAN,
        eps_tdir_deg: f64::NAN,
        solve_ms: None,
        status: TrialStatus::Failed,
    };
    let Ok(rig) = default_rig(rig_spec) else {
        return failed;
    };
    let mut rng = scene_rng(cfg.seed, trial);
    let sample = sample_motion(motion, &mut rng);
    let opts = SceneOptions {
        n_planes: cfg.correspondences,
        ..Default::default()
    };
    let Ok(inst) = generate_instance(&rig, &sample, &opts, &mut rng) else {
        return failed;
    };
    let noise = cfg.noise_kind.apply(cfg.base_spec(), level);
    let observed = apply_noise(&inst, &noise, &mut noise_rng(cfg.seed, trial));

    let start = Instant::now();
    let solved = solve(&observed.correspondences, &observed.rig, &observed.imu_i, &observed.imu_j, solver);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let Ok(report) = solved else {
        return failed;
    };

    let truth = &inst.relative;
    let est = &report.relative;
    let dir = eps_direction(&truth.translation, &est.translation);
    let status = if report.fallback {
        TrialStatus::Fallback
    } else if report.degenerate_translation || dir.is_err() {
        TrialStatus::Degenerate
    } else {
        TrialStatus::Ok
    };
    TrialResult {
        level,
        trial,
        eps_r_deg: eps_rotation(&truth.rotation, &est.rotation),
        eps_t: eps_translation(&truth.translation, &est.translation),
        eps_tdir_deg: dir.unwrap_or(f64::NAN),
        solve_ms: cfg.timing.then_some(elapsed),
        status,
    }
}

fn summarize(level: f64, results: &[TrialResult]) -> LevelSummary {
    let ok: Vec<&TrialResult> = results.iter().filter(|r| r.status != TrialStatus::Failed).collect();
    let collect = |f: fn(&TrialResult) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).filter(|v| v.is_finite()).collect() };
    let er = collect(|r| r.eps_r_deg);
    let et = collect(|r| r.eps_t);
    let ed = collect(|r| r.eps_tdir_deg);
    LevelSummary {
        level,
        trials: results.len(),
        failures: results.len() - ok.len(),
        mean_eps_r_deg: mean(&er),
        median_eps_r_deg: median(&er),
        mean_eps_t: mean(&et),
        median_eps_t: median(&et),
        mean_eps_tdir_deg: mean(&ed),
        median_eps_tdir_deg: median(&ed),
        cdf_eps_r: empirical_cdf(&er, &CDF_THRESHOLDS_DEG),
        cdf_eps_tdir: empirical_cdf(&ed, &CDF_THRESHOLDS_DEG),
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let motion = cfg.motion_mode()?;
    let solver = cfg.solver_mode()?;
    let rig_spec = cfg.rig_spec();
    let jobs: Vec<(f64, usize)> = cfg
        .levels
        .iter()
        .flat_map(|&level| (0..cfg.trials).map(move |t| (level, t)))
        .collect();
    let work = || -> Vec<TrialResult> {
        jobs.par_iter()
            .map(|&(level, trial)| run_trial(cfg, motion, solver, &rig_spec, level, trial))
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    };
    let summaries = results
        .chunks(cfg.trials)
        .zip(&cfg.levels)
        .map(|(chunk, &level)| summarize(level, chunk))
        .collect();
    Ok(BenchReport {
        noise_kind: cfg.noise_kind,
        results,
        summaries,
    })
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let kind = self.noise_kind.name();
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.results {
            let ms = r.solve_ms.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
            let _ = writeln!(
                out,
                "{kind},{},{},{},{},{},{ms},{}",
                r.level,
                r.trial,
                fmt_value(r.eps_r_deg),
                fmt_value(r.eps_t),
                fmt_value(r.eps_tdir_deg),
                r.status.name()
            );
        }
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "# {kind} level={} trials={} failures={} failure_rate={} mean_eps_r_deg={} median_eps_r_deg={} mean_eps_t={} median_eps_t={} mean_eps_tdir_deg={} median_eps_tdir_deg={}",
                s.level,
                s.trials,
                s.failures,
                s.failure_rate(),
                fmt_value(s.mean_eps_r_deg),
                fmt_value(s.median_eps_r_deg),
                fmt_value(s.mean_eps_t),
                fmt_value(s.median_eps_t),
                fmt_value(s.mean_eps_tdir_deg),
                fmt_value(s.median_eps_tdir_deg),
            );
            let cdf = |values: &[f64]| {
                CDF_THRESHOLDS_DEG
                    .iter()
                    .zip(values)
                    .map(|(t, p)| format!("{t}:{p}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(out, "# {kind} level={} cdf_eps_r_deg {}", s.level, cdf(&s.cdf_eps_r));
            let _ = writeln!(out, "# {kind} level={} cdf_eps_tdir_deg {}", s.level, cdf(&s.cdf_eps_tdir));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(kind: NoiseKind, levels: Vec<f64>) -> BenchConfig {
        BenchConfig {
            trials: 6,
            correspondences: 12,
            seed: 5,
            ..BenchConfig::new(kind, levels)
        }
    }

    #[test]
    fn row_count_and_header() {
        let report = run_bench(&smoke(NoiseKind::Pixel, vec![0.0, 1.0])).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let data = csv.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(data, 12);
        assert_eq!(report.summaries.len(), 2);
        assert!(csv.lines().any(|l| l.starts_with("# pixel level=1 ")));
    }

    #[test]
    fn zero_noise_is_exact() {
        let report = run_bench(&smoke(NoiseKind::Roll, vec![0.0])).unwrap();
        for r in &report.results {
            assert_eq!(r.status, TrialStatus::Ok);
            assert!(r.eps_r_deg <= 1e-6 && r.eps_t <= 1e-8, "{r:?}");
        }
    }

    #[test]
    fn common_random_numbers_across_levels() {
        let cfg = smoke(NoiseKind::Pixel, vec![0.5, 0.5]);
        let report = run_bench(&cfg).unwrap();
        let (a, b) = report.results.split_at(cfg.trials);
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.eps_r_deg, y.eps_r_deg);
        }
    }

    #[test]
    fn deterministic_csv() {
        let cfg = smoke(NoiseKind::Pitch, vec![0.1]);
        assert_eq!(run_bench(&cfg).unwrap().to_csv(), run_bench(&cfg).unwrap().to_csv());
    }

    #[test]
    fn timing_column() {
        let cfg = BenchConfig { timing: true, ..smoke(NoiseKind::Pixel, vec![0.0]) };
        let csv = run_bench(&cfg).unwrap().to_csv();
        let row = csv.lines().nth(1).unwrap();
        assert_ne!(row.split(',').nth(6), Some("-"));
    }

    #[test]
    fn config_parsing() {
        let cfg = BenchConfig::from_json(r#"{"noise_kind": "extrinsic_rotation", "levels": [0.01], "trials": 3}"#).unwrap();
        assert_eq!(cfg.noise_kind, NoiseKind::ExtrinsicRotation);
        assert_eq!(cfg.correspondences, 100);
        assert!(BenchConfig::from_json(r#"{"noise_kind": "pixel", "levels": []}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"noise_kind": "pixel", "levels": [-1]}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"noise_kind": "pixel", "levels": [1], "motion": "spiral"}"#).is_err());
        assert!(BenchConfig::from_json(r#"{"noise_kind": "pixel", "levels": [1], "extra": 1}"#).is_err());
    }
}
