//! Global minimization of `λ_min(C(v))` over the yaw variable.
//!
//! The stationary points of the smallest eigenvalue are the common roots of
//! the characteristic equation and its `v`-derivative. With `β = α²λ` these
//! are two polynomial equations in `(v, β)`; multiplying them by powers of
//! `β` gives a square 7×7 polynomial system `B(v) J = 0` whose determinant
//! vanishes exactly at the stationary points. The roots come from the
//! eigenvalues of a block companion matrix in `z = 1/v` (the leading
//! coefficient of `B` is singular, the constant one is not), after removing
//! the structurally null columns.

pub mod charsys;
pub mod companion;
pub mod oracle;
pub mod pencil;
pub mod select;

pub use charsys::{char_polys, CharSystem};
pub use companion::{companion_eigen, Candidate, CandidateSet, Provenance};
pub use oracle::{grid_oracle, GridOptions};
pub use pencil::{build_pencil, PencilB};
pub use select::{select_solution, translation_at, Selection, TranslationEstimate};

pub use crate::constraints::SolverMode;

use crate::constraints::build_cost;
use crate::error::{Error, Result};
use crate::geometry::{unaligned_pose, AffineCorrespondence, AlignedPose, ImuAttitude, RelativePose, RigExtrinsics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    /// Yaw variable of the cost (`s`, or `θ_y` for the first-order model).
    pub value: f64,
    /// Cayley parameter of the same yaw.
    pub s: f64,
    pub lambda_min: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub mode: SolverMode,
    pub aligned: AlignedPose,
    pub relative: RelativePose,
    /// Smallest eigenvalue of the cost at the chosen yaw.
    pub lambda_min: f64,
    pub candidates: Vec<ScoredCandidate>,
    /// Zero when the grid fallback was used.
    pub companion_size: usize,
    /// Translation scale undefined; `aligned.t_tilde` is a unit direction.
    pub degenerate_translation: bool,
    /// The companion route failed and the grid minimizer was used instead.
    pub fallback: bool,
}

impl SolveReport {
    pub fn theta_y(&self) -> f64 {
        self.aligned.yaw()
    }
}

/// Relative pose from at least two affine correspondences.
///
/// In the first-order model the yaw comes from the linearized cost; the
/// rotation is then rebuilt exactly from that angle and the translation is
/// read from the exact cost at the same yaw.
pub fn solve(
    corrs: &[AffineCorrespondence],
    rig: &RigExtrinsics,
    imu_i: &ImuAttitude,
    imu_j: &ImuAttitude,
    mode: SolverMode,
) -> Result<SolveReport> {
    if corrs.len() < 2 {
        return Err(Error::TooFewCorrespondences(corrs.len()));
    }
    let cp = build_cost(corrs, rig, imu_i, imu_j, mode)?;
    let scale = cp.max_abs();
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Eigen("cost matrix is identically zero or not finite".into()));
    }
    let normalized = cp.scaled(1.0 / scale);
    let pencil = build_pencil(&char_polys(&normalized));

    let (candidates, companion_size, fallback) = match companion_eigen(&pencil) {
        Ok(set) => (set.candidates, set.companion_size, false),
        Err(Error::IllConditioned(_)) | Err(Error::Eigen(_)) => {
            let (v, _) = grid_oracle(&cp, &GridOptions::default());
            let c = Candidate {
                value: v,
                provenance: Provenance::Companion,
            };
            (vec![c], 0, true)
        }
        Err(e) => return Err(e),
    };

    let selection = select_solution(&candidates, &cp)?;
    let theta = mode.yaw_angle(selection.value);
    let s = SolverMode::Full.variable_from_angle(theta);
    let translation = match mode {
        SolverMode::Full => selection.translation,
        SolverMode::Linearized => {
            let exact = build_cost(corrs, rig, imu_i, imu_j, SolverMode::Full)?;
            translation_at(&exact, s)
        }
    };

    let aligned = AlignedPose::new(s, translation.t_tilde);
    let mut scored: Vec<ScoredCandidate> = selection
        .scores
        .iter()
        .map(|(c, l)| ScoredCandidate {
            value: c.value,
            s: SolverMode::Full.variable_from_angle(mode.yaw_angle(c.value)),
            lambda_min: *l,
            provenance: c.provenance,
        })
        .collect();
    scored.sort_by(|a, b| a.lambda_min.total_cmp(&b.lambda_min).then(a.value.abs().total_cmp(&b.value.abs())));

    Ok(SolveReport {
        mode,
        aligned,
        relative: unaligned_pose(&aligned, imu_i, imu_j),
        lambda_min: selection
            .scores
            .iter()
            .find(|(c, _)| c.value == selection.value)
            .map(|(_, l)| *l)
            .unwrap_or(translation.lambda_min),
        candidates: scored,
        companion_size,
        degenerate_translation: translation.degenerate,
        fallback,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::geometry::AlignedPose;
    use crate::synth::{apply_noise, default_rig, generate_instance, sample_motion, MotionMode, NoiseSpec, RigSpec, SceneOptions, SyntheticInstance};

    /// Random-motion instance; `yaw_deg` overrides the sampled yaw.
    pub fn instance(seed: u64, yaw_deg: Option<f64>, n: usize, pixel_sigma: f64) -> SyntheticInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rig = default_rig(&RigSpec::default()).unwrap();
        let mut motion = sample_motion(MotionMode::Random, &mut rng);
        if let Some(deg) = yaw_deg {
            motion.pose = AlignedPose::from_yaw(deg.to_radians(), motion.pose.t_tilde);
        }
        let opts = SceneOptions { n_planes: n, ..Default::default() };
        let inst = generate_instance(&rig, &motion, &opts, &mut rng).unwrap();
        apply_noise(&inst, &NoiseSpec { pixel_sigma, ..Default::default() }, &mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::instance;
    use super::*;
    use crate::metrics::eps_rotation;

    fn run(inst: &crate::synth::SyntheticInstance, mode: SolverMode) -> SolveReport {
        solve(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, mode).unwrap()
    }

    #[test]
    fn one_correspondence_is_rejected() {
        let inst = instance(1, None, 1, 0.0);
        let err = solve(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap_err();
        assert!(matches!(err, Error::TooFewCorrespondences(1)));
        assert!(err.to_string().contains("need at least 2 affine correspondences"));
    }

    #[test]
    fn noise_free_recovery() {
        for seed in 0..10 {
            let inst = instance(seed, None, 10, 0.0);
            let r = run(&inst, SolverMode::Full);
            assert!(!r.fallback && !r.degenerate_translation);
            assert!(eps_rotation(&inst.relative.rotation, &r.relative.rotation) <= 1e-6);
            let rel = (r.aligned.t_tilde - inst.pose.t_tilde).norm() / inst.pose.t_tilde.norm();
            assert!(rel <= 1e-8, "{rel:e}");
            assert_eq!(r.companion_size, 88);
        }
    }

    #[test]
    fn two_correspondences_suffice() {
        let inst = instance(4, None, 2, 0.0);
        let r = run(&inst, SolverMode::Full);
        assert!(eps_rotation(&inst.relative.rotation, &r.relative.rotation) <= 1e-6);
    }

    #[test]
    fn linearized_small_yaw() {
        let inst = instance(2, Some(0.5), 10, 0.0);
        let r = run(&inst, SolverMode::Linearized);
        assert_eq!(r.companion_size, 40);
        assert!((r.theta_y() - inst.pose.yaw()).abs().to_degrees() <= 0.01);
    }

    #[test]
    fn candidates_sorted_and_selected_is_best() {
        let inst = instance(3, None, 30, 1.0);
        let r = run(&inst, SolverMode::Full);
        assert!(r.candidates.windows(2).all(|w| w[0].lambda_min <= w[1].lambda_min));
        assert_eq!(r.candidates[0].lambda_min, r.lambda_min);
        assert!(r.candidates.iter().any(|c| c.provenance == Provenance::Injected && c.s == 0.0));
    }

    #[test]
    fn selected_yaw_is_stationary_and_global() {
        for seed in 0..5 {
            let inst = instance(100 + seed, None, 30, 1.0);
            let r = run(&inst, SolverMode::Full);
            let cp = build_cost(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, SolverMode::Full).unwrap();
            let s = r.aligned.s;
            let eig = nalgebra::SymmetricEigen::new(crate::constraints::eval_cost(&cp, s)).eigenvalues;
            let mut sorted: Vec<f64> = eig.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            if sorted[1] - sorted[0] > 1e-10 {
                let h = 1e-6;
                let d = (select::lambda_min(&cp, s + h) - select::lambda_min(&cp, s - h)) / (2.0 * h);
                assert!(d.abs() <= 1e-6 * (1.0 + r.lambda_min), "{d:e}");
            }
            for k in -1790..=1790 {
                let theta = (k as f64 * 0.1).to_radians();
                assert!(r.lambda_min <= select::lambda_min(&cp, (theta / 2.0).tan()) + 1e-12);
            }
        }
    }
}
