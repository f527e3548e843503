use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use genrelpose::bench::{run_bench, BenchConfig, NoiseKind};
use genrelpose::constraints::{build_cost, eval_cost};
use genrelpose::geometry::{cayley_y, direct_residuals, orthonormality_error};
use genrelpose::io::{to_canonical_json, ProblemFile};
use genrelpose::metrics::eps_rotation;
use genrelpose::synth::{apply_noise, default_rig, generate_instance, sample_motion, MotionMode, NoiseSpec, RigSpec, SceneOptions, SyntheticInstance};
use genrelpose::SolverMode;

fn instance(seed: u64, mode: MotionMode, n: usize) -> SyntheticInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rig = default_rig(&RigSpec::default()).unwrap();
    let motion = sample_motion(mode, &mut rng);
    let opts = SceneOptions {
        n_planes: n,
        ..Default::default()
    };
    generate_instance(&rig, &motion, &opts, &mut rng).unwrap()
}

fn motion_mode() -> impl Strategy<Value = MotionMode> {
    prop::sample::select(MotionMode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cayley_is_a_rotation(s in -1e3f64..1e3) {
        let r = cayley_y(s);
        prop_assert!(orthonormality_error(&r) <= 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        prop_assert!((cayley_y(-s) - r.transpose()).abs().max() <= 1e-15);
    }

    #[test]
    fn rotation_error_is_symmetric(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (ra, rb) = (cayley_y((a / 2.0).tan()), cayley_y((b / 2.0).tan()));
        prop_assert_eq!(eps_rotation(&ra, &rb), eps_rotation(&rb, &ra));
    }

    #[test]
    fn noise_free_residuals_vanish(seed in any::<u64>(), mode in motion_mode()) {
        let inst = instance(seed, mode, 20);
        for c in &inst.correspondences {
            let (e, a) = direct_residuals(c, &inst.rig, &inst.imu_i, &inst.imu_j, &inst.pose).unwrap();
            prop_assert!(e.abs() <= 1e-10 && a.abs().max() <= 1e-10);
        }
    }

    #[test]
    fn cost_is_symmetric_psd(seed in any::<u64>(), s in -5.0f64..5.0, linear in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = apply_noise(&instance(seed, MotionMode::Random, 10), &NoiseSpec { pixel_sigma: 1.0, ..Default::default() }, &mut rng);
        let mode = if linear { SolverMode::Linearized } else { SolverMode::Full };
        let cp = build_cost(&inst.correspondences, &inst.rig, &inst.imu_i, &inst.imu_j, mode).unwrap();
        let c = eval_cost(&cp, s);
        prop_assert!((c - c.transpose()).abs().max() <= 1e-12 * c.abs().max());
        let lambda = SymmetricEigen::new(c).eigenvalues.min();
        prop_assert!(lambda >= -1e-12 * c.abs().max());
    }

    #[test]
    fn problem_file_round_trip(seed in any::<u64>(), mode in motion_mode()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = apply_noise(&instance(seed, mode, 5), &NoiseSpec { pixel_sigma: 1.0, pitch_sigma: 0.1, ..Default::default() }, &mut rng);
        let text = to_canonical_json(&ProblemFile::from_instance(&inst)).unwrap();
        let again = to_canonical_json(&ProblemFile::from_json(&text).unwrap()).unwrap();
        prop_assert_eq!(text, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn bench_is_reproducible(seed in any::<u64>()) {
        let mut cfg = BenchConfig::new(NoiseKind::Roll, vec![0.1, 0.2]);
        cfg.trials = 6;
        cfg.correspondences = 8;
        cfg.seed = seed;
        let (a, b) = (run_bench(&cfg).unwrap(), run_bench(&cfg).unwrap());
        prop_assert_eq!(a.to_csv(), b.to_csv());
        for s in &a.summaries {
            prop_assert_eq!(s.trials, 6);
            prop_assert!(s.failures <= s.trials);
        }
    }
}
