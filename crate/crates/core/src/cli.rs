//! Command line interface.
//!
//! Exit codes: 0 success, 1 malformed input or invalid flags, 2 solved with
//! an undefined translation scale, 3 solver failure. Errors are reported as
//! one `error: ...` line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{run_bench, BenchConfig};
use crate::error::Error;
use crate::io::{load_pose_chain, to_canonical_json, write_canonical_json, ProblemFile, SolutionFile, TruthFile};
use crate::solver::{solve, SolverMode};
use crate::synth::{apply_noise, default_rig, generate_instance, sample_motion, MotionMode, NoiseSpec, RigSpec, SceneOptions};
use crate::trajectory::{ate, position_errors};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_DEGENERATE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "genrelpose", version, about = "Relative pose of a multi-camera rig with known vertical direction from affine correspondences")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Generate a synthetic problem and its ground truth.
    Synth(SynthArgs),
    /// Run a noise sweep and write per-trial CSV.
    Bench(BenchArgs),
    /// Absolute trajectory error of a pose chain.
    Traj(TrajArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub problem: PathBuf,
    /// `full` or `linear`.
    #[arg(long, default_value = "full")]
    pub mode: String,
    /// Solution path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `random`, `forward`, `planar` or `sideways`.
    #[arg(long, default_value = "random")]
    pub mode: String,
    /// Pixels.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise_pixel: f64,
    /// Degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise_pitch: f64,
    /// Degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise_roll: f64,
    /// Recompute affine matrices at the noisy point locations.
    #[arg(long)]
    pub affine_from_noisy_points: bool,
    #[arg(long, default_value_t = 100)]
    pub planes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Problem path; the ground truth goes to `<stem>.truth.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrajArgs {
    #[arg(long)]
    pub poses: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::IllConditioned(_) | Error::Structural { .. } | Error::Eigen(_) | Error::TooFewRows(_) => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Sidecar path of a synthetic problem: `p.json` → `p.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    let stem = match out.extension() {
        Some(ext) if ext == "json" => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let mut name = stem.into_os_string();
    name.push(".truth.json");
    PathBuf::from(name)
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Failure::input),
    }
}

fn cmd_solve(args: &SolveArgs, stdout: &mut dyn Write) -> Result<u8, Failure> {
    let mode: SolverMode = args.mode.parse()?;
    let text = std::fs::read_to_string(&args.problem).map_err(|e| Failure::input(format!("{}: {e}", args.problem.display())))?;
    let problem = ProblemFile::from_json(&text)?.to_problem()?;
    let start = Instant::now();
    let report = solve(&problem.correspondences, &problem.rig, &problem.imu_i, &problem.imu_j, mode)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let solution = SolutionFile::from_report(&report, wall);
    emit(args.out.as_deref(), &to_canonical_json(&solution)?, stdout)?;
    Ok(if report.degenerate_translation { EXIT_DEGENERATE } else { EXIT_OK })
}

fn cmd_synth(args: &SynthArgs) -> Result<u8, Failure> {
    let motion: MotionMode = args.mode.parse()?;
    let noise = NoiseSpec {
        pixel_sigma: args.noise_pixel,
        pitch_sigma: args.noise_pitch,
        roll_sigma: args.noise_roll,
        affine_from_noisy_points: args.affine_from_noisy_points,
        ..Default::default()
    };
    noise.validate()?;
    if args.planes < 1 {
        return Err(Failure::input("invalid value for planes: must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let rig = default_rig(&RigSpec::default())?;
    let sample = sample_motion(motion, &mut rng);
    let opts = SceneOptions {
        n_planes: args.planes,
        ..Default::default()
    };
    let inst = generate_instance(&rig, &sample, &opts, &mut rng)?;
    let observed = apply_noise(&inst, &noise, &mut rng);
    write_canonical_json(&args.out, &ProblemFile::from_instance(&observed))?;
    write_canonical_json(&truth_path(&args.out), &TruthFile::from_instance(&inst, motion.name()))?;
    Ok(EXIT_OK)
}

fn cmd_bench(args: &BenchArgs, stdout: &mut dyn Write) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Failure::input(format!("{}: {e}", args.config.display())))?;
    let cfg = BenchConfig::from_json(&text)?;
    let report = run_bench(&cfg)?;
    emit(args.out.as_deref(), &report.to_csv(), stdout)?;
    Ok(EXIT_OK)
}

fn cmd_traj(args: &TrajArgs, stdout: &mut dyn Write) -> Result<u8, Failure> {
    let est = load_pose_chain(&args.poses).map_err(|e| Failure::input(format!("{}: {e}", args.poses.display())))?;
    let gt = load_pose_chain(&args.gt).map_err(|e| Failure::input(format!("{}: {e}", args.gt.display())))?;
    let errors = position_errors(&est, &gt)?;
    let value = ate(&est, &gt)?;
    let mut text = format!("# ate_m={value:e}\nframe,position_error_m\n");
    for (k, e) in errors.iter().enumerate() {
        text.push_str(&format!("{k},{e:e}\n"));
    }
    emit(None, &text, stdout)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{}", first.trim());
            return EXIT_INPUT;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, stdout),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a, stdout),
        Command::Traj(a) => cmd_traj(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message.replace('\n', " "));
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(truth_path(Path::new("a/p.json")), PathBuf::from("a/p.truth.json"));
        assert_eq!(truth_path(Path::new("p")), PathBuf::from("p.truth.json"));
    }

    #[test]
    fn unknown_flag_is_one_line() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["genrelpose", "solve", "--bogus"], &mut out, &mut err);
        assert_eq!(code, EXIT_INPUT);
        let msg = String::from_utf8(err).unwrap();
        assert_eq!(msg.lines().count(), 1, "{msg}");
        assert!(msg.starts_with("error:"));
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::Eigen("x".into())).code, EXIT_SOLVER);
        assert_eq!(Failure::from(Error::TooFewCorrespondences(1)).code, EXIT_INPUT);
    }
}
