use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use inband_core::estimate::{register_similarity, RegistrationConfig, RegistrationReport};
use inband_core::grid::{extract_pow2_subregion, ImageGrid};
use inband_core::haar::{compute_difference_field, forward_haar};
use inband_core::inband::{common_levels, quantize_shift, Axis, InBandShifter};
use inband_core::io::{
    emit_csv, parse_k, parse_threshold, read_grid, read_scenarios, to_u8_stretched, write_samples,
};
use inband_core::sim::{run_experiment, SynthesisMode};
use inband_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "inband",
    version,
    about = "Sub-pixel registration on Haar wavelet coefficients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate scale, rotation and translation of SENSED against REFERENCE.
    Register {
        reference: PathBuf,
        sensed: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Skip the scale stage and assume the sizes tell the scale.
        #[arg(long)]
        no_scale: bool,
        /// Skip the rotation stage.
        #[arg(long)]
        no_rotation: bool,
        /// Also write a key=value report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the detail planes of an image translated in-band.
    Shift {
        image: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, allow_hyphen_values = true)]
        dy: f64,
        /// Levels below the finest level of the image.
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 6)]
        h_max: u32,
        /// Output prefix; `_a` and `_b` are appended before the extension.
        #[arg(long, default_value = "shifted.pgm")]
        out: PathBuf,
    },
    /// Run every scenario of a TOML file and write one CSV row per scenario.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Override the synthesis mode of every scenario.
        #[arg(long)]
        mode: Option<Mode>,
        /// Override the noise seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        est: EstimatorArgs,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Resampled,
    Exact,
}

impl From<Mode> for SynthesisMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Resampled => SynthesisMode::Resampled,
            Mode::Exact => SynthesisMode::Exact,
        }
    }
}

/// Estimator flags; unset flags keep the library default (or, for sweeps,
/// the scenario file's value).
#[derive(Args, Debug, Clone, Default)]
struct EstimatorArgs {
    #[arg(long)]
    tau: Option<f64>,
    /// Reduction level, or `auto`.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    h_max: Option<u32>,
    #[arg(long)]
    bins: Option<usize>,
    /// `universal`, `none` or `frac=P`.
    #[arg(long)]
    threshold: Option<String>,
    /// Fraction of largest detail coefficients to keep.
    #[arg(long)]
    sparsity: Option<f64>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_degenerate_input() { 1 } else { 2 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl EstimatorArgs {
    fn validate(&self) -> Result<(), Failure> {
        if let Some(t) = self.tau {
            if !(t.is_finite() && t <= 2.0) {
                return Err(usage(format!("--tau {t} must be finite and at most 2")));
            }
        }
        if let Some(p) = self.sparsity {
            if !(p > 0.0 && p <= 1.0) {
                return Err(usage(format!("--sparsity {p} outside (0, 1]")));
            }
        }
        if self.bins == Some(0) {
            return Err(usage("--bins must be positive"));
        }
        Ok(())
    }

    fn apply(&self, cfg: &mut RegistrationConfig) -> Result<(), Failure> {
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(k) = &self.k {
            cfg.k = parse_k(k).map_err(|e| usage(e.to_string()))?;
        }
        if let Some(h) = self.h_max {
            cfg.h_max = h;
        }
        if let Some(b) = self.bins {
            cfg.bins = b;
        }
        if let Some(t) = &self.threshold {
            cfg.threshold = parse_threshold(t).map_err(|e| usage(e.to_string()))?;
        }
        if self.sparsity.is_some() {
            cfg.sparsity = self.sparsity;
        }
        Ok(())
    }
}

/// Reads an image, cropping to a centred power-of-two square when needed.
fn load(path: &Path) -> Result<ImageGrid, Failure> {
    let g = read_grid(path).map_err(|e| usage(e.to_string()))?;
    let (rows, cols) = (g.rows(), g.cols());
    let img = extract_pow2_subregion(&g)?;
    if img.side() != rows || img.side() != cols {
        eprintln!(
            "note: {} is {rows}x{cols}; using its central {s}x{s} window",
            path.display(),
            s = img.side()
        );
    }
    Ok(img)
}

fn report_text(r: &RegistrationReport) -> String {
    let p = &r.params;
    let mut s = String::new();
    let _ = writeln!(s, "sigma={}", p.sigma);
    let _ = writeln!(s, "theta={}", p.theta);
    let _ = writeln!(s, "tx={}", p.tx);
    let _ = writeln!(s, "ty={}", p.ty);
    let _ = writeln!(s, "ncc={}", r.ncc());
    let _ = writeln!(s, "iterations={}", r.iterations());
    let _ = writeln!(s, "converged={}", r.converged());
    let _ = writeln!(s, "k={}", r.k);
    let _ = writeln!(s, "ms={:.3}", r.elapsed.as_secs_f64() * 1e3);
    s
}

fn register(
    reference: &Path,
    sensed: &Path,
    est: &EstimatorArgs,
    no_scale: bool,
    no_rotation: bool,
    out: Option<&Path>,
) -> Result<(), Failure> {
    est.validate()?;
    let mut cfg = RegistrationConfig::default();
    est.apply(&mut cfg)?;
    cfg.estimate_scale = !no_scale;
    cfg.estimate_rotation = !no_rotation;
    let (i, j) = (load(reference)?, load(sensed)?);
    let r = register_similarity(&i, &j, &cfg)?;
    let p = &r.params;
    println!("({}, {}, {}, {})", p.sigma, p.theta, p.tx, p.ty);
    info!(
        "ncc {} after {} iterations, converged {}",
        r.ncc(),
        r.iterations(),
        r.converged()
    );
    if let Some(path) = out {
        std::fs::write(path, report_text(&r))
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}.pgm"),
    };
    path.with_file_name(name)
}

fn shift(image: &Path, dx: f64, dy: f64, k: u32, h_max: u32, out: &Path) -> Result<(), Failure> {
    if !dx.is_finite() || !dy.is_finite() {
        return Err(usage("--dx and --dy must be finite"));
    }
    let img = load(image)?;
    let pyr = forward_haar(&img);
    let d = compute_difference_field(&pyr, pyr.levels())?;
    let (sx, sy) = common_levels(
        quantize_shift(dx, h_max, Axis::Horizontal),
        quantize_shift(dy, h_max, Axis::Vertical),
    );
    let h = sx.added_levels;
    let (a, b) = InBandShifter::new(&d).detail_planes(sx.numerator, sy.numerator, h, k + h)?;
    for (plane, suffix) in [(&a, "_a"), (&b, "_b")] {
        let path = with_suffix(out, suffix);
        write_samples(&path, &to_u8_stretched(plane), plane.cols(), plane.rows())?;
    }
    println!(
        "shift ({}, {}) at level {}: {}x{} planes",
        sx.pixels(),
        sy.pixels(),
        pyr.levels() - k,
        a.rows(),
        a.cols()
    );
    Ok(())
}

fn sweep(
    spec: &Path,
    out: &Path,
    mode: Option<Mode>,
    seed: Option<u64>,
    est: &EstimatorArgs,
) -> Result<(), Failure> {
    est.validate()?;
    let mut specs = read_scenarios(spec).map_err(|e| usage(e.to_string()))?;
    for s in &mut specs {
        est.apply(&mut s.config)?;
        if let Some(m) = mode {
            s.mode = m.into();
        }
        if let Some(seed) = seed {
            s.seed = seed;
        }
    }
    let records = run_experiment(&specs).map_err(|e| usage(e.to_string()))?;
    emit_csv(&records, out).map_err(|e| usage(e.to_string()))?;
    let failed: Vec<_> = records.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        warn!("{}: {}", r.scenario, r.error.as_deref().unwrap_or_default());
    }
    println!(
        "{} scenarios, {} failed, written to {}",
        records.len(),
        failed.len(),
        out.display()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{} scenarios failed", failed.len()),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Register {
            reference,
            sensed,
            est,
            no_scale,
            no_rotation,
            out,
        } => register(
            &reference,
            &sensed,
            &est,
            no_scale,
            no_rotation,
            out.as_deref(),
        ),
        Command::Shift {
            image,
            dx,
            dy,
            k,
            h_max,
            out,
        } => shift(&image, dx, dy, k, h_max, &out),
        Command::Sweep {
            spec,
            out,
            mode,
            seed,
            est,
        } => sweep(&spec, &out, mode, seed, &est),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("INBAND_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
