//! Acceptance report: one PASS/FAIL line per criterion, plus INFO lines for
//! measurements that are recorded but not gated. Exits non-zero on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use inband_core::estimate::{estimate_scale, RegistrationConfig, SimilarityParams};
use inband_core::haar::forward_haar;
use inband_core::sim::{
    run_experiment, synthesize_pair, ExperimentRecord, ImageSource, NoiseTarget, ScenarioSpec,
    SceneKind, SynthesisMode,
};
use inband_core::threshold::{hard_threshold, ThresholdMode};

const LATTICE: f64 = 1.0 / 64.0;
/// Noise-free pairs correlate to 2 up to rounding.
const TAU_EXACT: f64 = 2.0 - 1e-9;

struct Report {
    failed: bool,
    timings: Vec<(u32, f64)>,
}

impl Report {
    fn verdict(&mut self, id: u32, name: &str, pass: bool, detail: String, started: Instant) {
        let secs = started.elapsed().as_secs_f64();
        self.timings.push((id, secs));
        self.failed |= !pass;
        let word = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {word} ({detail}; {secs:.1} s)");
    }

    fn info(&self, id: u32, detail: String) {
        println!("criterion {id} INFO: {detail}");
    }
}

fn scene(kind: SceneKind, seed: u64) -> ImageSource {
    ImageSource::Scene { kind, seed }
}

fn exact_translation(kind: SceneKind, tx: f64, ty: f64) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(
        format!("{kind:?} ({tx}, {ty})"),
        scene(kind, 1),
        256,
        SimilarityParams::translation(tx, ty),
    );
    spec.mode = SynthesisMode::Exact;
    spec.config = RegistrationConfig {
        tau: TAU_EXACT,
        ..RegistrationConfig::translation_only()
    };
    spec
}

fn run(specs: &[ScenarioSpec]) -> Vec<ExperimentRecord> {
    run_experiment(specs).expect("scenarios are well formed")
}

fn failures(records: &[ExperimentRecord], ok: impl Fn(&ExperimentRecord) -> bool) -> Vec<String> {
    records
        .iter()
        .filter(|r| !ok(r))
        .map(|r| match &r.error {
            Some(e) => format!("{}: {e}", r.scenario),
            None => format!(
                "{}: got ({}, {}, {}, {})",
                r.scenario, r.estimate.sigma, r.estimate.theta, r.estimate.tx, r.estimate.ty
            ),
        })
        .collect()
}

fn summary(bad: &[String], total: usize) -> String {
    if bad.is_empty() {
        format!("{total}/{total} within tolerance")
    } else {
        format!(
            "{}/{total} within tolerance; {}",
            total - bad.len(),
            bad.join("; ")
        )
    }
}

fn dyadic_exactness(report: &mut Report) {
    let t = Instant::now();
    let specs: Vec<_> = SceneKind::ALL
        .iter()
        .flat_map(|&k| {
            [(0.5, 0.5), (0.25, -0.125), (-0.625, 0.75)].map(|(x, y)| exact_translation(k, x, y))
        })
        .collect();
    let records = run(&specs);
    let bad = failures(&records, |r| {
        r.error.is_none() && r.estimate.tx == r.truth.tx && r.estimate.ty == r.truth.ty
    });
    report.verdict(
        1,
        "dyadic-shift exactness",
        bad.is_empty(),
        summary(&bad, records.len()),
        t,
    );
}

fn non_dyadic_quantization(report: &mut Report) {
    let t = Instant::now();
    let specs: Vec<_> = SceneKind::ALL
        .iter()
        .map(|&k| exact_translation(k, 0.33, -0.33))
        .collect();
    let records = run(&specs);
    let on_lattice = |v: f64| (v / LATTICE).fract() == 0.0;
    let bad = failures(&records, |r| {
        r.error.is_none()
            && r.shift_error() <= LATTICE
            && on_lattice(r.estimate.tx)
            && on_lattice(r.estimate.ty)
    });
    let got: Vec<String> = records
        .iter()
        .map(|r| format!("{} -> ({}, {})", r.scenario, r.estimate.tx, r.estimate.ty))
        .collect();
    report.info(2, got.join("; "));
    report.verdict(
        2,
        "non-dyadic quantization",
        bad.is_empty(),
        summary(&bad, records.len()),
        t,
    );
}

fn rotation_sweep(kind: SceneKind, step_halves: usize) -> Vec<ScenarioSpec> {
    (-60..=60)
        .step_by(step_halves)
        .map(|s| {
            let theta = s as f64 * 0.5;
            let mut spec = ScenarioSpec::new(
                format!("{kind:?} {theta}"),
                scene(kind, 2),
                128,
                SimilarityParams::new(1.0, theta, 0.0, 0.0),
            );
            spec.config.estimate_scale = false;
            spec
        })
        .collect()
}

fn angle_error(r: &ExperimentRecord) -> f64 {
    (r.estimate.theta - r.truth.theta).abs()
}

fn combined_case(kind: SceneKind) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(
        format!("{kind:?} combined"),
        scene(kind, 3),
        256,
        SimilarityParams::new(1.0, 20.0, 0.5, -0.25),
    );
    spec.config.estimate_scale = false;
    spec.config.tau = TAU_EXACT;
    spec
}

fn rotation_accuracy(report: &mut Report) {
    let t = Instant::now();
    let sweep = run(&rotation_sweep(SceneKind::Textured, 1));
    let worst = sweep.iter().map(angle_error).fold(0.0, f64::max);
    report.info(
        3,
        format!(
            "Textured sweep of {} angles, worst error {worst:.3} deg",
            sweep.len()
        ),
    );
    let mut bad = failures(&sweep, |r| r.error.is_none() && angle_error(r) <= 0.3);

    let combined = run(&[combined_case(SceneKind::Textured)]);
    let r = &combined[0];
    report.info(
        3,
        format!(
            "combined (0.5, -0.25, 20 deg) -> ({}, {}, {:.2} deg)",
            r.estimate.tx, r.estimate.ty, r.estimate.theta
        ),
    );
    bad.extend(failures(&combined, |r| {
        r.error.is_none() && angle_error(r) <= 0.3 && r.shift_error() <= LATTICE
    }));
    let total = sweep.len() + combined.len();

    for (kind, step) in [
        (SceneKind::Shapes, 1),
        (SceneKind::Blobs, 5),
        (SceneKind::PentagonLike, 5),
    ] {
        let records = run(&rotation_sweep(kind, step));
        let missed = failures(&records, |r| r.error.is_none() && angle_error(r) <= 0.3);
        report.info(
            3,
            format!(
                "{kind:?} sweep (not gated) {}/{} angles within 0.3 deg{}",
                records.len() - missed.len(),
                records.len(),
                if missed.is_empty() {
                    String::new()
                } else {
                    format!("; {}", missed.join("; "))
                }
            ),
        );
    }
    let others: Vec<_> = [SceneKind::Blobs, SceneKind::Shapes, SceneKind::PentagonLike]
        .map(combined_case)
        .to_vec();
    for r in run(&others) {
        report.info(
            3,
            format!(
                "{} (not gated) -> ({}, {}, {:.2} deg)",
                r.scenario, r.estimate.tx, r.estimate.ty, r.estimate.theta
            ),
        );
    }
    report.verdict(
        3,
        "rotation accuracy",
        bad.is_empty(),
        summary(&bad, total),
        t,
    );
}

/// Snapped scale estimates for each `sigma`, from universally thresholded
/// pyramids of a resampled pair.
fn scale_hits(kind: SceneKind, seeds: std::ops::Range<u64>) -> (usize, usize, Vec<String>) {
    const SIGMAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
    let (mut hits, mut total, mut misses) = (0, 0, Vec::new());
    for seed in seeds {
        let src = scene(kind, seed).render(256);
        for sigma in SIGMAS {
            total += 1;
            let (i, j) = synthesize_pair(
                &src,
                &SimilarityParams::new(sigma, 0.0, 0.0, 0.0),
                SynthesisMode::Resampled,
                256,
            )
            .expect("pair synthesis");
            let (ti, mi) = hard_threshold(&forward_haar(&i), ThresholdMode::Universal).unwrap();
            let (tj, mj) = hard_threshold(&forward_haar(&j), ThresholdMode::Universal).unwrap();
            match estimate_scale(&ti, &mi, &tj, &mj) {
                Ok(s) if s.sigma == sigma => hits += 1,
                Ok(s) => misses.push(format!("seed {seed} sigma {sigma}: raw {:.3}", s.raw)),
                Err(e) => misses.push(format!("seed {seed} sigma {sigma}: {e}")),
            }
        }
    }
    (hits, total, misses)
}

fn scale_exactness(report: &mut Report) {
    let t = Instant::now();
    let (hits, total, misses) = scale_hits(SceneKind::Blobs, 0..10);
    for kind in [
        SceneKind::Textured,
        SceneKind::Shapes,
        SceneKind::PentagonLike,
    ] {
        let (h, n, _) = scale_hits(kind, 0..3);
        report.info(
            4,
            format!("{kind:?} (not gated) {h}/{n} scales snapped exactly"),
        );
    }
    let detail = if misses.is_empty() {
        format!("Blobs, 10 images: {hits}/{total} scales snapped exactly")
    } else {
        format!("Blobs, 10 images: {hits}/{total}; {}", misses.join("; "))
    };
    report.verdict(4, "scale exactness", misses.is_empty(), detail, t);
}

fn noise_specs(target: NoiseTarget) -> Vec<ScenarioSpec> {
    [10.0, 20.0, 30.0, 40.0]
        .map(|snr| {
            let mut spec = ScenarioSpec::new(
                format!("{snr} dB"),
                scene(SceneKind::PentagonLike, 1),
                256,
                SimilarityParams::translation(0.25, 0.75),
            );
            spec.mode = SynthesisMode::Exact;
            spec.config = RegistrationConfig::translation_only();
            spec.snr_db = Some(snr);
            spec.noise_target = target;
            spec.seed = 1;
            spec.cross_validate_tau = true;
            spec
        })
        .to_vec()
}

fn describe(records: &[ExperimentRecord]) -> String {
    records
        .iter()
        .map(|r| {
            format!(
                "{} -> ({}, {}) tau {}",
                r.scenario, r.estimate.tx, r.estimate.ty, r.tau
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn noise_robustness(report: &mut Report) {
    let t = Instant::now();
    let records = run(&noise_specs(NoiseTarget::Sensed));
    report.info(5, format!("noisy sensed image: {}", describe(&records)));
    let bad = failures(&records, |r| {
        r.error.is_none() && r.shift_error() <= LATTICE
    });
    let both = run(&noise_specs(NoiseTarget::Both));
    let within = both
        .iter()
        .filter(|r| r.error.is_none() && r.shift_error() <= LATTICE)
        .count();
    report.info(
        5,
        format!(
            "both images noisy (not gated) {within}/{}: {}",
            both.len(),
            describe(&both)
        ),
    );
    report.verdict(
        5,
        "noise robustness",
        bad.is_empty(),
        summary(&bad, records.len()),
        t,
    );
}

fn sparsity_resilience(report: &mut Report) {
    let t = Instant::now();
    let shifts = [(0.25, 0.75), (0.33, -0.33), (0.5, -0.25), (-0.625, 0.375)];
    let specs: Vec<_> = SceneKind::ALL
        .iter()
        .flat_map(|&k| {
            shifts.map(|(x, y)| {
                let mut spec = exact_translation(k, x, y);
                spec.sparsity = Some(0.07);
                spec
            })
        })
        .collect();
    let records = run(&specs);
    let bad = failures(&records, |r| {
        r.error.is_none() && r.shift_error() <= LATTICE
    });
    let finite: Vec<f64> = records.iter().map(|r| r.psnr_db.min(200.0)).collect();
    let mean_psnr = finite.iter().sum::<f64>() / finite.len() as f64;
    let worst_psnr = finite.iter().copied().fold(f64::INFINITY, f64::min);
    report.info(
        6,
        format!("mean PSNR {mean_psnr:.1} dB (infinite capped at 200), worst {worst_psnr:.1} dB"),
    );
    let pass = bad.is_empty() && mean_psnr >= 46.0;
    report.verdict(
        6,
        "sparsity resilience",
        pass,
        summary(&bad, records.len()),
        t,
    );
}

fn property_suite(report: &mut Report) {
    let t = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;

    let oracle = (0..20)
        .map(|s| common::oracle_max_error(&common::random_image(8, s), 4))
        .fold(0.0, f64::max);
    pass &= oracle < 1e-9;
    notes.push(format!(
        "(a) in-band oracle max error {oracle:.1e} on 20 images"
    ));

    let blocks = (0..20u64)
        .map(|s| common::block_mean_max_error(&common::random_image(2 << (s % 6), s)))
        .fold(0.0, f64::max);
    pass &= blocks < 1e-9;
    notes.push(format!("(b) block means max error {blocks:.1e}"));

    let mut instances = 0;
    let mut mismatches = 0;
    let mut contraction = None;
    for seed in 0..20 {
        for h_max in 1..=4 {
            match common::bnb_against_exhaustive(&common::random_image(8, seed), h_max, TAU_EXACT) {
                Ok(tally) => {
                    instances += tally.instances;
                    mismatches += tally.mismatches;
                }
                Err(e) => contraction = Some(e),
            }
        }
    }
    pass &= mismatches == 0 && contraction.is_none();
    notes.push(format!(
        "(c) search equals exhaustive argmax on {}/{instances} instances",
        instances - mismatches
    ));

    let mut hws_worst = 0;
    for phi in [5.0, 15.0, 45.0, 90.0] {
        for seed in 0..10u64 {
            let theta0 = -85.0 + 17.0 * seed as f64;
            let (a, b) = common::oriented_planes(32, theta0, seed);
            hws_worst = hws_worst.max(common::hws_equivariance_error(&a, &b, phi, 180));
        }
    }
    pass &= hws_worst <= 1;
    notes.push(format!(
        "(d) slope histogram off by at most {hws_worst} bin"
    ));

    notes.push(match &contraction {
        None => "(e) every split halved the width; lattice width within h_max + 1 splits".into(),
        Some(e) => format!("(e) {e}"),
    });
    report.verdict(7, "property suite", pass, notes.join("; "), t);
}

fn main() -> ExitCode {
    let mut report = Report {
        failed: false,
        timings: Vec::new(),
    };
    dyadic_exactness(&mut report);
    non_dyadic_quantization(&mut report);
    rotation_accuracy(&mut report);
    scale_exactness(&mut report);
    noise_robustness(&mut report);
    sparsity_resilience(&mut report);
    property_suite(&mut report);
    let t = Instant::now();
    let times: Vec<String> = report
        .timings
        .iter()
        .map(|(id, s)| format!("{id}: {s:.1} s"))
        .collect();
    report.verdict(8, "wall time recorded", true, times.join(", "), t);
    if report.failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
