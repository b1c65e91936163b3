//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_DEVIATIONS` still print FAIL when they fail, but
//! do not fail the run; any other failure exits non-zero.

mod common;

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tfln_pdc::config::ProjectConfig;
use tfln_pdc::modesolver::{solve_modes, NeffSolver, Refinement, SolverOptions, Symmetry};
use tfln_pdc::photonstats::*;
use tfln_pdc::qpm::fit::{fit_sinc, sinc_model, FitModel, FitOptions};
use tfln_pdc::qpm::spectrum::{Spectrum, SpectrumAxis};
use tfln_pdc::qpm::tolerance::{phase_mismatch_sum, SlopeSet, ToleranceSpec};
use tfln_pdc::qpm::QpmError;
use tfln_pdc::waveguide::{GridSpec, IndexMap, WaveguideGeometry};
use tfln_pdc::workflow::*;

use common::{median, rel, slab_te_modes};

const KNOWN_DEVIATIONS: [&str; 2] = ["tolerance slopes", "mode solver"];

// Published reference values.
const PERIOD_UM: f64 = 3.314;
const SLOPE_WIDTH: f64 = -320.2e3;
const SLOPE_ETCH: f64 = 332.9e3;
const SLOPE_ANGLE: f64 = -2.3e3;
const SLOPE_THICKNESS: f64 = -2.2e6;
const BUDGET_PER_M: f64 = -54230.0;
const THICKNESS_SHIFT_NM: f64 = 4.0;
const TUNING_SIGNAL_NM_PER_K: f64 = -0.61;
const TUNING_IDLER_NM_PER_K: f64 = 2.28;
const RIDGE_ANGLE_DEG: f64 = -51.66;
const BANDWIDTH_GHZ: f64 = 2104.0;
const LENGTH_RATIO: f64 = 0.93;
const G2_POINT: (f64, f64, f64) = (3.3e-3, 6.7e-3, 1.1e-3);
const MEASURED_POWER_W: f64 = 544e-9;
const PAIR_RATE_HZ: f64 = 15.89e6;
const BRIGHTNESS: f64 = 0.44e7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = Result<Outcome, String>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn poling_period(project: &Project, elapsed: Duration) -> Check {
    let d = design_period(project).map_err(err)?;
    let r = rel(d.period_um, PERIOD_UM);
    let fast = elapsed.as_secs_f64() < 120.0;
    Ok(outcome(
        r.abs() <= 0.03 && fast,
        format!("period {:.4} µm ({:+.2}%), {:.1} s", d.period_um, 100.0 * r, elapsed.as_secs_f64()),
    ))
}

fn tolerance_slopes_check(project: &Project) -> Check {
    let d = design_period(project).map_err(err)?;
    let fits = tolerance_slopes(project, &d).map_err(err)?;
    let got: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let want = [SLOPE_WIDTH, SLOPE_ETCH, SLOPE_ANGLE, SLOPE_THICKNESS];
    let mut pass = true;
    let mut parts = Vec::new();
    for ((f, g), w) in fits.iter().zip(&got).zip(want) {
        let r = rel(*g, w);
        let ok = g.signum() == w.signum() && r.abs() <= 0.30;
        pass &= ok;
        parts.push(format!("{} {:.4e} ({:+.1}%{})", f.parameter.name(), g, 100.0 * r, if ok { "" } else { " out" }));
    }
    let dominance = got[3].abs() / got[0].abs().max(got[1].abs());
    pass &= dominance >= 5.0;
    parts.push(format!("thickness dominance {dominance:.2}x"));
    Ok(outcome(pass, parts.join(", ")))
}

fn budget() -> Check {
    let slopes = SlopeSet {
        width_per_um: SLOPE_WIDTH,
        etch_depth_per_um: SLOPE_ETCH,
        angle_per_deg: SLOPE_ANGLE,
        thickness_per_um: SLOPE_THICKNESS,
    };
    let s = phase_mismatch_sum(&slopes, &ToleranceSpec::default());
    Ok(outcome((s - BUDGET_PER_M).abs() < 1e-9, format!("sum {s} 1/m")))
}

fn thickness(project: &Project) -> Check {
    let d = design_period(project).map_err(err)?;
    let t = thickness_shift(project, &d, 1.0).map_err(err)?;
    let m = t.idler_shift_nm.abs();
    Ok(outcome(
        (m - THICKNESS_SHIFT_NM).abs() <= 0.5 * THICKNESS_SHIFT_NM,
        format!("idler shift {:+.2} nm per nm of film", t.idler_shift_nm),
    ))
}

fn tuning_check(project: &Project) -> Check {
    let d = design_period(project).map_err(err)?;
    let t = tuning(project, d.period_um, project.config.process.spectrum_pump_nm).map_err(err)?;
    let (s, i) = (t.signal_slope.slope, t.idler_slope.slope);
    let (rs, ri) = (rel(s, TUNING_SIGNAL_NM_PER_K), rel(i, TUNING_IDLER_NM_PER_K));
    let s0 = t.rows[0].signal_nm;
    let signal_rate = (s / (s0 * s0)).abs();
    let sum_ok = t.frequency_sum_per_k.abs() <= 1e-3 * signal_rate;
    Ok(outcome(
        rs.abs() <= 0.25 && ri.abs() <= 0.25 && sum_ok,
        format!(
            "signal {s:.3} nm/K ({:+.1}%), idler {i:.3} nm/K ({:+.1}%), frequency sum {:.2e} 1/(nm K)",
            100.0 * rs,
            100.0 * ri,
            t.frequency_sum_per_k
        ),
    ))
}

fn ridge(project: &Project) -> Check {
    let d = design_period(project).map_err(err)?;
    let r = sfg(project, d.period_um).map_err(err)?;
    Ok(outcome(
        (r.ridge_angle_deg - RIDGE_ANGLE_DEG).abs() <= 2.0,
        format!("ridge angle {:.2}° ({:?} axes)", r.ridge_angle_deg, r.ridge_axes),
    ))
}

fn bandwidth(project: &Project) -> Check {
    let d = design_period(project).map_err(err)?;
    let res = pdc_spectra(project, &[d.period_um], project.config.process.spectrum_pump_nm).map_err(err)?;
    let f = res[0].spectrum.fwhm().ok_or("no half-maximum crossing")?;
    let r = rel(f.width_ghz, BANDWIDTH_GHZ);
    Ok(outcome(r.abs() <= 0.20, format!("FWHM {:.0} GHz ({:+.1}%), {:.2} nm", f.width_ghz, 100.0 * r, f.width_nm)))
}

fn sinc_fit(project: &Project) -> Check {
    let len = project.config.process.length_mm;
    let pump = project.config.process.spectrum_pump_nm;
    let center = tfln_pdc::qpm::conjugate_wavelength_nm(pump, project.config.process.signal_nm);
    let slope = mismatch_slope(project, pump, SpectrumAxis::Idler, center).map_err(err)?;
    let model = FitModel::Dispersion { slope_per_m_nm: slope };
    let opts = FitOptions::default();
    let x: Vec<f64> = (0..=500).map(|k| center.round() - 25.0 + 0.1 * k as f64).collect();
    let fit_len = |y: Vec<f64>| -> Result<f64, QpmError> {
        let s = Spectrum::new(SpectrumAxis::Idler, x.clone(), y)?;
        Ok(fit_sinc(&s, center + 0.3, 0.9 * len, model, &opts)?.length_mm.unwrap())
    };
    let clean = fit_len(sinc_model(&x, center, len, slope, 1.0, 0.0)).map_err(err)?;
    let clean_err = rel(clean, len).abs();

    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut errors = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = sinc_model(&x, center, len, slope, 1.0, 0.0)
            .into_iter()
            .map(|v| v + noise.sample(&mut rng))
            .collect();
        errors.push(rel(fit_len(y).map_err(err)?, len).abs());
    }
    let med = median(&mut errors);

    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/spectrum_broadened.csv");
    let text = std::fs::read_to_string(path).map_err(err)?;
    let broad = Spectrum::from_csv(&text, SpectrumAxis::Idler).map_err(err)?;
    let ratio = fit_spectrum(project, &broad).map_err(err)?.length_ratio.unwrap();
    Ok(outcome(
        clean_err < 1e-3 && med < 0.02 && (ratio - LENGTH_RATIO).abs() <= 0.02,
        format!(
            "noiseless error {:.1e}, 5% noise median error {:.2}%, sample ratio {:.1}%",
            clean_err,
            100.0 * med,
            100.0 * ratio
        ),
    ))
}

fn g2_closed_form() -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..=500 {
        let n = 5.0 * k as f64 / 500.0;
        let s = g2_heralded_theory(n, DEFAULT_TRUNCATION).map_err(err)?;
        worst = worst.max((s - g2_heralded_closed_form(n)).abs());
    }
    let mut low: f64 = 0.0;
    for k in 1..100 {
        let n = 1e-2 * k as f64 / 100.0;
        low = low.max(rel(g2_heralded_theory(n, DEFAULT_TRUNCATION).map_err(err)?, 2.0 * n).abs());
    }
    let (n, g, sigma) = G2_POINT;
    let at = g2_heralded_theory(n, DEFAULT_TRUNCATION).map_err(err)?;
    Ok(outcome(
        worst < 1e-10 && low < 0.02 && (at - g).abs() <= sigma,
        format!("series vs closed form {worst:.1e}, max deviation from 2n {:.2}%, g2({n}) = {at:.2e}", 100.0 * low),
    ))
}

fn brightness_chain(project: &Project) -> Check {
    let chain = PowerChain::default();
    let pump = pump_power_inside(MEASURED_POWER_W, &chain).map_err(err)?;
    let b = brightness(PAIR_RATE_HZ, pump.inside_w, BANDWIDTH_GHZ * 1e9).map_err(err)?;
    let r = rel(b, BRIGHTNESS);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/counts_device.csv");
    let (records, rejected) = read_counts(&std::fs::read_to_string(path).map_err(err)?)?;
    let report = analyze_counts(project, &records, rejected).map_err(err)?;
    let rd = rel(report.brightness.brightness, BRIGHTNESS);
    Ok(outcome(
        (pump.transmission - 0.32).abs() < 0.005 && rel(pump.inside_w, 1.68e-6).abs() < 0.01 && r.abs() <= 0.03 && rd.abs() <= 0.03,
        format!(
            "transmission {:.4}, inside {:.3} µW, brightness {:.3e} ({:+.1}%), sample dataset {:.3e} ({:+.1}%)",
            pump.transmission,
            pump.inside_w * 1e6,
            b,
            100.0 * r,
            report.brightness.brightness,
            100.0 * rd
        ),
    ))
}

fn mode_solver(project: &Project) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolverOptions::default();
    let mut slab_worst: f64 = 0.0;
    for _ in 0..5 {
        let layers = [
            (2.0, rng.random_range(1.44..1.50)),
            (rng.random_range(0.3..0.8), rng.random_range(1.9..2.3)),
            (2.0, rng.random_range(1.0..1.45)),
        ];
        let lambda = rng.random_range(0.8..1.6);
        let map = IndexMap::from_layers(&layers, 0.002, lambda).map_err(err)?;
        let sol = solve_modes(&map, 1, Symmetry::None, &opts).map_err(err)?;
        let got = sol.fundamental().ok_or("slab not guided")?.n_eff;
        slab_worst = slab_worst.max((got - slab_te_modes(&layers, lambda)[0]).abs());
    }
    let solver = NeffSolver::new(project.materials.clone(), GridSpec::default(), Refinement::Fixed);
    let g = WaveguideGeometry::nominal();
    let mut seq = Vec::new();
    for p in [50.0, 25.0, 12.5] {
        seq.push(solver.solve_at_pitch(&g, 1.55, 25.0, p).map_err(err)?.ok_or("not guided")?);
    }
    let (d1, d2) = (seq[1] - seq[0], seq[2] - seq[1]);
    let monotone = d1.signum() == d2.signum() && d2.abs() < d1.abs();
    let modes = mode_count(project, &g, 1550.0).map_err(err)?;
    Ok(outcome(
        slab_worst < 1e-4 && monotone && modes.single_mode,
        format!(
            "slab error {slab_worst:.1e}, pitch differences {d1:.2e} then {d2:.2e}, guided modes at 1550 nm {:?} above cutoff {:.5}",
            modes.guided_n_eff, modes.cutoff_index
        ),
    ))
}

fn monte_carlo() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let windows = 10_000_000u64;
    let mut worst: f64 = 0.0;
    let mut worst_set: f64 = 0.0;
    for k in 0..10 {
        let src = PairSource {
            mean_pairs: 10f64.powf(rng.random_range(-3.0..-1.0)),
            eta_signal: rng.random_range(0.05..0.9),
            eta_idler: rng.random_range(0.05..0.9),
        };
        let rec = simulate(&src, windows, 1e-9, 1e-6, 1000 + k).map_err(err)?;
        let p = ClickProbabilities::of(&src);
        let ky = klyshko(&rec).map_err(err)?;
        let g2 = g2_heralded_measured(&rec).map_err(err)?;
        let rate = pair_rate(&rec).map_err(err)?;
        let n = Measured {
            value: rate.value * rec.tau_c_s,
            stderr: rate.stderr * rec.tau_c_s,
        };
        for (m, e, set) in [
            (ky.signal, p.klyshko_signal(), src.eta_signal),
            (ky.idler, p.klyshko_idler(), src.eta_idler),
            (g2, p.g2(), g2_heralded_closed_form(src.mean_pairs)),
            (n, p.apparent_mean_pairs(), src.mean_pairs),
        ] {
            worst = worst.max((m.value - e).abs() / m.stderr);
            worst_set = worst_set.max(rel(e, set).abs().min(1.0));
        }
    }
    Ok(outcome(
        worst <= 3.0,
        format!("largest deviation from model expectation {worst:.2} sigma; model bias against set values up to {:.1}%", 100.0 * worst_set),
    ))
}

fn main() {
    // `cargo test -- --list` and filters are passed through; honour list mode.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let t0 = Instant::now();
    let project = Project::new(ProjectConfig::default()).expect("nominal project");
    let design_time = {
        let t = Instant::now();
        design_period(&project).expect("design");
        t.elapsed()
    };
    let checks: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("poling period", Box::new(|| poling_period(&project, design_time))),
        ("tolerance slopes", Box::new(|| tolerance_slopes_check(&project))),
        ("budget arithmetic", Box::new(budget)),
        ("thickness sensitivity", Box::new(|| thickness(&project))),
        ("temperature tuning", Box::new(|| tuning_check(&project))),
        ("sfg ridge angle", Box::new(|| ridge(&project))),
        ("bandwidth", Box::new(|| bandwidth(&project))),
        ("sinc-fit recovery", Box::new(|| sinc_fit(&project))),
        ("photon statistics closed form", Box::new(g2_closed_form)),
        ("brightness chain", Box::new(|| brightness_chain(&project))),
        ("mode solver", Box::new(|| mode_solver(&project))),
        ("monte-carlo statistics", Box::new(monte_carlo)),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for (name, check) in &checks {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_DEVIATIONS.contains(name);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
        };
        println!("{tag:<22} {name}: {detail}");
        if pass {
            passed += 1;
        } else if !known {
            unexpected.push(*name);
        }
    }
    println!("acceptance: {passed}/{} criteria pass in {:.0} s", checks.len(), t0.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
