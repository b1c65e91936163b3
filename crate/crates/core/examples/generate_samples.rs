//! Regenerates the bundled sample inputs under `data/`.
//!
//! * `nominal.toml`: the default project configuration.
//! * `spectrum_synthetic.csv`: noiseless sinc² idler spectrum of a uniform
//!   3 mm grating, using the simulated dispersion slope.
//! * `spectrum_broadened.csv`: a device-like idler spectrum, broader than the
//!   nominal grating allows, with background and 3% noise.
//! * `counts_device.csv`: a power sweep following the measured power laws,
//!   anchored to a 15.89 MHz pair rate at 544 nW.
//! * `counts_montecarlo.csv`: a seeded simulation of the counting setup.
//!
//! Run with `cargo run --release --example generate_samples`.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tfln_pdc::config::ProjectConfig;
use tfln_pdc::photonstats::{simulate, CountRecord, PairSource};
use tfln_pdc::qpm::conjugate_wavelength_nm;
use tfln_pdc::qpm::fit::sinc_model;
use tfln_pdc::qpm::spectrum::{Spectrum, SpectrumAxis};
use tfln_pdc::workflow::{mismatch_slope, Project};

const BROADENED_LENGTH_MM: f64 = 2.79;
const SEED: u64 = 20240607;

fn counts_csv(records: &[CountRecord], comment: &str) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).unwrap();
    }
    format!("# {comment}\n{}", String::from_utf8(w.into_inner().unwrap()).unwrap())
}

fn device_counts() -> Vec<CountRecord> {
    let (t, tau) = (10.0, 1e-9);
    let p_ref = 544e-9;
    // rates per second at the reference power
    let (ns, ni, c2, c3) = (1.0e6, 0.8e6, 50_346.0, 19.6);
    [100e-9, 150e-9, 200e-9, 300e-9, 400e-9, 544e-9]
        .iter()
        .map(|&p| {
            let x: f64 = p / p_ref;
            let count = |rate: f64, k: f64| (rate * x.powf(k) * t).round() as u64;
            let n_i = count(ni, 0.92);
            let c = count(c2, 1.08);
            CountRecord {
                power_w: p,
                t_int_s: t,
                tau_c_s: tau,
                n_s: count(ns, 0.96),
                n_1: n_i / 2,
                n_2: n_i - n_i / 2,
                c_s1: c / 2,
                c_s2: c - c / 2,
                c_s12: count(c3, 1.85),
            }
        })
        .collect()
}

fn montecarlo_counts() -> Vec<CountRecord> {
    let tau = 1e-9;
    let windows = 100_000_000u64;
    [0.5e-6, 1e-6, 2e-6, 4e-6, 8e-6]
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let src = PairSource {
                mean_pairs: 0.01 * p / 1e-6,
                eta_signal: 0.3,
                eta_idler: 0.25,
            };
            simulate(&src, windows, tau, p, SEED + k as u64).unwrap()
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;
    let cfg = ProjectConfig::default();
    std::fs::write(dir.join("nominal.toml"), cfg.to_toml())?;

    let pump = cfg.process.spectrum_pump_nm;
    let center = conjugate_wavelength_nm(pump, cfg.process.signal_nm);
    let project = Project::new(cfg.clone())?;
    let slope = mismatch_slope(&project, pump, SpectrumAxis::Idler, center)?;
    println!("idler centre {center:.3} nm, dispersion slope {slope:.4} 1/(m nm)");

    let x: Vec<f64> = (0..=500).map(|k| center.round() - 25.0 + 0.1 * k as f64).collect();
    let clean = sinc_model(&x, center, cfg.process.length_mm, slope, 1.0, 0.0);
    std::fs::write(dir.join("spectrum_synthetic.csv"), Spectrum::new(SpectrumAxis::Idler, x.clone(), clean)?.to_csv())?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let noise = Normal::new(0.0, 0.03)?;
    let broad: Vec<f64> = sinc_model(&x, center + 0.8, BROADENED_LENGTH_MM, slope, 3400.0, 50.0)
        .into_iter()
        .map(|v| v * (1.0 + noise.sample(&mut rng)))
        .collect();
    std::fs::write(dir.join("spectrum_broadened.csv"), Spectrum::new(SpectrumAxis::Idler, x, broad)?.to_csv())?;

    std::fs::write(dir.join("counts_device.csv"), counts_csv(&device_counts(), "synthetic device-like power sweep"))?;
    std::fs::write(
        dir.join("counts_montecarlo.csv"),
        counts_csv(&montecarlo_counts(), &format!("seeded simulation, seed {SEED}, eta_signal 0.3, eta_idler 0.25")),
    )?;
    println!("wrote samples to {}", dir.display());
    Ok(())
}
