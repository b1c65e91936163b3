//! Seeded simulation of the three-detector counting setup, compared with the
//! exact expectations of the same model and with the source parameters.

use tfln_pdc::photonstats::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let windows = 20_000_000;
    println!("{:>7} {:>6} {:>6} | {:>16} {:>8} | {:>16} {:>8}", "n", "η_s", "η_i", "Klyshko signal", "model", "g²", "model");
    for (k, (n, es, ei)) in [(0.002, 0.1, 0.1), (0.01, 0.5, 0.3), (0.05, 0.8, 0.6), (0.1, 0.3, 0.9)].into_iter().enumerate() {
        let src = PairSource { mean_pairs: n, eta_signal: es, eta_idler: ei };
        let rec = simulate(&src, windows, 1e-9, 1e-6, 7 + k as u64)?;
        let p = ClickProbabilities::of(&src);
        let ky = klyshko(&rec)?;
        let g2 = g2_heralded_measured(&rec)?;
        println!(
            "{n:>7} {es:>6} {ei:>6} | {:>7.4} ± {:.4} {:>8.4} | {:>7.4} ± {:.4} {:>8.4}",
            ky.signal.value, ky.signal.stderr, p.klyshko_signal(), g2.value, g2.stderr, p.g2()
        );
    }
    Ok(())
}
