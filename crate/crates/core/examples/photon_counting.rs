//! Counting statistics of the bundled power sweep: heralding efficiencies,
//! pair rate, heralded g², power-law exponents and brightness.

use std::path::Path;

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::workflow::{analyze_counts, read_counts, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/counts_device.csv");
    let (records, rejected) = read_counts(&std::fs::read_to_string(path)?)?;
    let project = Project::new(ProjectConfig::default())?;
    let r = analyze_counts(&project, &records, rejected)?;
    println!("{:>8} {:>9} {:>9} {:>11} {:>9} {:>18} {:>9}", "P (nW)", "η_s", "η_i", "R (MHz)", "n", "g² measured", "g² model");
    for s in &r.records {
        let g = s.g2_measured.map(|m| format!("{:.2e} ± {:.1e}", m.value, m.stderr)).unwrap_or_default();
        println!(
            "{:>8.0} {:>9.4} {:>9.4} {:>11.3} {:>9.2e} {:>18} {:>9.2e}",
            s.power_w * 1e9,
            s.klyshko.signal.value,
            s.klyshko.idler.value,
            s.pair_rate_hz.value / 1e6,
            s.mean_photon_number,
            g,
            s.g2_theory
        );
    }
    if let Some(sw) = &r.sweep {
        println!("exponents: signal {:.2}, idler {:.2}, twofold {:.2}, threefold {}",
            sw.signal_singles.slope, sw.idler_singles.slope, sw.twofolds.slope,
            sw.threefolds.as_ref().map(|f| format!("{:.2}", f.slope)).unwrap_or("n/a".into()));
    }
    let b = &r.brightness;
    println!("brightness {:.3e} pairs/(s mW GHz) at {:.3} µW inside the waveguide", b.brightness, b.pump.inside_w * 1e6);
    for row in &r.comparison {
        println!("  {:<28} {:.2e}", row.source, row.brightness);
    }
    Ok(())
}
