//! Sum-frequency phase-matching map over the visible and telecom scan
//! windows, and the tilt of its ridge in three coordinate systems.
//!
//! `cargo run --release --example sfg_map [out.csv]`

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::workflow::{design_period, sfg, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("sfg_map.csv").display().to_string());
    let project = Project::new(ProjectConfig::default())?;
    let period = design_period(&project)?.period_um;
    let r = sfg(&project, period)?;
    let (rows, cols) = r.map.dims();
    println!("{rows} x {cols} map at Λ = {period:.4} µm");
    for (tel, vis) in &r.map.locus {
        println!("  visible {vis:.1} nm phase-matches telecom {tel:.2} nm");
    }
    println!("ridge angle: frequency axes {:.2}°, wavelength axes {:.2}°, unit windows {:.2}°",
        r.angles.frequency_deg, r.angles.wavelength_deg, r.angles.normalized_window_deg);
    std::fs::write(&out, r.map.to_csv())?;
    println!("map written to {out}");
    Ok(())
}
