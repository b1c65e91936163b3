//! Down-conversion idler spectrum of the designed grating and its width.

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::workflow::{design_period, pdc_spectra, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let project = Project::new(ProjectConfig::default())?;
    let period = design_period(&project)?.period_um;
    let pump = project.config.process.spectrum_pump_nm;
    for r in pdc_spectra(&project, &[period, period + 0.02], pump)? {
        match r.spectrum.fwhm() {
            Some(f) => println!(
                "Λ = {:.4} µm: peak {:.2} nm, FWHM {:.2} nm = {:.0} GHz",
                r.period_um, f.peak_nm, f.width_nm, f.width_ghz
            ),
            None => println!("Λ = {:.4} µm: peak outside the grid", r.period_um),
        }
    }
    Ok(())
}
