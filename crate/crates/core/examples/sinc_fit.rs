//! Effective grating length from the bundled spectra, with the dispersion
//! slope taken from the simulated waveguide.

use std::path::Path;

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::qpm::spectrum::{Spectrum, SpectrumAxis};
use tfln_pdc::workflow::{fit_spectrum, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let project = Project::new(ProjectConfig::default())?;
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    for name in ["spectrum_synthetic.csv", "spectrum_broadened.csv"] {
        let s = Spectrum::from_csv(&std::fs::read_to_string(data.join(name))?, SpectrumAxis::Idler)?;
        let r = fit_spectrum(&project, &s)?;
        let f = &r.fit;
        println!(
            "{name}: centre {:.3} ± {:.3} nm, length {:.3} ± {:.3} mm ({:.1}% of nominal), {} iterations",
            f.center_nm,
            f.center_stderr_nm,
            f.length_mm.unwrap_or(f64::NAN),
            f.length_stderr_mm.unwrap_or(f64::NAN),
            100.0 * r.length_ratio.unwrap_or(f64::NAN),
            f.iterations
        );
    }
    Ok(())
}
