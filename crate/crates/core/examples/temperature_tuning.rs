//! Phase-matched signal and idler from 25 to 35 °C at a fixed pump.

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::workflow::{design_period, tuning, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let project = Project::new(ProjectConfig::default())?;
    let period = design_period(&project)?.period_um;
    let t = tuning(&project, period, project.config.process.spectrum_pump_nm)?;
    for r in &t.rows {
        println!("{:>5.1} °C  signal {:.3} nm  idler {:.3} nm", r.temperature_c, r.signal_nm, r.idler_nm);
    }
    println!("signal {:+.3} nm/K, idler {:+.3} nm/K", t.signal_slope.slope, t.idler_slope.slope);
    Ok(())
}
