//! Full design pass for the nominal geometry: poling period, tolerance
//! slopes, mismatch budget, period range and candidate periods.

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::workflow::{run_design, Project};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let project = Project::new(ProjectConfig::default())?;
    let r = run_design(&project)?;
    let p = &r.period;
    println!("{:.0} nm → {:.0} nm + {:.2} nm at {} °C", p.pump_nm, p.signal_nm, p.idler_nm, p.temperature_c);
    println!("poling period {:.4} µm", p.period_um);
    for s in &r.slopes {
        println!("  dΔβ/d{:<10} {:>12.4e} 1/(m {})  ± {:.1e}", s.parameter.name(), s.slope, s.unit, s.slope_stderr);
    }
    println!("mismatch budget {:.0} 1/m", r.delta_beta_sum_per_m);
    println!("period range (budget)     {:.4} – {:.4} µm", r.range_literal.min_um, r.range_literal.max_um);
    println!("period range (corner scan) {:.4} – {:.4} µm", r.range_corner_scan.min_um, r.range_corner_scan.max_um);
    let c: Vec<String> = r.candidate_periods_um.iter().map(|v| format!("{v:.3}")).collect();
    println!("candidates: {}", c.join(", "));
    println!("idler shift per nm of film: {:+.2} nm", r.thickness_shift.idler_shift_nm);
    println!("guided modes at the idler: {:?}", r.idler_modes.guided_n_eff);
    Ok(())
}
