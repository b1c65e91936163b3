//! Guided quasi-TE modes of the nominal rib at 1550 nm, with the fundamental
//! field written as a CSV matrix.
//!
//! `cargo run --release --example mode_profile [out.csv]`

use tfln_pdc::config::ProjectConfig;
use tfln_pdc::modesolver::{solve_modes, SolverOptions, Symmetry};
use tfln_pdc::waveguide::{GridSpec, IndexMap, WaveguideGeometry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("mode_1550.csv").display().to_string());
    let materials = ProjectConfig::default().layer_materials()?;
    let geometry = WaveguideGeometry::nominal();
    let map = IndexMap::rasterize(&geometry, &materials, 1.55, 25.0, &GridSpec::default())?;
    let sol = solve_modes(&map, 4, Symmetry::None, &SolverOptions::default())?;
    println!("grid {} x {}, {} unknowns, cutoff index {:.5}", map.nx, map.ny, sol.unknowns, sol.cutoff_index);
    for (k, m) in sol.modes.iter().enumerate() {
        println!("mode {k}: n_eff {:.6}, residual {:.1e}", m.n_eff, m.residual);
    }
    let fundamental = sol.fundamental().ok_or("nothing guided")?;
    fundamental.write_csv(std::fs::File::create(&out)?)?;
    println!("fundamental field written to {out}");
    Ok(())
}
