//! Refractive and group indices of the built-in materials across the
//! interacting bands, and the thermal drift of the film index.

use tfln_pdc::materials::MaterialLibrary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lib = MaterialLibrary::builtin();
    println!("{:<12} {:>8} {:>10} {:>10}", "material", "λ (nm)", "n", "n_g");
    for tag in ["mgo_ln_e", "mgo_ln_o", "fused_silica"] {
        let m = lib.get(tag).ok_or("missing built-in model")?;
        for l in [0.532, 0.810, 1.550] {
            println!(
                "{tag:<12} {:>8.0} {:>10.6} {:>10.6}",
                l * 1000.0,
                m.refractive_index(l, 25.0)?,
                m.group_index(l, 25.0)?
            );
        }
    }
    let ln = lib.get("mgo_ln_e").unwrap();
    println!("\nextraordinary index drift, 25 → 35 °C:");
    for l in [0.532, 0.810, 1.550] {
        let dn = ln.refractive_index(l, 35.0)? - ln.refractive_index(l, 25.0)?;
        println!("  {:>5.0} nm: {:+.3e} per K", l * 1000.0, dn / 10.0);
    }
    Ok(())
}
