//! Test-side oracles, independent of the library's solvers.
#![allow(dead_code)]

/// TE effective indices of a planar stack by the transfer-matrix dispersion
/// relation. The first and last layers are treated as semi-infinite.
pub fn slab_te_modes(layers_bottom_up: &[(f64, f64)], wavelength_um: f64) -> Vec<f64> {
    let k0 = 2.0 * std::f64::consts::PI / wavelength_um;
    let nb = layers_bottom_up[0].1;
    let nt = layers_bottom_up[layers_bottom_up.len() - 1].1;
    let core = &layers_bottom_up[1..layers_bottom_up.len() - 1];
    let lo = nb.max(nt) + 1e-12;
    let hi = core.iter().map(|l| l.1).fold(lo, f64::max) - 1e-12;
    // Mismatch of the top boundary condition after propagating the field
    // that decays into the substrate.
    let mismatch = |neff: f64| {
        let b2 = (k0 * neff).powi(2);
        let gb = (b2 - (k0 * nb).powi(2)).sqrt();
        let gt = (b2 - (k0 * nt).powi(2)).sqrt();
        let (mut e, mut de) = (1.0f64, gb);
        for &(d, n) in core {
            let q2 = (k0 * n).powi(2) - b2;
            if q2 > 0.0 {
                let q = q2.sqrt();
                let (c, s) = ((q * d).cos(), (q * d).sin());
                (e, de) = (e * c + de * s / q, -e * q * s + de * c);
            } else {
                let p = (-q2).sqrt();
                let (c, s) = ((p * d).cosh(), (p * d).sinh());
                (e, de) = (e * c + de * s / p, e * p * s + de * c);
            }
            let norm = e.abs().max(de.abs() / k0);
            e /= norm;
            de /= norm;
        }
        de + gt * e
    };
    let n = 20_000;
    let mut roots = Vec::new();
    let mut prev = (hi, mismatch(hi));
    for k in 1..=n {
        let x = hi - (hi - lo) * k as f64 / n as f64;
        let fx = mismatch(x);
        if fx.signum() != prev.1.signum() {
            let (mut a, mut b, mut fa) = (x, prev.0, fx);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = mismatch(m);
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = (x, fx);
    }
    roots
}

/// Median of a slice.
pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Relative deviation of `value` from `reference`.
pub fn rel(value: f64, reference: f64) -> f64 {
    (value - reference) / reference
}
