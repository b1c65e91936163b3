mod common;

use proptest::prelude::*;
use tfln_pdc::config::ProjectConfig;
use tfln_pdc::materials::{DispersionModel, LayerIndices, ThermalSellmeier};
use tfln_pdc::photonstats::*;
use tfln_pdc::qpm::fit::{fit_sinc, sinc_model, FitModel, FitOptions};
use tfln_pdc::qpm::spectrum::*;
use tfln_pdc::qpm::tolerance::{phase_mismatch_sum, SlopeSet, ToleranceSpec};
use tfln_pdc::qpm::{conjugate_wavelength_nm, poling_period, BulkDispersion};
use tfln_pdc::waveguide::{AngleConvention, GridSpec, IndexMap, WaveguideGeometry};

fn models() -> Vec<DispersionModel> {
    vec![
        DispersionModel::mgo_ln_extraordinary(),
        DispersionModel::mgo_ln_ordinary(),
        DispersionModel::fused_silica(),
        DispersionModel::air(),
    ]
}

fn record() -> impl Strategy<Value = CountRecord> {
    (1u64..100_000, 1u64..100_000, 1u64..100_000, 0u64..1000).prop_flat_map(|(ns, n1, n2, c12)| {
        let c1max = ns.min(n1);
        let c2max = ns.min(n2);
        (Just((ns, n1, n2)), 1..=c1max, 1..=c2max, Just(c12))
    })
    .prop_map(|((ns, n1, n2), c1, c2, c12)| CountRecord {
        power_w: 1e-6,
        t_int_s: 1.0,
        tau_c_s: 1e-9,
        n_s: ns,
        n_1: n1,
        n_2: n2,
        c_s1: c1,
        c_s2: c2,
        c_s12: c12.min(c1.min(c2)),
    })
}

proptest! {
    #[test]
    fn indices_lie_between_one_and_three(frac in 0.0..1.0f64, t in 20.0..200.0f64) {
        for m in models() {
            let (lo, hi) = m.wavelength_range_um;
            let n = m.refractive_index(lo + frac * (hi - lo), t).unwrap();
            prop_assert!(n >= 1.0 && n < 3.0, "{:?}: {n}", m.material);
            if m.material != tfln_pdc::materials::Material::Air {
                prop_assert!(n > 1.0);
            }
        }
    }

    #[test]
    fn index_is_lipschitz_on_small_steps(frac in 0.0..0.999f64, eps in 1e-9..1e-4f64, t in 20.0..200.0f64) {
        for m in models() {
            let (lo, hi) = m.wavelength_range_um;
            let l = lo + frac * (hi - lo - 1e-4);
            let d = (m.refractive_index(l + eps, t).unwrap() - m.refractive_index(l, t).unwrap()).abs();
            prop_assert!(d < 5.0 * eps, "{:?} at {l}: {d} over {eps}", m.material);
        }
    }

    #[test]
    fn thermal_factor_mirror(t in -300.0..300.0f64) {
        let a = ThermalSellmeier::thermal_factor(t);
        let b = ThermalSellmeier::thermal_factor(-t - 546.32);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn rasterized_maps_are_mirror_symmetric_mixtures(
        t in 400.0..900.0f64,
        h_frac in 0.1..1.0f64,
        w in 0.5..2.0f64,
        a in 0.0..45.0f64,
        c in 0.0..1200.0f64,
    ) {
        let g = WaveguideGeometry {
            film_thickness_nm: t,
            etch_depth_nm: h_frac * t,
            top_width_um: w,
            sidewall_angle_deg: a,
            cladding_thickness_nm: c,
            angle_convention: AngleConvention::FromVertical,
        };
        prop_assert!(g.validate().is_ok());
        prop_assert!(g.slab_thickness_nm() >= 0.0);
        let idx = LayerIndices { film: 2.14, substrate: 1.444, cladding: 1.444, superstrate: 1.0 };
        let grid = GridSpec { pitch_nm: 50.0, ..GridSpec::default() };
        let map = IndexMap::rasterize_with_indices(&g, idx, 1.55, 25.0, &grid);
        for j in 0..map.ny {
            for i in 0..map.nx {
                let n = map.index_at(i, j);
                prop_assert!((1.0 - 1e-12..=2.14 + 1e-12).contains(&n));
                prop_assert_eq!(map.eps_at(i, j), map.eps_at(map.nx - 1 - i, j));
            }
        }
    }

    #[test]
    fn conjugate_conserves_energy(p in 400.0..700.0f64, frac in 0.05..0.95f64) {
        let s = p / (1.0 - frac * 0.5);
        let i = conjugate_wavelength_nm(p, s);
        prop_assert!((1.0 / p - 1.0 / s - 1.0 / i).abs() < 1e-9);
        prop_assert!(p < s.min(i));
    }

    #[test]
    fn mismatch_budget_is_linear(
        s in prop::array::uniform4(-3e6..3e6f64),
        d in prop::array::uniform4(-1.0..1.0f64),
        e in prop::array::uniform4(-1.0..1.0f64),
        m in -8i32..8,
    ) {
        let slopes = SlopeSet { width_per_um: s[0], etch_depth_per_um: s[1], angle_per_deg: s[2], thickness_per_um: s[3] };
        let a = ToleranceSpec { width_um: d[0], etch_depth_um: d[1], angle_deg: d[2], thickness_um: d[3] };
        let b = ToleranceSpec { width_um: e[0], etch_depth_um: e[1], angle_deg: e[2], thickness_um: e[3] };
        let k = 2f64.powi(m);
        prop_assert_eq!(phase_mismatch_sum(&slopes, &a.scaled(k)), k * phase_mismatch_sum(&slopes, &a));
        let sum = ToleranceSpec {
            width_um: d[0] + e[0],
            etch_depth_um: d[1] + e[1],
            angle_deg: d[2] + e[2],
            thickness_um: d[3] + e[3],
        };
        let scale: f64 = s.iter().map(|v| v.abs()).sum::<f64>() * 2.0;
        let lhs = phase_mismatch_sum(&slopes, &sum);
        let rhs = phase_mismatch_sum(&slopes, &a) + phase_mismatch_sum(&slopes, &b);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * scale);
    }

    #[test]
    fn phase_matching_is_even_in_mismatch(db in -1e6..1e6f64, l in 0.1..20.0f64) {
        prop_assert_eq!(phase_matching_intensity(db, l), phase_matching_intensity(-db, l));
    }

    #[test]
    fn g2_series_closed_form_and_bounds(n in 0.0..5.0f64, dn in 1e-3..1.0f64) {
        let g = g2_heralded_theory(n, DEFAULT_TRUNCATION).unwrap();
        prop_assert!((g - g2_heralded_closed_form(n)).abs() < 1e-10);
        prop_assert!((0.0..1.0).contains(&g));
        prop_assert!(g2_heralded_closed_form(n + dn) > g2_heralded_closed_form(n));
    }

    #[test]
    fn poisson_pmf_normalized(n in 0.0..20.0f64) {
        let s: f64 = (0..200).map(|k| poisson_pmf(n, k).unwrap()).sum();
        prop_assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn estimators_are_scale_invariant(rec in record(), k in 1u64..50) {
        let big = rec.scaled(k);
        let a = klyshko(&rec).unwrap();
        let b = klyshko(&big).unwrap();
        prop_assert!((a.signal.value - b.signal.value).abs() <= 1e-15 * a.signal.value.max(1.0));
        prop_assert!((a.idler.value - b.idler.value).abs() <= 1e-15 * a.idler.value.max(1.0));
        let ga = g2_heralded_measured(&rec).unwrap().value;
        let gb = g2_heralded_measured(&big).unwrap().value;
        prop_assert!((ga - gb).abs() <= 1e-12 * ga.max(1e-300));
        let ra = pair_rate(&rec).unwrap().value;
        let rb = pair_rate(&big).unwrap().value;
        prop_assert!((rb / ra - k as f64).abs() < 1e-12 * k as f64);
    }

    #[test]
    fn records_violating_count_order_are_rejected(rec in record(), extra in 1u64..10) {
        let mut bad = rec;
        bad.c_s12 = bad.c_s1.min(bad.c_s2) + extra;
        prop_assert!(bad.validate().is_err());
        let mut bad = rec;
        bad.c_s1 = bad.n_s.min(bad.n_1) + extra;
        prop_assert!(bad.validate().is_err());
        prop_assert!(rec.validate().is_ok());
    }

    #[test]
    fn brightness_round_trip(r in 1.0..1e9f64, p in 1e-9..1e-2f64, dv in 1e9..1e13f64) {
        let b = brightness(r, p, dv).unwrap();
        let back = b * (p * 1e3) * (dv * 1e-9);
        prop_assert!((back - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn power_chain_transmission_in_unit_interval(f in 0.0..0.99f64, l in 0.0..0.99f64, c in 0.01..1.0f64) {
        let chain = PowerChain { facet_reflectivity: f, lens_reflectivity: l, coupling_efficiency: c };
        prop_assert!(chain.validate().is_ok());
        let t = chain.transmission();
        prop_assert!(t > 0.0 && t <= 1.0);
    }

    #[test]
    fn click_probabilities_are_ordered(n in 0.0..2.0f64, es in 0.0..1.0f64, ei in 0.0..1.0f64) {
        let p = ClickProbabilities::of(&PairSource { mean_pairs: n, eta_signal: es, eta_idler: ei });
        prop_assert!(p.threefold >= -1e-15);
        prop_assert!(p.threefold <= p.signal_idler_1.min(p.signal_idler_2) + 1e-15);
        prop_assert!(p.signal_idler_1 <= p.signal.min(p.idler_1) + 1e-15);
        prop_assert!(p.signal <= 1.0 && p.idler_1 <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sinc_fit_round_trip(l in 1.0..8.0f64, slope in -300.0..-50.0f64, c in 1540.0..1560.0f64) {
        let width = 4.0 * 1.3916 / (slope.abs() * 1e-3 * l);
        let x: Vec<f64> = (0..401).map(|k| c - 2.0 * width + k as f64 * width / 100.0).collect();
        let y = sinc_model(&x, c, l, slope, 2.0, 0.1);
        let s = Spectrum::new(SpectrumAxis::Idler, x, y).unwrap();
        let fit = fit_sinc(&s, c + 0.1 * width, 0.9 * l, FitModel::Dispersion { slope_per_m_nm: slope }, &FitOptions::default()).unwrap();
        let got = fit.length_mm.unwrap();
        prop_assert!(common::rel(got, l).abs() < 1e-3, "{got} vs {l}");
        prop_assert!((fit.center_nm - c).abs() < 1e-3 * width);
    }

    #[test]
    fn config_toml_round_trip_keeps_hash(t in 500.0..800.0f64, len in 1.0..10.0f64, seed_pitch in 10.0..50.0f64) {
        let mut cfg = ProjectConfig::default();
        cfg.geometry.film_thickness_nm = t;
        cfg.process.length_mm = len;
        cfg.solver.pitch_nm = seed_pitch;
        let back = ProjectConfig::from_toml_str(&cfg.to_toml(), "memory").unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn sfg_slice_on_pump_curve_peaks_with_pdc_spectrum() {
    let disp = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
    let (pump, t, len) = (532.0, 25.0, 3.0);
    let period = poling_period(&disp, pump, 810.0, t).unwrap();
    let grid = WavelengthGrid::new(1500.0, 1600.0, 0.2);
    let pdc = pdc_spectrum(&disp, period, len, pump, t, SpectrumAxis::Idler, &grid).unwrap();
    let (k_pdc, _) = pdc.peak().unwrap();
    let slice: Vec<f64> = pdc
        .wavelength_nm
        .iter()
        .map(|&tel| {
            let vis = conjugate_wavelength_nm(pump, tel);
            phase_matching_intensity(sfg_delta_beta(&disp, period, t, vis, tel).unwrap(), len)
        })
        .collect();
    let k_sfg = (0..slice.len()).max_by(|&a, &b| slice[a].total_cmp(&slice[b])).unwrap();
    assert!(k_pdc.abs_diff(k_sfg) <= 1, "pdc peak {k_pdc}, sfg slice peak {k_sfg}");
}
