mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfln_pdc::config::ProjectConfig;
use tfln_pdc::modesolver::{solve_modes, NeffSolver, Refinement, SolverOptions, Symmetry};
use tfln_pdc::waveguide::{GridSpec, IndexMap, WaveguideGeometry};

use common::slab_te_modes;

fn random_stack(rng: &mut ChaCha8Rng) -> (Vec<(f64, f64)>, f64) {
    let substrate = rng.random_range(1.44..1.50);
    let cover = rng.random_range(1.0..1.45);
    let mut layers = vec![(2.0, substrate), (rng.random_range(0.3..0.8), rng.random_range(1.9..2.3))];
    if rng.random_bool(0.5) {
        layers.push((rng.random_range(0.1..0.4), rng.random_range(1.6..2.0)));
    }
    layers.push((2.0, cover));
    (layers, rng.random_range(0.8..1.6))
}

#[test]
fn slab_stacks_match_transfer_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = SolverOptions::default();
    for _ in 0..5 {
        let (layers, lambda) = random_stack(&mut rng);
        let oracle = slab_te_modes(&layers, lambda);
        let map = IndexMap::from_layers(&layers, 0.002, lambda).unwrap();
        let sol = solve_modes(&map, 1, Symmetry::None, &opts).unwrap();
        let got = sol.fundamental().expect("fundamental guided").n_eff;
        let err = (got - oracle[0]).abs();
        assert!(err < 1e-4, "stack {layers:?} at {lambda} µm: solver {got}, oracle {}", oracle[0]);
    }
}

#[test]
fn oracle_counts_symmetric_slab_modes() {
    // symmetric slab with V = k0 d sqrt(n1² - n2²) ≈ 7.2 guides three TE modes
    let layers = [(3.0, 1.45), (1.0, 2.0), (3.0, 1.45)];
    assert_eq!(slab_te_modes(&layers, 1.2).len(), 3);
}

#[test]
fn fundamental_index_converges_monotonically_with_pitch() {
    let cfg = ProjectConfig::default();
    let solver = NeffSolver::new(cfg.layer_materials().unwrap(), GridSpec::default(), Refinement::Fixed);
    let g = WaveguideGeometry::nominal();
    let values: Vec<f64> = [50.0, 25.0, 12.5]
        .iter()
        .map(|&p| solver.solve_at_pitch(&g, 1.55, 25.0, p).unwrap().expect("guided"))
        .collect();
    let d1 = values[1] - values[0];
    let d2 = values[2] - values[1];
    assert!(d1.signum() == d2.signum(), "non-monotone sequence {values:?}");
    assert!(d2.abs() < d1.abs(), "differences do not shrink: {values:?}");
}

#[test]
fn fundamental_mode_field_invariants() {
    let cfg = ProjectConfig::default();
    let materials = cfg.layer_materials().unwrap();
    let grid = GridSpec::default().with_pitch(50.0);
    let map = IndexMap::rasterize(&WaveguideGeometry::nominal(), &materials, 1.55, 25.0, &grid).unwrap();
    let sol = solve_modes(&map, 2, Symmetry::None, &SolverOptions::default()).unwrap();
    let m = sol.fundamental().expect("guided");
    assert!(m.n_eff > sol.cutoff_index && m.n_eff < map.max_index());
    assert!(sol.cutoff_index >= 1.444, "cutoff {}", sol.cutoff_index);
    let energy: f64 = m.field.iter().map(|e| e * e).sum::<f64>() * map.dx_um * map.dy_um;
    assert!((energy - 1.0).abs() < 1e-10, "energy {energy}");
    let peak = m.field.iter().cloned().fold(0.0, f64::max);
    let trough = m.field.iter().cloned().fold(0.0, f64::min);
    assert!(trough >= -1e-6 * peak, "sign change: {trough} against {peak}");
    let mut worst: f64 = 0.0;
    for j in 0..m.ny {
        for i in 0..m.nx / 2 {
            worst = worst.max((m.field_at(i, j) - m.field_at(m.nx - 1 - i, j)).abs());
        }
    }
    assert!(worst <= 1e-6 * peak, "mirror mismatch {worst}");
    assert!(m.residual < 1e-8, "residual {}", m.residual);
}
