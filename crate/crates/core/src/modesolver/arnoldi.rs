//! Shift-invert Arnoldi with explicit restarts.
//!
//! Iterates with `B = (A − σI)⁻¹`, whose dominant eigenvalues `μ` map to the
//! eigenvalues of `A` closest to `σ` through `λ = σ + 1/μ`. Ritz pairs come
//! from the small Hessenberg matrix (Schur eigenvalues, then inverse
//! iteration for the eigenvectors) and are checked against `A` directly.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::BandMatrix;
use super::operator::Stencil;

const START_SEED: u64 = 0x6d6f_6465;

#[derive(Debug, Clone)]
pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Relative residual `‖Ax − λx‖ / (|λ| ‖x‖)` required above `floor`.
    pub tol: f64,
    /// Looser residual for Ritz values below `floor`.
    pub loose_tol: f64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 40,
            max_restarts: 40,
            tol: 1e-10,
            loose_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ArnoldiReport {
    pub pairs: Vec<EigenPair>,
    pub restarts: usize,
    pub solves: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Eigenvector of the Hessenberg matrix for eigenvalue `mu`.
fn hessenberg_vector(h: &DMatrix<f64>, mu: f64) -> DVector<f64> {
    let m = h.nrows();
    let scale = mu.abs().max(1e-300);
    let mut shifted = h.clone();
    for k in 0..m {
        shifted[(k, k)] -= mu * (1.0 + 1e-13) + 1e-14 * scale;
    }
    let lu = shifted.lu();
    let mut y = DVector::from_element(m, 1.0);
    for _ in 0..3 {
        match lu.solve(&y) {
            Some(z) if z.iter().all(|v| v.is_finite()) => {
                let nz = z.norm();
                y = z / nz;
            }
            _ => break,
        }
    }
    y
}

/// Computes the `nev` eigenvalues of `A` closest to `sigma` from below.
///
/// `factored` must hold the LU factors of `A − σI`. Ritz values above `floor`
/// must reach `opts.tol`; the others only `opts.loose_tol`.
pub fn shift_invert(
    stencil: &Stencil,
    factored: &BandMatrix,
    sigma: f64,
    nev: usize,
    floor: f64,
    opts: &ArnoldiOptions,
) -> ArnoldiReport {
    let n = stencil.len();
    let nev = nev.min(n);
    let m = opts.krylov_dim.max(2 * nev + 10).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.5).collect();
    let mut solves = 0;
    let mut best: Vec<EigenPair> = Vec::new();
    let mut ax = vec![0.0; n];

    for restart in 0..=opts.max_restarts {
        let s = norm(&start);
        let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|v| v / s).collect()];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut dim = m;
        for k in 0..m {
            let mut w = basis[k].clone();
            factored.solve_in_place(&mut w);
            solves += 1;
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[(i, k)] += c;
                    axpy(-c, v, &mut w);
                }
            }
            let beta = norm(&w);
            h[(k + 1, k)] = beta;
            if beta <= 1e-14 * h.column(k).norm() {
                dim = k + 1;
                break;
            }
            if k + 1 < m {
                basis.push(w.iter().map(|v| v / beta).collect());
            }
        }
        let hm = h.view((0, 0), (dim, dim)).into_owned();
        let eig = hm.clone().complex_eigenvalues();
        let mut mus: Vec<f64> = eig
            .iter()
            .filter(|c| c.im.abs() <= 1e-8 * c.norm())
            .map(|c| c.re)
            .filter(|&mu| mu != 0.0)
            .collect();
        // nearest to sigma first
        mus.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
        mus.truncate(nev);

        let mut pairs = Vec::with_capacity(mus.len());
        for &mu in &mus {
            let y = hessenberg_vector(&hm, mu);
            let mut x = vec![0.0; n];
            for (j, v) in basis.iter().take(dim).enumerate() {
                axpy(y[j], v, &mut x);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            let lambda = sigma + 1.0 / mu;
            stencil.apply(&x, &mut ax);
            let r: f64 = ax
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            pairs.push(EigenPair {
                value: lambda,
                vector: x,
                residual: r / lambda.abs().max(f64::MIN_POSITIVE),
            });
        }
        pairs.sort_by(|a, b| b.value.partial_cmp(&a.value).unwrap());
        let done = pairs.len() == nev
            && pairs.iter().all(|p| {
                let tol = if p.value > floor { opts.tol } else { opts.loose_tol };
                p.residual < tol
            });
        log::trace!(
            "arnoldi: restart={restart} dim={dim} residuals={:?}",
            pairs.iter().map(|p| p.residual).collect::<Vec<_>>()
        );
        best = pairs;
        if done {
            return ArnoldiReport {
                pairs: best,
                restarts: restart,
                solves,
                converged: true,
            };
        }
        start = vec![0.0; n];
        for p in &best {
            axpy(1.0, &p.vector, &mut start);
        }
        if norm(&start) == 0.0 {
            start = (0..n).map(|_| rng.random::<f64>() + 0.5).collect();
        }
    }
    ArnoldiReport {
        pairs: best,
        restarts: opts.max_restarts,
        solves,
        converged: false,
    }
}
