//! Five-point semivectorial quasi-TE operator.
//!
//! For the dominant lateral field `E` the discretized operator is
//!
//! ```text
//! (A E)_ij = ε_{i+1} / ε̄₊ · E_{i+1} / dx² + ε_{i−1} / ε̄₋ · E_{i−1} / dx²
//!          − ε_i (1/ε̄₊ + 1/ε̄₋) E_i / dx²
//!          + (E_{j+1} + E_{j−1} − 2 E_j) / dy² + k0² ε_i E_i
//! ```
//!
//! with `ε̄± = (ε_i + ε_{i±1}) / 2`, i.e. `∂x(ε⁻¹ ∂x(ε E)) + ∂y² E + k0² ε E`.
//! Eigenvalues are `β² = (n_eff k0)²`. Outer walls are Dirichlet. With a
//! mirror symmetry only the right half (`x > 0`) is discretized and the
//! centre wall becomes a symmetric (even) or antisymmetric (odd) ghost.

use crate::waveguide::IndexMap;

use super::banded::BandMatrix;
use super::Symmetry;

/// Stencil coefficients per unknown.
#[derive(Debug, Clone)]
pub struct Stencil {
    /// Columns in the solved domain.
    pub cols: usize,
    pub rows: usize,
    /// First map column of the solved domain.
    pub col_offset: usize,
    /// True when `x` runs fastest in the unknown ordering.
    pub x_fast: bool,
    pub diag: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: f64,
    pub north: f64,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bandwidth(&self) -> usize {
        if self.x_fast {
            self.cols
        } else {
            self.rows
        }
    }

    /// Unknown index of domain cell `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        if self.x_fast {
            j * self.cols + i
        } else {
            i * self.rows + j
        }
    }

    pub fn build(map: &IndexMap, k0: f64, symmetry: Symmetry) -> Self {
        let slab = map.nx == 1;
        let half = symmetry != Symmetry::None && !slab;
        let col_offset = if half { map.nx / 2 } else { 0 };
        let cols = map.nx - col_offset;
        let rows = map.ny;
        let x_fast = cols <= rows;
        let n = cols * rows;
        let idx = |i: usize, j: usize| if x_fast { j * cols + i } else { i * rows + j };
        let idx2 = 1.0 / (map.dx_um * map.dx_um);
        let idy2 = 1.0 / (map.dy_um * map.dy_um);
        let mut diag = vec![0.0; n];
        let mut west = vec![0.0; n];
        let mut east = vec![0.0; n];
        for j in 0..rows {
            for i in 0..cols {
                let gi = i + col_offset;
                let e = map.eps_at(gi, j);
                let mut d = k0 * k0 * e - 2.0 * idy2;
                let p = idx(i, j);
                if !slab {
                    // west neighbour
                    if i > 0 {
                        let en = map.eps_at(gi - 1, j);
                        let mean = 0.5 * (e + en);
                        west[p] = en / mean * idx2;
                        d -= e / mean * idx2;
                    } else if half {
                        if symmetry == Symmetry::Odd {
                            d -= 2.0 * idx2;
                        }
                    } else {
                        d -= idx2;
                    }
                    if i + 1 < cols {
                        let en = map.eps_at(gi + 1, j);
                        let mean = 0.5 * (e + en);
                        east[p] = en / mean * idx2;
                        d -= e / mean * idx2;
                    } else {
                        d -= idx2;
                    }
                }
                diag[p] = d;
            }
        }
        Self {
            cols,
            rows,
            col_offset,
            x_fast,
            diag,
            west,
            east,
            south: idy2,
            north: idy2,
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for j in 0..self.rows {
            for i in 0..self.cols {
                let p = self.index(i, j);
                let mut s = self.diag[p] * x[p];
                if i > 0 {
                    s += self.west[p] * x[self.index(i - 1, j)];
                }
                if i + 1 < self.cols {
                    s += self.east[p] * x[self.index(i + 1, j)];
                }
                if j > 0 {
                    s += self.south * x[self.index(i, j - 1)];
                }
                if j + 1 < self.rows {
                    s += self.north * x[self.index(i, j + 1)];
                }
                y[p] = s;
            }
        }
    }

    /// Infinity norm of `A`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.len())
            .map(|p| self.diag[p].abs() + self.west[p] + self.east[p] + self.south + self.north)
            .fold(0.0, f64::max)
    }

    /// Band form of `A − σ I`.
    pub fn shifted_band(&self, sigma: f64) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.len(), self.bandwidth());
        for j in 0..self.rows {
            for i in 0..self.cols {
                let p = self.index(i, j);
                m.set(p, p, self.diag[p] - sigma);
                if i > 0 {
                    m.set(p, self.index(i - 1, j), self.west[p]);
                }
                if i + 1 < self.cols {
                    m.set(p, self.index(i + 1, j), self.east[p]);
                }
                if j > 0 {
                    m.set(p, self.index(i, j - 1), self.south);
                }
                if j + 1 < self.rows {
                    m.set(p, self.index(i, j + 1), self.north);
                }
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_map_has_constant_row_sums_inside() {
        let map = IndexMap::uniform(1.5, 6, 5, 0.1, 1.0);
        let s = Stencil::build(&map, 2.0, Symmetry::None);
        let x = vec![1.0; s.len()];
        let mut y = vec![0.0; s.len()];
        s.apply(&x, &mut y);
        let inner = s.index(2, 2);
        assert!((y[inner] - 4.0 * 2.25).abs() < 1e-9);
    }

    #[test]
    fn band_and_stencil_agree() {
        let mut map = IndexMap::uniform(1.5, 6, 4, 0.1, 1.0);
        for (k, e) in map.eps.iter_mut().enumerate() {
            *e = 1.0 + (k % 7) as f64 * 0.3;
        }
        for sym in [Symmetry::None, Symmetry::Even, Symmetry::Odd] {
            let s = Stencil::build(&map, 3.0, sym);
            let b = s.shifted_band(0.0);
            let x: Vec<f64> = (0..s.len()).map(|k| (k as f64).cos()).collect();
            let mut y1 = vec![0.0; s.len()];
            let mut y2 = vec![0.0; s.len()];
            s.apply(&x, &mut y1);
            b.mul_vec(&x, &mut y2);
            for (a, b) in y1.iter().zip(&y2) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
