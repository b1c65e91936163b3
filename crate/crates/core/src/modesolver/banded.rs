//! Square band matrices with equal lower and upper bandwidth, factorized in
//! place by LU without pivoting.
//!
//! Row `i` stores columns `i − bw ..= i + bw` contiguously, so the elimination
//! update runs over contiguous memory in both the pivot row and the target row.
//! Skipping pivoting is safe for the column diagonally dominant shifted
//! operators built by [`super::operator`].

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },
}

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    width: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let width = 2 * bw + 1;
        Self {
            n,
            bw,
            width,
            data: vec![0.0; n * width],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.bw >= i && j <= i + self.bw, "({i},{j}) outside band");
        i * self.width + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.bw < i || j > i + self.bw {
            0.0
        } else {
            self.data[self.offset(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    /// `y = A x` (only valid before factorization).
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert!(!self.factored);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let row = &self.data[i * self.width..(i + 1) * self.width];
            let mut s = 0.0;
            for j in lo..=hi {
                s += row[j + self.bw - i] * x[j];
            }
            y[i] = s;
        }
    }

    /// In-place LU without pivoting; `L` has a unit diagonal.
    pub fn factorize(&mut self) -> Result<(), BandError> {
        let (n, bw, width) = (self.n, self.bw, self.width);
        for k in 0..n {
            let pivot = self.data[k * width + bw];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(BandError::ZeroPivot { row: k });
            }
            let inv = 1.0 / pivot;
            let last = (k + bw).min(n - 1);
            let ncols = last - k;
            let (head, tail) = self.data.split_at_mut((k + 1) * width);
            // pivot row entries for columns k+1..=last
            let prow = &head[k * width + bw + 1..k * width + bw + 1 + ncols];
            for i in k + 1..=last {
                let row = &mut tail[(i - k - 1) * width..(i - k) * width];
                let c = bw - (i - k); // column k in row i
                let l = row[c] * inv;
                row[c] = l;
                if l != 0.0 {
                    let target = &mut row[c + 1..c + 1 + ncols];
                    for (t, p) in target.iter_mut().zip(prow) {
                        *t -= l * p;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the factorization.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "factorize before solving");
        let (n, bw, width) = (self.n, self.bw, self.width);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.data[i * width..(i + 1) * width];
            let mut s = b[i];
            for j in lo..i {
                s -= row[j + bw - i] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let row = &self.data[i * width..(i + 1) * width];
            let mut s = b[i];
            for j in i + 1..=hi {
                s -= row[j + bw - i] * b[j];
            }
            b[i] = s / row[bw];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_diagonally_dominant_band_system() {
        let n = 50;
        let bw = 3;
        let mut a = BandMatrix::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=(i + bw).min(n - 1) {
                let v = if i == j { 10.0 } else { ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6 };
                a.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&x, &mut b);
        let mut lu = a.clone();
        lu.factorize().unwrap();
        lu.solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = BandMatrix::zeros(3, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 0.0);
        a.set(2, 2, 1.0);
        assert_eq!(a.factorize(), Err(BandError::ZeroPivot { row: 1 }));
    }
}
