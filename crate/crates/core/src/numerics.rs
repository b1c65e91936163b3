//! Small numerical kernels: bracketed root finding, straight-line fits and
//! Chebyshev interpolation.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("root not bracketed: f({a}) = {fa}, f({b}) = {fb}")]
    NotBracketed { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("root finder exceeded {0} iterations")]
    MaxIterations(usize),
    #[error("fit needs at least {needed} distinct points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite function value at x = {0}")]
    NonFinite(f64),
}

/// Brent's method on `[a, b]` until the bracket is narrower than `xtol`.
pub fn brent<F, E>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<NumericsError>,
{
    const MAX_ITER: usize = 200;
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if !fa.is_finite() {
        return Err(E::from(NumericsError::NonFinite(a)));
    }
    if !fb.is_finite() {
        return Err(E::from(NumericsError::NonFinite(b)));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(E::from(NumericsError::NotBracketed { a, b, fa, fb }));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(E::from(NumericsError::NonFinite(b)));
        }
    }
    Err(E::from(NumericsError::MaxIterations(MAX_ITER)))
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub points: usize,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit, NumericsError> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(NumericsError::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(NumericsError::TooFewPoints { needed: 2, got: 1 });
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let s2 = if n > 2 { ssr / (nf - 2.0) } else { 0.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        rms_residual: (ssr / nf).sqrt(),
        points: n,
    })
}

/// Total-least-squares line through points; returns the direction angle in
/// degrees in `(−90, 90]`, measured from the `x` axis.
pub fn tls_angle_deg(x: &[f64], y: &[f64]) -> Result<f64, NumericsError> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(NumericsError::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
        sxy += (a - mx) * (b - my);
    }
    // principal axis of the scatter matrix
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut deg = theta.to_degrees();
    if deg <= -90.0 {
        deg += 180.0;
    } else if deg > 90.0 {
        deg -= 180.0;
    }
    Ok(deg)
}

/// Chebyshev interpolant of a function on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// First-kind Chebyshev nodes mapped to `[lo, hi]`.
    pub fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        (0..n)
            .map(|k| mid + half * (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos())
            .collect()
    }

    /// Interpolant through `values` sampled at [`Chebyshev::nodes`].
    pub fn from_values(lo: f64, hi: f64, values: &[f64]) -> Self {
        let n = values.len();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                2.0 * s / n as f64
            })
            .collect();
        Self { lo, hi, coeffs }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + 0.5 * self.coeffs[0]
    }

    /// Magnitude of the last coefficient, a proxy for the truncation error.
    pub fn tail(&self) -> f64 {
        self.coeffs.last().map(|c| c.abs()).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| Ok::<_, NumericsError>(x * x * x - 2.0), 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-11);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        let r = brent(|x| Ok::<_, NumericsError>(x * x + 1.0), -1.0, 1.0, 1e-9);
        assert!(matches!(r, Err(NumericsError::NotBracketed { .. })));
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn tls_angle_of_diagonal() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, -1.0, -2.0];
        assert!((tls_angle_deg(&x, &y).unwrap() + 45.0).abs() < 1e-12);
        let y = [1.0, 1.0, 1.0];
        assert!(tls_angle_deg(&x, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chebyshev_reproduces_smooth_function() {
        let f = |x: f64| (0.3 * x).exp() / (1.0 + x * x);
        let nodes = Chebyshev::nodes(0.5, 2.0, 14);
        let c = Chebyshev::from_values(0.5, 2.0, &nodes.iter().map(|&x| f(x)).collect::<Vec<_>>());
        for k in 0..50 {
            let x = 0.5 + 1.5 * k as f64 / 49.0;
            assert!((c.eval(x) - f(x)).abs() < 1e-8);
        }
    }
}
