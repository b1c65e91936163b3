//! Least-squares fit of a sinc² phase-matching lobe to a measured spectrum.
//!
//! Model: `y(λ) = A·sinc²(κ) + B` with `κ = q·(λ − λ₀)`. With a known mismatch
//! slope `s = dΔβ/dλ` (m⁻¹/nm) the rate is `q = s·L/2`, so the fit returns an
//! effective length `L`. Without one, `q` itself is fitted.
//!
//! Minimization is Levenberg-Marquardt with Marquardt diagonal scaling and
//! analytic derivatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spectrum::{sinc, Spectrum};
use super::QpmError;

/// `sinc²(u) = 1/2` at `u = HALF_MAX_ARG`.
pub const HALF_MAX_ARG: f64 = 1.391_557_378_251_51;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FitModel {
    /// Linearized mismatch slope at the centre, m⁻¹ per nm; fits `L`.
    Dispersion { slope_per_m_nm: f64 },
    /// Free rate `q` (per nm); no length is reported.
    FreeCoefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when every relative parameter step is below this.
    pub rel_step_tol: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_step_tol: 1e-8,
            min_points: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SincFit {
    pub center_nm: f64,
    pub center_stderr_nm: f64,
    /// Effective length (dispersion mode only).
    pub length_mm: Option<f64>,
    pub length_stderr_mm: Option<f64>,
    /// Rate `q` of the sinc argument, per nm.
    pub rate_per_nm: f64,
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    pub offset: f64,
    pub offset_stderr: f64,
    pub rms_residual: f64,
    pub iterations: usize,
    /// Parameter covariance in the order (centre, length or rate, amplitude, offset).
    pub covariance: [[f64; 4]; 4],
}

fn dsinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        -u / 3.0 + u * u * u / 30.0
    } else {
        (u.cos() - u.sin() / u) / u
    }
}

struct Model {
    /// κ per (nm · parameter) when the second parameter is a length in mm.
    rate_scale: f64,
}

impl Model {
    fn eval(&self, p: &[f64; 4], x: f64) -> (f64, [f64; 4]) {
        let [c, l, a, b] = *p;
        let q = self.rate_scale * l;
        let u = q * (x - c);
        let s = sinc(u);
        let g = s * s;
        let dg = 2.0 * s * dsinc(u);
        (a * g + b, [-a * dg * q, a * dg * self.rate_scale * (x - c), g, 1.0])
    }
}

/// Fits `spectrum` starting from `center_nm` and `length_mm`.
///
/// In `FreeCoefficient` mode `length_mm` is ignored and the initial rate is
/// taken from the half-maximum width of the data.
pub fn fit_sinc(spectrum: &Spectrum, center_nm: f64, length_mm: f64, model: FitModel, opts: &FitOptions) -> Result<SincFit, QpmError> {
    let n = spectrum.len();
    if n < opts.min_points {
        return Err(QpmError::Input(format!("need at least {} points, got {n}", opts.min_points)));
    }
    let rate_scale = match model {
        FitModel::Dispersion { slope_per_m_nm } => {
            if !(slope_per_m_nm.is_finite() && slope_per_m_nm != 0.0) {
                return Err(QpmError::Fit("mismatch slope must be finite and non-zero".into()));
            }
            0.5 * slope_per_m_nm.abs() * 1e-3
        }
        FitModel::FreeCoefficient => 1.0,
    };
    let m = Model { rate_scale };
    let x = &spectrum.wavelength_nm;
    let y = &spectrum.intensity;
    let l0 = match model {
        FitModel::Dispersion { .. } => length_mm,
        FitModel::FreeCoefficient => match spectrum.fwhm() {
            Some(f) if f.width_nm > 0.0 => 2.0 * HALF_MAX_ARG / f.width_nm,
            _ => 20.0 / (x[n - 1] - x[0]),
        },
    };
    let fwhm_nm = 2.0 * HALF_MAX_ARG / (rate_scale * l0).abs();
    let span = x[n - 1] - x[0];
    if !(span >= 2.0 * fwhm_nm) {
        return Err(QpmError::Input(format!(
            "spectrum spans {span:.4} nm, less than two nominal widths ({:.4} nm)",
            2.0 * fwhm_nm
        )));
    }
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut p = [center_nm, l0, ymax - ymin, ymin];

    let residuals = |p: &[f64; 4]| -> (DVector<f64>, DMatrix<f64>) {
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for k in 0..n {
            let (v, d) = m.eval(p, x[k]);
            r[k] = y[k] - v;
            for c in 0..4 {
                j[(k, c)] = d[c];
            }
        }
        (r, j)
    };
    let mut damping = 1e-3;
    let (mut r, mut jac) = residuals(&p);
    let mut cost = r.norm_squared();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for d in 0..4 {
                a[(d, d)] += damping * jtj[(d, d)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                damping *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            let (rt, jt) = residuals(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let rel = (0..4)
                    .map(|d| step[d].abs() / (trial[d].abs() + 1e-12))
                    .fold(0.0, f64::max);
                p = trial;
                r = rt;
                jac = jt;
                cost = ct;
                damping = (damping * 0.3).max(1e-12);
                accepted = true;
                if rel < opts.rel_step_tol {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // no downhill step at any damping: stationary point
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(QpmError::Fit(format!(
            "no convergence after {iterations} iterations (cost {cost:.3e}, parameters {p:?})"
        )));
    }
    if p[1] < 0.0 && model == FitModel::FreeCoefficient {
        p[1] = -p[1];
    }
    if p[1] < 0.0 {
        return Err(QpmError::Fit(format!("negative effective length {}", p[1])));
    }
    let dof = (n as f64 - 4.0).max(1.0);
    let s2 = cost / dof;
    let jtj = jac.transpose() * &jac;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| QpmError::Fit("singular normal matrix".into()))?
        * s2;
    let mut covariance = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            covariance[a][b] = cov[(a, b)];
        }
    }
    let se = |k: usize| cov[(k, k)].max(0.0).sqrt();
    let (length_mm, length_stderr_mm, rate) = match model {
        FitModel::Dispersion { .. } => (Some(p[1]), Some(se(1)), rate_scale * p[1]),
        FitModel::FreeCoefficient => (None, None, p[1]),
    };
    Ok(SincFit {
        center_nm: p[0],
        center_stderr_nm: se(0),
        length_mm,
        length_stderr_mm,
        rate_per_nm: rate,
        amplitude: p[2],
        amplitude_stderr: se(2),
        offset: p[3],
        offset_stderr: se(3),
        rms_residual: (cost / n as f64).sqrt(),
        iterations,
        covariance,
    })
}

/// Samples of the fit model, for synthetic data and overlays.
pub fn sinc_model(x_nm: &[f64], center_nm: f64, length_mm: f64, slope_per_m_nm: f64, amplitude: f64, offset: f64) -> Vec<f64> {
    let q = 0.5 * slope_per_m_nm.abs() * 1e-3 * length_mm;
    x_nm.iter()
        .map(|&x| {
            let s = sinc(q * (x - center_nm));
            amplitude * s * s + offset
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpm::spectrum::SpectrumAxis;

    const SLOPE: f64 = 110.0;

    fn synthetic(length_mm: f64) -> Spectrum {
        let x: Vec<f64> = (0..401).map(|k| 1500.0 + 0.25 * k as f64).collect();
        let y = sinc_model(&x, 1550.0, length_mm, SLOPE, 1.0, 0.0);
        Spectrum::new(SpectrumAxis::Idler, x, y).unwrap()
    }

    #[test]
    fn half_max_argument() {
        let s = sinc(HALF_MAX_ARG);
        assert!((s * s - 0.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for u in [1e-5, 0.3, 1.7, -2.4] {
            let h = 1e-6;
            let fd = (sinc(u + h) - sinc(u - h)) / (2.0 * h);
            assert!((fd - dsinc(u)).abs() < 1e-8, "{u}");
        }
    }

    #[test]
    fn noiseless_self_fit_recovers_length() {
        let s = synthetic(3.0);
        let f = fit_sinc(&s, 1550.3, 2.5, FitModel::Dispersion { slope_per_m_nm: SLOPE }, &FitOptions::default()).unwrap();
        assert!((f.length_mm.unwrap() - 3.0).abs() < 3e-3 * 0.1);
        assert!((f.center_nm - 1550.0).abs() < 1e-6);
    }

    #[test]
    fn free_mode_recovers_rate() {
        let s = synthetic(3.0);
        let f = fit_sinc(&s, 1551.0, 0.0, FitModel::FreeCoefficient, &FitOptions::default()).unwrap();
        let q = 0.5 * SLOPE * 1e-3 * 3.0;
        assert!(f.length_mm.is_none());
        assert!((f.rate_per_nm.abs() - q).abs() / q < 1e-6);
    }

    #[test]
    fn too_few_points_or_narrow_span_is_rejected() {
        let s = synthetic(3.0);
        let short = Spectrum::new(SpectrumAxis::Idler, s.wavelength_nm[..10].to_vec(), s.intensity[..10].to_vec()).unwrap();
        assert!(fit_sinc(&short, 1550.0, 3.0, FitModel::Dispersion { slope_per_m_nm: SLOPE }, &FitOptions::default()).is_err());
        let narrow = Spectrum::new(
            SpectrumAxis::Idler,
            s.wavelength_nm[180..220].to_vec(),
            s.intensity[180..220].to_vec(),
        )
        .unwrap();
        assert!(fit_sinc(&narrow, 1550.0, 3.0, FitModel::Dispersion { slope_per_m_nm: SLOPE }, &FitOptions::default()).is_err());
    }
}
