//! Phase-matching spectra: PDC marginals, temperature tuning and the
//! sum-frequency map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{line_fit, tls_angle_deg, LineFit};

use super::{
    bracketed_root, conjugate_wavelength_nm, grating_vector, modal_mismatch, sum_wavelength_nm, Dispersion, Hold, QpmError,
    SPEED_OF_LIGHT,
};

/// `sin(x)/x` with the removable singularity filled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Phase-matching intensity `sinc²(Δβ·L/2)` for `length_mm`.
pub fn phase_matching_intensity(delta_beta: f64, length_mm: f64) -> f64 {
    let s = sinc(0.5 * delta_beta * length_mm * 1e-3);
    s * s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumAxis {
    Signal,
    Idler,
    Sfg,
}

impl SpectrumAxis {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumAxis::Signal => "signal",
            SpectrumAxis::Idler => "idler",
            SpectrumAxis::Sfg => "sfg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub axis: SpectrumAxis,
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl Spectrum {
    pub fn new(axis: SpectrumAxis, wavelength_nm: Vec<f64>, intensity: Vec<f64>) -> Result<Self, QpmError> {
        if wavelength_nm.len() != intensity.len() {
            return Err(QpmError::Input("wavelength and intensity lengths differ".into()));
        }
        if wavelength_nm.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(QpmError::Input("wavelength axis must be strictly increasing".into()));
        }
        if intensity.iter().any(|v| !v.is_finite()) {
            return Err(QpmError::Input("non-finite intensity".into()));
        }
        Ok(Self {
            axis,
            wavelength_nm,
            intensity,
        })
    }

    pub fn len(&self) -> usize {
        self.wavelength_nm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelength_nm.is_empty()
    }

    pub fn peak(&self) -> Option<(usize, f64)> {
        self.intensity
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (k, &v)| match acc {
                Some((_, m)) if m >= v => acc,
                _ => Some((k, v)),
            })
    }

    /// Full width at half maximum of the peak, by linear interpolation of the
    /// half-maximum crossings.
    pub fn fwhm(&self) -> Option<Fwhm> {
        let (k, max) = self.peak()?;
        let half = 0.5 * max;
        let x = &self.wavelength_nm;
        let y = &self.intensity;
        let mut lo = None;
        for j in (0..k).rev() {
            if y[j] <= half {
                lo = Some(x[j] + (half - y[j]) / (y[j + 1] - y[j]) * (x[j + 1] - x[j]));
                break;
            }
        }
        let mut hi = None;
        for j in k + 1..y.len() {
            if y[j] <= half {
                hi = Some(x[j - 1] + (y[j - 1] - half) / (y[j - 1] - y[j]) * (x[j] - x[j - 1]));
                break;
            }
        }
        let (lo, hi) = (lo?, hi?);
        Some(Fwhm {
            peak_nm: x[k],
            lo_nm: lo,
            hi_nm: hi,
            width_nm: hi - lo,
            width_ghz: SPEED_OF_LIGHT * (1.0 / lo - 1.0 / hi),
        })
    }

    /// Two-column CSV with a one-line header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("wavelength_nm,{}_intensity\n", self.axis.name());
        for (l, i) in self.wavelength_nm.iter().zip(&self.intensity) {
            s.push_str(&format!("{l:.6},{i:.9e}\n"));
        }
        s
    }

    /// Reads a two-column CSV with a one-line header.
    pub fn from_csv(text: &str, axis: SpectrumAxis) -> Result<Self, QpmError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| QpmError::Input(format!("row {}: {e}", row + 2)))?;
            if rec.len() < 2 {
                return Err(QpmError::Input(format!("row {}: expected two columns", row + 2)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| QpmError::Input(format!("row {}: `{s}`: {e}", row + 2)))
            };
            x.push(parse(&rec[0])?);
            y.push(parse(&rec[1])?);
        }
        if x.is_empty() {
            return Err(QpmError::Input("spectrum file has no data rows".into()));
        }
        Self::new(axis, x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fwhm {
    pub peak_nm: f64,
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub width_nm: f64,
    pub width_ghz: f64,
}

/// Inclusive wavelength grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
}

impl WavelengthGrid {
    pub fn new(start_nm: f64, stop_nm: f64, step_nm: f64) -> Self {
        Self {
            start_nm,
            stop_nm,
            step_nm,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>, QpmError> {
        if !(self.step_nm > 0.0 && self.stop_nm >= self.start_nm && self.start_nm > 0.0) {
            return Err(QpmError::Input(format!("bad wavelength grid {self:?}")));
        }
        let n = ((self.stop_nm - self.start_nm) / self.step_nm + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start_nm + k as f64 * self.step_nm).collect())
    }
}

/// Normalized PDC marginal spectrum on the signal or idler axis for a cw pump.
pub fn pdc_spectrum(
    disp: &dyn Dispersion,
    period_um: f64,
    length_mm: f64,
    pump_nm: f64,
    temperature_c: f64,
    axis: SpectrumAxis,
    grid: &WavelengthGrid,
) -> Result<Spectrum, QpmError> {
    if axis == SpectrumAxis::Sfg {
        return Err(QpmError::Input("PDC spectra use the signal or idler axis".into()));
    }
    let xs = grid.points()?;
    if xs.iter().any(|&l| l <= pump_nm) {
        return Err(QpmError::Input("PDC grid must lie above the pump wavelength".into()));
    }
    let k = grating_vector(period_um);
    let dbs: Vec<Result<f64, QpmError>> = xs
        .par_iter()
        .map(|&l| {
            let c = conjugate_wavelength_nm(pump_nm, l);
            let (s, i) = if l <= c { (l, c) } else { (c, l) };
            Ok(modal_mismatch(disp, pump_nm, s, i, temperature_c)? - k)
        })
        .collect();
    if dbs.iter().all(|r| r.is_err()) {
        return Err(dbs.into_iter().next().unwrap().unwrap_err());
    }
    let mut y = Vec::with_capacity(xs.len());
    for r in dbs {
        y.push(phase_matching_intensity(r?, length_mm));
    }
    let max = y.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        y.iter_mut().for_each(|v| *v /= max);
    }
    Spectrum::new(axis, xs, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TuningRow {
    pub temperature_c: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult {
    pub rows: Vec<TuningRow>,
    /// nm/K.
    pub signal_slope: LineFit,
    /// nm/K.
    pub idler_slope: LineFit,
    /// `d(1/λ_s)/dT + d(1/λ_i)/dT`, nm⁻¹/K.
    pub frequency_sum_per_k: f64,
}

/// Phase-matched signal and idler versus temperature at fixed pump and period.
pub fn temperature_tuning(
    disp: &dyn Dispersion,
    period_um: f64,
    pump_nm: f64,
    temperatures_c: &[f64],
    signal_window_nm: (f64, f64),
) -> Result<TuningResult, QpmError> {
    if temperatures_c.len() < 3 {
        return Err(QpmError::Input("temperature tuning needs at least 3 temperatures".into()));
    }
    let rows = temperatures_c
        .par_iter()
        .map(|&t| {
            let tr = super::phase_matched(
                disp,
                period_um,
                t,
                Hold::Pump {
                    pump_nm,
                    lo_nm: signal_window_nm.0,
                    hi_nm: signal_window_nm.1,
                },
            )?;
            Ok(TuningRow {
                temperature_c: t,
                signal_nm: tr.signal_nm,
                idler_nm: tr.idler_nm,
            })
        })
        .collect::<Result<Vec<_>, QpmError>>()?;
    let t: Vec<f64> = rows.iter().map(|r| r.temperature_c).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.signal_nm).collect();
    let i: Vec<f64> = rows.iter().map(|r| r.idler_nm).collect();
    let inv_s: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    let inv_i: Vec<f64> = i.iter().map(|v| 1.0 / v).collect();
    let fs = line_fit(&t, &inv_s)?.slope + line_fit(&t, &inv_i)?.slope;
    Ok(TuningResult {
        signal_slope: line_fit(&t, &s)?,
        idler_slope: line_fit(&t, &i)?,
        frequency_sum_per_k: fs,
        rows,
    })
}

/// Coordinates in which the ridge angle of the SFG map is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RidgeAxes {
    /// Optical frequencies of both inputs, visible on the vertical axis.
    #[default]
    Frequency,
    /// Wavelengths in nm, visible on the vertical axis.
    Wavelength,
    /// Wavelengths scaled so each scan window spans the unit interval.
    NormalizedWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SfgMap {
    pub visible_nm: Vec<f64>,
    pub telecom_nm: Vec<f64>,
    /// Row-major, one row per visible wavelength.
    pub intensity: Vec<f64>,
    /// Phase-matched `(telecom_nm, visible_nm)` pairs, one per visible row.
    pub locus: Vec<(f64, f64)>,
    pub ridge_angle_deg: f64,
    pub axes: RidgeAxes,
}

impl SfgMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.intensity[row * self.telecom_nm.len() + col]
    }

    /// Ridge angle of the same locus in other coordinates.
    pub fn ridge_angle_in(&self, axes: RidgeAxes) -> Result<f64, QpmError> {
        ridge_angle(&self.locus, &self.visible_nm, &self.telecom_nm, axes)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.visible_nm.len(), self.telecom_nm.len())
    }

    /// CSV with columns visible_nm, telecom_nm, intensity.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("visible_nm,telecom_nm,intensity\n");
        for (r, v) in self.visible_nm.iter().enumerate() {
            for (c, t) in self.telecom_nm.iter().enumerate() {
                s.push_str(&format!("{v:.4},{t:.4},{:.9e}\n", self.at(r, c)));
            }
        }
        s
    }
}

fn ridge_angle(locus: &[(f64, f64)], vis: &[f64], tel: &[f64], axes: RidgeAxes) -> Result<f64, QpmError> {
    let (tlo, thi) = (tel[0], tel[tel.len() - 1]);
    let (vlo, vhi) = (vis[0], vis[vis.len() - 1]);
    let (x, y): (Vec<f64>, Vec<f64>) = locus
        .iter()
        .map(|&(t, v)| match axes {
            RidgeAxes::Frequency => (SPEED_OF_LIGHT / t * 1e-3, SPEED_OF_LIGHT / v * 1e-3),
            RidgeAxes::Wavelength => (t, v),
            RidgeAxes::NormalizedWindow => ((t - tlo) / (thi - tlo), (v - vlo) / (vhi - vlo)),
        })
        .unzip();
    Ok(tls_angle_deg(&x, &y)?)
}

/// SFG mismatch `β_sum − β_vis − β_tel − 2π/Λ`, m⁻¹.
pub fn sfg_delta_beta(disp: &dyn Dispersion, period_um: f64, temperature_c: f64, visible_nm: f64, telecom_nm: f64) -> Result<f64, QpmError> {
    let sum = sum_wavelength_nm(visible_nm, telecom_nm);
    Ok(modal_mismatch(disp, sum, visible_nm, telecom_nm, temperature_c)? - grating_vector(period_um))
}

/// Sum-frequency phase-matching map and the orientation of its ridge.
pub fn sfg_map(
    disp: &dyn Dispersion,
    period_um: f64,
    length_mm: f64,
    temperature_c: f64,
    visible: &WavelengthGrid,
    telecom: &WavelengthGrid,
    axes: RidgeAxes,
) -> Result<SfgMap, QpmError> {
    let vis = visible.points()?;
    let tel = telecom.points()?;
    let rows: Vec<Vec<f64>> = vis
        .par_iter()
        .map(|&v| {
            tel.iter()
                .map(|&t| Ok(phase_matching_intensity(sfg_delta_beta(disp, period_um, temperature_c, v, t)?, length_mm)))
                .collect::<Result<Vec<_>, QpmError>>()
        })
        .collect::<Result<_, _>>()?;
    let intensity: Vec<f64> = rows.into_iter().flatten().collect();
    let (tlo, thi) = (tel[0], tel[tel.len() - 1]);
    let roots: Vec<Option<(f64, f64)>> = vis
        .par_iter()
        .map(|&v| {
            let f = |t: f64| sfg_delta_beta(disp, period_um, temperature_c, v, t);
            match bracketed_root(f, tlo, thi, temperature_c) {
                Ok(t) => Ok(Some((t, v))),
                Err(QpmError::NoRoot { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, QpmError>>()?;
    let locus: Vec<(f64, f64)> = roots.into_iter().flatten().collect();
    if locus.len() < 2 {
        return Err(QpmError::NoPhaseMatchingInWindow);
    }
    let ridge_angle_deg = ridge_angle(&locus, &vis, &tel, axes)?;
    Ok(SfgMap {
        visible_nm: vis,
        telecom_nm: tel,
        intensity,
        locus,
        ridge_angle_deg,
        axes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DispersionModel;
    use crate::qpm::{poling_period, BulkDispersion};

    #[test]
    fn sinc_is_even_and_continuous() {
        for x in [1e-9, 1e-4, 0.3, 2.0, 7.5] {
            assert_eq!(sinc(x), sinc(-x));
            assert_eq!(phase_matching_intensity(x, 3.0), phase_matching_intensity(-x, 3.0));
        }
        assert!((sinc(1e-8) - sinc(1.01e-8)).abs() < 1e-15);
    }

    #[test]
    fn grid_points_are_inclusive() {
        assert_eq!(WavelengthGrid::new(795.0, 825.0, 5.0).points().unwrap().len(), 7);
        assert_eq!(WavelengthGrid::new(1500.0, 1600.0, 0.2).points().unwrap().len(), 501);
    }

    #[test]
    fn fwhm_of_triangle() {
        let s = Spectrum::new(SpectrumAxis::Signal, vec![0.0, 1.0, 2.0, 3.0, 4.0], vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        let f = s.fwhm().unwrap();
        assert!((f.width_nm - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_and_empty_file() {
        let s = Spectrum::new(SpectrumAxis::Idler, vec![1.0, 2.0], vec![0.1, 0.2]).unwrap();
        let back = Spectrum::from_csv(&s.to_csv(), SpectrumAxis::Idler).unwrap();
        assert_eq!(back.wavelength_nm, s.wavelength_nm);
        assert!(Spectrum::from_csv("", SpectrumAxis::Idler).is_err());
        assert!(Spectrum::from_csv("a,b\n", SpectrumAxis::Idler).is_err());
    }

    #[test]
    fn bulk_spectrum_peaks_at_design_point() {
        let d = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
        let lam = poling_period(&d, 532.0, 810.0, 40.0).unwrap();
        let s = pdc_spectrum(&d, lam, 3.0, 532.0, 40.0, SpectrumAxis::Signal, &WavelengthGrid::new(805.0, 815.0, 0.01)).unwrap();
        let (k, v) = s.peak().unwrap();
        assert_eq!(v, 1.0);
        assert!((s.wavelength_nm[k] - 810.0).abs() < 0.011);
    }
}
