//! Fabrication-tolerance budget: per-parameter mismatch slopes, their linear
//! combination, and the poling-period range it implies.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::line_fit;
use crate::waveguide::{GeometryParameter, WaveguideGeometry};

use super::{conjugate_wavelength_nm, grating_vector, modal_mismatch, Dispersion, QpmError};

/// Mismatch slopes: m⁻¹ per µm for lengths, m⁻¹ per degree for the angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeSet {
    pub width_per_um: f64,
    pub etch_depth_per_um: f64,
    pub angle_per_deg: f64,
    pub thickness_per_um: f64,
}

impl SlopeSet {
    pub fn get(&self, p: GeometryParameter) -> f64 {
        match p {
            GeometryParameter::Width => self.width_per_um,
            GeometryParameter::EtchDepth => self.etch_depth_per_um,
            GeometryParameter::Angle => self.angle_per_deg,
            GeometryParameter::Thickness => self.thickness_per_um,
        }
    }
}

/// Signed fabrication deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub width_um: f64,
    pub etch_depth_um: f64,
    pub angle_deg: f64,
    pub thickness_um: f64,
}

impl Default for ToleranceSpec {
    /// ±0.1 µm width and etch depth, ±5° angle, ±20 nm film thickness.
    fn default() -> Self {
        Self {
            width_um: 0.1,
            etch_depth_um: 0.1,
            angle_deg: 5.0,
            thickness_um: 0.02,
        }
    }
}

impl ToleranceSpec {
    pub fn get(&self, p: GeometryParameter) -> f64 {
        match p {
            GeometryParameter::Width => self.width_um,
            GeometryParameter::EtchDepth => self.etch_depth_um,
            GeometryParameter::Angle => self.angle_deg,
            GeometryParameter::Thickness => self.thickness_um,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            width_um: k * self.width_um,
            etch_depth_um: k * self.etch_depth_um,
            angle_deg: k * self.angle_deg,
            thickness_um: k * self.thickness_um,
        }
    }

    /// All 16 sign combinations of the magnitudes.
    pub fn corners(&self) -> Vec<ToleranceSpec> {
        (0..16u32)
            .map(|m| {
                let s = |bit: u32| if m & (1 << bit) == 0 { 1.0 } else { -1.0 };
                ToleranceSpec {
                    width_um: s(0) * self.width_um.abs(),
                    etch_depth_um: s(1) * self.etch_depth_um.abs(),
                    angle_deg: s(2) * self.angle_deg.abs(),
                    thickness_um: s(3) * self.thickness_um.abs(),
                }
            })
            .collect()
    }
}

/// Linear mismatch budget, summed in the fixed order width, etch depth,
/// angle, thickness.
pub fn phase_mismatch_sum(slopes: &SlopeSet, deltas: &ToleranceSpec) -> f64 {
    let mut s = slopes.width_per_um * deltas.width_um;
    s += slopes.etch_depth_per_um * deltas.etch_depth_um;
    s += slopes.angle_per_deg * deltas.angle_deg;
    s += slopes.thickness_per_um * deltas.thickness_um;
    s
}

/// Result of one parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub parameter: GeometryParameter,
    pub unit: &'static str,
    /// m⁻¹ per parameter unit.
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub rms_residual: f64,
    pub samples: Vec<f64>,
    /// Δβ at each sample with the reference period, m⁻¹.
    pub delta_beta: Vec<f64>,
}

/// Operating point shared by all sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub temperature_c: f64,
    pub period_um: f64,
}

/// Default sample values: the width sweep follows 0.8–1.2 µm in 0.1 µm steps;
/// the others span the tolerance box around the nominal value in five steps.
pub fn default_samples(nominal: &WaveguideGeometry, p: GeometryParameter, tolerances: &ToleranceSpec) -> Vec<f64> {
    if p == GeometryParameter::Width {
        return (0..5).map(|k| 0.8 + 0.1 * k as f64).collect();
    }
    let centre = nominal.parameter(p);
    let half = tolerances.get(p).abs();
    (0..5).map(|k| centre - half + 0.5 * half * k as f64).collect()
}

/// Mismatch slope of one parameter: Δβ at the fixed period for each sample
/// (others nominal), then an unconstrained straight-line fit.
pub fn tolerance_slope<F, D>(
    make_dispersion: F,
    nominal: &WaveguideGeometry,
    parameter: GeometryParameter,
    samples: &[f64],
    point: &SweepPoint,
) -> Result<SlopeFit, QpmError>
where
    F: Fn(&WaveguideGeometry) -> D + Sync,
    D: Dispersion,
{
    let mut distinct = samples.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(QpmError::Input(format!(
            "{} sweep needs at least 3 distinct samples",
            parameter.name()
        )));
    }
    let idler = conjugate_wavelength_nm(point.pump_nm, point.signal_nm);
    let k = grating_vector(point.period_um);
    let results: Vec<Result<f64, QpmError>> = samples
        .par_iter()
        .map(|&v| {
            let g = nominal.with_parameter(parameter, v);
            g.validate().map_err(|e| QpmError::Input(e.to_string()))?;
            let d = make_dispersion(&g);
            Ok(modal_mismatch(&d, point.pump_nm, point.signal_nm, idler, point.temperature_c)? - k)
        })
        .collect();
    let mut failing = Vec::new();
    let mut reason = String::new();
    let mut values = Vec::with_capacity(samples.len());
    for (v, r) in samples.iter().zip(results) {
        match r {
            Ok(x) => values.push(x),
            Err(e) => {
                failing.push(*v);
                reason = e.to_string();
            }
        }
    }
    if !failing.is_empty() {
        return Err(QpmError::SweepFailed {
            parameter: parameter.name(),
            values: failing,
            reason,
        });
    }
    let fit = line_fit(samples, &values)?;
    log::debug!(
        "slope: parameter={} slope={:.6e} rms_residual={:.3e}",
        parameter.name(),
        fit.slope,
        fit.rms_residual
    );
    Ok(SlopeFit {
        parameter,
        unit: parameter.unit(),
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        rms_residual: fit.rms_residual,
        samples: samples.to_vec(),
        delta_beta: values,
    })
}

/// Builds a [`SlopeSet`] from four fits (any order).
pub fn slope_set(fits: &[SlopeFit]) -> Result<SlopeSet, QpmError> {
    let find = |p: GeometryParameter| {
        fits.iter()
            .find(|f| f.parameter == p)
            .map(|f| f.slope)
            .ok_or_else(|| QpmError::Input(format!("missing {} slope", p.name())))
    };
    Ok(SlopeSet {
        width_per_um: find(GeometryParameter::Width)?,
        etch_depth_per_um: find(GeometryParameter::EtchDepth)?,
        angle_per_deg: find(GeometryParameter::Angle)?,
        thickness_per_um: find(GeometryParameter::Thickness)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// `2π / (Δβ₀ ± |Δβ_sum|)`.
    Literal,
    /// Extremes of `2π / (Δβ₀ + Σ)` over the 16 sign corners of the box.
    CornerScan,
}

/// Poling-period interval in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodRange {
    pub min_um: f64,
    pub max_um: f64,
}

impl PeriodRange {
    pub fn contains(&self, other: &PeriodRange) -> bool {
        self.min_um <= other.min_um && self.max_um >= other.max_um
    }
}

fn period(den: f64) -> Result<f64, QpmError> {
    if !(den > 0.0 && den.is_finite()) {
        return Err(QpmError::RangeUndefined { denominator_per_m: den });
    }
    Ok(2.0 * PI / den * 1e6)
}

/// Period range from the nominal modal mismatch `Δβ₀ = 2π/Λ₀` (m⁻¹).
///
/// `Literal` uses `delta_beta_sum`; `CornerScan` ignores it and needs
/// `slopes` and `tolerance_box`.
pub fn poling_period_range(
    delta_beta_0: f64,
    delta_beta_sum: f64,
    mode: RangeMode,
    slopes: Option<&SlopeSet>,
    tolerance_box: Option<&ToleranceSpec>,
) -> Result<PeriodRange, QpmError> {
    match mode {
        RangeMode::Literal => {
            let s = delta_beta_sum.abs();
            let lo = period(delta_beta_0 + s)?;
            let hi = period(delta_beta_0 - s)?;
            Ok(PeriodRange { min_um: lo, max_um: hi })
        }
        RangeMode::CornerScan => {
            let (Some(sl), Some(bx)) = (slopes, tolerance_box) else {
                return Err(QpmError::Input("corner scan needs slopes and a tolerance box".into()));
            };
            let mut r = PeriodRange {
                min_um: f64::INFINITY,
                max_um: f64::NEG_INFINITY,
            };
            for c in bx.corners() {
                let p = period(delta_beta_0 + phase_mismatch_sum(sl, &c))?;
                r.min_um = r.min_um.min(p);
                r.max_um = r.max_um.max(p);
            }
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpm::ConstantDispersion;

    fn reported() -> SlopeSet {
        SlopeSet {
            width_per_um: -320.2e3,
            etch_depth_per_um: 332.9e3,
            angle_per_deg: -2.3e3,
            thickness_per_um: -2.2e6,
        }
    }

    fn tol_box() -> ToleranceSpec {
        ToleranceSpec {
            width_um: 0.1,
            etch_depth_um: 0.1,
            angle_deg: 5.0,
            thickness_um: 0.02,
        }
    }

    #[test]
    fn budget_matches_hand_sum() {
        let s = phase_mismatch_sum(&reported(), &tol_box());
        assert!((s + 54230.0).abs() < 1e-9, "{s}");
    }

    #[test]
    fn budget_is_linear() {
        let zero = tol_box().scaled(0.0);
        assert_eq!(phase_mismatch_sum(&reported(), &zero), 0.0);
        let one = phase_mismatch_sum(&reported(), &tol_box());
        let two = phase_mismatch_sum(&reported(), &tol_box().scaled(2.0));
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn literal_range_and_degenerate_case() {
        let d0 = 2.0 * PI / 3.314e-6;
        let r = poling_period_range(d0, 0.0, RangeMode::Literal, None, None).unwrap();
        assert!((r.min_um - 3.314).abs() < 1e-12 && (r.max_um - 3.314).abs() < 1e-12);
        let r = poling_period_range(d0, -54230.0, RangeMode::Literal, None, None).unwrap();
        assert!((r.min_um - 3.222).abs() < 1e-3 && (r.max_um - 3.412).abs() < 1e-3, "{r:?}");
        assert!(poling_period_range(1.0e4, 54230.0, RangeMode::Literal, None, None).is_err());
    }

    #[test]
    fn corner_scan_contains_literal() {
        let d0 = 2.0 * PI / 3.314e-6;
        let sum = phase_mismatch_sum(&reported(), &tol_box());
        let lit = poling_period_range(d0, sum, RangeMode::Literal, None, None).unwrap();
        let cs = poling_period_range(d0, sum, RangeMode::CornerScan, Some(&reported()), Some(&tol_box())).unwrap();
        assert!(cs.contains(&lit), "{cs:?} vs {lit:?}");
    }

    #[test]
    fn constant_dispersion_gives_zero_slope() {
        let point = SweepPoint {
            pump_nm: 532.0,
            signal_nm: 810.0,
            temperature_c: 25.0,
            period_um: 3.3,
        };
        let g = WaveguideGeometry::nominal();
        let f = tolerance_slope(
            |_| ConstantDispersion(2.0),
            &g,
            GeometryParameter::Width,
            &[0.8, 0.9, 1.0, 1.1, 1.2],
            &point,
        )
        .unwrap();
        assert_eq!(f.slope, 0.0);
    }
}
