//! Quasi-phase-matching engine.
//!
//! Wavelengths are vacuum wavelengths in nm, poling periods in µm, lengths in
//! mm, phase mismatch in m⁻¹. The mismatch of a three-wave process is
//!
//! ```text
//! Δβ = β_p − β_s − β_i − 2π/Λ,   β = 2π·n_eff/λ
//! ```

pub mod dispersion;
pub mod fit;
pub mod spectrum;
pub mod tolerance;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::MaterialError;
use crate::modesolver::SolverError;
use crate::numerics::{brent, NumericsError};

pub use self::dispersion::{Band, BulkDispersion, ChebyshevDispersion, ConstantDispersion, Dispersion, FnDispersion, WaveguideDispersion};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Root tolerance for phase-matched wavelengths, nm.
pub const ROOT_TOL_NM: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum QpmError {
    #[error("no guided mode at {wavelength_nm} nm")]
    NotGuided { wavelength_nm: f64 },
    #[error("{field} field at {wavelength_nm} nm is not guided")]
    FieldNotGuided { field: &'static str, wavelength_nm: f64 },
    #[error("phase matching impossible: modal mismatch {mismatch_per_m} m^-1 is not positive")]
    PhaseMatchingImpossible { mismatch_per_m: f64 },
    #[error("poling period range undefined: denominator {denominator_per_m} m^-1 <= 0")]
    RangeUndefined { denominator_per_m: f64 },
    #[error("invalid process: {0}")]
    InvalidProcess(String),
    #[error("no phase-matching root in [{lo_nm}, {hi_nm}] nm at {temperature_c} °C")]
    NoRoot { lo_nm: f64, hi_nm: f64, temperature_c: f64 },
    #[error("no phase matching in window")]
    NoPhaseMatchingInWindow,
    #[error("invalid input: {0}")]
    Input(String),
    #[error("tolerance sweep failed at {parameter} = {values:?}: {reason}")]
    SweepFailed {
        parameter: &'static str,
        values: Vec<f64>,
        reason: String,
    },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `1/λ_i = 1/λ_p − 1/λ_s`.
pub fn conjugate_wavelength_nm(pump_nm: f64, known_nm: f64) -> f64 {
    1.0 / (1.0 / pump_nm - 1.0 / known_nm)
}

/// Generated wavelength of sum-frequency mixing.
pub fn sum_wavelength_nm(a_nm: f64, b_nm: f64) -> f64 {
    1.0 / (1.0 / a_nm + 1.0 / b_nm)
}

/// Propagation constant in m⁻¹.
pub fn propagation_constant(n_eff: f64, wavelength_nm: f64) -> f64 {
    2.0 * PI * n_eff / (wavelength_nm * 1e-9)
}

/// Grating vector `2π/Λ` in m⁻¹ (`0` for an infinite period).
pub fn grating_vector(period_um: f64) -> f64 {
    2.0 * PI / (period_um * 1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpmProcess {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub temperature_c: f64,
    pub period_um: f64,
    pub length_mm: f64,
}

impl QpmProcess {
    /// Process with the idler fixed by energy conservation.
    pub fn from_pump_signal(pump_nm: f64, signal_nm: f64, temperature_c: f64, period_um: f64, length_mm: f64) -> Result<Self, QpmError> {
        let p = Self {
            pump_nm,
            signal_nm,
            idler_nm: conjugate_wavelength_nm(pump_nm, signal_nm),
            temperature_c,
            period_um,
            length_mm,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), QpmError> {
        let (p, s, i) = (self.pump_nm, self.signal_nm, self.idler_nm);
        if !(p.is_finite() && s.is_finite() && i.is_finite() && p > 0.0) {
            return Err(QpmError::InvalidProcess("wavelengths must be finite and positive".into()));
        }
        if !(p < s && s <= i) {
            return Err(QpmError::InvalidProcess(format!(
                "ordering λ_p < λ_s <= λ_i violated: {p}, {s}, {i} nm"
            )));
        }
        let energy = (1.0 / p - 1.0 / s - 1.0 / i).abs();
        if energy > 1e-9 {
            return Err(QpmError::InvalidProcess(format!(
                "energy conservation violated by {energy:e} nm^-1"
            )));
        }
        if !(self.period_um > 0.0) || !(self.length_mm >= 0.0) {
            return Err(QpmError::InvalidProcess("period must be positive and length >= 0".into()));
        }
        Ok(())
    }
}

fn field_n(disp: &dyn Dispersion, field: &'static str, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
    disp.n_eff(wavelength_nm, temperature_c).map_err(|e| match e {
        QpmError::NotGuided { wavelength_nm } => QpmError::FieldNotGuided { field, wavelength_nm },
        other => other,
    })
}

/// `β_p − β_s − β_i` in m⁻¹ (grating term excluded).
pub fn modal_mismatch(disp: &dyn Dispersion, pump_nm: f64, signal_nm: f64, idler_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
    let np = field_n(disp, "pump", pump_nm, temperature_c)?;
    let ns = field_n(disp, "signal", signal_nm, temperature_c)?;
    let ni = field_n(disp, "idler", idler_nm, temperature_c)?;
    Ok(propagation_constant(np, pump_nm) - propagation_constant(ns, signal_nm) - propagation_constant(ni, idler_nm))
}

/// Phase mismatch of a process, m⁻¹.
pub fn delta_beta(process: &QpmProcess, disp: &dyn Dispersion) -> Result<f64, QpmError> {
    let m = modal_mismatch(disp, process.pump_nm, process.signal_nm, process.idler_nm, process.temperature_c)?;
    Ok(m - grating_vector(process.period_um))
}

/// Poling period in µm that phase-matches pump and signal at `temperature_c`.
pub fn poling_period(disp: &dyn Dispersion, pump_nm: f64, signal_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
    let idler = conjugate_wavelength_nm(pump_nm, signal_nm);
    if !(idler.is_finite() && idler > 0.0) {
        return Err(QpmError::InvalidProcess(format!(
            "signal {signal_nm} nm is not longer than pump {pump_nm} nm"
        )));
    }
    let m = modal_mismatch(disp, pump_nm, signal_nm, idler, temperature_c)?;
    if !(m.is_finite() && m > 0.0) {
        return Err(QpmError::PhaseMatchingImpossible { mismatch_per_m: m });
    }
    Ok(2.0 * PI / m * 1e6)
}

/// Which wavelength stays fixed when solving for the phase-matched triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "hold", rename_all = "snake_case")]
pub enum Hold {
    /// Fixed pump; the signal is searched in `[lo_nm, hi_nm]`.
    Pump { pump_nm: f64, lo_nm: f64, hi_nm: f64 },
    /// Fixed signal; the pump is searched in `[lo_nm, hi_nm]`.
    Signal { signal_nm: f64, lo_nm: f64, hi_nm: f64 },
}

/// A phase-matched wavelength triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triple {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
}

/// Number of samples in the coarse bracket scan.
const PRESCAN: usize = 24;

/// Finds the bracketed sign change of `f` on `[lo, hi]` nearest the window centre.
pub(crate) fn bracketed_root<F>(f: F, lo: f64, hi: f64, temperature_c: f64) -> Result<f64, QpmError>
where
    F: Fn(f64) -> Result<f64, QpmError>,
{
    let xs: Vec<f64> = (0..=PRESCAN).map(|k| lo + (hi - lo) * k as f64 / PRESCAN as f64).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<_>, _>>()?;
    let mid = 0.5 * (lo + hi);
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..PRESCAN {
        if ys[k] == 0.0 {
            return Ok(xs[k]);
        }
        if ys[k].signum() != ys[k + 1].signum() {
            let d = (0.5 * (xs[k] + xs[k + 1]) - mid).abs();
            if best.is_none_or(|b| d < b.2) {
                best = Some((xs[k], xs[k + 1], d));
            }
        }
    }
    let Some((a, b, _)) = best else {
        if ys[PRESCAN] == 0.0 {
            return Ok(xs[PRESCAN]);
        }
        return Err(QpmError::NoRoot {
            lo_nm: lo,
            hi_nm: hi,
            temperature_c,
        });
    };
    brent(&f, a, b, ROOT_TOL_NM)
}

/// Phase-matched triple for poling period `period_um` at `temperature_c`.
pub fn phase_matched(disp: &dyn Dispersion, period_um: f64, temperature_c: f64, hold: Hold) -> Result<Triple, QpmError> {
    let k = grating_vector(period_um);
    match hold {
        Hold::Pump { pump_nm, lo_nm, hi_nm } => {
            let f = |s: f64| -> Result<f64, QpmError> {
                let i = conjugate_wavelength_nm(pump_nm, s);
                Ok(modal_mismatch(disp, pump_nm, s, i, temperature_c)? - k)
            };
            let s = bracketed_root(f, lo_nm, hi_nm, temperature_c)?;
            Ok(Triple {
                pump_nm,
                signal_nm: s,
                idler_nm: conjugate_wavelength_nm(pump_nm, s),
            })
        }
        Hold::Signal { signal_nm, lo_nm, hi_nm } => {
            let f = |p: f64| -> Result<f64, QpmError> {
                let i = conjugate_wavelength_nm(p, signal_nm);
                Ok(modal_mismatch(disp, p, signal_nm, i, temperature_c)? - k)
            };
            let p = bracketed_root(f, lo_nm, hi_nm, temperature_c)?;
            Ok(Triple {
                pump_nm: p,
                signal_nm,
                idler_nm: conjugate_wavelength_nm(p, signal_nm),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DispersionModel;

    #[test]
    fn period_root_zeroes_the_mismatch() {
        let d = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
        let lam = poling_period(&d, 532.0, 810.0, 40.0).unwrap();
        let p = QpmProcess::from_pump_signal(532.0, 810.0, 40.0, lam, 3.0).unwrap();
        assert!(delta_beta(&p, &d).unwrap().abs() < 1e-3);
        assert_eq!(lam, poling_period(&d, 532.0, 810.0, 40.0).unwrap());
    }

    #[test]
    fn infinite_period_leaves_modal_mismatch() {
        let d = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
        let p = QpmProcess::from_pump_signal(532.0, 810.0, 40.0, f64::INFINITY, 3.0).unwrap();
        let m = modal_mismatch(&d, 532.0, 810.0, p.idler_nm, 40.0).unwrap();
        assert_eq!(delta_beta(&p, &d).unwrap(), m);
    }

    #[test]
    fn process_invariants_are_checked() {
        assert!(QpmProcess::from_pump_signal(532.0, 500.0, 25.0, 3.0, 1.0).is_err());
        let mut p = QpmProcess::from_pump_signal(532.0, 810.0, 25.0, 3.0, 1.0).unwrap();
        p.idler_nm += 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn anomalous_dispersion_cannot_phase_match() {
        let d = FnDispersion(|l: f64, _t: f64| 2.0 + 1e-4 * l);
        assert!(matches!(
            poling_period(&d, 532.0, 810.0, 25.0),
            Err(QpmError::PhaseMatchingImpossible { .. })
        ));
    }

    #[test]
    fn hold_modes_recover_the_design_point() {
        let d = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
        let lam = poling_period(&d, 532.0, 810.0, 40.0).unwrap();
        let a = phase_matched(&d, lam, 40.0, Hold::Pump { pump_nm: 532.0, lo_nm: 780.0, hi_nm: 850.0 }).unwrap();
        assert!((a.signal_nm - 810.0).abs() < 2e-3);
        let b = phase_matched(&d, lam, 40.0, Hold::Signal { signal_nm: 810.0, lo_nm: 520.0, hi_nm: 545.0 }).unwrap();
        assert!((b.pump_nm - 532.0).abs() < 2e-3);
    }
}
