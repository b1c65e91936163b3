//! Photon-counting analysis for a heralded pair source read out by a signal
//! detector and a 50:50 split idler arm with two detectors.
//!
//! All uncertainties are first-order propagations of independent Poissonian
//! counting errors.

pub mod montecarlo;
pub mod sweep;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

pub use montecarlo::{expected_counts, simulate, ClickProbabilities, PairSource};
pub use sweep::{power_sweep_analysis, RecordSummary, SweepAnalysis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid count record: {0}")]
    InvalidRecord(String),
    #[error("{0} is undefined for this record")]
    Undefined(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("power sweep needs at least 3 distinct powers, got {0}")]
    TooFewPowers(usize),
    #[error("{0}")]
    Fit(String),
}

/// Pre-binned counts of one acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    /// Pump power measured after the waveguide.
    #[serde(rename = "power_W")]
    pub power_w: f64,
    pub t_int_s: f64,
    pub tau_c_s: f64,
    /// Signal singles.
    #[serde(rename = "N_s")]
    pub n_s: u64,
    /// Idler detector 1 singles.
    #[serde(rename = "N_1")]
    pub n_1: u64,
    #[serde(rename = "N_2")]
    pub n_2: u64,
    /// Signal × idler 1 coincidences.
    #[serde(rename = "C_s1")]
    pub c_s1: u64,
    #[serde(rename = "C_s2")]
    pub c_s2: u64,
    /// Threefold coincidences.
    #[serde(rename = "C_s12")]
    pub c_s12: u64,
}

impl CountRecord {
    pub fn validate(&self) -> Result<(), StatsError> {
        let bad = |m: String| Err(StatsError::InvalidRecord(m));
        if !(self.t_int_s > 0.0 && self.t_int_s.is_finite()) {
            return bad(format!("integration time must be positive, got {}", self.t_int_s));
        }
        if !(self.tau_c_s > 0.0 && self.tau_c_s.is_finite()) {
            return bad(format!("coincidence window must be positive, got {}", self.tau_c_s));
        }
        if !(self.power_w >= 0.0 && self.power_w.is_finite()) {
            return bad(format!("power must be non-negative, got {}", self.power_w));
        }
        if self.c_s12 > self.c_s1.min(self.c_s2) {
            return bad(format!(
                "threefolds {} exceed a twofold count ({}, {})",
                self.c_s12, self.c_s1, self.c_s2
            ));
        }
        if self.c_s1 > self.n_s.min(self.n_1) {
            return bad(format!("C_s1 = {} exceeds N_s = {} or N_1 = {}", self.c_s1, self.n_s, self.n_1));
        }
        if self.c_s2 > self.n_s.min(self.n_2) {
            return bad(format!("C_s2 = {} exceeds N_s = {} or N_2 = {}", self.c_s2, self.n_s, self.n_2));
        }
        Ok(())
    }

    /// Idler singles summed over both detectors.
    pub fn idler_singles(&self) -> u64 {
        self.n_1 + self.n_2
    }

    pub fn twofolds(&self) -> u64 {
        self.c_s1 + self.c_s2
    }

    /// All counts multiplied by `k`, times unchanged.
    pub fn scaled(&self, k: u64) -> Self {
        Self {
            n_s: self.n_s * k,
            n_1: self.n_1 * k,
            n_2: self.n_2 * k,
            c_s1: self.c_s1 * k,
            c_s2: self.c_s2 * k,
            c_s12: self.c_s12 * k,
            ..*self
        }
    }
}

/// Record with accidental coincidences removed: twofolds `N_s·N_k·τ_c/t_int`,
/// threefolds `(C_s1·N_2 + C_s2·N_1)·τ_c/t_int`. Counts saturate at zero.
pub fn subtract_accidentals(rec: &CountRecord) -> CountRecord {
    let r = rec.tau_c_s / rec.t_int_s;
    let ns = rec.n_s as f64;
    let acc1 = ns * rec.n_1 as f64 * r;
    let acc2 = ns * rec.n_2 as f64 * r;
    let c1 = (rec.c_s1 as f64 - acc1).max(0.0).round() as u64;
    let c2 = (rec.c_s2 as f64 - acc2).max(0.0).round() as u64;
    let acc3 = (rec.c_s1 as f64 * rec.n_2 as f64 + rec.c_s2 as f64 * rec.n_1 as f64) * r;
    let c12 = (rec.c_s12 as f64 - acc3).max(0.0).round() as u64;
    CountRecord {
        c_s1: c1,
        c_s2: c2,
        c_s12: c12.min(c1).min(c2),
        ..*rec
    }
}

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub stderr: f64,
}

impl Measured {
    fn from_relative(value: f64, rel_var: f64) -> Self {
        Self {
            value,
            stderr: value.abs() * rel_var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Klyshko {
    pub signal: Measured,
    pub idler: Measured,
}

/// Heralding efficiencies: signal = twofolds / idler singles,
/// idler = twofolds / signal singles.
pub fn klyshko(rec: &CountRecord) -> Result<Klyshko, StatsError> {
    rec.validate()?;
    let c = rec.twofolds() as f64;
    let ni = rec.idler_singles() as f64;
    let ns = rec.n_s as f64;
    if ni == 0.0 || ns == 0.0 {
        return Err(StatsError::Undefined("Klyshko efficiency"));
    }
    let rc = if c > 0.0 { 1.0 / c } else { 0.0 };
    let signal = if c > 0.0 {
        Measured::from_relative(c / ni, rc + 1.0 / ni)
    } else {
        Measured { value: 0.0, stderr: 1.0 / ni }
    };
    let idler = if c > 0.0 {
        Measured::from_relative(c / ns, rc + 1.0 / ns)
    } else {
        Measured { value: 0.0, stderr: 1.0 / ns }
    };
    Ok(Klyshko { signal, idler })
}

/// Loss-corrected pair generation rate `N_s·(N_1+N_2) / ((C_s1+C_s2)·t_int)`, Hz.
pub fn pair_rate(rec: &CountRecord) -> Result<Measured, StatsError> {
    rec.validate()?;
    let c = rec.twofolds() as f64;
    let ni = rec.idler_singles() as f64;
    let ns = rec.n_s as f64;
    if c == 0.0 {
        return Err(StatsError::Undefined("pair rate"));
    }
    Ok(Measured::from_relative(ns * ni / (c * rec.t_int_s), 1.0 / ns + 1.0 / ni + 1.0 / c))
}

/// Mean pair number per coincidence window.
pub fn mean_photon_number(rate_hz: f64, tau_c_s: f64) -> Result<f64, StatsError> {
    if !(rate_hz >= 0.0 && tau_c_s >= 0.0 && rate_hz.is_finite() && tau_c_s.is_finite()) {
        return Err(StatsError::Domain(format!(
            "rate {rate_hz} Hz and window {tau_c_s} s must be non-negative"
        )));
    }
    Ok(rate_hz * tau_c_s)
}

/// Poisson probability of `k` events at mean `mean`, evaluated in log space.
pub fn poisson_pmf(mean: f64, k: u64) -> Result<f64, StatsError> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(StatsError::Domain(format!("Poisson mean must be non-negative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let kf = k as f64;
    Ok((kf * mean.ln() - mean - ln_gamma(kf + 1.0)).exp())
}

pub const DEFAULT_TRUNCATION: u64 = 200;
pub const MIN_TRUNCATION: u64 = 50;

/// Heralded second-order correlation of a Poissonian pair source with mean
/// `mean` by direct summation up to `truncation` pairs:
/// `Σk²(k−1)ρ · Σkρ / (Σk²ρ)²`.
pub fn g2_heralded_theory(mean: f64, truncation: u64) -> Result<f64, StatsError> {
    if truncation < MIN_TRUNCATION {
        return Err(StatsError::Domain(format!(
            "truncation {truncation} is below the minimum {MIN_TRUNCATION}"
        )));
    }
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(StatsError::Domain(format!("mean photon number must be non-negative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    let (mut m1, mut m2, mut m3) = (0.0, 0.0, 0.0);
    for k in 0..=truncation {
        let p = poisson_pmf(mean, k)?;
        let kf = k as f64;
        m1 += kf * p;
        m2 += kf * kf * p;
        m3 += kf * kf * (kf - 1.0) * p;
    }
    Ok(m3 * m1 / (m2 * m2))
}

/// Closed form of [`g2_heralded_theory`] for an untruncated Poisson source.
pub fn g2_heralded_closed_form(mean: f64) -> f64 {
    mean * (mean + 2.0) / ((mean + 1.0) * (mean + 1.0))
}

/// Heralded `g²(0) = C_s12·N_s / (C_s1·C_s2)`. With no threefolds the
/// uncertainty is that of a single count.
pub fn g2_heralded_measured(rec: &CountRecord) -> Result<Measured, StatsError> {
    rec.validate()?;
    if rec.c_s1 == 0 || rec.c_s2 == 0 {
        return Err(StatsError::Undefined("heralded g2"));
    }
    let ns = rec.n_s as f64;
    let c1 = rec.c_s1 as f64;
    let c2 = rec.c_s2 as f64;
    let c12 = rec.c_s12 as f64;
    let scale = ns / (c1 * c2);
    if rec.c_s12 == 0 {
        return Ok(Measured { value: 0.0, stderr: scale });
    }
    Ok(Measured::from_relative(c12 * scale, 1.0 / c12 + 1.0 / ns + 1.0 / c1 + 1.0 / c2))
}

/// Optical losses between the waveguide and the power meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerChain {
    pub facet_reflectivity: f64,
    pub lens_reflectivity: f64,
    pub coupling_efficiency: f64,
}

impl Default for PowerChain {
    fn default() -> Self {
        Self {
            facet_reflectivity: 0.1454,
            lens_reflectivity: 0.05,
            coupling_efficiency: 0.40,
        }
    }
}

impl PowerChain {
    pub fn identity() -> Self {
        Self {
            facet_reflectivity: 0.0,
            lens_reflectivity: 0.0,
            coupling_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let r = 0.0..1.0;
        if !r.contains(&self.facet_reflectivity) || !r.contains(&self.lens_reflectivity) {
            return Err(StatsError::Domain(format!(
                "reflectivities must lie in [0, 1), got {} and {}",
                self.facet_reflectivity, self.lens_reflectivity
            )));
        }
        if !(self.coupling_efficiency > 0.0 && self.coupling_efficiency <= 1.0) {
            return Err(StatsError::Domain(format!(
                "coupling efficiency must lie in (0, 1], got {}",
                self.coupling_efficiency
            )));
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        (1.0 - self.facet_reflectivity) * (1.0 - self.lens_reflectivity) * self.coupling_efficiency
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpPower {
    pub inside_w: f64,
    pub transmission: f64,
}

pub fn pump_power_inside(measured_w: f64, chain: &PowerChain) -> Result<PumpPower, StatsError> {
    if !(measured_w >= 0.0 && measured_w.is_finite()) {
        return Err(StatsError::Domain(format!("measured power must be non-negative, got {measured_w}")));
    }
    chain.validate()?;
    let transmission = chain.transmission();
    if transmission <= 0.0 {
        return Err(StatsError::Domain("power chain has zero transmission".into()));
    }
    Ok(PumpPower {
        inside_w: measured_w / transmission,
        transmission,
    })
}

/// Spectral brightness in pairs / (s · mW · GHz).
pub fn brightness(rate_hz: f64, power_inside_w: f64, bandwidth_hz: f64) -> Result<f64, StatsError> {
    if !(rate_hz >= 0.0 && power_inside_w > 0.0 && bandwidth_hz > 0.0) {
        return Err(StatsError::Domain(format!(
            "brightness needs a non-negative rate and positive power and bandwidth, got {rate_hz}, {power_inside_w}, {bandwidth_hz}"
        )));
    }
    Ok(rate_hz / (power_inside_w * 1e3 * bandwidth_hz * 1e-9))
}

/// A published brightness figure for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BrightnessReference {
    pub source: &'static str,
    pub brightness: f64,
}

/// Literature brightness values of lithium niobate pair sources, in
/// pairs / (s · mW · GHz), with this device last.
pub const BRIGHTNESS_REFERENCES: [BrightnessReference; 5] = [
    BrightnessReference {
        source: "bulk LN, 1064 nm",
        brightness: 2.5e4,
    },
    BrightnessReference {
        source: "dispersion-engineered LN waveguide, 1350 nm",
        brightness: 1.5e5,
    },
    BrightnessReference {
        source: "single-pass TFLN waveguide, 1475 nm",
        brightness: 1.1e7,
    },
    BrightnessReference {
        source: "resonant TFLN waveguide, 1550 nm",
        brightness: 1.6e10,
    },
    BrightnessReference {
        source: "single-pass TFLN waveguide, 815/1550 nm",
        brightness: 0.44e7,
    },
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lossless() -> CountRecord {
        CountRecord {
            power_w: 1e-6,
            t_int_s: 1.0,
            tau_c_s: 1e-9,
            n_s: 100,
            n_1: 50,
            n_2: 50,
            c_s1: 50,
            c_s2: 50,
            c_s12: 0,
        }
    }

    #[test]
    fn lossless_record() {
        let k = klyshko(&lossless()).unwrap();
        assert_eq!((k.signal.value, k.idler.value), (1.0, 1.0));
        assert_eq!(pair_rate(&lossless()).unwrap().value, 100.0);
        assert_eq!(g2_heralded_measured(&lossless()).unwrap().value, 0.0);
    }

    #[test]
    fn record_invariants() {
        let mut r = lossless();
        r.c_s12 = 60;
        assert!(r.validate().is_err());
        let mut r = lossless();
        r.c_s1 = 120;
        assert!(r.validate().is_err());
        let mut r = lossless();
        r.t_int_s = 0.0;
        assert!(r.validate().is_err());
        let mut r = lossless();
        r.n_1 = 0;
        r.n_2 = 0;
        r.c_s1 = 0;
        r.c_s2 = 0;
        assert!(matches!(klyshko(&r), Err(StatsError::Undefined(_))));
        assert!(matches!(pair_rate(&r), Err(StatsError::Undefined(_))));
    }

    #[test]
    fn poisson_limits() {
        assert_relative_eq!(poisson_pmf(0.7, 0).unwrap(), (-0.7f64).exp(), max_relative = 1e-15);
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert!(poisson_pmf(-1.0, 0).is_err());
        assert!(poisson_pmf(3.0, 10_000).unwrap() >= 0.0);
    }

    #[test]
    fn g2_series_against_closed_form() {
        assert_eq!(g2_heralded_theory(0.0, 200).unwrap(), 0.0);
        assert_relative_eq!(g2_heralded_theory(1.0, 200).unwrap(), 0.75, epsilon = 1e-12);
        assert!(g2_heralded_theory(0.1, 10).is_err());
    }

    #[test]
    fn power_chain() {
        let c = PowerChain::default();
        let p = pump_power_inside(544e-9, &c).unwrap();
        assert!((p.transmission - 0.32).abs() < 0.01);
        assert!((p.inside_w - 1.68e-6).abs() < 0.01e-6);
        assert_eq!(pump_power_inside(1e-3, &PowerChain::identity()).unwrap().inside_w, 1e-3);
    }
}
