//! Complete analyses driven by a [`ProjectConfig`]: the design pass, simulated
//! spectra, sinc fits of measured spectra and photon-counting statistics.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::config::{ConfigError, FitMode, ProjectConfig};
use crate::materials::LayerMaterials;
use crate::modesolver::{solve_modes, NeffSolver, Symmetry};
use crate::photonstats::{
    self, brightness, pump_power_inside, subtract_accidentals, CountRecord, Measured, PumpPower, RecordSummary,
    StatsError, SweepAnalysis, BRIGHTNESS_REFERENCES,
};
use crate::qpm::fit::{fit_sinc, sinc_model, FitModel, SincFit};
use crate::qpm::spectrum::{
    pdc_spectrum, sfg_map, temperature_tuning, Fwhm, RidgeAxes, SfgMap, Spectrum, SpectrumAxis, TuningResult,
    WavelengthGrid,
};
use crate::qpm::tolerance::{
    default_samples, phase_mismatch_sum, poling_period_range, slope_set, tolerance_slope, PeriodRange, RangeMode,
    SlopeFit, SlopeSet, SweepPoint, ToleranceSpec,
};
use crate::qpm::{
    conjugate_wavelength_nm, modal_mismatch, phase_matched, poling_period, Band, ChebyshevDispersion, Hold, QpmError,
    WaveguideDispersion,
};
use crate::waveguide::{GeometryParameter, IndexMap, WaveguideGeometry};

pub type Interpolated = ChebyshevDispersion<WaveguideDispersion>;

/// Configuration plus solvers that share one effective-index cache.
pub struct Project {
    pub config: ProjectConfig,
    pub materials: LayerMaterials,
    /// Pitch-refined effective indices, for single design points.
    pub solver: Arc<NeffSolver>,
    /// Effective indices for sweeps, spectra and maps.
    pub sweep_solver: Arc<NeffSolver>,
}

impl Project {
    pub fn new(config: ProjectConfig) -> Result<Self, ConfigError> {
        let materials = config.layer_materials()?;
        let mut solver = NeffSolver::new(materials.clone(), config.solver.grid(), config.solver.refinement());
        solver.options = config.solver.options();
        let sweep = solver.with_refinement(config.solver.sweep_refinement());
        Ok(Self {
            config,
            materials,
            solver: Arc::new(solver),
            sweep_solver: Arc::new(sweep),
        })
    }

    pub fn dispersion(&self, geometry: WaveguideGeometry) -> WaveguideDispersion {
        WaveguideDispersion::new(self.solver.clone(), geometry)
    }

    pub fn sweep_dispersion(&self, geometry: WaveguideGeometry) -> WaveguideDispersion {
        WaveguideDispersion::new(self.sweep_solver.clone(), geometry)
    }

    /// Sweep-grade dispersion interpolated over `bands`.
    pub fn interpolated(&self, geometry: WaveguideGeometry, bands: Vec<Band>) -> Interpolated {
        ChebyshevDispersion::new(self.sweep_dispersion(geometry), bands)
    }

    pub fn geometry(&self) -> WaveguideGeometry {
        self.config.geometry
    }
}

fn span(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

/// Bands covering a down-conversion scan of `axis_lo..axis_hi` on one arm.
pub fn pdc_bands(pump_nm: f64, axis_lo_nm: f64, axis_hi_nm: f64) -> Vec<Band> {
    let (clo, chi) = span(
        conjugate_wavelength_nm(pump_nm, axis_lo_nm),
        conjugate_wavelength_nm(pump_nm, axis_hi_nm),
    );
    vec![Band::point(pump_nm), Band::auto(axis_lo_nm, axis_hi_nm), Band::auto(clo, chi)]
}

/// Bands covering a sum-frequency scan.
pub fn sfg_bands(visible: (f64, f64), telecom: (f64, f64)) -> Vec<Band> {
    let sum = |a: f64, b: f64| 1.0 / (1.0 / a + 1.0 / b);
    vec![
        Band::auto(visible.0, visible.1),
        Band::auto(telecom.0, telecom.1),
        Band::auto(sum(visible.0, telecom.0), sum(visible.1, telecom.1)),
    ]
}

/// Bands covering a pump scan at fixed signal.
pub fn pump_scan_bands(signal_nm: f64, pump_lo_nm: f64, pump_hi_nm: f64) -> Vec<Band> {
    let (clo, chi) = span(
        conjugate_wavelength_nm(pump_lo_nm, signal_nm),
        conjugate_wavelength_nm(pump_hi_nm, signal_nm),
    );
    vec![Band::auto(pump_lo_nm, pump_hi_nm), Band::point(signal_nm), Band::auto(clo, chi)]
}

#[derive(Debug, Clone, Serialize)]
pub struct NeffEntry {
    pub field: &'static str,
    pub wavelength_nm: f64,
    pub n_eff: f64,
    pub pitches_nm: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodDesign {
    pub pump_nm: f64,
    pub signal_nm: f64,
    pub idler_nm: f64,
    pub temperature_c: f64,
    pub period_um: f64,
    /// Modal mismatch without the grating, `2π/Λ`, m⁻¹.
    pub delta_beta_0_per_m: f64,
    pub n_eff: Vec<NeffEntry>,
}

/// Poling period of the configured process with pitch-refined indices.
pub fn design_period(project: &Project) -> Result<PeriodDesign, QpmError> {
    let c = &project.config.process;
    let g = project.geometry();
    let pump = c.design_pump_nm;
    let signal = c.signal_nm;
    let idler = conjugate_wavelength_nm(pump, signal);
    let t = c.temperature_c;
    let mut n_eff = Vec::new();
    for (field, l) in [("pump", pump), ("signal", signal), ("idler", idler)] {
        let est = project.solver.estimate(&g, l / 1000.0, t).map_err(|e| match e {
            crate::modesolver::SolverError::NotGuided { .. } => QpmError::FieldNotGuided {
                field,
                wavelength_nm: l,
            },
            e => QpmError::Solver(e),
        })?;
        n_eff.push(NeffEntry {
            field,
            wavelength_nm: l,
            n_eff: est.n_eff,
            pitches_nm: est.pitches_nm,
            values: est.values,
        });
    }
    let period = poling_period(&project.dispersion(g), pump, signal, t)?;
    Ok(PeriodDesign {
        pump_nm: pump,
        signal_nm: signal,
        idler_nm: idler,
        temperature_c: t,
        period_um: period,
        delta_beta_0_per_m: 2.0 * PI / (period * 1e-6),
        n_eff,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeCount {
    pub wavelength_nm: f64,
    pub pitch_nm: f64,
    pub cutoff_index: f64,
    /// All guided quasi-TE modes, no symmetry imposed.
    pub guided_n_eff: Vec<f64>,
    /// Guided modes even about the rib axis.
    pub even_n_eff: Vec<f64>,
    pub single_mode: bool,
}

/// Guided quasi-TE modes of `geometry` at one wavelength on the base grid.
pub fn mode_count(project: &Project, geometry: &WaveguideGeometry, wavelength_nm: f64) -> Result<ModeCount, QpmError> {
    let grid = project.config.solver.grid();
    let t = project.config.process.temperature_c;
    let map = IndexMap::rasterize(geometry, &project.materials, wavelength_nm / 1000.0, t, &grid)
        .map_err(|e| QpmError::Solver(e.into()))?;
    let opts = project.config.solver.options();
    let all = solve_modes(&map, 4, Symmetry::None, &opts)?;
    let even = solve_modes(&map, 3, Symmetry::Even, &opts)?;
    let guided: Vec<f64> = all.modes.iter().map(|m| m.n_eff).collect();
    Ok(ModeCount {
        wavelength_nm,
        pitch_nm: grid.pitch_nm,
        cutoff_index: all.cutoff_index,
        single_mode: guided.len() == 1,
        guided_n_eff: guided,
        even_n_eff: even.modes.iter().map(|m| m.n_eff).collect(),
    })
}

/// Mismatch slopes of all four parameters at the designed operating point.
pub fn tolerance_slopes(project: &Project, design: &PeriodDesign) -> Result<Vec<SlopeFit>, QpmError> {
    let g = project.geometry();
    let point = SweepPoint {
        pump_nm: design.pump_nm,
        signal_nm: design.signal_nm,
        temperature_c: design.temperature_c,
        period_um: design.period_um,
    };
    GeometryParameter::ALL
        .iter()
        .map(|&p| {
            let samples = default_samples(&g, p, &project.config.tolerances);
            tolerance_slope(|geo| project.sweep_dispersion(*geo), &g, p, &samples, &point)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ThicknessShift {
    pub step_nm: f64,
    pub idler_nominal_nm: f64,
    pub idler_shifted_nm: f64,
    pub pump_nominal_nm: f64,
    pub pump_shifted_nm: f64,
    /// Idler shift per nm of film thickness.
    pub idler_shift_nm: f64,
}

/// Phase-matched idler for a film `step_nm` thicker, at the designed period
/// with the signal held fixed and the pump retuned.
pub fn thickness_shift(project: &Project, design: &PeriodDesign, step_nm: f64) -> Result<ThicknessShift, QpmError> {
    let (lo, hi) = (design.pump_nm - 4.0, design.pump_nm + 4.0);
    let hold = Hold::Signal {
        signal_nm: design.signal_nm,
        lo_nm: lo,
        hi_nm: hi,
    };
    let solve = |g: WaveguideGeometry| {
        let d = project.interpolated(g, pump_scan_bands(design.signal_nm, lo, hi));
        phase_matched(&d, design.period_um, design.temperature_c, hold)
    };
    let g0 = project.geometry();
    let mut g1 = g0;
    g1.film_thickness_nm += step_nm;
    let a = solve(g0)?;
    let b = solve(g1)?;
    Ok(ThicknessShift {
        step_nm,
        idler_nominal_nm: a.idler_nm,
        idler_shifted_nm: b.idler_nm,
        pump_nominal_nm: a.pump_nm,
        pump_shifted_nm: b.pump_nm,
        idler_shift_nm: b.idler_nm - a.idler_nm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub geometry: WaveguideGeometry,
    pub period: PeriodDesign,
    pub idler_modes: ModeCount,
    pub slopes: Vec<SlopeFit>,
    pub slope_set: SlopeSet,
    pub tolerances: ToleranceSpec,
    pub delta_beta_sum_per_m: f64,
    pub range_literal: PeriodRange,
    pub range_corner_scan: PeriodRange,
    pub candidate_periods_um: Vec<f64>,
    pub thickness_shift: ThicknessShift,
    pub warnings: Vec<String>,
}

/// Evenly spaced candidates over a period range.
pub fn candidate_periods(range: &PeriodRange, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.5 * (range.min_um + range.max_um)];
    }
    (0..count)
        .map(|k| range.min_um + (range.max_um - range.min_um) * k as f64 / (count - 1) as f64)
        .collect()
}

pub fn run_design(project: &Project) -> Result<DesignReport, QpmError> {
    let mut warnings = Vec::new();
    let period = design_period(project)?;
    let idler_modes = mode_count(project, &project.geometry(), period.idler_nm)?;
    if !idler_modes.single_mode {
        warnings.push(format!(
            "multimode at the idler wavelength {:.1} nm: {} guided quasi-TE modes {:?} above cutoff {:.5}",
            period.idler_nm,
            idler_modes.guided_n_eff.len(),
            idler_modes.guided_n_eff,
            idler_modes.cutoff_index
        ));
    }
    let slopes = tolerance_slopes(project, &period)?;
    let set = slope_set(&slopes)?;
    let tol = project.config.tolerances;
    let sum = phase_mismatch_sum(&set, &tol);
    let literal = poling_period_range(period.delta_beta_0_per_m, sum, RangeMode::Literal, None, None)?;
    let corner = poling_period_range(period.delta_beta_0_per_m, sum, RangeMode::CornerScan, Some(&set), Some(&tol))?;
    let thickness = thickness_shift(project, &period, 1.0)?;
    Ok(DesignReport {
        geometry: project.geometry(),
        candidate_periods_um: candidate_periods(&corner, 5),
        period,
        idler_modes,
        slopes,
        slope_set: set,
        tolerances: tol,
        delta_beta_sum_per_m: sum,
        range_literal: literal,
        range_corner_scan: corner,
        thickness_shift: thickness,
        warnings,
    })
}

/// Periods for spectrum commands: the configured list, or the designed one.
pub fn spectrum_periods(project: &Project) -> Result<Vec<f64>, QpmError> {
    let p = &project.config.process.periods_um;
    if !p.is_empty() {
        return Ok(p.clone());
    }
    Ok(vec![design_period(project)?.period_um])
}

#[derive(Debug, Clone, Serialize)]
pub struct PdcResult {
    pub period_um: f64,
    pub pump_nm: f64,
    pub peak_nm: f64,
    /// Energy-conserving partner of the peak.
    pub conjugate_peak_nm: f64,
    pub fwhm: Option<Fwhm>,
    pub spectrum: Spectrum,
}

/// Down-conversion spectra on the configured grid, one per period.
pub fn pdc_spectra(project: &Project, periods_um: &[f64], pump_nm: f64) -> Result<Vec<PdcResult>, QpmError> {
    let c = &project.config;
    let grid: WavelengthGrid = c.grids.pdc.into();
    let disp = project.interpolated(project.geometry(), pdc_bands(pump_nm, grid.start_nm, grid.stop_nm));
    periods_um
        .iter()
        .map(|&period| {
            let s = pdc_spectrum(&disp, period, c.process.length_mm, pump_nm, c.process.temperature_c, c.grids.pdc_axis, &grid)?;
            let (k, _) = s.peak().ok_or(QpmError::NoPhaseMatchingInWindow)?;
            let peak = s.wavelength_nm[k];
            Ok(PdcResult {
                period_um: period,
                pump_nm,
                peak_nm: peak,
                conjugate_peak_nm: conjugate_wavelength_nm(pump_nm, peak),
                fwhm: s.fwhm(),
                spectrum: s,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RidgeAngles {
    pub frequency_deg: f64,
    pub wavelength_deg: f64,
    pub normalized_window_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SfgResult {
    pub period_um: f64,
    pub temperature_c: f64,
    pub ridge_angle_deg: f64,
    pub ridge_axes: RidgeAxes,
    pub angles: RidgeAngles,
    pub map: SfgMap,
}

pub fn sfg(project: &Project, period_um: f64) -> Result<SfgResult, QpmError> {
    let c = &project.config;
    let vis: WavelengthGrid = c.grids.sfg_visible.into();
    let tel: WavelengthGrid = c.grids.sfg_telecom.into();
    let disp = project.interpolated(
        project.geometry(),
        sfg_bands((vis.start_nm, vis.stop_nm), (tel.start_nm, tel.stop_nm)),
    );
    let map = sfg_map(&disp, period_um, c.process.length_mm, c.process.temperature_c, &vis, &tel, c.grids.ridge_axes)?;
    Ok(SfgResult {
        period_um,
        temperature_c: c.process.temperature_c,
        ridge_angle_deg: map.ridge_angle_deg,
        ridge_axes: map.axes,
        angles: RidgeAngles {
            frequency_deg: map.ridge_angle_in(RidgeAxes::Frequency)?,
            wavelength_deg: map.ridge_angle_in(RidgeAxes::Wavelength)?,
            normalized_window_deg: map.ridge_angle_in(RidgeAxes::NormalizedWindow)?,
        },
        map,
    })
}

pub fn tuning(project: &Project, period_um: f64, pump_nm: f64) -> Result<TuningResult, QpmError> {
    let c = &project.config;
    let [lo, hi] = c.process.signal_window_nm;
    let disp = project.interpolated(project.geometry(), pdc_bands(pump_nm, lo, hi));
    temperature_tuning(&disp, period_um, pump_nm, &c.grids.tuning_temperatures(), (lo, hi))
}

/// `dΔβ/dλ` on one arm of a down-conversion process, m⁻¹ per nm, by a central
/// difference of ±0.5 nm.
pub fn mismatch_slope(project: &Project, pump_nm: f64, axis: SpectrumAxis, center_nm: f64) -> Result<f64, QpmError> {
    if axis == SpectrumAxis::Sfg {
        return Err(QpmError::Input("mismatch slope needs the signal or idler axis".into()));
    }
    let h = 0.5;
    let disp = project.interpolated(project.geometry(), pdc_bands(pump_nm, center_nm - 2.0, center_nm + 2.0));
    let t = project.config.process.temperature_c;
    let db = |l: f64| {
        let c = conjugate_wavelength_nm(pump_nm, l);
        let (s, i) = if l <= c { (l, c) } else { (c, l) };
        modal_mismatch(&disp, pump_nm, s, i, t)
    };
    Ok((db(center_nm + h)? - db(center_nm - h)?) / (2.0 * h))
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub mode: FitMode,
    pub slope_per_m_nm: Option<f64>,
    /// "config" or "simulated".
    pub slope_source: Option<&'static str>,
    pub nominal_length_mm: f64,
    /// Effective over nominal length.
    pub length_ratio: Option<f64>,
    pub fit: SincFit,
    pub model: Vec<f64>,
}

pub fn fit_spectrum(project: &Project, spectrum: &Spectrum) -> Result<FitReport, QpmError> {
    let c = &project.config;
    let center = match c.fit.initial_center_nm {
        Some(v) => v,
        None => {
            let (k, _) = spectrum.peak().ok_or_else(|| QpmError::Input("empty spectrum".into()))?;
            spectrum.wavelength_nm[k]
        }
    };
    let length = c.process.length_mm;
    let (model, slope, source) = match c.fit.mode {
        FitMode::Free => (FitModel::FreeCoefficient, None, None),
        FitMode::Dispersion => {
            let (s, src) = match c.fit.slope_per_m_nm {
                Some(s) => (s, "config"),
                None => (mismatch_slope(project, c.process.spectrum_pump_nm, c.fit.axis, center)?, "simulated"),
            };
            (FitModel::Dispersion { slope_per_m_nm: s }, Some(s), Some(src))
        }
    };
    let fit = fit_sinc(spectrum, center, length, model, &c.fit.options())?;
    let curve = match fit.length_mm {
        Some(l) => sinc_model(&spectrum.wavelength_nm, fit.center_nm, l, slope.unwrap(), fit.amplitude, fit.offset),
        None => {
            let q_as_slope = 2.0 * fit.rate_per_nm / 1e-3;
            sinc_model(&spectrum.wavelength_nm, fit.center_nm, 1.0, q_as_slope, fit.amplitude, fit.offset)
        }
    };
    Ok(FitReport {
        mode: c.fit.mode,
        slope_per_m_nm: slope,
        slope_source: source,
        nominal_length_mm: length,
        length_ratio: fit.length_mm.map(|l| l / length),
        fit,
        model: curve,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedRow {
    /// 1-based line in the input file, header included.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BrightnessResult {
    pub measured_power_w: f64,
    pub pump: PumpPower,
    pub pair_rate_hz: Measured,
    pub bandwidth_ghz: f64,
    /// Pairs / (s · mW · GHz).
    pub brightness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BrightnessRow {
    pub source: &'static str,
    pub brightness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountsReport {
    pub accidentals_subtracted: bool,
    pub records: Vec<RecordSummary>,
    pub rejected: Vec<RejectedRow>,
    pub sweep: Option<SweepAnalysis>,
    /// At the highest measured power.
    pub brightness: BrightnessResult,
    /// Literature values with this analysis appended, brightest first.
    pub comparison: Vec<BrightnessRow>,
}

/// Parses the counts CSV, rejecting rows that violate the record invariants.
pub fn read_counts(text: &str) -> Result<(Vec<CountRecord>, Vec<RejectedRow>), String> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    for need in ["power_W", "t_int_s", "tau_c_s", "N_s", "N_1", "N_2", "C_s1", "C_s2", "C_s12"] {
        if !headers.iter().any(|h| h == need) {
            return Err(format!("missing column '{need}'"));
        }
    }
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        match rec.deserialize::<CountRecord>(Some(&headers)) {
            Ok(r) => match r.validate() {
                Ok(()) => ok.push(r),
                Err(e) => bad.push(RejectedRow { line, reason: e.to_string() }),
            },
            Err(e) => bad.push(RejectedRow { line, reason: e.to_string() }),
        }
    }
    Ok((ok, bad))
}

pub fn analyze_counts(project: &Project, records: &[CountRecord], rejected: Vec<RejectedRow>) -> Result<CountsReport, StatsError> {
    let c = &project.config;
    if records.is_empty() {
        return Err(StatsError::InvalidRecord("no valid count records".into()));
    }
    let recs: Vec<CountRecord> = if c.counts.subtract_accidentals {
        records.iter().map(subtract_accidentals).collect()
    } else {
        records.to_vec()
    };
    let trunc = c.solver.truncation;
    let summaries = recs
        .iter()
        .map(|r| photonstats::sweep::summarize(r, trunc))
        .collect::<Result<Vec<_>, _>>()?;
    let mut powers: Vec<f64> = recs.iter().map(|r| r.power_w).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    let sweep = if powers.len() >= 3 {
        Some(photonstats::power_sweep_analysis(&recs, trunc)?)
    } else {
        None
    };
    let top = recs
        .iter()
        .zip(&summaries)
        .max_by(|a, b| a.0.power_w.total_cmp(&b.0.power_w))
        .unwrap();
    let top_power = top.0.power_w;
    let pump = pump_power_inside(top_power, &c.power_chain)?;
    let rate = top.1.pair_rate_hz;
    let b = brightness(rate.value, pump.inside_w, c.counts.bandwidth_ghz * 1e9)?;
    let mut comparison: Vec<BrightnessRow> = BRIGHTNESS_REFERENCES
        .iter()
        .map(|r| BrightnessRow {
            source: r.source,
            brightness: r.brightness,
        })
        .collect();
    comparison.push(BrightnessRow {
        source: "this analysis",
        brightness: b,
    });
    comparison.sort_by(|a, b| b.brightness.total_cmp(&a.brightness));
    Ok(CountsReport {
        accidentals_subtracted: c.counts.subtract_accidentals,
        records: summaries,
        rejected,
        sweep,
        brightness: BrightnessResult {
            measured_power_w: top_power,
            pump,
            pair_rate_hz: rate,
            bandwidth_ghz: c.counts.bandwidth_ghz,
            brightness: b,
        },
        comparison,
    })
}
