//! Project configuration: one TOML file with explicit units in every key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::materials::{LayerMaterials, MaterialError, MaterialLibrary};
use crate::modesolver::{Refinement, SolverOptions};
use crate::photonstats::{PowerChain, DEFAULT_TRUNCATION, MIN_TRUNCATION};
use crate::qpm::fit::FitOptions;
use crate::qpm::spectrum::{RidgeAxes, SpectrumAxis, WavelengthGrid};
use crate::qpm::tolerance::ToleranceSpec;
use crate::waveguide::{GridSpec, WaveguideGeometry};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Material tag per stack region, plus an optional override table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialsConfig {
    pub film: String,
    pub substrate: String,
    pub cladding: String,
    pub superstrate: String,
    /// Override table, relative to the config file.
    pub overrides: Option<PathBuf>,
}

impl Default for MaterialsConfig {
    fn default() -> Self {
        Self {
            film: "mgo_ln_e".into(),
            substrate: "fused_silica".into(),
            cladding: "fused_silica".into(),
            superstrate: "air".into(),
            overrides: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProcessConfig {
    /// Pump used for design (period and tolerance analysis).
    pub design_pump_nm: f64,
    /// Pump used for simulated spectra and tuning.
    pub spectrum_pump_nm: f64,
    pub signal_nm: f64,
    pub temperature_c: f64,
    pub length_mm: f64,
    /// Fabricated periods; empty means the designed period only.
    pub periods_um: Vec<f64>,
    /// Window searched for the phase-matched signal.
    pub signal_window_nm: [f64; 2],
}

impl Default for ProcessConfig {
    fn default() -> Self {
        Self {
            design_pump_nm: 532.0,
            spectrum_pump_nm: 534.0,
            signal_nm: 810.0,
            temperature_c: 25.0,
            length_mm: 3.0,
            periods_um: Vec::new(),
            signal_window_nm: [760.0, 880.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_nm: f64,
    pub stop_nm: f64,
    pub step_nm: f64,
}

impl From<GridConfig> for WavelengthGrid {
    fn from(g: GridConfig) -> Self {
        WavelengthGrid::new(g.start_nm, g.stop_nm, g.step_nm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridsConfig {
    pub pdc_axis: SpectrumAxis,
    pub pdc: GridConfig,
    pub sfg_visible: GridConfig,
    pub sfg_telecom: GridConfig,
    pub ridge_axes: RidgeAxes,
    pub tuning_start_c: f64,
    pub tuning_stop_c: f64,
    pub tuning_step_c: f64,
}

impl Default for GridsConfig {
    fn default() -> Self {
        Self {
            pdc_axis: SpectrumAxis::Idler,
            pdc: GridConfig {
                start_nm: 1450.0,
                stop_nm: 1650.0,
                step_nm: 0.2,
            },
            sfg_visible: GridConfig {
                start_nm: 795.0,
                stop_nm: 825.0,
                step_nm: 5.0,
            },
            sfg_telecom: GridConfig {
                start_nm: 1500.0,
                stop_nm: 1600.0,
                step_nm: 0.2,
            },
            ridge_axes: RidgeAxes::Frequency,
            tuning_start_c: 25.0,
            tuning_stop_c: 35.0,
            tuning_step_c: 2.5,
        }
    }
}

impl GridsConfig {
    pub fn tuning_temperatures(&self) -> Vec<f64> {
        let n = ((self.tuning_stop_c - self.tuning_start_c) / self.tuning_step_c + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.tuning_start_c + k as f64 * self.tuning_step_c).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepRefinement {
    /// One solve per point at the base pitch.
    Fixed,
    /// Same refinement as single-point effective indices.
    Converged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub pitch_nm: f64,
    pub half_width_um: f64,
    pub substrate_depth_um: f64,
    pub air_height_um: f64,
    /// Pitch-halving stops when successive indices differ by less than this.
    pub neff_target: f64,
    pub max_halvings: usize,
    /// Refinement used for tolerance sweeps, spectra and maps.
    pub sweep_refinement: SweepRefinement,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub residual_tol: f64,
    /// Photon-number truncation of the correlation series.
    pub truncation: u64,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        let o = SolverOptions::default();
        let Refinement::Converged { target, max_halvings } = Refinement::default() else {
            unreachable!()
        };
        Self {
            pitch_nm: g.pitch_nm,
            half_width_um: g.half_width_um,
            substrate_depth_um: g.substrate_depth_um,
            air_height_um: g.air_height_um,
            neff_target: target,
            max_halvings,
            sweep_refinement: SweepRefinement::Fixed,
            krylov_dim: o.krylov_dim,
            max_restarts: o.max_restarts,
            residual_tol: o.residual_tol,
            truncation: DEFAULT_TRUNCATION,
            threads: 0,
        }
    }
}

impl SolverConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            pitch_nm: self.pitch_nm,
            half_width_um: self.half_width_um,
            substrate_depth_um: self.substrate_depth_um,
            air_height_um: self.air_height_um,
        }
    }

    pub fn refinement(&self) -> Refinement {
        Refinement::Converged {
            target: self.neff_target,
            max_halvings: self.max_halvings,
        }
    }

    pub fn sweep_refinement(&self) -> Refinement {
        match self.sweep_refinement {
            SweepRefinement::Fixed => Refinement::Fixed,
            SweepRefinement::Converged => self.refinement(),
        }
    }

    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            krylov_dim: self.krylov_dim,
            max_restarts: self.max_restarts,
            residual_tol: self.residual_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Rate from the simulated mismatch slope; fits an effective length.
    Dispersion,
    /// Free rate; no length.
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub mode: FitMode,
    pub axis: SpectrumAxis,
    /// Mismatch slope in m⁻¹ per nm; simulated when absent.
    pub slope_per_m_nm: Option<f64>,
    /// Starting centre; the data peak when absent.
    pub initial_center_nm: Option<f64>,
    pub max_iterations: usize,
    pub rel_step_tol: f64,
    pub min_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        let o = FitOptions::default();
        Self {
            mode: FitMode::Dispersion,
            axis: SpectrumAxis::Idler,
            slope_per_m_nm: None,
            initial_center_nm: None,
            max_iterations: o.max_iterations,
            rel_step_tol: o.rel_step_tol,
            min_points: o.min_points,
        }
    }
}

impl FitConfig {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.max_iterations,
            rel_step_tol: self.rel_step_tol,
            min_points: self.min_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountsConfig {
    /// Photon bandwidth used for brightness.
    pub bandwidth_ghz: f64,
    /// Subtract accidental coincidences `N_s·N_k·τ_c/t_int` before analysis.
    pub subtract_accidentals: bool,
    /// Detector efficiencies, stored as metadata only.
    pub detector_efficiencies: [f64; 3],
}

impl Default for CountsConfig {
    fn default() -> Self {
        Self {
            bandwidth_ghz: 2104.0,
            subtract_accidentals: false,
            detector_efficiencies: [0.83, 0.83, 0.85],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub format_version: u32,
    #[serde(default = "WaveguideGeometry::nominal")]
    pub geometry: WaveguideGeometry,
    #[serde(default)]
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub process: ProcessConfig,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub power_chain: PowerChain,
    #[serde(default)]
    pub grids: GridsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub counts: CountsConfig,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            geometry: WaveguideGeometry::nominal(),
            materials: MaterialsConfig::default(),
            process: ProcessConfig::default(),
            tolerances: ToleranceSpec::default(),
            power_chain: PowerChain::default(),
            grids: GridsConfig::default(),
            solver: SolverConfig::default(),
            fit: FitConfig::default(),
            counts: CountsConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn check_grid(field: &str, g: &GridConfig) -> Result<(), ConfigError> {
    WavelengthGrid::from(*g)
        .points()
        .map(|_| ())
        .map_err(|e| invalid(field, e.to_string()))
}

impl ProjectConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ProjectConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.into(),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut cfg = Self::from_toml_str(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.layer_materials()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(invalid(
                "format_version",
                format!("expected {CONFIG_FORMAT_VERSION}, got {}", self.format_version),
            ));
        }
        self.geometry.validate().map_err(|e| invalid("geometry", e.to_string()))?;
        let p = &self.process;
        positive("process.design_pump_nm", p.design_pump_nm)?;
        positive("process.spectrum_pump_nm", p.spectrum_pump_nm)?;
        positive("process.length_mm", p.length_mm)?;
        if !(p.signal_nm > p.design_pump_nm && p.signal_nm.is_finite()) {
            return Err(invalid("process.signal_nm", "must be longer than the design pump"));
        }
        if !p.temperature_c.is_finite() {
            return Err(invalid("process.temperature_c", "must be finite"));
        }
        for (k, v) in p.periods_um.iter().enumerate() {
            positive(&format!("process.periods_um[{k}]"), *v)?;
        }
        let [lo, hi] = p.signal_window_nm;
        if !(lo < hi && lo > p.design_pump_nm.max(p.spectrum_pump_nm)) {
            return Err(invalid("process.signal_window_nm", "needs pump < lo < hi"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.width_um", t.width_um),
            ("tolerances.etch_depth_um", t.etch_depth_um),
            ("tolerances.angle_deg", t.angle_deg),
            ("tolerances.thickness_um", t.thickness_um),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        self.power_chain.validate().map_err(|e| invalid("power_chain", e.to_string()))?;
        let g = &self.grids;
        check_grid("grids.pdc", &g.pdc)?;
        check_grid("grids.sfg_visible", &g.sfg_visible)?;
        check_grid("grids.sfg_telecom", &g.sfg_telecom)?;
        if g.pdc_axis == SpectrumAxis::Sfg {
            return Err(invalid("grids.pdc_axis", "must be signal or idler"));
        }
        positive("grids.tuning_step_c", g.tuning_step_c)?;
        if g.tuning_stop_c < g.tuning_start_c {
            return Err(invalid("grids.tuning_stop_c", "must not precede tuning_start_c"));
        }
        let s = &self.solver;
        positive("solver.pitch_nm", s.pitch_nm)?;
        positive("solver.half_width_um", s.half_width_um)?;
        positive("solver.substrate_depth_um", s.substrate_depth_um)?;
        positive("solver.air_height_um", s.air_height_um)?;
        if !(s.neff_target >= 1e-5) {
            return Err(invalid("solver.neff_target", "must be at least 1e-5"));
        }
        if s.truncation < MIN_TRUNCATION {
            return Err(invalid("solver.truncation", format!("must be at least {MIN_TRUNCATION}")));
        }
        if s.krylov_dim < 4 {
            return Err(invalid("solver.krylov_dim", "must be at least 4"));
        }
        if self.fit.axis == SpectrumAxis::Sfg {
            return Err(invalid("fit.axis", "must be signal or idler"));
        }
        if let Some(v) = self.fit.slope_per_m_nm {
            if !(v.is_finite() && v != 0.0) {
                return Err(invalid("fit.slope_per_m_nm", "must be finite and non-zero"));
            }
        }
        positive("counts.bandwidth_ghz", self.counts.bandwidth_ghz)?;
        Ok(())
    }

    /// Resolves the material tags against the built-in table and overrides.
    pub fn layer_materials(&self) -> Result<LayerMaterials, ConfigError> {
        let mut lib = MaterialLibrary::builtin();
        if let Some(p) = &self.materials.overrides {
            lib.load_overrides(&self.base_dir.join(p))?;
        }
        let get = |field: &str, tag: &str| {
            lib.get(tag)
                .cloned()
                .ok_or_else(|| invalid(field, format!("unknown material tag '{tag}'")))
        };
        Ok(LayerMaterials {
            film: get("materials.film", &self.materials.film)?,
            substrate: get("materials.substrate", &self.materials.substrate)?,
            cladding: get("materials.cladding", &self.materials.cladding)?,
            superstrate: get("materials.superstrate", &self.materials.superstrate)?,
        })
    }

    /// SHA-256 of the canonical JSON form of the parsed configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// SHA-256 of a byte string, hex encoded.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_nominal_defaults() {
        let c = ProjectConfig::from_toml_str("format_version = 1\n", "inline").unwrap();
        assert_eq!(c.geometry, WaveguideGeometry::nominal());
        assert_eq!(c.grids.tuning_temperatures(), vec![25.0, 27.5, 30.0, 32.5, 35.0]);
        assert_eq!(c.hash(), ProjectConfig::default().hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ProjectConfig::from_toml_str("format_version = 1\n[geometry]\nwidth = 1.0\n", "inline").unwrap_err();
        assert!(matches!(e, ConfigError::Parse { .. }), "{e}");
        let e = ProjectConfig::from_toml_str("format_version = 1\nbogus = 2\n", "inline").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
    }

    #[test]
    fn invariants_are_checked_at_load() {
        let e = ProjectConfig::from_toml_str("format_version = 1\n[process]\nlength_mm = -1.0\n", "inline").unwrap_err();
        assert!(e.to_string().contains("process.length_mm"), "{e}");
        assert!(ProjectConfig::from_toml_str("format_version = 2\n", "inline").is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let c = ProjectConfig::default();
        let back = ProjectConfig::from_toml_str(&c.to_toml(), "inline").unwrap();
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_material_tag() {
        let mut c = ProjectConfig::default();
        c.materials.film = "unobtainium".into();
        assert!(c.layer_materials().is_err());
    }
}
