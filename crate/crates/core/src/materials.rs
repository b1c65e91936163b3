//! Temperature-dependent refractive indices for the layers of a thin-film
//! lithium niobate stack.
//!
//! Three closed forms are supported:
//!
//! * the extended thermal Sellmeier form used for 5% MgO-doped congruent
//!   lithium niobate,
//!
//!   ```text
//!   n² = a1 + b1·f + (a2 + b2·f) / (λ² − (a3 + b3·f)²) + (a4 + b4·f) / (λ² − a5²) − a6·λ²
//!   f  = (T − 24.5)(T + 570.82)
//!   ```
//!
//! * a temperature-independent three-term Sellmeier form (fused silica),
//! * a constant index (air).
//!
//! Wavelengths are vacuum wavelengths in µm, temperatures in °C.
//!
//! Models are plain data. A [`MaterialLibrary`] starts from a versioned
//! built-in table and can be patched from a TOML override file (see
//! [`MaterialLibrary::apply_overrides`] for the schema).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag of the built-in coefficient table.
pub const BUILTIN_TABLE_VERSION: &str = "builtin-1";

/// Default temperature validity window in °C.
pub const DEFAULT_TEMPERATURE_RANGE_C: (f64, f64) = (20.0, 200.0);

/// Finite-difference step used by [`DispersionModel::index_derivative`], in µm.
pub const DERIVATIVE_STEP_UM: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("{material}: {argument} = {value} outside valid range [{min}, {max}]")]
    OutOfRange {
        material: Material,
        argument: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{material}: derivative at λ = {wavelength_um} µm needs a margin of {margin_um} µm inside [{min}, {max}]")]
    InsufficientMargin {
        material: Material,
        wavelength_um: f64,
        margin_um: f64,
        min: f64,
        max: f64,
    },
    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    DerivativeOrder(u8),
    #[error("{material}: closed form evaluated to a non-physical n² = {value}")]
    NonPhysical { material: Material, value: f64 },
    #[error("invalid model `{tag}`: {reason}")]
    InvalidModel { tag: String, reason: String },
    #[error("cannot read material override file {path}: {reason}")]
    OverrideFile { path: String, reason: String },
}

/// Identity of a material in the waveguide stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Material {
    /// MgO:LN, extraordinary polarization (crystal Z axis).
    LithiumNiobateExtraordinary,
    /// MgO:LN, ordinary polarization.
    LithiumNiobateOrdinary,
    FusedSilica,
    Air,
}

impl Material {
    pub fn tag(self) -> &'static str {
        match self {
            Material::LithiumNiobateExtraordinary => "lithium_niobate_extraordinary",
            Material::LithiumNiobateOrdinary => "lithium_niobate_ordinary",
            Material::FusedSilica => "fused_silica",
            Material::Air => "air",
        }
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Coefficients of the thermal Sellmeier form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSellmeier {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
}

impl ThermalSellmeier {
    /// Lower root of the thermal factor; `f` vanishes here.
    pub const REFERENCE_TEMPERATURE_C: f64 = 24.5;
    /// Upper root offset: `f = (T − 24.5)(T + 570.82)`.
    pub const UPPER_ROOT_C: f64 = 570.82;

    /// The thermal factor `(T − 24.5)(T + 570.82)`.
    ///
    /// Evaluated as `u² − h²` with `u` the distance from the midpoint of the two
    /// roots, so the mirror identity `f(T) = f(−T − 546.32)` holds to rounding.
    pub fn thermal_factor(temperature_c: f64) -> f64 {
        let mid = 0.5 * (Self::REFERENCE_TEMPERATURE_C - Self::UPPER_ROOT_C);
        let half = 0.5 * (Self::REFERENCE_TEMPERATURE_C + Self::UPPER_ROOT_C);
        let u = temperature_c - mid;
        (u - half) * (u + half)
    }

    fn index_squared(&self, wavelength_um: f64, thermal_factor: f64) -> f64 {
        let f = thermal_factor;
        let l2 = wavelength_um * wavelength_um;
        let uv_pole = self.a3 + self.b3 * f;
        self.a1 + self.b1 * f + (self.a2 + self.b2 * f) / (l2 - uv_pole * uv_pole)
            + (self.a4 + self.b4 * f) / (l2 - self.a5 * self.a5)
            - self.a6 * l2
    }
}

/// Three-term Sellmeier form `n² = 1 + Σ Bk·λ² / (λ² − Ck²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sellmeier3 {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Sellmeier3 {
    fn index_squared(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        1.0 + self.b1 * l2 / (l2 - self.c1 * self.c1)
            + self.b2 * l2 / (l2 - self.c2 * self.c2)
            + self.b3 * l2 / (l2 - self.c3 * self.c3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum IndexFormula {
    ThermalSellmeier(ThermalSellmeier),
    Sellmeier3(Sellmeier3),
    Constant { index: f64 },
}

/// A refractive-index model for one material with its validity ranges and
/// provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub material: Material,
    pub formula: IndexFormula,
    /// Valid vacuum wavelengths, µm.
    pub wavelength_range_um: (f64, f64),
    /// Accepted temperatures, °C.
    pub temperature_range_c: (f64, f64),
    pub source: String,
}

impl DispersionModel {
    /// Congruent 5% MgO:LN, extraordinary index (Gayer et al., Appl. Phys. B 91, 343 (2008)).
    pub fn mgo_ln_extraordinary() -> Self {
        Self {
            material: Material::LithiumNiobateExtraordinary,
            formula: IndexFormula::ThermalSellmeier(ThermalSellmeier {
                a1: 5.756,
                a2: 0.0983,
                a3: 0.2020,
                a4: 189.32,
                a5: 12.52,
                a6: 1.32e-2,
                b1: 2.860e-6,
                b2: 4.700e-8,
                b3: 6.113e-8,
                b4: 1.516e-4,
            }),
            wavelength_range_um: (0.5, 4.0),
            temperature_range_c: DEFAULT_TEMPERATURE_RANGE_C,
            source: "Gayer et al., Appl. Phys. B 91, 343 (2008), 5% MgO:CLN, n_e".into(),
        }
    }

    /// Congruent 5% MgO:LN, ordinary index (same reference).
    pub fn mgo_ln_ordinary() -> Self {
        Self {
            material: Material::LithiumNiobateOrdinary,
            formula: IndexFormula::ThermalSellmeier(ThermalSellmeier {
                a1: 5.653,
                a2: 0.1185,
                a3: 0.2091,
                a4: 89.61,
                a5: 10.85,
                a6: 1.97e-2,
                b1: 7.941e-7,
                b2: 3.134e-8,
                b3: -4.641e-9,
                b4: -2.188e-6,
            }),
            wavelength_range_um: (0.5, 4.0),
            temperature_range_c: DEFAULT_TEMPERATURE_RANGE_C,
            source: "Gayer et al., Appl. Phys. B 91, 343 (2008), 5% MgO:CLN, n_o".into(),
        }
    }

    /// Fused silica (Malitson, JOSA 55, 1205 (1965)), no thermal term.
    pub fn fused_silica() -> Self {
        Self {
            material: Material::FusedSilica,
            formula: IndexFormula::Sellmeier3(Sellmeier3 {
                b1: 0.696_166_3,
                b2: 0.407_942_6,
                b3: 0.897_479_4,
                c1: 0.068_404_3,
                c2: 0.116_241_4,
                c3: 9.896_161,
            }),
            wavelength_range_um: (0.21, 6.7),
            temperature_range_c: DEFAULT_TEMPERATURE_RANGE_C,
            source: "Malitson, JOSA 55, 1205 (1965)".into(),
        }
    }

    pub fn air() -> Self {
        Self {
            material: Material::Air,
            formula: IndexFormula::Constant { index: 1.0 },
            wavelength_range_um: (0.2, 10.0),
            temperature_range_c: DEFAULT_TEMPERATURE_RANGE_C,
            source: "n = 1 exactly".into(),
        }
    }

    /// A wavelength- and temperature-independent index, handy for tests.
    pub fn constant(material: Material, index: f64) -> Self {
        Self {
            material,
            formula: IndexFormula::Constant { index },
            wavelength_range_um: (0.2, 10.0),
            temperature_range_c: (-273.15, 1000.0),
            source: "constant".into(),
        }
    }

    fn check_range(&self, argument: &'static str, value: f64, range: (f64, f64)) -> Result<(), MaterialError> {
        if value.is_finite() && value >= range.0 && value <= range.1 {
            Ok(())
        } else {
            Err(MaterialError::OutOfRange {
                material: self.material,
                argument,
                value,
                min: range.0,
                max: range.1,
            })
        }
    }

    /// Refractive index at vacuum wavelength `wavelength_um` and temperature
    /// `temperature_c`.
    pub fn refractive_index(&self, wavelength_um: f64, temperature_c: f64) -> Result<f64, MaterialError> {
        self.check_range("wavelength_um", wavelength_um, self.wavelength_range_um)?;
        self.check_range("temperature_c", temperature_c, self.temperature_range_c)?;
        self.evaluate(wavelength_um, temperature_c)
    }

    fn evaluate(&self, wavelength_um: f64, temperature_c: f64) -> Result<f64, MaterialError> {
        let n2 = match &self.formula {
            IndexFormula::ThermalSellmeier(c) => {
                c.index_squared(wavelength_um, ThermalSellmeier::thermal_factor(temperature_c))
            }
            IndexFormula::Sellmeier3(c) => c.index_squared(wavelength_um),
            IndexFormula::Constant { index } => index * index,
        };
        if n2.is_finite() && n2 > 0.0 {
            Ok(n2.sqrt())
        } else {
            Err(MaterialError::NonPhysical {
                material: self.material,
                value: n2,
            })
        }
    }

    /// `d^k n / dλ^k` (k = 1 or 2, λ in µm) by fourth-order five-point central
    /// differences with step [`DERIVATIVE_STEP_UM`].
    pub fn index_derivative(&self, wavelength_um: f64, temperature_c: f64, order: u8) -> Result<f64, MaterialError> {
        self.index_derivative_with_step(wavelength_um, temperature_c, order, DERIVATIVE_STEP_UM)
    }

    /// Same as [`index_derivative`](Self::index_derivative) with an explicit step.
    /// The wavelength must sit at least two steps inside the valid range.
    pub fn index_derivative_with_step(
        &self,
        wavelength_um: f64,
        temperature_c: f64,
        order: u8,
        step_um: f64,
    ) -> Result<f64, MaterialError> {
        if order != 1 && order != 2 {
            return Err(MaterialError::DerivativeOrder(order));
        }
        let (lo, hi) = self.wavelength_range_um;
        let margin = 2.0 * step_um;
        if !(wavelength_um - margin > lo && wavelength_um + margin < hi) {
            return Err(MaterialError::InsufficientMargin {
                material: self.material,
                wavelength_um,
                margin_um: margin,
                min: lo,
                max: hi,
            });
        }
        self.check_range("temperature_c", temperature_c, self.temperature_range_c)?;
        let h = step_um;
        let p1 = self.evaluate(wavelength_um + h, temperature_c)?;
        let m1 = self.evaluate(wavelength_um - h, temperature_c)?;
        let p2 = self.evaluate(wavelength_um + 2.0 * h, temperature_c)?;
        let m2 = self.evaluate(wavelength_um - 2.0 * h, temperature_c)?;
        Ok(match order {
            1 => (m2 - p2 + 8.0 * (p1 - m1)) / (12.0 * h),
            _ => {
                let centre = self.evaluate(wavelength_um, temperature_c)?;
                (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * centre) / (12.0 * h * h)
            }
        })
    }

    /// Group index `n − λ dn/dλ`.
    pub fn group_index(&self, wavelength_um: f64, temperature_c: f64) -> Result<f64, MaterialError> {
        let n = self.refractive_index(wavelength_um, temperature_c)?;
        Ok(n - wavelength_um * self.index_derivative(wavelength_um, temperature_c, 1)?)
    }

    fn validate(&self, tag: &str) -> Result<(), MaterialError> {
        let bad = |reason: &str| MaterialError::InvalidModel {
            tag: tag.to_string(),
            reason: reason.to_string(),
        };
        let (l0, l1) = self.wavelength_range_um;
        if !(l0.is_finite() && l1.is_finite() && 0.0 < l0 && l0 < l1) {
            return Err(bad("wavelength range must satisfy 0 < min < max"));
        }
        let (t0, t1) = self.temperature_range_c;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(bad("temperature range must satisfy min < max"));
        }
        if let IndexFormula::Constant { index } = self.formula {
            if !(index.is_finite() && index >= 1.0) {
                return Err(bad("constant index must be finite and >= 1"));
            }
        }
        Ok(())
    }
}

/// Which model fills each region of the rib cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMaterials {
    pub film: DispersionModel,
    pub substrate: DispersionModel,
    pub cladding: DispersionModel,
    pub superstrate: DispersionModel,
}

impl Default for LayerMaterials {
    /// Type-0 quasi-TE stack: LN extraordinary film on silica, silica cladding, air.
    fn default() -> Self {
        Self {
            film: DispersionModel::mgo_ln_extraordinary(),
            substrate: DispersionModel::fused_silica(),
            cladding: DispersionModel::fused_silica(),
            superstrate: DispersionModel::air(),
        }
    }
}

/// Indices of the four stack regions at one wavelength and temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerIndices {
    pub film: f64,
    pub substrate: f64,
    pub cladding: f64,
    pub superstrate: f64,
}

impl LayerMaterials {
    pub fn indices(&self, wavelength_um: f64, temperature_c: f64) -> Result<LayerIndices, MaterialError> {
        Ok(LayerIndices {
            film: self.film.refractive_index(wavelength_um, temperature_c)?,
            substrate: self.substrate.refractive_index(wavelength_um, temperature_c)?,
            cladding: self.cladding.refractive_index(wavelength_um, temperature_c)?,
            superstrate: self.superstrate.refractive_index(wavelength_um, temperature_c)?,
        })
    }
}

/// Named models, keyed by tag.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLibrary {
    pub version: String,
    models: BTreeMap<String, DispersionModel>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideFile {
    #[serde(default)]
    version: Option<String>,
    #[serde(default, rename = "material")]
    materials: Vec<OverrideEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideEntry {
    tag: String,
    material: Material,
    formula: IndexFormula,
    wavelength_range_um: [f64; 2],
    #[serde(default)]
    temperature_range_c: Option<[f64; 2]>,
    source: String,
}

impl MaterialLibrary {
    /// The built-in table: `mgo_ln_e`, `mgo_ln_o`, `fused_silica`, `air`.
    pub fn builtin() -> Self {
        let models = [
            ("mgo_ln_e", DispersionModel::mgo_ln_extraordinary()),
            ("mgo_ln_o", DispersionModel::mgo_ln_ordinary()),
            ("fused_silica", DispersionModel::fused_silica()),
            ("air", DispersionModel::air()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            version: BUILTIN_TABLE_VERSION.to_string(),
            models,
        }
    }

    pub fn get(&self, tag: &str) -> Option<&DispersionModel> {
        self.models.get(tag)
    }

    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    /// Adds or replaces models from TOML text.
    ///
    /// ```toml
    /// version = "lab-2024"            # optional, appended to the table version
    ///
    /// [[material]]
    /// tag = "fused_silica"
    /// material = "fused_silica"
    /// wavelength_range_um = [0.21, 6.7]
    /// temperature_range_c = [20.0, 200.0]   # optional
    /// source = "in-house ellipsometry"
    /// formula = { form = "sellmeier3", b1 = 0.696, b2 = 0.408, b3 = 0.897, c1 = 0.0684, c2 = 0.116, c3 = 9.90 }
    /// ```
    ///
    /// `form` is one of `thermal_sellmeier` (keys `a1`..`a6`, `b1`..`b4`),
    /// `sellmeier3` (keys `b1`..`b3`, `c1`..`c3`) or `constant` (key `index`).
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), MaterialError> {
        let file: OverrideFile = toml::from_str(text).map_err(|e| MaterialError::OverrideFile {
            path: "<inline>".into(),
            reason: e.to_string(),
        })?;
        for entry in file.materials {
            let model = DispersionModel {
                material: entry.material,
                formula: entry.formula,
                wavelength_range_um: (entry.wavelength_range_um[0], entry.wavelength_range_um[1]),
                temperature_range_c: entry
                    .temperature_range_c
                    .map(|r| (r[0], r[1]))
                    .unwrap_or(DEFAULT_TEMPERATURE_RANGE_C),
                source: entry.source,
            };
            model.validate(&entry.tag)?;
            self.models.insert(entry.tag, model);
        }
        if let Some(v) = file.version {
            self.version = format!("{}+{}", self.version, v);
        }
        Ok(())
    }

    pub fn load_overrides(&mut self, path: &Path) -> Result<(), MaterialError> {
        let text = std::fs::read_to_string(path).map_err(|e| MaterialError::OverrideFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.apply_overrides(&text).map_err(|e| match e {
            MaterialError::OverrideFile { reason, .. } => MaterialError::OverrideFile {
                path: path.display().to_string(),
                reason,
            },
            other => other,
        })
    }
}
