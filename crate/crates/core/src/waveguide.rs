//! Rib cross-section geometry and its rasterization to a permittivity map.
//!
//! Coordinates: `x` is lateral with the rib axis at `x = 0`, `y` is vertical
//! with the film/substrate interface at `y = 0`. Cell edges sit on integer
//! multiples of the pitch from that origin, so enlarging the window never
//! moves an interior cell and the map is mirror-exact about `x = 0`.
//!
//! Boundary cells carry the exact area-weighted average of the permittivities
//! of the regions they overlap.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::{LayerIndices, LayerMaterials, MaterialError};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("csv export failed: {0}")]
    Io(#[from] std::io::Error),
}

/// How the sidewall angle is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleConvention {
    /// `a = 0` is a vertical wall; base width is `w + 2·h·tan(a)`.
    #[default]
    FromVertical,
    /// `a = 90` is a vertical wall; base width is `w + 2·h / tan(a)`.
    FromHorizontal,
}

/// Trapezoidal rib on a residual slab, with conformal cladding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideGeometry {
    pub film_thickness_nm: f64,
    pub etch_depth_nm: f64,
    pub top_width_um: f64,
    pub sidewall_angle_deg: f64,
    pub cladding_thickness_nm: f64,
    #[serde(default)]
    pub angle_convention: AngleConvention,
}

/// Fabrication parameters that tolerance analysis varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryParameter {
    Width,
    EtchDepth,
    Angle,
    Thickness,
}

impl GeometryParameter {
    pub const ALL: [GeometryParameter; 4] = [
        GeometryParameter::Width,
        GeometryParameter::EtchDepth,
        GeometryParameter::Angle,
        GeometryParameter::Thickness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeometryParameter::Width => "width",
            GeometryParameter::EtchDepth => "etch_depth",
            GeometryParameter::Angle => "angle",
            GeometryParameter::Thickness => "thickness",
        }
    }

    /// Unit of the value returned by [`WaveguideGeometry::parameter`].
    pub fn unit(self) -> &'static str {
        match self {
            GeometryParameter::Angle => "deg",
            _ => "um",
        }
    }
}

impl WaveguideGeometry {
    /// t = 607 nm, h = 300 nm, w = 1 µm, a = 30°, c = 1000 nm.
    pub fn nominal() -> Self {
        Self {
            film_thickness_nm: 607.0,
            etch_depth_nm: 300.0,
            top_width_um: 1.0,
            sidewall_angle_deg: 30.0,
            cladding_thickness_nm: 1000.0,
            angle_convention: AngleConvention::FromVertical,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let t = self.film_thickness_nm;
        let h = self.etch_depth_nm;
        let fin = [t, h, self.top_width_um, self.sidewall_angle_deg, self.cladding_thickness_nm]
            .iter()
            .all(|v| v.is_finite());
        if !fin {
            return Err(GeometryError::Invalid("non-finite parameter".into()));
        }
        if !(h > 0.0 && h <= t) {
            return Err(GeometryError::Invalid(format!(
                "etch depth {h} nm must satisfy 0 < h <= film thickness {t} nm"
            )));
        }
        if self.top_width_um <= 0.0 {
            return Err(GeometryError::Invalid(format!(
                "top width {} um must be positive",
                self.top_width_um
            )));
        }
        let a = self.sidewall_angle_deg;
        let ok = match self.angle_convention {
            AngleConvention::FromVertical => (0.0..90.0).contains(&a),
            AngleConvention::FromHorizontal => a > 0.0 && a <= 90.0,
        };
        if !ok {
            return Err(GeometryError::Invalid(format!(
                "sidewall angle {a} deg outside the range of the {:?} convention",
                self.angle_convention
            )));
        }
        if self.cladding_thickness_nm < 0.0 {
            return Err(GeometryError::Invalid("cladding thickness must be >= 0".into()));
        }
        Ok(())
    }

    /// Lateral run of one sidewall, nm.
    pub fn sidewall_run_nm(&self) -> f64 {
        let a = self.sidewall_angle_deg.to_radians();
        match self.angle_convention {
            AngleConvention::FromVertical => self.etch_depth_nm * a.tan(),
            AngleConvention::FromHorizontal => {
                if self.sidewall_angle_deg == 90.0 {
                    0.0
                } else {
                    self.etch_depth_nm / a.tan()
                }
            }
        }
    }

    pub fn base_width_nm(&self) -> f64 {
        1000.0 * self.top_width_um + 2.0 * self.sidewall_run_nm()
    }

    pub fn slab_thickness_nm(&self) -> f64 {
        self.film_thickness_nm - self.etch_depth_nm
    }

    /// Cross-sectional LN area (rib trapezoid plus slab across `window_width_nm`), nm².
    pub fn film_area_nm2(&self, window_width_nm: f64) -> f64 {
        let w = 1000.0 * self.top_width_um;
        let trapezoid = 0.5 * (w + self.base_width_nm()) * self.etch_depth_nm;
        trapezoid + self.slab_thickness_nm() * window_width_nm
    }

    /// Value of one fabrication parameter: µm for lengths, degrees for the angle.
    pub fn parameter(&self, p: GeometryParameter) -> f64 {
        match p {
            GeometryParameter::Width => self.top_width_um,
            GeometryParameter::EtchDepth => self.etch_depth_nm / 1000.0,
            GeometryParameter::Angle => self.sidewall_angle_deg,
            GeometryParameter::Thickness => self.film_thickness_nm / 1000.0,
        }
    }

    /// Copy with one parameter replaced (same units as [`parameter`](Self::parameter)).
    pub fn with_parameter(&self, p: GeometryParameter, value: f64) -> Self {
        let mut g = *self;
        match p {
            GeometryParameter::Width => g.top_width_um = value,
            GeometryParameter::EtchDepth => g.etch_depth_nm = 1000.0 * value,
            GeometryParameter::Angle => g.sidewall_angle_deg = value,
            GeometryParameter::Thickness => g.film_thickness_nm = 1000.0 * value,
        }
        g
    }

    /// LN top surface as a piecewise-linear profile in `|x|` (µm), vertices sorted by x.
    fn film_profile_um(&self) -> [(f64, f64); 2] {
        let half_top = 0.5 * self.top_width_um;
        let run = self.sidewall_run_nm() / 1000.0;
        let t = self.film_thickness_nm / 1000.0;
        let s = self.slab_thickness_nm() / 1000.0;
        [(half_top, t), (half_top + run, s)]
    }
}

/// Computational window and pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub pitch_nm: f64,
    /// Window extends ± this much from the rib axis.
    pub half_width_um: f64,
    /// Substrate depth below the film.
    pub substrate_depth_um: f64,
    /// Air above the top of the cladding.
    pub air_height_um: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            pitch_nm: 25.0,
            half_width_um: 3.0,
            substrate_depth_um: 1.5,
            air_height_um: 1.5,
        }
    }
}

impl GridSpec {
    pub fn with_pitch(mut self, pitch_nm: f64) -> Self {
        self.pitch_nm = pitch_nm;
        self
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let all = [self.pitch_nm, self.half_width_um, self.substrate_depth_um, self.air_height_um];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(GeometryError::Grid(format!(
                "pitch and padding must be finite and positive, got {self:?}"
            )));
        }
        if self.pitch_nm > 1000.0 * self.half_width_um {
            return Err(GeometryError::Grid("pitch exceeds window half-width".into()));
        }
        Ok(())
    }
}

/// Cell permittivities of a cross-section, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub dx_um: f64,
    pub dy_um: f64,
    pub nx: usize,
    pub ny: usize,
    /// Lateral position of the left window edge, µm.
    pub x0_um: f64,
    /// Vertical position of the bottom window edge, µm.
    pub y0_um: f64,
    pub eps: Vec<f64>,
    /// Fraction of each cell occupied by the film material.
    pub film_fraction: Vec<f64>,
    /// Indices of the homogeneous regions used to build the map.
    pub layers: LayerIndices,
    pub wavelength_um: f64,
    pub temperature_c: f64,
    /// True when the map is mirror-symmetric about `x = 0` by construction.
    pub mirror_symmetric: bool,
}

/// Area of `clamp(q(x) − y0, 0, dy)` over `[xa, xb]` for a piecewise-linear
/// profile `q` (flat outside its vertices).
fn clamped_area(profile: &[(f64, f64)], offset: f64, xa: f64, xb: f64, y0: f64, dy: f64) -> f64 {
    let q = |x: f64| -> f64 {
        let (x_first, y_first) = profile[0];
        if x <= x_first {
            return y_first + offset;
        }
        for win in profile.windows(2) {
            let (xl, yl) = win[0];
            let (xr, yr) = win[1];
            if x <= xr {
                return if xr > xl { yl + (yr - yl) * (x - xl) / (xr - xl) } else { yr } + offset;
            }
        }
        profile[profile.len() - 1].1 + offset
    };
    let mut pts = vec![xa, xb];
    for &(xv, _) in profile {
        if xv > xa && xv < xb {
            pts.push(xv);
        }
    }
    for win in profile.windows(2) {
        let (xl, yl) = win[0];
        let (xr, yr) = win[1];
        if xr <= xl || yr == yl {
            continue;
        }
        for level in [y0, y0 + dy] {
            let s = (level - offset - yl) / (yr - yl);
            if s > 0.0 && s < 1.0 {
                let xc = xl + s * (xr - xl);
                if xc > xa && xc < xb {
                    pts.push(xc);
                }
            }
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let g = |x: f64| (q(x) - y0).clamp(0.0, dy);
    pts.windows(2).map(|p| 0.5 * (p[1] - p[0]) * (g(p[0]) + g(p[1]))).sum()
}

impl IndexMap {
    /// Rasterizes `geometry` with the region indices of `materials` at (λ, T).
    pub fn rasterize(
        geometry: &WaveguideGeometry,
        materials: &LayerMaterials,
        wavelength_um: f64,
        temperature_c: f64,
        grid: &GridSpec,
    ) -> Result<Self, GeometryError> {
        geometry.validate()?;
        grid.validate()?;
        let layers = materials.indices(wavelength_um, temperature_c)?;
        Ok(Self::rasterize_with_indices(geometry, layers, wavelength_um, temperature_c, grid))
    }

    /// Same as [`rasterize`](Self::rasterize) with region indices supplied directly.
    /// Geometry and grid must already be valid.
    pub fn rasterize_with_indices(
        geometry: &WaveguideGeometry,
        layers: LayerIndices,
        wavelength_um: f64,
        temperature_c: f64,
        grid: &GridSpec,
    ) -> Self {
        let d = grid.pitch_nm / 1000.0;
        let half_cells = (grid.half_width_um / d).round().max(1.0) as usize;
        let nx = 2 * half_cells;
        let n_sub = (grid.substrate_depth_um / d).ceil() as usize;
        let top = (geometry.film_thickness_nm + geometry.cladding_thickness_nm) / 1000.0 + grid.air_height_um;
        let n_top = (top / d).ceil() as usize;
        let ny = n_sub + n_top;
        let profile = geometry.film_profile_um();
        let clad_offset = geometry.cladding_thickness_nm / 1000.0;

        let e_film = layers.film * layers.film;
        let e_sub = layers.substrate * layers.substrate;
        let e_clad = layers.cladding * layers.cladding;
        let e_sup = layers.superstrate * layers.superstrate;

        // Right half only; the left half is its mirror image.
        let mut eps = vec![0.0; nx * ny];
        let mut film_fraction = vec![0.0; nx * ny];
        let area = d * d;
        for j in 0..ny {
            let y0 = (j as f64 - n_sub as f64) * d;
            let sub = (-y0).clamp(0.0, d) / d;
            for k in 0..half_cells {
                let xa = k as f64 * d;
                let xb = (k + 1) as f64 * d;
                let below_film = clamped_area(&profile, 0.0, xa, xb, y0, d) / area;
                let below_clad = clamped_area(&profile, clad_offset, xa, xb, y0, d) / area;
                let f_film = (below_film - sub).max(0.0);
                let f_clad = (below_clad - below_film).max(0.0);
                let f_sup = (1.0 - below_clad).max(0.0);
                let e = sub * e_sub + f_film * e_film + f_clad * e_clad + f_sup * e_sup;
                let right = j * nx + half_cells + k;
                let left = j * nx + half_cells - 1 - k;
                eps[right] = e;
                eps[left] = e;
                film_fraction[right] = f_film;
                film_fraction[left] = f_film;
            }
        }
        Self {
            dx_um: d,
            dy_um: d,
            nx,
            ny,
            x0_um: -(half_cells as f64) * d,
            y0_um: -(n_sub as f64) * d,
            eps,
            film_fraction,
            layers,
            wavelength_um,
            temperature_c,
            mirror_symmetric: true,
        }
    }

    /// Horizontally invariant stack: one column of layers `(thickness µm, index)`
    /// listed bottom to top, discretized with pitch `dy_um`. The solver treats
    /// `nx = 1` maps as slabs.
    pub fn from_layers(layers_bottom_up: &[(f64, f64)], dy_um: f64, wavelength_um: f64) -> Result<Self, GeometryError> {
        if !(dy_um > 0.0 && dy_um.is_finite()) {
            return Err(GeometryError::Grid("pitch must be positive".into()));
        }
        if layers_bottom_up.is_empty() {
            return Err(GeometryError::Invalid("no layers".into()));
        }
        let mut eps = Vec::new();
        let mut y = 0.0;
        let total: f64 = layers_bottom_up.iter().map(|l| l.0).sum();
        let ny = (total / dy_um).round() as usize;
        let mut boundaries = Vec::new();
        for &(t, n) in layers_bottom_up {
            if !(t > 0.0 && n >= 1.0) {
                return Err(GeometryError::Invalid(format!("bad layer ({t}, {n})")));
            }
            y += t;
            boundaries.push((y, n * n));
        }
        for j in 0..ny {
            let ya = j as f64 * dy_um;
            let yb = ya + dy_um;
            let mut lo = 0.0;
            let mut e = 0.0;
            for &(top, en) in &boundaries {
                let overlap = (yb.min(top) - ya.max(lo)).max(0.0);
                e += overlap * en;
                lo = top;
            }
            eps.push(e / dy_um);
        }
        let first = layers_bottom_up[0].1;
        let last = layers_bottom_up[layers_bottom_up.len() - 1].1;
        let max_n = layers_bottom_up.iter().map(|l| l.1).fold(1.0, f64::max);
        Ok(Self {
            dx_um: dy_um,
            dy_um,
            nx: 1,
            ny,
            x0_um: 0.0,
            y0_um: 0.0,
            film_fraction: eps.iter().map(|&e| if e >= max_n * max_n { 1.0 } else { 0.0 }).collect(),
            eps,
            layers: LayerIndices {
                film: max_n,
                substrate: first,
                cladding: last,
                superstrate: last,
            },
            wavelength_um,
            temperature_c: f64::NAN,
            mirror_symmetric: true,
        })
    }

    /// Uniform map of one index.
    pub fn uniform(index: f64, nx: usize, ny: usize, pitch_um: f64, wavelength_um: f64) -> Self {
        let e = index * index;
        Self {
            dx_um: pitch_um,
            dy_um: pitch_um,
            nx,
            ny,
            x0_um: -(nx as f64) * pitch_um / 2.0,
            y0_um: 0.0,
            eps: vec![e; nx * ny],
            film_fraction: vec![0.0; nx * ny],
            layers: LayerIndices {
                film: index,
                substrate: index,
                cladding: index,
                superstrate: index,
            },
            wavelength_um,
            temperature_c: f64::NAN,
            mirror_symmetric: nx % 2 == 0,
        }
    }

    #[inline]
    pub fn eps_at(&self, i: usize, j: usize) -> f64 {
        self.eps[j * self.nx + i]
    }

    pub fn index_at(&self, i: usize, j: usize) -> f64 {
        self.eps_at(i, j).sqrt()
    }

    pub fn max_index(&self) -> f64 {
        self.eps.iter().cloned().fold(0.0, f64::max).sqrt()
    }

    pub fn x_center_um(&self, i: usize) -> f64 {
        self.x0_um + (i as f64 + 0.5) * self.dx_um
    }

    pub fn y_center_um(&self, j: usize) -> f64 {
        self.y0_um + (j as f64 + 0.5) * self.dy_um
    }

    /// LN area in the map, nm².
    pub fn film_area_nm2(&self) -> f64 {
        let cell = self.dx_um * self.dy_um * 1e6;
        self.film_fraction.iter().sum::<f64>() * cell
    }

    /// One column of permittivities, bottom to top.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.ny).map(|j| self.eps_at(i, j)).collect()
    }

    /// Writes the refractive-index matrix as CSV: first row holds the x cell
    /// centres (µm) after a `y_um` header cell, each following row starts with
    /// the y cell centre. Rows run top to bottom.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), GeometryError> {
        write!(out, "y_um\\x_um")?;
        for i in 0..self.nx {
            write!(out, ",{:.6}", self.x_center_um(i))?;
        }
        writeln!(out)?;
        for j in (0..self.ny).rev() {
            write!(out, "{:.6}", self.y_center_um(j))?;
            for i in 0..self.nx {
                write!(out, ",{:.8}", self.index_at(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
