//! Guided quasi-TE eigenmodes of a rasterized cross-section.
//!
//! [`solve_modes`] discretizes the semivectorial operator of
//! [`operator`](self::operator) on an [`IndexMap`], factorizes `A − σI` with
//! `σ = (0.999·n_max·k0)²` and extracts the eigenpairs nearest `σ` by
//! shift-invert Arnoldi. Only modes whose effective index exceeds the guiding
//! cutoff are returned. [`NeffSolver`] wraps this with grid refinement,
//! Richardson extrapolation and a shared cache.

pub mod arnoldi;
pub mod banded;
pub mod operator;

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::materials::{LayerMaterials, MaterialError};
use crate::waveguide::{GeometryError, GridSpec, IndexMap, WaveguideGeometry};

use self::arnoldi::{shift_invert, ArnoldiOptions};
use self::banded::BandError;
use self::operator::Stencil;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("at least one mode must be requested")]
    NoModesRequested,
    #[error("eigensolver did not converge after {restarts} restarts (worst residual {residual:.3e})")]
    NotConverged { restarts: usize, residual: f64 },
    #[error("shifted operator is singular: {0}")]
    Factorization(#[from] BandError),
    #[error("n_eff did not converge to {target:.1e}: pitch sequence {pitches_nm:?} gave {values:?}")]
    Refinement {
        target: f64,
        pitches_nm: Vec<f64>,
        values: Vec<f64>,
    },
    #[error("no guided mode at λ = {wavelength_um} µm for any tested pitch")]
    NotGuided { wavelength_um: f64 },
    #[error("convergence target {0} is below the supported minimum 1e-5")]
    TargetTooTight(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Mirror symmetry imposed about the rib axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    #[default]
    None,
    Even,
    Odd,
}

#[derive(Debug, Clone)]
pub struct GuidedMode {
    pub n_eff: f64,
    pub wavelength_um: f64,
    pub temperature_c: f64,
    /// Dominant field on the full map grid, row-major with x fastest,
    /// normalized so that `Σ E² dx dy = 1` (µm⁻²·µm²) and its largest
    /// excursion is positive.
    pub field: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    /// Fraction of field energy in the dominant component. The semivectorial
    /// model carries a single component, so this is 1.
    pub polarization_fraction: f64,
    pub residual: f64,
}

impl GuidedMode {
    pub fn field_at(&self, i: usize, j: usize) -> f64 {
        self.field[j * self.nx + i]
    }

    /// Number of sign changes of the field along the row through its peak.
    pub fn lateral_nodes(&self) -> usize {
        let (peak, _) = self
            .field
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
        let j = peak / self.nx;
        let amax = self.field[peak].abs();
        let row: Vec<f64> = (0..self.nx)
            .map(|i| self.field_at(i, j))
            .filter(|v| v.abs() > 1e-3 * amax)
            .collect();
        row.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
    }

    /// Largest field magnitude on the window boundary relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut edge = 0.0f64;
        for j in 0..self.ny {
            edge = edge.max(self.field_at(0, j).abs()).max(self.field_at(self.nx - 1, j).abs());
        }
        for i in 0..self.nx {
            edge = edge.max(self.field_at(i, 0).abs()).max(self.field_at(i, self.ny - 1).abs());
        }
        edge / peak
    }

    /// Field matrix as CSV, rows top to bottom.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for j in (0..self.ny).rev() {
            let row: Vec<String> = (0..self.nx).map(|i| format!("{:.6e}", self.field_at(i, j))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ModeSolution {
    /// Guided modes, descending effective index.
    pub modes: Vec<GuidedMode>,
    /// Effective index below which a mode is not guided.
    pub cutoff_index: f64,
    /// Effective indices of all converged candidates, guided or not.
    pub candidates: Vec<f64>,
    pub unknowns: usize,
    pub restarts: usize,
}

impl ModeSolution {
    pub fn is_guided(&self) -> bool {
        !self.modes.is_empty()
    }

    pub fn fundamental(&self) -> Option<&GuidedMode> {
        self.modes.first()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let a = ArnoldiOptions::default();
        Self {
            krylov_dim: a.krylov_dim,
            max_restarts: a.max_restarts,
            residual_tol: a.tol,
        }
    }
}

/// Shift factor relative to the largest material index.
pub const SHIFT_FACTOR: f64 = 0.999;

struct RawEigen {
    n_eff: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    stencil: Stencil,
    restarts: usize,
}

fn eigen(map: &IndexMap, nev: usize, symmetry: Symmetry, floor_index: f64, opts: &SolverOptions) -> Result<RawEigen, SolverError> {
    let k0 = 2.0 * std::f64::consts::PI / map.wavelength_um;
    let stencil = Stencil::build(map, k0, symmetry);
    let sigma = (SHIFT_FACTOR * map.max_index() * k0).powi(2);
    let mut band = stencil.shifted_band(sigma);
    band.factorize()?;
    let aopts = ArnoldiOptions {
        krylov_dim: opts.krylov_dim,
        max_restarts: opts.max_restarts,
        tol: opts.residual_tol,
        ..ArnoldiOptions::default()
    };
    let floor = (floor_index * k0).powi(2);
    let rep = shift_invert(&stencil, &band, sigma, nev, floor, &aopts);
    if !rep.converged {
        let residual = rep.pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
        log::warn!(
            "modesolver: not converged lambda_um={} unknowns={} restarts={} residual={residual:.3e}",
            map.wavelength_um,
            stencil.len(),
            rep.restarts
        );
        return Err(SolverError::NotConverged {
            restarts: rep.restarts,
            residual,
        });
    }
    let n_eff = rep.pairs.iter().map(|p| p.value.max(0.0).sqrt() / k0).collect();
    let residuals = rep.pairs.iter().map(|p| p.residual).collect();
    let vectors = rep.pairs.into_iter().map(|p| p.vector).collect();
    Ok(RawEigen {
        n_eff,
        vectors,
        residuals,
        stencil,
        restarts: rep.restarts,
    })
}

/// Fundamental effective index of a laterally invariant column of permittivities.
fn column_neff(eps: Vec<f64>, dy_um: f64, wavelength_um: f64, opts: &SolverOptions) -> Result<f64, SolverError> {
    let ny = eps.len();
    let mut col = IndexMap::uniform(1.0, 1, ny, dy_um, wavelength_um);
    col.eps = eps;
    let raw = eigen(&col, 1, Symmetry::None, 0.0, opts)?;
    Ok(raw.n_eff[0])
}

/// Index below which modes of `map` radiate: the largest homogeneous region
/// index, or the slab mode of the window's edge column if that is higher.
pub fn guiding_cutoff(map: &IndexMap, opts: &SolverOptions) -> Result<f64, SolverError> {
    let l = map.layers;
    let mut cut = l.substrate.max(l.cladding).max(l.superstrate);
    if map.nx > 1 {
        let edge = map.column(map.nx - 1);
        let emax = edge.iter().cloned().fold(0.0, f64::max);
        let emin = edge.iter().cloned().fold(f64::INFINITY, f64::min);
        if emax > emin {
            cut = cut.max(column_neff(edge, map.dy_um, map.wavelength_um, opts)?);
        }
    } else {
        let e = &map.eps;
        cut = cut.max(e[0].sqrt()).max(e[e.len() - 1].sqrt());
    }
    Ok(cut)
}

/// Guided quasi-TE modes of `map`, descending in effective index.
///
/// Returns at most `n_modes`; fewer when the others fall below cutoff. An empty
/// list means nothing is guided.
pub fn solve_modes(map: &IndexMap, n_modes: usize, symmetry: Symmetry, opts: &SolverOptions) -> Result<ModeSolution, SolverError> {
    if n_modes == 0 {
        return Err(SolverError::NoModesRequested);
    }
    let cutoff = guiding_cutoff(map, opts)?;
    let nmax = map.max_index();
    if nmax <= cutoff {
        return Ok(ModeSolution {
            modes: Vec::new(),
            cutoff_index: cutoff,
            candidates: Vec::new(),
            unknowns: 0,
            restarts: 0,
        });
    }
    let symmetry = if map.mirror_symmetric && map.nx > 1 { symmetry } else { Symmetry::None };
    let raw = eigen(map, n_modes, symmetry, cutoff, opts)?;
    let s = &raw.stencil;
    let dxdy = map.dx_um * map.dy_um;
    let mut modes = Vec::new();
    for ((&n_eff, v), &res) in raw.n_eff.iter().zip(&raw.vectors).zip(&raw.residuals) {
        if !(n_eff > cutoff && n_eff < nmax) {
            continue;
        }
        let mut field = vec![0.0; map.nx * map.ny];
        let sign_mirror = if symmetry == Symmetry::Odd { -1.0 } else { 1.0 };
        for j in 0..s.rows {
            for i in 0..s.cols {
                let val = v[s.index(i, j)];
                let gi = i + s.col_offset;
                field[j * map.nx + gi] = val;
                if s.col_offset > 0 {
                    field[j * map.nx + (map.nx - 1 - gi)] = sign_mirror * val;
                }
            }
        }
        let energy: f64 = field.iter().map(|e| e * e).sum::<f64>() * dxdy;
        let peak = field.iter().cloned().fold(0.0f64, |m, e| if e.abs() > m.abs() { e } else { m });
        let scale = peak.signum() / energy.sqrt();
        field.iter_mut().for_each(|e| *e *= scale);
        modes.push(GuidedMode {
            n_eff,
            wavelength_um: map.wavelength_um,
            temperature_c: map.temperature_c,
            field,
            nx: map.nx,
            ny: map.ny,
            polarization_fraction: 1.0,
            residual: res,
        });
    }
    log::debug!(
        "modesolver: lambda_um={} pitch_nm={:.3} unknowns={} symmetry={:?} restarts={} cutoff={:.6} candidates={:?}",
        map.wavelength_um,
        1000.0 * map.dx_um,
        s.len(),
        symmetry,
        raw.restarts,
        cutoff,
        raw.n_eff
    );
    Ok(ModeSolution {
        modes,
        cutoff_index: cutoff,
        candidates: raw.n_eff,
        unknowns: s.len(),
        restarts: raw.restarts,
    })
}

/// How [`NeffSolver`] turns solves into an effective index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refinement {
    /// One solve at the grid pitch.
    Fixed,
    /// Halve the pitch until successive values differ by less than `target`
    /// (at most `max_halvings` times), then Richardson-extrapolate.
    Converged { target: f64, max_halvings: usize },
}

impl Default for Refinement {
    fn default() -> Self {
        Refinement::Converged {
            target: 2e-4,
            max_halvings: 3,
        }
    }
}

/// Assumed convergence order of the fundamental effective index in the pitch.
pub const RICHARDSON_ORDER: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NeffEstimate {
    pub n_eff: f64,
    pub pitches_nm: Vec<f64>,
    pub values: Vec<f64>,
}

type CacheKey = [u64; 9];

/// Fundamental-mode effective index of a geometry with memoization.
///
/// Safe to share between threads; concurrent writers of the same key store
/// identical values. Clones share the cache.
#[derive(Debug, Clone)]
pub struct NeffSolver {
    pub materials: LayerMaterials,
    pub grid: GridSpec,
    pub refinement: Refinement,
    pub options: SolverOptions,
    cache: Arc<RwLock<HashMap<CacheKey, f64>>>,
}

impl NeffSolver {
    pub fn new(materials: LayerMaterials, grid: GridSpec, refinement: Refinement) -> Self {
        Self {
            materials,
            grid,
            refinement,
            options: SolverOptions::default(),
            cache: Arc::new(RwLock::new(HashMap::new())),
        }
    }

    /// Same solver and cache with another refinement policy.
    pub fn with_refinement(&self, refinement: Refinement) -> Self {
        Self {
            refinement,
            ..self.clone()
        }
    }

    fn key(g: &WaveguideGeometry, wavelength_um: f64, temperature_c: f64, pitch_nm: f64) -> CacheKey {
        [
            g.film_thickness_nm.to_bits(),
            g.etch_depth_nm.to_bits(),
            g.top_width_um.to_bits(),
            g.sidewall_angle_deg.to_bits(),
            g.cladding_thickness_nm.to_bits(),
            g.angle_convention as u64,
            wavelength_um.to_bits(),
            temperature_c.to_bits(),
            pitch_nm.to_bits(),
        ]
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().unwrap().len()
    }

    /// Fundamental effective index at one pitch; `None` if not guided.
    pub fn solve_at_pitch(
        &self,
        geometry: &WaveguideGeometry,
        wavelength_um: f64,
        temperature_c: f64,
        pitch_nm: f64,
    ) -> Result<Option<f64>, SolverError> {
        let key = Self::key(geometry, wavelength_um, temperature_c, pitch_nm);
        if let Some(&v) = self.cache.read().unwrap().get(&key) {
            return Ok(if v.is_nan() { None } else { Some(v) });
        }
        let grid = self.grid.with_pitch(pitch_nm);
        let map = IndexMap::rasterize(geometry, &self.materials, wavelength_um, temperature_c, &grid)?;
        let sol = solve_modes(&map, 1, Symmetry::Even, &self.options)?;
        let v = sol.fundamental().map(|m| m.n_eff);
        self.cache.write().unwrap().insert(key, v.unwrap_or(f64::NAN));
        Ok(v)
    }

    /// Fundamental effective index following the configured refinement.
    pub fn estimate(&self, geometry: &WaveguideGeometry, wavelength_um: f64, temperature_c: f64) -> Result<NeffEstimate, SolverError> {
        let p0 = self.grid.pitch_nm;
        match self.refinement {
            Refinement::Fixed => {
                let v = self
                    .solve_at_pitch(geometry, wavelength_um, temperature_c, p0)?
                    .ok_or(SolverError::NotGuided { wavelength_um })?;
                Ok(NeffEstimate {
                    n_eff: v,
                    pitches_nm: vec![p0],
                    values: vec![v],
                })
            }
            Refinement::Converged { target, max_halvings } => {
                if target < 1e-5 {
                    return Err(SolverError::TargetTooTight(target));
                }
                let mut pitches = Vec::new();
                let mut values = Vec::new();
                let mut pitch = p0;
                for _ in 0..=max_halvings {
                    let v = self.solve_at_pitch(geometry, wavelength_um, temperature_c, pitch)?;
                    pitches.push(pitch);
                    values.push(v);
                    if let [.., Some(a), Some(b)] = values[..] {
                        if (a - b).abs() < target {
                            let r = 2f64.powf(RICHARDSON_ORDER);
                            let n_eff = b + (b - a) / (r - 1.0);
                            log::debug!(
                                "neff: lambda_um={wavelength_um} T_c={temperature_c} pitches_nm={pitches:?} n_eff={n_eff:.8}"
                            );
                            return Ok(NeffEstimate {
                                n_eff,
                                pitches_nm: pitches,
                                values: values.into_iter().flatten().collect(),
                            });
                        }
                    }
                    pitch /= 2.0;
                }
                if values.iter().all(Option::is_none) {
                    return Err(SolverError::NotGuided { wavelength_um });
                }
                Err(SolverError::Refinement {
                    target,
                    pitches_nm: pitches,
                    values: values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
                })
            }
        }
    }

    pub fn n_eff(&self, geometry: &WaveguideGeometry, wavelength_um: f64, temperature_c: f64) -> Result<f64, SolverError> {
        Ok(self.estimate(geometry, wavelength_um, temperature_c)?.n_eff)
    }
}
