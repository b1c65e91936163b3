//! Sources of effective index as a function of wavelength (nm) and temperature.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::materials::DispersionModel;
use crate::modesolver::{NeffSolver, SolverError};
use crate::numerics::Chebyshev;
use crate::waveguide::WaveguideGeometry;

use super::QpmError;

pub trait Dispersion: Send + Sync {
    /// Effective index at vacuum wavelength `wavelength_nm` and `temperature_c`.
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError>;
}

impl<D: Dispersion + ?Sized> Dispersion for &D {
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        (**self).n_eff(wavelength_nm, temperature_c)
    }
}

impl<D: Dispersion + ?Sized> Dispersion for Arc<D> {
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        (**self).n_eff(wavelength_nm, temperature_c)
    }
}

/// Fundamental quasi-TE mode of a rib, solved on demand.
#[derive(Debug, Clone)]
pub struct WaveguideDispersion {
    pub solver: Arc<NeffSolver>,
    pub geometry: WaveguideGeometry,
}

impl WaveguideDispersion {
    pub fn new(solver: Arc<NeffSolver>, geometry: WaveguideGeometry) -> Self {
        Self { solver, geometry }
    }
}

impl Dispersion for WaveguideDispersion {
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        match self.solver.n_eff(&self.geometry, wavelength_nm / 1000.0, temperature_c) {
            Ok(v) => Ok(v),
            Err(SolverError::NotGuided { .. }) => Err(QpmError::NotGuided { wavelength_nm }),
            Err(e) => Err(QpmError::Solver(e)),
        }
    }
}

/// Bulk material index, for plane-wave estimates and tests.
#[derive(Debug, Clone)]
pub struct BulkDispersion(pub DispersionModel);

impl Dispersion for BulkDispersion {
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        Ok(self.0.refractive_index(wavelength_nm / 1000.0, temperature_c)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantDispersion(pub f64);

impl Dispersion for ConstantDispersion {
    fn n_eff(&self, _: f64, _: f64) -> Result<f64, QpmError> {
        Ok(self.0)
    }
}

/// Closure-backed dispersion.
pub struct FnDispersion<F>(pub F);

impl<F> Dispersion for FnDispersion<F>
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        Ok((self.0)(wavelength_nm, temperature_c))
    }
}

/// A wavelength window interpolated with a fixed number of Chebyshev nodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Band {
    pub lo_nm: f64,
    pub hi_nm: f64,
    pub nodes: usize,
}

impl Band {
    pub fn new(lo_nm: f64, hi_nm: f64, nodes: usize) -> Self {
        Self { lo_nm, hi_nm, nodes }
    }

    /// A single wavelength, evaluated exactly.
    pub fn point(wavelength_nm: f64) -> Self {
        Self {
            lo_nm: wavelength_nm,
            hi_nm: wavelength_nm,
            nodes: 1,
        }
    }

    /// Band with a node count sized for `< 2e-5` interpolation error in
    /// effective index over these smooth curves.
    pub fn auto(lo_nm: f64, hi_nm: f64) -> Self {
        let rel = (hi_nm - lo_nm) / (0.5 * (hi_nm + lo_nm));
        let nodes = if rel < 0.02 {
            4
        } else if rel < 0.06 {
            5
        } else if rel < 0.15 {
            6
        } else {
            8
        };
        Self { lo_nm, hi_nm, nodes }
    }

    fn contains(&self, wavelength_nm: f64) -> bool {
        wavelength_nm >= self.lo_nm && wavelength_nm <= self.hi_nm
    }
}

enum Interpolant {
    Point(f64),
    Cheb(Chebyshev),
}

/// Memoized Chebyshev interpolation of an inner dispersion, per band and
/// temperature. Wavelengths outside every band go to the inner source.
pub struct ChebyshevDispersion<D> {
    pub inner: D,
    pub bands: Vec<Band>,
    cache: RwLock<HashMap<(usize, u64), Arc<Interpolant>>>,
}

impl<D: Dispersion> ChebyshevDispersion<D> {
    pub fn new(inner: D, bands: Vec<Band>) -> Self {
        Self {
            inner,
            bands,
            cache: RwLock::new(HashMap::new()),
        }
    }

    fn interpolant(&self, band: usize, temperature_c: f64) -> Result<Arc<Interpolant>, QpmError> {
        let key = (band, temperature_c.to_bits());
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let b = self.bands[band];
        let interp = if b.nodes <= 1 || b.hi_nm <= b.lo_nm {
            Interpolant::Point(self.inner.n_eff(0.5 * (b.lo_nm + b.hi_nm), temperature_c)?)
        } else {
            let nodes = Chebyshev::nodes(b.lo_nm, b.hi_nm, b.nodes);
            let values = nodes
                .par_iter()
                .map(|&l| self.inner.n_eff(l, temperature_c))
                .collect::<Result<Vec<_>, _>>()?;
            Interpolant::Cheb(Chebyshev::from_values(b.lo_nm, b.hi_nm, &values))
        };
        let interp = Arc::new(interp);
        self.cache.write().unwrap().insert(key, interp.clone());
        Ok(interp)
    }

    /// Coefficients of the interpolant for `band` at `temperature_c`.
    pub fn coefficients(&self, band: usize, temperature_c: f64) -> Result<Vec<f64>, QpmError> {
        Ok(match &*self.interpolant(band, temperature_c)? {
            Interpolant::Point(v) => vec![2.0 * v],
            Interpolant::Cheb(c) => c.coeffs.clone(),
        })
    }
}

impl<D: Dispersion> Dispersion for ChebyshevDispersion<D> {
    fn n_eff(&self, wavelength_nm: f64, temperature_c: f64) -> Result<f64, QpmError> {
        for (k, b) in self.bands.iter().enumerate() {
            if b.contains(wavelength_nm) {
                return Ok(match &*self.interpolant(k, temperature_c)? {
                    Interpolant::Point(v) => *v,
                    Interpolant::Cheb(c) => c.eval(wavelength_nm),
                });
            }
        }
        self.inner.n_eff(wavelength_nm, temperature_c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_matches_bulk_index_inside_bands() {
        let bulk = BulkDispersion(DispersionModel::mgo_ln_extraordinary());
        let cheb = ChebyshevDispersion::new(
            bulk.clone(),
            vec![Band::point(532.0), Band::auto(780.0, 860.0), Band::auto(1400.0, 1700.0)],
        );
        for l in [532.0, 780.0, 801.3, 860.0, 1400.0, 1555.5, 1700.0, 1000.0] {
            let a = cheb.n_eff(l, 31.0).unwrap();
            let b = bulk.n_eff(l, 31.0).unwrap();
            assert!((a - b).abs() < 2e-6, "{l}: {a} vs {b}");
        }
    }
}
