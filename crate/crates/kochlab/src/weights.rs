//! The singular fiber weight w_eps^n and the conductivity a_eps^n.
//!
//! On every collar patch the weight is the reciprocal of the length of the
//! normal band segment through the point, up to the piece-dependent constant:
//! `1/|P - P_perp|` on the rectangle piece and `(2^p + C1^p)/(2 |P - P_perp|)`
//! on the corner triangles. In unit abscissa x this is `3^n / l_eps(x)` with
//! the three-branch profile below. The conductivity multiplies the weight by
//! `delta_n^{1-p}` on the inner fiber and is 1 elsewhere in the domain.

use crate::geometry::domain::{DomainGeometry, LocatedPatch, Region};
use crate::geometry::fibers::{unit_weight, Band, PieceKind};
use crate::geometry::Constants;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("point lies outside the inner fiber Sigma_eps^n")]
    PointOutsideFiber,
    #[error("point lies outside the domain Omega_eps^n")]
    PointOutsideDomain,
    #[error("abscissa {0} outside [0, 1]")]
    AbscissaOutOfRange(f64),
    #[error("fiber amplitude outside (0, eps0)")]
    AmplitudeOutOfRange,
}

/// Weight profile `l_eps(x)`: the weight on a side is `3^n / l_eps(x)`.
/// Branches: `C1 x / (2^p + C1^p)` on `[0, eps/C1]`, `eps/2` on the middle,
/// `C1 (1-x) / (2^p + C1^p)` on `[1 - eps/C1, 1]`. The branches do not agree
/// at the breakpoints; the jump ratio is `2 / (2^p + C1^p)`.
pub fn unit_profile(x: f64, eps: f64, p: f64) -> Result<f64, WeightError> {
    let c = Constants::new(p);
    if !(0.0..=1.0).contains(&x) {
        return Err(WeightError::AbscissaOutOfRange(x));
    }
    if eps <= 0.0 || eps >= c.eps0 {
        return Err(WeightError::AmplitudeOutOfRange);
    }
    let a = eps / c.c1;
    let denom = 2f64.powf(p) + c.c1.powf(p);
    Ok(if x < a {
        c.c1 * x / denom
    } else if x <= 1.0 - a {
        eps / 2.0
    } else {
        c.c1 * (1.0 - x) / denom
    })
}

/// The singular weight field on Sigma_eps^n.
#[derive(Clone)]
pub struct WeightField {
    pub geo: Arc<DomainGeometry>,
    pub p: f64,
    pub constants: Constants,
}

impl WeightField {
    pub fn new(geo: Arc<DomainGeometry>, p: f64) -> Self {
        let constants = Constants::new(p);
        WeightField { geo, p, constants }
    }

    /// 3^n
    pub fn level_factor(&self) -> f64 {
        3f64.powi(self.geo.n as i32)
    }

    /// Weight value from located patch coordinates.
    pub fn weight_from_patch(&self, lp: &LocatedPatch) -> f64 {
        self.level_factor() * unit_weight(lp.kind, self.geo.eps_f, self.p, lp.unit_x)
    }

    pub fn weight_at(&self, point: [f64; 2]) -> Result<f64, WeightError> {
        match self.geo.locate(point) {
            (Region::InnerFiber, Some(lp)) => Ok(self.weight_from_patch(&lp)),
            _ => Err(WeightError::PointOutsideFiber),
        }
    }
}

/// Conductivity `a_eps^n = delta_n^{1-p} w_eps^n` on the fiber, 1 elsewhere.
#[derive(Clone)]
pub struct ConductivityField {
    pub weight: WeightField,
}

impl ConductivityField {
    pub fn new(geo: Arc<DomainGeometry>, p: f64) -> Self {
        ConductivityField { weight: WeightField::new(geo, p) }
    }

    pub fn delta_prefactor(&self) -> f64 {
        self.weight.constants.delta_pow(self.weight.geo.n)
    }

    pub fn conductivity_at(&self, point: [f64; 2]) -> Result<f64, WeightError> {
        match self.weight.geo.locate(point) {
            (Region::InnerFiber, Some(lp)) => {
                Ok(self.delta_prefactor() * self.weight.weight_from_patch(&lp))
            }
            (Region::Bulk, _) | (Region::Annulus, _) | (Region::InnerFiber, None) => Ok(1.0),
            (Region::Outside, _) => Err(WeightError::PointOutsideDomain),
        }
    }
}

/// Weight extended by 1 outside the fiber (used by the A_p diagnostic).
pub fn extended_weight(field: &WeightField, point: [f64; 2]) -> f64 {
    match field.geo.locate(point) {
        (Region::InnerFiber, Some(lp)) => field.weight_from_patch(&lp),
        _ => 1.0,
    }
}

pub use crate::geometry::domain::Region as DomainRegion;
pub use crate::geometry::fibers::Band as FiberBand;

/// Located fiber data for tests and diagnostics.
pub fn locate_fiber(geo: &DomainGeometry, point: [f64; 2]) -> Option<LocatedPatch> {
    match geo.locate(point) {
        (Region::InnerFiber, lp) => lp,
        _ => None,
    }
}

#[allow(dead_code)]
fn band_of(lp: &LocatedPatch) -> Band {
    lp.band
}

#[allow(dead_code)]
fn kind_of(lp: &LocatedPatch) -> PieceKind {
    lp.kind
}
