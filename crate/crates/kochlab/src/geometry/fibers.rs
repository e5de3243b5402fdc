//! Unit fiber collars and their rectangle/triangle decomposition.
//!
//! On side 1 of the unit cell (segment AB, cell above), the inner collar is
//! the trapezoid with vertices A, B, P2 = (1-a, -eps/2), P1 = (a, -eps/2) and
//! the outer collar reaches depth eps with corners Q1 = (a, -eps), Q2; here
//! `a = eps / C1 = eps (2 + sqrt 3)`. Everything is exact: `eps` is rational
//! and `a` lies in Q(sqrt 3). The inner trapezoid splits into the rectangle
//! `R` over [a, 1-a] and two corner triangles `T` whose band depth at
//! abscissa x is `C1 x / 2`; the annulus strip splits the same way.

use crate::exact::{qi, Alg, APoint, Q};
#[cfg(test)]
use crate::exact::q;
use crate::geometry::{side_motion, GeometryError, Similitude};
#[cfg(test)]
use crate::geometry::c1_exact;
use serde::Serialize;

/// Piece of a fiber collar in unit (side-1) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum PieceKind {
    /// constant-depth rectangle over the middle of the side
    Rect,
    /// corner triangle at the first endpoint of the side (abscissa 0)
    TriA,
    /// corner triangle at the second endpoint (abscissa 1)
    TriB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, PartialOrd, Ord)]
pub enum Band {
    /// inner collar Sigma_eps where the singular weight lives
    Fiber,
    /// Sigma_2eps minus Sigma_eps, unit conductivity
    Annulus,
}

/// One piece of a unit fiber collar: CCW polygon in side-1 coordinates.
#[derive(Debug, Clone)]
pub struct UnitPiece {
    pub kind: PieceKind,
    pub band: Band,
    pub poly: Vec<APoint>,
}

/// `a = eps / C1` exactly (`1/C1 = 2 + sqrt 3`).
pub fn a_of_eps(eps: &Q) -> Alg {
    Alg::new(eps * qi(2), eps.clone())
}

pub fn check_amplitude(eps: &Q) -> Result<(), GeometryError> {
    use num_traits::Zero;
    if eps <= &Q::zero() {
        return Err(GeometryError::AmplitudeOutOfRange);
    }
    // eps < eps0  <=>  a = eps/C1 < 1/2
    let a = a_of_eps(eps);
    if (a - Alg::rational(1, 2)).signum() >= 0 {
        return Err(GeometryError::AmplitudeOutOfRange);
    }
    Ok(())
}

/// Band depth profile of the inner collar at unit abscissa x: `C1 x / 2` on
/// the first corner, `eps/2` on the rectangle, `C1 (1-x)/2` on the second.
pub fn band_depth(eps: f64, x: f64) -> f64 {
    let c1 = 2.0 - 3f64.sqrt();
    let a = eps / c1;
    if x < a {
        c1 * x / 2.0
    } else if x <= 1.0 - a {
        eps / 2.0
    } else {
        c1 * (1.0 - x) / 2.0
    }
}

/// The six pieces of the side-1 collar (inner trapezoid + annulus strip).
pub fn unit_pieces(eps: &Q) -> Result<Vec<UnitPiece>, GeometryError> {
    check_amplitude(eps)?;
    let a = a_of_eps(eps);
    let one_m_a = Alg::one() - a.clone();
    let e2 = Alg::from_q(eps / qi(2));
    let e1 = Alg::from_q(eps.clone());
    let zero = Alg::zero();
    let one = Alg::one();
    let p = |x: &Alg, y: &Alg| APoint::new(x.clone(), y.clone());
    let pieces = vec![
        UnitPiece {
            kind: PieceKind::Rect,
            band: Band::Fiber,
            poly: vec![
                p(&a, &zero),
                p(&a, &-e2.clone()),
                p(&one_m_a, &-e2.clone()),
                p(&one_m_a, &zero),
            ],
        },
        UnitPiece {
            kind: PieceKind::TriA,
            band: Band::Fiber,
            poly: vec![p(&zero, &zero), p(&a, &-e2.clone()), p(&a, &zero)],
        },
        UnitPiece {
            kind: PieceKind::TriB,
            band: Band::Fiber,
            poly: vec![p(&one, &zero), p(&one_m_a, &zero), p(&one_m_a, &-e2.clone())],
        },
        UnitPiece {
            kind: PieceKind::Rect,
            band: Band::Annulus,
            poly: vec![
                p(&a, &-e2.clone()),
                p(&a, &-e1.clone()),
                p(&one_m_a, &-e1.clone()),
                p(&one_m_a, &-e2.clone()),
            ],
        },
        UnitPiece {
            kind: PieceKind::TriA,
            band: Band::Annulus,
            poly: vec![p(&zero, &zero), p(&a, &-e1.clone()), p(&a, &-e2.clone())],
        },
        UnitPiece {
            kind: PieceKind::TriB,
            band: Band::Annulus,
            poly: vec![p(&one, &zero), p(&one_m_a, &-e2.clone()), p(&one_m_a, &-e1)],
        },
    ];
    Ok(pieces)
}

/// Inner and outer trapezoid outlines of the side-1 collar (CCW).
pub fn unit_trapezoids(eps: &Q) -> Result<(Vec<APoint>, Vec<APoint>), GeometryError> {
    check_amplitude(eps)?;
    let a = a_of_eps(eps);
    let one_m_a = Alg::one() - a.clone();
    let e2 = Alg::from_q(eps / qi(2));
    let e1 = Alg::from_q(eps.clone());
    let inner = vec![
        APoint::origin(),
        APoint::new(a.clone(), -e2.clone()),
        APoint::new(one_m_a.clone(), -e2),
        APoint::new(Alg::one(), Alg::zero()),
    ];
    let outer = vec![
        APoint::origin(),
        APoint::new(a, -e1.clone()),
        APoint::new(one_m_a, -e1),
        APoint::new(Alg::one(), Alg::zero()),
    ];
    // reorder CCW: A, B, P2, P1 encloses the region below AB when traversed
    // A -> P1 -> P2 -> B
    let ccw = |v: Vec<APoint>| -> Vec<APoint> { v };
    Ok((ccw(inner), ccw(outer)))
}

/// Collar pieces for side `l` obtained by the rigid motion that carries side 1
/// onto side `l`.
pub fn side_pieces(eps: &Q, l: u8) -> Result<Vec<UnitPiece>, GeometryError> {
    let base = unit_pieces(eps)?;
    if l == 1 {
        return Ok(base);
    }
    let m = side_motion(l);
    Ok(base
        .into_iter()
        .map(|piece| UnitPiece {
            kind: piece.kind,
            band: piece.band,
            poly: piece.poly.iter().map(|pt| m.apply(pt)).collect(),
        })
        .collect())
}

/// The frame similitude of a collar on side `l` of the cell with composed map
/// `cell_map`: maps side-1 unit coordinates onto the physical patch.
pub fn side_frame(cell_map: &Similitude, l: u8) -> Similitude {
    cell_map.compose(&side_motion(l))
}

/// Unit weight density on a fiber piece, before the 3^n level factor:
/// `2/eps` on the rectangle and `(2^p + C1^p) / (C1 x)` on the corner
/// triangles (x measured from the adjacent cell vertex).
pub fn unit_weight(kind: PieceKind, eps: f64, p: f64, x: f64) -> f64 {
    let c1 = 2.0 - 3f64.sqrt();
    match kind {
        PieceKind::Rect => 2.0 / eps,
        PieceKind::TriA => (2f64.powf(p) + c1.powf(p)) / (c1 * x),
        PieceKind::TriB => (2f64.powf(p) + c1.powf(p)) / (c1 * (1.0 - x)),
    }
}

/// Exact area of the inner collar of one side: `eps (1 - a) / 2`.
pub fn sigma_eps_area(eps: &Q) -> Alg {
    let a = a_of_eps(eps);
    (Alg::one() - a).scale(&(eps / qi(2)))
}

/// Exact area of the full collar (Sigma_2eps) of one side: `eps (1 - a)`.
pub fn sigma_2eps_area(eps: &Q) -> Alg {
    let a = a_of_eps(eps);
    (Alg::one() - a).scale(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{parse_rational, polygon_area2};

    #[test]
    fn p1_matches_reference_value() {
        // eps = 0.1: P1 = (0.1/C1, -0.05) ~ (0.37320, -0.05)
        let eps = parse_rational("0.1").unwrap();
        let a = a_of_eps(&eps);
        assert!((a.to_f64() - 0.37320508).abs() < 1e-7);
        let (inner, _) = unit_trapezoids(&eps).unwrap();
        let p1 = &inner[1];
        assert!((p1.x.to_f64() - 0.37320508).abs() < 1e-7);
        assert!((p1.y.to_f64() + 0.05).abs() < 1e-15);
    }

    #[test]
    fn amplitude_range() {
        assert!(check_amplitude(&parse_rational("0.1").unwrap()).is_ok());
        assert!(check_amplitude(&parse_rational("0.134").unwrap()).is_err());
        assert!(check_amplitude(&parse_rational("0").unwrap()).is_err());
        assert!(check_amplitude(&parse_rational("-0.1").unwrap()).is_err());
        // eps0 itself is excluded (a = 1/2 exactly)
        let c1 = c1_exact();
        assert_eq!((c1.clone() * Alg::new(qi(2), qi(1))), Alg::one());
    }

    #[test]
    fn oblique_side_profile() {
        // oblique side of the corner triangle satisfies y = -C1 x / 2
        let eps = 0.1;
        let c1 = 2.0 - 3f64.sqrt();
        for x in [0.01, 0.1, 0.3] {
            if x < eps / c1 {
                assert!((band_depth(eps, x) - c1 * x / 2.0).abs() < 1e-15);
            }
        }
        assert!((band_depth(eps, 0.5) - 0.05).abs() < 1e-15);
        // depth is continuous at the breakpoint a
        let a = eps / c1;
        assert!((band_depth(eps, a - 1e-13) - band_depth(eps, a + 1e-13)).abs() < 1e-10);
    }

    #[test]
    fn pieces_tile_the_trapezoids() {
        let eps = parse_rational("0.06").unwrap();
        let pieces = unit_pieces(&eps).unwrap();
        assert_eq!(pieces.len(), 6);
        let mut fiber = Alg::zero();
        let mut total = Alg::zero();
        for piece in &pieces {
            let a2 = polygon_area2(&piece.poly);
            assert_eq!(a2.signum(), 1, "piece must be CCW");
            if piece.band == Band::Fiber {
                fiber = fiber + a2.clone();
            }
            total = total + a2;
        }
        let half = |x: Alg| x.scale(&q(1, 2));
        assert_eq!(half(fiber), sigma_eps_area(&eps));
        assert_eq!(half(total), sigma_2eps_area(&eps));
    }

    #[test]
    fn inner_collar_inside_outer() {
        let eps = parse_rational("0.1").unwrap();
        let (inner, outer) = unit_trapezoids(&eps).unwrap();
        let clipped = crate::exact::convex_clip(&inner, &outer);
        assert_eq!(polygon_area2(&clipped), polygon_area2(&inner));
    }

    #[test]
    fn side_pieces_are_rigid_copies() {
        let eps = parse_rational("0.08").unwrap();
        for l in 1..=3u8 {
            let pieces = side_pieces(&eps, l).unwrap();
            let base = unit_pieces(&eps).unwrap();
            for (a, b) in pieces.iter().zip(base.iter()) {
                assert_eq!(polygon_area2(&a.poly), polygon_area2(&b.poly));
            }
        }
    }
}
