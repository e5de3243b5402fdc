//! Structured reference mesh of one collar stack in unit (side-1)
//! coordinates.
//!
//! The stack of a side consists of the inner fiber band (depth profile d(x):
//! `C1 x/2`, `eps/2`, `C1 (1-x)/2`) and the annulus band between d(x) and
//! 2 d(x). One x-subdivision is shared by all rows, with breakpoints at
//! `a = eps/C1` and `1-a` so that weight discontinuities never cross
//! elements, geometric grading toward the two apexes, and a uniform middle.
//! Rows are `y = -t d(x)` for band fractions t, so triangle-piece rows are
//! rays through the apexes and every element's image under a collar frame is
//! congruent across coincident patches.

use crate::exact::{q, qi, Alg, APoint, Q};
use crate::geometry::c1_exact;
use crate::geometry::fibers::{a_of_eps, Band, PieceKind};
use num_traits::One;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct StackParams {
    /// bulk refinement depth r: target pitch 3^-(n+r), i.e. 3^r intervals
    /// along a unit side
    pub bulk_refine: u32,
    /// layers across the inner fiber band (and the annulus band)
    pub fiber_layers: u32,
    /// geometric grading ratio toward the apexes
    pub grade_ratio: Q,
    /// number of geometrically graded intervals inside [0, a]
    pub grade_depth: u32,
}

impl Default for StackParams {
    fn default() -> Self {
        StackParams {
            bulk_refine: 1,
            fiber_layers: 2,
            grade_ratio: q(1, 2),
            grade_depth: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct XNode {
    pub x: Alg,
    /// interior graded point (dropped by the thinned core rows)
    pub graded: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct RefElem {
    pub v: [u32; 3],
    pub kind: PieceKind,
    pub band: Band,
}

/// Reference collar mesh in unit coordinates (y <= 0 below the side).
#[derive(Debug, Clone)]
pub struct RefStack {
    pub xs: Vec<XNode>,
    pub verts: Vec<APoint>,
    pub verts_f: Vec<[f64; 2]>,
    pub elems: Vec<RefElem>,
    /// vertex index pairs of the base row (y = 0), interface row (y = -d)
    /// and outer row (y = -2d), as consecutive edges
    pub base_edges: Vec<(u32, u32)>,
    pub interface_edges: Vec<(u32, u32)>,
    pub outer_edges: Vec<(u32, u32)>,
    /// vertex ids of the base row and the outer row, in x order
    pub base_row: Vec<u32>,
    pub outer_row: Vec<u32>,
    pub fiber_layers: u32,
}

/// Band depth d(x) as an exact field element.
pub fn depth_exact(x: &Alg, eps: &Q, a: &Alg) -> Alg {
    let c1 = c1_exact();
    let half = q(1, 2);
    if (x.clone() - a.clone()).signum() < 0 {
        (c1 * x.clone()).scale(&half)
    } else if (x.clone() - (Alg::one() - a.clone())).signum() <= 0 {
        Alg::from_q(eps * &half)
    } else {
        (c1 * (Alg::one() - x.clone())).scale(&half)
    }
}

/// The shared x-subdivision: apex grading, piece breakpoints, uniform middle.
pub fn x_subdivision(eps: &Q, params: &StackParams) -> Vec<XNode> {
    let a = a_of_eps(eps);
    let a_f = a.to_f64();
    let mut xs: Vec<XNode> = vec![XNode { x: Alg::zero(), graded: false }];
    // graded points a * gamma^k for k = depth-1 .. 1
    let mut graded = Vec::new();
    let mut factor = Q::one();
    for _ in 1..params.grade_depth {
        factor *= &params.grade_ratio;
        graded.push(a.scale(&factor));
    }
    graded.reverse();
    for g in &graded {
        xs.push(XNode { x: g.clone(), graded: true });
    }
    xs.push(XNode { x: a.clone(), graded: false });
    // uniform middle at pitch ~ 3^-r
    let m_mid = (((1.0 - 2.0 * a_f) * 3f64.powi(params.bulk_refine as i32)).round() as i64).max(1);
    let width = Alg::one() - a.clone() - a.clone();
    for k in 1..m_mid {
        let t = Q::new(k.into(), m_mid.into());
        xs.push(XNode { x: a.clone() + width.scale(&t), graded: false });
    }
    xs.push(XNode { x: Alg::one() - a.clone(), graded: false });
    for g in graded.iter().rev() {
        xs.push(XNode { x: Alg::one() - g.clone(), graded: true });
    }
    xs.push(XNode { x: Alg::one(), graded: false });
    xs
}

impl RefStack {
    pub fn build(eps: &Q, params: &StackParams) -> RefStack {
        let a = a_of_eps(eps);
        let xs = x_subdivision(eps, params);
        let m_f = params.fiber_layers.max(1);
        let m_a = m_f;
        // band fractions t for rows 0..=m_f (fiber) and onward (annulus)
        let mut fractions: Vec<Q> = Vec::new();
        for j in 0..=m_f {
            fractions.push(Q::new((j as i64).into(), (m_f as i64).into()));
        }
        for j in 1..=m_a {
            fractions.push(Q::one() + Q::new((j as i64).into(), (m_a as i64).into()));
        }
        let n_rows = fractions.len();
        let k = xs.len();

        let mut verts: Vec<APoint> = Vec::new();
        let mut key_of: BTreeMap<Vec<u8>, u32> = BTreeMap::new();
        let mut ids = vec![vec![0u32; k]; n_rows];
        for (r, t) in fractions.iter().enumerate() {
            for (i, xn) in xs.iter().enumerate() {
                let d = depth_exact(&xn.x, eps, &a);
                let p = APoint::new(xn.x.clone(), -(d.scale(t)));
                let key = p.key();
                let id = *key_of.entry(key).or_insert_with(|| {
                    verts.push(p.clone());
                    (verts.len() - 1) as u32
                });
                ids[r][i] = id;
            }
        }

        let kind_of_col = |i: usize| -> PieceKind {
            let right = &xs[i + 1].x;
            let left = &xs[i].x;
            if (right.clone() - a.clone()).signum() <= 0 {
                PieceKind::TriA
            } else if (left.clone() - (Alg::one() - a.clone())).signum() >= 0 {
                PieceKind::TriB
            } else {
                PieceKind::Rect
            }
        };

        let mut elems = Vec::new();
        let mut push = |v: [u32; 3], kind: PieceKind, band: Band| {
            // orient counterclockwise in unit coordinates; collar frames are
            // orientation-preserving, so physical elements stay CCW
            let o = crate::exact::orient(
                &verts[v[0] as usize],
                &verts[v[1] as usize],
                &verts[v[2] as usize],
            );
            debug_assert!(o != 0, "degenerate reference element");
            let v = if o < 0 { [v[0], v[2], v[1]] } else { v };
            elems.push(RefElem { v, kind, band });
        };
        for r in 0..n_rows - 1 {
            let band = if r < m_f as usize { Band::Fiber } else { Band::Annulus };
            for i in 0..k - 1 {
                let kind = kind_of_col(i);
                let c00 = ids[r][i];
                let c10 = ids[r][i + 1];
                let c11 = ids[r + 1][i + 1];
                let c01 = ids[r + 1][i];
                if c00 == c01 {
                    push([c00, c10, c11], kind, band);
                } else if c10 == c11 {
                    push([c00, c10, c01], kind, band);
                } else {
                    push([c00, c10, c11], kind, band);
                    push([c00, c11, c01], kind, band);
                }
            }
        }

        let row_edges = |r: usize| -> Vec<(u32, u32)> {
            (0..k - 1)
                .filter(|&i| ids[r][i] != ids[r][i + 1])
                .map(|i| (ids[r][i], ids[r][i + 1]))
                .collect()
        };
        let base_edges = row_edges(0);
        let interface_edges = row_edges(m_f as usize);
        let outer_edges = row_edges(n_rows - 1);
        let base_row = ids[0].clone();
        let outer_row = ids[n_rows - 1].clone();
        let verts_f: Vec<[f64; 2]> = verts.iter().map(|p| p.to_f64()).collect();
        RefStack {
            xs,
            verts,
            verts_f,
            elems,
            base_edges,
            interface_edges,
            outer_edges,
            base_row,
            outer_row,
            fiber_layers: m_f,
        }
    }
}

pub fn qi_pub(n: i64) -> Q {
    qi(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;
    use crate::integrate::{polygon_integral, Integrand};

    #[test]
    fn subdivision_contains_breakpoints() {
        let eps = parse_rational("0.06").unwrap();
        let params = StackParams::default();
        let xs = x_subdivision(&eps, &params);
        let a = a_of_eps(&eps);
        assert!(xs.iter().any(|n| n.x == a));
        assert!(xs.iter().any(|n| n.x == Alg::one() - a.clone()));
        // strictly increasing
        for w in xs.windows(2) {
            assert!((w[1].x.clone() - w[0].x.clone()).signum() > 0);
        }
        // depth is continuous at a: C1 a / 2 == eps / 2
        let d = depth_exact(&a, &eps, &a);
        assert_eq!(d, Alg::from_q(&eps * q(1, 2)));
    }

    #[test]
    fn stack_covers_the_collar_exactly() {
        let eps = parse_rational("0.1").unwrap();
        let rs = RefStack::build(&eps, &StackParams::default());
        let mut fiber_area = 0.0;
        let mut total = 0.0;
        for e in &rs.elems {
            let pts: Vec<[f64; 2]> = e.v.iter().map(|&i| rs.verts_f[i as usize]).collect();
            let area = crate::integrate::polygon_area(&pts).abs();
            assert!(area > 1e-16, "degenerate element");
            total += area;
            if e.band == Band::Fiber {
                fiber_area += area;
            }
        }
        let expect_fiber = crate::geometry::fibers::sigma_eps_area(&eps).to_f64();
        let expect_total = crate::geometry::fibers::sigma_2eps_area(&eps).to_f64();
        assert!((fiber_area - expect_fiber).abs() < 1e-13, "{fiber_area} vs {expect_fiber}");
        assert!((total - expect_total).abs() < 1e-13);
    }

    #[test]
    fn elementwise_weight_integral_telescopes() {
        // sum over fiber elements of the analytic piece integrals equals the
        // collar totals: rect (1-2a), each triangle (2^p + C1^p) a / 2
        let eps = parse_rational("0.08").unwrap();
        let eps_f = 0.08;
        let p = 3.0;
        let c1 = 2.0 - 3f64.sqrt();
        let denom = 2f64.powf(p) + c1.powf(p);
        let rs = RefStack::build(&eps, &StackParams::default());
        let mut rect = 0.0;
        let mut tri = 0.0;
        for e in &rs.elems {
            if e.band != Band::Fiber {
                continue;
            }
            let pts: Vec<[f64; 2]> = e.v.iter().map(|&i| rs.verts_f[i as usize]).collect();
            let ig = match e.kind {
                PieceKind::Rect => Integrand::Const(2.0 / eps_f),
                PieceKind::TriA => Integrand::OverX(denom / c1),
                PieceKind::TriB => Integrand::OverOneMinusX(denom / c1),
            };
            let val = polygon_integral(&pts, ig);
            match e.kind {
                PieceKind::Rect => rect += val,
                _ => tri += val,
            }
        }
        let a = eps_f / c1;
        assert!((rect - (1.0 - 2.0 * a)).abs() < 1e-12, "{rect}");
        assert!((tri - denom * a).abs() < 1e-12, "{tri} vs {}", denom * a);
    }

    #[test]
    fn rows_and_markers() {
        let eps = parse_rational("0.1").unwrap();
        let rs = RefStack::build(&eps, &StackParams::default());
        // base row spans [0,1] at y=0
        let first = rs.verts_f[rs.base_row[0] as usize];
        let last = rs.verts_f[*rs.base_row.last().unwrap() as usize];
        assert_eq!(first, [0.0, 0.0]);
        assert!((last[0] - 1.0).abs() < 1e-15 && last[1].abs() < 1e-15);
        // outer row reaches depth eps in the middle
        let mid = rs.outer_row[rs.outer_row.len() / 2];
        assert!((rs.verts_f[mid as usize][1] + 0.1).abs() < 1e-12);
        assert_eq!(rs.base_edges.len(), rs.xs.len() - 1);
    }
}
