//! Sampled Muckenhoupt A_p diagnostic for the fiber weight.
//!
//! For a ball B the quantity checked is the normalized product
//! `(avg_B w) * (avg_B w^{-1/(p-1)})^{p-1}`, with the weight extended by 1
//! outside the fiber, so the A_p condition reads `product <= C` uniformly
//! over balls. Balls are polygonalized (regular 64-gon) and clipped against
//! the collar pieces; on each clipped region both integrals have closed
//! forms, so the diagnostic is deterministic quadrature rather than
//! Monte-Carlo sampling.

use crate::geometry::domain::DomainGeometry;
use crate::geometry::fibers::{Band, PieceKind};
use crate::integrate::{clip_convex_f64, disk_polygon, polygon_area, polygon_integral, Integrand};
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BallResult {
    pub ball: Ball,
    /// (avg w) (avg w^{-1/(p-1)})^{p-1}
    pub product: f64,
    pub skipped: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MuckenhouptReport {
    pub p: f64,
    pub n: u32,
    pub eps: f64,
    pub results: Vec<BallResult>,
    pub supremum: f64,
    pub argmax: Option<Ball>,
    pub skipped: usize,
}

const DISK_SIDES: usize = 64;

/// Averaged A_p product for one ball.
pub fn ball_product(geo: &DomainGeometry, p: f64, ball: &Ball) -> Option<f64> {
    let s = 1.0 / (p - 1.0);
    let c1 = 2.0 - 3f64.sqrt();
    let eps = geo.eps_f;
    let denom = 2f64.powf(p) + c1.powf(p);
    let disk = disk_polygon(ball.center, ball.radius, DISK_SIDES);
    let disk_area = polygon_area(&disk);
    let lvl = 3f64.powi(geo.n as i32);
    let jac = 9f64.powi(-(geo.n as i32));

    let mut int_w = 0.0;
    let mut int_ws = 0.0;
    let mut fiber_area = 0.0;
    for class in &geo.classes {
        for piece in &class.pieces {
            if piece.band != Band::Fiber {
                continue;
            }
            // cheap reject by bounding box
            let mut reject = true;
            for q in &piece.poly {
                let dx = q[0] - ball.center[0];
                let dy = q[1] - ball.center[1];
                if dx.abs() < ball.radius + 0.5 && dy.abs() < ball.radius + 0.5 {
                    reject = false;
                    break;
                }
            }
            if reject {
                continue;
            }
            let clipped = clip_convex_f64(&disk, &piece.poly);
            if clipped.len() < 3 {
                continue;
            }
            let phys_area = polygon_area(&clipped);
            if phys_area <= 0.0 {
                continue;
            }
            fiber_area += phys_area;
            // map to unit collar coordinates
            let unit: Vec<[f64; 2]> = clipped.iter().map(|q| class.frame_inv_f.apply(*q)).collect();
            let (f_w, f_ws) = match piece.kind {
                PieceKind::Rect => (
                    Integrand::Const(2.0 / eps),
                    Integrand::Const((2.0 / eps).powf(-s)),
                ),
                PieceKind::TriA => (
                    Integrand::OverX(denom / c1),
                    Integrand::XPow((c1 / denom).powf(s), s),
                ),
                PieceKind::TriB => (
                    Integrand::OverOneMinusX(denom / c1),
                    Integrand::OneMinusXPow((c1 / denom).powf(s), s),
                ),
            };
            let iw = polygon_integral(&unit, f_w);
            let iws = polygon_integral(&unit, f_ws);
            if !iw.is_finite() || !iws.is_finite() || iw < -1e-12 {
                return None; // quadrature failure near an apex
            }
            // physical weight = 3^n * unit weight; area element = 9^-n
            int_w += lvl * jac * iw.max(0.0);
            int_ws += lvl.powf(-s) * jac * iws.max(0.0);
        }
    }
    // extended by 1 outside the fiber
    let rest = (disk_area - fiber_area).max(0.0);
    int_w += rest;
    int_ws += rest;
    let avg_w = int_w / disk_area;
    let avg_ws = int_ws / disk_area;
    let product = avg_w * avg_ws.powf(p - 1.0);
    product.is_finite().then_some(product)
}

/// Default ball sample: for a few representative collar patches, balls
/// centered at the apex corner, the side midpoint and a point straddling the
/// interface, plus a handful of bulk balls. Radii are fixed physical lengths,
/// not tied to the cell size: with the weight extended by 1, the product over
/// a ball of radius r shrinking onto an apex grows like 1/r (the singular
/// wedge is too thin for the reciprocal average to compensate), so a radius
/// floor is what makes the sweep comparison meaningful.
pub fn default_sample(geo: &DomainGeometry) -> Vec<Ball> {
    let mut balls = Vec::new();
    let radii = [0.02, 0.05, 0.15, 0.4];
    let take = geo.classes.len().min(12);
    let stride = (geo.classes.len() / take).max(1);
    for class in geo.classes.iter().step_by(stride) {
        let apex = class.frame_f.apply([0.0, 0.0]);
        let mid = class.frame_f.apply([0.5, -geo.eps_f / 4.0]);
        let iface = class.frame_f.apply([0.5, -geo.eps_f / 2.0]);
        for &r in &radii {
            balls.push(Ball { center: apex, radius: r });
            balls.push(Ball { center: mid, radius: r });
            balls.push(Ball { center: iface, radius: r });
        }
    }
    for (cx, cy) in [(0.5, 0.3), (0.35, 0.45), (0.5, 0.02)] {
        balls.push(Ball { center: [cx, cy], radius: 0.05 });
        balls.push(Ball { center: [cx, cy], radius: 0.2 });
    }
    balls
}

/// Run the diagnostic over a ball sample.
pub fn diagnostic(geo: &DomainGeometry, p: f64, balls: &[Ball]) -> MuckenhouptReport {
    let mut results = Vec::with_capacity(balls.len());
    let mut sup = 0.0f64;
    let mut argmax = None;
    let mut skipped = 0;
    for &ball in balls {
        match ball_product(geo, p, &ball) {
            Some(product) => {
                if product > sup {
                    sup = product;
                    argmax = Some(ball);
                }
                results.push(BallResult { ball, product, skipped: false });
            }
            None => {
                skipped += 1;
                results.push(BallResult { ball, product: f64::NAN, skipped: true });
            }
        }
    }
    MuckenhouptReport {
        p,
        n: geo.n,
        eps: geo.eps_f,
        results,
        supremum: sup,
        argmax,
        skipped,
    }
}
