//! Closed-form integrals of the weight family over polygons.
//!
//! The fiber weight is constant on rectangle pieces and proportional to `1/x`
//! (in unit abscissa from the adjacent cell corner) on triangle pieces, so
//! every integral we need reduces to `\int_P f(x) dA` for `f` constant,
//! `c/x`, or `c x^s`. By Green's theorem this is a sum of per-edge terms of
//! the antiderivative `F(x) = \int f dx`:
//! `\int_P f dA = \oint_{\partial P} F(x) dy` (CCW positive).

/// Integrand depending on the unit abscissa only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integrand {
    Const(f64),
    /// c / x  (singular at x = 0, integrable over the fiber triangles)
    OverX(f64),
    /// c / (1 - x)
    OverOneMinusX(f64),
    /// c * x^s with s > -1
    XPow(f64, f64),
    /// c * (1-x)^s
    OneMinusXPow(f64, f64),
}

/// `\int_P f dA` over a (not necessarily convex) polygon with CCW
/// orientation; clockwise input yields the negated value.
pub fn polygon_integral(poly: &[[f64; 2]], f: Integrand) -> f64 {
    match f {
        Integrand::Const(c) => c * polygon_area(poly),
        Integrand::OverX(c) => green_sum(poly, |x0, x1| c * mean_log(x0, x1)),
        Integrand::XPow(c, s) => green_sum(poly, |x0, x1| c * mean_pow(x0, x1, s)),
        Integrand::OverOneMinusX(c) => {
            -green_sum(&reflect_x(poly), |x0, x1| c * mean_log(x0, x1))
        }
        Integrand::OneMinusXPow(c, s) => {
            -green_sum(&reflect_x(poly), |x0, x1| c * mean_pow(x0, x1, s))
        }
    }
}

pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    acc / 2.0
}

fn reflect_x(poly: &[[f64; 2]]) -> Vec<[f64; 2]> {
    poly.iter().map(|p| [1.0 - p[0], p[1]]).collect()
}

/// Sum over edges of `(y1 - y0) * mean(F(x(t)), t in [0,1])`.
fn green_sum(poly: &[[f64; 2]], mean_f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dy = q[1] - p[1];
        if dy != 0.0 {
            acc += dy * mean_f(p[0], q[0]);
        }
    }
    acc
}

/// Mean of `ln x` along a segment from x0 to x1. Endpoints may touch the
/// singular line x = 0 (the limit x ln x -> 0 applies); tiny negative values
/// from upstream f64 clipping are clamped.
fn mean_log(x0: f64, x1: f64) -> f64 {
    let x0 = x0.max(0.0);
    let x1 = x1.max(0.0);
    // nearly vertical edges: the difference quotient of x ln x cancels
    // catastrophically, and the midpoint value is accurate to O((dx/x)^2)
    if (x1 - x0).abs() <= 1e-8 * (x0 + x1) {
        let xm = 0.5 * (x0 + x1);
        assert!(xm > 0.0, "edge on the singular line x = 0");
        return xm.ln();
    }
    let xlnx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    (xlnx(x1) - xlnx(x0)) / (x1 - x0) - 1.0
}

/// Mean of `x^{s+1}/(s+1)` along a segment from x0 to x1.
fn mean_pow(x0: f64, x1: f64, s: f64) -> f64 {
    let x0 = x0.max(0.0);
    let x1 = x1.max(0.0);
    if (x1 - x0).abs() <= 1e-8 * (x0 + x1) || (x0 == 0.0 && x1 == 0.0) {
        let xm = 0.5 * (x0 + x1);
        xm.powf(s + 1.0) / (s + 1.0)
    } else {
        (x1.powf(s + 2.0) - x0.powf(s + 2.0)) / ((s + 1.0) * (s + 2.0) * (x1 - x0))
    }
}

/// Clip a polygon against a convex clip polygon (both CCW), f64 endpoints.
pub fn clip_convex_f64(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut output: Vec<[f64; 2]> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let p = input[j];
            let r = input[(j + 1) % n];
            let dp = side(p);
            let dr = side(r);
            if dp >= 0.0 {
                output.push(p);
            }
            if (dp > 0.0 && dr < 0.0) || (dp < 0.0 && dr > 0.0) {
                let t = dp / (dp - dr);
                output.push([p[0] + t * (r[0] - p[0]), p[1] + t * (r[1] - p[1])]);
            }
        }
    }
    output
}

/// Regular k-gon approximation of a disk, CCW.
pub fn disk_polygon(center: [f64; 2], radius: f64, k: usize) -> Vec<[f64; 2]> {
    (0..k)
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * (i as f64) / (k as f64);
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tri() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    }

    #[test]
    fn constant_and_area() {
        assert!((polygon_integral(&unit_tri(), Integrand::Const(2.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn over_x_on_shifted_square() {
        // int over [1,2]x[0,1] of 1/x = ln 2
        let sq = vec![[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0]];
        let v = polygon_integral(&sq, Integrand::OverX(1.0));
        assert!((v - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn over_x_with_apex_at_origin() {
        // fiber-like wedge: triangle (0,0), (a,0), (a,-C1 a/2); the integral of
        // 1/x is the wedge slope times a
        let c1 = 2.0 - 3f64.sqrt();
        let a = 0.3;
        let tri = vec![[0.0, 0.0], [a, -c1 * a / 2.0], [a, 0.0]];
        let v = polygon_integral(&tri, Integrand::OverX(1.0));
        // int_0^a (C1 x / 2) / x dx = C1 a / 2
        assert!((v - c1 * a / 2.0).abs() < 1e-14, "{v}");
    }

    #[test]
    fn xpow_matches_tensor_formula() {
        // int over [0,1]^2 of x^0.5 = 2/3
        let sq = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let v = polygon_integral(&sq, Integrand::XPow(1.0, 0.5));
        assert!((v - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn reflected_forms() {
        // 1/(1-x) over [0, 1/2] x [0,1] = ln 2
        let sq = vec![[0.0, 0.0], [0.5, 0.0], [0.5, 1.0], [0.0, 1.0]];
        let v = polygon_integral(&sq, Integrand::OverOneMinusX(1.0));
        assert!((v - 2f64.ln()).abs() < 1e-14);
        let w = polygon_integral(&sq, Integrand::OneMinusXPow(1.0, 1.0));
        // int_0^1/2 (1-x) dx = 3/8
        assert!((w - 0.375).abs() < 1e-14);
    }

    /// reference: composite edge-midpoint rule (degree 2, fourth-order
    /// composite convergence) on a uniform subdivision
    fn subdivided_over_x(t: [[f64; 2]; 3], depth: u32) -> f64 {
        let mut acc = 0.0;
        let mut stack = vec![(t, depth)];
        while let Some((t, d)) = stack.pop() {
            let m01 = [(t[0][0] + t[1][0]) / 2.0, (t[0][1] + t[1][1]) / 2.0];
            let m12 = [(t[1][0] + t[2][0]) / 2.0, (t[1][1] + t[2][1]) / 2.0];
            let m20 = [(t[2][0] + t[0][0]) / 2.0, (t[2][1] + t[0][1]) / 2.0];
            if d == 0 {
                acc += polygon_area(&t.to_vec())
                    * (1.0 / m01[0] + 1.0 / m12[0] + 1.0 / m20[0])
                    / 3.0;
            } else {
                for c in [
                    [t[0], m01, m20],
                    [m01, t[1], m12],
                    [m20, m12, t[2]],
                    [m01, m12, m20],
                ] {
                    stack.push((c, d - 1));
                }
            }
        }
        acc
    }

    #[test]
    fn against_adaptive_subdivision() {
        // closed form vs refined numerical quadrature for 1/x over a
        // fiber-like triangle element away from the apex
        let tri = [[0.1, -0.2], [0.7, -0.05], [0.4, 0.3]];
        let exact = polygon_integral(&tri.to_vec(), Integrand::OverX(1.0));
        let approx = subdivided_over_x(tri, 7);
        assert!((exact - approx).abs() / exact.abs() < 1e-8, "{exact} vs {approx}");
    }

    #[test]
    fn disk_clip_area() {
        let disk = disk_polygon([0.0, 0.0], 1.0, 256);
        let half = vec![[0.0, -2.0], [2.0, -2.0], [2.0, 2.0], [0.0, 2.0]];
        let clipped = clip_convex_f64(&disk, &half);
        let a = polygon_area(&clipped);
        assert!((a - std::f64::consts::PI / 2.0).abs() < 1e-3);
    }
}
