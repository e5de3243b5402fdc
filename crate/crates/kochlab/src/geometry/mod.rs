//! Koch snowflake IFS, pre-fractal curves and cell triangles, all in exact
//! coordinates.
//!
//! The snowflake boundary is the union of three Koch curves, one per side of
//! the unit triangle `A=(0,0)`, `B=(1,0)`, `C=(1/2, sqrt3/2)`. Curve 1 lives on
//! side `AB` and is generated by four contractive similitudes of ratio 1/3;
//! curves 2 and 3 are carried over by the rotations of the triangle that map
//! side 1 onto sides 2 and 3. Bumps point outward, so the polygonal domains
//! grow with the level.

pub mod domain;
pub mod fibers;

use crate::exact::{q, qi, Alg, APoint, Q};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

pub const MAX_LEVEL_DEFAULT: u32 = 8;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("fiber amplitude must satisfy 0 < eps < eps0 = tan(pi/12)/2")]
    AmplitudeOutOfRange,
    #[error("pre-fractal level {0} exceeds configured maximum {1}")]
    LevelTooDeep(u32, u32),
    #[error("invalid cell address: {0}")]
    InvalidAddress(String),
    #[error("fiber patches of {a} and {b} overlap with positive area")]
    OverlapViolation { a: String, b: String },
}

/// Exact value of `3^-n`.
pub fn pow3_inv(n: u32) -> Q {
    Q::new(BigInt::one(), BigInt::from(3u8).pow(n))
}

/// Problem constants for exponent `p >= 2`.
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub p: f64,
    /// conjugate exponent, 1/p + 1/p' = 1
    pub p_prime: f64,
    /// Hausdorff dimension log 4 / log 3
    pub d_f: f64,
    /// tan(pi/12) / 2
    pub eps0: f64,
    /// 2 * eps0 = tan(pi/12) = 2 - sqrt 3
    pub c1: f64,
    /// 2^p + C1^p - 2
    pub c_p: f64,
    /// 1 - (2 - d_f)/p
    pub alpha: f64,
    /// d_f (1 - 1/p)
    pub beta: f64,
}

impl Constants {
    pub fn new(p: f64) -> Self {
        assert!(p >= 2.0, "exponent p must be >= 2");
        let d_f = 4f64.ln() / 3f64.ln();
        let c1 = 2.0 - 3f64.sqrt();
        Constants {
            p,
            p_prime: p / (p - 1.0),
            d_f,
            eps0: c1 / 2.0,
            c1,
            c_p: 2f64.powf(p) + c1.powf(p) - 2.0,
            alpha: 1.0 - (2.0 - d_f) / p,
            beta: d_f * (1.0 - 1.0 / p),
        }
    }

    /// Singular scaling `delta_n = (3/4)^n`.
    pub fn delta(n: u32) -> f64 {
        0.75f64.powi(n as i32)
    }

    /// `delta_n^(1-p)` = (4/3)^(n(p-1)).
    pub fn delta_pow(&self, n: u32) -> f64 {
        (4.0 / 3.0f64).powf(n as f64 * (self.p - 1.0))
    }

    /// Energy renormalization `4^((p-1) n)`.
    pub fn renorm(&self, n: u32) -> f64 {
        4f64.powf((self.p - 1.0) * n as f64)
    }

    /// The exact fiber-energy factor `1 + eps C_p / C1`.
    pub fn fiber_factor(&self, eps: f64) -> f64 {
        1.0 + eps * self.c_p / self.c1
    }
}

/// `eps0 = tan(pi/12)/2 = (2 - sqrt 3)/2` as an exact field element.
pub fn eps0_exact() -> Alg {
    Alg::new(qi(1), q(-1, 2))
}

/// `C1 = 2 - sqrt 3`.
pub fn c1_exact() -> Alg {
    Alg::new(qi(2), qi(-1))
}

/// Direct plane similitude `z -> scale * R(rot * pi/3) z + t` (no reflections).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Similitude {
    /// rotation as an integer multiple of pi/3 in 0..6
    pub rot: u8,
    /// contraction ratio (rational, a power of 1/3 for cell maps)
    pub scale: Q,
    pub t: APoint,
}

fn rot_cos_sin(k: u8) -> (Alg, Alg) {
    match k % 6 {
        0 => (Alg::one(), Alg::zero()),
        1 => (Alg::rational(1, 2), Alg::sqrt3(1, 2)),
        2 => (Alg::rational(-1, 2), Alg::sqrt3(1, 2)),
        3 => (-Alg::one(), Alg::zero()),
        4 => (Alg::rational(-1, 2), Alg::sqrt3(-1, 2)),
        _ => (Alg::rational(1, 2), Alg::sqrt3(-1, 2)),
    }
}

impl Similitude {
    pub fn identity() -> Self {
        Similitude { rot: 0, scale: Q::one(), t: APoint::origin() }
    }

    pub fn new(rot: u8, scale: Q, t: APoint) -> Self {
        Similitude { rot: rot % 6, scale, t }
    }

    pub fn apply(&self, p: &APoint) -> APoint {
        let (c, s) = rot_cos_sin(self.rot);
        let x = p.x.clone() * c.clone() - p.y.clone() * s.clone();
        let y = p.x.clone() * s + p.y.clone() * c;
        APoint::new(
            x.scale(&self.scale) + self.t.x.clone(),
            y.scale(&self.scale) + self.t.y.clone(),
        )
    }

    /// self o other
    pub fn compose(&self, other: &Similitude) -> Similitude {
        Similitude {
            rot: (self.rot + other.rot) % 6,
            scale: &self.scale * &other.scale,
            t: self.apply(&other.t),
        }
    }

    pub fn inverse(&self) -> Similitude {
        let inv_scale = Q::one() / &self.scale;
        let rot = (6 - self.rot % 6) % 6;
        let mut inv = Similitude { rot, scale: inv_scale, t: APoint::origin() };
        let back = inv.apply(&self.t);
        inv.t = APoint::new(-back.x, -back.y);
        inv
    }

    pub fn to_f64(&self) -> SimF {
        let (c, s) = rot_cos_sin(self.rot);
        let (c, s) = (c.to_f64(), s.to_f64());
        let sc = Q::to_f64_lossy(&self.scale);
        SimF {
            m: [[sc * c, -sc * s], [sc * s, sc * c]],
            t: self.t.to_f64(),
        }
    }
}

trait QF64 {
    fn to_f64_lossy(&self) -> f64;
}

impl QF64 for Q {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// f64 rendition of a similitude for hot paths.
#[derive(Debug, Clone, Copy)]
pub struct SimF {
    pub m: [[f64; 2]; 2],
    pub t: [f64; 2],
}

impl SimF {
    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.t[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.t[1],
        ]
    }
}

/// The three vertices of the unit cell.
pub fn v0() -> [APoint; 3] {
    [
        APoint::origin(),
        APoint::new(Alg::one(), Alg::zero()),
        APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2)),
    ]
}

/// The outer reference triangle `Omega*` with vertices D, E, F.
pub fn omega_star() -> [APoint; 3] {
    [
        APoint::new(Alg::rational(1, 2), Alg::sqrt3(-1, 2)),
        APoint::new(Alg::rational(3, 2), Alg::sqrt3(1, 2)),
        APoint::new(Alg::rational(-1, 2), Alg::sqrt3(1, 2)),
    ]
}

/// The four generators of the Koch curve on side AB (curve 1).
fn unit_maps_curve1() -> [Similitude; 4] {
    let third = q(1, 3);
    [
        Similitude::new(0, third.clone(), APoint::origin()),
        Similitude::new(5, third.clone(), APoint::new(Alg::rational(1, 3), Alg::zero())),
        Similitude::new(
            1,
            third.clone(),
            APoint::new(Alg::rational(1, 2), Alg::sqrt3(-1, 6)),
        ),
        Similitude::new(0, third, APoint::new(Alg::rational(2, 3), Alg::zero())),
    ]
}

/// Rigid motion of the unit triangle sending side 1 to side `l` (A->B->C->A
/// rotation for l=2, applied twice for l=3). `side_motion(1)` is the identity.
pub fn side_motion(l: u8) -> Similitude {
    match l {
        1 => Similitude::identity(),
        2 => Similitude::new(2, Q::one(), APoint::new(Alg::one(), Alg::zero())),
        3 => Similitude::new(
            4,
            Q::one(),
            APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2)),
        ),
        _ => panic!("side index out of range"),
    }
}

/// Generators of curve `curve` in 1..=3. Curves 2 and 3 are the conjugates of
/// the curve-1 family by the side motions.
pub fn unit_maps(curve: u8) -> Result<[Similitude; 4], GeometryError> {
    if !(1..=3).contains(&curve) {
        return Err(GeometryError::InvalidAddress(format!("curve {curve}")));
    }
    let base = unit_maps_curve1();
    if curve == 1 {
        return Ok(base);
    }
    let m = side_motion(curve);
    let mi = m.inverse();
    Ok([
        m.compose(&base[0]).compose(&mi),
        m.compose(&base[1]).compose(&mi),
        m.compose(&base[2]).compose(&mi),
        m.compose(&base[3]).compose(&mi),
    ])
}

/// Address of a pre-fractal cell: a curve index and a word over {1,2,3,4}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CellAddress {
    pub curve: u8,
    pub word: Vec<u8>,
}

impl CellAddress {
    pub fn new(curve: u8, word: Vec<u8>) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&curve) {
            return Err(GeometryError::InvalidAddress(format!("curve {curve}")));
        }
        if let Some(&bad) = word.iter().find(|&&c| !(1..=4).contains(&c)) {
            return Err(GeometryError::InvalidAddress(format!("letter {bad}")));
        }
        Ok(CellAddress { curve, word })
    }

    pub fn level(&self) -> u32 {
        self.word.len() as u32
    }

    pub fn label(&self) -> String {
        let w: Vec<String> = self.word.iter().map(|c| c.to_string()).collect();
        format!("K{}:({})", self.curve, w.join(","))
    }
}

/// Composed similitude of an address: `side_motion(curve) o psi_{w1} o ... o psi_{wn}`.
/// For curve 1 with an empty word this is the identity; the contraction ratio
/// is exactly `3^-n`.
pub fn compose(addr: &CellAddress) -> Similitude {
    let maps = unit_maps_curve1();
    let mut acc = side_motion(addr.curve);
    for &letter in &addr.word {
        acc = acc.compose(&maps[(letter - 1) as usize]);
    }
    acc
}

/// Images of the unit-cell vertices {A, B, C} under the address map.
/// The edge `pA - pB` is a segment of the pre-fractal curve K_n.
pub fn cell_triangle(addr: &CellAddress) -> [APoint; 3] {
    let f = compose(addr);
    let [a, b, c] = v0();
    [f.apply(&a), f.apply(&b), f.apply(&c)]
}

/// Ordered vertex and segment description of the closed pre-fractal curve K_n.
#[derive(Debug, Clone)]
pub struct Prefractal {
    pub level: u32,
    /// vertices of K_n in traversal order; 3 * 4^n points
    pub vertices: Vec<APoint>,
    /// cell address whose base segment is (vertices[i], vertices[i+1 mod N])
    pub addresses: Vec<CellAddress>,
}

impl Prefractal {
    pub fn segment_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment(&self, i: usize) -> (APoint, APoint) {
        let n = self.vertices.len();
        (self.vertices[i].clone(), self.vertices[(i + 1) % n].clone())
    }
}

/// All 4^n words of the given level in lexicographic (= traversal) order.
pub fn words(level: u32) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..level {
        let mut next = Vec::with_capacity(out.len() * 4);
        for w in &out {
            for letter in 1..=4u8 {
                let mut w2 = w.clone();
                w2.push(letter);
                next.push(w2);
            }
        }
        out = next;
    }
    out
}

/// Build K_n with exact vertices: the closed polyline has 3*4^n segments of
/// length 3^-n.
pub fn prefractal(level: u32, max_level: u32) -> Result<Prefractal, GeometryError> {
    if level > max_level {
        return Err(GeometryError::LevelTooDeep(level, max_level));
    }
    let a0 = v0()[0].clone();
    let mut vertices = Vec::with_capacity(3 * 4usize.pow(level));
    let mut addresses = Vec::with_capacity(vertices.capacity());
    for curve in 1..=3u8 {
        for w in words(level) {
            let addr = CellAddress { curve, word: w };
            let f = compose(&addr);
            vertices.push(f.apply(&a0));
            addresses.push(addr);
        }
    }
    Ok(Prefractal { level, vertices, addresses })
}

/// Exact area of the pre-fractal domain Omega_n from the snowflake series:
/// `sqrt3/4 * (1 + 3/5 (1 - (4/9)^n))`.
pub fn omega_n_area_exact(level: u32) -> Alg {
    let mut tail = Q::one();
    for _ in 0..level {
        tail *= q(4, 9);
    }
    let factor = Q::one() + q(3, 5) * (Q::one() - tail);
    Alg::new(Q::zero(), q(1, 4) * factor)
}

/// Snowflake limit area `2 sqrt3 / 5`.
pub fn omega_limit_area() -> Alg {
    Alg::sqrt3(2, 5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::polygon_area2;

    fn pt(x: f64, y: f64) -> [f64; 2] {
        [x, y]
    }

    fn close(a: [f64; 2], b: [f64; 2]) {
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14, "{a:?} vs {b:?}");
    }

    /// complex-arithmetic oracle for the four curve-1 maps
    fn psi_oracle(i: usize, z: (f64, f64)) -> (f64, f64) {
        let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
        let third = (z.0 / 3.0, z.1 / 3.0);
        let ang =
            |t: f64| (t.cos(), t.sin());
        match i {
            1 => third,
            2 => {
                let r = mul(third, ang(-std::f64::consts::PI / 3.0));
                (r.0 + 1.0 / 3.0, r.1)
            }
            3 => {
                let r = mul(third, ang(std::f64::consts::PI / 3.0));
                (r.0 + 0.5, r.1 - 3f64.sqrt() / 6.0)
            }
            4 => ((z.0 + 2.0) / 3.0, z.1 / 3.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unit_map_examples() {
        let maps = unit_maps(1).unwrap();
        let b = APoint::new(Alg::one(), Alg::zero());
        let c = APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2));
        close(maps[0].apply(&b).to_f64(), pt(1.0 / 3.0, 0.0));
        close(maps[1].apply(&c).to_f64(), pt(2.0 / 3.0, 0.0));
        close(maps[2].apply(&c).to_f64(), pt(1.0 / 3.0, 0.0));
        // oracle sweep over all maps and corners
        for (i, m) in maps.iter().enumerate() {
            for p in [&b, &c] {
                let z = p.to_f64();
                let got = m.apply(p).to_f64();
                let want = psi_oracle(i + 1, (z[0], z[1]));
                close(got, pt(want.0, want.1));
            }
        }
    }

    #[test]
    fn compose_examples() {
        let id = compose(&CellAddress::new(1, vec![]).unwrap());
        assert_eq!(id, Similitude::identity());
        let b = APoint::new(Alg::one(), Alg::zero());
        let f11 = compose(&CellAddress::new(1, vec![1, 1]).unwrap());
        close(f11.apply(&b).to_f64(), pt(1.0 / 9.0, 0.0));
        let c = APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2));
        let f21 = compose(&CellAddress::new(1, vec![2, 1]).unwrap());
        close(f21.apply(&c).to_f64(), pt(4.0 / 9.0, 0.0));
        // contraction ratio of a level-n composition is exactly 3^-n
        assert_eq!(f21.scale, q(1, 9));
    }

    #[test]
    fn cell_triangle_examples() {
        let t1 = cell_triangle(&CellAddress::new(1, vec![1]).unwrap());
        close(t1[0].to_f64(), pt(0.0, 0.0));
        close(t1[1].to_f64(), pt(1.0 / 3.0, 0.0));
        close(t1[2].to_f64(), pt(1.0 / 6.0, 3f64.sqrt() / 6.0));
        // words (2) and (3) give the same point set with permuted labels
        let t2 = cell_triangle(&CellAddress::new(1, vec![2]).unwrap());
        let t3 = cell_triangle(&CellAddress::new(1, vec![3]).unwrap());
        let mut s2: Vec<Vec<u8>> = t2.iter().map(|p| p.key()).collect();
        let mut s3: Vec<Vec<u8>> = t3.iter().map(|p| p.key()).collect();
        s2.sort();
        s3.sort();
        assert_eq!(s2, s3);
        assert_ne!(t2[0], t3[0]);
        // |pA - pB| = 3^-n for any address
        for addr in [CellAddress::new(2, vec![4, 1, 3]).unwrap(), CellAddress::new(3, vec![2]).unwrap()] {
            let t = cell_triangle(&addr);
            let d = t[1].sub(&t[0]);
            let len2 = d.x.clone() * d.x.clone() + d.y.clone() * d.y.clone();
            let expect = pow3_inv(2 * addr.level());
            assert_eq!(len2, Alg::from_q(expect));
        }
    }

    #[test]
    fn conjugate_families_fix_their_side() {
        // psi^(2)_1 has fixed point B, and family 2 maps side BC into itself
        let f2 = unit_maps(2).unwrap();
        let b = APoint::new(Alg::one(), Alg::zero());
        assert_eq!(f2[0].apply(&b), b);
        let f3 = unit_maps(3).unwrap();
        let c = APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2));
        assert_eq!(f3[0].apply(&c), c);
    }

    #[test]
    fn prefractal_counts_and_vertices() {
        for n in 0..=6u32 {
            let k = prefractal(n, MAX_LEVEL_DEFAULT).unwrap();
            assert_eq!(k.segment_count(), 3 * 4usize.pow(n));
        }
        let k0 = prefractal(0, 8).unwrap();
        assert_eq!(k0.vertices.len(), 3);
        let k1 = prefractal(1, 8).unwrap();
        let tip = APoint::new(Alg::rational(1, 2), Alg::sqrt3(-1, 6));
        assert!(k1.vertices.contains(&tip));
        assert!(prefractal(9, 8).is_err());
    }

    #[test]
    fn prefractal_is_a_closed_simple_chain() {
        let k = prefractal(2, 8).unwrap();
        // consecutive segments share endpoints by construction; vertices unique
        let mut keys: Vec<Vec<u8>> = k.vertices.iter().map(|p| p.key()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), k.vertices.len());
    }

    #[test]
    fn omega_areas_match_series() {
        // area(Omega_1) = sqrt3/3, limit 2 sqrt3/5
        assert_eq!(omega_n_area_exact(1), Alg::sqrt3(1, 3));
        // limit approached within the exact tail sqrt3/4 * 3/5 * (4/9)^n
        let a6 = omega_n_area_exact(6).to_f64();
        let tail6 = 3f64.sqrt() / 4.0 * 0.6 * (4.0f64 / 9.0).powi(6);
        assert!((a6 - 2.0 * 3f64.sqrt() / 5.0).abs() <= tail6 + 1e-15);
        // shoelace area of the exact polygon K_n equals the series value
        for n in 0..=3 {
            let k = prefractal(n, 8).unwrap();
            let area2 = polygon_area2(&k.vertices);
            let series = omega_n_area_exact(n);
            assert_eq!(area2, series.clone() + series);
        }
        // strictly increasing, approaching the limit with the exact tail
        let mut prev = omega_n_area_exact(0);
        for n in 1..=6 {
            let cur = omega_n_area_exact(n);
            assert!(cur > prev);
            prev = cur.clone();
            let tail = omega_limit_area() - cur;
            let mut expect = q(3, 5) * q(1, 4);
            for _ in 0..n {
                expect *= q(4, 9);
            }
            assert_eq!(tail, Alg::new(Q::zero(), expect));
        }
    }

    #[test]
    fn hausdorff_between_consecutive_levels() {
        // Hausdorff distance between K_n and K_{n+1} as curves, computed from
        // vertex-to-segment distances, is at most sqrt3/2 * 3^-(n+1).
        let dist_pt_seg = |p: [f64; 2], a: [f64; 2], b: [f64; 2]| -> f64 {
            let d = [b[0] - a[0], b[1] - a[1]];
            let r = [p[0] - a[0], p[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = ((r[0] * d[0] + r[1] * d[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + t * d[0], a[1] + t * d[1]];
            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
        };
        for n in 0..=3u32 {
            let ka = prefractal(n, 8).unwrap();
            let kb = prefractal(n + 1, 8).unwrap();
            let segs = |k: &Prefractal| -> Vec<([f64; 2], [f64; 2])> {
                (0..k.segment_count())
                    .map(|i| {
                        let (a, b) = k.segment(i);
                        (a.to_f64(), b.to_f64())
                    })
                    .collect()
            };
            let sa = segs(&ka);
            let sb = segs(&kb);
            let dir = |pts: &Prefractal, segs: &[([f64; 2], [f64; 2])]| -> f64 {
                pts.vertices
                    .iter()
                    .map(|p| {
                        let pf = p.to_f64();
                        segs.iter()
                            .map(|(a, b)| dist_pt_seg(pf, *a, *b))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(0.0, f64::max)
            };
            let h = dir(&kb, &sa).max(dir(&ka, &sb));
            let bound = 3f64.sqrt() / 2.0 * 3f64.powi(-(n as i32 + 1));
            assert!(h <= bound + 1e-12, "n={n}: {h} > {bound}");
        }
    }
}
