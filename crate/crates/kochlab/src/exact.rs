//! Exact arithmetic in the quadratic field Q(sqrt(3)).
//!
//! Every vertex produced by the snowflake IFS and the fiber construction has
//! coordinates of the form `a + b*sqrt(3)` with rational `a`, `b`: rotations are
//! multiples of pi/3, scales are powers of 1/3, and the fiber corners involve
//! `1/C1 = 2 + sqrt(3)`. Working in this field makes vertex deduplication and
//! patch-coincidence detection exact rather than tolerance-based.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from(BigInt::from(n))
}

/// Parse a decimal or rational literal ("0.06", "-1.5", "3/25") into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("bad rational numerator in {s:?}"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("bad rational denominator in {s:?}"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        return Ok(Q::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("empty number {s:?}"));
    }
    let digits = format!("{}{}", int_part, frac_part);
    let n: BigInt = digits
        .parse()
        .map_err(|_| format!("bad decimal literal {s:?}"))?;
    let den = BigInt::from(10u8).pow(frac_part.len() as u32);
    Ok(Q::new(n * BigInt::from(sign), den))
}

/// Element of Q(sqrt(3)): the real number `a + b*sqrt(3)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alg {
    pub a: Q,
    pub b: Q,
}

impl Alg {
    pub fn new(a: Q, b: Q) -> Self {
        Alg { a, b }
    }

    pub fn from_q(a: Q) -> Self {
        Alg { a, b: Q::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Alg::from_q(qi(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Alg::from_q(q(n, d))
    }

    /// `n/d * sqrt(3)`
    pub fn sqrt3(n: i64, d: i64) -> Self {
        Alg { a: Q::zero(), b: q(n, d) }
    }

    pub fn zero() -> Self {
        Alg::from_q(Q::zero())
    }

    pub fn one() -> Self {
        Alg::from_q(Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * 3.0f64.sqrt()
    }

    /// Exact sign of `a + b*sqrt(3)`.
    pub fn signum(&self) -> i32 {
        let sa = sign_q(&self.a);
        let sb = sign_q(&self.b);
        match (sa, sb) {
            (0, 0) => 0,
            (s, 0) => s,
            (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            _ => {
                // a and b have opposite signs: compare a^2 with 3 b^2.
                let lhs = &self.a * &self.a;
                let rhs = &self.b * &self.b * qi(3);
                match (lhs.cmp(&rhs), sa) {
                    (Ordering::Greater, s) => s,
                    (Ordering::Less, s) => -s,
                    (Ordering::Equal, _) => 0,
                }
            }
        }
    }

    pub fn abs(&self) -> Alg {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn scale(&self, r: &Q) -> Alg {
        Alg { a: &self.a * r, b: &self.b * r }
    }

    fn recip(&self) -> Alg {
        // 1/(a + b sqrt3) = (a - b sqrt3)/(a^2 - 3 b^2)
        let d = &self.a * &self.a - &self.b * &self.b * qi(3);
        assert!(!d.is_zero(), "division by zero in Q(sqrt 3)");
        Alg { a: &self.a / &d, b: -(&self.b / &d) }
    }

    /// Canonical byte encoding for hashing/dedup keys.
    pub fn encode(&self, out: &mut Vec<u8>) {
        for part in [&self.a, &self.b] {
            let (n, d) = (part.numer(), part.denom());
            let nb = n.to_signed_bytes_le();
            let db = d.to_signed_bytes_le();
            out.extend_from_slice(&(nb.len() as u32).to_le_bytes());
            out.extend_from_slice(&nb);
            out.extend_from_slice(&(db.len() as u32).to_le_bytes());
            out.extend_from_slice(&db);
        }
    }
}

fn sign_q(x: &Q) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

impl fmt::Debug for Alg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{}+{}√3", self.a, self.b)
        }
    }
}

impl PartialOrd for Alg {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Alg {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.clone() - other.clone()).signum() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }
}

impl Add for Alg {
    type Output = Alg;
    fn add(self, o: Alg) -> Alg {
        Alg { a: self.a + o.a, b: self.b + o.b }
    }
}

impl Sub for Alg {
    type Output = Alg;
    fn sub(self, o: Alg) -> Alg {
        Alg { a: self.a - o.a, b: self.b - o.b }
    }
}

impl Neg for Alg {
    type Output = Alg;
    fn neg(self) -> Alg {
        Alg { a: -self.a, b: -self.b }
    }
}

impl Mul for Alg {
    type Output = Alg;
    fn mul(self, o: Alg) -> Alg {
        // (a + b s)(c + d s) = ac + 3 bd + (ad + bc) s
        let a = &self.a * &o.a + qi(3) * &self.b * &o.b;
        let b = &self.a * &o.b + &self.b * &o.a;
        Alg { a, b }
    }
}

impl Div for Alg {
    type Output = Alg;
    fn div(self, o: Alg) -> Alg {
        self * o.recip()
    }
}

impl<'a> Add<&'a Alg> for &'a Alg {
    type Output = Alg;
    fn add(self, o: &Alg) -> Alg {
        self.clone() + o.clone()
    }
}

/// Exact point in the plane with coordinates in Q(sqrt(3)).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct APoint {
    pub x: Alg,
    pub y: Alg,
}

impl APoint {
    pub fn new(x: Alg, y: Alg) -> Self {
        APoint { x, y }
    }

    pub fn origin() -> Self {
        APoint::new(Alg::zero(), Alg::zero())
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.x.to_f64(), self.y.to_f64()]
    }

    pub fn add(&self, o: &APoint) -> APoint {
        APoint::new(self.x.clone() + o.x.clone(), self.y.clone() + o.y.clone())
    }

    pub fn sub(&self, o: &APoint) -> APoint {
        APoint::new(self.x.clone() - o.x.clone(), self.y.clone() - o.y.clone())
    }

    pub fn scale(&self, r: &Q) -> APoint {
        APoint::new(self.x.scale(r), self.y.scale(r))
    }

    pub fn scale_alg(&self, r: &Alg) -> APoint {
        APoint::new(self.x.clone() * r.clone(), self.y.clone() * r.clone())
    }

    /// Rotate by 90 degrees counterclockwise.
    pub fn rot90(&self) -> APoint {
        APoint::new(-self.y.clone(), self.x.clone())
    }

    /// Linear interpolation self + t*(other - self), t rational.
    pub fn lerp(&self, o: &APoint, t: &Q) -> APoint {
        self.add(&o.sub(self).scale(t))
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        self.x.encode(out);
        self.y.encode(out);
    }

    pub fn key(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(64);
        self.encode(&mut v);
        v
    }
}

/// 2D cross product (p1 - p0) x (p2 - p0).
pub fn cross(p0: &APoint, p1: &APoint, p2: &APoint) -> Alg {
    let u = p1.sub(p0);
    let v = p2.sub(p0);
    u.x * v.y - u.y * v.x
}

/// Exact orientation: 1 = counterclockwise, -1 = clockwise, 0 = collinear.
pub fn orient(p0: &APoint, p1: &APoint, p2: &APoint) -> i32 {
    cross(p0, p1, p2).signum()
}

/// Twice the signed area of a polygon (positive when counterclockwise).
pub fn polygon_area2(poly: &[APoint]) -> Alg {
    let mut acc = Alg::zero();
    let n = poly.len();
    for i in 0..n {
        let p = &poly[i];
        let r = &poly[(i + 1) % n];
        acc = acc + (p.x.clone() * r.y.clone() - r.x.clone() * p.y.clone());
    }
    acc
}

/// Clip a convex polygon `subject` against convex polygon `clip` (both CCW).
/// Returns the intersection polygon (possibly empty). Exact arithmetic.
pub fn convex_clip(subject: &[APoint], clip: &[APoint]) -> Vec<APoint> {
    let mut output: Vec<APoint> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            return output;
        }
        let a = &clip[i];
        let b = &clip[(i + 1) % m];
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let p = &input[j];
            let r = &input[(j + 1) % n];
            let dp = cross(a, b, p).signum();
            let dr = cross(a, b, r).signum();
            if dp >= 0 {
                output.push(p.clone());
            }
            if (dp > 0 && dr < 0) || (dp < 0 && dr > 0) {
                // exact segment/line intersection: p + t (r - p), t = dp / (dp - dr)
                let cp = cross(a, b, p);
                let cr = cross(a, b, r);
                let t = cp.clone() / (cp - cr);
                // t is an Alg scalar; interpolate with it
                let d = r.sub(p);
                output.push(APoint::new(
                    p.x.clone() + d.x * t.clone(),
                    p.y.clone() + d.y * t,
                ));
            }
        }
    }
    output
}

/// Do two convex polygons intersect with positive area? Exact.
pub fn overlap_positive_area(p1: &[APoint], p2: &[APoint]) -> bool {
    let inter = convex_clip(p1, p2);
    if inter.len() < 3 {
        return false;
    }
    polygon_area2(&inter).signum() > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c1_is_a_unit() {
        // (2 - sqrt3)(2 + sqrt3) = 1
        let c1 = Alg::new(qi(2), qi(-1));
        let inv = Alg::new(qi(2), qi(1));
        assert_eq!(c1.clone() * inv, Alg::one());
        assert_eq!(c1.recip(), Alg::new(qi(2), qi(1)));
    }

    #[test]
    fn exact_sign_and_order() {
        // 1.732... : sqrt3 - 1.7 > 0, sqrt3 - 1.8 < 0
        let s = Alg::sqrt3(1, 1);
        assert_eq!((s.clone() - Alg::from_q(parse_rational("1.7").unwrap())).signum(), 1);
        assert_eq!((s.clone() - Alg::from_q(parse_rational("1.8").unwrap())).signum(), -1);
        assert_eq!((s.clone() - s).signum(), 0);
        // 7 - 4 sqrt3 = (2-sqrt3)^2 > 0
        let c = Alg::new(qi(7), qi(-4));
        assert_eq!(c.signum(), 1);
    }

    #[test]
    fn parse_decimals() {
        assert_eq!(parse_rational("0.06").unwrap(), q(6, 100));
        assert_eq!(parse_rational("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rational("3/25").unwrap(), q(3, 25));
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn clip_unit_squares() {
        let sq = |x0: i64, y0: i64| -> Vec<APoint> {
            vec![
                APoint::new(Alg::from_int(x0), Alg::from_int(y0)),
                APoint::new(Alg::from_int(x0 + 2), Alg::from_int(y0)),
                APoint::new(Alg::from_int(x0 + 2), Alg::from_int(y0 + 2)),
                APoint::new(Alg::from_int(x0), Alg::from_int(y0 + 2)),
            ]
        };
        let a = sq(0, 0);
        let b = sq(1, 1);
        let inter = convex_clip(&a, &b);
        assert_eq!(polygon_area2(&inter).signum(), 1);
        assert_eq!(polygon_area2(&inter), Alg::from_int(2)); // area 1, doubled
        // touching squares share only an edge: zero area
        let c = sq(2, 0);
        assert!(!overlap_positive_area(&a, &c));
        assert!(overlap_positive_area(&a, &b));
    }

    #[test]
    fn polygon_area_triangle() {
        let t = vec![
            APoint::origin(),
            APoint::new(Alg::one(), Alg::zero()),
            APoint::new(Alg::rational(1, 2), Alg::sqrt3(1, 2)),
        ];
        // equilateral side 1: area sqrt3/4, doubled = sqrt3/2
        assert_eq!(polygon_area2(&t), Alg::sqrt3(1, 2));
    }
}
