//! Conforming, region-tagged triangulations.
//!
//! Fiber collars are meshed from one structured reference mesh per level
//! (mapped through each patch frame, so coincident patches receive congruent
//! elements), bulk lattice triangles are refined uniformly, and the two are
//! stitched through canonical per-edge vertex rows, so conformity holds by
//! construction and is re-checked by `validate`.

pub mod fibered;
pub mod omega_star;
pub mod reference;

use crate::geometry::domain::{DomainGeometry, Region};
use crate::geometry::fibers::{Band, PieceKind};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh quality failure: minimum angle {found:.4} deg below floor {floor:.4}")]
    QualityFailure { found: f64, floor: f64 },
    #[error("stitching failure: {0}")]
    StitchingFailure(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// Per-element region tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionTag {
    Bulk,
    Fiber,
    Annulus,
}

impl RegionTag {
    pub fn to_region(self) -> Region {
        match self {
            RegionTag::Bulk => Region::Bulk,
            RegionTag::Fiber => Region::InnerFiber,
            RegionTag::Annulus => Region::Annulus,
        }
    }
}

/// Boundary / interface edge markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Marker {
    /// edge on the pre-fractal curve K_n
    Koch,
    /// edge on the inner collar boundary (the paper's Gamma_eps^n)
    Gamma,
    /// edge on the outer collar boundary (domain boundary for exterior collars)
    Sigma2,
}

/// Provenance of a fiber element: which collar, which piece, and where in
/// unit (side-1) coordinates. Weight integrals are evaluated in these
/// coordinates in closed form.
#[derive(Debug, Clone, Copy)]
pub struct FiberElem {
    pub class: u32,
    pub kind: PieceKind,
    pub band: Band,
    pub unit: [[f64; 2]; 3],
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub region: Vec<RegionTag>,
    pub fiber: Vec<Option<FiberElem>>,
    /// marker per (sorted) vertex-id edge
    pub markers: BTreeMap<(u32, u32), Marker>,
    /// vertex is a pre-fractal vertex of V^n
    pub is_vn: Vec<bool>,
    pub level: u32,
    pub eps_f: f64,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub min_angle_deg: f64,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub koch_length: f64,
}

pub fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn tri_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let p = self.tri_points(t);
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.tri_points(t);
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let cr = u[0] * v[1] - u[1] * v[0];
                let ang = cr.atan2(dot).abs();
                min = min.min(ang.to_degrees());
            }
        }
        min
    }

    /// Total area per region tag.
    pub fn region_area(&self, tag: RegionTag) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.region[t] == tag)
            .map(|t| self.tri_area(t))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.tri_area(t)).sum()
    }

    /// Edge -> incident triangle count.
    fn edge_uses(&self) -> BTreeMap<(u32, u32), u32> {
        let mut uses: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                *uses.entry(edge_key(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        uses
    }

    /// Consistency checks: conformity (edges used at most twice, shared with
    /// equal endpoints by construction), positive orientation, tag
    /// consistency against the geometry, boundary-marker closure.
    pub fn validate(&self, geo: Option<&DomainGeometry>) -> ValidationReport {
        let mut rep = ValidationReport {
            min_angle_deg: self.min_angle_deg(),
            n_vertices: self.vertices.len(),
            n_triangles: self.triangles.len(),
            ..Default::default()
        };
        for t in 0..self.triangles.len() {
            if self.tri_area(t) <= 0.0 {
                rep.violations.push(format!("triangle {t} is not positively oriented"));
            }
        }
        let uses = self.edge_uses();
        for (e, n) in &uses {
            if *n > 2 {
                rep.violations.push(format!("edge {e:?} used by {n} triangles"));
            }
        }
        for e in self.markers.keys() {
            if !uses.contains_key(e) {
                rep.violations.push(format!("marker on non-edge {e:?}"));
            }
        }
        // Koch markers form closed cycles: every vertex of the marked
        // subgraph has even degree, and the total length equals 3 (4/3)^n
        let mut deg: BTreeMap<u32, u32> = BTreeMap::new();
        let mut koch_len = 0.0;
        for (&(a, b), m) in &self.markers {
            if *m == Marker::Koch {
                *deg.entry(a).or_insert(0) += 1;
                *deg.entry(b).or_insert(0) += 1;
                let pa = self.vertices[a as usize];
                let pb = self.vertices[b as usize];
                koch_len += ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            }
        }
        rep.koch_length = koch_len;
        for (v, d) in deg {
            if d % 2 != 0 {
                rep.violations.push(format!("Koch marker chain open at vertex {v}"));
            }
        }
        if let Some(geo) = geo {
            // every boundary edge of a fibered mesh lies on an outer collar
            for (e, n) in &uses {
                if *n == 1 && !self.markers.contains_key(e) {
                    rep.violations.push(format!("boundary edge {e:?} has no marker"));
                }
            }
            let expect = 3.0 * (4f64 / 3.0).powi(geo.n as i32);
            if (koch_len - expect).abs() > 1e-9 * expect {
                rep.violations
                    .push(format!("Koch marker length {koch_len} != perimeter {expect}"));
            }
            for t in 0..self.triangles.len() {
                let (region, _) = geo.locate(self.centroid(t));
                if self.region[t].to_region() != region {
                    rep.violations.push(format!(
                        "triangle {t} tagged {:?} but centroid located in {:?}",
                        self.region[t], region
                    ));
                }
                match (self.region[t], self.fiber[t].is_some()) {
                    (RegionTag::Bulk, true) => {
                        rep.violations.push(format!("bulk triangle {t} has fiber provenance"))
                    }
                    (RegionTag::Fiber, false) | (RegionTag::Annulus, false) => rep
                        .violations
                        .push(format!("collar triangle {t} lacks fiber provenance")),
                    _ => {}
                }
            }
        }
        rep
    }

    /// Uniform refinement: every triangle splits into four via edge
    /// midpoints. Nested by construction; tags, markers, provenance and
    /// vertex flags are carried over.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut is_vn = self.is_vn.clone();
        let mut midpoint: BTreeMap<(u32, u32), u32> = BTreeMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<[f64; 2]>, is_vn: &mut Vec<bool>| -> u32 {
            let key = edge_key(a, b);
            *midpoint.entry(key).or_insert_with(|| {
                let pa = vertices[a as usize];
                let pb = vertices[b as usize];
                vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                is_vn.push(false);
                (vertices.len() - 1) as u32
            })
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        let mut region = Vec::with_capacity(triangles.capacity());
        let mut fiber = Vec::with_capacity(triangles.capacity());
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangles[t];
            let ab = mid(a, b, &mut vertices, &mut is_vn);
            let bc = mid(b, c, &mut vertices, &mut is_vn);
            let ca = mid(c, a, &mut vertices, &mut is_vn);
            let children = [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]];
            let sub_unit = self.fiber[t].map(|f| {
                let u = f.unit;
                let m = |p: [f64; 2], q: [f64; 2]| [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                let uab = m(u[0], u[1]);
                let ubc = m(u[1], u[2]);
                let uca = m(u[2], u[0]);
                [
                    [u[0], uab, uca],
                    [uab, u[1], ubc],
                    [uca, ubc, u[2]],
                    [uab, ubc, uca],
                ]
            });
            for (k, child) in children.iter().enumerate() {
                triangles.push(*child);
                region.push(self.region[t]);
                fiber.push(self.fiber[t].map(|f| FiberElem {
                    class: f.class,
                    kind: f.kind,
                    band: f.band,
                    unit: sub_unit.unwrap()[k],
                }));
            }
        }
        let mut markers = BTreeMap::new();
        for (&(a, b), &m) in &self.markers {
            let c = midpoint[&edge_key(a, b)];
            markers.insert(edge_key(a, c), m);
            markers.insert(edge_key(c, b), m);
        }
        Mesh {
            vertices,
            triangles,
            region,
            fiber,
            markers,
            is_vn,
            level: self.level,
            eps_f: self.eps_f,
        }
    }

    /// Point location structure for repeated evaluation.
    pub fn locator(&self) -> MeshLocator<'_> {
        MeshLocator::build(self)
    }
}

/// Bucket-grid point locator over mesh elements.
pub struct MeshLocator<'a> {
    mesh: &'a Mesh,
    cell: f64,
    min: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<u32>>,
}

impl<'a> MeshLocator<'a> {
    fn build(mesh: &'a Mesh) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            min[0] = min[0].min(v[0]);
            min[1] = min[1].min(v[1]);
            max[0] = max[0].max(v[0]);
            max[1] = max[1].max(v[1]);
        }
        let span = ((max[0] - min[0]).max(max[1] - min[1])).max(1e-9);
        let target = (mesh.triangles.len() as f64).sqrt().max(1.0);
        let cell = span / target;
        let dims = [
            ((max[0] - min[0]) / cell).ceil() as usize + 2,
            ((max[1] - min[1]) / cell).ceil() as usize + 2,
        ];
        let mut buckets = vec![Vec::new(); dims[0] * dims[1]];
        for t in 0..mesh.triangles.len() {
            let p = mesh.tri_points(t);
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for q in p {
                x0 = x0.min(q[0]);
                y0 = y0.min(q[1]);
                x1 = x1.max(q[0]);
                y1 = y1.max(q[1]);
            }
            let gx0 = (((x0 - min[0]) / cell).floor() as isize).max(0) as usize;
            let gy0 = (((y0 - min[1]) / cell).floor() as isize).max(0) as usize;
            let gx1 = ((((x1 - min[0]) / cell).floor() as isize).max(0) as usize).min(dims[0] - 1);
            let gy1 = ((((y1 - min[1]) / cell).floor() as isize).max(0) as usize).min(dims[1] - 1);
            for gx in gx0..=gx1 {
                for gy in gy0..=gy1 {
                    buckets[gy * dims[0] + gx].push(t as u32);
                }
            }
        }
        MeshLocator { mesh, cell, min, dims, buckets }
    }

    /// Element containing the point (with small tolerance) and its
    /// barycentric coordinates; `None` when outside the mesh.
    pub fn find(&self, p: [f64; 2]) -> Option<(u32, [f64; 3])> {
        let gx = ((p[0] - self.min[0]) / self.cell).floor() as isize;
        let gy = ((p[1] - self.min[1]) / self.cell).floor() as isize;
        if gx < 0 || gy < 0 || gx as usize >= self.dims[0] || gy as usize >= self.dims[1] {
            return None;
        }
        let bucket = &self.buckets[gy as usize * self.dims[0] + gx as usize];
        let mut best: Option<(u32, [f64; 3], f64)> = None;
        for &t in bucket {
            let tri = self.mesh.tri_points(t as usize);
            if let Some(l) = barycentric(p, tri) {
                let worst = l[0].min(l[1]).min(l[2]);
                if worst >= -1e-10 {
                    match best {
                        Some((_, _, bw)) if bw >= worst => {}
                        _ => best = Some((t, l, worst)),
                    }
                    if worst >= 0.0 {
                        return Some((t, l));
                    }
                }
            }
        }
        best.map(|(t, l, _)| (t, l))
    }
}

pub fn barycentric(p: [f64; 2], t: [[f64; 2]; 3]) -> Option<[f64; 3]> {
    let d = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1]);
    if d == 0.0 {
        return None;
    }
    let l1 = ((p[0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (p[1] - t[0][1])) / d;
    let l2 = ((t[1][0] - t[0][0]) * (p[1] - t[0][1]) - (p[0] - t[0][0]) * (t[1][1] - t[0][1])) / d;
    Some([1.0 - l1 - l2, l1, l2])
}
