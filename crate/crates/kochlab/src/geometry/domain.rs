//! The fibered pre-fractal domain Omega_eps^n.
//!
//! All cell triangles at level n are triangles of the regular triangular
//! lattice of pitch 3^-n (the IFS rotates by multiples of pi/3 and contracts
//! by 1/3), and every fiber collar lives inside the lattice triangle adjacent
//! to its side. The builder therefore organizes the domain as a map from
//! lattice triangles ("hosts") to the collar patches they contain. Coincident
//! patches (the two words `v2`/`v3` of a subdivision share their cell
//! triangle, hence their collars) are detected with integer lattice keys and
//! stored once, with multiplicity.

use super::fibers::{
    a_of_eps, check_amplitude, side_frame, unit_pieces, Band, PieceKind, UnitPiece,
};
use super::{
    cell_triangle, compose, omega_star, pow3_inv, prefractal, words, CellAddress, GeometryError,
    Prefractal, SimF, Similitude,
};
use crate::exact::{overlap_positive_area, polygon_area2, Alg, APoint, Q};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// Triangle of the pitch-3^-n lattice. `up` triangles have vertices
/// (i,j), (i+1,j), (i,j+1) in axial coordinates; `down` triangles
/// (i+1,j), (i,j+1), (i+1,j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriId {
    pub i: i64,
    pub j: i64,
    pub up: bool,
}

pub type Axial = (i64, i64);

/// Physical point of an axial lattice vertex at level n.
pub fn lattice_point(a: Axial, n: u32) -> APoint {
    let s = pow3_inv(n);
    // x = s (i + j/2), y = s j sqrt3/2
    let x = Alg::from_q(&s * (Q::from(num_bigint::BigInt::from(a.0)) + Q::new(a.1.into(), 2.into())));
    let y = Alg::new(Q::zero(), &s * Q::new(a.1.into(), 2.into()));
    APoint::new(x, y)
}

/// Exact inverse of `lattice_point`; `None` when the point is not a level-n
/// lattice vertex.
pub fn to_axial(p: &APoint, n: u32) -> Option<Axial> {
    use num_traits::ToPrimitive;
    let s = pow3_inv(n);
    // y = s*j*sqrt3/2 requires rational part 0
    if !p.y.a.is_zero() {
        return None;
    }
    let j_q = &p.y.b * Q::from(num_bigint::BigInt::from(2)) / &s;
    if !j_q.is_integer() {
        return None;
    }
    let j = j_q.to_integer().to_i64()?;
    if !p.x.b.is_zero() {
        return None;
    }
    let i_q = &p.x.a / &s - Q::new(j.into(), 2.into());
    if !i_q.is_integer() {
        return None;
    }
    Some((i_q.to_integer().to_i64()?, j))
}

impl TriId {
    pub fn vertices(&self) -> [Axial; 3] {
        if self.up {
            [(self.i, self.j), (self.i + 1, self.j), (self.i, self.j + 1)]
        } else {
            [(self.i + 1, self.j), (self.i, self.j + 1), (self.i + 1, self.j + 1)]
        }
    }

    pub fn points(&self, n: u32) -> [APoint; 3] {
        let v = self.vertices();
        [lattice_point(v[0], n), lattice_point(v[1], n), lattice_point(v[2], n)]
    }

    pub fn centroid_f64(&self, n: u32) -> [f64; 2] {
        let pts = self.points(n);
        let p: Vec<[f64; 2]> = pts.iter().map(|q| q.to_f64()).collect();
        [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ]
    }

    /// Canonical edges as sorted axial endpoint pairs.
    pub fn edges(&self) -> [(Axial, Axial); 3] {
        let v = self.vertices();
        [sort_edge(v[0], v[1]), sort_edge(v[1], v[2]), sort_edge(v[2], v[0])]
    }

    pub fn edge_index(&self, e: (Axial, Axial)) -> Option<usize> {
        self.edges().iter().position(|&x| x == e)
    }
}

pub fn sort_edge(a: Axial, b: Axial) -> (Axial, Axial) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Triangle from its three axial vertices (must form a lattice triangle).
pub fn tri_from_vertices(v: &[Axial; 3]) -> Option<TriId> {
    let mi = v.iter().map(|p| p.0).min().unwrap();
    let mj = v.iter().map(|p| p.1).min().unwrap();
    let up = TriId { i: mi, j: mj, up: true };
    let mut su: Vec<Axial> = up.vertices().to_vec();
    let mut sv: Vec<Axial> = v.to_vec();
    su.sort();
    sv.sort();
    if su == sv {
        return Some(up);
    }
    let down = TriId { i: mi, j: mj, up: false };
    let mut sd: Vec<Axial> = down.vertices().to_vec();
    sd.sort();
    if sd == sv {
        return Some(down);
    }
    None
}

/// The two triangles flanking a lattice edge.
pub fn edge_faces(e: (Axial, Axial)) -> [TriId; 2] {
    let (a, b) = e;
    let d = (b.0 - a.0, b.1 - a.1);
    match d {
        (1, 0) => [
            TriId { i: a.0, j: a.1, up: true },
            TriId { i: a.0, j: a.1 - 1, up: false },
        ],
        (0, 1) => [
            TriId { i: a.0, j: a.1, up: true },
            TriId { i: a.0 - 1, j: a.1, up: false },
        ],
        (-1, 1) => [
            TriId { i: a.0 - 1, j: a.1, up: true },
            TriId { i: a.0 - 1, j: a.1, up: false },
        ],
        (1, -1) => [
            TriId { i: a.0, j: a.1 - 1, up: true },
            TriId { i: a.0, j: a.1 - 1, up: false },
        ],
        _ => panic!("not a unit lattice edge: {a:?} -> {b:?}"),
    }
}

pub fn neighbor_across(tri: TriId, e: (Axial, Axial)) -> TriId {
    let [f0, f1] = edge_faces(e);
    if f0 == tri {
        f1
    } else {
        debug_assert_eq!(f1, tri);
        f0
    }
}

/// Children of a lattice triangle under pitch refinement 3^-m -> 3^-(m+1).
pub fn refine_tri(t: TriId) -> Vec<TriId> {
    // parent vertices scaled to the child lattice
    let pv: Vec<(i64, i64)> = t.vertices().iter().map(|&(i, j)| (3 * i, 3 * j)).collect();
    let inside = |p: (i64, i64)| -> bool {
        // integer barycentric via cross products in axial coordinates mapped
        // to the oblique basis; orientation tests work directly on (i, j)
        let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i64 {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let d0 = cross(pv[0], pv[1], p);
        let d1 = cross(pv[1], pv[2], p);
        let d2 = cross(pv[2], pv[0], p);
        (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0)
    };
    let mut out = Vec::with_capacity(9);
    let base_i = pv.iter().map(|p| p.0).min().unwrap();
    let base_j = pv.iter().map(|p| p.1).min().unwrap();
    for di in 0..3 {
        for dj in 0..3 {
            for up in [true, false] {
                let c = TriId { i: base_i + di, j: base_j + dj, up };
                if c.vertices().iter().all(|&v| inside(v)) {
                    out.push(c);
                }
            }
        }
    }
    debug_assert_eq!(out.len(), 9);
    out
}

/// Lattice triangles tiling Omega_n at pitch 3^-n, built recursively:
/// refine the previous level and add the new outward bumps.
pub fn omega_n_tris(n: u32) -> BTreeSet<TriId> {
    let mut set: BTreeSet<TriId> = BTreeSet::new();
    set.insert(TriId { i: 0, j: 0, up: true });
    for k in 0..n {
        let mut next: BTreeSet<TriId> = BTreeSet::new();
        for t in &set {
            for c in refine_tri(*t) {
                next.insert(c);
            }
        }
        // bumps added at level k+1: cells (curve, v ++ [2]) for every level-k word v
        for curve in 1..=3u8 {
            for v in words(k) {
                let mut w = v.clone();
                w.push(2);
                let addr = CellAddress { curve, word: w };
                let tri = cell_triangle(&addr);
                let ax = [
                    to_axial(&tri[0], k + 1).expect("bump vertex on lattice"),
                    to_axial(&tri[1], k + 1).expect("bump vertex on lattice"),
                    to_axial(&tri[2], k + 1).expect("bump vertex on lattice"),
                ];
                next.insert(tri_from_vertices(&ax).expect("bump is a lattice triangle"));
            }
        }
        set = next;
    }
    set
}

/// How a host triangle's edge participates in the collar construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeState {
    Plain,
    /// a collar patch hugs this edge from inside this triangle
    StackIn(u32),
    /// the patch on this edge lives in the neighbor (this triangle is the cell)
    StackOut(u32),
}

#[derive(Debug, Clone)]
pub struct HostInfo {
    pub inside: bool,
    pub states: [EdgeState; 3],
}

/// A deduplicated fiber collar: all (cell, side) slots whose patches coincide.
#[derive(Debug, Clone)]
pub struct PatchClass {
    pub id: u32,
    /// similitude mapping side-1 unit collar coordinates onto the patch
    pub frame: Similitude,
    pub frame_f: SimF,
    pub frame_inv_f: SimF,
    /// host lattice triangle containing the patch
    pub host: TriId,
    /// base edge endpoints in frame order (images of A and B)
    pub base: [Axial; 2],
    /// true when the base edge is a segment of K_n (patch outside Omega_n)
    pub on_koch: bool,
    pub owners: Vec<(CellAddress, u8)>,
    /// physical piece polygons, CCW
    pub pieces: Vec<PhysPiece>,
}

#[derive(Debug, Clone)]
pub struct PhysPiece {
    pub kind: PieceKind,
    pub band: Band,
    pub poly_exact: Vec<APoint>,
    pub poly: Vec<[f64; 2]>,
}

impl PatchClass {
    pub fn multiplicity(&self) -> usize {
        self.owners.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Region {
    Outside,
    Bulk,
    InnerFiber,
    Annulus,
}

#[derive(Debug, Clone, Copy)]
pub struct LocatedPatch {
    pub class: u32,
    pub kind: PieceKind,
    pub band: Band,
    /// abscissa along the side in unit (side-1) coordinates
    pub unit_x: f64,
    pub unit_y: f64,
}

/// Options for `build_domain`.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub max_level: u32,
    pub check_overlaps: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_level: super::MAX_LEVEL_DEFAULT, check_overlaps: true }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub addr: CellAddress,
    pub map: Similitude,
    pub tri: TriId,
    /// axial ids of (pA, pB, pC)
    pub verts: [Axial; 3],
    /// patch class id per side 1..3
    pub patch_class: [u32; 3],
}

/// Exact-coordinate description of the fibered domain.
#[derive(Debug, Clone)]
pub struct DomainGeometry {
    pub n: u32,
    pub eps: Q,
    pub eps_f: f64,
    pub prefractal: Prefractal,
    pub cells: Vec<Cell>,
    pub classes: Vec<PatchClass>,
    pub hosts: BTreeMap<TriId, HostInfo>,
    pub omega_tris: BTreeSet<TriId>,
    /// vertex set V^n as axial ids (sorted)
    pub vn_axial: BTreeSet<Axial>,
}

impl DomainGeometry {
    /// a = eps/C1 in unit coordinates, as f64.
    pub fn a_f64(&self) -> f64 {
        a_of_eps(&self.eps).to_f64()
    }

    pub fn area_omega_n(&self) -> f64 {
        super::omega_n_area_exact(self.n).to_f64()
    }

    /// Exact area of the deduplicated inner fiber set Sigma_eps^n.
    pub fn area_sigma_eps_exact(&self) -> Alg {
        self.area_band(Band::Fiber, false)
    }

    pub fn area_sigma_2eps_exact(&self) -> Alg {
        self.area_band(Band::Fiber, false) + self.area_band(Band::Annulus, false)
    }

    fn area_band(&self, band: Band, multiset: bool) -> Alg {
        let mut acc = Alg::zero();
        for class in &self.classes {
            let mult = if multiset { class.multiplicity() as i64 } else { 1 };
            for piece in &class.pieces {
                if piece.band == band {
                    acc = acc
                        + polygon_area2(&piece.poly_exact)
                            .scale(&Q::new(mult.into(), 2.into()));
                }
            }
        }
        acc
    }

    /// area(Omega_eps^n) = area(Omega_n) + exterior collar area.
    pub fn area_omega_eps_exact(&self) -> Alg {
        let mut acc = super::omega_n_area_exact(self.n);
        for class in &self.classes {
            if class.on_koch {
                for piece in &class.pieces {
                    acc = acc + polygon_area2(&piece.poly_exact).scale(&Q::new(1.into(), 2.into()));
                }
            }
        }
        acc
    }

    /// Locate a point: region tag plus owning patch data when in a collar.
    /// Points on shared boundaries resolve to the inner fiber first.
    pub fn locate(&self, p: [f64; 2]) -> (Region, Option<LocatedPatch>) {
        let tol = 1e-12;
        let tri = locate_tri_f64(p, self.n);
        let mut candidates: Vec<TriId> = vec![tri];
        for e in tri.edges() {
            candidates.push(neighbor_across(tri, e));
        }
        // fiber band first, then annulus: measure-zero priority choice
        for band in [Band::Fiber, Band::Annulus] {
            for t in &candidates {
                if let Some(host) = self.hosts.get(t) {
                    for st in host.states {
                        if let EdgeState::StackIn(cid) = st {
                            let class = &self.classes[cid as usize];
                            for piece in &class.pieces {
                                if piece.band == band && point_in_poly(p, &piece.poly, tol) {
                                    let u = class.frame_inv_f.apply(p);
                                    return (
                                        if band == Band::Fiber { Region::InnerFiber } else { Region::Annulus },
                                        Some(LocatedPatch {
                                            class: cid,
                                            kind: piece.kind,
                                            band,
                                            unit_x: u[0],
                                            unit_y: u[1],
                                        }),
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        if self.omega_tris.contains(&tri) {
            (Region::Bulk, None)
        } else {
            (Region::Outside, None)
        }
    }

    /// K_n as a list of f64 segments (closed chain).
    pub fn koch_segments_f64(&self) -> Vec<([f64; 2], [f64; 2])> {
        (0..self.prefractal.segment_count())
            .map(|i| {
                let (a, b) = self.prefractal.segment(i);
                (a.to_f64(), b.to_f64())
            })
            .collect()
    }

    /// Gamma_eps^n = boundary of the inner fiber set minus K_n, as segments.
    pub fn gamma_segments_f64(&self) -> Vec<([f64; 2], [f64; 2])> {
        let mut out = Vec::new();
        let a = a_of_eps(&self.eps).to_f64();
        let e2 = self.eps_f / 2.0;
        // polyline A -> P1 -> P2 -> B in unit coords, mapped per class;
        // the base segment A -> B is part of Gamma for interior collars.
        for class in &self.classes {
            let chain = [
                [0.0, 0.0],
                [a, -e2],
                [1.0 - a, -e2],
                [1.0, 0.0],
            ];
            for w in chain.windows(2) {
                out.push((class.frame_f.apply(w[0]), class.frame_f.apply(w[1])));
            }
            if !class.on_koch {
                out.push((class.frame_f.apply([0.0, 0.0]), class.frame_f.apply([1.0, 0.0])));
            }
        }
        out
    }
}

/// Which level-n lattice triangle contains a point (f64; ties resolved
/// deterministically toward the lower cell).
pub fn locate_tri_f64(p: [f64; 2], n: u32) -> TriId {
    let s = 3f64.powi(-(n as i32));
    let jf = p[1] * 2.0 / (3f64.sqrt() * s);
    let ifl = p[0] / s - jf / 2.0;
    let (fi, fj) = (ifl.floor(), jf.floor());
    let (fu, fv) = (ifl - fi, jf - fj);
    TriId { i: fi as i64, j: fj as i64, up: fu + fv < 1.0 }
}

pub fn point_in_poly(p: [f64; 2], poly: &[[f64; 2]], tol: f64) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cr < -tol {
            return false;
        }
    }
    true
}

/// Build the full fibered-domain description at level n and amplitude eps.
pub fn build_domain(n: u32, eps: &Q, opts: &BuildOptions) -> Result<DomainGeometry, GeometryError> {
    check_amplitude(eps)?;
    if n < 1 {
        return Err(GeometryError::InvalidAddress("level must be >= 1".into()));
    }
    if n > opts.max_level {
        return Err(GeometryError::LevelTooDeep(n, opts.max_level));
    }
    let pf = prefractal(n, opts.max_level)?;
    let omega_tris = omega_n_tris(n);
    let unit: Vec<UnitPiece> = unit_pieces(eps)?;

    // hosts start from the Omega_n tiling
    let mut hosts: BTreeMap<TriId, HostInfo> = omega_tris
        .iter()
        .map(|t| (*t, HostInfo { inside: true, states: [EdgeState::Plain; 3] }))
        .collect();

    let mut classes: Vec<PatchClass> = Vec::new();
    let mut class_index: BTreeMap<(TriId, (Axial, Axial)), u32> = BTreeMap::new();
    let mut cells: Vec<Cell> = Vec::new();

    for curve in 1..=3u8 {
        for w in words(n) {
            let addr = CellAddress { curve, word: w };
            let map = compose(&addr);
            let tri_pts = cell_triangle(&addr);
            let verts = [
                to_axial(&tri_pts[0], n).expect("cell vertex on lattice"),
                to_axial(&tri_pts[1], n).expect("cell vertex on lattice"),
                to_axial(&tri_pts[2], n).expect("cell vertex on lattice"),
            ];
            let tri = tri_from_vertices(&verts).expect("cell is a lattice triangle");
            debug_assert!(omega_tris.contains(&tri), "cell triangle must lie in Omega_n");
            let mut patch_class = [0u32; 3];
            for l in 1..=3u8 {
                let (ea, eb) = match l {
                    1 => (verts[0], verts[1]),
                    2 => (verts[1], verts[2]),
                    _ => (verts[2], verts[0]),
                };
                let edge = sort_edge(ea, eb);
                let host = neighbor_across(tri, edge);
                let key = (host, edge);
                let cid = match class_index.get(&key) {
                    Some(&cid) => {
                        let class = &mut classes[cid as usize];
                        let frame = side_frame(&map, l);
                        debug_assert_eq!(
                            class.frame, frame,
                            "coincident patches must share their frame"
                        );
                        class.owners.push((addr.clone(), l));
                        cid
                    }
                    None => {
                        let cid = classes.len() as u32;
                        let frame = side_frame(&map, l);
                        let frame_f = frame.to_f64();
                        let frame_inv_f = frame.inverse().to_f64();
                        let on_koch = !omega_tris.contains(&host);
                        let pieces: Vec<PhysPiece> = unit
                            .iter()
                            .map(|piece| {
                                let poly_exact: Vec<APoint> =
                                    piece.poly.iter().map(|q| frame.apply(q)).collect();
                                let poly = poly_exact.iter().map(|q| q.to_f64()).collect();
                                PhysPiece { kind: piece.kind, band: piece.band, poly_exact, poly }
                            })
                            .collect();
                        classes.push(PatchClass {
                            id: cid,
                            frame,
                            frame_f,
                            frame_inv_f,
                            host,
                            base: [ea, eb],
                            on_koch,
                            owners: vec![(addr.clone(), l)],
                            pieces,
                        });
                        class_index.insert(key, cid);
                        // register edge states
                        let hi = hosts.entry(host).or_insert(HostInfo {
                            inside: false,
                            states: [EdgeState::Plain; 3],
                        });
                        let ei = host.edge_index(edge).expect("edge of host");
                        debug_assert!(matches!(hi.states[ei], EdgeState::Plain));
                        hi.states[ei] = EdgeState::StackIn(cid);
                        let ci = hosts.get_mut(&tri).expect("cell host present");
                        let cei = tri.edge_index(edge).expect("edge of cell");
                        debug_assert!(matches!(ci.states[cei], EdgeState::Plain));
                        ci.states[cei] = EdgeState::StackOut(cid);
                        cid
                    }
                };
                patch_class[(l - 1) as usize] = cid;
            }
            cells.push(Cell { addr, map, tri, verts, patch_class });
        }
    }

    let vn_axial: BTreeSet<Axial> = pf
        .vertices
        .iter()
        .map(|p| to_axial(p, n).expect("prefractal vertex on lattice"))
        .collect();

    let geo = DomainGeometry {
        n,
        eps: eps.clone(),
        eps_f: num_traits::ToPrimitive::to_f64(eps).unwrap(),
        prefractal: pf,
        cells,
        classes,
        hosts,
        omega_tris,
        vn_axial,
    };

    verify_omega_star_containment(&geo)?;
    if opts.check_overlaps {
        check_patch_overlaps(&geo)?;
    }
    Ok(geo)
}

fn verify_omega_star_containment(geo: &DomainGeometry) -> Result<(), GeometryError> {
    let tri = omega_star();
    let inside = |p: &APoint| -> bool {
        for i in 0..3 {
            if crate::exact::orient(&tri[i], &tri[(i + 1) % 3], p) < 0 {
                return false;
            }
        }
        true
    };
    for v in &geo.prefractal.vertices {
        assert!(inside(v), "prefractal vertex escapes Omega*");
    }
    for class in &geo.classes {
        for piece in &class.pieces {
            for p in &piece.poly_exact {
                assert!(inside(p), "fiber corner escapes Omega*");
            }
        }
    }
    Ok(())
}

/// Exact pairwise overlap check between patch pieces of distinct classes.
/// Uses f64 bounding boxes and a separating-axis prefilter; only inconclusive
/// pairs fall back to exact convex clipping.
fn check_patch_overlaps(geo: &DomainGeometry) -> Result<(), GeometryError> {
    struct Item {
        class: u32,
        piece: usize,
        bbox: [f64; 4],
    }
    let margin = 1e-12;
    let mut items: Vec<Item> = Vec::new();
    for class in &geo.classes {
        for (pi, piece) in class.pieces.iter().enumerate() {
            let mut bb = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
            for p in &piece.poly {
                bb[0] = bb[0].min(p[0]);
                bb[1] = bb[1].min(p[1]);
                bb[2] = bb[2].max(p[0]);
                bb[3] = bb[3].max(p[1]);
            }
            items.push(Item { class: class.id, piece: pi, bbox: bb });
        }
    }
    // bucket by grid cell of size ~ one lattice pitch
    let cell = 3f64.powi(-(geo.n as i32));
    let mut grid: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (idx, it) in items.iter().enumerate() {
        let gx0 = (it.bbox[0] / cell).floor() as i64;
        let gy0 = (it.bbox[1] / cell).floor() as i64;
        let gx1 = (it.bbox[2] / cell).floor() as i64;
        let gy1 = (it.bbox[3] / cell).floor() as i64;
        for gx in gx0..=gx1 {
            for gy in gy0..=gy1 {
                grid.entry((gx, gy)).or_default().push(idx);
            }
        }
    }
    let mut tested: BTreeSet<(usize, usize)> = BTreeSet::new();
    for bucket in grid.values() {
        for ai in 0..bucket.len() {
            for bi in (ai + 1)..bucket.len() {
                let (x, y) = (bucket[ai].min(bucket[bi]), bucket[ai].max(bucket[bi]));
                let (a, b) = (&items[x], &items[y]);
                if a.class == b.class {
                    continue;
                }
                if a.bbox[0] > b.bbox[2] + margin
                    || b.bbox[0] > a.bbox[2] + margin
                    || a.bbox[1] > b.bbox[3] + margin
                    || b.bbox[1] > a.bbox[3] + margin
                {
                    continue;
                }
                if !tested.insert((x, y)) {
                    continue;
                }
                let pa = &geo.classes[a.class as usize].pieces[a.piece];
                let pb = &geo.classes[b.class as usize].pieces[b.piece];
                if sat_separated(&pa.poly, &pb.poly, margin) {
                    continue;
                }
                if overlap_positive_area(&pa.poly_exact, &pb.poly_exact) {
                    return Err(GeometryError::OverlapViolation {
                        a: geo.classes[a.class as usize].owners[0].0.label(),
                        b: geo.classes[b.class as usize].owners[0].0.label(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Conservative separating-axis test for convex polygons: true when a
/// separating axis with clearance > margin exists.
fn sat_separated(p1: &[[f64; 2]], p2: &[[f64; 2]], margin: f64) -> bool {
    let axes = |poly: &[[f64; 2]]| -> Vec<[f64; 2]> {
        let n = poly.len();
        (0..n)
            .map(|i| {
                let a = poly[i];
                let b = poly[(i + 1) % n];
                [a[1] - b[1], b[0] - a[0]]
            })
            .collect()
    };
    for axis in axes(p1).into_iter().chain(axes(p2)) {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1]).sqrt();
        if norm == 0.0 {
            continue;
        }
        let proj = |poly: &[[f64; 2]]| -> (f64, f64) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in poly {
                let d = (p[0] * axis[0] + p[1] * axis[1]) / norm;
                lo = lo.min(d);
                hi = hi.max(d);
            }
            (lo, hi)
        };
        let (a0, a1) = proj(p1);
        let (b0, b1) = proj(p2);
        if a1 < b0 - margin || b1 < a0 - margin {
            return true;
        }
    }
    false
}
