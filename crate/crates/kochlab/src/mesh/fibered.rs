//! Assembly of the conforming mesh of Omega_eps^n.
//!
//! Every lattice triangle of Omega_n (a "host") is meshed independently and
//! welded through exact vertex coordinates:
//!   - hosts with no collar involvement get a uniform 9^r refinement;
//!   - hosts carrying collar stacks get the mapped reference stack plus a
//!     "core" (triangle minus notches) meshed as an inset triangle and three
//!     ladder strips;
//!   - exterior collars (on K_n segments) live in lattice triangles outside
//!     Omega_n and contribute their stacks only.
//! Shared rows along host edges are generated from the same exact formulas on
//! both sides, so the weld produces a conforming mesh by construction.

use super::reference::{RefStack, StackParams};
use super::{edge_key, FiberElem, Marker, Mesh, MeshError, RegionTag};
use crate::exact::{q, Alg, APoint, Q};
use crate::geometry::domain::{
    lattice_point, to_axial, DomainGeometry, EdgeState, TriId,
};
use crate::geometry::fibers::Band;
use crate::geometry::Similitude;
use num_traits::ToPrimitive;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct MeshParams {
    pub bulk_refine: u32,
    pub fiber_layers: u32,
    pub grade_ratio: Q,
    pub grade_depth: u32,
    /// minimum-angle floor in degrees; the collar geometry itself contains
    /// corners of about 7.7 deg split across layers, so the floor is small
    pub min_angle_floor_deg: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            bulk_refine: 1,
            fiber_layers: 2,
            grade_ratio: q(1, 2),
            grade_depth: 4,
            min_angle_floor_deg: 0.2,
        }
    }
}

impl MeshParams {
    pub fn stack(&self) -> StackParams {
        StackParams {
            bulk_refine: self.bulk_refine,
            fiber_layers: self.fiber_layers,
            grade_ratio: self.grade_ratio.clone(),
            grade_depth: self.grade_depth,
        }
    }

    /// economical settings for large parameter sweeps
    pub fn economy() -> Self {
        MeshParams {
            bulk_refine: 0,
            fiber_layers: 1,
            grade_ratio: q(1, 2),
            grade_depth: 2,
            min_angle_floor_deg: 0.05,
        }
    }
}

struct Welder {
    key_of: BTreeMap<Vec<u8>, u32>,
    pts: Vec<[f64; 2]>,
    is_vn: Vec<bool>,
}

impl Welder {
    fn new() -> Self {
        Welder { key_of: BTreeMap::new(), pts: Vec::new(), is_vn: Vec::new() }
    }

    fn add(&mut self, p: &APoint, geo: &DomainGeometry) -> u32 {
        let key = p.key();
        if let Some(&id) = self.key_of.get(&key) {
            return id;
        }
        let id = self.pts.len() as u32;
        self.key_of.insert(key, id);
        self.pts.push(p.to_f64());
        let vn = to_axial(p, geo.n).map(|ax| geo.vn_axial.contains(&ax)).unwrap_or(false);
        self.is_vn.push(vn);
        id
    }
}

struct Builder<'g> {
    geo: &'g DomainGeometry,
    weld: Welder,
    triangles: Vec<[u32; 3]>,
    region: Vec<RegionTag>,
    fiber: Vec<Option<FiberElem>>,
    markers: BTreeMap<(u32, u32), Marker>,
}

impl<'g> Builder<'g> {
    fn push_tri(&mut self, mut v: [u32; 3], region: RegionTag, fib: Option<FiberElem>) {
        let p: Vec<[f64; 2]> = v.iter().map(|&i| self.weld.pts[i as usize]).collect();
        let area2 =
            (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
        let mut fib = fib;
        if area2 < 0.0 {
            v.swap(1, 2);
            if let Some(f) = &mut fib {
                f.unit.swap(1, 2);
            }
        }
        debug_assert!(area2.abs() > 1e-30, "degenerate triangle");
        self.triangles.push(v);
        self.region.push(region);
        self.fiber.push(fib);
    }

    fn mark(&mut self, a: u32, b: u32, m: Marker) {
        self.markers.insert(edge_key(a, b), m);
    }
}

/// Row of welded vertex ids with blend parameters along a strip edge. The
/// exact parameter drives the exact construction of derived rows; the f64
/// rendition orders the ladder walk.
struct Row {
    ids: Vec<u32>,
    params: Vec<f64>,
    t_exact: Vec<Alg>,
    pts: Vec<APoint>,
    graded: Vec<bool>,
}

impl Row {
    fn new() -> Self {
        Row { ids: vec![], params: vec![], t_exact: vec![], pts: vec![], graded: vec![] }
    }

    fn push(&mut self, id: u32, t: Alg, p: APoint, graded: bool) {
        self.ids.push(id);
        self.params.push(t.to_f64());
        self.t_exact.push(t);
        self.pts.push(p);
        self.graded.push(graded);
    }
}

/// Ladder triangulation between two polylines running the same direction.
fn ladder(b: &mut Builder, top: &Row, bottom: &Row, region: RegionTag) {
    let (mut i, mut j) = (0usize, 0usize);
    while i + 1 < top.ids.len() || j + 1 < bottom.ids.len() {
        let advance_top = if j + 1 >= bottom.ids.len() {
            true
        } else if i + 1 >= top.ids.len() {
            false
        } else {
            top.params[i + 1] <= bottom.params[j + 1]
        };
        if advance_top {
            b.push_tri([top.ids[i], top.ids[i + 1], bottom.ids[j]], region, None);
            i += 1;
        } else {
            b.push_tri([bottom.ids[j], bottom.ids[j + 1], top.ids[i]], region, None);
            j += 1;
        }
    }
}

/// Conforming tagged triangulation of the fibered domain.
pub fn mesh_fibered_domain(geo: &DomainGeometry, params: &MeshParams) -> Result<Mesh, MeshError> {
    let rs = RefStack::build(&geo.eps, &params.stack());
    let mut b = Builder {
        geo,
        weld: Welder::new(),
        triangles: Vec::new(),
        region: Vec::new(),
        fiber: Vec::new(),
        markers: BTreeMap::new(),
    };

    // collar stacks, one per deduplicated patch class
    for class in &geo.classes {
        emit_stack(&mut b, &rs, &class.frame, class.id, class.on_koch);
    }

    // host interiors
    let r = params.bulk_refine;
    let kappa = inset_factor(geo.eps_f);
    let m_in = ((kappa.to_f64().unwrap() * 3f64.powi(r as i32)).round() as usize).max(1);
    for (tri, info) in &geo.hosts {
        if !info.inside {
            continue;
        }
        if info.states.iter().all(|s| matches!(s, EdgeState::Plain)) {
            emit_plain_host(&mut b, *tri, r);
        } else {
            emit_ring_host(&mut b, &rs, *tri, info.states, r, &kappa, m_in);
        }
    }

    let mesh = Mesh {
        vertices: b.weld.pts,
        triangles: b.triangles,
        region: b.region,
        fiber: b.fiber,
        markers: b.markers,
        is_vn: b.weld.is_vn,
        level: geo.n,
        eps_f: geo.eps_f,
    };
    let min_angle = mesh.min_angle_deg();
    if min_angle < params.min_angle_floor_deg {
        return Err(MeshError::QualityFailure {
            found: min_angle,
            floor: params.min_angle_floor_deg,
        });
    }
    Ok(mesh)
}

/// Inset factor for the core triangle: clearance of at least the collar
/// depth eps plus a margin, relative to the centroid-to-edge distance
/// sqrt(3)/6, snapped to a rational.
fn inset_factor(eps_f: f64) -> Q {
    let r0 = 3f64.sqrt() / 6.0;
    let kappa = 1.0 - (eps_f + 0.08) / r0;
    let snapped = ((kappa * 48.0).floor() as i64).clamp(12, 41);
    q(snapped, 48)
}

fn emit_stack(b: &mut Builder, rs: &RefStack, frame: &Similitude, class: u32, on_koch: bool) {
    let gids: Vec<u32> = rs.verts.iter().map(|p| b.weld.add(&frame.apply(p), b.geo)).collect();
    for e in &rs.elems {
        let unit = [
            rs.verts_f[e.v[0] as usize],
            rs.verts_f[e.v[1] as usize],
            rs.verts_f[e.v[2] as usize],
        ];
        let region = match e.band {
            Band::Fiber => RegionTag::Fiber,
            Band::Annulus => RegionTag::Annulus,
        };
        b.push_tri(
            [gids[e.v[0] as usize], gids[e.v[1] as usize], gids[e.v[2] as usize]],
            region,
            Some(FiberElem { class, kind: e.kind, band: e.band, unit }),
        );
    }
    let base_marker = if on_koch { Marker::Koch } else { Marker::Gamma };
    for &(u, v) in &rs.base_edges {
        b.mark(gids[u as usize], gids[v as usize], base_marker);
    }
    for &(u, v) in &rs.interface_edges {
        b.mark(gids[u as usize], gids[v as usize], Marker::Gamma);
    }
    for &(u, v) in &rs.outer_edges {
        b.mark(gids[u as usize], gids[v as usize], Marker::Sigma2);
    }
}

fn emit_plain_host(b: &mut Builder, tri: TriId, r: u32) {
    let n = b.geo.n;
    let mut tris = vec![tri];
    for _ in 0..r {
        let mut next = Vec::with_capacity(tris.len() * 9);
        for t in &tris {
            next.extend(crate::geometry::domain::refine_tri(*t));
        }
        tris = next;
    }
    for t in tris {
        let pts = t.points(n + r);
        let ids = [
            b.weld.add(&pts[0], b.geo),
            b.weld.add(&pts[1], b.geo),
            b.weld.add(&pts[2], b.geo),
        ];
        b.push_tri(ids, RegionTag::Bulk, None);
    }
}

/// CCW corner points of a host triangle.
fn ccw_corners(tri: TriId, n: u32) -> [APoint; 3] {
    let v = tri.vertices();
    let order = if tri.up { [0, 1, 2] } else { [0, 2, 1] };
    [
        lattice_point(v[order[0]], n),
        lattice_point(v[order[1]], n),
        lattice_point(v[order[2]], n),
    ]
}

fn emit_ring_host(
    b: &mut Builder,
    rs: &RefStack,
    tri: TriId,
    states: [EdgeState; 3],
    r: u32,
    kappa: &Q,
    m_in: usize,
) {
    let n = b.geo.n;
    let corners = ccw_corners(tri, n);
    // map CCW edge index -> canonical edge index used by `states`
    let vlist = tri.vertices();
    let order: [usize; 3] = if tri.up { [0, 1, 2] } else { [0, 2, 1] };
    let state_of_ccw_edge = |e: usize| -> EdgeState {
        let a = vlist[order[e]];
        let c = vlist[order[(e + 1) % 3]];
        let key = crate::geometry::domain::sort_edge(a, c);
        let idx = tri.edge_index(key).expect("edge of host");
        states[idx]
    };

    // inset triangle corners and mid-ray points
    let third = q(1, 3);
    let gx = (corners[0].x.clone() + corners[1].x.clone() + corners[2].x.clone()).scale(&third);
    let gy = (corners[0].y.clone() + corners[1].y.clone() + corners[2].y.clone()).scale(&third);
    let g = APoint::new(gx, gy);
    let inset: Vec<APoint> = corners.iter().map(|vv| g.add(&vv.sub(&g).scale(kappa))).collect();

    // inner uniform triangle
    let mut inner_ids = vec![vec![0u32; 0]; m_in + 1];
    for u in 0..=m_in {
        for v in 0..=(m_in - u) {
            let tu = q(u as i64, m_in as i64);
            let tv = q(v as i64, m_in as i64);
            let p = inset[0]
                .add(&inset[1].sub(&inset[0]).scale(&tu))
                .add(&inset[2].sub(&inset[0]).scale(&tv));
            inner_ids[u].push(b.weld.add(&p, b.geo));
        }
    }
    for u in 0..m_in {
        for v in 0..(m_in - u) {
            b.push_tri(
                [inner_ids[u][v], inner_ids[u + 1][v], inner_ids[u][v + 1]],
                RegionTag::Bulk,
                None,
            );
            if v + 1 <= m_in - (u + 1) {
                b.push_tri(
                    [inner_ids[u + 1][v], inner_ids[u + 1][v + 1], inner_ids[u][v + 1]],
                    RegionTag::Bulk,
                    None,
                );
            }
        }
    }

    // intermediate-row depth factor: a straight line between the host edge
    // and the inset edge, strictly deeper than any collar notch (depth eps
    // plus a quarter of the remaining gap), so ladder rows never cross
    let mu = mid_row_factor(b.geo.eps_f, kappa);

    // three strips between the host boundary rows and the inset edges
    for e in 0..3usize {
        let va = &corners[e];
        let vb = &corners[(e + 1) % 3];
        let ca = &inset[e];
        let cb = &inset[(e + 1) % 3];
        let outer = outer_row(b, rs, state_of_ccw_edge(e), va, vb, r);
        // intermediate row: straight blend of the edge line and the inset
        // line at the thinned outer parameters; endpoints lie on the corner
        // rays shared with the neighboring strips
        let mut mids = Row::new();
        for k in 0..outer.pts.len() {
            if outer.graded[k] {
                continue;
            }
            let t = outer.t_exact[k].clone();
            let ept = va.add(&vb.sub(va).scale_alg(&t));
            let ipt = ca.add(&cb.sub(ca).scale_alg(&t));
            let mpt = ept.add(&ipt.sub(&ept).scale(&mu));
            let id = b.weld.add(&mpt, b.geo);
            mids.push(id, t, mpt, false);
        }
        let mut inner = Row::new();
        for kk in 0..=m_in {
            let t = Alg::from_q(q(kk as i64, m_in as i64));
            let p = ca.add(&cb.sub(ca).scale_alg(&t));
            let id = b.weld.add(&p, b.geo);
            inner.push(id, t, p, false);
        }
        ladder(b, &outer, &mids, RegionTag::Bulk);
        ladder(b, &mids, &inner, RegionTag::Bulk);
    }
}

/// Blend factor for the intermediate strip row: depth mu * (1-kappa) * r0
/// must exceed the collar depth eps.
fn mid_row_factor(eps_f: f64, kappa: &Q) -> Q {
    let r0 = 3f64.sqrt() / 6.0;
    let inset_depth = (1.0 - kappa.to_f64().unwrap()) * r0;
    let mu = (eps_f + 0.25 * (inset_depth - eps_f)) / inset_depth;
    let snapped = ((mu * 48.0).ceil() as i64).clamp(1, 47);
    q(snapped, 48)
}

fn outer_row(
    b: &mut Builder,
    rs: &RefStack,
    state: EdgeState,
    va: &APoint,
    vb: &APoint,
    r: u32,
) -> Row {
    let mut row = Row::new();
    match state {
        EdgeState::Plain => {
            let m = 3usize.pow(r);
            for k in 0..=m {
                let t = Alg::from_q(q(k as i64, m as i64));
                let p = va.add(&vb.sub(va).scale_alg(&t));
                let id = b.weld.add(&p, b.geo);
                row.push(id, t, p, false);
            }
        }
        EdgeState::StackIn(cid) | EdgeState::StackOut(cid) => {
            let class = &b.geo.classes[cid as usize];
            let ref_row: &[u32] = if matches!(state, EdgeState::StackIn(_)) {
                &rs.outer_row
            } else {
                &rs.base_row
            };
            let e1 = class.frame.apply(&APoint::origin());
            let forward = &e1 == va;
            if !forward {
                debug_assert_eq!(&class.frame.apply(&APoint::new(Alg::one(), Alg::zero())), va);
            }
            let k = ref_row.len();
            for idx in 0..k {
                let i = if forward { idx } else { k - 1 - idx };
                let p = class.frame.apply(&rs.verts[ref_row[i] as usize]);
                let t = if forward {
                    rs.xs[i].x.clone()
                } else {
                    Alg::one() - rs.xs[i].x.clone()
                };
                // the reference welds coincident row points (apex corners);
                // skip consecutive duplicates
                if let Some(last) = row.pts.last() {
                    if *last == p {
                        continue;
                    }
                }
                let id = b.weld.add(&p, b.geo);
                row.push(id, t, p, rs.xs[i].graded);
            }
        }
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;
    use crate::geometry::domain::{build_domain, BuildOptions};

    fn domain(n: u32, eps: &str) -> DomainGeometry {
        build_domain(n, &parse_rational(eps).unwrap(), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn level_one_mesh_is_valid() {
        let geo = domain(1, "0.1");
        let mesh = mesh_fibered_domain(&geo, &MeshParams::default()).unwrap();
        let rep = mesh.validate(Some(&geo));
        assert!(rep.violations.is_empty(), "violations: {:?}", &rep.violations[..rep.violations.len().min(8)]);
        assert!(rep.min_angle_deg > 0.2, "min angle {}", rep.min_angle_deg);
        // every prefractal vertex is a mesh vertex
        let flagged = mesh.is_vn.iter().filter(|&&b| b).count();
        assert_eq!(flagged, 12);
    }

    #[test]
    fn region_areas_match_exact_polygons() {
        let geo = domain(1, "0.1");
        let mesh = mesh_fibered_domain(&geo, &MeshParams::default()).unwrap();
        let fiber = mesh.region_area(RegionTag::Fiber);
        let exact_fiber = geo.area_sigma_eps_exact().to_f64();
        assert!((fiber - exact_fiber).abs() / exact_fiber < 1e-12, "{fiber} vs {exact_fiber}");
        let total = mesh.total_area();
        let exact_total = geo.area_omega_eps_exact().to_f64();
        assert!((total - exact_total).abs() / exact_total < 1e-12);
        let annulus = mesh.region_area(RegionTag::Annulus);
        let exact_ann = (geo.area_sigma_2eps_exact() - geo.area_sigma_eps_exact()).to_f64();
        assert!((annulus - exact_ann).abs() / exact_ann < 1e-12);
    }

    #[test]
    fn refinement_quadruples_and_stays_valid() {
        let geo = domain(1, "0.1");
        let mesh = mesh_fibered_domain(&geo, &MeshParams::economy()).unwrap();
        let fine = mesh.refine_uniform();
        assert_eq!(fine.triangles.len(), 4 * mesh.triangles.len());
        let rep = fine.validate(Some(&geo));
        assert!(rep.violations.is_empty(), "{:?}", &rep.violations[..rep.violations.len().min(8)]);
        // nested: every child centroid lies in some parent with the same tag
        let loc = mesh.locator();
        for t in 0..fine.triangles.len() {
            let c = fine.centroid(t);
            let (parent, _) = loc.find(c).expect("child centroid inside parent mesh");
            assert_eq!(mesh.region[parent as usize], fine.region[t]);
        }
    }

    #[test]
    fn level_two_mesh_is_valid() {
        let geo = domain(2, "0.06");
        let mesh = mesh_fibered_domain(&geo, &MeshParams::default()).unwrap();
        let rep = mesh.validate(Some(&geo));
        assert!(rep.violations.is_empty(), "violations: {:?}", &rep.violations[..rep.violations.len().min(8)]);
        let fiber = mesh.region_area(RegionTag::Fiber);
        let exact_fiber = geo.area_sigma_eps_exact().to_f64();
        assert!((fiber - exact_fiber).abs() / exact_fiber < 1e-12);
    }

    #[test]
    fn near_max_amplitude_still_meshes() {
        let geo = domain(1, "0.13");
        let mesh = mesh_fibered_domain(&geo, &MeshParams::default()).unwrap();
        let rep = mesh.validate(Some(&geo));
        assert!(rep.violations.is_empty(), "{:?}", &rep.violations[..rep.violations.len().min(8)]);
    }

    #[test]
    fn artificial_damage_is_detected() {
        let geo = domain(1, "0.1");
        let mut mesh = mesh_fibered_domain(&geo, &MeshParams::economy()).unwrap();
        // flip a triangle
        mesh.triangles[0].swap(1, 2);
        let rep = mesh.validate(Some(&geo));
        assert!(rep.violations.iter().any(|v| v.contains("not positively oriented")));
        mesh.triangles[0].swap(1, 2);
        // delete an interface marker edge
        let key = *mesh
            .markers
            .iter()
            .find(|(_, m)| **m == Marker::Sigma2)
            .map(|(k, _)| k)
            .unwrap();
        mesh.markers.remove(&key);
        let rep = mesh.validate(Some(&geo));
        assert!(rep.violations.iter().any(|v| v.contains("no marker")));
        // mistag a region
        let mut mesh2 = mesh_fibered_domain(&geo, &MeshParams::economy()).unwrap();
        let idx = mesh2.region.iter().position(|r| *r == RegionTag::Fiber).unwrap();
        mesh2.region[idx] = RegionTag::Bulk;
        let rep = mesh2.validate(Some(&geo));
        assert!(rep.violations.iter().any(|v| v.contains("tagged")));
    }
}
