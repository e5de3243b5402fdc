//! Nested uniform triangulations T_m of the outer triangle Omega* and
//! lattice submeshes of the pre-fractal domains Omega_m.
//!
//! T_m is the pitch-3^-m triangular lattice restricted to Omega*. Because the
//! pre-fractal vertices V^m and all cell-graph nodes are lattice points, they
//! are mesh vertices automatically, T_{m+1} refines T_m, and K_m segments are
//! mesh edges.

use super::{edge_key, Marker, Mesh, RegionTag};
use crate::geometry::domain::{lattice_point, omega_n_tris, refine_tri, Axial, TriId};
use crate::geometry::prefractal;
use std::collections::{BTreeMap, BTreeSet};

/// Lattice-backed mesh: vertices indexed by axial coordinates at the pitch
/// level, enabling O(1) point location and direct nodal access for lattice
/// points (pre-fractal vertices, cell-graph nodes).
#[derive(Debug, Clone)]
pub struct LatticeMesh {
    pub mesh: Mesh,
    /// pitch level: element side length is 3^-pitch
    pub pitch: u32,
    /// pre-fractal level carried by markers and flags
    pub level: u32,
    pub vert_of_axial: BTreeMap<Axial, u32>,
    tri_of_id: BTreeMap<TriId, u32>,
}

fn build_from_tris(
    tris: &BTreeSet<TriId>,
    pitch: u32,
    level: u32,
    koch_segments: &[(Axial, Axial)],
    vn: &BTreeSet<Axial>,
) -> LatticeMesh {
    let mut vert_of_axial: BTreeMap<Axial, u32> = BTreeMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut is_vn: Vec<bool> = Vec::new();
    let mut triangles = Vec::with_capacity(tris.len());
    let mut tri_of_id = BTreeMap::new();
    for t in tris {
        let mut ids = [0u32; 3];
        let vs = t.vertices();
        let order: [usize; 3] = if t.up { [0, 1, 2] } else { [0, 2, 1] };
        for (slot, &oi) in order.iter().enumerate() {
            let ax = vs[oi];
            let id = *vert_of_axial.entry(ax).or_insert_with(|| {
                vertices.push(lattice_point(ax, pitch).to_f64());
                is_vn.push(vn.contains(&ax));
                (vertices.len() - 1) as u32
            });
            ids[slot] = id;
        }
        tri_of_id.insert(*t, triangles.len() as u32);
        triangles.push(ids);
    }
    let mut markers = BTreeMap::new();
    for &(a, b) in koch_segments {
        // a K_level segment spans 3^(pitch-level) lattice edges at this pitch
        let m = 3i64.pow(pitch - level);
        let scale = |p: Axial| (p.0 * m, p.1 * m);
        let (sa, sb) = (scale(a), scale(b));
        let d = ((sb.0 - sa.0) / m, (sb.1 - sa.1) / m);
        for k in 0..m {
            let u = (sa.0 + k * d.0, sa.1 + k * d.1);
            let v = (sa.0 + (k + 1) * d.0, sa.1 + (k + 1) * d.1);
            if let (Some(&iu), Some(&iv)) = (vert_of_axial.get(&u), vert_of_axial.get(&v)) {
                markers.insert(edge_key(iu, iv), Marker::Koch);
            }
        }
    }
    let n = triangles.len();
    let mesh = Mesh {
        vertices,
        triangles,
        region: vec![RegionTag::Bulk; n],
        fiber: vec![None; n],
        markers,
        is_vn,
        level,
        eps_f: 0.0,
    };
    LatticeMesh { mesh, pitch, level, vert_of_axial, tri_of_id }
}

fn koch_axial_segments(level: u32) -> (Vec<(Axial, Axial)>, BTreeSet<Axial>) {
    let pf = prefractal(level, crate::geometry::MAX_LEVEL_DEFAULT.max(level)).unwrap();
    let axials: Vec<Axial> = pf
        .vertices
        .iter()
        .map(|p| crate::geometry::domain::to_axial(p, level).expect("prefractal on lattice"))
        .collect();
    let m = axials.len();
    let segs = (0..m).map(|i| (axials[i], axials[(i + 1) % m])).collect();
    (segs, axials.into_iter().collect())
}

/// Uniform triangulation of Omega* at pitch 3^-m, with K_m markers and V^m
/// vertex flags.
pub fn mesh_omega_star(m: u32) -> LatticeMesh {
    let s = 3i64.pow(m);
    // Omega* corners in axial coordinates: D=(s,-s), E=(s,s), F=(-s,s)
    let d = (s, -s);
    let e = (s, s);
    let f = (-s, s);
    let cross =
        |o: Axial, a: Axial, b: Axial| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let inside = |p: Axial| -> bool {
        cross(d, e, p) >= 0 && cross(e, f, p) >= 0 && cross(f, d, p) >= 0
    };
    let mut tris = BTreeSet::new();
    for i in -s..=s {
        for j in -s..=s {
            for up in [true, false] {
                let t = TriId { i, j, up };
                if t.vertices().iter().all(|&v| inside(v)) {
                    tris.insert(t);
                }
            }
        }
    }
    let (segs, vn) = koch_axial_segments(m);
    build_from_tris(&tris, m, m, &segs, &vn)
}

/// Lattice submesh of Omega_m, refined `refine` times (pitch 3^-(m+refine)).
pub fn mesh_omega_m(m: u32, refine: u32) -> LatticeMesh {
    let mut tris = omega_n_tris(m);
    for _ in 0..refine {
        let mut next = BTreeSet::new();
        for t in &tris {
            for c in refine_tri(*t) {
                next.insert(c);
            }
        }
        tris = next;
    }
    let (segs, vn) = koch_axial_segments(m);
    // vn/marker axial coordinates are given at level m: rescale flags set
    let scale = 3i64.pow(refine);
    let vn_scaled: BTreeSet<Axial> = vn.iter().map(|&(i, j)| (i * scale, j * scale)).collect();
    let segs_scaled: Vec<(Axial, Axial)> = segs.clone();
    let mut lm = build_from_tris(&tris, m + refine, m, &segs_scaled, &vn_scaled);
    lm.level = m;
    lm
}

impl LatticeMesh {
    /// Vertex id of a lattice point given at pre-fractal level `level`
    /// (coordinates are scaled to the pitch level).
    pub fn vertex_at_level_axial(&self, ax: Axial) -> Option<u32> {
        let s = 3i64.pow(self.pitch - self.level);
        self.vert_of_axial.get(&(ax.0 * s, ax.1 * s)).copied()
    }

    /// P1 evaluation of nodal values at a point; `None` outside the mesh.
    pub fn eval(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let tri = crate::geometry::domain::locate_tri_f64(p, self.pitch);
        let t = self.tri_of_id.get(&tri).or_else(|| {
            // f64 ties on lattice lines: try the neighbors
            tri.edges()
                .iter()
                .find_map(|&e| {
                    let nb = crate::geometry::domain::neighbor_across(tri, e);
                    self.tri_of_id.get(&nb)
                })
        })?;
        let t = *t as usize;
        let pts = self.mesh.tri_points(t);
        let l = super::barycentric(p, pts)?;
        if l.iter().any(|&x| x < -1e-9) {
            return None;
        }
        let [a, b, c] = self.mesh.triangles[t];
        Some(l[0] * values[a as usize] + l[1] * values[b as usize] + l[2] * values[c as usize])
    }

    pub fn contains_tri(&self, t: &TriId) -> bool {
        self.tri_of_id.contains_key(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::to_axial;

    #[test]
    fn omega_star_counts_and_nesting() {
        for m in 0..=2u32 {
            let lm = mesh_omega_star(m);
            assert_eq!(lm.mesh.triangles.len(), 4 * 9usize.pow(m));
            let rep = lm.mesh.validate(None);
            assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        }
        // every vertex of T_m is a vertex of T_{m+1}
        let a = mesh_omega_star(1);
        let b = mesh_omega_star(2);
        for &(i, j) in a.vert_of_axial.keys() {
            assert!(b.vert_of_axial.contains_key(&(3 * i, 3 * j)));
        }
        // every triangle of T_{m+1} lies inside one triangle of T_m
        for t in b.tri_of_id.keys() {
            let c = t.centroid_f64(2);
            let parent = crate::geometry::domain::locate_tri_f64(c, 1);
            assert!(a.contains_tri(&parent));
        }
    }

    #[test]
    fn prefractal_vertices_are_nodes() {
        let lm = mesh_omega_star(2);
        let pf = prefractal(2, 8).unwrap();
        let mut flagged = 0;
        for v in &pf.vertices {
            let ax = to_axial(v, 2).unwrap();
            let id = lm.vert_of_axial[&ax];
            assert!(lm.mesh.is_vn[id as usize]);
            flagged += 1;
        }
        assert_eq!(flagged, 48);
        // V^1 subset of T_1 vertices
        let lm1 = mesh_omega_star(1);
        for v in prefractal(1, 8).unwrap().vertices {
            assert!(lm1.vert_of_axial.contains_key(&to_axial(&v, 1).unwrap()));
        }
    }

    #[test]
    fn koch_markers_close_up() {
        let lm = mesh_omega_star(1);
        let rep = lm.mesh.validate(None);
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        let count = lm
            .mesh
            .markers
            .values()
            .filter(|m| **m == Marker::Koch)
            .count();
        assert_eq!(count, 12);
        assert!((rep.koch_length - 3.0 * (4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn omega_m_submesh() {
        let lm = mesh_omega_m(1, 1);
        // area equals the snowflake partial sum
        let area: f64 = (0..lm.mesh.triangles.len()).map(|t| lm.mesh.tri_area(t)).sum();
        assert!((area - crate::geometry::omega_n_area_exact(1).to_f64()).abs() < 1e-12);
        // graph node (1/2, -sqrt3/6) is a mesh vertex: level-1 axial
        let tip = crate::exact::APoint::new(
            crate::exact::Alg::rational(1, 2),
            crate::exact::Alg::sqrt3(-1, 6),
        );
        let ax = to_axial(&tip, 1).unwrap();
        assert!(lm.vertex_at_level_axial(ax).is_some());
    }

    #[test]
    fn eval_affine_function() {
        let lm = mesh_omega_star(1);
        let vals: Vec<f64> = lm.mesh.vertices.iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
        for p in [[0.3, 0.2], [0.9, 0.4], [0.2, 0.6]] {
            let got = lm.eval(&vals, p).unwrap();
            let want = 2.0 * p[0] - p[1] + 0.5;
            assert!((got - want).abs() < 1e-12);
        }
        assert!(lm.eval(&vals, [5.0, 5.0]).is_none());
    }
}
