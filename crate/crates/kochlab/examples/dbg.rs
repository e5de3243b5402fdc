use kochlab::exact::parse_rational;
use kochlab::geometry::domain::*;
use kochlab::mesh::fibered::*;
fn main() {
    for (n, e) in [(1u32, "0.1"), (2, "0.06")] {
        let geo = build_domain(n, &parse_rational(e).unwrap(), &BuildOptions::default()).unwrap();
        let mut params = MeshParams::default();
        params.min_angle_floor_deg = 0.0;
        let mesh = mesh_fibered_domain(&geo, &params).unwrap();
        println!("n={} total {} vs {}", n, mesh.total_area(), geo.area_omega_eps_exact().to_f64());
        // find min-angle triangle
        let mut worst = (f64::INFINITY, 0usize);
        for t in 0..mesh.triangles.len() {
            let p = mesh.tri_points(t);
            for k in 0..3 {
                let a = p[k]; let b = p[(k+1)%3]; let c = p[(k+2)%3];
                let u = [b[0]-a[0], b[1]-a[1]];
                let v = [c[0]-a[0], c[1]-a[1]];
                let ang = (u[0]*v[1]-u[1]*v[0]).atan2(u[0]*v[0]+u[1]*v[1]).abs().to_degrees();
                if ang < worst.0 { worst = (ang, t); }
            }
        }
        let t = worst.1;
        println!("  min angle {:.5} deg tri {} region {:?} fiber {:?}", worst.0, t, mesh.region[t], mesh.fiber[t].map(|f| (f.kind, f.band)));
        println!("  pts {:?}", mesh.tri_points(t));
    }
}
