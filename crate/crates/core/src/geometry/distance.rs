//! Exact closest-point distances between triangle meshes.

use nalgebra::{Point3, Vector3};

use super::Hull;

/// Distance from `p` to the closed triangle `abc`.
pub fn point_triangle_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    (p - closest_on_triangle(p, a, b, c)).norm()
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Distance between segments `p0p1` and `q0q1`.
pub fn segment_distance(p0: &Point3<f64>, p1: &Point3<f64>, q0: &Point3<f64>, q1: &Point3<f64>) -> f64 {
    let d1: Vector3<f64> = p1 - p0;
    let d2: Vector3<f64> = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= 1e-18 && e <= 1e-18 {
        return r.norm();
    }
    if a <= 1e-18 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-18 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut ss = if denom > 1e-18 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut tt = (b * ss + f) / e;
            if tt < 0.0 {
                tt = 0.0;
                ss = (-c / a).clamp(0.0, 1.0);
            } else if tt > 1.0 {
                tt = 1.0;
                ss = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = ss;
            t = tt;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

fn edges(h: &Hull) -> impl Iterator<Item = (Point3<f64>, Point3<f64>)> + '_ {
    h.triangles.iter().flat_map(move |t| {
        [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
            .into_iter()
            .filter(|(a, b)| a < b)
            .map(move |(a, b)| (h.vertices[a as usize], h.vertices[b as usize]))
    })
}

/// Minimum distance between the surfaces of two convex hulls; 0 when they
/// overlap.
pub fn hull_distance(a: &Hull, b: &Hull) -> f64 {
    if a.penetration_depth(b) > 0.0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (x, y) in [(a, b), (b, a)] {
        for v in &x.vertices {
            for [p, q, r] in y.triangles() {
                best = best.min(point_triangle_distance(v, &p, &q, &r));
            }
        }
    }
    for (p0, p1) in edges(a) {
        for (q0, q1) in edges(b) {
            best = best.min(segment_distance(&p0, &p1, &q0, &q1));
        }
    }
    best
}

/// Lower bound on the distance between two AABB-separated hulls, used to
/// skip exact queries.
pub fn aabb_gap(a: &Hull, b: &Hull) -> f64 {
    let mut d2 = 0.0;
    for i in 0..3 {
        let g = (b.aabb.min[i] - a.aabb.max[i]).max(a.aabb.min[i] - b.aabb.max[i]).max(0.0);
        d2 += g * g;
    }
    d2.sqrt()
}
