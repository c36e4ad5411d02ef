//! Planar primitives used by the period polygons: robust orientation,
//! segment intersection, point-in-polygon with inclusive boundary, and
//! polygon shape classification.

use num_complex::Complex64 as Cx;
use robust::{orient2d, Coord};

fn coord(z: Cx) -> Coord<f64> {
    Coord { x: z.re, y: z.im }
}

/// Robust sign of the turn a -> b -> c: positive = counterclockwise.
pub fn orient(a: Cx, b: Cx, c: Cx) -> f64 {
    orient2d(coord(a), coord(b), coord(c))
}

fn on_segment_collinear(a: Cx, b: Cx, p: Cx) -> bool {
    p.re >= a.re.min(b.re) - 0.0
        && p.re <= a.re.max(b.re)
        && p.im >= a.im.min(b.im)
        && p.im <= a.im.max(b.im)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegSeg {
    None,
    /// Interiors cross transversally.
    Proper(Cx),
    /// Endpoint contact or endpoint-on-interior contact.
    Touch(Cx),
    /// Collinear with a common sub-segment of positive length.
    Overlap,
}

/// Classify the intersection of segments `[a,b]` and `[c,d]`.
pub fn seg_seg(a: Cx, b: Cx, c: Cx, d: Cx) -> SegSeg {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);

    if o1 == 0.0 && o2 == 0.0 {
        // Collinear: check extent overlap.
        let pts = [c, d];
        let mut touching = None;
        let mut overlap_len = 0.0f64;
        for &p in &pts {
            if on_segment_collinear(a, b, p) {
                touching = Some(p);
            }
        }
        for &p in &[a, b] {
            if on_segment_collinear(c, d, p) {
                touching = Some(p);
            }
        }
        if touching.is_none() {
            return SegSeg::None;
        }
        // Project on the dominant axis to measure the shared extent.
        let dir = b - a;
        let t = |p: Cx| {
            if dir.re.abs() >= dir.im.abs() {
                p.re
            } else {
                p.im
            }
        };
        let (lo1, hi1) = (t(a).min(t(b)), t(a).max(t(b)));
        let (lo2, hi2) = (t(c).min(t(d)), t(c).max(t(d)));
        let lo = lo1.max(lo2);
        let hi = hi1.min(hi2);
        overlap_len = (hi - lo).max(overlap_len);
        if overlap_len > 0.0 {
            return SegSeg::Overlap;
        }
        return SegSeg::Touch(touching.unwrap());
    }

    let proper = (o1 > 0.0) != (o2 > 0.0)
        && (o3 > 0.0) != (o4 > 0.0)
        && o1 != 0.0
        && o2 != 0.0
        && o3 != 0.0
        && o4 != 0.0;
    let touching = (o1 == 0.0 && on_segment_collinear(a, b, c))
        || (o2 == 0.0 && on_segment_collinear(a, b, d))
        || (o3 == 0.0 && on_segment_collinear(c, d, a))
        || (o4 == 0.0 && on_segment_collinear(c, d, b));

    if proper || touching {
        // Line-line intersection point (f64 is fine for reporting).
        let r = b - a;
        let s = d - c;
        let denom = r.re * s.im - r.im * s.re;
        let point = if denom.abs() > 0.0 {
            let q = c - a;
            let t = (q.re * s.im - q.im * s.re) / denom;
            a + r * t
        } else if o1 == 0.0 {
            c
        } else {
            a
        };
        return if proper {
            SegSeg::Proper(point)
        } else {
            SegSeg::Touch(point)
        };
    }
    SegSeg::None
}

/// True when `p` lies on the closed segment `[a,b]`.
pub fn point_on_segment(a: Cx, b: Cx, p: Cx) -> bool {
    orient(a, b, p) == 0.0 && on_segment_collinear(a, b, p)
}

/// Point-in-polygon with the boundary counted as inside. Uses the winding
/// number, so a doubly-traversed collinear edge (the slit-limit polygons)
/// cancels instead of corrupting the parity.
pub fn point_in_polygon(p: Cx, vertices: &[Cx]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        if point_on_segment(vertices[i], vertices[(i + 1) % n], p) {
            return true;
        }
    }
    let mut winding = 0i64;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if a.im <= p.im {
            if b.im > p.im && orient(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b.im <= p.im && orient(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Distance from a point to a segment.
pub fn dist_point_segment(p: Cx, a: Cx, b: Cx) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Distance from a point to the polygon boundary.
pub fn dist_to_boundary(p: Cx, vertices: &[Cx]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| dist_point_segment(p, vertices[i], vertices[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// True when the closed segment `[a,b]` stays inside the closed polygon:
/// no proper crossing with any edge and all sampled interior points inside
/// (points within rounding distance of the boundary count as inside, since
/// sides are included).
pub fn segment_in_polygon(a: Cx, b: Cx, vertices: &[Cx]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let u = vertices[i];
        let v = vertices[(i + 1) % n];
        if let SegSeg::Proper(_) = seg_seg(a, b, u, v) {
            return false;
        }
    }
    let diam = vertices
        .iter()
        .flat_map(|p| vertices.iter().map(move |q| (p - q).norm()))
        .fold(0.0f64, f64::max);
    // Sample the open segment; touching contacts split it, so probe several
    // interior points rather than just the midpoint.
    for t in [0.5, 0.25, 0.75, 0.125, 0.875, 0.375, 0.625] {
        let p = a + (b - a) * t;
        if !point_in_polygon(p, vertices) && dist_to_boundary(p, vertices) > 1e-12 * diam {
            return false;
        }
    }
    true
}

/// Twice the signed area; negative for clockwise orientation.
pub fn signed_area2(vertices: &[Cx]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        acc += a.re * b.im - b.re * a.im;
    }
    acc
}

/// Cross product `sides[i] x sides[i+1]` for every consecutive pair
/// (cyclic). All non-positive = clockwise convex.
pub fn turn_signs(sides: &[Cx]) -> Vec<f64> {
    let n = sides.len();
    (0..n)
        .map(|i| {
            let u = sides[i];
            let v = sides[(i + 1) % n];
            u.re * v.im - u.im * v.re
        })
        .collect()
}

/// Interior angle sum of a simple polygon given in clockwise order:
/// the interior angle at a vertex is `pi + arg(v/u)` for incoming side `u`
/// and outgoing side `v` (interior on the right).
pub fn interior_angle_sum(vertices: &[Cx]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let prev = vertices[(i + n - 1) % n];
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        let u = cur - prev;
        let v = next - cur;
        acc += std::f64::consts::PI + (v / u).arg();
    }
    acc
}
