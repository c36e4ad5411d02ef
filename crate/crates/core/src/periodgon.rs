//! The polygon of periods and its star domain.
//!
//! Sides are the periods in the fixed clockwise label order
//! `nu_k, nu_{k-1}, ..., nu_0`; vertices are the cumulative sums ending at
//! the origin. A double root collapses its two adjacent sides into the
//! single merged parabolic side.

use num_complex::Complex64 as Cx;
use serde::Serialize;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::geom;
use crate::params::ParamPoint;
use crate::roots::{self, PeriodData, RootError};
use crate::tol;

#[derive(Debug, Error)]
pub enum PgError {
    #[error("a period is infinite (zero eigenvalue) outside the handled double-root case")]
    AllPeriodsInfinite,
    #[error("operation undefined on a degenerate flat polygon")]
    DegeneratePolygon,
    #[error("operation requires a non-self-intersecting polygon")]
    SelfIntersecting,
    #[error("double root labels {0} and {1} are not cyclically adjacent")]
    NonAdjacentParabolicPair(usize, usize),
    #[error("several periodic-domain ends: {} cut choices", .0.len())]
    MultipleEndsAmbiguity(Vec<Periodgon>),
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error("flow tracing failed: {0}")]
    Flow(String),
}

/// Which root(s) a side belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideLabel {
    Simple(usize),
    Merged(usize, usize),
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct PgFlags {
    pub convex: bool,
    pub strictly_convex: bool,
    pub self_intersecting: bool,
    pub degenerate_flat: bool,
    pub parabolic_merged: bool,
    /// One-sided slit limit: a pair of aligned opposite sides overlaps by
    /// construction and does not count as a transversal crossing.
    pub slit_limit: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Periodgon {
    pub k: u32,
    /// Period sides in clockwise label order.
    pub sides: Vec<Cx>,
    pub labels: Vec<SideLabel>,
    /// `vertices[i]` is the cumulative sum of `sides[0..=i]`; the last one
    /// closes at the origin (within tolerance) for simple roots.
    pub vertices: Vec<Cx>,
    pub flags: PgFlags,
    /// `e^{i k alpha}` of the source parameter.
    pub rotation_phase: Cx,
}

/// A self-intersection report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    pub side_a: usize,
    pub side_b: usize,
    pub point: Cx,
    pub transversal: bool,
}

/// One homoclinic-loop event of the rotated family.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HomoclinicEvent {
    /// Vertex indices of the aligned pair.
    pub pair: (usize, usize),
    /// Rotation parameter in `[0, 2 pi)` at which the pair is horizontal.
    pub alpha: f64,
    /// The chord is a polygon side (adjacent vertices).
    pub side_flag: bool,
    /// The chord passed the closed-polygon inclusion test.
    pub inside: bool,
}

/// Eigenvalue group of a side, by the quadrant structure of
/// `lambda = k(k+1)(1-s)^k + v` in the normalized frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SideGroup {
    I,
    II,
    III,
    IV,
}

fn diameter(vertices: &[Cx]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            d = d.max((vertices[i] - vertices[j]).norm());
        }
    }
    d
}

/// Build the periodgon algebraically from the period data.
pub fn adhoc_periodgon(pd: &PeriodData) -> Result<Periodgon, PgError> {
    let k = pd.k();
    let n = k as usize + 1;
    let max_nu = pd.nus.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for j in 0..n {
        if !pd.parabolic_flags[j] && pd.lambdas[j].norm() == 0.0 {
            return Err(PgError::AllPeriodsInfinite);
        }
    }

    // Clockwise label order k, k-1, ..., 0 with a merged pair collapsed.
    let mut sides = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    if let Some(pair) = pd.parabolic {
        let (a, b) = pair.labels;
        let adjacent = b == a + 1 || (a == 0 && b == k as usize);
        if !adjacent {
            return Err(PgError::NonAdjacentParabolicPair(a, b));
        }
        let (hi, lo) = if b == a + 1 { (b, a) } else { (a, b) };
        let mut j = k as isize;
        while j >= 0 {
            let ju = j as usize;
            if ju == hi {
                sides.push(pair.nu);
                labels.push(SideLabel::Merged(hi, lo));
                j -= if hi == lo + 1 { 2 } else { 1 };
            } else if ju == lo && hi != lo + 1 {
                // wrapped pair (0, k): skip the low entry, already merged
                j -= 1;
            } else {
                sides.push(pd.nus[ju]);
                labels.push(SideLabel::Simple(ju));
                j -= 1;
            }
        }
    } else {
        for j in (0..n).rev() {
            sides.push(pd.nus[j]);
            labels.push(SideLabel::Simple(j));
        }
    }

    let mut vertices = Vec::with_capacity(sides.len());
    let mut acc = Cx::new(0.0, 0.0);
    for &s in &sides {
        acc += s;
        vertices.push(acc);
    }

    let alpha = pd.point.alpha;
    let rotation_phase = Cx::from_polar(1.0, k as f64 * alpha);

    let mut pg = Periodgon {
        k,
        sides,
        labels,
        vertices,
        flags: PgFlags {
            parabolic_merged: pd.parabolic.is_some(),
            slit_limit: pd.point.on_slit() && pd.parabolic.is_none(),
            ..Default::default()
        },
        rotation_phase,
    };
    pg.flags.degenerate_flat = is_degenerate_flat(&pg, max_nu);
    if !pg.flags.degenerate_flat {
        pg.flags.self_intersecting = self_intersects(&pg).is_some();
        let turns = geom::turn_signs(&pg.sides);
        let scale = max_nu * max_nu;
        pg.flags.convex = !pg.flags.self_intersecting
            && turns.iter().all(|&t| t <= 1e-12 * scale);
        pg.flags.strictly_convex =
            pg.flags.convex && turns.iter().all(|&t| t < -1e-12 * scale);
    }
    Ok(pg)
}

/// Periodgon of a parameter point: labeled roots -> periods -> polygon.
pub fn periodgon_at(p: &ParamPoint) -> Result<Periodgon, PgError> {
    let r = roots::roots_labeled(p)?;
    let pd = roots::periods(&r);
    adhoc_periodgon(&pd)
}

fn is_degenerate_flat(pg: &Periodgon, max_nu: f64) -> bool {
    // All vertices collinear (relative to the side scale).
    if pg.vertices.len() < 3 {
        return true;
    }
    let dir = pg
        .sides
        .iter()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
        .copied()
        .unwrap();
    if dir.norm() == 0.0 {
        return true;
    }
    let u = dir / dir.norm();
    pg.vertices.iter().all(|&v| {
        let w = v / u;
        w.im.abs() <= 1e-10 * max_nu.max(w.re.abs())
    })
}

/// Exact pairwise sweep for self-intersections. Degenerate flat polygons
/// report through their flag instead.
pub fn self_intersects(pg: &Periodgon) -> Option<Witness> {
    if pg.flags.degenerate_flat {
        return None;
    }
    let n = pg.sides.len();
    let vert = |i: isize| -> Cx {
        let m = n as isize;
        let idx = ((i % m) + m) % m;
        pg.vertices[idx as usize]
    };
    for i in 0..n {
        let a = vert(i as isize - 1);
        let b = vert(i as isize);
        for j in (i + 1)..n {
            let c = vert(j as isize - 1);
            let d = vert(j as isize);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            match geom::seg_seg(a, b, c, d) {
                geom::SegSeg::Proper(point) => {
                    return Some(Witness {
                        side_a: i,
                        side_b: j,
                        point,
                        transversal: true,
                    })
                }
                geom::SegSeg::Overlap => {
                    return Some(Witness {
                        side_a: i,
                        side_b: j,
                        point: b,
                        transversal: false,
                    })
                }
                geom::SegSeg::Touch(point) => {
                    let shared = if j == i + 1 { b } else { d };
                    if !adjacent || (point - shared).norm() > 1e-12 * diameter(&pg.vertices) {
                        return Some(Witness {
                            side_a: i,
                            side_b: j,
                            point,
                            transversal: false,
                        });
                    }
                }
                geom::SegSeg::None => {}
            }
        }
    }
    None
}

/// Vertex pairs on the same horizontal line whose open chord lies inside
/// the closed polygon (sides included).
pub fn homoclinic_pairs(pg: &Periodgon) -> Result<Vec<(usize, usize)>, PgError> {
    if pg.flags.degenerate_flat {
        return Err(PgError::DegeneratePolygon);
    }
    let d = diameter(&pg.vertices);
    let mut out = Vec::new();
    let n = pg.vertices.len();
    for p in 0..n {
        for q in (p + 1)..n {
            let dv = pg.vertices[p] - pg.vertices[q];
            if dv.norm() < 1e-14 * d {
                continue;
            }
            if dv.im.abs() < tol::HORIZONTAL_ALIGN * d
                && geom::segment_in_polygon(pg.vertices[p], pg.vertices[q], &pg.vertices)
            {
                out.push((p, q));
            }
        }
    }
    Ok(out)
}

/// All rotation parameters `alpha in [0, 2 pi)` at which a vertex pair of
/// the `alpha = 0` polygon becomes horizontal, i.e.
/// `k alpha = -arg(V_p - V_q)  (mod pi)`, filtered by the inside test.
/// A degenerate flat polygon contributes the consecutive pairs along its
/// line (the centers configuration).
pub fn homoclinic_alpha_events(pg0: &Periodgon, k: u32) -> Result<Vec<HomoclinicEvent>, PgError> {
    let kf = k as f64;
    let mut events = Vec::new();
    if pg0.flags.degenerate_flat {
        let dir = pg0
            .sides
            .iter()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .copied()
            .ok_or(PgError::DegeneratePolygon)?;
        let psi = dir.arg();
        // Order vertices along the line; consecutive pairs are the loops.
        let u = Cx::from_polar(1.0, -psi);
        let mut order: Vec<usize> = (0..pg0.vertices.len()).collect();
        order.sort_by(|&a, &b| {
            (pg0.vertices[a] * u)
                .re
                .partial_cmp(&(pg0.vertices[b] * u).re)
                .unwrap()
        });
        let base = (-psi / kf).rem_euclid(PI / kf);
        for t in 0..(2 * k) {
            let mut alpha = base + t as f64 * PI / kf;
            if alpha >= TAU {
                alpha -= TAU;
            }
            for w in order.windows(2) {
                events.push(HomoclinicEvent {
                    pair: (w[0].min(w[1]), w[0].max(w[1])),
                    alpha,
                    side_flag: true,
                    inside: true,
                });
            }
        }
    } else {
        if pg0.flags.self_intersecting && !pg0.flags.slit_limit {
            // The slit-limit polygons carry a pair of aligned opposite
            // sides (one a sub-segment of the other, collinear only up to
            // rounding); that overlap is part of the construction and the
            // winding-number inside test handles it. Anywhere else a
            // transversal crossing is a genuine obstruction.
            if let Some(w) = self_intersects(pg0) {
                if w.transversal {
                    return Err(PgError::SelfIntersecting);
                }
            }
        }
        let n = pg0.vertices.len();
        let d = diameter(&pg0.vertices);
        for p in 0..n {
            for q in (p + 1)..n {
                let dv = pg0.vertices[p] - pg0.vertices[q];
                if dv.norm() < 1e-14 * d {
                    continue;
                }
                if !geom::segment_in_polygon(pg0.vertices[p], pg0.vertices[q], &pg0.vertices) {
                    continue;
                }
                let adjacent = q == p + 1 || (p == 0 && q == n - 1);
                let base = (-dv.arg() / kf).rem_euclid(PI / kf);
                for t in 0..(2 * k) {
                    let mut alpha = base + t as f64 * PI / kf;
                    if alpha >= TAU {
                        alpha -= TAU;
                    }
                    events.push(HomoclinicEvent {
                        pair: (p, q),
                        alpha,
                        side_flag: adjacent,
                        inside: true,
                    });
                }
            }
        }
    }
    events.sort_by(|a, b| {
        a.alpha
            .partial_cmp(&b.alpha)
            .unwrap()
            .then(a.pair.cmp(&b.pair))
    });
    Ok(events)
}

/// Event count per period of the rotated family: the full list covers k
/// periods, so the per-period count is `len / k`.
pub fn events_per_beta_period(events: &[HomoclinicEvent], k: u32) -> usize {
    debug_assert_eq!(events.len() % k as usize, 0);
    events.len() / k as usize
}

/// Group each simple side by the quadrant structure of its eigenvalue in
/// the normalized frame.
pub fn classify_sides(pd: &PeriodData, p: &ParamPoint) -> Result<Vec<SideGroup>, PgError> {
    if pd.parabolic.is_some() {
        return Err(PgError::DegeneratePolygon);
    }
    let kf = p.k as f64;
    let threshold = kf * (kf + 1.0) * (p.zeta * (1.0 - p.s)).powf(kf);
    let twist = Cx::from_polar(1.0, kf * p.alpha);
    Ok(pd
        .lambdas
        .iter()
        .map(|&lam| {
            let l = lam * twist; // rotate back to the alpha = 0 frame
            if l.re >= threshold - 1e-9 * (1.0 + threshold) {
                SideGroup::I
            } else if l.re <= 0.0 {
                SideGroup::II
            } else if l.im > 0.0 {
                SideGroup::III
            } else {
                SideGroup::IV
            }
        })
        .collect())
}

/// Whether each group occupies one contiguous cyclic run of labels.
pub fn groups_contiguous(groups: &[SideGroup]) -> bool {
    let n = groups.len();
    for g in [SideGroup::I, SideGroup::II, SideGroup::III, SideGroup::IV] {
        let members: Vec<usize> = (0..n).filter(|&i| groups[i] == g).collect();
        if members.len() <= 1 {
            continue;
        }
        // Count cyclic runs of the group.
        let mut runs = 0;
        for i in 0..n {
            let prev = (i + n - 1) % n;
            if groups[i] == g && groups[prev] != g {
                runs += 1;
            }
        }
        if runs > 1 {
            return false;
        }
    }
    true
}

/// Flow-defined periodgon: trace each root's cut under the rotated field
/// and read the side order from the anti-clockwise cut order. Agreement
/// with [`adhoc_periodgon`] is exactly the no-self-intersection conjecture.
/// When a periodic domain has several ends, every cyclic cut choice is
/// returned inside the error.
pub fn intrinsic_periodgon(p: &ParamPoint) -> Result<Periodgon, PgError> {
    let r = roots::roots_labeled(p)?;
    let pd = roots::periods(&r);
    let e = crate::params::eps_from_coords(p);
    let field = crate::flow::FieldSpec::from_epsilon(&e);

    // One representative position per side: simple roots, plus the merged
    // double point once.
    let mut reps: Vec<(SideLabel, Cx, Cx)> = Vec::new(); // (label, position, period)
    if let Some(pair) = pd.parabolic {
        for j in 0..r.roots.len() {
            if j == pair.labels.0 {
                reps.push((SideLabel::Merged(pair.labels.0, pair.labels.1), pair.center, pair.nu));
            } else if j != pair.labels.1 {
                reps.push((SideLabel::Simple(j), r.roots[j], pd.nus[j]));
            }
        }
    } else {
        for j in 0..r.roots.len() {
            reps.push((SideLabel::Simple(j), r.roots[j], pd.nus[j]));
        }
    }

    // Trace the cut(s) of each representative and record the angular
    // position where each cut meets the far circle.
    let positions: Vec<Cx> = reps.iter().map(|t| t.1).collect();
    let mut cut_angles: Vec<Vec<f64>> = Vec::with_capacity(reps.len());
    for i in 0..reps.len() {
        let cuts = crate::flow::cut_polylines(&field, &positions, i)
            .map_err(|e| PgError::Flow(e.to_string()))?;
        if cuts.is_empty() {
            return Err(PgError::Flow(format!(
                "no cut found for side {:?}",
                reps[i].0
            )));
        }
        cut_angles.push(cuts.iter().map(|c| c.last().unwrap().arg()).collect());
    }

    let build = |choice: &[f64]| -> Periodgon {
        // Anti-clockwise cut order; sides follow in clockwise order.
        let mut order: Vec<usize> = (0..reps.len()).collect();
        order.sort_by(|&a, &b| choice[a].partial_cmp(&choice[b]).unwrap());
        // Anchor the cyclic order so the ad hoc label 0 side comes last,
        // matching the clockwise list nu_k, ..., nu_0.
        let zero_pos = order
            .iter()
            .position(|&i| matches!(reps[i].0, SideLabel::Simple(0) | SideLabel::Merged(0, _)))
            .unwrap_or(0);
        order.rotate_left(zero_pos);
        let clockwise: Vec<usize> = order.iter().rev().cloned().collect();
        let sides: Vec<Cx> = clockwise.iter().map(|&i| reps[i].2).collect();
        let labels: Vec<SideLabel> = clockwise.iter().map(|&i| reps[i].0).collect();
        let mut vertices = Vec::with_capacity(sides.len());
        let mut acc = Cx::new(0.0, 0.0);
        for &s in &sides {
            acc += s;
            vertices.push(acc);
        }
        let mut pg = Periodgon {
            k: p.k,
            sides,
            labels,
            vertices,
            flags: PgFlags {
                parabolic_merged: pd.parabolic.is_some(),
                ..Default::default()
            },
            rotation_phase: Cx::from_polar(1.0, p.k as f64 * p.alpha),
        };
        let max_nu = pg.sides.iter().map(|s| s.norm()).fold(0.0, f64::max);
        pg.flags.degenerate_flat = is_degenerate_flat(&pg, max_nu);
        if !pg.flags.degenerate_flat {
            pg.flags.self_intersecting = self_intersects(&pg).is_some();
        }
        pg
    };

    let ambiguous: Vec<usize> = (0..reps.len())
        .filter(|&i| cut_angles[i].len() > 1)
        .collect();
    if ambiguous.is_empty() {
        let choice: Vec<f64> = cut_angles.iter().map(|v| v[0]).collect();
        Ok(build(&choice))
    } else {
        // Enumerate one ambiguous root at a time (cyclic permutations of
        // its segments); several simultaneous ambiguities sit deeper in
        // the bifurcation set than this module resolves.
        let i = ambiguous[0];
        let mut variants = Vec::new();
        for &angle in &cut_angles[i] {
            let mut choice: Vec<f64> = cut_angles.iter().map(|v| v[0]).collect();
            choice[i] = angle;
            variants.push(build(&choice));
        }
        Err(PgError::MultipleEndsAmbiguity(variants))
    }
}

/// Best cyclic alignment distance between the vertex lists of two
/// periodgons with the same side count.
pub fn polygon_distance(a: &Periodgon, b: &Periodgon) -> f64 {
    let n = a.vertices.len();
    if b.vertices.len() != n {
        return f64::INFINITY;
    }
    (0..n)
        .map(|shift| {
            // compare side sequences under a cyclic shift, rebuilding the
            // cumulative vertices from a common origin
            let mut acc = Cx::new(0.0, 0.0);
            let mut worst = 0.0f64;
            for i in 0..n {
                acc += b.sides[(i + shift) % n];
                worst = worst.max((acc - a.vertices[i]).norm());
            }
            worst
        })
        .fold(f64::INFINITY, f64::min)
}

/// A half-strip glued to one polygon side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Strip {
    /// Start vertex of the side.
    pub start: Cx,
    /// The side vector (width |side|).
    pub side: Cx,
    /// Outward (left) unit normal.
    pub normal: Cx,
    /// Identification shift along the strip boundary.
    pub shift: Cx,
}

#[derive(Debug, Clone, Serialize)]
pub struct StarDomain {
    pub base: Periodgon,
    pub strips: Vec<Strip>,
}

/// Attach the perpendicular exterior half-strips to each side.
pub fn star_domain(pg: &Periodgon) -> Result<StarDomain, PgError> {
    if pg.flags.self_intersecting {
        return Err(PgError::SelfIntersecting);
    }
    let n = pg.sides.len();
    let vert = |i: isize| -> Cx {
        let m = n as isize;
        pg.vertices[(((i % m) + m) % m) as usize]
    };
    let strips = (0..n)
        .map(|i| {
            let a = vert(i as isize - 1);
            let side = pg.sides[i];
            let normal = Cx::new(0.0, 1.0) * side / side.norm();
            Strip {
                start: a,
                side,
                normal,
                shift: side,
            }
        })
        .collect();
    Ok(StarDomain {
        base: pg.clone(),
        strips,
    })
}

impl StarDomain {
    /// Corner points of a strip truncated at length `len`.
    pub fn strip_quad(&self, i: usize, len: f64) -> [Cx; 4] {
        let s = &self.strips[i];
        [
            s.start,
            s.start + s.side,
            s.start + s.side + s.normal * len,
            s.start + s.normal * len,
        ]
    }

    /// Check that the truncated strips are pairwise disjoint except for the
    /// shared polygon vertices.
    pub fn strips_disjoint(&self, len: f64) -> bool {
        let n = self.strips.len();
        let quads: Vec<[Cx; 4]> = (0..n).map(|i| self.strip_quad(i, len)).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                for a in 0..4 {
                    for b in 0..4 {
                        let (p1, p2) = (quads[i][a], quads[i][(a + 1) % 4]);
                        let (q1, q2) = (quads[j][b], quads[j][(b + 1) % 4]);
                        if let geom::SegSeg::Proper(_) = geom::seg_seg(p1, p2, q1, q2) {
                            return false;
                        }
                    }
                }
                // Containment without edge crossings.
                let ci = (quads[i][0] + quads[i][1] + quads[i][2] + quads[i][3]) / 4.0;
                let cj = (quads[j][0] + quads[j][1] + quads[j][2] + quads[j][3]) / 4.0;
                if geom::point_in_polygon(ci, &quads[j]) || geom::point_in_polygon(cj, &quads[i]) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::{periods, roots_labeled};

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    fn synthetic(sides: Vec<Cx>) -> Periodgon {
        let mut vertices = Vec::with_capacity(sides.len());
        let mut acc = c(0.0, 0.0);
        for &s in &sides {
            acc += s;
            vertices.push(acc);
        }
        let n = sides.len() as u32;
        let mut pg = Periodgon {
            k: n - 1,
            labels: (0..n as usize).rev().map(SideLabel::Simple).collect(),
            sides,
            vertices,
            flags: PgFlags::default(),
            rotation_phase: c(1.0, 0.0),
        };
        pg.flags.self_intersecting = self_intersects(&pg).is_some();
        pg
    }

    #[test]
    fn regular_polygon_at_s1() {
        for k in 2u32..=5 {
            let p = ParamPoint::new(k, 1.0, 0.3, 0.1, 1.0);
            let pd = periods(&roots_labeled(&p).unwrap());
            let pg = adhoc_periodgon(&pd).unwrap();
            let lens: Vec<f64> = pg.sides.iter().map(|s| s.norm()).collect();
            let spread = lens.iter().cloned().fold(0.0, f64::max)
                - lens.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-9, "k={k}: side spread {spread}");
            assert!(pg.flags.strictly_convex);
            assert!(!pg.flags.self_intersecting);
            // closure
            assert!(pg.vertices.last().unwrap().norm() < 1e-9 * lens[0]);
            // negative orientation
            assert!(geom::signed_area2(&pg.vertices) < 0.0);
            // interior angle sum (k-1) pi
            let sum = geom::interior_angle_sum(&pg.vertices);
            assert!((sum - (k as f64 - 1.0) * PI).abs() < 1e-6);
        }
    }

    #[test]
    fn degenerate_at_s0() {
        for k in [2u32, 4] {
            let kf = k as f64;
            let p = ParamPoint::new(k, 0.0, 0.0, 0.0, 1.0)
                .with_branch(crate::params::Branch::SlitBelow(0))
                .unwrap();
            let pd = periods(&roots_labeled(&p).unwrap());
            let pg = adhoc_periodgon(&pd).unwrap();
            assert!(pg.flags.degenerate_flat);
            assert!(self_intersects(&pg).is_none());
            // k sides 2 pi i/(k(k+1)) and one side -2 pi i/(k+1)
            let small = c(0.0, TAU / (kf * (kf + 1.0)));
            let count_small = pg
                .sides
                .iter()
                .filter(|s| (*s - &small).norm() < 1e-9)
                .count();
            assert_eq!(count_small, k as usize, "k={k}");
            let big = c(0.0, -TAU / (kf + 1.0));
            assert_eq!(
                pg.sides.iter().filter(|s| (*s - &big).norm() < 1e-9).count(),
                1
            );
            assert!(matches!(homoclinic_pairs(&pg), Err(PgError::DegeneratePolygon)));
        }
    }

    #[test]
    fn parabolic_merge_has_one_side_less() {
        let p = ParamPoint::new(2, 0.5, 0.0, 0.0, 1.0);
        let pd = periods(&roots_labeled(&p).unwrap());
        let pg = adhoc_periodgon(&pd).unwrap();
        assert!(pg.flags.parabolic_merged);
        assert_eq!(pg.sides.len(), 2);
        assert!(!pg.flags.self_intersecting);
        let merged = pg
            .labels
            .iter()
            .position(|l| matches!(l, SideLabel::Merged(_, _)))
            .unwrap();
        let want = c(0.0, -8.0 * PI / 9.0);
        assert!((pg.sides[merged] - want).norm() < 1e-9);
        // closure still holds
        assert!(pg.vertices.last().unwrap().norm() < 1e-9);
    }

    #[test]
    fn rotation_covariance() {
        let k = 3u32;
        let alpha = 0.47;
        let a = periodgon_at(&ParamPoint::new(k, 0.6, -0.5, 0.0, 1.0)).unwrap();
        let b = periodgon_at(&ParamPoint::new(k, 0.6, -0.5, alpha, 1.0)).unwrap();
        let w = Cx::from_polar(1.0, k as f64 * alpha);
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            assert!((vb - w * va).norm() < 1e-10);
        }
    }

    #[test]
    fn reflection_symmetry_on_odd_rays() {
        // theta = (2m-1) pi / k: the polygon is symmetric across an axis of
        // direction e^{i k alpha}, so the side multiset is invariant under
        // s -> -e^{2 i k alpha} conj(s).
        let k = 4u32;
        let alpha = 0.2;
        let theta = -PI / k as f64;
        let pg = periodgon_at(&ParamPoint::new(k, 0.55, theta, alpha, 1.0)).unwrap();
        let axis2 = Cx::from_polar(1.0, 2.0 * k as f64 * alpha);
        for v in &pg.sides {
            let reflected = -axis2 * v.conj();
            let hit = pg.sides.iter().any(|w| (w - reflected).norm() < 1e-8);
            assert!(hit, "side {v} lacks a mirror partner");
        }
    }

    #[test]
    fn square_and_bowtie_intersection() {
        let square = synthetic(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]);
        assert!(self_intersects(&square).is_none());
        // Bowtie: sides ordered to cross.
        let bowtie = synthetic(vec![c(1.0, 1.0), c(0.0, -1.0), c(-1.0, 1.0), c(0.0, -1.0)]);
        let w = self_intersects(&bowtie).expect("bowtie must self-intersect");
        assert!(w.transversal);
    }

    #[test]
    fn homoclinic_pairs_on_square_and_triangle() {
        // Clockwise unit square starting at (0,0): vertices (0,1),(1,1),(1,0),(0,0)
        let square = synthetic(vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)]);
        let pairs = homoclinic_pairs(&square).unwrap();
        // vertices: (0,1),(1,1),(1,0),(0,0): horizontal pairs (0,1) and (2,3)
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);

        let h = 3f64.sqrt() / 2.0;
        let tri = synthetic(vec![c(-0.5, h), c(-0.5, -h), c(1.0, 0.0)]);
        let pairs = homoclinic_pairs(&tri).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn event_count_regular() {
        // s=1: strictly convex regular polygon: k(k+1) events per period.
        for k in 2u32..=5 {
            let pg = periodgon_at(&ParamPoint::new(k, 1.0, 0.0, 0.0, 1.0)).unwrap();
            let ev = homoclinic_alpha_events(&pg, k).unwrap();
            assert_eq!(
                events_per_beta_period(&ev, k),
                (k * (k + 1)) as usize,
                "k={k}"
            );
            for e in &ev {
                // invariant: the rotated chord is horizontal
                let dv = pg.vertices[e.pair.0] - pg.vertices[e.pair.1];
                let rotated = dv * Cx::from_polar(1.0, k as f64 * e.alpha);
                assert!(rotated.im.abs() < 1e-9 * dv.norm());
            }
        }
    }

    #[test]
    fn event_count_synthetic_polygons() {
        // Strictly convex pentagon: 20 events per period at k=4.
        let k = 4u32;
        let penta: Vec<Cx> = (0..5)
            .map(|i| {
                let a0 = -TAU * i as f64 / 5.0;
                let a1 = -TAU * (i as f64 + 1.0) / 5.0;
                Cx::from_polar(1.0, a1) - Cx::from_polar(1.0, a0)
            })
            .collect();
        let pg = synthetic(penta);
        let ev = homoclinic_alpha_events(&pg, k).unwrap();
        assert_eq!(events_per_beta_period(&ev, k), 20);

        // Non-convex dart with one outside diagonal: fewer events. The
        // cumulative vertices are (-1,-1), (0,2), (1,-1), (0,0) with the
        // reflex notch at the origin; the chord between the two wings at
        // height -1 passes below the notch, outside the polygon.
        let dart = synthetic(vec![c(-1.0, -1.0), c(1.0, 3.0), c(1.0, -3.0), c(-1.0, 1.0)]);
        assert!(self_intersects(&dart).is_none());
        let k = 3u32;
        let ev = homoclinic_alpha_events(&dart, k).unwrap();
        assert_eq!(events_per_beta_period(&ev, k), 10, "12 minus the outside pair");
        let n_pairs_inside: usize = ev
            .iter()
            .map(|e| e.pair)
            .collect::<std::collections::BTreeSet<_>>()
            .len();
        assert_eq!(n_pairs_inside, 5);
    }

    #[test]
    fn degenerate_centers_events() {
        // s=0: events exactly at alpha = (2m+1) pi /(2k), k consecutive pairs.
        for k in [2u32, 3] {
            let kf = k as f64;
            let p0 = ParamPoint::new(k, 0.0, 0.0, 0.0, 1.0)
                .with_branch(crate::params::Branch::SlitBelow(0))
                .unwrap();
            let pg = periodgon_at(&p0).unwrap();
            let ev = homoclinic_alpha_events(&pg, k).unwrap();
            let alphas: std::collections::BTreeSet<i64> = ev
                .iter()
                .map(|e| (e.alpha / (PI / (2.0 * kf)) + 0.5).floor() as i64)
                .collect();
            for a in &alphas {
                assert!(a % 2 == 1, "k={k}: alpha multiple {a} should be odd");
            }
            let per_alpha = ev.len() / alphas.len();
            assert_eq!(per_alpha, k as usize, "k homoclinic loops per event");
        }
    }

    #[test]
    fn side_groups() {
        // s=0: z0's side in group II, others in group I.
        let k = 4u32;
        let p = ParamPoint::new(k, 0.0, 0.0, 0.0, 1.0)
            .with_branch(crate::params::Branch::SlitBelow(0))
            .unwrap();
        let pd = periods(&roots_labeled(&p).unwrap());
        let groups = classify_sides(&pd, &p).unwrap();
        assert_eq!(groups[0], SideGroup::II);
        for j in 1..=k as usize {
            assert_eq!(groups[j], SideGroup::I);
        }
        assert!(groups_contiguous(&groups));

        // k=8 interior sample: groups contiguous.
        let p = ParamPoint::new(8, 0.4, -0.1, 0.0, 1.0);
        let pd = periods(&roots_labeled(&p).unwrap());
        let groups = classify_sides(&pd, &p).unwrap();
        assert!(groups_contiguous(&groups));
    }

    #[test]
    fn star_strips() {
        let square = synthetic(vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)]);
        let star = star_domain(&square).unwrap();
        assert_eq!(star.strips.len(), 4);
        for s in &star.strips {
            assert!((s.side.norm() - 1.0).abs() < 1e-14);
            assert!((s.shift - s.side).norm() < 1e-14);
        }
        assert!(star.strips_disjoint(10.0));

        for k in [3u32, 4] {
            let pg = periodgon_at(&ParamPoint::new(k, 1.0, 0.0, 0.0, 1.0)).unwrap();
            let max_nu = pg.sides.iter().map(|s| s.norm()).fold(0.0, f64::max);
            let star = star_domain(&pg).unwrap();
            assert!(star.strips_disjoint(10.0 * max_nu));
        }
    }

    #[test]
    fn intrinsic_matches_adhoc() {
        // Regular case at s = 1.
        let p = ParamPoint::new(2, 1.0, 0.0, 0.0, 1.0);
        let adhoc = periodgon_at(&p).unwrap();
        let intr = intrinsic_periodgon(&p).unwrap();
        assert!(polygon_distance(&adhoc, &intr) < 1e-9);

        // Generic interior point, k = 3.
        let p = ParamPoint::new(3, 0.7, -0.4, 0.0, 1.0);
        let adhoc = periodgon_at(&p).unwrap();
        let intr = intrinsic_periodgon(&p).unwrap();
        assert!(
            polygon_distance(&adhoc, &intr) < 1e-6,
            "distance {}",
            polygon_distance(&adhoc, &intr)
        );
        assert!(!intr.flags.self_intersecting);
    }

    #[test]
    fn intrinsic_parabolic_merged_side() {
        let k = 4u32;
        let p = ParamPoint::new(k, 0.5, 0.0, 0.0, 1.0);
        let intr = intrinsic_periodgon(&p).unwrap();
        assert!(intr.flags.parabolic_merged);
        assert_eq!(intr.sides.len(), k as usize);
        let kf = k as f64;
        let want = c(0.0, -4.0 * PI * (kf - 1.0) * 2f64.powi(k as i32) / (3.0 * kf * (kf + 1.0)));
        let merged = intr
            .labels
            .iter()
            .position(|l| matches!(l, SideLabel::Merged(_, _)))
            .unwrap();
        assert!((intr.sides[merged] - want).norm() < 1e-9);
        // the traced polygon still closes and matches the ad hoc one
        let adhoc = periodgon_at(&p).unwrap();
        assert!(polygon_distance(&adhoc, &intr) < 1e-6);
    }

    #[test]
    fn pair_invariance_under_similarity() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(0.1f64..10.0, -5.0f64..5.0, -5.0f64..5.0),
                |(scale, tx, ty)| {
                    let tri = synthetic(vec![
                        c(-0.5, 3f64.sqrt() / 2.0),
                        c(-0.5, -3f64.sqrt() / 2.0),
                        c(1.0, 0.0),
                    ]);
                    let moved = {
                        let sides: Vec<Cx> = tri.sides.iter().map(|s| s * scale).collect();
                        let mut pg = synthetic(sides);
                        for v in pg.vertices.iter_mut() {
                            *v += c(tx, ty);
                        }
                        pg
                    };
                    let a = homoclinic_pairs(&tri).unwrap();
                    let b = homoclinic_pairs(&moved).unwrap();
                    prop_assert_eq!(a, b);
                    Ok(())
                },
            )
            .unwrap();
    }
}
