//! Reproducible numerical-evidence scans: self-intersection conjecture,
//! convexity regions and petal openings, slit positivity, derivative
//! cross-checks, and root-order laws. Every report serializes to JSON.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use num_complex::Complex64 as Cx;

use crate::params::ParamPoint;
use crate::periodgon;
use crate::roots;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntersectionWitness {
    pub s: f64,
    pub theta: f64,
    pub side_a: usize,
    pub side_b: usize,
    pub point: [f64; 2],
    /// Groups of the two sides involved, for the II-vs-III/IV structure
    /// check.
    pub groups: [String; 2],
    pub survives_tight_tolerance: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConjectureScanReport {
    pub k: u32,
    pub grid: [usize; 2],
    pub s_min: f64,
    pub cells: usize,
    pub witnesses: Vec<IntersectionWitness>,
}

/// Run the self-intersection test over an interior grid of the slit disk.
/// Witnesses are findings, not crashes.
pub fn conjecture_selfintersection_scan(
    k: u32,
    n_s: usize,
    n_theta: usize,
    s_min: f64,
) -> ConjectureScanReport {
    let kf = k as f64;
    let cells: Vec<(f64, f64)> = (0..n_s)
        .flat_map(|i| {
            let s = s_min + (1.0 - 2.0 * s_min) * (i as f64 + 0.5) / n_s as f64;
            (0..n_theta).map(move |j| {
                // fundamental sector suffices by symmetry; keep off the rays
                let theta = -PI / kf * (j as f64 + 0.5) / n_theta as f64;
                (s, theta)
            })
        })
        .collect();
    let witnesses: Vec<IntersectionWitness> = cells
        .par_iter()
        .filter_map(|&(s, theta)| {
            let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
            let r = roots::roots_labeled(&p).ok()?;
            let pd = roots::periods(&r);
            let pg = periodgon::adhoc_periodgon(&pd).ok()?;
            let w = periodgon::self_intersects(&pg)?;
            let groups = periodgon::classify_sides(&pd, &p)
                .map(|g| {
                    let of = |side: usize| match pg.labels[side] {
                        periodgon::SideLabel::Simple(j) => format!("{:?}", g[j]),
                        periodgon::SideLabel::Merged(_, _) => "merged".to_string(),
                    };
                    [of(w.side_a), of(w.side_b)]
                })
                .unwrap_or(["?".into(), "?".into()]);
            // A finding only survives when the crossing clears ten times
            // the geometric noise floor: endpoint-grazing contacts are
            // rounding artifacts, not counterexamples.
            let diam = pg
                .vertices
                .iter()
                .flat_map(|a| pg.vertices.iter().map(move |b| (a - b).norm()))
                .fold(0.0f64, f64::max);
            let endpoint_clearance = pg
                .vertices
                .iter()
                .map(|v| (v - w.point).norm())
                .fold(f64::INFINITY, f64::min);
            let survives = w.transversal && endpoint_clearance > 10.0 * 1e-12 * diam;
            Some(IntersectionWitness {
                s,
                theta,
                side_a: w.side_a,
                side_b: w.side_b,
                point: [w.point.re, w.point.im],
                groups,
                survives_tight_tolerance: survives,
            })
        })
        .collect();
    ConjectureScanReport {
        k,
        grid: [n_s, n_theta],
        s_min,
        cells: cells.len(),
        witnesses,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub k: u32,
    pub grid: [usize; 2],
    /// Fraction of sampled cells that are non-convex.
    pub nonconvex_fraction: f64,
    /// (s, theta) samples that are non-convex.
    pub nonconvex_cells: Vec<(f64, f64)>,
    /// Estimated full sectoral opening of the non-convex petal at the slit
    /// (only meaningful for k = 3, 4).
    pub petal_opening: Option<f64>,
    /// Non-convex cells exist at the smallest sampled s (k >= 5 law).
    pub nonconvex_near_origin: bool,
}

fn is_nonconvex(k: u32, s: f64, theta: f64) -> Option<bool> {
    let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
    let r = roots::roots_labeled(&p).ok()?;
    let pd = roots::periods(&r);
    let pg = periodgon::adhoc_periodgon(&pd).ok()?;
    if pg.flags.degenerate_flat {
        return None;
    }
    Some(!pg.flags.convex)
}

/// Map the non-convexity region and estimate the petal opening at the slit
/// by bisection in theta at small s.
pub fn convexity_map(k: u32, n_s: usize, n_theta: usize) -> ConvexityReport {
    let kf = k as f64;
    let s_lo = 0.02;
    let cells: Vec<(f64, f64)> = (0..n_s)
        .flat_map(|i| {
            let s = s_lo + (0.98 - s_lo) * (i as f64 + 0.5) / n_s as f64;
            (0..n_theta).map(move |j| {
                let theta = -PI / kf * (j as f64 + 0.5) / n_theta as f64;
                (s, theta)
            })
        })
        .collect();
    let flags: Vec<((f64, f64), bool)> = cells
        .par_iter()
        .filter_map(|&(s, theta)| is_nonconvex(k, s, theta).map(|b| ((s, theta), b)))
        .collect();
    let nonconvex_cells: Vec<(f64, f64)> = flags
        .iter()
        .filter(|(_, b)| *b)
        .map(|(c, _)| *c)
        .collect();
    let nonconvex_fraction = nonconvex_cells.len() as f64 / flags.len().max(1) as f64;

    // Petal opening: at small s, bisect theta between non-convex (near the
    // slit) and convex; the petal is symmetric about the slit, so the full
    // opening is twice the boundary angle.
    let petal_opening = if k == 3 || k == 4 {
        let s = 0.04;
        let mut lo = -1e-4; // near the slit: non-convex
        let mut hi = -PI / kf + 1e-4; // deep sector: convex
        let at = |theta: f64| is_nonconvex(k, s, theta).unwrap_or(false);
        if at(lo) && !at(hi) {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if at(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo).abs() < 1e-4 {
                    break;
                }
            }
            Some(2.0 * 0.5 * (lo + hi).abs())
        } else {
            None
        }
    } else {
        None
    };

    let s_first = s_lo + (0.98 - s_lo) * 0.5 / n_s as f64;
    let nonconvex_near_origin = flags
        .iter()
        .any(|((s, _), b)| *b && (*s - s_first).abs() < 1e-12);
    ConvexityReport {
        k,
        grid: [n_s, n_theta],
        nonconvex_fraction,
        nonconvex_cells,
        petal_opening,
        nonconvex_near_origin,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlitPositivityReport {
    pub k: u32,
    pub samples: Vec<(f64, f64)>,
    pub all_positive: bool,
    pub max_value: f64,
}

/// Positivity of the slit curve for one k.
pub fn slit_positivity_check(k: u32, grid_s: &[f64]) -> Result<SlitPositivityReport, roots::RootError> {
    let samples = roots::numerical_evidence_samples(k, grid_s)?;
    let all_positive = samples.iter().all(|&(_, v)| v > 0.0);
    let max_value = samples.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    Ok(SlitPositivityReport {
        k,
        samples,
        all_positive,
        max_value,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeCheckReport {
    pub k: u32,
    pub samples: usize,
    pub max_rel_error_ds: f64,
    pub max_rel_error_dtheta: f64,
    pub sign_law_violations: usize,
}

/// Closed forms against central finite differences, plus the sign law.
pub fn derivative_crosscheck(k: u32, n_samples: usize, seed: u64) -> DerivativeCheckReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let kf = k as f64;
    let h = 1e-5;
    let mut pts = Vec::new();
    while pts.len() < n_samples {
        let s = rng.gen_range(0.08..0.92);
        let theta = rng.gen_range(-PI / kf + 0.02..-0.02);
        let j = rng.gen_range(0..=k as usize);
        // Keep clear of the discriminant locus, and only keep samples
        // where both derivatives are large enough for a 1e-5 central
        // difference to resolve them above the f64 cancellation floor.
        let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
        if let Ok(r) = roots::roots_labeled(&p) {
            if r.min_gap() > 0.25 * r.scale() {
                if let Ok((d_ds, d_dth)) = roots::dlog_lambda_from_roots(&r, j) {
                    if d_ds.norm() > 1e-4 && d_dth.norm() > 1e-4 {
                        pts.push((s, theta, j));
                    }
                }
            }
        }
    }
    let results: Vec<(f64, f64, bool)> = pts
        .par_iter()
        .map(|&(s, theta, j)| {
            let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
            let r = roots::roots_labeled(&p).unwrap();
            let (d_ds, d_dth) = match roots::dlog_lambda_from_roots(&r, j) {
                Ok(v) => v,
                Err(_) => return (0.0, 0.0, true),
            };
            let lam = |s: f64, theta: f64| {
                let q = ParamPoint::new(k, s, theta, 0.0, 1.0);
                let rr = roots::roots_labeled(&q).unwrap();
                roots::periods(&rr).lambdas[j]
            };
            let fd_ds = (lam(s + h, theta) / lam(s - h, theta)).ln() / (2.0 * h);
            let fd_dth = (lam(s, theta + h) / lam(s, theta - h)).ln() / (2.0 * h);
            let e1 = (d_ds - fd_ds).norm() / d_ds.norm().max(1e-12);
            let e2 = (d_dth - fd_dth).norm() / d_dth.norm().max(1e-12);
            // Sign law where it applies.
            let x = r.roots[j] * Cx::from_polar(1.0, -theta);
            let qualifying = (x.re <= 0.0 || (s <= 0.5 && j != 0)) && x.im.abs() > 1e-9;
            let sign_ok = if qualifying {
                d_ds.im * x.im > 0.0 && (-d_dth.re) * x.im > 0.0
            } else {
                true
            };
            (e1, e2, sign_ok)
        })
        .collect();
    DerivativeCheckReport {
        k,
        samples: n_samples,
        max_rel_error_ds: results.iter().map(|r| r.0).fold(0.0, f64::max),
        max_rel_error_dtheta: results.iter().map(|r| r.1).fold(0.0, f64::max),
        sign_law_violations: results.iter().filter(|r| !r.2).count(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootOrderReport {
    pub k: u32,
    pub chain_violations: usize,
    pub s_monotonicity_violations: usize,
    pub theta_monotonicity_violations: usize,
    pub samples: usize,
}

/// Magnitude-order chain, monotonicity of |arg(e^{-i theta} z_j)| in s,
/// and the signed theta-monotonicity of |z_j|.
pub fn root_order_report(k: u32, n_s: usize, n_theta: usize) -> RootOrderReport {
    let kf = k as f64;
    let mut chain_violations = 0usize;
    let mut s_mono = 0usize;
    let mut th_mono = 0usize;
    let mut samples = 0usize;
    let chain: Vec<usize> = {
        let mut v = vec![0usize, 1];
        let (mut lo, mut hi) = (2usize, k as usize);
        while lo <= hi {
            v.push(hi);
            if lo < hi {
                v.push(lo);
            }
            lo += 1;
            hi = hi.saturating_sub(1);
        }
        v
    };
    for jt in 0..n_theta {
        let theta = -PI / kf * (jt as f64 + 0.5) / n_theta as f64;
        let mut prev: Option<Vec<Cx>> = None;
        for is in 0..n_s {
            let s = 0.04 + 0.92 * is as f64 / (n_s.max(2) - 1) as f64;
            let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
            let r = match roots::roots_labeled(&p) {
                Ok(r) => r,
                Err(_) => continue,
            };
            samples += 1;
            for w in chain.windows(2) {
                if r.roots[w[0]].norm() >= r.roots[w[1]].norm() + 1e-12 {
                    chain_violations += 1;
                }
            }
            if let Some(prev_roots) = &prev {
                for j in 0..=k as usize {
                    let twist = Cx::from_polar(1.0, -theta);
                    let a = (prev_roots[j] * twist).arg().abs();
                    let b = (r.roots[j] * twist).arg().abs();
                    if b + 1e-9 < a {
                        s_mono += 1;
                    }
                }
            }
            prev = Some(r.roots.clone());
            // theta-monotonicity: d|z_j|/d theta has the opposite sign of
            // Im(e^{-i theta} z_j).
            let h = 1e-6;
            let rp = roots::roots_labeled(&ParamPoint::new(k, s, theta + h, 0.0, 1.0));
            let rm = roots::roots_labeled(&ParamPoint::new(k, s, theta - h, 0.0, 1.0));
            if let (Ok(rp), Ok(rm)) = (rp, rm) {
                for j in 0..=k as usize {
                    let d = (rp.roots[j].norm() - rm.roots[j].norm()) / (2.0 * h);
                    let im = (r.roots[j] * Cx::from_polar(1.0, -theta)).im;
                    if im.abs() > 1e-6 && d * im > 1e-9 {
                        th_mono += 1;
                    }
                }
            }
        }
    }
    RootOrderReport {
        k,
        chain_violations,
        s_monotonicity_violations: s_mono,
        theta_monotonicity_violations: th_mono,
        samples,
    }
}

/// Validate that any reported crossing involves a group-II side against a
/// group-III or group-IV side.
pub fn witness_matches_structure(w: &IntersectionWitness) -> bool {
    let a = w.groups[0].as_str();
    let b = w.groups[1].as_str();
    (a == "II" && (b == "III" || b == "IV")) || (b == "II" && (a == "III" || a == "IV"))
}

pub fn report_to_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("report serialization cannot fail")
}
