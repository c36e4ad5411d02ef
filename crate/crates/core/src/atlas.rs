//! Bifurcation atlas: sweep the slit parameter disk at fixed scale,
//! collect homoclinic events per cell, and tag their codimension.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::params::{eps_from_coords, Branch, ParamPoint};
use crate::periodgon::{self, HomoclinicEvent};
use crate::roots::{self, PeriodData};
use crate::tol;

/// Codimension tag of one homoclinic event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodimTag {
    C1,
    C2Parabolic,
    C2DoubleParallel,
    C2TripleAligned,
    C2Reversible(u32),
    C2Centers,
    C2Potential,
    C3ParabolicReversible,
}

impl CodimTag {
    pub fn as_str(&self) -> String {
        match self {
            CodimTag::C1 => "C1".into(),
            CodimTag::C2Parabolic => "C2_parabolic".into(),
            CodimTag::C2DoubleParallel => "C2_double_parallel".into(),
            CodimTag::C2TripleAligned => "C2_triple_aligned".into(),
            CodimTag::C2Reversible(n) => format!("C2_reversible({n})"),
            CodimTag::C2Centers => "C2_centers".into(),
            CodimTag::C2Potential => "C2_potential".into(),
            CodimTag::C3ParabolicReversible => "C3_parabolic_reversible".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaggedEvent {
    pub p: usize,
    pub q: usize,
    pub alpha: f64,
    pub tag: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasRecord {
    pub s: f64,
    pub theta: f64,
    pub branch: String,
    pub convex: bool,
    pub self_intersecting: bool,
    pub degenerate: bool,
    pub parabolic: bool,
    pub discriminant_abs: f64,
    pub events: Vec<TaggedEvent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Atlas {
    pub k: u32,
    pub grid: [usize; 2],
    pub records: Vec<AtlasRecord>,
}

fn branch_string(b: Branch) -> String {
    match b {
        Branch::Interior => "interior".into(),
        Branch::SlitAbove(m) => format!("above:{m}"),
        Branch::SlitBelow(m) => format!("below:{m}"),
    }
}

/// Policy for cells falling exactly on a slit ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchPolicy {
    /// Skip exact slit cells.
    Skip,
    /// Evaluate both one-sided limits (two records per slit cell).
    BothSides,
}

/// Classify the events of one parameter cell.
pub fn classify_codimension(
    events: &[HomoclinicEvent],
    p: &ParamPoint,
    pd: &PeriodData,
    self_intersecting: bool,
) -> Vec<TaggedEvent> {
    classify_codimension_with_tol(events, p, pd, self_intersecting, tol::EVENT_ALPHA_COINCIDE)
}

/// Classification with an explicit coincidence tolerance for events
/// sharing a rotation angle.
pub fn classify_codimension_with_tol(
    events: &[HomoclinicEvent],
    p: &ParamPoint,
    pd: &PeriodData,
    self_intersecting: bool,
    alpha_coincide: f64,
) -> Vec<TaggedEvent> {
    let k = p.k;
    let kf = k as f64;
    let parabolic = pd.parabolic.is_some();
    let degenerate_centers = p.s == 0.0;
    // Reversible rays: theta = l pi / k (within tolerance).
    let theta_ratio = p.theta * kf / PI;
    let on_reversible_ray = (theta_ratio - theta_ratio.round()).abs() < 1e-9;
    let ell_even = (theta_ratio.round() as i64).rem_euclid(2) == 0;
    let n_reversible = if ell_even {
        if p.s < 0.5 {
            k / 2 + 1
        } else {
            k / 2
        }
    } else {
        k.div_ceil(2)
    };

    // Group events by coincident alpha.
    let mut tagged: Vec<TaggedEvent> = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        let coincident: Vec<&HomoclinicEvent> = events
            .iter()
            .enumerate()
            .filter(|(j, o)| *j != i && (o.alpha - e.alpha).abs() < alpha_coincide)
            .map(|(_, o)| o)
            .collect();
        // alpha at a reversible position: alpha = (2m+1) pi / (2k) modulo
        // the quotient, on a reversible ray.
        let rev_pos = {
            let ratio = e.alpha * 2.0 * kf / PI;
            on_reversible_ray && ((ratio.round() as i64).rem_euclid(2) == 1)
                && (ratio - ratio.round()).abs() < 1e-6
        };
        let tag = if self_intersecting {
            CodimTag::C2Potential
        } else if parabolic && rev_pos {
            CodimTag::C3ParabolicReversible
        } else if parabolic {
            CodimTag::C2Parabolic
        } else if degenerate_centers && rev_pos {
            CodimTag::C2Centers
        } else if rev_pos && !coincident.is_empty() {
            CodimTag::C2Reversible(n_reversible)
        } else if !coincident.is_empty() {
            // Shared vertex means three aligned vertices; otherwise two
            // parallel chords.
            let shares_vertex = coincident.iter().any(|o| {
                o.pair.0 == e.pair.0
                    || o.pair.0 == e.pair.1
                    || o.pair.1 == e.pair.0
                    || o.pair.1 == e.pair.1
            });
            if shares_vertex {
                CodimTag::C2TripleAligned
            } else {
                CodimTag::C2DoubleParallel
            }
        } else {
            CodimTag::C1
        };
        tagged.push(TaggedEvent {
            p: e.pair.0,
            q: e.pair.1,
            alpha: e.alpha,
            tag: tag.as_str(),
        });
    }
    tagged.sort_by(|a, b| {
        a.alpha
            .partial_cmp(&b.alpha)
            .unwrap()
            .then(a.p.cmp(&b.p))
            .then(a.q.cmp(&b.q))
    });
    tagged
}

fn record_for(p: &ParamPoint) -> AtlasRecord {
    let e = eps_from_coords(p);
    let disc = roots::discriminant(&e).norm();
    let base = AtlasRecord {
        s: p.s,
        theta: p.theta,
        branch: branch_string(p.branch),
        convex: false,
        self_intersecting: false,
        degenerate: false,
        parabolic: false,
        discriminant_abs: disc,
        events: Vec::new(),
        error: None,
    };
    let fill = |mut rec: AtlasRecord, err: String| {
        rec.error = Some(err);
        rec
    };
    let r = match roots::roots_labeled(p) {
        Ok(r) => r,
        Err(e) => return fill(base, e.to_string()),
    };
    let pd = roots::periods(&r);
    let pg = match periodgon::adhoc_periodgon(&pd) {
        Ok(pg) => pg,
        Err(e) => return fill(base, e.to_string()),
    };
    let mut rec = base;
    rec.convex = pg.flags.convex;
    rec.self_intersecting = pg.flags.self_intersecting;
    let potential = pg.flags.self_intersecting && !pg.flags.slit_limit;
    rec.degenerate = pg.flags.degenerate_flat;
    rec.parabolic = pg.flags.parabolic_merged;
    // Events are computed on the alpha = 0 polygon.
    let pg0 = if p.alpha == 0.0 {
        pg
    } else {
        let mut q = *p;
        q.alpha = 0.0;
        match periodgon::periodgon_at(&q) {
            Ok(pg) => pg,
            Err(e) => return fill(rec, e.to_string()),
        }
    };
    match periodgon::homoclinic_alpha_events(&pg0, p.k) {
        Ok(events) => {
            rec.events = classify_codimension(&events, p, &pd, potential);
        }
        Err(e) => return fill(rec, e.to_string()),
    }
    rec
}

/// Sweep the slit disk on an `n_s x n_theta` grid at `zeta = 1`.
/// Cell failures are recorded in the cell, never aborting the sweep.
pub fn scan_atlas(k: u32, n_s: usize, n_theta: usize, policy: BranchPolicy) -> Atlas {
    let kf = k as f64;
    let mut points: Vec<ParamPoint> = Vec::new();
    for i in 0..n_s {
        // stay off the degenerate boundary values
        let s = (i as f64 + 0.5) / n_s as f64;
        for j in 0..n_theta {
            let theta = -TAU * j as f64 / n_theta as f64;
            let p = ParamPoint::new(k, s, theta, 0.0, 1.0);
            if p.on_slit() {
                match policy {
                    BranchPolicy::Skip => continue,
                    BranchPolicy::BothSides => {
                        let m = p.slit_index().unwrap();
                        points.push(p.with_branch(Branch::SlitAbove(m)).unwrap());
                        points.push(p.with_branch(Branch::SlitBelow(m)).unwrap());
                    }
                }
            } else {
                let _ = kf;
                points.push(p);
            }
        }
    }
    let records: Vec<AtlasRecord> = points.par_iter().map(record_for).collect();
    Atlas {
        k,
        grid: [n_s, n_theta],
        records,
    }
}

/// Atlas record at a single cell (useful for spot checks and the CLI).
pub fn scan_cell(p: &ParamPoint) -> AtlasRecord {
    record_for(p)
}

/// Serialize to the versioned JSON schema.
pub fn to_json(atlas: &Atlas) -> String {
    serde_json::to_string_pretty(atlas).expect("atlas serialization cannot fail")
}

pub fn from_json(text: &str) -> Result<Atlas, serde_json::Error> {
    serde_json::from_str(text)
}

/// CSV with one row per event.
pub fn to_csv(atlas: &Atlas) -> String {
    let mut out = String::from("k,s,theta,branch,p,q,alpha,tag\n");
    for rec in &atlas.records {
        for e in &rec.events {
            out.push_str(&format!(
                "{},{:.12},{:.12},{},{},{},{:.12},{}\n",
                atlas.k, rec.s, rec.theta, rec.branch, e.p, e.q, e.alpha, e.tag
            ));
        }
    }
    out
}

/// Predicted simultaneous-event count on a reversible ray.
pub fn reversible_count(k: u32, ell_even: bool, s: f64) -> u32 {
    if ell_even {
        if s < 0.5 {
            k / 2 + 1
        } else {
            k / 2
        }
    } else {
        k.div_ceil(2)
    }
}

/// Mirror-image check data: events of the conjugate cell.
pub fn mirrored_alphas(events: &[TaggedEvent], k: u32) -> Vec<f64> {
    // Under theta -> -theta (conjugation), events reflect alpha -> -alpha.
    let kf = k as f64;
    let mut v: Vec<f64> = events
        .iter()
        .map(|e| (-e.alpha).rem_euclid(PI / kf))
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn event_alphas_mod(events: &[TaggedEvent], k: u32) -> Vec<f64> {
    let kf = k as f64;
    let mut v: Vec<f64> = events.iter().map(|e| e.alpha.rem_euclid(PI / kf)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodgon::homoclinic_alpha_events;
    use num_complex::Complex64 as Cx;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn atlas_roundtrip() {
        let atlas = scan_atlas(2, 6, 8, BranchPolicy::BothSides);
        let text = to_json(&atlas);
        let back = from_json(&text).unwrap();
        assert_eq!(back.records.len(), atlas.records.len());
        assert_eq!(back.k, 2);
        let csv = to_csv(&atlas);
        assert!(csv.lines().count() > 1);
        // empty atlas serializes fine
        let empty = Atlas {
            k: 3,
            grid: [0, 0],
            records: vec![],
        };
        assert!(from_json(&to_json(&empty)).is_ok());
    }

    #[test]
    fn generic_cells_carry_c1_only() {
        let atlas = scan_atlas(2, 8, 12, BranchPolicy::Skip);
        let mut c1 = 0usize;
        for rec in &atlas.records {
            assert!(rec.error.is_none(), "{:?}", rec.error);
            for e in &rec.events {
                if e.tag == "C1" {
                    c1 += 1;
                } else {
                    // the grid offsets keep cells off all strata
                    panic!("unexpected tag {} at s={} theta={}", e.tag, rec.s, rec.theta);
                }
            }
        }
        assert!(c1 > 0);
    }

    #[test]
    fn parabolic_cell_tags() {
        let k = 4u32;
        let p = ParamPoint::new(k, 0.5, 0.0, 0.0, 1.0);
        let rec = scan_cell(&p);
        assert!(rec.parabolic);
        assert!(rec.events.iter().any(|e| e.tag == "C2_parabolic"));
        assert!(rec
            .events
            .iter()
            .any(|e| e.tag == "C3_parabolic_reversible"));
        // C3 events sit at alpha = (2m+1) pi/(2k)
        for e in &rec.events {
            if e.tag == "C3_parabolic_reversible" {
                let ratio = e.alpha * 2.0 * k as f64 / PI;
                assert!((ratio - ratio.round()).abs() < 1e-6);
                assert_eq!((ratio.round() as i64).rem_euclid(2), 1);
            }
        }
    }

    #[test]
    fn synthetic_double_tags() {
        use crate::periodgon::{PgFlags, Periodgon, SideLabel};
        // Hexagon with two parallel inside diagonals at the same alpha.
        let verts = [
            c(0.0, 0.0),
            c(2.0, 0.5),
            c(4.0, 0.0),
            c(4.2, -2.0),
            c(2.0, -2.5),
            c(-0.2, -2.0),
        ];
        let n = verts.len();
        let sides: Vec<Cx> = (0..n).map(|i| verts[(i + 1) % n] - verts[i]).collect();
        // rebuild in the cumulative convention (vertices shifted so last = 0)
        let mut vertices = Vec::new();
        let mut acc = c(0.0, 0.0);
        for s in &sides {
            acc += s;
            vertices.push(acc);
        }
        let mut pg = Periodgon {
            k: (n - 1) as u32,
            sides,
            labels: (0..n).rev().map(SideLabel::Simple).collect(),
            vertices,
            flags: PgFlags::default(),
            rotation_phase: c(1.0, 0.0),
        };
        pg.flags.convex = false;
        let k = 3u32;
        let events = homoclinic_alpha_events(&pg, k).unwrap();
        let p = ParamPoint::new(k, 0.3, -0.4, 0.0, 1.0);
        let r = crate::roots::roots_labeled(&p).unwrap();
        let pd = crate::roots::periods(&r);
        let tagged = classify_codimension(&events, &p, &pd, false);
        // vertices 0-4 and 1-5 pairs (in the cumulative indexing) give
        // parallel chords; expect at least one double-parallel tag.
        assert!(
            tagged.iter().any(|e| e.tag == "C2_double_parallel"
                || e.tag == "C2_triple_aligned"),
            "expected a coincidence tag, got {:?}",
            tagged.iter().map(|e| e.tag.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn c1_surface_continuity() {
        // Along a path in (s, theta) avoiding the strata, each C1 event's
        // alpha varies continuously: consecutive cells' event sets match
        // within ten times the grid resolution.
        let k = 2u32;
        let n = 24;
        let step = 0.3 / n as f64;
        let mut prev: Option<Vec<f64>> = None;
        for i in 0..=n {
            let s = 0.55 + 0.3 * i as f64 / n as f64;
            let p = ParamPoint::new(k, s, -0.9, 0.0, 1.0);
            let rec = scan_cell(&p);
            assert!(rec.error.is_none());
            let mut alphas: Vec<f64> = rec.events.iter().map(|e| e.alpha).collect();
            alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(prev_alphas) = &prev {
                assert_eq!(prev_alphas.len(), alphas.len());
                for (a, b) in prev_alphas.iter().zip(&alphas) {
                    assert!((a - b).abs() < 10.0 * step, "alpha jump {} -> {}", a, b);
                }
            }
            prev = Some(alphas);
        }
    }

    #[test]
    fn record_count_accounting() {
        // grid minus slit cells under Skip, plus two one-sided records per
        // slit cell under BothSides
        let (k, n_s, n_theta) = (3u32, 8usize, 12usize);
        let skip = scan_atlas(k, n_s, n_theta, BranchPolicy::Skip);
        let both = scan_atlas(k, n_s, n_theta, BranchPolicy::BothSides);
        // slit columns: theta = -2 pi j / 12 on a ray 2 pi m / 3 <=> j in
        // {0, 4, 8}; slit rows: s = (i + 0.5)/8 <= 1/2 <=> i < 4
        let slit_cells = 3 * 4;
        assert_eq!(skip.records.len(), n_s * n_theta - slit_cells);
        assert_eq!(both.records.len(), n_s * n_theta + slit_cells);
        let slit_records = both
            .records
            .iter()
            .filter(|r| r.branch != "interior")
            .count();
        assert_eq!(slit_records, 2 * slit_cells);
    }

    #[test]
    fn reversible_counts() {
        assert_eq!(reversible_count(6, true, 0.3), 4);
        assert_eq!(reversible_count(6, true, 0.7), 3);
        assert_eq!(reversible_count(6, false, 0.3), 3);
        assert_eq!(reversible_count(5, false, 0.3), 3);
    }
}
