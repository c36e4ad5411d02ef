//! Equilibria of the family with continuation-consistent labels, their
//! eigenvalues and periods, and the closed-form logarithmic derivatives of
//! the eigenvalues.
//!
//! Labels are anchored at `s = 1`, where the equilibria form a regular
//! (k+1)-gon:
//!
//! ```text
//! z_j(1, theta, alpha) = k^{1/(k+1)} zeta e^{(i theta + pi i (2j-1))/(k+1) - i alpha}
//! ```
//!
//! and transported by numerical continuation along a path that first fixes
//! `theta` at `s = 1` (where the anchor formula is global) and then
//! descends in `s`. Slit parameters are reached from their declared side.

use num_complex::Complex64 as Cx;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::params::{eps_from_coords, Branch, Epsilon, ParamPoint};
use crate::poly;
use crate::tol;

#[derive(Debug, Error)]
pub enum RootError {
    #[error("continuation path hit the discriminant locus at s = {s:.6}, theta = {theta:.6}")]
    PathThroughDiscriminant { s: f64, theta: f64 },
    #[error("eigenvalue at root {0} is numerically parabolic")]
    NearParabolic(usize),
    #[error("slit grid value s = {0} lies outside (0, 1/2)")]
    GridOutsideSlit(f64),
    #[error("root {0} is not simple here")]
    NotSimple(usize),
    #[error("zeta must be positive")]
    ZeroScale,
}

/// The k+1 equilibria with continuation-consistent labels `j in Z_{k+1}`.
#[derive(Debug, Clone)]
pub struct LabeledRoots {
    pub point: ParamPoint,
    pub roots: Vec<Cx>,
}

impl LabeledRoots {
    pub fn k(&self) -> u32 {
        self.point.k
    }

    /// Characteristic size of the root configuration.
    pub fn scale(&self) -> f64 {
        self.roots
            .iter()
            .map(|z| z.norm())
            .fold(self.point.zeta, f64::max)
            .max(1e-12)
    }

    pub fn min_gap(&self) -> f64 {
        poly::min_gap(&self.roots)
    }
}

/// Merged double-root data.
#[derive(Debug, Clone, Copy)]
pub struct ParabolicPair {
    /// The two labels that merged (cyclically adjacent).
    pub labels: (usize, usize),
    pub center: Cx,
    /// Period of the rectifying map around the double point.
    pub nu: Cx,
}

/// Eigenvalues and periods attached to a labeled root set.
#[derive(Debug, Clone)]
pub struct PeriodData {
    pub point: ParamPoint,
    pub lambdas: Vec<Cx>,
    /// `2 pi i / lambda_j` for simple roots. Entries of a parabolic pair
    /// hold the merged period; consult `parabolic` before using them.
    pub nus: Vec<Cx>,
    pub parabolic_flags: Vec<bool>,
    pub parabolic: Option<ParabolicPair>,
}

impl PeriodData {
    pub fn k(&self) -> u32 {
        self.point.k
    }
}

/// Monic coefficients of the normalized family (`zeta = 1`, `alpha = 0`).
pub fn coeffs_normalized(k: u32, s: f64, theta: f64) -> Vec<Cx> {
    let kf = k as f64;
    let mut c = vec![Cx::new(0.0, 0.0); k as usize + 2];
    c[0] = Cx::from_polar(kf * s.powf(kf + 1.0), theta);
    c[1] = Cx::new(-(kf + 1.0) * (1.0 - s).powf(kf), 0.0);
    c[k as usize + 1] = Cx::new(1.0, 0.0);
    c
}

/// Anchor labels at `s = 1` for the normalized family.
fn anchors(k: u32, theta: f64) -> Vec<Cx> {
    let kf = k as f64;
    let r = kf.powf(1.0 / (kf + 1.0));
    (0..=k as usize)
        .map(|j| Cx::from_polar(r, (theta + PI * (2.0 * j as f64 - 1.0)) / (kf + 1.0)))
        .collect()
}

/// Double-root position at the parabolic point of the slit `theta = 2 pi m / k`
/// in normalized coordinates.
fn parabolic_center_normalized(k: u32, m: u32) -> Cx {
    Cx::from_polar(0.5, TAU * m as f64 / k as f64)
}

/// Track the labeled root set along `t -> (s(t), theta(t))`, `t: 0 -> 1`,
/// adaptively. `roots` holds the labels at t=0 and is updated in place.
fn track_segment(
    k: u32,
    path: impl Fn(f64) -> (f64, f64),
    roots: &mut [Cx],
    allow_endpoint_collision: bool,
) -> Result<(), RootError> {
    let mut t = 0.0f64;
    let mut h = 0.25f64;
    let min_h = 1e-10;
    let n = roots.len();
    while t < 1.0 {
        let h_eff = h.min(1.0 - t);
        let t_new = t + h_eff;
        let (s_new, theta_new) = path(t_new);
        let coeffs = coeffs_normalized(k, s_new, theta_new);
        let gap_before = poly::min_gap(roots);
        let mut trial: Vec<Cx> = roots.to_vec();
        let converged = poly::aberth(&coeffs, &mut trial, tol::ROOT_RESIDUAL, 60);
        let mut max_move = 0.0f64;
        for i in 0..n {
            max_move = max_move.max((trial[i] - roots[i]).norm());
        }
        let gap_after = poly::min_gap(&trial);
        let near_end = allow_endpoint_collision && 1.0 - t_new < 1e-9;
        let ok = converged && (max_move < 0.45 * gap_before || near_end) && gap_after.is_finite();
        if ok {
            roots.copy_from_slice(&trial);
            t = t_new;
            h = (h * 1.7).min(0.25);
        } else {
            h *= 0.5;
            if h < min_h {
                let (s_fail, theta_fail) = path(t);
                return Err(RootError::PathThroughDiscriminant {
                    s: s_fail,
                    theta: theta_fail,
                });
            }
        }
    }
    Ok(())
}

/// Labeled roots at a parameter point. The continuation runs in normalized
/// coordinates (`zeta = 1`, `alpha = 0`), and the exact symmetry
/// `z -> zeta e^{-i alpha} z` restores the general point at the end.
pub fn roots_labeled(p: &ParamPoint) -> Result<LabeledRoots, RootError> {
    if p.zeta <= 0.0 {
        return Err(RootError::ZeroScale);
    }
    let k = p.k;
    let kf = k as f64;
    let theta = p.theta;
    let slit = p.slit_index().filter(|_| p.s <= 0.5 + tol::SLIT_HIT);

    let mut roots = anchors(k, theta);
    if p.s < 1.0 {
        match (slit, p.branch) {
            (Some(m), _) if (p.s - 0.5).abs() <= tol::SLIT_HIT => {
                // Parabolic endpoint: descend to just above the collision,
                // then snap the merging pair onto the exact double root.
                let s_stop = 0.5 + 2e-4;
                track_segment(k, |t| (1.0 + (s_stop - 1.0) * t, theta), &mut roots, false)?;
                let c = parabolic_center_normalized(k, m);
                snap_parabolic(k, p.s, theta, c, &mut roots);
            }
            (Some(_), Branch::Interior) => {
                // A path at fixed slit theta would cross the discriminant at
                // s = 1/2; the caller must declare a side.
                return Err(RootError::PathThroughDiscriminant { s: 0.5, theta });
            }
            (Some(_), branch) => {
                let delta = 1e-3 * TAU / kf;
                let side = match branch {
                    Branch::SlitAbove(_) => delta,
                    Branch::SlitBelow(_) => -delta,
                    Branch::Interior => unreachable!(),
                };
                let theta_off = theta + side;
                track_segment(k, |t| (1.0, theta + side * t), &mut roots, false)?;
                track_segment(k, |t| (1.0 + (p.s - 1.0) * t, theta_off), &mut roots, false)?;
                // Close the gap down to the slit from the declared side.
                track_segment(k, |t| (p.s, theta_off - side * t), &mut roots, false)?;
                let coeffs = coeffs_normalized(k, p.s, theta);
                for z in roots.iter_mut() {
                    for _ in 0..3 {
                        *z = poly::newton_step(&coeffs, *z);
                    }
                }
            }
            (None, _) => {
                track_segment(k, |t| (1.0 + (p.s - 1.0) * t, theta), &mut roots, false)?;
            }
        }
    }

    // Final machine-precision polish (skipped on a merged double root,
    // where the snapped value is already exact).
    if poly::min_gap(&roots) > 1e-6 {
        let coeffs = coeffs_normalized(k, p.s, theta);
        for z in roots.iter_mut() {
            for _ in 0..3 {
                *z = poly::newton_step(&coeffs, *z);
            }
        }
    }
    let twist = Cx::from_polar(p.zeta, -p.alpha);
    for z in roots.iter_mut() {
        *z *= twist;
    }
    Ok(LabeledRoots {
        point: *p,
        roots,
    })
}

/// Replace the pair of tracked roots nearest to the analytic double root by
/// the exact value and polish the rest on the target coefficients.
fn snap_parabolic(k: u32, s: f64, theta: f64, center: Cx, roots: &mut [Cx]) {
    let coeffs = coeffs_normalized(k, s, theta);
    let mut idx: Vec<usize> = (0..roots.len()).collect();
    idx.sort_by(|&a, &b| {
        (roots[a] - center)
            .norm()
            .partial_cmp(&(roots[b] - center).norm())
            .unwrap()
    });
    roots[idx[0]] = center;
    roots[idx[1]] = center;
    for &i in &idx[2..] {
        for _ in 0..5 {
            roots[i] = poly::newton_step(&coeffs, roots[i]);
        }
    }
}

/// Exact period data of the degenerate limit `s = 0`: the center root at
/// the origin with `lambda_0 = -(k+1) (zeta e^{-i alpha})^k` and the k
/// outer roots with `lambda_j = k(k+1) (zeta e^{-i alpha})^k`. At
/// `alpha = 0, zeta = 1` the periods are exactly `-2 pi i/(k+1)` and
/// `2 pi i/(k(k+1))`.
pub fn degenerate_period_data(k: u32, alpha: f64, zeta: f64) -> PeriodData {
    let kf = k as f64;
    let twist = Cx::from_polar(zeta, -alpha).powu(k);
    let lam0 = -(kf + 1.0) * twist;
    let lamj = kf * (kf + 1.0) * twist;
    let inv_twist = Cx::from_polar(zeta.powi(-(k as i32)), kf * alpha);
    let nu0 = Cx::new(0.0, -TAU / (kf + 1.0)) * inv_twist;
    let nuj = Cx::new(0.0, TAU / (kf * (kf + 1.0))) * inv_twist;
    let n = k as usize + 1;
    let mut lambdas = vec![lamj; n];
    let mut nus = vec![nuj; n];
    lambdas[0] = lam0;
    nus[0] = nu0;
    let point = ParamPoint {
        k,
        s: 0.0,
        theta: 0.0,
        alpha,
        zeta,
        branch: Branch::SlitBelow(0),
    };
    PeriodData {
        point,
        lambdas,
        nus,
        parabolic_flags: vec![false; n],
        parabolic: None,
    }
}

/// Closed-form discriminant of `z^{k+1} + eps1 z + eps0`.
pub fn discriminant(e: &Epsilon) -> Cx {
    let k = e.k as f64;
    let sign = if e.k.div_ceil(2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let lead = sign * k.powf(k) * (k + 1.0).powf(k + 1.0);
    let a = (e.eps0 / k).powu(e.k);
    let b = (-e.eps1 / (k + 1.0)).powu(e.k + 1);
    lead * (a - b)
}

/// Period of the rectifying map around a double root `c` of the monic
/// polynomial `coeffs`: with `P = (z-c)^2 Q`, the residue of `1/P` at `c`
/// is `-Q'(c)/Q(c)^2`.
pub fn parabolic_period(coeffs: &[Cx], c: Cx) -> Cx {
    let q = poly::deflate(&poly::deflate(coeffs, c), c);
    let (qc, dqc) = poly::eval_with_derivative(&q, c);
    Cx::new(0.0, TAU) * (-dqc / (qc * qc))
}

/// Eigenvalues `lambda_j = P'(z_j)` and periods `nu_j = 2 pi i / lambda_j`,
/// with the double-root period computed from the deflated factorization.
pub fn periods(r: &LabeledRoots) -> PeriodData {
    let e = eps_from_coords(&r.point);
    let coeffs = e.poly_coeffs();
    let dcoeffs = poly::derivative(&coeffs);
    let n = r.roots.len();
    let scale = r.scale();
    let lambdas: Vec<Cx> = r.roots.iter().map(|&z| poly::eval(&dcoeffs, z)).collect();
    let mut parabolic_flags = vec![false; n];
    let mut parabolic = None;

    // Closest pair, if it qualifies as a double point.
    let mut best = (0usize, 0usize, f64::INFINITY);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (r.roots[i] - r.roots[j]).norm();
            if d < best.2 {
                best = (i, j, d);
            }
        }
    }
    if best.2 < tol::PARABOLIC_GAP * scale {
        let (i, j, _) = best;
        let c = (r.roots[i] + r.roots[j]) / 2.0;
        let nu = parabolic_period(&coeffs, c);
        parabolic_flags[i] = true;
        parabolic_flags[j] = true;
        parabolic = Some(ParabolicPair {
            labels: (i.min(j), i.max(j)),
            center: c,
            nu,
        });
    }

    let nus: Vec<Cx> = (0..n)
        .map(|j| {
            if parabolic_flags[j] {
                parabolic.unwrap().nu
            } else {
                Cx::new(0.0, TAU) / lambdas[j]
            }
        })
        .collect();

    PeriodData {
        point: r.point,
        lambdas,
        nus,
        parabolic_flags,
        parabolic,
    }
}

/// The two logarithmic derivatives of `lambda_j` in the normalized chart,
/// evaluated from the closed forms
///
/// ```text
/// (1-s) dlog(lambda)/ds     = -k - s^k  N / D^2
/// dlog(lambda)/dtheta       = -i s^{k+1} N / ((k+1) D^2)
/// N = (k+1)(1-s)^k x_j - k s^{k+1},   D = (1-s)^k x_j - s^{k+1}
/// ```
///
/// with `x_j = e^{-i theta} z_j` taken from the normalized root.
pub fn dlog_lambda(p: &ParamPoint, j: usize) -> Result<(Cx, Cx), RootError> {
    let r = roots_labeled(p)?;
    dlog_lambda_from_roots(&r, j)
}

/// Same as [`dlog_lambda`] with precomputed roots.
pub fn dlog_lambda_from_roots(r: &LabeledRoots, j: usize) -> Result<(Cx, Cx), RootError> {
    let p = &r.point;
    let kf = p.k as f64;
    // Normalize away zeta and alpha; the log-derivatives are invariant.
    let z_norm = r.roots[j] / Cx::from_polar(p.zeta, -p.alpha);
    let x = z_norm * Cx::from_polar(1.0, -p.theta);
    let s = p.s;
    let lam_norm = (kf + 1.0) * (z_norm.powu(p.k) - Cx::new((1.0 - s).powf(kf), 0.0));
    if lam_norm.norm() < tol::NEAR_PARABOLIC_LAMBDA {
        return Err(RootError::NearParabolic(j));
    }
    let sk = s.powf(kf);
    let sk1 = s.powf(kf + 1.0);
    let omsk = (1.0 - s).powf(kf);
    let num = (kf + 1.0) * omsk * x - kf * sk1;
    let den = omsk * x - sk1;
    let d2 = den * den;
    let d_ds = (Cx::new(-kf, 0.0) - sk * num / d2) / (1.0 - s);
    let d_dtheta = Cx::new(0.0, -sk1) * num / ((kf + 1.0) * d2);
    Ok((d_ds, d_dtheta))
}

/// The two positive real roots `z0 < z1` of the normalized family on the
/// slit `theta = 0`, `s in (0, 1/2)`.
pub fn slit_real_roots(k: u32, s: f64) -> (f64, f64) {
    let kf = k as f64;
    let f = |z: f64| z.powf(kf + 1.0) - (kf + 1.0) * (1.0 - s).powf(kf) * z + kf * s.powf(kf + 1.0);
    let zc = 1.0 - s; // critical point of f on the positive axis
    let bisect = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-16 * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let z0 = bisect(0.0, zc);
    let mut hi = 2.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let z1 = bisect(zc, hi);
    (z0, z1)
}

/// `d arg(lambda_j)/d theta` on the slit, for a real root `z` of the
/// normalized family. Uses `k s^{k+1} - (k+1)(1-s)^k z = -z^{k+1}` to avoid
/// cancellation near `s = 0`.
fn slit_darg_dtheta(k: u32, s: f64, z: f64) -> f64 {
    let kf = k as f64;
    let num = -z.powf(kf + 1.0);
    let den = s.powf(kf + 1.0) - (1.0 - s).powf(kf) * z;
    s.powf(kf + 1.0) * num / ((kf + 1.0) * den * den)
}

/// Sample the slit curve `s^{k+1} (d arg lambda_0/d theta - d arg lambda_1/d theta)`
/// at `theta = 0` for each grid value of `s`, using the real roots `z0 < z1`.
pub fn numerical_evidence_samples(k: u32, grid: &[f64]) -> Result<Vec<(f64, f64)>, RootError> {
    for &s in grid {
        if !(0.0 < s && s < 0.5) {
            return Err(RootError::GridOutsideSlit(s));
        }
    }
    let kf = k as f64;
    Ok(grid
        .iter()
        .map(|&s| {
            let (z0, z1) = slit_real_roots(k, s);
            let v = slit_darg_dtheta(k, s, z0) - slit_darg_dtheta(k, s, z1);
            (s, s.powf(kf + 1.0) * v)
        })
        .collect())
}
