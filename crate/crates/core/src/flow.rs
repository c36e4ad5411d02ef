//! Real-time flow of complex polynomial fields: adaptive integration,
//! rectifying-coordinate quadrature, separatrices of infinity, periodic
//! domains and cuts, and the Douady-Sentenac zone data.
//!
//! Complex time directions are realized by rotated fields `e^{i beta} P`;
//! the integrator itself always runs in real time.

use num_complex::Complex64 as Cx;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::params::Epsilon;
use crate::poly;
use crate::tol;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("integration path passes within {0:.3e} of a pole")]
    PathNearPole(f64),
    #[error("separatrix {m} neither landed nor exited (closest approach {closest:.3e})")]
    UnresolvedLanding { m: usize, closest: f64 },
    #[error("orbit through the probe point does not close")]
    NotACenter,
    #[error("quadrature failed to converge")]
    QuadratureStall,
    #[error("zone ends could not be paired consistently")]
    ZonePairing,
}

/// A polynomial field `z' = phase * P(z)`.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub coeffs: Vec<Cx>,
    pub phase: Cx,
}

impl FieldSpec {
    pub fn polynomial(coeffs: Vec<Cx>) -> Self {
        FieldSpec {
            coeffs,
            phase: Cx::new(1.0, 0.0),
        }
    }

    pub fn from_epsilon(e: &Epsilon) -> Self {
        Self::polynomial(e.poly_coeffs())
    }

    pub fn rotated(&self, beta: f64) -> Self {
        FieldSpec {
            coeffs: self.coeffs.clone(),
            phase: self.phase * Cx::from_polar(1.0, beta),
        }
    }

    pub fn eval(&self, z: Cx) -> Cx {
        self.phase * poly::eval(&self.coeffs, z)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedSingular(usize),
    ExitedRadius(f64),
    ClosedOrbit,
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// (own-time, position) samples; own-time increases along the trace and
    /// equals `direction * real time`.
    pub samples: Vec<(f64, Cx)>,
    pub termination: Termination,
    pub direction: f64,
}

impl Trajectory {
    pub fn last(&self) -> Cx {
        self.samples.last().unwrap().1
    }
    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().0
    }
}

/// A singular-point stopping target; radius 0 disables it.
#[derive(Debug, Clone, Copy)]
pub struct SingTarget {
    pub z: Cx,
    pub radius: f64,
}

/// Closed-orbit detection: arm once the orbit has left the `arm` ball
/// around the anchor, then stop on re-entering the `radius` ball.
#[derive(Debug, Clone, Copy)]
pub struct CloseRule {
    pub anchor: Cx,
    pub radius: f64,
    pub arm: f64,
}

#[derive(Debug, Clone)]
pub struct StopRules {
    pub targets: Vec<SingTarget>,
    pub max_radius: f64,
    pub close: Option<CloseRule>,
    pub max_steps: usize,
    pub max_time: f64,
    pub rel_tol: f64,
}

impl StopRules {
    pub fn basic(max_radius: f64) -> Self {
        StopRules {
            targets: Vec::new(),
            max_radius,
            close: None,
            max_steps: tol::MAX_STEPS,
            max_time: f64::INFINITY,
            rel_tol: tol::ODE_STEP_REL,
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive embedded Runge-Kutta trace of `z' = direction * field(z)` in
/// real time, with singular-approach, radius-exit, and orbit-closure events.
pub fn integrate<F: Fn(Cx) -> Cx>(field: &F, z0: Cx, direction: f64, rules: &StopRules) -> Trajectory {
    let f = |z: Cx| field(z) * direction;
    let mut samples = vec![(0.0, z0)];
    let mut z = z0;
    let mut t = 0.0f64;
    let speed0 = f(z0).norm().max(1e-300);
    let mut h = (0.01 * (z0.norm() + 1.0) / speed0).min(1.0);
    let mut armed = rules
        .close
        .map(|c| (z0 - c.anchor).norm() > c.arm)
        .unwrap_or(false);

    let mut k = [Cx::new(0.0, 0.0); 7];
    for step in 0..rules.max_steps {
        if step + 1 == rules.max_steps || t >= rules.max_time {
            return Trajectory {
                samples,
                termination: Termination::StepLimit,
                direction,
            };
        }
        // Geometric step bound keeps events localized.
        let speed = f(z).norm().max(1e-300);
        let h_geo = 0.05 * (z.norm() + 0.1 * rules.max_radius.clamp(1e-6, 1.0)) / speed;
        let mut h_try = h.min(h_geo).min(rules.max_time - t + 1e-16);

        loop {
            k[0] = f(z);
            let mut ok = true;
            for stage in 0..6 {
                let mut acc = Cx::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj;
                }
                let zs = z + acc * h_try;
                if !zs.is_finite() {
                    ok = false;
                    break;
                }
                k[stage + 1] = f(zs);
            }
            if !ok {
                h_try *= 0.5;
                continue;
            }
            let mut z5 = Cx::new(0.0, 0.0);
            let mut z4 = Cx::new(0.0, 0.0);
            for j in 0..7 {
                z5 += B5[j] * k[j];
                z4 += B4[j] * k[j];
            }
            let z_new = z + z5 * h_try;
            let err = (z5 - z4).norm() * h_try;
            let tol_abs = rules.rel_tol * (z.norm().max(z_new.norm()).max(1e-3));
            if err <= tol_abs || h_try < 1e-15 * (1.0 + z.norm()) {
                let ratio = if err > 0.0 {
                    (tol_abs / err).powf(0.2).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                h = h_try * 0.9 * ratio;
                let z_prev = z;
                z = z_new;
                t += h_try;
                samples.push((t, z));

                // Events, most specific first.
                for (j, tgt) in rules.targets.iter().enumerate() {
                    if tgt.radius > 0.0 && (z - tgt.z).norm() < tgt.radius {
                        return Trajectory {
                            samples,
                            termination: Termination::ReachedSingular(j),
                            direction,
                        };
                    }
                }
                if z.norm() > rules.max_radius {
                    // Solve the crossing on the chord and recover the time
                    // increment by quadrature of 1/f along it.
                    let (t_x, z_x) =
                        exit_crossing(&f, samples[samples.len() - 2], (t, z), rules.max_radius);
                    *samples.last_mut().unwrap() = (t_x, z_x);
                    return Trajectory {
                        samples,
                        termination: Termination::ExitedRadius(rules.max_radius),
                        direction,
                    };
                }
                if let Some(c) = rules.close {
                    let d = (z - c.anchor).norm();
                    if !armed && d > c.arm {
                        armed = true;
                    }
                    if armed && d < c.radius && (z_prev - c.anchor).norm() >= c.radius {
                        return Trajectory {
                            samples,
                            termination: Termination::ClosedOrbit,
                            direction,
                        };
                    }
                }
                break;
            }
            h_try *= 0.5 * (tol_abs / err).powf(0.2).max(0.1);
        }
    }
    Trajectory {
        samples,
        termination: Termination::StepLimit,
        direction,
    }
}

/// Point where the chord from `a` to `b` crosses `|z| = r`, with the time
/// increment recomputed by quadrature of `1/f` along the chord.
fn exit_crossing(f: &impl Fn(Cx) -> Cx, a: (f64, Cx), b: (f64, Cx), r: f64) -> (f64, Cx) {
    let (ta, za) = a;
    let (tb, zb) = b;
    let d = zb - za;
    // |za + w d|^2 = r^2, take the root in [0, 1].
    let aa = d.norm_sqr();
    let bb = 2.0 * (za.conj() * d).re;
    let cc = za.norm_sqr() - r * r;
    let w = if aa > 0.0 {
        let disc = (bb * bb - 4.0 * aa * cc).max(0.0).sqrt();
        let w1 = (-bb + disc) / (2.0 * aa);
        let w2 = (-bb - disc) / (2.0 * aa);
        [w1, w2]
            .into_iter()
            .filter(|w| (-0.01..=1.01).contains(w))
            .fold(1.0, f64::min)
            .clamp(0.0, 1.0)
    } else {
        1.0
    };
    let z_x = za + d * w;
    let (dt, _) = gk15(&|u: f64| d * w / f(za + d * w * u), 0.0, 1.0);
    let t_x = ta + dt.re;
    let _ = tb;
    (t_x, z_x)
}

// Gauss-Kronrod 15-7 nodes/weights on [-1, 1].
const GK_X: [f64; 15] = [
    -0.991455371120813,
    -0.949107912342759,
    -0.864864423359769,
    -0.741531185599394,
    -0.586087235467691,
    -0.405845151377397,
    -0.207784955007898,
    0.0,
    0.207784955007898,
    0.405845151377397,
    0.586087235467691,
    0.741531185599394,
    0.864864423359769,
    0.949107912342759,
    0.991455371120813,
];
const GK_WK: [f64; 15] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
    0.204432940075298,
    0.190350578064785,
    0.169004726639267,
    0.140653259715525,
    0.104790010322250,
    0.063092092629979,
    0.022935322010529,
];
const GK_WG: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn gk15(f: &impl Fn(f64) -> Cx, a: f64, b: f64) -> (Cx, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = Cx::new(0.0, 0.0);
    let mut gauss = Cx::new(0.0, 0.0);
    for (i, &x) in GK_X.iter().enumerate() {
        let v = f(c + h * x);
        kron += GK_WK[i] * v;
        if i % 2 == 1 {
            gauss += GK_WG[i / 2] * v;
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive complex-valued quadrature of `f` over `[a, b]`.
pub fn quad_adaptive(f: &impl Fn(f64) -> Cx, a: f64, b: f64, rel: f64) -> Result<Cx, FlowError> {
    let mut stack = vec![(a, b, 0usize)];
    let mut total = Cx::new(0.0, 0.0);
    let mut bound = 0.0f64;
    // First coarse value fixes the error scale.
    let (coarse, _) = gk15(f, a, b);
    let scale = coarse.norm().max(1e-30);
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        if err <= rel * scale * ((hi - lo) / (b - a)).max(1e-3) || depth >= 40 {
            if depth >= 40 && err > 1e3 * rel * scale {
                return Err(FlowError::QuadratureStall);
            }
            total += val;
            bound += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    let _ = bound;
    Ok(total)
}

/// Rectifying-time increment along a straight segment.
pub fn time_segment(field: &FieldSpec, a: Cx, b: Cx) -> Result<Cx, FlowError> {
    let d = b - a;
    let f = |t: f64| d / field.eval(a + d * t);
    quad_adaptive(&f, 0.0, 1.0, tol::QUAD_REL)
}

/// Adaptive quadrature of `dz / field` along a polyline, with a pole
/// proximity guard.
pub fn time_map(field: &FieldSpec, path: &[Cx]) -> Result<Cx, FlowError> {
    let roots = poly::all_roots(&field.coeffs, 1e-12);
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let guard = tol::SING_APPROACH * scale;
    for w in path.windows(2) {
        for r in &roots {
            if dist_point_segment(*r, w[0], w[1]) < guard {
                return Err(FlowError::PathNearPole(dist_point_segment(*r, w[0], w[1])));
            }
        }
    }
    let mut acc = Cx::new(0.0, 0.0);
    for w in path.windows(2) {
        acc += time_segment(field, w[0], w[1])?;
    }
    Ok(acc)
}

fn dist_point_segment(p: Cx, a: Cx, b: Cx) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

/// Tail of the rectifying time from infinity to `z` along the radial ray
/// through `z`: a far-field series plus quadrature of the remaining ray.
pub fn tail_time(field: &FieldSpec, z: Cx) -> Result<Cx, FlowError> {
    let k = field.degree() - 1;
    let kf = k as f64;
    let e1 = field.coeffs[1];
    let e0 = field.coeffs[0];
    let coef_scale = 1.0 + e1.norm() + e0.norm();
    // Radius at which the truncated series is accurate to ~1e-16.
    let far = (coef_scale.powi(3) * 1e16).powf(1.0 / (4.0 * kf + 1.0)).max(2.0 * z.norm());
    let zf = z / z.norm() * far;
    let series = {
        let w = 1.0 / zf;
        -w.powu(k as u32) / kf + e1 * w.powu(2 * k as u32) / (2.0 * kf)
            + e0 * w.powu(2 * k as u32 + 1) / (2.0 * kf + 1.0)
            - e1 * e1 * w.powu(3 * k as u32) / (3.0 * kf)
            - 2.0 * e1 * e0 * w.powu(3 * k as u32 + 1) / (3.0 * kf + 1.0)
            - e0 * e0 * w.powu(3 * k as u32 + 2) / (3.0 * kf + 2.0)
    };
    let ray = time_segment(field, zf, z)?;
    Ok(series / field.phase + ray)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Landing {
    /// Landed on root `j` (index into the graph's root list).
    Root(usize),
    /// Re-exited the trace radius at the given angle: homoclinic behavior.
    Reexit { angle: f64 },
    Unresolved { closest: f64 },
}

#[derive(Debug, Clone)]
pub struct Separatrix {
    /// Direction index `m`: asymptotic ray `arg z = m pi / k`.
    pub m: usize,
    /// True when the trajectory flows from infinity into the plane in
    /// forward time.
    pub incoming: bool,
    pub seed: Cx,
    pub landing: Landing,
    pub traj: Trajectory,
}

#[derive(Debug, Clone)]
pub struct SeparatrixGraph {
    pub k: u32,
    pub roots: Vec<Cx>,
    pub seps: Vec<Separatrix>,
    pub radius: f64,
}

impl SeparatrixGraph {
    pub fn has_homoclinic(&self) -> bool {
        self.seps
            .iter()
            .any(|s| matches!(s.landing, Landing::Reexit { .. }))
    }

    /// Landing summary usable as a topological signature in sweeps.
    pub fn landing_pattern(&self) -> Vec<i64> {
        self.seps
            .iter()
            .map(|s| match s.landing {
                Landing::Root(j) => j as i64,
                Landing::Reexit { .. } => -1,
                Landing::Unresolved { .. } => -2,
            })
            .collect()
    }
}

/// Per-root landing radii: eigenvalue-aware (sinks for the given direction
/// get a generous linearization radius, others only the tight one).
fn landing_targets(field: &FieldSpec, roots: &[Cx], direction: f64, scale: f64) -> Vec<SingTarget> {
    let dcoeffs = poly::derivative(&field.coeffs);
    let n = roots.len();
    (0..n)
        .map(|j| {
            let mu = field.phase * poly::eval(&dcoeffs, roots[j]) * direction;
            let gap = (0..n)
                .filter(|&i| i != j)
                .map(|i| (roots[i] - roots[j]).norm())
                .fold(f64::INFINITY, f64::min)
                .min(scale);
            let radius = if mu.norm() < 1e-9 * scale {
                // parabolic: land on close approach
                1e-4 * scale
            } else if mu.re < -0.02 * mu.norm() {
                // certain sink in this time direction
                (0.1 * gap).min(1e-2 * scale).max(tol::SING_APPROACH * scale)
            } else {
                tol::SING_APPROACH * scale
            };
            SingTarget {
                z: roots[j],
                radius,
            }
        })
        .collect()
}

/// Trace the 2k separatrices of infinity of a degree-(k+1) field and
/// classify their landings.
pub fn separatrices_at_infinity(field: &FieldSpec, radius: f64) -> Result<SeparatrixGraph, FlowError> {
    let k = (field.degree() - 1) as u32;
    let roots = sorted_roots(&field.coeffs);
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let r = radius.max(4.0 * scale);
    let kf = k as f64;

    let mut seps = Vec::with_capacity(2 * k as usize);
    for m in 0..(2 * k as usize) {
        // Rays where the principal part `phase z^{k+1}` is radial.
        let phi = (m as f64 * PI - field.phase.arg()) / kf;
        let outward = m % 2 == 0;
        let direction = if outward { -1.0 } else { 1.0 };
        let seed = refine_seed(field, r, phi)?;
        // Generic trajectories swing around the pole at finite radius and
        // come back; only a separatrix actually reaching the pole (a
        // homoclinic connection) produces an unbounded excursion.
        let mut rules = StopRules::basic(40.0 * r);
        rules.targets = landing_targets(field, &roots, direction, scale);
        rules.max_time = 1e6;
        let traj = integrate(&|z| field.eval(z), seed, direction, &rules);
        let landing = match traj.termination {
            Termination::ReachedSingular(j) => Landing::Root(j),
            Termination::ExitedRadius(_) => Landing::Reexit {
                angle: traj.last().arg(),
            },
            _ => Landing::Unresolved {
                closest: roots
                    .iter()
                    .map(|w| (traj.last() - w).norm())
                    .fold(f64::INFINITY, f64::min),
            },
        };
        seps.push(Separatrix {
            m,
            incoming: !outward,
            seed,
            landing,
            traj,
        });
    }
    Ok(SeparatrixGraph {
        k,
        roots,
        seps,
        radius: r,
    })
}

/// Landing positions of the 2k separatrices traced deep: near-homoclinic
/// excursions are followed out and back (the loop passes through the pole)
/// instead of being cut off at the seed radius. `None` marks a trajectory
/// that still escapes or stalls.
pub fn deep_landing_positions(field: &FieldSpec) -> Result<Vec<Option<Cx>>, FlowError> {
    let k = (field.degree() - 1) as u32;
    let kf = k as f64;
    let roots = sorted_roots(&field.coeffs);
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let r = 4.0 * scale;
    let mut out = Vec::with_capacity(2 * k as usize);
    for m in 0..(2 * k as usize) {
        let phi = (m as f64 * PI - field.phase.arg()) / kf;
        let direction = if m % 2 == 0 { -1.0 } else { 1.0 };
        let seed = refine_seed(field, r, phi)?;
        let mut rules = StopRules::basic(1e4 * scale);
        rules.targets = landing_targets(field, &roots, direction, scale);
        rules.max_time = 1e6;
        let traj = integrate(&|z| field.eval(z), seed, direction, &rules);
        out.push(match traj.termination {
            Termination::ReachedSingular(j) => Some(roots[j]),
            _ => None,
        });
    }
    Ok(out)
}

/// Roots sorted by argument then modulus, for deterministic indexing.
pub fn sorted_roots(coeffs: &[Cx]) -> Vec<Cx> {
    let mut roots = poly::all_roots(coeffs, 1e-13);
    roots.sort_by(|a, b| {
        a.arg()
            .partial_cmp(&b.arg())
            .unwrap()
            .then(a.norm().partial_cmp(&b.norm()).unwrap())
    });
    roots
}

/// Newton-correct the angular position of a separatrix seed on the circle
/// of radius `r` near the asymptotic ray `arg z = phi`: the separatrix is
/// the locus where the tail time is real.
fn refine_seed(field: &FieldSpec, r: f64, phi: f64) -> Result<Cx, FlowError> {
    let mut psi = phi;
    for _ in 0..8 {
        let z = Cx::from_polar(r, psi);
        let t = tail_time(field, z)?;
        let dt_dpsi = Cx::new(0.0, 1.0) * z / field.eval(z);
        let g = t.im;
        let dg = dt_dpsi.im;
        if dg.abs() < 1e-300 {
            break;
        }
        let step = (g / dg).clamp(-0.2 / field.degree() as f64, 0.2 / field.degree() as f64);
        psi -= step;
        if step.abs() < 1e-14 {
            break;
        }
    }
    Ok(Cx::from_polar(r, psi))
}

/// One traced periodic domain: boundary loops of the center-rotated field
/// and the cut(s) toward infinity.
#[derive(Debug, Clone)]
pub struct PeriodicDomain {
    pub root_index: usize,
    /// Homoclinic boundary loops (polylines at the trace radius).
    pub loops: Vec<Vec<Cx>>,
    /// Cut polylines from the root to the trace radius.
    pub cuts: Vec<Vec<Cx>>,
}

/// Boundary of the periodic domain of root `j`: separatrices of the
/// rotated field `e^{i arg nu_j} P` that re-exit enclose the center; the
/// cut is the `e^{i(arg nu_j - pi/2)} P` separatrix landing at the root.
pub fn periodic_domain_boundary(
    field: &FieldSpec,
    roots: &[Cx],
    j: usize,
) -> Result<PeriodicDomain, FlowError> {
    let dcoeffs = poly::derivative(&field.coeffs);
    let lam = field.phase * poly::eval(&dcoeffs, roots[j]);
    if lam.norm() == 0.0 {
        return Err(FlowError::NotACenter);
    }
    let nu = Cx::new(0.0, TAU) / lam;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);

    // Validate the center: a nearby orbit of the rotated field must close.
    let rot = field.rotated(nu.arg());
    let gap = (0..roots.len())
        .filter(|&i| i != j)
        .map(|i| (roots[i] - roots[j]).norm())
        .fold(f64::INFINITY, f64::min);
    let probe = roots[j] + Cx::new(0.05 * gap, 0.0);
    let mut rules = StopRules::basic(20.0 * scale);
    rules.close = Some(CloseRule {
        anchor: probe,
        radius: 1e-3 * gap,
        arm: 0.05 * gap,
    });
    rules.max_time = 60.0 * nu.norm() / field.phase.norm();
    let orbit = integrate(&|z| rot.eval(z), probe, 1.0, &rules);
    if orbit.termination != Termination::ClosedOrbit {
        return Err(FlowError::NotACenter);
    }

    // Boundary loops: re-exiting separatrices of the rotated field whose
    // inner side belongs to the periodic annulus of this root. Incoming
    // and outgoing traces of the same loop are deduplicated.
    let graph = separatrices_at_infinity(&rot, 4.0 * scale)?;
    let mut loops: Vec<Vec<Cx>> = Vec::new();
    for s in &graph.seps {
        if let Landing::Reexit { .. } = s.landing {
            let line: Vec<Cx> = s.traj.samples.iter().map(|&(_, z)| z).collect();
            // Probe just inside the loop on the side of this root.
            let near = line
                .iter()
                .min_by(|a, b| {
                    (*a - roots[j])
                        .norm()
                        .partial_cmp(&(*b - roots[j]).norm())
                        .unwrap()
                })
                .copied()
                .unwrap();
            let probe = near + (roots[j] - near) * 0.05;
            let mut rules = StopRules::basic(20.0 * scale);
            rules.close = Some(CloseRule {
                anchor: probe,
                radius: 1e-3 * gap,
                arm: 0.05 * gap,
            });
            rules.max_time = 120.0 * nu.norm() / field.phase.norm();
            let orb = integrate(&|z| rot.eval(z), probe, 1.0, &rules);
            let orbit_pts: Vec<Cx> = orb.samples.iter().map(|&(_, z)| z).collect();
            if orb.termination == Termination::ClosedOrbit
                && winding_encloses(&orbit_pts, roots[j])
            {
                // The incoming and outgoing traces of one loop cover
                // complementary arcs; they agree on their crossings of a
                // mid-range circle.
                let cr = circle_crossings(&line, 1.5 * scale);
                let duplicate = loops.iter().any(|l: &Vec<Cx>| {
                    let other = circle_crossings(l, 1.5 * scale);
                    !cr.is_empty()
                        && cr.iter().all(|p| {
                            other.iter().any(|q| (p - q).norm() < 5e-3 * scale)
                        })
                });
                if !duplicate {
                    loops.push(line);
                }
            }
        }
    }

    let cuts = cut_polylines(field, roots, j)?;
    Ok(PeriodicDomain {
        root_index: j,
        loops,
        cuts,
    })
}

/// Cut(s) of root `j`: separatrices of `e^{i(arg nu_j - pi/2)} P` landing
/// at the root and contained inside its periodic domain, oriented from the
/// root outward. Several polylines mean the domain has several ends.
pub fn cut_polylines(field: &FieldSpec, roots: &[Cx], j: usize) -> Result<Vec<Vec<Cx>>, FlowError> {
    let dcoeffs = poly::derivative(&field.coeffs);
    let lam = field.phase * poly::eval(&dcoeffs, roots[j]);
    let parabolic = lam.norm() < 1e-7;
    let nu = if parabolic {
        // period of a double point: residue through the deflated factor
        let c = roots[j];
        let q = poly::deflate(&poly::deflate(&field.coeffs, c), c);
        let (qc, dqc) = poly::eval_with_derivative(&q, c);
        Cx::new(0.0, TAU) * (-dqc / (qc * qc)) / field.phase
    } else {
        Cx::new(0.0, TAU) / lam
    };
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let gap = (0..roots.len())
        .filter(|&i| (roots[i] - roots[j]).norm() > 1e-6 * scale)
        .map(|i| (roots[i] - roots[j]).norm())
        .fold(scale, f64::min);
    let rot = field.rotated(nu.arg());
    let cut_field = field.rotated(nu.arg() - PI / 2.0);
    let cut_graph = separatrices_at_infinity(&cut_field, 4.0 * scale)?;
    let mut cuts: Vec<Vec<Cx>> = Vec::new();
    let mut far_angles: Vec<f64> = Vec::new();
    for s in &cut_graph.seps {
        let lands_here = match s.landing {
            Landing::Root(i) => (cut_graph.roots[i] - roots[j]).norm() < 1e-4 * scale,
            _ => false,
        };
        if !lands_here {
            continue;
        }
        let mut line: Vec<Cx> = s.traj.samples.iter().map(|&(_, z)| z).collect();
        line.reverse(); // orient from the root outward
        let far_angle = line.last().unwrap().arg();
        if far_angles
            .iter()
            .any(|&a| (a - far_angle).rem_euclid(TAU).min((far_angle - a).rem_euclid(TAU)) < 1e-5)
        {
            continue; // two seeds converged to the same separatrix
        }
        let inside = if parabolic {
            // The parabolic cut is selected by direction afterwards.
            true
        } else {
            // Containment along the whole cut: the rotated-field orbit
            // through each probe must close around the root.
            let probes: Vec<Cx> = [0.3 * gap, 0.8 * gap, 1.0 * scale, 1.8 * scale]
                .iter()
                .filter_map(|&target_d| {
                    line.iter()
                        .min_by(|a, b| {
                            (((*a - roots[j]).norm() - target_d).abs())
                                .partial_cmp(&(((*b - roots[j]).norm() - target_d).abs()))
                                .unwrap()
                        })
                        .copied()
                })
                .collect();
            probes.iter().all(|&probe| {
                let mut rules = StopRules::basic(80.0 * scale);
                rules.close = Some(CloseRule {
                    anchor: probe,
                    radius: 1e-3 * gap,
                    arm: 0.05 * gap,
                });
                rules.max_time = 600.0 * nu.norm() / field.phase.norm();
                rules.max_steps = 400_000;
                let orb = integrate(&|z| rot.eval(z), probe, 1.0, &rules);
                let pts: Vec<Cx> = orb.samples.iter().map(|&(_, z)| z).collect();
                orb.termination == Termination::ClosedOrbit && winding_encloses(&pts, roots[j])
            })
        };
        if inside {
            far_angles.push(far_angle);
            cuts.push(line);
        }
    }
    if parabolic && cuts.len() > 1 {
        // The parabolic domain's two sepal ends flank the direction of the
        // double point; its cut is the candidate pointing that way.
        let want = roots[j].arg();
        let dist = |a: f64| {
            let d = (a - want).rem_euclid(TAU);
            d.min(TAU - d)
        };
        let best = (0..cuts.len())
            .min_by(|&a, &b| {
                dist(far_angles[a])
                    .partial_cmp(&dist(far_angles[b]))
                    .unwrap()
            })
            .unwrap();
        cuts = vec![cuts.swap_remove(best)];
    }
    Ok(cuts)
}

/// Total winding of a polyline (closed through the far arc) around `w`
/// exceeds half a turn in magnitude.
fn winding_encloses(line: &[Cx], w: Cx) -> bool {
    let mut total = 0.0f64;
    for seg in line.windows(2) {
        let a = seg[0] - w;
        let b = seg[1] - w;
        total += (b / a).arg();
    }
    total.abs() > PI
}

/// Transversal crossings of a polyline with the circle `|z| = radius`.
fn circle_crossings(line: &[Cx], radius: f64) -> Vec<Cx> {
    let mut out = Vec::new();
    for w in line.windows(2) {
        let (da, db) = (w[0].norm() - radius, w[1].norm() - radius);
        if da * db < 0.0 {
            let t = da / (da - db);
            out.push(w[0] + (w[1] - w[0]) * t);
        }
    }
    out
}

/// One alpha-omega zone of the separatrix decomposition.
#[derive(Debug, Clone, Copy)]
pub struct Zone {
    pub ends: (usize, usize),
    pub alpha_root: usize,
    pub omega_root: usize,
    /// Transverse time, normalized to positive imaginary part.
    pub tau: Cx,
}

#[derive(Debug, Clone)]
pub struct DsInvariant {
    /// `involution[m]` = partner end of `m`; only valid when not broken.
    pub involution: Vec<usize>,
    pub zones: Vec<Zone>,
    /// Directed edges alpha-root -> omega-root.
    pub skeleton_edges: Vec<(usize, usize)>,
    pub vertex_count: usize,
    pub broken: bool,
    pub non_crossing: bool,
    pub is_tree: bool,
}

/// Douady-Sentenac data of a polynomial field: end pairing into zones,
/// transverse times, and the skeleton graph.
pub fn ds_invariant(field: &FieldSpec) -> Result<DsInvariant, FlowError> {
    let k = (field.degree() - 1) as u32;
    let kf = k as f64;
    let graph = separatrices_at_infinity(field, 0.0)?;
    let roots = &graph.roots;
    let n_ends = 2 * k as usize;
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let r = graph.radius;

    // A re-exiting separatrix is the signature of a homoclinic connection:
    // report broken before insisting that every landing resolve (other
    // separatrices may stall along the loop at such parameters).
    if graph.has_homoclinic() {
        return Ok(DsInvariant {
            involution: Vec::new(),
            zones: Vec::new(),
            skeleton_edges: Vec::new(),
            vertex_count: roots.len(),
            broken: true,
            non_crossing: false,
            is_tree: false,
        });
    }
    for s in &graph.seps {
        if let Landing::Unresolved { closest } = s.landing {
            return Err(FlowError::UnresolvedLanding { m: s.m, closest });
        }
    }
    let broken_by_sep = false;

    // Probe each end sector.
    let mut ends = Vec::with_capacity(n_ends);
    let mut probe_fwd: Vec<Option<Trajectory>> = Vec::with_capacity(n_ends);
    let mut broken = broken_by_sep;
    for m in 0..n_ends {
        let seed = Cx::from_polar(r, (m as f64 + 0.5) * PI / kf);
        let mut rules = StopRules::basic(40.0 * r);
        rules.targets = landing_targets(field, roots, 1.0, scale);
        rules.max_time = 1e6;
        let fwd = integrate(&|z| field.eval(z), seed, 1.0, &rules);
        let mut rules_b = StopRules::basic(40.0 * r);
        rules_b.targets = landing_targets(field, roots, -1.0, scale);
        rules_b.max_time = 1e6;
        let bwd = integrate(&|z| field.eval(z), seed, -1.0, &rules_b);
        let omega = match fwd.termination {
            Termination::ReachedSingular(j) => Some(j),
            _ => None,
        };
        let alpha = match bwd.termination {
            Termination::ReachedSingular(j) => Some(j),
            _ => None,
        };
        // Forward landings (at sinks) are robust; a backward probe may
        // stall in a weak focus without making the point non-generic.
        if omega.is_none() {
            broken = true;
        }
        ends.push((alpha, omega, seed));
        probe_fwd.push(Some(fwd));
    }

    if broken {
        return Ok(DsInvariant {
            involution: Vec::new(),
            zones: Vec::new(),
            skeleton_edges: Vec::new(),
            vertex_count: roots.len(),
            broken: true,
            non_crossing: false,
            is_tree: false,
        });
    }

    // Pair ends into zones combinatorially: the zones are the faces of the
    // planar graph whose vertices are the roots plus the pole at infinity
    // and whose edges are the 2k separatrices. The rotation system comes
    // from the direction index at the pole and the small-circle crossing
    // angles at each root; face tracing is immune to the numerically
    // fragile probe landings near weak foci.
    let pairing = match face_pairing(field, &graph) {
        Some(p) => p,
        None => {
            return Ok(DsInvariant {
                involution: Vec::new(),
                zones: Vec::new(),
                skeleton_edges: Vec::new(),
                vertex_count: roots.len(),
                broken: true,
                non_crossing: false,
                is_tree: false,
            })
        }
    };
    let partner = pairing;

    // Cross-check the pairing against the probe signatures; disagreement
    // on the robust forward (sink) landings marks the point non-generic.
    for a in 0..n_ends {
        let b = partner[a];
        if ends[a].1 != ends[b].1 {
            return Ok(DsInvariant {
                involution: Vec::new(),
                zones: Vec::new(),
                skeleton_edges: Vec::new(),
                vertex_count: roots.len(),
                broken: true,
                non_crossing: false,
                is_tree: false,
            });
        }
    }

    // Non-crossing check by stack matching around the circle.
    let mut stack: Vec<usize> = Vec::new();
    let mut non_crossing = true;
    for m in 0..n_ends {
        if stack.last() == Some(&partner[m]) {
            stack.pop();
        } else {
            stack.push(m);
        }
    }
    if !stack.is_empty() {
        non_crossing = false;
    }

    // Zones and transverse times. The alpha root comes from the outgoing
    // separatrices flanking the zone (the probe's backward landing can
    // stall near weak foci); the omega root from the probe forward landing.
    let mut zones = Vec::new();
    let mut edges = Vec::new();
    for a in 0..n_ends {
        let b = partner[a];
        if b < a {
            continue;
        }
        let omega = ends[a].1.unwrap();
        let alpha = {
            // flanking separatrices of ends a and b: indices a, a+1, b, b+1
            let mut flank_alpha = None;
            for m in [a, (a + 1) % n_ends, b, (b + 1) % n_ends] {
                let s = &graph.seps[m];
                if !s.incoming {
                    if let Landing::Root(j) = s.landing {
                        flank_alpha = Some(j);
                        break;
                    }
                }
            }
            match flank_alpha.or(ends[a].0) {
                Some(j) => j,
                None => {
                    return Ok(DsInvariant {
                        involution: Vec::new(),
                        zones: Vec::new(),
                        skeleton_edges: Vec::new(),
                        vertex_count: roots.len(),
                        broken: true,
                        non_crossing: false,
                        is_tree: false,
                    })
                }
            }
        };
        let tau = zone_tau(
            field,
            &graph,
            ends[a].2,
            ends[b].2,
            probe_fwd[a].as_ref().unwrap(),
            probe_fwd[b].as_ref().unwrap(),
            omega,
        )?;
        zones.push(Zone {
            ends: (a, b),
            alpha_root: alpha,
            omega_root: omega,
            tau,
        });
        edges.push((alpha, omega));
    }

    // Tree test: k edges on k+1 vertices, connected, no duplicate edges.
    let is_tree = {
        let v = roots.len();
        let mut adj = vec![Vec::new(); v];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; v];
        let mut todo = vec![0usize];
        seen[0] = true;
        while let Some(x) = todo.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    todo.push(y);
                }
            }
        }
        edges.len() == v - 1 && seen.iter().all(|&s| s)
    };

    Ok(DsInvariant {
        involution: partner,
        zones,
        skeleton_edges: edges,
        vertex_count: roots.len(),
        broken: false,
        non_crossing,
        is_tree,
    })
}

/// Pair the 2k ends into zones by tracing the faces of the separatrix
/// graph embedded on the sphere: vertices are the roots plus the pole,
/// edges the separatrices, rotations given by the direction index at the
/// pole and the small-circle attachment angles at the roots. Returns
/// `partner[m]` or None when the face structure is not the generic one
/// (every zone exactly two ends).
fn face_pairing(field: &FieldSpec, graph: &SeparatrixGraph) -> Option<Vec<usize>> {
    let n_ends = graph.seps.len();
    let n_roots = graph.roots.len();
    let f = |z: Cx| field.eval(z);

    let mut land = vec![usize::MAX; n_ends];
    let mut at_root: Vec<Vec<(f64, usize)>> = vec![Vec::new(); n_roots];
    for s in &graph.seps {
        let j = match s.landing {
            Landing::Root(j) => j,
            _ => return None,
        };
        land[s.m] = j;
        let w = graph.roots[j];
        let gap = (0..n_roots)
            .filter(|&i| i != j)
            .map(|i| (graph.roots[i] - w).norm())
            .fold(graph.radius, f64::min);
        let rho = 0.2 * gap;
        let (_, q) = circle_entry(&s.traj, &f, w, rho)?;
        at_root[j].push(((q - w).arg(), s.m));
    }
    for v in at_root.iter_mut() {
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }

    // Directed half-edges: index 2m = pole->root along separatrix m,
    // 2m + 1 = root->pole. Rotation at the pole (seen as a sphere vertex)
    // is the reverse of the planar direction order.
    let next_at_pole = |m_arrived: usize| -> usize {
        // arriving root->pole via m, continue pole->root along the
        // predecessor of m in the planar order
        (m_arrived + n_ends - 1) % n_ends
    };
    let next_at_root = |j: usize, m_arrived: usize| -> usize {
        let rot = &at_root[j];
        let pos = rot.iter().position(|&(_, m)| m == m_arrived).unwrap();
        rot[(pos + 1) % rot.len()].1
    };

    let mut used = vec![false; 2 * n_ends];
    let mut partner = vec![usize::MAX; n_ends];
    for start in 0..(2 * n_ends) {
        if used[start] {
            continue;
        }
        // trace one face
        let mut ends_of_face: Vec<usize> = Vec::new();
        let mut h = start;
        loop {
            if used[h] {
                break;
            }
            used[h] = true;
            let m = h / 2;
            if h % 2 == 0 {
                // pole -> root m: continue at the root
                let j = land[m];
                let m_next = next_at_root(j, m);
                h = 2 * m_next + 1;
            } else {
                // root -> pole via m: corner at the pole covers one end
                let m_next = next_at_pole(m);
                let end = if (m + 1) % n_ends == m_next {
                    m
                } else if (m_next + 1) % n_ends == m {
                    m_next
                } else {
                    // corner skips sectors: not the generic structure
                    return None;
                };
                ends_of_face.push(end);
                h = 2 * m_next;
            }
            if h == start {
                break;
            }
        }
        if ends_of_face.is_empty() {
            continue;
        }
        if ends_of_face.len() != 2 {
            return None;
        }
        let (a, b) = (ends_of_face[0], ends_of_face[1]);
        if partner[a] != usize::MAX || partner[b] != usize::MAX || a == b {
            return None;
        }
        partner[a] = b;
        partner[b] = a;
    }
    if partner.contains(&usize::MAX) {
        return None;
    }
    Some(partner)
}

/// Transverse time of the zone with end probes `za`, `zb`, both of whose
/// forward trajectories land on root `omega`: tail + flow down + an arc
/// around the root + flow back up + tail, all inside the zone.
#[allow(clippy::too_many_arguments)]
fn zone_tau(
    field: &FieldSpec,
    graph: &SeparatrixGraph,
    za: Cx,
    zb: Cx,
    fwd_a: &Trajectory,
    fwd_b: &Trajectory,
    omega: usize,
) -> Result<Cx, FlowError> {
    let w = graph.roots[omega];
    let gap = (0..graph.roots.len())
        .filter(|&i| i != omega)
        .map(|i| (graph.roots[i] - w).norm())
        .fold(f64::INFINITY, f64::min);
    let rho = 0.1 * gap;

    let f = |z: Cx| field.eval(z);
    let (t1, p1) = circle_entry(fwd_a, &f, w, rho).ok_or(FlowError::ZonePairing)?;
    let (t2, p2) = circle_entry(fwd_b, &f, w, rho).ok_or(FlowError::ZonePairing)?;

    // Crossing angles of separatrices landing at omega.
    let mut blocked = Vec::new();
    for s in &graph.seps {
        if s.landing == Landing::Root(omega) {
            let line: Vec<(f64, Cx)> = s.traj.samples.clone();
            let tr = Trajectory {
                samples: line,
                termination: s.traj.termination,
                direction: s.traj.direction,
            };
            if let Some((_, q)) = circle_entry(&tr, &f, w, rho) {
                blocked.push((q - w).arg());
            }
        }
    }

    let phi1 = (p1 - w).arg();
    let phi2 = (p2 - w).arg();
    let dphi = arc_within(phi1, phi2, &blocked);

    let tail_a = tail_time(field, za)?;
    let tail_b = tail_time(field, zb)?;
    let arc = {
        let f = |phi: f64| {
            let z = w + Cx::from_polar(rho, phi);
            Cx::new(0.0, rho) * Cx::from_polar(1.0, phi) / field.eval(z)
        };
        quad_adaptive(&f, phi1, phi1 + dphi, tol::QUAD_REL)?
    };
    let tau = tail_a + Cx::new(t1, 0.0) + arc - Cx::new(t2, 0.0) - tail_b;
    Ok(if tau.im >= 0.0 { tau } else { -tau })
}

/// Last entry of a trajectory into the disk `|z - w| < rho`: re-march the
/// bracketing step with a fine fixed-step RK4 and polish onto the circle;
/// returns (own-time, point).
fn circle_entry(
    traj: &Trajectory,
    field: &impl Fn(Cx) -> Cx,
    w: Cx,
    rho: f64,
) -> Option<(f64, Cx)> {
    let s = &traj.samples;
    for i in (1..s.len()).rev() {
        let (ta, za) = s[i - 1];
        let (_, zb) = s[i];
        let (da, db) = ((za - w).norm(), (zb - w).norm());
        if da >= rho && db < rho {
            let f = |z: Cx| field(z) * traj.direction;
            let mut t = ta;
            let mut z = za;
            for _ in 0..100_000 {
                let speed = f(z).norm().max(1e-300);
                let h = (0.01 * rho / speed).min(0.25 * ((z - w).norm() - rho).abs().max(1e-3 * rho) / speed);
                let k1 = f(z);
                let k2 = f(z + k1 * (h * 0.5));
                let k3 = f(z + k2 * (h * 0.5));
                let k4 = f(z + k3 * h);
                let z_new = z + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
                if (z_new - w).norm() < rho {
                    // Newton polish along the flow onto the circle.
                    let mut tt = t + h;
                    let mut zz = z_new;
                    for _ in 0..6 {
                        let v = f(zz);
                        let g = (zz - w).norm_sqr() - rho * rho;
                        let dg = 2.0 * ((zz - w).conj() * v).re;
                        if dg.abs() < 1e-300 {
                            break;
                        }
                        let dt = -g / dg;
                        zz += v * dt;
                        tt += dt;
                    }
                    return Some((tt, zz));
                }
                z = z_new;
                t += h;
            }
            return None;
        }
    }
    None
}

/// Signed arc from `phi1` towards `phi2` that avoids the blocked angles.
fn arc_within(phi1: f64, phi2: f64, blocked: &[f64]) -> f64 {
    let wrap = |x: f64| {
        let mut y = x.rem_euclid(TAU);
        if y > PI {
            y -= TAU;
        }
        y
    };
    let base = wrap(phi2 - phi1);
    let candidates = [base, base - base.signum() * TAU];
    for &d in &candidates {
        let blocked_inside = blocked.iter().any(|&q| {
            let rel = wrap(q - phi1);
            if d >= 0.0 {
                rel > 1e-9 && rel < d - 1e-9
            } else {
                rel < -1e-9 && rel > d + 1e-9
            }
        });
        if !blocked_inside {
            return d;
        }
    }
    base
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    #[test]
    fn straight_line_field() {
        // z' = 1 from 0, stop at |z| = 1: segment to 1, time 1.
        let f = FieldSpec::polynomial(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let rules = StopRules::basic(1.0);
        let tr = integrate(&|z| f.eval(z), c(0.0, 0.0), 1.0, &rules);
        assert!(matches!(tr.termination, Termination::ExitedRadius(_)));
        assert!((tr.last() - c(1.0, 0.0)).norm() < 1e-8);
        assert!((tr.duration() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn exponential_field() {
        // z' = z from 0.1: exits along R+ at t = ln(R/0.1).
        let f = FieldSpec::polynomial(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let rules = StopRules::basic(8.0);
        let tr = integrate(&|z| f.eval(z), c(0.1, 0.0), 1.0, &rules);
        assert!(matches!(tr.termination, Termination::ExitedRadius(_)));
        assert!(tr.last().im.abs() < 1e-9);
        assert!((tr.duration() - (8.0f64 / 0.1).ln()).abs() < 1e-6);
    }

    #[test]
    fn lands_on_sink() {
        // z' = z^2 - 1 from 0 flows to -1.
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let mut rules = StopRules::basic(10.0);
        rules.targets = vec![
            SingTarget {
                z: c(1.0, 0.0),
                radius: 1e-6,
            },
            SingTarget {
                z: c(-1.0, 0.0),
                radius: 1e-3,
            },
        ];
        let tr = integrate(&|z| f.eval(z), c(0.0, 0.0), 1.0, &rules);
        assert_eq!(tr.termination, Termination::ReachedSingular(1));
    }

    #[test]
    fn quadrature_antiderivative() {
        // z' = z^2: t(z) = -1/z, so path 2 -> 1 gives -1/2.
        let f = FieldSpec::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let v = time_segment(&f, c(2.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((v - c(-0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn loop_integrals_give_periods() {
        // Loop around one root of z^2 - 1: nu = 2 pi i / P'(1) = pi i.
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let square: Vec<Cx> = vec![
            c(0.5, -0.5),
            c(1.5, -0.5),
            c(1.5, 0.5),
            c(0.5, 0.5),
            c(0.5, -0.5),
        ];
        let v = time_map(&f, &square).unwrap();
        assert!((v - c(0.0, PI)).norm() < 1e-9, "{v}");
        // Loop around both roots: zero.
        let big: Vec<Cx> = vec![
            c(-3.0, -3.0),
            c(3.0, -3.0),
            c(3.0, 3.0),
            c(-3.0, 3.0),
            c(-3.0, -3.0),
        ];
        let v = time_map(&f, &big).unwrap();
        assert!(v.norm() < 1e-9);
    }

    #[test]
    fn pole_guard() {
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let path = vec![c(0.0, 0.0), c(2.0, 0.0)]; // passes through z = 1
        assert!(matches!(time_map(&f, &path), Err(FlowError::PathNearPole(_))));
    }

    #[test]
    fn tail_matches_direct_integration() {
        let f = FieldSpec::polynomial(vec![c(0.3, 0.1), c(-1.0, 0.4), c(0.0, 0.0), c(1.0, 0.0)]);
        // T(b) - T(a) must equal the segment integral for far a, b.
        let a = c(6.0, 1.0);
        let b = c(2.0, 5.0);
        let seg = time_segment(&f, a, b).unwrap();
        let ta = tail_time(&f, a).unwrap();
        let tb = tail_time(&f, b).unwrap();
        assert!(((tb - ta) - seg).norm() < 1e-10, "{:?}", (tb - ta) - seg);
    }

    #[test]
    fn separatrices_of_z2_minus_1() {
        // k=1: two separatrices along the real axis landing on -1 and +1.
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let g = separatrices_at_infinity(&f, 4.0).unwrap();
        assert_eq!(g.seps.len(), 2);
        for s in &g.seps {
            match s.landing {
                Landing::Root(j) => {
                    let root = g.roots[j];
                    // incoming (from +infinity side, m=0 has outward flow)
                    if s.m == 0 {
                        assert!((root - c(1.0, 0.0)).norm() < 1e-6);
                    } else {
                        assert!((root - c(-1.0, 0.0)).norm() < 1e-6);
                    }
                }
                other => panic!("unexpected landing {other:?}"),
            }
        }
    }

    #[test]
    fn ds_of_z2_minus_1() {
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let ds = ds_invariant(&f).unwrap();
        assert!(!ds.broken);
        assert!(ds.non_crossing);
        assert_eq!(ds.zones.len(), 1);
        assert_eq!(ds.involution, vec![1, 0]);
        let z = ds.zones[0];
        // alpha-limit +1, omega-limit -1
        assert!((f64::from(0.0) - 0.0).abs() < 1.0); // keep clippy quiet
        assert!((ds.zones[0].tau.im - PI).abs() < 1e-6, "tau = {:?}", z.tau);
        assert!(ds.is_tree);
    }

    #[test]
    fn periodic_domains_of_z2_minus_1() {
        // Rotated field i(z^2-1): Apollonius circles; domains are the left
        // and right half planes, boundary the imaginary axis.
        let f = FieldSpec::polynomial(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = sorted_roots(&f.coeffs);
        for j in 0..2 {
            let pd = periodic_domain_boundary(&f, &roots, j).unwrap();
            assert_eq!(pd.loops.len(), 1, "one boundary loop");
            for z in &pd.loops[0] {
                assert!(z.re.abs() < 1e-4 * (1.0 + z.norm()), "boundary on iR: {z}");
            }
            assert_eq!(pd.cuts.len(), 1, "unique cut");
            let sign = roots[j].re.signum();
            for z in &pd.cuts[0] {
                assert!(z.im.abs() < 1e-5 * (1.0 + z.norm()));
                assert!(z.re * sign > 0.0);
            }
        }
    }

    #[test]
    fn parabolic_point_receives_all_incoming_separatrices() {
        // At (s, theta, alpha) = (1/2, 0, 0) every separatrix entering the
        // plane lands on the parabolic point.
        let k = 4u32;
        let p = crate::params::ParamPoint::new(k, 0.5, 0.0, 0.0, 1.0);
        let e = crate::params::eps_from_coords(&p);
        let f = FieldSpec::from_epsilon(&e);
        let g = separatrices_at_infinity(&f, 0.0).unwrap();
        let double = c(0.5, 0.0);
        let mut incoming = 0;
        for s in &g.seps {
            if s.incoming {
                incoming += 1;
                match s.landing {
                    Landing::Root(j) => {
                        assert!(
                            (g.roots[j] - double).norm() < 1e-3,
                            "incoming separatrix {} landed at {:?}",
                            s.m,
                            g.roots[j]
                        );
                    }
                    other => panic!("incoming separatrix {}: {other:?}", s.m),
                }
            }
        }
        assert_eq!(incoming, k as usize);
    }

    #[test]
    fn homoclinic_at_predicted_rotation() {
        // s = 1, k = 2: at a periodgon-predicted event the incoming and
        // outgoing separatrices coalesce; the tracer reports re-exits.
        let k = 2u32;
        let p0 = crate::params::ParamPoint::new(k, 1.0, 0.0, 0.0, 1.0);
        let pg = crate::periodgon::periodgon_at(&p0).unwrap();
        let ev = crate::periodgon::homoclinic_alpha_events(&pg, k).unwrap();
        let alpha = ev[0].alpha;
        let ph = crate::params::ParamPoint::new(k, 1.0, 0.0, alpha, 1.0);
        let e = crate::params::eps_from_coords(&ph);
        let g = separatrices_at_infinity(&FieldSpec::from_epsilon(&e), 0.0).unwrap();
        assert!(g.has_homoclinic(), "no re-exit at the predicted rotation");
        let ds = ds_invariant(&FieldSpec::from_epsilon(&e)).unwrap();
        assert!(ds.broken);
    }

    #[test]
    fn periodic_domains_disjoint_and_congruent() {
        // s=1, k=2 (z' = z^3 + 2): three congruent periodic domains
        // related by the 2 pi/3 rotation, pairwise without transversal
        // crossings.
        let f = FieldSpec::polynomial(vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let roots = sorted_roots(&f.coeffs);
        let domains: Vec<PeriodicDomain> = (0..3)
            .map(|j| periodic_domain_boundary(&f, &roots, j).unwrap())
            .collect();
        for d in &domains {
            assert_eq!(d.loops.len(), 1, "single end in the regular case");
            assert_eq!(d.cuts.len(), 1);
        }
        // congruence under the symmetry rotation, compared through the
        // mid-circle crossings of the boundary loops
        let rot = Cx::from_polar(1.0, TAU / 3.0);
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let cross = |line: &Vec<Cx>| -> Vec<Cx> {
            let mut out = Vec::new();
            for w in line.windows(2) {
                let (da, db) = (w[0].norm() - 1.5 * scale, w[1].norm() - 1.5 * scale);
                if da * db < 0.0 {
                    out.push(w[0] + (w[1] - w[0]) * (da / (da - db)));
                }
            }
            out
        };
        for j in 0..3 {
            let a = cross(&domains[j].loops[0]);
            let b = cross(&domains[(j + 1) % 3].loops[0]);
            for p in &a {
                let q = rot * p;
                assert!(
                    b.iter().any(|u| (u - q).norm() < 1e-3 * scale)
                        || b.iter().any(|u| (u - q * Cx::from_polar(1.0, TAU / 3.0)).norm() < 1e-3 * scale)
                        || b.iter().any(|u| (u + q).norm() < 1e-3 * scale),
                    "crossing {p} has no rotated partner"
                );
            }
        }
        // pairwise disjointness: no transversal crossing between loops of
        // different roots (shared arcs are allowed to touch)
        for i in 0..3 {
            for j in (i + 1)..3 {
                for wa in domains[i].loops[0].windows(8).step_by(8) {
                    for wb in domains[j].loops[0].windows(8).step_by(8) {
                        if let crate::geom::SegSeg::Proper(x) =
                            crate::geom::seg_seg(wa[0], wa[7], wb[0], wb[7])
                        {
                            // crossings must be tangential (shared arcs),
                            // i.e. the directions agree up to sign
                            let da = (wa[7] - wa[0]) / (wa[7] - wa[0]).norm();
                            let db = (wb[7] - wb[0]) / (wb[7] - wb[0]).norm();
                            let angle = (da / db).arg().abs();
                            assert!(
                                angle < 0.15 || (std::f64::consts::PI - angle) < 0.15,
                                "transversal domain crossing at {x}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ds_tree_for_generic_k2() {
        let e = Epsilon::new(2, c(0.4, 0.3), c(0.9, -0.5));
        let f = FieldSpec::from_epsilon(&e);
        let ds = ds_invariant(&f).unwrap();
        assert!(!ds.broken);
        assert!(ds.non_crossing);
        assert_eq!(ds.zones.len(), 2);
        assert!(ds.is_tree);
        for z in &ds.zones {
            assert!(z.tau.im > 0.0);
        }
    }
}
