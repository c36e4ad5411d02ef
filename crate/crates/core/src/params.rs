//! Parameter space of the family `z' = z^{k+1} + eps1*z + eps0`.
//!
//! The family is studied on the sphere `||eps|| = 1` with chart
//! `(s, theta, alpha)` plus the scale `zeta = ||eps||`:
//!
//! ```text
//! eps0 = k (zeta s)^{k+1} e^{i(theta - (k+1) alpha)}
//! eps1 = -(k+1) (zeta (1-s))^k e^{-i k alpha}
//! ```
//!
//! Slits along `theta = 2 pi m / k`, `s in [0, 1/2]` carry a two-sided
//! branch tag because the equilibrium labeling jumps there.

use num_complex::Complex64 as Cx;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("zero parameter: eps = 0 has no sphere coordinates")]
    ZeroParameter,
    #[error("branch tag {0:?} is only valid on a slit ray (theta = 2 pi m / k, s <= 1/2)")]
    BranchOffSlit(Branch),
}

/// Raw coefficients of the family, `z' = z^{k+1} + eps1*z + eps0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Epsilon {
    pub k: u32,
    pub eps1: Cx,
    pub eps0: Cx,
}

impl Epsilon {
    pub fn new(k: u32, eps1: Cx, eps0: Cx) -> Self {
        assert!(k >= 1, "k must be a positive integer");
        assert!(
            eps1.is_finite() && eps0.is_finite(),
            "epsilon entries must be finite"
        );
        Epsilon { k, eps1, eps0 }
    }

    /// Monic coefficient list `[eps0, eps1, 0, ..., 0, 1]` of degree k+1.
    pub fn poly_coeffs(&self) -> Vec<Cx> {
        let mut c = vec![Cx::new(0.0, 0.0); self.k as usize + 2];
        c[0] = self.eps0;
        c[1] = self.eps1;
        c[self.k as usize + 1] = Cx::new(1.0, 0.0);
        c
    }
}

/// Which side of a slit ray a parameter point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Interior,
    /// Limit from `theta > 2 pi m / k`.
    SlitAbove(u32),
    /// Limit from `theta < 2 pi m / k`.
    SlitBelow(u32),
}

/// Chart point `(s, theta, alpha, zeta)` on (a cone over) the parameter
/// sphere, with the slit branch tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub k: u32,
    pub s: f64,
    pub theta: f64,
    pub alpha: f64,
    pub zeta: f64,
    pub branch: Branch,
}

impl ParamPoint {
    pub fn new(k: u32, s: f64, theta: f64, alpha: f64, zeta: f64) -> Self {
        assert!(k >= 1);
        assert!((0.0..=1.0).contains(&s), "s must lie in [0,1]");
        assert!(zeta >= 0.0, "zeta must be nonnegative");
        ParamPoint {
            k,
            s,
            theta,
            alpha,
            zeta,
            branch: Branch::Interior,
        }
    }

    /// Attach a slit branch tag. Valid only on an exact slit hit.
    pub fn with_branch(mut self, branch: Branch) -> Result<Self, ParamError> {
        if branch != Branch::Interior && !self.on_slit() {
            return Err(ParamError::BranchOffSlit(branch));
        }
        self.branch = branch;
        Ok(self)
    }

    /// True when `theta` is within tolerance of a slit ray `2 pi m / k` and
    /// `s <= 1/2`.
    pub fn on_slit(&self) -> bool {
        self.slit_index().is_some() && self.s <= 0.5 + tol::SLIT_HIT
    }

    /// Index `m` of the slit ray `theta = 2 pi m / k (mod 2 pi)` this point
    /// sits on, if any.
    pub fn slit_index(&self) -> Option<u32> {
        let k = self.k as f64;
        let t = self.theta * k / TAU;
        let m = t.round();
        if (t - m).abs() * TAU / k < tol::SLIT_HIT {
            Some((m.rem_euclid(k)) as u32)
        } else {
            None
        }
    }
}

/// The cone norm `(|eps0|/k)^{1/(k+1)} + (|eps1|/(k+1))^{1/k}`; zero iff
/// `eps = 0`.
pub fn norm_eps(e: &Epsilon) -> f64 {
    let k = e.k as f64;
    (e.eps0.norm() / k).powf(1.0 / (k + 1.0)) + (e.eps1.norm() / (k + 1.0)).powf(1.0 / k)
}

/// Coefficients from chart coordinates.
pub fn eps_from_coords(p: &ParamPoint) -> Epsilon {
    let k = p.k as f64;
    let r0 = (p.zeta * p.s).powf(k + 1.0) * k;
    let r1 = (p.zeta * (1.0 - p.s)).powf(k) * (k + 1.0);
    let eps0 = Cx::from_polar(r0, p.theta - (k + 1.0) * p.alpha);
    let eps1 = -Cx::from_polar(r1, -k * p.alpha);
    Epsilon {
        k: p.k,
        eps1,
        eps0,
    }
}

fn rem_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// All chart representatives of a nonzero `eps`, with `alpha` reduced to
/// `[0, 2 pi / k)` under the quotient identifications. Interior parameters
/// have one representative; the poles of the `(s, theta)` disk have the
/// degenerate extras.
pub fn coords_from_eps(e: &Epsilon) -> Result<Vec<ParamPoint>, ParamError> {
    let k = e.k as f64;
    let r0 = (e.eps0.norm() / k).powf(1.0 / (k + 1.0));
    let r1 = (e.eps1.norm() / (k + 1.0)).powf(1.0 / k);
    let zeta = r0 + r1;
    if zeta == 0.0 {
        return Err(ParamError::ZeroParameter);
    }
    let s = r0 / zeta;
    let sector = TAU / k;

    let mut out = Vec::new();
    if r1 > 0.0 {
        // arg eps1 = pi - k alpha  (mod 2 pi)
        let alpha = rem_tau((PI - e.eps1.arg()) / k + TAU).rem_euclid(sector);
        if r0 > 0.0 {
            let theta = rem_tau(e.eps0.arg() + (k + 1.0) * alpha);
            out.push(ParamPoint {
                k: e.k,
                s,
                theta,
                alpha,
                zeta,
                branch: Branch::Interior,
            });
        } else {
            // s = 0: theta is immaterial, canonical representative theta = 0.
            out.push(ParamPoint {
                k: e.k,
                s: 0.0,
                theta: 0.0,
                alpha,
                zeta,
                branch: Branch::Interior,
            });
        }
    } else {
        // s = 1: canonical theta = 0, alpha determined mod 2 pi/(k+1);
        // list the representatives falling inside [0, 2 pi / k).
        let base = rem_tau(-e.eps0.arg() / (k + 1.0) + TAU);
        for t in 0..(e.k + 1) {
            let alpha = rem_tau(base + t as f64 * TAU / (k + 1.0));
            if alpha < sector - 1e-15 {
                out.push(ParamPoint {
                    k: e.k,
                    s: 1.0,
                    theta: 0.0,
                    alpha,
                    zeta,
                    branch: Branch::Interior,
                });
            }
        }
        out.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    }
    Ok(out)
}

/// Reflection symmetry `(eps1, eps0) -> (conj eps1, e^{2 pi i m / k} conj eps0)`;
/// conjugates the field by a reflection of the z-plane.
pub fn apply_symmetry(e: &Epsilon, m: i64) -> Epsilon {
    let phase = Cx::from_polar(1.0, TAU * m as f64 / e.k as f64);
    Epsilon {
        k: e.k,
        eps1: e.eps1.conj(),
        eps0: phase * e.eps0.conj(),
    }
}

/// Time-reversing symmetry
/// `(eps1, eps0) -> (-conj eps1, -e^{(2m+1) pi i / k} conj eps0)`.
pub fn apply_reversal(e: &Epsilon, m: i64) -> Epsilon {
    let phase = Cx::from_polar(1.0, PI * (2 * m + 1) as f64 / e.k as f64);
    Epsilon {
        k: e.k,
        eps1: -e.eps1.conj(),
        eps0: -phase * e.eps0.conj(),
    }
}

/// Record of the plane transformation that carries the reduced phase
/// portrait back onto the input's: `z_input = rot * (conj? z.conj() : z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformTag {
    /// Unit rotation applied after the optional conjugation.
    pub rot: Cx,
    /// Whether the plane is reflected across the real axis first.
    pub conj: bool,
}

impl TransformTag {
    pub fn identity() -> Self {
        TransformTag {
            rot: Cx::new(1.0, 0.0),
            conj: false,
        }
    }

    /// Map a point of the reduced portrait to the input portrait.
    pub fn apply(&self, z: Cx) -> Cx {
        self.rot * if self.conj { z.conj() } else { z }
    }
}

/// Reduce a chart point to the fundamental sector `alpha = 0`,
/// `theta in [-pi/k, 0]`, returning the transformation that recovers the
/// input portrait from the reduced one.
pub fn reduce_to_fundamental(p: &ParamPoint) -> (ParamPoint, TransformTag) {
    let k = p.k as f64;
    let sector = TAU / k;
    // theta = theta0 + 2 pi m / k with theta0 in (-pi/k, pi/k].
    let m = (p.theta / sector - 0.5).ceil();
    let theta0 = p.theta - m * sector;
    let (theta_red, conj) = if theta0 > tol::SLIT_HIT {
        (-theta0, true)
    } else {
        (theta0, false)
    };
    let rot = Cx::from_polar(1.0, m * sector - p.alpha);
    let branch = match (p.branch, conj) {
        (Branch::Interior, _) => Branch::Interior,
        (Branch::SlitAbove(_), false) => Branch::SlitAbove(0),
        (Branch::SlitBelow(_), false) => Branch::SlitBelow(0),
        // A reflection swaps the two sides of a slit.
        (Branch::SlitAbove(_), true) => Branch::SlitBelow(0),
        (Branch::SlitBelow(_), true) => Branch::SlitAbove(0),
    };
    (
        ParamPoint {
            k: p.k,
            s: p.s,
            theta: theta_red,
            alpha: 0.0,
            zeta: p.zeta,
            branch,
        },
        TransformTag { rot, conj },
    )
}
