//! Dense complex polynomials and the simultaneous-iteration root solver.
//!
//! Coefficients are stored low degree first. The family polynomials are
//! sparse (three terms) but degrees stay small, so dense storage keeps the
//! code simple.

use num_complex::Complex64 as Cx;

/// Evaluate `p` at `z` by Horner's rule.
pub fn eval(coeffs: &[Cx], z: Cx) -> Cx {
    let mut acc = Cx::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Evaluate `p` and `p'` at `z` in one pass.
pub fn eval_with_derivative(coeffs: &[Cx], z: Cx) -> (Cx, Cx) {
    let mut p = Cx::new(0.0, 0.0);
    let mut dp = Cx::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Coefficients of the derivative.
pub fn derivative(coeffs: &[Cx]) -> Vec<Cx> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

/// Divide `p` by `(z - r)`, dropping the remainder (synthetic division).
pub fn deflate(coeffs: &[Cx], r: Cx) -> Vec<Cx> {
    let n = coeffs.len();
    debug_assert!(n >= 2);
    let mut q = vec![Cx::new(0.0, 0.0); n - 1];
    let mut carry = coeffs[n - 1];
    for i in (0..n - 1).rev() {
        q[i] = carry;
        carry = coeffs[i] + carry * r;
    }
    q
}

/// One Newton polish of a root.
pub fn newton_step(coeffs: &[Cx], z: Cx) -> Cx {
    let (p, dp) = eval_with_derivative(coeffs, z);
    if dp.norm() == 0.0 {
        z
    } else {
        z - p / dp
    }
}

/// Scale against which root residuals are judged: `max(1, |z|^{deg})`.
pub fn residual_scale(deg: usize, z: Cx) -> f64 {
    z.norm().powi(deg as i32).max(1.0)
}

/// Aberth-Ehrlich simultaneous iteration, polishing `roots` in place.
/// Starts from the supplied guesses (they must be pairwise distinct) and
/// stops when every residual is below `tol * max(1, |z|^{deg})`.
/// Returns false if the iteration budget is exhausted first.
pub fn aberth(coeffs: &[Cx], roots: &mut [Cx], tol: f64, max_iter: usize) -> bool {
    let deg = coeffs.len() - 1;
    debug_assert_eq!(roots.len(), deg);
    for _ in 0..max_iter {
        let mut worst = 0.0f64;
        let mut offsets = vec![Cx::new(0.0, 0.0); deg];
        for i in 0..deg {
            let z = roots[i];
            let (p, dp) = eval_with_derivative(coeffs, z);
            let res = p.norm() / residual_scale(deg, z);
            worst = worst.max(res);
            if dp.norm() == 0.0 {
                continue;
            }
            let newton = p / dp;
            let mut repulse = Cx::new(0.0, 0.0);
            for (j, &w) in roots.iter().enumerate() {
                if j != i {
                    let d = z - w;
                    if d.norm() > 0.0 {
                        repulse += 1.0 / d;
                    }
                }
            }
            let denom = Cx::new(1.0, 0.0) - newton * repulse;
            offsets[i] = if denom.norm() > 1e-300 {
                newton / denom
            } else {
                newton
            };
        }
        for i in 0..deg {
            roots[i] -= offsets[i];
        }
        if worst < tol {
            return true;
        }
    }
    let deg_scale = |z: Cx| residual_scale(deg, z);
    roots
        .iter()
        .all(|&z| eval(coeffs, z).norm() / deg_scale(z) < tol)
}

/// Solve from scratch: initial guesses on a circle sized by the coefficient
/// magnitudes, then Aberth iteration.
pub fn all_roots(coeffs: &[Cx], tol: f64) -> Vec<Cx> {
    let deg = coeffs.len() - 1;
    assert!(deg >= 1, "constant polynomial has no roots");
    let lead = coeffs[deg].norm();
    assert!(lead > 0.0, "leading coefficient must be nonzero");
    // Cauchy-style radius bound.
    let radius = coeffs[..deg]
        .iter()
        .map(|c| (c.norm() / lead).powf(1.0 / (deg as f64)))
        .fold(0.5f64, f64::max)
        * 2.0;
    let mut roots: Vec<Cx> = (0..deg)
        .map(|i| {
            // Slightly irrational offset avoids symmetric stalls.
            let ang = std::f64::consts::TAU * (i as f64 + 0.41) / deg as f64 + 0.37;
            Cx::from_polar(radius, ang)
        })
        .collect();
    aberth(coeffs, &mut roots, tol, 200);
    for z in roots.iter_mut() {
        for _ in 0..3 {
            *z = newton_step(coeffs, *z);
        }
    }
    roots
}

/// Smallest pairwise distance among points.
pub fn min_gap(points: &[Cx]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            gap = gap.min((points[i] - points[j]).norm());
        }
    }
    gap
}
