//! Truncated multivariate power series over the complex numbers.
//!
//! One or two parameter variables, dense storage over all monomials of
//! total degree at most `order`. This is the coefficient arithmetic behind
//! the finite-jet normal form reduction; sizes stay tiny (order <= 8), so
//! simplicity beats sparse cleverness.

use num_complex::Complex64 as Cx;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub nvars: usize,
    pub order: usize,
    pub coeffs: Vec<Cx>,
}

/// Number of monomials in `nvars` variables with total degree <= order.
pub fn monomial_count(nvars: usize, order: usize) -> usize {
    match nvars {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        _ => panic!("only 1 or 2 parameter variables are supported"),
    }
}

impl Series {
    pub fn zero(nvars: usize, order: usize) -> Self {
        Series {
            nvars,
            order,
            coeffs: vec![Cx::new(0.0, 0.0); monomial_count(nvars, order)],
        }
    }

    pub fn constant(nvars: usize, order: usize, c: Cx) -> Self {
        let mut s = Self::zero(nvars, order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, Cx::new(1.0, 0.0))
    }

    /// The variable `eps_i`.
    pub fn var(nvars: usize, order: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut s = Self::zero(nvars, order);
        let mut exps = vec![0usize; nvars];
        exps[i] = 1;
        let idx = s.index(&exps);
        s.coeffs[idx] = Cx::new(1.0, 0.0);
        s
    }

    /// Dense index of a monomial exponent vector.
    pub fn index(&self, exps: &[usize]) -> usize {
        match self.nvars {
            1 => exps[0],
            2 => {
                let d = exps[0] + exps[1];
                d * (d + 1) / 2 + exps[1]
            }
            _ => unreachable!(),
        }
    }

    /// Exponents of the dense slot `idx`.
    pub fn exponents(&self, idx: usize) -> Vec<usize> {
        match self.nvars {
            1 => vec![idx],
            2 => {
                let mut d = 0usize;
                while (d + 1) * (d + 2) / 2 <= idx {
                    d += 1;
                }
                let b = idx - d * (d + 1) / 2;
                vec![d - b, b]
            }
            _ => unreachable!(),
        }
    }

    pub fn get(&self, exps: &[usize]) -> Cx {
        let d: usize = exps.iter().sum();
        if d > self.order {
            Cx::new(0.0, 0.0)
        } else {
            self.coeffs[self.index(exps)]
        }
    }

    pub fn set(&mut self, exps: &[usize], c: Cx) {
        let idx = self.index(exps);
        self.coeffs[idx] = c;
    }

    pub fn add(&self, rhs: &Series) -> Series {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &Series) -> Series {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }

    pub fn neg(&self) -> Series {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a = -*a;
        }
        out
    }

    pub fn scale(&self, c: Cx) -> Series {
        let mut out = self.clone();
        for a in out.coeffs.iter_mut() {
            *a *= c;
        }
        out
    }

    pub fn mul(&self, rhs: &Series) -> Series {
        let mut out = Series::zero(self.nvars, self.order);
        for i in 0..self.coeffs.len() {
            if self.coeffs[i].norm_sqr() == 0.0 {
                continue;
            }
            let ei = self.exponents(i);
            let di: usize = ei.iter().sum();
            for j in 0..rhs.coeffs.len() {
                if rhs.coeffs[j].norm_sqr() == 0.0 {
                    continue;
                }
                let ej = rhs.exponents(j);
                let dj: usize = ej.iter().sum();
                if di + dj > self.order {
                    continue;
                }
                let exps: Vec<usize> = ei.iter().zip(&ej).map(|(a, b)| a + b).collect();
                let idx = out.index(&exps);
                out.coeffs[idx] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        out
    }

    /// Lowest total degree carrying a coefficient above `tol`; `None` when
    /// the series is numerically zero.
    pub fn valuation(&self, tol: f64) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() > tol {
                let d: usize = self.exponents(i).iter().sum();
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Numeric evaluation at a parameter point.
    pub fn eval(&self, args: &[Cx]) -> Cx {
        let mut acc = Cx::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let exps = self.exponents(i);
            let mut term = *c;
            for (v, &e) in args.iter().zip(&exps) {
                term *= v.powu(e as u32);
            }
            acc += term;
        }
        acc
    }

    /// Substitute series arguments for the variables (total-degree
    /// truncation preserved). `args[i]` replaces `eps_i`.
    pub fn compose(&self, args: &[Series]) -> Series {
        let mut acc = Series::zero(self.nvars, self.order);
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let exps = self.exponents(i);
            let mut term = Series::constant(self.nvars, self.order, *c);
            for (arg, &e) in args.iter().zip(&exps) {
                for _ in 0..e {
                    term = term.mul(arg);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }
}

/// A polynomial in `z` whose coefficients are parameter series; index =
/// power of `z`, truncated at a fixed z-order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZSeries {
    pub terms: Vec<Series>,
}

impl ZSeries {
    pub fn zero(nvars: usize, order: usize, z_order: usize) -> Self {
        ZSeries {
            terms: (0..=z_order).map(|_| Series::zero(nvars, order)).collect(),
        }
    }

    pub fn z_order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn add(&self, rhs: &ZSeries) -> ZSeries {
        ZSeries {
            terms: self
                .terms
                .iter()
                .zip(&rhs.terms)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &ZSeries) -> ZSeries {
        ZSeries {
            terms: self
                .terms
                .iter()
                .zip(&rhs.terms)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn mul(&self, rhs: &ZSeries) -> ZSeries {
        let zo = self.z_order();
        let (nv, or) = (self.terms[0].nvars, self.terms[0].order);
        let mut out = ZSeries::zero(nv, or, zo);
        for i in 0..=zo {
            if self.terms[i].max_coeff() == 0.0 {
                continue;
            }
            for j in 0..=(zo - i) {
                if rhs.terms[j].max_coeff() == 0.0 {
                    continue;
                }
                let prod = self.terms[i].mul(&rhs.terms[j]);
                out.terms[i + j] = out.terms[i + j].add(&prod);
            }
        }
        out
    }

    /// d/dz.
    pub fn dz(&self) -> ZSeries {
        let zo = self.z_order();
        let (nv, or) = (self.terms[0].nvars, self.terms[0].order);
        let mut out = ZSeries::zero(nv, or, zo);
        for i in 1..=zo {
            out.terms[i - 1] = self.terms[i].scale(Cx::new(i as f64, 0.0));
        }
        out
    }

    /// Composition `self(phi(z))` by Horner's rule in `phi`.
    pub fn compose_z(&self, phi: &ZSeries) -> ZSeries {
        let zo = self.z_order();
        let (nv, or) = (self.terms[0].nvars, self.terms[0].order);
        let mut acc = ZSeries::zero(nv, or, zo);
        for i in (0..=zo).rev() {
            acc = acc.mul(phi);
            acc.terms[0] = acc.terms[0].add(&self.terms[i]);
        }
        acc
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.iter().map(|s| s.max_coeff()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Cx {
        Cx::new(re, 0.0)
    }

    #[test]
    fn two_var_indexing_round_trips() {
        let s = Series::zero(2, 6);
        for idx in 0..s.coeffs.len() {
            let e = s.exponents(idx);
            assert!(e[0] + e[1] <= 6);
            assert_eq!(s.index(&e), idx);
        }
    }

    #[test]
    fn multiplication_truncates() {
        // (1 + e0)^2 = 1 + 2 e0 + e0^2
        let one = Series::one(2, 3);
        let e0 = Series::var(2, 3, 0);
        let s = one.add(&e0);
        let sq = s.mul(&s);
        assert_eq!(sq.get(&[0, 0]), c(1.0));
        assert_eq!(sq.get(&[1, 0]), c(2.0));
        assert_eq!(sq.get(&[2, 0]), c(1.0));
        assert_eq!(sq.get(&[0, 1]), c(0.0));
        // truncation: (e0 + e1)^4 at order 3 is zero
        let e1 = Series::var(2, 3, 1);
        let t = e0.add(&e1);
        let t4 = t.mul(&t).mul(&t).mul(&t);
        assert_eq!(t4.max_coeff(), 0.0);
    }

    #[test]
    fn valuation_and_eval() {
        let e0 = Series::var(1, 5, 0);
        let s = e0.mul(&e0).scale(c(3.0)); // 3 e0^2
        assert_eq!(s.valuation(1e-14), Some(2));
        let v = s.eval(&[Cx::new(0.5, 0.0)]);
        assert!((v - c(0.75)).norm() < 1e-15);
    }

    #[test]
    fn z_composition() {
        // w(z) = z^2, phi(z) = z + a z^2  =>  w(phi) = z^2 + 2a z^3 + a^2 z^4
        let (nv, or, zo) = (1, 2, 4);
        let mut w = ZSeries::zero(nv, or, zo);
        w.terms[2] = Series::one(nv, or);
        let mut phi = ZSeries::zero(nv, or, zo);
        phi.terms[1] = Series::one(nv, or);
        phi.terms[2] = Series::var(nv, or, 0); // a = eps_0
        let comp = w.compose_z(&phi);
        assert_eq!(comp.terms[2].get(&[0]), c(1.0));
        assert_eq!(comp.terms[3].get(&[1]), c(2.0));
        assert_eq!(comp.terms[4].get(&[2]), c(1.0));
    }

    #[test]
    fn series_compose() {
        // s(e) = 1 + e + e^2 composed with e -> 2t gives 1 + 2t + 4t^2.
        let e = Series::var(1, 2, 0);
        let s = Series::one(1, 2).add(&e).add(&e.mul(&e));
        let arg = Series::var(1, 2, 0).scale(c(2.0));
        let out = s.compose(&[arg]);
        assert_eq!(out.get(&[0]), c(1.0));
        assert_eq!(out.get(&[1]), c(2.0));
        assert_eq!(out.get(&[2]), c(4.0));
    }
}
