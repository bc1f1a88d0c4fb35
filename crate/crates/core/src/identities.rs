//! Exact polynomial checks of the curl / symmetric-gradient identities.
//!
//! Polynomials are coefficient maps over exponent triples; differentiation,
//! products and box integrals are exact up to floating-point rounding.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{DomainKind, StarDomain};
use crate::error::{Error, Result};
use crate::Point;

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    pub coeffs: BTreeMap<[u8; 3], f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, [0, 0, 0])
    }

    pub fn monomial(c: f64, exps: [u8; 3]) -> Self {
        let mut p = Self::zero();
        if c != 0.0 {
            p.coeffs.insert(exps, c);
        }
        p
    }

    /// `x_axis`
    pub fn coordinate(axis: usize) -> Self {
        let mut e = [0u8; 3];
        e[axis] = 1;
        Self::monomial(1.0, e)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(|e| e.iter().map(|&k| k as usize).sum()).max().unwrap_or(0)
    }

    /// Seeded coefficients `k/1024` in `[-1, 1]` on every monomial of total degree
    /// `<= degree`; dyadic values keep the identity arithmetic exact.
    pub fn random(dim: usize, degree: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zero();
        let d = degree as u8;
        for i in 0..=d {
            for j in 0..=(if dim > 1 { d - i } else { 0 }) {
                for k in 0..=(if dim > 2 { d - i - j } else { 0 }) {
                    p.coeffs.insert([i, j, k], rng.gen_range(-1024i32..=1024) as f64 / 1024.0);
                }
            }
        }
        p
    }

    fn insert(&mut self, e: [u8; 3], c: f64) {
        let v = self.coeffs.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.coeffs.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.insert(*e, *c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.coeffs {
            out.insert(*e, c * s);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                out.insert([a[0] + b[0], a[1] + b[1], a[2] + b[2]], ca * cb);
            }
        }
        out
    }

    pub fn deriv(&self, axis: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in &self.coeffs {
            if e[axis] > 0 {
                let mut f = *e;
                f[axis] -= 1;
                out.insert(f, c * e[axis] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    /// Exact integral over `prod (-h_a, h_a)` for the first `dim` axes.
    pub fn integrate_box(&self, half: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for (a, &h) in half.iter().enumerate() {
                    let k = e[a] as i32;
                    if k % 2 == 1 {
                        return 0.0;
                    }
                    v *= 2.0 * h.powi(k + 1) / (k + 1) as f64;
                }
                v
            })
            .sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// Vector (`dim` components) or matrix (`dim^2`, row-major) polynomial field.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub dim: usize,
    pub components: Vec<Poly>,
}

impl PolyField {
    pub fn new(dim: usize, components: Vec<Poly>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if components.iter().any(|p| p.degree() > MAX_DEGREE) {
            return Err(Error::InvalidParameter(format!("polynomial degree above {MAX_DEGREE}")));
        }
        Ok(Self { dim, components })
    }

    pub fn random_vector(dim: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Self::new(dim, (0..dim).map(|_| Poly::random(dim, degree, rng)).collect())
    }

    /// Random symmetric matrix field.
    pub fn random_symmetric(dim: usize, degree: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut m = vec![Poly::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let p = Poly::random(dim, degree, rng);
                m[i * dim + j] = p.clone();
                m[j * dim + i] = p;
            }
        }
        Self::new(dim, m)
    }

    fn at(&self, i: usize, j: usize) -> &Poly {
        &self.components[i * self.dim + j]
    }

    /// `(grad u)_{ij} = d_j u_i`
    pub fn gradient(&self) -> PolyField {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.components[i].deriv(j));
            }
        }
        PolyField { dim: n, components: out }
    }

    pub fn symmetric_gradient(&self) -> PolyField {
        self.gradient().symmetric_part()
    }

    pub fn symmetric_part(&self) -> PolyField {
        self.combine_transpose(0.5)
    }

    pub fn skew_part(&self) -> PolyField {
        self.combine_transpose(-0.5)
    }

    fn combine_transpose(&self, s: f64) -> PolyField {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.at(i, j).scale(0.5).add(&self.at(j, i).scale(s)));
            }
        }
        PolyField { dim: n, components: out }
    }

    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                m = m.max(self.at(i, j).sub(self.at(j, i)).max_abs_coeff());
            }
        }
        m
    }

    /// Curl of a vector field: scalar `d_1 v_2 - d_2 v_1` in 2D, vector in 3D.
    pub fn curl(&self) -> PolyField {
        let c = &self.components;
        if self.dim == 2 {
            return PolyField { dim: 2, components: vec![c[1].deriv(0).sub(&c[0].deriv(1))] };
        }
        PolyField {
            dim: 3,
            components: vec![
                c[2].deriv(1).sub(&c[1].deriv(2)),
                c[0].deriv(2).sub(&c[2].deriv(0)),
                c[1].deriv(0).sub(&c[0].deriv(1)),
            ],
        }
    }

    /// Curl applied to every row of a 3x3 matrix field.
    pub fn row_curl(&self) -> PolyField {
        let mut out = Vec::with_capacity(9);
        for i in 0..3 {
            let row = PolyField { dim: 3, components: self.components[3 * i..3 * i + 3].to_vec() };
            out.extend(row.curl().components);
        }
        PolyField { dim: 3, components: out }
    }

    pub fn transpose(&self) -> PolyField {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.at(j, i).clone());
            }
        }
        PolyField { dim: n, components: out }
    }

    /// Row divergence `(div A)_i = sum_j d_j A_ij`.
    pub fn divergence_rows(&self) -> PolyField {
        let n = self.dim;
        let comps = (0..n)
            .map(|i| (0..n).fold(Poly::zero(), |acc, j| acc.add(&self.at(i, j).deriv(j))))
            .collect();
        PolyField { dim: n, components: comps }
    }

    pub fn scale_by(&self, p: &Poly) -> PolyField {
        PolyField { dim: self.dim, components: self.components.iter().map(|c| c.mul(p)).collect() }
    }

    pub fn sub(&self, other: &PolyField) -> PolyField {
        PolyField {
            dim: self.dim,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.components.iter().fold(0.0, |m, p| m.max(p.max_abs_coeff()))
    }
}

/// Largest coefficient of `[grad(curl u)]^T - 2 curl_rows(grad_S u)`.
pub fn curl_grad_identity(u: &PolyField) -> Result<f64> {
    if u.dim != 3 || u.components.len() != 3 {
        return Err(Error::UnsupportedDimension(u.dim));
    }
    let lhs = u.curl().gradient().transpose();
    let rhs = u.symmetric_gradient().row_curl();
    let twice = PolyField { dim: 3, components: rhs.components.iter().map(|p| p.scale(2.0)).collect() };
    Ok(lhs.sub(&twice).max_abs_coeff())
}

/// Product of side bubbles `h_a^2 - x_a^2` over a centred rectangle or box.
pub fn box_bubble(d: &StarDomain) -> Result<Poly> {
    if !matches!(d.kind, DomainKind::Rectangle { .. } | DomainKind::Box { .. }) {
        return Err(Error::NotTensorDomain);
    }
    let half = d.half_widths();
    let mut b = Poly::constant(1.0);
    for (a, h) in half.iter().enumerate().take(d.dim) {
        let mut e = [0u8; 3];
        e[a] = 2;
        b = b.mul(&Poly::constant(h * h).add(&Poly::monomial(-1.0, e)));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Pairings {
    /// `-int v . div(b tau)`
    pub gradient: f64,
    /// `int grad_S v : (b tau)`
    pub symmetric: f64,
}

impl Pairings {
    pub fn discrepancy(&self) -> f64 {
        (self.gradient - self.symmetric).abs()
    }
}

/// Both pairings without the symmetry check on `tau`.
pub fn pairings(v: &PolyField, tau: &PolyField, d: &StarDomain) -> Result<Pairings> {
    let n = d.dim;
    if v.dim != n || v.components.len() != n || tau.components.len() != n * n {
        return Err(Error::InvalidParameter("v must be a vector and tau a matrix field on the domain".into()));
    }
    let half = &d.half_widths()[..n];
    let tb = tau.scale_by(&box_bubble(d)?);
    let div = tb.divergence_rows();
    let gradient = -(0..n).map(|i| v.components[i].mul(&div.components[i]).integrate_box(half)).sum::<f64>();
    let sg = v.symmetric_gradient();
    let symmetric = sg.components.iter().zip(&tb.components).map(|(a, b)| a.mul(b).integrate_box(half)).sum();
    Ok(Pairings { gradient, symmetric })
}

/// `|<grad v, tau> - <grad_S v, tau>|` for a symmetric `tau` cut off by the box bubble.
pub fn symmetric_pairing_check(v: &PolyField, tau: &PolyField, d: &StarDomain) -> Result<f64> {
    let asym = tau.asymmetry();
    if asym > 1e-12 * tau.max_abs_coeff().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(pairings(v, tau, d)?.discrepancy())
}

/// Seeded generator shared by the identity experiments.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_field_gives_zero() {
        let u = PolyField::new(3, vec![Poly::coordinate(1), Poly::zero(), Poly::zero()]).unwrap();
        assert_eq!(curl_grad_identity(&u).unwrap(), 0.0);
    }

    #[test]
    fn random_cubics_satisfy_identity() {
        let mut r = rng(11);
        for _ in 0..20 {
            let u = PolyField::random_vector(3, 3, &mut r).unwrap();
            assert_eq!(curl_grad_identity(&u).unwrap(), 0.0);
        }
    }

    #[test]
    fn mixed_partials_commute() {
        let mut r = rng(5);
        for _ in 0..10 {
            let p = Poly::random(3, 5, &mut r);
            assert_eq!(p.deriv(0).deriv(1), p.deriv(1).deriv(0));
        }
    }

    #[test]
    fn box_integral_of_square() {
        let p = Poly::monomial(1.0, [2, 0, 0]);
        assert!((p.integrate_box(&[1.0, 0.5]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_tensor_pairing() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let v = PolyField::new(2, vec![Poly::coordinate(0), Poly::coordinate(1)]).unwrap();
        let id = PolyField::new(2, vec![Poly::constant(1.0), Poly::zero(), Poly::zero(), Poly::constant(1.0)]).unwrap();
        let p = pairings(&v, &id, &d).unwrap();
        assert!(p.discrepancy() < 1e-12);
        assert!(p.gradient > 0.0);
    }

    #[test]
    fn skew_tensor_is_rejected_and_separates_pairings() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let mut r = rng(3);
        let v = PolyField::random_vector(2, 3, &mut r).unwrap();
        let full = PolyField::new(2, (0..4).map(|_| Poly::random(2, 2, &mut r)).collect()).unwrap();
        let skew = full.skew_part();
        assert!(matches!(symmetric_pairing_check(&v, &skew, &d), Err(Error::NotSymmetric(_))));
        let p = pairings(&v, &skew, &d).unwrap();
        assert!(p.symmetric.abs() < 1e-12);
        assert!(p.discrepancy() > 1e-3);
    }
}
