//! Smooth bump supported in a ball, with closed-form derivatives up to order 3.
//!
//! The reference profile is `psi(z) = c_n exp(-1/(1 - |z|^2))` on the unit
//! ball, normalised to unit mass. A mollifier of radius `rho` centred at `c`
//! is `omega(x) = rho^{-n} psi((x - c) / rho)`. Writing `g(s) = exp(-1/(1-s))`
//! with `s = |z|^2` and `q = 1/(1-s)`, the derivatives of `g` are
//!
//! ```text
//! g'   = -q^2 g
//! g''  = (q^4 - 2 q^3) g
//! g''' = (-q^6 + 6 q^5 - 6 q^4) g
//! ```
//!
//! and the Cartesian derivatives of `psi` follow from the chain rule through `s`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad::{self, gauss_legendre};
use crate::Point;

/// Highest derivative order the mollifier can evaluate.
pub const MAX_ORDER: usize = 3;

/// Multi-index of a partial derivative in up to three variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    orders: [u8; 3],
    dim: usize,
}

impl MultiIndex {
    pub fn new(orders: &[u8]) -> Result<Self> {
        let dim = orders.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut o = [0u8; 3];
        o[..dim].copy_from_slice(orders);
        let total: usize = o.iter().map(|&v| v as usize).sum();
        if total > MAX_ORDER {
            return Err(Error::DerivativeOrder { order: total, max: MAX_ORDER });
        }
        Ok(Self { orders: o, dim })
    }

    pub fn zero(dim: usize) -> Self {
        Self { orders: [0; 3], dim }
    }

    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut orders = [0; 3];
        orders[axis] = 1;
        Self { orders, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn orders(&self) -> &[u8] {
        &self.orders[..self.dim]
    }

    pub fn order(&self, axis: usize) -> u8 {
        self.orders[axis]
    }

    pub fn total(&self) -> usize {
        self.orders.iter().map(|&v| v as usize).sum()
    }

    /// `self + count * e_axis`, or an error if the total exceeds the maximum order.
    pub fn raised(&self, axis: usize, count: u8) -> Result<Self> {
        let mut o = self.orders;
        o[axis] += count;
        Self::new(&o[..self.dim])
    }

    /// `self - e_axis`, `None` when that entry is already zero.
    pub fn lowered(&self, axis: usize) -> Option<Self> {
        if self.orders[axis] == 0 {
            return None;
        }
        let mut o = *self;
        o.orders[axis] -= 1;
        Some(o)
    }

    /// The differentiation axes listed with multiplicity, e.g. (2,1) -> [0,0,1].
    pub fn axes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (axis, &k) in self.orders.iter().enumerate() {
            out.extend(std::iter::repeat_n(axis, k as usize));
        }
        out
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.orders().iter().map(|o| o.to_string()).collect();
        write!(f, "({})", parts.join(";"))
    }
}

/// Value, gradient and Hessian of a function at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
}

/// Anything that behaves like a compactly supported weight with analytic derivatives.
pub trait Weight: Send + Sync {
    fn dim(&self) -> usize;
    fn center(&self) -> Point;
    /// Radius of a ball around `center` containing the support.
    fn support_radius(&self) -> f64;
    fn eval_deriv(&self, alpha: &MultiIndex, x: &Point) -> Result<f64>;
}

/// `omega = rho^{-n} psi(rho^{-1}(x - center))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    pub center: Point,
    pub rho: f64,
    pub dim: usize,
    /// `c_n rho^{-n}`.
    pub normalization: f64,
}

/// Integral of `exp(-1/(1-|z|^2))` over the unit ball of dimension `dim`.
pub fn reference_mass(dim: usize) -> f64 {
    static MASS: OnceLock<[f64; 2]> = OnceLock::new();
    let m = MASS.get_or_init(|| {
        let radial = |n: i32| {
            quad::composite(0.0, 1.0, 400, 20, |r| {
                if r >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - r * r)).exp() * r.powi(n - 1)
                }
            })
        };
        [
            2.0 * std::f64::consts::PI * radial(2),
            4.0 * std::f64::consts::PI * radial(3),
        ]
    });
    m[dim - 2]
}

/// `g, g', g'', g'''` of `g(s) = exp(-1/(1-s))`, or zeros outside `s < 1`.
#[inline]
fn profile_derivatives(s: f64) -> [f64; 4] {
    if s >= 1.0 {
        return [0.0; 4];
    }
    let q = 1.0 / (1.0 - s);
    let g = (-q).exp();
    if g == 0.0 {
        return [0.0; 4];
    }
    let q2 = q * q;
    let q3 = q2 * q;
    let q4 = q2 * q2;
    [
        g,
        -q2 * g,
        (q4 - 2.0 * q3) * g,
        (-q4 * q2 + 6.0 * q4 * q - 6.0 * q4) * g,
    ]
}

#[inline]
fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Mollifier {
    pub fn new(center: Point, rho: f64, dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!("mollifier radius must be positive, got {rho}")));
        }
        let c_n = 1.0 / reference_mass(dim);
        Ok(Self {
            center,
            rho,
            dim,
            normalization: c_n * rho.powi(-(dim as i32)),
        })
    }

    /// The constant `c_n` of the reference bump.
    pub fn reference_constant(&self) -> f64 {
        1.0 / reference_mass(self.dim)
    }

    /// Reference coordinates `(x - center)/rho` and `|z|^2`.
    #[inline]
    fn local(&self, x: &Point) -> (Point, f64) {
        let mut z = [0.0; 3];
        let mut s = 0.0;
        for i in 0..self.dim {
            z[i] = (x[i] - self.center[i]) / self.rho;
            s += z[i] * z[i];
        }
        (z, s)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let (_, s) = self.local(x);
        self.normalization * profile_derivatives(s)[0]
    }

    /// Exact partial derivative `d^alpha omega(x)`.
    pub fn eval_deriv(&self, alpha: &MultiIndex, x: &Point) -> Result<f64> {
        let order = alpha.total();
        if order > MAX_ORDER {
            return Err(Error::DerivativeOrder { order, max: MAX_ORDER });
        }
        let (z, s) = self.local(x);
        let g = profile_derivatives(s);
        if g[0] == 0.0 {
            return Ok(0.0);
        }
        let ax = alpha.axes();
        let v = match ax.len() {
            0 => g[0],
            1 => 2.0 * z[ax[0]] * g[1],
            2 => {
                let (i, j) = (ax[0], ax[1]);
                4.0 * z[i] * z[j] * g[2] + 2.0 * delta(i, j) * g[1]
            }
            _ => {
                let (i, j, k) = (ax[0], ax[1], ax[2]);
                8.0 * z[i] * z[j] * z[k] * g[3]
                    + 4.0 * (delta(i, j) * z[k] + delta(i, k) * z[j] + delta(j, k) * z[i]) * g[2]
            }
        };
        Ok(self.normalization * self.rho.powi(-(order as i32)) * v)
    }

    /// Value, gradient and Hessian in a single profile evaluation.
    #[inline]
    pub fn jet2(&self, x: &Point) -> Jet2 {
        let (z, s) = self.local(x);
        let g = profile_derivatives(s);
        let mut jet = Jet2::default();
        if g[0] == 0.0 {
            return jet;
        }
        let n = self.dim;
        let c0 = self.normalization;
        let c1 = c0 / self.rho;
        let c2 = c1 / self.rho;
        jet.value = c0 * g[0];
        for i in 0..n {
            jet.grad[i] = c1 * 2.0 * z[i] * g[1];
            for j in 0..n {
                jet.hess[i][j] = c2 * (4.0 * z[i] * z[j] * g[2] + 2.0 * delta(i, j) * g[1]);
            }
        }
        jet
    }

    /// `(||d^alpha omega||_{L1}, ||d^alpha omega||_{Linf})`.
    pub fn norm_table(&self, alpha: &MultiIndex) -> Result<(f64, f64)> {
        norm_table(self, alpha)
    }

    /// Integral of `omega` by the default polar rule.
    pub fn mass(&self) -> f64 {
        ball_integral(self.center, self.rho, self.dim, |x| self.eval(x))
    }
}

impl Weight for Mollifier {
    fn dim(&self) -> usize {
        self.dim
    }
    fn center(&self) -> Point {
        self.center
    }
    fn support_radius(&self) -> f64 {
        self.rho
    }
    fn eval_deriv(&self, alpha: &MultiIndex, x: &Point) -> Result<f64> {
        Mollifier::eval_deriv(self, alpha, x)
    }
}

/// The product `(x - center)_k omega(x)`; derivatives by the product rule.
#[derive(Debug, Clone, Copy)]
pub struct MomentWeight {
    pub base: Mollifier,
    pub axis: usize,
}

impl Weight for MomentWeight {
    fn dim(&self) -> usize {
        self.base.dim
    }
    fn center(&self) -> Point {
        self.base.center
    }
    fn support_radius(&self) -> f64 {
        self.base.rho
    }
    fn eval_deriv(&self, alpha: &MultiIndex, x: &Point) -> Result<f64> {
        let k = self.axis;
        let zk = x[k] - self.base.center[k];
        let mut v = zk * self.base.eval_deriv(alpha, x)?;
        if let Some(lower) = alpha.lowered(k) {
            v += alpha.order(k) as f64 * self.base.eval_deriv(&lower, x)?;
        }
        Ok(v)
    }
}

/// Integral over the ball `B_radius(center)` by radial Gauss panels times
/// an angular trapezoid (2D) or Gauss-in-polar-angle times trapezoid (3D).
pub fn ball_integral<F: Fn(&Point) -> f64>(center: Point, radius: f64, dim: usize, f: F) -> f64 {
    let radial = gauss_legendre(24);
    let panels = 16;
    let dr = radius / panels as f64;
    let mut total = 0.0;
    if dim == 2 {
        let na = 256;
        let dphi = 2.0 * std::f64::consts::PI / na as f64;
        for a in 0..na {
            let (s, c) = (a as f64 * dphi).sin_cos();
            for p in 0..panels {
                for (r, w) in radial.mapped(p as f64 * dr, (p + 1) as f64 * dr) {
                    let x = [center[0] + r * c, center[1] + r * s, 0.0];
                    total += w * r * dphi * f(&x);
                }
            }
        }
    } else {
        let polar = gauss_legendre(48);
        let na = 96;
        let dphi = 2.0 * std::f64::consts::PI / na as f64;
        for (ct, wt) in polar.mapped(-1.0, 1.0) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for a in 0..na {
                let (sp, cp) = (a as f64 * dphi).sin_cos();
                for p in 0..panels {
                    for (r, w) in radial.mapped(p as f64 * dr, (p + 1) as f64 * dr) {
                        let x = [
                            center[0] + r * st * cp,
                            center[1] + r * st * sp,
                            center[2] + r * ct,
                        ];
                        total += w * wt * dphi * r * r * f(&x);
                    }
                }
            }
        }
    }
    total
}

/// Integral of `|g|` along one ray, split at sign changes so each piece is smooth.
fn radial_abs_integral<G: Fn(f64) -> f64>(radius: f64, power: i32, g: G) -> f64 {
    const SAMPLES: usize = 160;
    let rule = gauss_legendre(16);
    let h = radius / SAMPLES as f64;
    let mut edges = vec![0.0];
    let mut prev = g(0.5 * h * 1e-3);
    for i in 1..=SAMPLES {
        let r = if i == SAMPLES { radius * (1.0 - 1e-12) } else { i as f64 * h };
        let cur = g(r);
        if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
            let (mut lo, mut hi) = ((i - 1) as f64 * h, r);
            let flo = prev;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            edges.push(0.5 * (lo + hi));
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    edges.push(radius);
    let mut total = 0.0;
    for w in edges.windows(2) {
        let pieces = (((w[1] - w[0]) / radius) * 8.0).ceil().max(1.0) as usize;
        let d = (w[1] - w[0]) / pieces as f64;
        for p in 0..pieces {
            let lo = w[0] + p as f64 * d;
            total += rule.integrate(lo, lo + d, |r| g(r).abs() * r.powi(power));
        }
    }
    total
}

/// L1 norm of `d^alpha w` over the support ball of a weight.
pub fn l1_norm<W: Weight + ?Sized>(w: &W, alpha: &MultiIndex) -> Result<f64> {
    let order = alpha.total();
    if order > MAX_ORDER {
        return Err(Error::DerivativeOrder { order, max: MAX_ORDER });
    }
    // probe once so that errors surface before the loops
    w.eval_deriv(alpha, &w.center())?;
    let c = w.center();
    let rho = w.support_radius();
    let dim = w.dim();
    let eval = |x: &Point| w.eval_deriv(alpha, x).unwrap_or(0.0);
    let quarter = std::f64::consts::FRAC_PI_4;
    let ang = gauss_legendre(16);
    let l1 = if dim == 2 {
        let mut total = 0.0;
        for sector in 0..8 {
            let a0 = sector as f64 * quarter;
            for p in 0..4 {
                let lo = a0 + p as f64 * quarter / 4.0;
                for (phi, wphi) in ang.mapped(lo, lo + quarter / 4.0) {
                    let (s, co) = phi.sin_cos();
                    total += wphi
                        * radial_abs_integral(rho, 1, |r| eval(&[c[0] + r * co, c[1] + r * s, 0.0]));
                }
            }
        }
        total
    } else {
        let mut total = 0.0;
        let polar = gauss_legendre(12);
        for tsec in 0..4 {
            let t0 = tsec as f64 * quarter;
            for (theta, wt) in polar.mapped(t0, t0 + quarter) {
                let (st, ct) = theta.sin_cos();
                for sector in 0..8 {
                    let a0 = sector as f64 * quarter;
                    for (phi, wphi) in polar.mapped(a0, a0 + quarter) {
                        let (sp, cp) = phi.sin_cos();
                        total += wt * wphi * st
                            * radial_abs_integral(rho, 2, |r| {
                                eval(&[c[0] + r * st * cp, c[1] + r * st * sp, c[2] + r * ct])
                            });
                    }
                }
            }
        }
        total
    };
    Ok(l1)
}

/// L1 and sup norms of `d^alpha w` over the support ball of a weight.
pub fn norm_table<W: Weight + ?Sized>(w: &W, alpha: &MultiIndex) -> Result<(f64, f64)> {
    let l1 = l1_norm(w, alpha)?;
    let c = w.center();
    let rho = w.support_radius();
    let dim = w.dim();
    let eval = |x: &Point| w.eval_deriv(alpha, x).unwrap_or(0.0);
    // sup norm by dense sampling
    let nr = 200;
    let mut linf: f64 = 0.0;
    if dim == 2 {
        let na = 128;
        for i in 0..nr {
            let r = rho * (i as f64 + 0.5) / nr as f64;
            for a in 0..na {
                let (s, co) = (2.0 * std::f64::consts::PI * a as f64 / na as f64).sin_cos();
                linf = linf.max(eval(&[c[0] + r * co, c[1] + r * s, 0.0]).abs());
            }
        }
        linf = linf.max(eval(&c).abs());
    } else {
        let (nt, na) = (64, 128);
        for i in 0..nr {
            let r = rho * (i as f64 + 0.5) / nr as f64;
            for t in 0..=nt {
                let (st, ct) = (std::f64::consts::PI * t as f64 / nt as f64).sin_cos();
                for a in 0..na {
                    let (sp, cp) = (2.0 * std::f64::consts::PI * a as f64 / na as f64).sin_cos();
                    linf = linf.max(eval(&[c[0] + r * st * cp, c[1] + r * st * sp, c[2] + r * ct]).abs());
                }
            }
        }
        linf = linf.max(eval(&c).abs());
    }
    Ok((l1, linf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Mollifier::new([0.0; 3], 0.0, 2).is_err());
        assert!(Mollifier::new([0.0; 3], -1.0, 2).is_err());
        assert!(matches!(Mollifier::new([0.0; 3], 1.0, 4), Err(Error::UnsupportedDimension(4))));
        assert!(MultiIndex::new(&[2, 2]).is_err());
    }

    #[test]
    fn zero_outside_support() {
        let m = Mollifier::new([0.1, -0.2, 0.0], 0.5, 2).unwrap();
        let x = [0.1 + 0.75, -0.2, 0.0];
        assert_eq!(m.eval(&x), 0.0);
        for a in [[0, 0], [1, 0], [0, 2], [2, 1], [0, 3]] {
            let alpha = MultiIndex::new(&a).unwrap();
            assert_eq!(m.eval_deriv(&alpha, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn value_at_center() {
        let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let expected = m.reference_constant() * (-1.0f64).exp();
        assert!((m.eval(&[0.0; 3]) - expected).abs() < 1e-15);
        for axis in 0..2 {
            let d = m.eval_deriv(&MultiIndex::unit(2, axis), &[0.0; 3]).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn unit_mass_both_dims() {
        for dim in [2, 3] {
            let m = Mollifier::new([0.3, 0.1, -0.2], 0.7, dim).unwrap();
            assert!((m.mass() - 1.0).abs() < 1e-10, "dim {dim}: {}", m.mass());
        }
    }

    #[test]
    fn jet_matches_eval_deriv() {
        let m = Mollifier::new([0.1, 0.2, 0.3], 0.8, 3).unwrap();
        let x = [0.3, -0.1, 0.5];
        let jet = m.jet2(&x);
        assert!((jet.value - m.eval(&x)).abs() < 1e-14);
        for i in 0..3 {
            let d = m.eval_deriv(&MultiIndex::unit(3, i), &x).unwrap();
            assert!((jet.grad[i] - d).abs() < 1e-12);
            for j in 0..3 {
                let a = MultiIndex::unit(3, i).raised(j, 1).unwrap();
                assert!((jet.hess[i][j] - m.eval_deriv(&a, &x).unwrap()).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn moment_weight_product_rule() {
        let base = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let w = MomentWeight { base, axis: 0 };
        let x = [0.3, 0.2, 0.0];
        let h = 1e-5;
        let alpha = MultiIndex::unit(2, 0);
        let fd = (w.eval_deriv(&MultiIndex::zero(2), &[x[0] + h, x[1], 0.0]).unwrap()
            - w.eval_deriv(&MultiIndex::zero(2), &[x[0] - h, x[1], 0.0]).unwrap())
            / (2.0 * h);
        assert!((w.eval_deriv(&alpha, &x).unwrap() - fd).abs() < 1e-8);
    }
}
