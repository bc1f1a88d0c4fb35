//! Fourier-side bounds for the mollifier and its first moments.
//!
//! Convention: `f^(xi) = int exp(-2 pi i x.xi) f(x) dx`. The bound checked is
//!
//! ```text
//! 2 pi |xi_j| int_0^inf |(d^alpha phi)^(t xi)| dt
//!     <= rho^{-1} ||d^alpha phi||_L1 + rho ||d^{alpha + 2 e_j} phi||_L1
//! ```
//!
//! for `phi = omega` and `phi = (x - c)_k omega`. Line integrals use the radial
//! profile `Psi(q) = psi^(q e_1)` of the reference bump, computed once from its
//! projection onto an axis; direct tensor quadrature of the transform serves as
//! the independent path.

use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mollifier::{l1_norm, reference_mass, Mollifier, MomentWeight, MultiIndex, Weight, MAX_ORDER};
use crate::quad::{composite, gauss_legendre};
use crate::Point;

use std::f64::consts::PI;

/// Which function plays the role of `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiOption {
    Plain,
    Moment { axis: usize },
}

impl std::fmt::Display for PhiOption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhiOption::Plain => write!(f, "omega"),
            PhiOption::Moment { axis } => write!(f, "x{}*omega", axis + 1),
        }
    }
}

/// The two transforms of `d^alpha w` and their difference.
#[derive(Debug, Clone, Copy)]
pub struct Transform {
    /// Direct quadrature of the transform of `d^alpha w`.
    pub direct: Complex64,
    /// `(2 pi i xi)^alpha` times the direct transform of `w`.
    pub multiplier: Complex64,
    pub discrepancy: f64,
}

/// Direct quadrature with `64^n` Gauss nodes, tensor-mapped onto the support
/// ball (outer axes Gauss over the diameter, inner axes over the chords).
fn direct_transform<W: Weight + ?Sized>(w: &W, alpha: &MultiIndex, xi: &[f64]) -> Result<Complex64> {
    let n = w.dim();
    let c = w.center();
    let r = w.support_radius();
    let g = gauss_legendre(64);
    let mut total = Complex64::new(0.0, 0.0);
    let mut x = c;
    for (a, wa) in g.mapped(-r, r) {
        x[0] = c[0] + a;
        let ha = (r * r - a * a).max(0.0).sqrt();
        for (b, wb) in g.mapped(-ha, ha) {
            x[1] = c[1] + b;
            if n == 2 {
                let v = w.eval_deriv(alpha, &x)?;
                if v != 0.0 {
                    let phase = -2.0 * PI * (x[0] * xi[0] + x[1] * xi[1]);
                    total += Complex64::from_polar(wa * wb * v, phase);
                }
                continue;
            }
            let hb = (ha * ha - b * b).max(0.0).sqrt();
            for (e, we) in g.mapped(-hb, hb) {
                x[2] = c[2] + e;
                let v = w.eval_deriv(alpha, &x)?;
                if v != 0.0 {
                    let phase = -2.0 * PI * (x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2]);
                    total += Complex64::from_polar(wa * wb * we * v, phase);
                }
            }
        }
    }
    Ok(total)
}

/// Transform of `d^alpha w` at `xi` by both paths.
pub fn fourier_transform<W: Weight + ?Sized>(w: &W, alpha: &MultiIndex, xi: &[f64]) -> Result<Transform> {
    let order = alpha.total();
    if order > MAX_ORDER {
        return Err(Error::DerivativeOrder { order, max: MAX_ORDER });
    }
    if xi.len() != w.dim() {
        return Err(Error::InvalidParameter(format!("frequency has {} components, expected {}", xi.len(), w.dim())));
    }
    let direct = direct_transform(w, alpha, xi)?;
    let base = direct_transform(w, &MultiIndex::zero(w.dim()), xi)?;
    let mut mult = Complex64::new(1.0, 0.0);
    for (axis, &x) in xi.iter().enumerate() {
        for _ in 0..alpha.order(axis) {
            mult *= Complex64::new(0.0, 2.0 * PI * x);
        }
    }
    let multiplier = mult * base;
    Ok(Transform { direct, multiplier, discrepancy: (direct - multiplier).norm() })
}

/// `Psi(q)` and `Psi'(q)` of the normalised reference bump via its projection
/// `P(s) = int psi(s, y) dy`: `Psi(q) = 2 int_0^1 P(s) cos(2 pi q s) ds`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    nodes: Vec<f64>,
    weighted: Vec<f64>,
}

impl RadialProfile {
    fn build(dim: usize) -> Self {
        let c = 1.0 / reference_mass(dim);
        let g = gauss_legendre(16);
        let panels = 48;
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::new();
        let mut weighted = Vec::new();
        for p in 0..panels {
            for (s, w) in g.mapped(h * p as f64, h * (p + 1) as f64) {
                let top = 1.0 - s * s;
                let proj = if dim == 2 {
                    // 2 int_0^sqrt(top) exp(-1/(top - t^2)) dt
                    2.0 * composite(0.0, top.sqrt(), 8, 16, |t| {
                        let v = top - t * t;
                        if v <= 0.0 {
                            0.0
                        } else {
                            (-1.0 / v).exp()
                        }
                    })
                } else {
                    // pi int_0^top exp(-1/v) dv
                    PI * composite(0.0, top, 8, 16, |v| if v <= 0.0 { 0.0 } else { (-1.0 / v).exp() })
                };
                nodes.push(s);
                weighted.push(2.0 * w * c * proj);
            }
        }
        Self { nodes, weighted }
    }

    pub fn get(dim: usize) -> &'static RadialProfile {
        static CACHE: [OnceLock<RadialProfile>; 2] = [OnceLock::new(), OnceLock::new()];
        CACHE[dim - 2].get_or_init(|| Self::build(dim))
    }

    #[inline]
    pub fn value(&self, q: f64) -> f64 {
        let k = 2.0 * PI * q;
        self.nodes.iter().zip(&self.weighted).map(|(s, w)| w * (k * s).cos()).sum()
    }

    #[inline]
    pub fn derivative(&self, q: f64) -> f64 {
        let k = 2.0 * PI * q;
        -self
            .nodes
            .iter()
            .zip(&self.weighted)
            .map(|(s, w)| w * 2.0 * PI * s * (k * s).sin())
            .sum::<f64>()
    }
}

/// A real function whose absolute value is `|(d^alpha phi)^(eta)|`; along a
/// ray `eta = t xi` its sign changes exactly at zeros of the transform.
pub fn transform_signed(m: &Mollifier, option: PhiOption, alpha: &MultiIndex, eta: &[f64]) -> f64 {
    let n = m.dim;
    let prof = RadialProfile::get(n);
    let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let q = m.rho * norm;
    let mut mult = 1.0;
    for (axis, &e) in eta.iter().enumerate() {
        mult *= (2.0 * PI * e).abs().powi(alpha.order(axis) as i32);
    }
    if mult == 0.0 {
        return 0.0;
    }
    match option {
        PhiOption::Plain => mult * prof.value(q),
        PhiOption::Moment { axis } => {
            // (x_k - c_k) omega has transform (i / 2 pi) d_k of omega^
            let dir = if norm > 0.0 { eta[axis] / norm } else { 0.0 };
            mult * m.rho * prof.derivative(q) * dir / (2.0 * PI)
        }
    }
}

/// `|(d^alpha phi)^(eta)|` from the radial profile.
pub fn transform_magnitude(m: &Mollifier, option: PhiOption, alpha: &MultiIndex, eta: &[f64]) -> f64 {
    transform_signed(m, option, alpha, eta).abs()
}

/// Value of the line integral together with the tail estimate added to the budget.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineIntegral {
    pub value: f64,
    pub truncation: f64,
    pub tail_bound: f64,
}

/// Ray quadrature of `2 pi |xi_j| int_0^inf |(d^alpha phi)^(t xi)| dt`, truncated at `T` once an
/// empirical `C/t^2` tail fit on `[T/2, T]` contributes less than `1e-6`.
pub fn lhs_line_integral_ray(m: &Mollifier, option: PhiOption, alpha: &MultiIndex, j: usize, xi: &[f64]) -> LineIntegral {
    let pref = 2.0 * PI * xi[j].abs();
    if pref == 0.0 {
        return LineIntegral { value: 0.0, truncation: 0.0, tail_bound: 0.0 };
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let g = |t: f64| {
        let eta: Vec<f64> = xi.iter().map(|v| t * v).collect();
        transform_signed(m, option, alpha, &eta)
    };
    // panels of half a unit of q = rho |eta|
    let unit = 1.0 / (m.rho * norm);
    let h = 0.5 * unit;
    let rule = gauss_legendre(12);
    let mut total = 0.0;
    let mut t_end = 0.0;
    let mut prev = g(0.0);
    let mut panel = 0usize;
    loop {
        for _ in 0..16 {
            let (a, b) = (h * panel as f64, h * (panel + 1) as f64);
            let cur = g(b);
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid).signum() == prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let z = 0.5 * (lo + hi);
                total += rule.integrate(a, z, |t| g(t).abs()) + rule.integrate(z, b, |t| g(t).abs());
            } else {
                total += rule.integrate(a, b, |t| g(t).abs());
            }
            if cur != 0.0 {
                prev = cur;
            }
            panel += 1;
            t_end = b;
        }
        let mut c: f64 = 0.0;
        for i in 0..=32 {
            let t = 0.5 * t_end + 0.5 * t_end * i as f64 / 32.0;
            c = c.max(t * t * g(t).abs());
        }
        let tail = pref * c / t_end;
        if tail < 1e-6 || t_end > 400.0 * unit {
            return LineIntegral { value: pref * total, truncation: t_end, tail_bound: tail };
        }
    }
}

/// `int_0^inf q^k |Psi(q)| dq` (or with `Psi'`) for the radial profile, cached.
pub fn profile_moment(dim: usize, k: usize, derivative: bool) -> LineIntegral {
    static CACHE: OnceLock<Mutex<Vec<((usize, usize, bool), LineIntegral)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let key = (dim, k, derivative);
    if let Some((_, v)) = cache.lock().expect("profile cache").iter().find(|(kk, _)| *kk == key) {
        return *v;
    }
    let prof = RadialProfile::get(dim);
    let g = |q: f64| {
        let p = if derivative { prof.derivative(q) } else { prof.value(q) };
        q.powi(k as i32) * p
    };
    let rule = gauss_legendre(16);
    let h = 0.25;
    let mut total = 0.0;
    let mut prev = g(0.0);
    let mut panel = 0usize;
    let out = loop {
        for _ in 0..64 {
            let (a, b) = (h * panel as f64, h * (panel + 1) as f64);
            let cur = g(b);
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid).signum() == prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let z = 0.5 * (lo + hi);
                total += rule.integrate(a, z, |t| g(t).abs()) + rule.integrate(z, b, |t| g(t).abs());
            } else {
                total += rule.integrate(a, b, |t| g(t).abs());
            }
            if cur != 0.0 {
                prev = cur;
            }
            panel += 1;
        }
        let q_end = h * panel as f64;
        let mut c: f64 = 0.0;
        for i in 0..=64 {
            let q = 0.5 * q_end + 0.5 * q_end * i as f64 / 64.0;
            c = c.max(q * q * g(q).abs());
        }
        let tail = c / q_end;
        // the discrete profile aliases beyond q ~ 120
        if tail < 1e-10 || q_end >= 96.0 {
            break LineIntegral { value: total, truncation: q_end, tail_bound: tail };
        }
    };
    cache.lock().expect("profile cache").push((key, out));
    out
}

/// `2 pi |xi_j| int_0^inf |(d^alpha phi)^(t xi)| dt`, reduced to a profile moment
/// through `q = rho t |xi|`.
pub fn lhs_line_integral(m: &Mollifier, option: PhiOption, alpha: &MultiIndex, j: usize, xi: &[f64]) -> LineIntegral {
    let pref = 2.0 * PI * xi[j].abs();
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut amp = pref;
    for (axis, &e) in xi.iter().enumerate() {
        amp *= (2.0 * PI * e).abs().powi(alpha.order(axis) as i32);
    }
    if amp == 0.0 {
        return LineIntegral { value: 0.0, truncation: 0.0, tail_bound: 0.0 };
    }
    let k = alpha.total();
    let scale = (m.rho * norm).powi(-(k as i32) - 1);
    let (mom, extra) = match option {
        PhiOption::Plain => (profile_moment(m.dim, k, false), 1.0),
        PhiOption::Moment { axis } => (profile_moment(m.dim, k, true), m.rho * (xi[axis] / norm).abs() / (2.0 * PI)),
    };
    let f = amp * scale * extra;
    LineIntegral { value: f * mom.value, truncation: mom.truncation / (m.rho * norm), tail_bound: f * mom.tail_bound }
}

/// `rho^{-1} ||d^alpha phi||_L1 + rho ||d^{alpha+2 e_j} phi||_L1`.
pub fn rhs_constant(m: &Mollifier, option: PhiOption, alpha: &MultiIndex, j: usize) -> Result<f64> {
    let raised = alpha.raised(j, 2)?;
    Ok(l1_of(m, option, alpha)? / m.rho + m.rho * l1_of(m, option, &raised)?)
}

fn l1_of(m: &Mollifier, option: PhiOption, beta: &MultiIndex) -> Result<f64> {
    match option {
        PhiOption::Plain => l1_norm(m, beta),
        PhiOption::Moment { axis } => l1_norm(&MomentWeight { base: *m, axis }, beta),
    }
}

/// One verified inequality.
#[derive(Debug, Clone, Serialize)]
pub struct FourierBoundReport {
    pub rho: f64,
    pub direction: Vec<f64>,
    pub option: PhiOption,
    pub deriv_order: String,
    pub j: usize,
    pub lhs: f64,
    pub rhs_constant: f64,
    pub margin: f64,
    pub tail_bound: f64,
    /// Same integral at twice the frequency magnitude.
    pub lhs_rescaled: f64,
}

#[derive(Debug, Clone)]
pub struct BoundCase {
    pub mollifier: Mollifier,
    pub option: PhiOption,
    pub alpha: MultiIndex,
    pub j: usize,
    pub direction: Vec<f64>,
}

/// Evaluate every case; report order follows the input order.
pub fn verify_bounds(cases: &[BoundCase]) -> Result<Vec<FourierBoundReport>> {
    // L1 norms are shared between many cases
    let mut keys: Vec<(Mollifier, PhiOption, MultiIndex)> = Vec::new();
    for c in cases {
        for beta in [c.alpha, c.alpha.raised(c.j, 2)?] {
            if !keys.iter().any(|k| k.0 == c.mollifier && k.1 == c.option && k.2 == beta) {
                keys.push((c.mollifier, c.option, beta));
            }
        }
    }
    let norms: Vec<f64> = keys
        .par_iter()
        .map(|(m, o, b)| l1_of(m, *o, b))
        .collect::<Result<_>>()?;
    let lookup = |m: &Mollifier, o: PhiOption, b: &MultiIndex| {
        let i = keys.iter().position(|k| k.0 == *m && k.1 == o && k.2 == *b).expect("cached norm");
        norms[i]
    };
    cases
        .par_iter()
        .map(|c| {
            let raised = c.alpha.raised(c.j, 2)?;
            let rhs = lookup(&c.mollifier, c.option, &c.alpha) / c.mollifier.rho
                + c.mollifier.rho * lookup(&c.mollifier, c.option, &raised);
            let lhs = lhs_line_integral(&c.mollifier, c.option, &c.alpha, c.j, &c.direction);
            let doubled: Vec<f64> = c.direction.iter().map(|v| 2.0 * v).collect();
            let lhs2 = lhs_line_integral(&c.mollifier, c.option, &c.alpha, c.j, &doubled);
            Ok(FourierBoundReport {
                rho: c.mollifier.rho,
                direction: c.direction.clone(),
                option: c.option,
                deriv_order: c.alpha.to_string(),
                j: c.j,
                lhs: lhs.value,
                rhs_constant: rhs,
                margin: rhs - lhs.value,
                tail_bound: lhs.tail_bound,
                lhs_rescaled: lhs2.value,
            })
        })
        .collect()
}

/// The standard case table: `directions` equally spaced unit directions in
/// the plane (or a spiral on the sphere), each radius, both options, orders 0
/// and 1 and every axis `j`.
pub fn standard_cases(dim: usize, directions: usize, radii: &[f64]) -> Result<Vec<BoundCase>> {
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..directions {
        if dim == 2 {
            // offset keeps some directions off the axes
            let (s, c) = (2.0 * PI * (i as f64 + 0.25) / directions as f64).sin_cos();
            dirs.push(vec![c, s]);
        } else {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / directions as f64;
            let r = (1.0 - z * z).sqrt();
            let (s, c) = (PI * (3.0 - 5f64.sqrt()) * i as f64).sin_cos();
            dirs.push(vec![r * c, r * s, z]);
        }
    }
    let mut cases = Vec::new();
    for &rho in radii {
        let m = Mollifier::new([0.0; 3], rho, dim)?;
        for option in [PhiOption::Plain, PhiOption::Moment { axis: 0 }] {
            for d in &dirs {
                let mut alphas = vec![MultiIndex::zero(dim)];
                alphas.extend((0..dim).map(|a| MultiIndex::unit(dim, a)));
                for alpha in alphas {
                    for j in 0..dim {
                        cases.push(BoundCase { mollifier: m, option, alpha, j, direction: d.clone() });
                    }
                }
            }
        }
    }
    Ok(cases)
}

/// Unit direction helper for callers holding a 3-slot point.
pub fn direction_of(p: &Point, dim: usize) -> Vec<f64> {
    let n = p.iter().take(dim).map(|v| v * v).sum::<f64>().sqrt();
    p.iter().take(dim).map(|v| v / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_at_zero_is_mass() {
        let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let t = fourier_transform(&m, &MultiIndex::zero(2), &[0.0, 0.0]).unwrap();
        assert!((t.direct.re - 1.0).abs() < 1e-10 && t.direct.im.abs() < 1e-14);
    }

    #[test]
    fn profile_matches_direct_transform() {
        for rho in [0.5, 1.0] {
            let m = Mollifier::new([0.1, -0.2, 0.0], rho, 2).unwrap();
            for xi in [[0.7, 0.0], [0.3, -1.1], [2.0, 1.5]] {
                let t = fourier_transform(&m, &MultiIndex::zero(2), &xi).unwrap();
                let mag = transform_magnitude(&m, PhiOption::Plain, &MultiIndex::zero(2), &xi);
                assert!((t.direct.norm() - mag).abs() < 1e-10, "{xi:?}: {} vs {mag}", t.direct.norm());
            }
        }
    }

    #[test]
    fn moment_magnitude_matches_direct() {
        let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let w = MomentWeight { base: m, axis: 0 };
        for xi in [[0.4, 0.3], [1.2, -0.5]] {
            for alpha in [MultiIndex::zero(2), MultiIndex::unit(2, 1)] {
                let t = fourier_transform(&w, &alpha, &xi).unwrap();
                let mag = transform_magnitude(&m, PhiOption::Moment { axis: 0 }, &alpha, &xi);
                assert!((t.direct.norm() - mag).abs() < 1e-10);
                assert!(t.discrepancy < 1e-8);
            }
        }
    }

    #[test]
    fn zero_component_gives_zero_lhs() {
        let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let l = lhs_line_integral(&m, PhiOption::Plain, &MultiIndex::zero(2), 1, &[1.0, 0.0]);
        assert_eq!(l.value, 0.0);
    }

    #[test]
    fn rhs_scales_inversely_with_rho() {
        let a = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
        let b = Mollifier::new([0.0; 3], 2.0, 2).unwrap();
        let z = MultiIndex::zero(2);
        let r = rhs_constant(&b, PhiOption::Plain, &z, 0).unwrap() / rhs_constant(&a, PhiOption::Plain, &z, 0).unwrap();
        assert!((r - 0.5).abs() < 1e-6);
    }

    #[test]
    fn scale_invariance_of_line_integral() {
        let m = Mollifier::new([0.0; 3], 0.5, 2).unwrap();
        let xi = direction_of(&[0.6, 0.8, 0.0], 2);
        let a = lhs_line_integral(&m, PhiOption::Plain, &MultiIndex::unit(2, 0), 0, &xi).value;
        let b = lhs_line_integral(&m, PhiOption::Plain, &MultiIndex::unit(2, 0), 0, &[1.2, 1.6]).value;
        assert!(((a - b) / a).abs() < 1e-8, "{a} {b}");
    }
}
