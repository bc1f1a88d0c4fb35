//! Bogovskii's right-inverse of the divergence.
//!
//! The kernel is `G(x,y) = int_1^inf (x-y) s^{n-1} omega(y + s(x-y)) ds`.
//! Volume integrals are done in polar coordinates around the evaluation point,
//! `y = x - r theta`, where the kernel factorises as
//!
//! ```text
//! G dy = theta sum_k C(n-1,k) r^k M_{n-1-k}(theta) dr dtheta,
//! M_m(theta) = int_0^inf sigma^m omega(x + sigma theta) d sigma,
//! ```
//!
//! so only one-dimensional chord moments of the weight and radial moments of
//! `f` are needed per direction. Derivatives follow from translating `x` and
//! `y` together:
//!
//! ```text
//! d_l int G_w g = int G_w d_l g + int G_{d_l w} g - oint G_w g n_l dS
//! ```
//!
//! The surface term drops out when `g` vanishes on the boundary. Applying the
//! rule twice gives the Hessian; the derivative of the last surface term is
//! evaluated directly from `d_x G` since `y` stays on the boundary.

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{dot, QuadratureRule, StarDomain};
use crate::error::{Error, Result};
use crate::field::{FieldSpec, Tensor2};
use crate::mollifier::{Mollifier, MultiIndex};
use crate::quad::{composite, gauss_legendre};
use crate::Point;

use std::f64::consts::PI;

pub type Tensor3 = [Tensor2; 3];

/// Kernel built on `d^deriv omega`.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    pub mollifier: Mollifier,
    pub deriv: MultiIndex,
}

impl KernelSpec {
    pub fn new(mollifier: Mollifier, deriv: MultiIndex) -> Result<Self> {
        if deriv.total() > 2 {
            return Err(Error::DerivativeOrder { order: deriv.total(), max: 2 });
        }
        if deriv.dim() != mollifier.dim {
            return Err(Error::InvalidParameter("multi-index dimension differs from mollifier".into()));
        }
        Ok(Self { mollifier, deriv })
    }

    pub fn plain(mollifier: Mollifier) -> Self {
        Self { mollifier, deriv: MultiIndex::zero(mollifier.dim) }
    }
}

/// Support `[s_-, s_+]` of `s -> omega(y + s d)`, or `None` if the line misses the ball.
fn ray_ball_interval(y: &Point, d: &Point, center: &Point, rho: f64, n: usize) -> Option<(f64, f64)> {
    let mut yc = [0.0; 3];
    for i in 0..n {
        yc[i] = y[i] - center[i];
    }
    let a = dot(d, d, n);
    let b = dot(d, &yc, n);
    let c = dot(&yc, &yc, n) - rho * rho;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    Some(((-b - root) / a, (-b + root) / a))
}

/// `G(x, y)` (or a derivative kernel) in the `s = 1/t` form.
pub fn kernel_eval(k: &KernelSpec, x: &Point, y: &Point) -> Result<Point> {
    let m = &k.mollifier;
    let n = m.dim;
    let mut d = [0.0; 3];
    for i in 0..n {
        d[i] = x[i] - y[i];
    }
    if dot(&d, &d, n) == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let Some((s_lo, s_hi)) = ray_ball_interval(y, &d, &m.center, m.rho, n) else {
        return Ok([0.0; 3]);
    };
    let lo = s_lo.max(1.0);
    if s_hi <= lo {
        return Ok([0.0; 3]);
    }
    let mut err = None;
    let integral = composite(lo, s_hi, 6, 20, |s| {
        let p = [y[0] + s * d[0], y[1] + s * d[1], y[2] + s * d[2]];
        match m.eval_deriv(&k.deriv, &p) {
            Ok(v) => s.powi(n as i32 - 1) * v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok([d[0] * integral, d[1] * integral, d[2] * integral])
}

/// Node counts of the polar quadrature around the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarRule {
    /// Gauss nodes per angular panel.
    pub angular_order: usize,
    /// Minimum number of panels between consecutive angular break points.
    pub angular_panels: usize,
    /// Largest angular panel width.
    pub max_panel_angle: f64,
    /// Gauss nodes per chord panel for the weight moments.
    pub chord_order: usize,
    pub chord_panels: usize,
    /// Gauss nodes per radial panel for the moments of `f`.
    pub radial_order: usize,
    pub radial_panels: usize,
}

impl Default for PolarRule {
    fn default() -> Self {
        Self {
            angular_order: 16,
            angular_panels: 4,
            max_panel_angle: PI / 8.0,
            chord_order: 16,
            chord_panels: 3,
            radial_order: 12,
            radial_panels: 2,
        }
    }
}

impl PolarRule {
    /// Roughly twice the nodes of the default in every direction.
    pub fn fine() -> Self {
        Self {
            angular_order: 24,
            angular_panels: 6,
            max_panel_angle: PI / 16.0,
            chord_order: 24,
            chord_panels: 4,
            radial_order: 16,
            radial_panels: 3,
        }
    }
}

/// What to compute at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Value,
    Gradient,
    Hessian,
}

/// `u`, `grad[i][j] = d_j u_i` and `hess[i][j][l] = d_j d_l u_i` at a point.
#[derive(Debug, Clone, Copy, Default)]
pub struct UJet {
    pub u: Point,
    pub grad: Tensor2,
    pub hess: Tensor3,
    /// Largest `|hess[i][j][l] - hess[i][l][j]|` before averaging, relative to
    /// the largest Hessian entry.
    pub hess_asymmetry: f64,
}

const BINOM: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0],
    [1.0, 3.0, 3.0, 1.0],
];

/// Chord moments `M_m`, `m = 0..=3`, of `omega`, its gradient and its Hessian.
#[derive(Default)]
struct Moments {
    w0: [f64; 4],
    w1: [[f64; 4]; 3],
    w2: [[[f64; 4]; 3]; 3],
}

/// Radial moments `int_0^L g(x - r theta) r^k dr`, `k = 0..=2`, of `f`, `grad f`, `hess f`.
#[derive(Default)]
struct RadialMoments {
    f0: [f64; 3],
    f1: [[f64; 3]; 3],
    f2: [[[f64; 3]; 3]; 3],
}

#[inline]
fn pair(n: usize, mw: &[f64; 4], fg: &[f64; 3]) -> f64 {
    (0..n).map(|k| BINOM[n - 1][k] * mw[n - 1 - k] * fg[k]).sum()
}

#[inline]
fn surface(n: usize, mw: &[f64; 4], l: f64) -> f64 {
    let mut lk = 1.0;
    let mut s = 0.0;
    for k in 0..n {
        s += BINOM[n - 1][k] * lk * mw[n - 1 - k];
        lk *= l;
    }
    s
}

#[inline]
fn surface_up(n: usize, mw: &[f64; 4], l: f64) -> f64 {
    let mut lk = 1.0;
    let mut s = 0.0;
    for k in 0..=n {
        s += BINOM[n][k] * lk * mw[n - k];
        lk *= l;
    }
    s
}

/// Bogovskii operator for one mollifier on one domain.
#[derive(Debug, Clone)]
pub struct Bogovskii<'a> {
    pub mollifier: Mollifier,
    pub domain: &'a StarDomain,
    pub rule: PolarRule,
}

impl<'a> Bogovskii<'a> {
    pub fn new(mollifier: Mollifier, domain: &'a StarDomain) -> Result<Self> {
        if mollifier.dim != domain.dim {
            return Err(Error::InvalidParameter("mollifier and domain dimensions differ".into()));
        }
        Ok(Self { mollifier, domain, rule: PolarRule::default() })
    }

    /// Mollifier on the domain's star ball.
    pub fn on_star_ball(domain: &'a StarDomain) -> Result<Self> {
        let m = Mollifier::new(domain.star_center, domain.star_radius, domain.dim)?;
        Self::new(m, domain)
    }

    pub fn with_rule(mut self, rule: PolarRule) -> Self {
        self.rule = rule;
        self
    }

    fn check_field(&self, f: &FieldSpec, level: Level) -> Result<()> {
        f.require_scalar()?;
        if !f.zero_mean {
            return Err(Error::MissingZeroMean);
        }
        if level >= Level::Gradient && !f.has_gradient() {
            return Err(Error::MissingDerivative("gradient"));
        }
        if level >= Level::Hessian && !f.has_hessian() {
            return Err(Error::MissingDerivative("hessian"));
        }
        Ok(())
    }

    pub fn apply(&self, f: &FieldSpec, x: &Point) -> Result<Point> {
        self.check_field(f, Level::Value)?;
        Ok(self.jet_unchecked(f, x, Level::Value).u)
    }

    pub fn apply_grad(&self, f: &FieldSpec, x: &Point) -> Result<Tensor2> {
        self.check_field(f, Level::Gradient)?;
        Ok(self.jet_unchecked(f, x, Level::Gradient).grad)
    }

    pub fn apply_hess(&self, f: &FieldSpec, x: &Point) -> Result<Tensor3> {
        Ok(self.jet(f, x, Level::Hessian)?.hess)
    }

    pub fn jet(&self, f: &FieldSpec, x: &Point, level: Level) -> Result<UJet> {
        self.check_field(f, level)?;
        Ok(self.jet_unchecked(f, x, level))
    }

    /// Angular nodes and weights (surface measure included).
    fn directions(&self, x: &Point) -> Vec<(Point, f64)> {
        let n = self.domain.dim;
        let m = &self.mollifier;
        let mut dvec = [0.0; 3];
        for i in 0..n {
            dvec[i] = m.center[i] - x[i];
        }
        let dist = dot(&dvec, &dvec, n).sqrt();
        let inside = dist <= m.rho;
        let half = if inside { PI } else { (m.rho / dist).asin() };
        let rule = &self.rule;
        let g = gauss_legendre(rule.angular_order);
        let mut out = Vec::new();
        if n == 2 {
            let center_angle = if dist > 0.0 { dvec[1].atan2(dvec[0]) } else { 0.0 };
            let (lo, hi) = (center_angle - half, center_angle + half);
            let mut breaks: Vec<f64> = self
                .domain
                .corners()
                .iter()
                .filter_map(|v| {
                    let (dx, dy) = (x[0] - v[0], x[1] - v[1]);
                    if dx * dx + dy * dy == 0.0 {
                        return None;
                    }
                    let mut phi = dy.atan2(dx);
                    while phi < lo {
                        phi += 2.0 * PI;
                    }
                    while phi > hi {
                        phi -= 2.0 * PI;
                    }
                    (phi > lo && phi < hi).then_some(phi)
                })
                .collect();
            breaks.sort_by(|a, b| a.total_cmp(b));
            let mut edges = vec![lo];
            edges.extend(breaks);
            edges.push(hi);
            for w in edges.windows(2) {
                let len = w[1] - w[0];
                if len <= 0.0 {
                    continue;
                }
                let panels = rule.angular_panels.max((len / rule.max_panel_angle).ceil() as usize);
                let h = len / panels as f64;
                for p in 0..panels {
                    let a = w[0] + h * p as f64;
                    for (phi, wt) in g.mapped(a, a + h) {
                        let (s, c) = phi.sin_cos();
                        out.push(([c, s, 0.0], wt));
                    }
                }
            }
        } else {
            // spherical coordinates around the axis pointing at the ball centre
            let axis = if dist > 0.0 { [dvec[0] / dist, dvec[1] / dist, dvec[2] / dist] } else { [0.0, 0.0, 1.0] };
            let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let e1 = normalize(cross(&axis, &helper));
            let e2 = cross(&axis, &e1);
            let polar_panels = rule.angular_panels.max((half / rule.max_panel_angle).ceil() as usize);
            let nphi = 4 * rule.angular_order * rule.angular_panels.max(2);
            let dphi = 2.0 * PI / nphi as f64;
            let h = half / polar_panels as f64;
            for p in 0..polar_panels {
                for (t, wt) in g.mapped(h * p as f64, h * (p + 1) as f64) {
                    let (st, ct) = t.sin_cos();
                    for k in 0..nphi {
                        let (sp, cp) = ((k as f64 + 0.5) * dphi).sin_cos();
                        let mut th = [0.0; 3];
                        for i in 0..3 {
                            th[i] = ct * axis[i] + st * (cp * e1[i] + sp * e2[i]);
                        }
                        out.push((th, wt * st * dphi));
                    }
                }
            }
        }
        out
    }

    fn moments(&self, x: &Point, theta: &Point, level: Level) -> Option<Moments> {
        let n = self.domain.dim;
        let m = &self.mollifier;
        let (s_lo, s_hi) = ray_ball_interval(x, theta, &m.center, m.rho, n)?;
        let lo = s_lo.max(0.0);
        if s_hi <= lo {
            return None;
        }
        let orders = if level == Level::Hessian { n + 1 } else { n };
        let g = gauss_legendre(self.rule.chord_order);
        let h = (s_hi - lo) / self.rule.chord_panels as f64;
        let mut mo = Moments::default();
        for p in 0..self.rule.chord_panels {
            let a = lo + h * p as f64;
            for (sig, wt) in g.mapped(a, a + h) {
                let pt = [x[0] + sig * theta[0], x[1] + sig * theta[1], x[2] + sig * theta[2]];
                let jet = m.jet2(&pt);
                let mut pw = wt;
                for k in 0..orders {
                    mo.w0[k] += pw * jet.value;
                    if level >= Level::Gradient {
                        for a in 0..n {
                            mo.w1[a][k] += pw * jet.grad[a];
                        }
                    }
                    if level == Level::Hessian {
                        for a in 0..n {
                            for b in 0..n {
                                mo.w2[a][b][k] += pw * jet.hess[a][b];
                            }
                        }
                    }
                    pw *= sig;
                }
            }
        }
        Some(mo)
    }

    fn radial(&self, f: &FieldSpec, x: &Point, theta: &Point, len: f64, level: Level) -> RadialMoments {
        let n = self.domain.dim;
        let g = gauss_legendre(self.rule.radial_order);
        let h = len / self.rule.radial_panels as f64;
        let mut rm = RadialMoments::default();
        for p in 0..self.rule.radial_panels {
            let a = h * p as f64;
            for (r, wt) in g.mapped(a, a + h) {
                let y = [x[0] - r * theta[0], x[1] - r * theta[1], x[2] - r * theta[2]];
                let (v, gr, he) = if level == Level::Value { (f.value(&y), [0.0; 3], [[0.0; 3]; 3]) } else { f.jet(&y) };
                let mut pw = wt;
                for k in 0..n {
                    rm.f0[k] += pw * v;
                    if level >= Level::Gradient {
                        for a in 0..n {
                            rm.f1[a][k] += pw * gr[a];
                        }
                    }
                    if level == Level::Hessian {
                        for a in 0..n {
                            for b in 0..n {
                                rm.f2[a][b][k] += pw * he[a][b];
                            }
                        }
                    }
                    pw *= r;
                }
            }
        }
        rm
    }

    /// Evaluation without the precondition checks; missing derivatives of `f` count as zero.
    pub fn jet_unchecked(&self, f: &FieldSpec, x: &Point, level: Level) -> UJet {
        let n = self.domain.dim;
        let mut out = UJet::default();
        for (theta, wt) in self.directions(x) {
            let Some(mo) = self.moments(x, &theta, level) else {
                continue;
            };
            let minus = [-theta[0], -theta[1], -theta[2]];
            let (len, normal) = self.domain.exit(x, &minus);
            let rm = self.radial(f, x, &theta, len, level);

            let base = wt * pair(n, &mo.w0, &rm.f0);
            for i in 0..n {
                out.u[i] += theta[i] * base;
            }
            if level == Level::Value {
                continue;
            }
            let yb = [x[0] - len * theta[0], x[1] - len * theta[1], x[2] - len * theta[2]];
            let (fb, gb, _) = f.jet(&yb);
            let cos_out = -dot(&theta, &normal, n);
            let inv = if cos_out > 1e-300 { 1.0 / cos_out } else { 0.0 };
            let q0 = surface(n, &mo.w0, len);
            for j in 0..n {
                let s = pair(n, &mo.w0, &rm.f1[j]) + pair(n, &mo.w1[j], &rm.f0) - fb * normal[j] * inv * q0;
                for i in 0..n {
                    out.grad[i][j] += wt * theta[i] * s;
                }
            }
            if level == Level::Value || level == Level::Gradient {
                continue;
            }
            let inv_len = if len > 1e-300 { 1.0 / len } else { 0.0 };
            for j in 0..n {
                let q1j = surface(n, &mo.w1[j], len);
                for l in 0..n {
                    let s = pair(n, &mo.w0, &rm.f2[j][l])
                        + pair(n, &mo.w1[l], &rm.f1[j])
                        + pair(n, &mo.w1[j], &rm.f1[l])
                        + pair(n, &mo.w2[j][l], &rm.f0)
                        - gb[j] * normal[l] * inv * q0
                        - fb * normal[l] * inv * q1j;
                    let dterm = fb * normal[j] * inv * inv_len;
                    let r_l = if dterm != 0.0 { surface_up(n, &mo.w1[l], len) } else { 0.0 };
                    for i in 0..n {
                        let delta = if i == l { q0 } else { 0.0 };
                        out.hess[i][j][l] += wt * (theta[i] * s - dterm * (delta + theta[i] * r_l));
                    }
                }
            }
        }
        if level == Level::Hessian {
            let mut asym: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        scale = scale.max(out.hess[i][j][l].abs());
                        if l > j {
                            let (a, b) = (out.hess[i][j][l], out.hess[i][l][j]);
                            asym = asym.max((a - b).abs());
                            let avg = 0.5 * (a + b);
                            out.hess[i][j][l] = avg;
                            out.hess[i][l][j] = avg;
                        }
                    }
                }
            }
            out.hess_asymmetry = if scale > 0.0 { asym / scale } else { 0.0 };
        }
        out
    }

    /// Divergence residual, boundary decay and Sobolev seminorms over a quadrature rule.
    pub fn residual_and_norms(&self, f: &FieldSpec, quad: &QuadratureRule) -> Result<ResidualNorms> {
        let level = if f.has_hessian() { Level::Hessian } else { Level::Gradient };
        Ok(self.evaluate(f, quad, level)?.0)
    }

    /// [`Self::residual_and_norms`] at a chosen level, also returning the jets at the quadrature nodes.
    pub fn evaluate(&self, f: &FieldSpec, quad: &QuadratureRule, level: Level) -> Result<(ResidualNorms, Vec<UJet>)> {
        let level = if level == Level::Value { Level::Gradient } else { level };
        self.check_field(f, level)?;
        let n = self.domain.dim;
        let jets: Vec<UJet> = quad.nodes.par_iter().map(|x| self.jet_unchecked(f, x, level)).collect();

        let mut res2 = 0.0;
        let mut f2 = 0.0;
        let mut fgrad2 = 0.0;
        let mut g2 = 0.0;
        let mut h2 = 0.0;
        let mut max_u: f64 = 0.0;
        let mut max_gu: f64 = 0.0;
        let mut asym: f64 = 0.0;
        for ((x, w), jet) in quad.nodes.iter().zip(&quad.weights).zip(&jets) {
            let (fv, fg, _) = f.jet(x);
            let tr: f64 = (0..n).map(|i| jet.grad[i][i]).sum();
            res2 += w * (tr - fv).powi(2);
            f2 += w * fv * fv;
            fgrad2 += w * dot(&fg, &fg, n);
            let gsq = frob2(&jet.grad, n);
            g2 += w * gsq;
            max_u = max_u.max(dot(&jet.u, &jet.u, n).sqrt());
            max_gu = max_gu.max(gsq.sqrt());
            if level == Level::Hessian {
                h2 += w * (0..n).map(|i| frob2(&jet.hess[i], n)).sum::<f64>();
                asym = asym.max(jet.hess_asymmetry);
            }
        }

        let offset = 1e-3 * self.domain.star_radius;
        let samples: Vec<Point> = self
            .domain
            .boundary_samples(128)
            .into_iter()
            .map(|(p, nrm)| [p[0] - offset * nrm[0], p[1] - offset * nrm[1], p[2] - offset * nrm[2]])
            .collect();
        let bjets: Vec<UJet> = samples.par_iter().map(|x| self.jet_unchecked(f, x, Level::Gradient)).collect();
        let mut bmax_u: f64 = 0.0;
        let mut bmax_gu: f64 = 0.0;
        for j in &bjets {
            bmax_u = bmax_u.max(dot(&j.u, &j.u, n).sqrt());
            bmax_gu = bmax_gu.max(frob2(&j.grad, n).sqrt());
        }

        let f_norm0 = f2.sqrt();
        let norms = ResidualNorms {
            div_residual_rel: if f_norm0 > 0.0 { res2.sqrt() / f_norm0 } else { 0.0 },
            boundary_max_u: bmax_u,
            boundary_max_gradu: bmax_gu,
            interior_max_u: max_u,
            interior_max_gradu: max_gu,
            seminorm1: g2.sqrt(),
            seminorm2: (level == Level::Hessian).then(|| h2.sqrt()),
            f_norm0,
            f_seminorm1: fgrad2.sqrt(),
            hess_asymmetry: asym,
        };
        Ok((norms, jets))
    }
}

fn frob2(t: &Tensor2, n: usize) -> f64 {
    let mut s = 0.0;
    for row in t.iter().take(n) {
        for v in row.iter().take(n) {
            s += v * v;
        }
    }
    s
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize(a: Point) -> Point {
    let l = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / l, a[1] / l, a[2] / l]
}

/// Output of [`Bogovskii::residual_and_norms`]. Seminorms use the full
/// Frobenius norm of the derivative tensors (mixed second derivatives counted
/// in both orders).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualNorms {
    pub div_residual_rel: f64,
    pub boundary_max_u: f64,
    pub boundary_max_gradu: f64,
    pub interior_max_u: f64,
    pub interior_max_gradu: f64,
    pub seminorm1: f64,
    pub seminorm2: Option<f64>,
    pub f_norm0: f64,
    pub f_seminorm1: f64,
    pub hess_asymmetry: f64,
}

/// `apply` with the default polar rule and the mollifier `m`.
pub fn apply(m: &Mollifier, d: &StarDomain, f: &FieldSpec, x: &Point) -> Result<Point> {
    Bogovskii::new(*m, d)?.apply(f, x)
}

pub fn apply_grad(m: &Mollifier, d: &StarDomain, f: &FieldSpec, x: &Point) -> Result<Tensor2> {
    Bogovskii::new(*m, d)?.apply_grad(f, x)
}

pub fn apply_hess(m: &Mollifier, d: &StarDomain, f: &FieldSpec, x: &Point) -> Result<Tensor3> {
    Bogovskii::new(*m, d)?.apply_hess(f, x)
}

pub fn residual_and_norms(m: &Mollifier, d: &StarDomain, f: &FieldSpec, quad: &QuadratureRule) -> Result<ResidualNorms> {
    Bogovskii::new(*m, d)?.residual_and_norms(f, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Separable;

    fn mollifier(rho: f64) -> Mollifier {
        Mollifier::new([0.0; 3], rho, 2).unwrap()
    }

    #[test]
    fn kernel_zero_when_ray_misses() {
        let k = KernelSpec::plain(mollifier(0.2));
        let v = kernel_eval(&k, &[0.9, 0.0, 0.0], &[0.5, 0.0, 0.0]).unwrap();
        assert_eq!(v, [0.0; 3]);
        assert!(matches!(kernel_eval(&k, &[0.1, 0.0, 0.0], &[0.1, 0.0, 0.0]), Err(Error::CoincidentPoints)));
    }

    #[test]
    fn kernel_reflection() {
        let k = KernelSpec::plain(mollifier(0.3));
        let (x, y) = ([0.1, 0.05, 0.0], [-0.4, 0.2, 0.0]);
        let a = kernel_eval(&k, &x, &y).unwrap();
        let b = kernel_eval(&k, &[-x[0], -x[1], 0.0], &[-y[0], -y[1], 0.0]).unwrap();
        assert!((a[0] + b[0]).abs() < 1e-10 && (a[1] + b[1]).abs() < 1e-10);
        let c = kernel_eval(&k, &[x[0], -x[1], 0.0], &[y[0], -y[1], 0.0]).unwrap();
        assert!((a[0] - c[0]).abs() < 1e-10 && (a[1] + c[1]).abs() < 1e-10);
    }

    #[test]
    fn rejects_second_order_overflow() {
        let m = mollifier(1.0);
        assert!(KernelSpec::new(m, MultiIndex::new(&[2, 1]).unwrap()).is_err());
        assert!(KernelSpec::new(m, MultiIndex::new(&[1, 1]).unwrap()).is_ok());
    }

    #[test]
    fn zero_field_gives_zero() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let b = Bogovskii::on_star_ball(&d).unwrap();
        let j = b.jet(&FieldSpec::zero(), &[0.2, 0.1, 0.0], Level::Hessian).unwrap();
        assert_eq!(j.u, [0.0; 3]);
        assert!(j.grad.iter().flatten().all(|v| *v == 0.0));
        assert!(j.hess.iter().flatten().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn preconditions() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let b = Bogovskii::on_star_ball(&d).unwrap();
        let f = FieldSpec::scalar("x1", 2, |x| x[0]);
        assert!(matches!(b.apply(&f, &[0.0; 3]), Err(Error::MissingZeroMean)));
        let f = f.flagged_zero_mean(true);
        assert!(matches!(b.apply_grad(&f, &[0.0; 3]), Err(Error::MissingDerivative(_))));
        let v = FieldSpec::vector("v", vec![f.clone(), f]).unwrap();
        assert!(matches!(b.apply(&v, &[0.0; 3]), Err(Error::NotScalar(2))));
    }

    #[test]
    fn divergence_of_x1_on_square() {
        let d = StarDomain::rectangle(1.0, 1.0).unwrap();
        let b = Bogovskii::on_star_ball(&d).unwrap().with_rule(PolarRule::fine());
        let f = Separable::coordinate(2, 0).into_field("x1", true);
        for x in [[0.3, 0.2, 0.0], [-0.8, 0.9, 0.0], [0.0, 0.0, 0.0]] {
            let g = b.apply_grad(&f, &x).unwrap();
            assert!((g[0][0] + g[1][1] - x[0]).abs() < 1e-8, "{x:?}: {}", g[0][0] + g[1][1]);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let b = Bogovskii::on_star_ball(&d).unwrap();
        let f = Separable::coordinate(2, 0).into_field("x1", true);
        let x = [0.3, 0.1, 0.0];
        let h = 1e-3;
        let hess = b.apply_hess(&f, &x).unwrap();
        for l in 0..2 {
            let mut xp = x;
            xp[l] += h;
            let mut xm = x;
            xm[l] -= h;
            let gp = b.apply_grad(&f, &xp).unwrap();
            let gm = b.apply_grad(&f, &xm).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (gp[i][j] - gm[i][j]) / (2.0 * h);
                    assert!((fd - hess[i][j][l]).abs() < 5e-3, "{i}{j}{l}: {fd} vs {}", hess[i][j][l]);
                }
            }
        }
    }
}
