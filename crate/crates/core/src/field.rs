//! Analytic fields with derivative callbacks.
//!
//! [`FieldSpec`] stores closures for value, gradient and (optionally) Hessian of
//! each component. [`Separable`] sums build such closures from products of
//! univariate factors `p(x_i) sin(k x_i + c)` with exact derivatives.

use std::fmt;
use std::sync::Arc;

use crate::domain::QuadratureRule;
use crate::error::{Error, Result};
use crate::Point;

pub type Tensor2 = [[f64; 3]; 3];

type ValueFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
type HessFn = Arc<dyn Fn(&Point) -> Tensor2 + Send + Sync>;
type JetFn = Arc<dyn Fn(&Point) -> (f64, Point, Tensor2) + Send + Sync>;

#[derive(Clone)]
pub struct FieldSpec {
    pub name: String,
    pub dim: usize,
    pub dim_out: usize,
    value: Vec<ValueFn>,
    gradient: Option<Vec<GradFn>>,
    hessian: Option<Vec<HessFn>>,
    jet: Option<JetFn>,
    pub zero_mean: bool,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("dim_out", &self.dim_out)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("zero_mean", &self.zero_mean)
            .finish()
    }
}

impl FieldSpec {
    pub fn scalar<F>(name: impl Into<String>, dim: usize, value: F) -> Self
    where
        F: Fn(&Point) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            dim,
            dim_out: 1,
            value: vec![Arc::new(value)],
            gradient: None,
            hessian: None,
            jet: None,
            zero_mean: false,
        }
    }

    /// Vector field from per-component scalar fields (derivatives kept only
    /// if every component has them).
    pub fn vector(name: impl Into<String>, components: Vec<FieldSpec>) -> Result<Self> {
        let dim = components.first().map(|c| c.dim).ok_or_else(|| {
            Error::InvalidParameter("vector field needs at least one component".into())
        })?;
        let mut value = Vec::new();
        let mut gradient = Some(Vec::new());
        let mut hessian = Some(Vec::new());
        for c in &components {
            if c.dim_out != 1 || c.dim != dim {
                return Err(Error::InvalidParameter("vector components must be scalar fields of one dimension".into()));
            }
            value.push(c.value[0].clone());
            gradient = gradient.and_then(|mut g| c.gradient.as_ref().map(|cg| {
                g.push(cg[0].clone());
                g
            }));
            hessian = hessian.and_then(|mut h| c.hessian.as_ref().map(|ch| {
                h.push(ch[0].clone());
                h
            }));
        }
        Ok(Self {
            name: name.into(),
            dim,
            dim_out: components.len(),
            value,
            gradient,
            hessian,
            jet: None,
            zero_mean: components.iter().all(|c| c.zero_mean),
        })
    }

    pub fn with_gradient<G>(mut self, g: G) -> Self
    where
        G: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        self.gradient = Some(vec![Arc::new(g)]);
        self.jet = None;
        self
    }

    pub fn with_hessian<H>(mut self, h: H) -> Self
    where
        H: Fn(&Point) -> Tensor2 + Send + Sync + 'static,
    {
        self.hessian = Some(vec![Arc::new(h)]);
        self.jet = None;
        self
    }

    pub fn flagged_zero_mean(mut self, flag: bool) -> Self {
        self.zero_mean = flag;
        self
    }

    pub fn zero() -> Self {
        Self::scalar("zero", 2, |_| 0.0)
            .with_gradient(|_| [0.0; 3])
            .with_hessian(|_| [[0.0; 3]; 3])
            .flagged_zero_mean(true)
    }

    pub fn in_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    #[inline]
    pub fn value(&self, x: &Point) -> f64 {
        (self.value[0])(x)
    }

    #[inline]
    pub fn component(&self, i: usize, x: &Point) -> f64 {
        (self.value[i])(x)
    }

    #[inline]
    pub fn gradient(&self, x: &Point) -> Option<Point> {
        self.gradient.as_ref().map(|g| (g[0])(x))
    }

    #[inline]
    pub fn component_gradient(&self, i: usize, x: &Point) -> Option<Point> {
        self.gradient.as_ref().map(|g| (g[i])(x))
    }

    #[inline]
    pub fn hessian(&self, x: &Point) -> Option<Tensor2> {
        self.hessian.as_ref().map(|h| (h[0])(x))
    }

    /// Value, gradient and Hessian of a scalar field in one call; missing
    /// derivatives come back as zeros.
    #[inline]
    pub fn jet(&self, x: &Point) -> (f64, Point, Tensor2) {
        if let Some(j) = &self.jet {
            return j(x);
        }
        (
            self.value(x),
            self.gradient(x).unwrap_or([0.0; 3]),
            self.hessian(x).unwrap_or([[0.0; 3]; 3]),
        )
    }

    pub fn require_scalar(&self) -> Result<()> {
        if self.dim_out != 1 {
            return Err(Error::NotScalar(self.dim_out));
        }
        Ok(())
    }

    /// `(alpha f + beta g)` with derivatives where both have them.
    pub fn combine(alpha: f64, f: &FieldSpec, beta: f64, g: &FieldSpec) -> Result<FieldSpec> {
        f.require_scalar()?;
        g.require_scalar()?;
        let (fv, gv) = (f.value[0].clone(), g.value[0].clone());
        let mut out = FieldSpec::scalar(format!("{alpha}*{}+{beta}*{}", f.name, g.name), f.dim, move |x| {
            alpha * fv(x) + beta * gv(x)
        });
        if let (Some(fg), Some(gg)) = (&f.gradient, &g.gradient) {
            let (fg, gg) = (fg[0].clone(), gg[0].clone());
            out = out.with_gradient(move |x| {
                let (a, b) = (fg(x), gg(x));
                [alpha * a[0] + beta * b[0], alpha * a[1] + beta * b[1], alpha * a[2] + beta * b[2]]
            });
        }
        if let (Some(fh), Some(gh)) = (&f.hessian, &g.hessian) {
            let (fh, gh) = (fh[0].clone(), gh[0].clone());
            out = out.with_hessian(move |x| {
                let (a, b) = (fh(x), gh(x));
                let mut h = [[0.0; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        h[i][j] = alpha * a[i][j] + beta * b[i][j];
                    }
                }
                h
            });
        }
        out.zero_mean = f.zero_mean && g.zero_mean;
        Ok(out)
    }

    /// Checks the zero-mean flag against quadrature:
    /// `|int f| <= 1e-8 ||f||_0 sqrt(|Omega|)`.
    pub fn check_zero_mean(&self, quad: &QuadratureRule) -> Result<f64> {
        self.require_scalar()?;
        let mean = quad.integrate(|x| self.value(x));
        let norm = quad.integrate(|x| self.value(x).powi(2)).sqrt();
        let vol = quad.total_weight();
        if mean.abs() > 1e-8 * norm * vol.sqrt() {
            return Err(Error::MissingZeroMean);
        }
        Ok(mean)
    }

    /// Largest deviation of the gradient callback from central differences.
    pub fn gradient_fd_error(&self, points: &[Point], h: f64) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            let g = self.gradient(x).ok_or(Error::MissingDerivative("gradient"))?;
            for (j, gj) in g.iter().enumerate().take(self.dim) {
                let mut xp = *x;
                let mut xm = *x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * h);
                worst = worst.max((fd - gj).abs());
            }
        }
        Ok(worst)
    }
}

/// Univariate factor `p(t) * s(t)` with `p` a polynomial (coefficients in
/// increasing degree) and `s` either 1 or `sin(freq t + phase)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub poly: Vec<f64>,
    pub sine: Option<(f64, f64)>,
}

impl Factor {
    pub fn one() -> Self {
        Self { poly: vec![1.0], sine: None }
    }

    pub fn poly(coeffs: Vec<f64>) -> Self {
        Self { poly: coeffs, sine: None }
    }

    pub fn sine(freq: f64, phase: f64) -> Self {
        Self { poly: vec![1.0], sine: Some((freq, phase)) }
    }

    /// Legendre polynomial `P_deg(t / scale)`.
    pub fn legendre(deg: usize, scale: f64) -> Self {
        let mut p0 = vec![1.0];
        let mut p1 = vec![0.0, 1.0 / scale];
        if deg == 0 {
            return Self::poly(p0);
        }
        for k in 2..=deg {
            let kf = k as f64;
            let mut p2 = vec![0.0; k + 1];
            for (i, c) in p1.iter().enumerate() {
                p2[i + 1] += (2.0 * kf - 1.0) / kf * c / scale;
            }
            for (i, c) in p0.iter().enumerate() {
                p2[i] -= (kf - 1.0) / kf * c;
            }
            p0 = p1;
            p1 = p2;
        }
        Self::poly(p1)
    }

    /// `1 - (t/scale)^2`.
    pub fn bubble(scale: f64) -> Self {
        Self::poly(vec![1.0, 0.0, -1.0 / (scale * scale)])
    }

    pub fn times(&self, other: &Factor) -> Result<Factor> {
        let sine = match (self.sine, other.sine) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter("product of two sine factors".into()))
            }
            (a, b) => a.or(b),
        };
        let mut poly = vec![0.0; self.poly.len() + other.poly.len() - 1];
        for (i, a) in self.poly.iter().enumerate() {
            for (j, b) in other.poly.iter().enumerate() {
                poly[i + j] += a * b;
            }
        }
        Ok(Factor { poly, sine })
    }

    /// Value and first two derivatives.
    #[inline]
    pub fn jet(&self, t: f64) -> [f64; 3] {
        let mut p = [0.0; 3];
        // Horner for p, p', p''
        for &c in self.poly.iter().rev() {
            p[2] = p[2] * t + 2.0 * p[1];
            p[1] = p[1] * t + p[0];
            p[0] = p[0] * t + c;
        }
        match self.sine {
            None => p,
            Some((w, c)) => {
                let (s, co) = (w * t + c).sin_cos();
                let s1 = w * co;
                let s2 = -w * w * s;
                [p[0] * s, p[1] * s + p[0] * s1, p[2] * s + 2.0 * p[1] * s1 + p[0] * s2]
            }
        }
    }
}

/// `sum_k coef_k prod_i factor_{k,i}(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Separable {
    pub dim: usize,
    pub terms: Vec<(f64, Vec<Factor>)>,
}

impl Separable {
    pub fn new(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self { dim, terms: vec![(c, vec![Factor::one(); dim])] }
    }

    /// Single product term.
    pub fn product(dim: usize, factors: Vec<Factor>) -> Self {
        assert_eq!(factors.len(), dim, "one factor per axis");
        Self { dim, terms: vec![(1.0, factors)] }
    }

    /// Coordinate function `x_axis`.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        let mut f = vec![Factor::one(); dim];
        f[axis] = Factor::poly(vec![0.0, 1.0]);
        Self::product(dim, f)
    }

    pub fn plus(mut self, coef: f64, other: &Separable) -> Self {
        for (c, f) in &other.terms {
            self.terms.push((coef * c, f.clone()));
        }
        self
    }

    pub fn times(&self, other: &Separable) -> Result<Separable> {
        let mut terms = Vec::new();
        for (c1, f1) in &self.terms {
            for (c2, f2) in &other.terms {
                let f: Result<Vec<Factor>> = f1.iter().zip(f2).map(|(a, b)| a.times(b)).collect();
                terms.push((c1 * c2, f?));
            }
        }
        Ok(Separable { dim: self.dim, terms })
    }

    /// Value, gradient, Hessian.
    #[inline]
    pub fn jet(&self, x: &Point) -> (f64, Point, Tensor2) {
        let n = self.dim;
        let mut v = 0.0;
        let mut g = [0.0; 3];
        let mut h = [[0.0; 3]; 3];
        for (c, factors) in &self.terms {
            let mut jets = [[0.0; 3]; 3];
            for i in 0..n {
                jets[i] = factors[i].jet(x[i]);
            }
            let mut prod = *c;
            for jet in jets.iter().take(n) {
                prod *= jet[0];
            }
            v += prod;
            for i in 0..n {
                // product with the i-th factor differentiated
                let mut gi = *c * jets[i][1];
                for (k, jet) in jets.iter().enumerate().take(n) {
                    if k != i {
                        gi *= jet[0];
                    }
                }
                g[i] += gi;
                for j in 0..n {
                    let mut hij = *c;
                    for (k, jet) in jets.iter().enumerate().take(n) {
                        let order = (k == i) as usize + (k == j) as usize;
                        hij *= jet[order];
                    }
                    h[i][j] += hij;
                }
            }
        }
        (v, g, h)
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.jet(x).0
    }

    /// Integral over the quadrature rule.
    pub fn integrate(&self, quad: &QuadratureRule) -> f64 {
        quad.integrate(|x| self.value(x))
    }

    /// Subtract the mean over the quadrature domain.
    pub fn zero_meaned(&self, quad: &QuadratureRule) -> Separable {
        let mean = self.integrate(quad) / quad.total_weight();
        self.clone().plus(-mean, &Separable::constant(self.dim, 1.0))
    }

    pub fn into_field(self, name: impl Into<String>, zero_mean: bool) -> FieldSpec {
        let dim = self.dim;
        let s = Arc::new(self);
        let (a, b, c, d) = (s.clone(), s.clone(), s.clone(), s);
        let mut f = FieldSpec::scalar(name, dim, move |x| a.jet(x).0)
            .with_gradient(move |x| b.jet(x).1)
            .with_hessian(move |x| c.jet(x).2)
            .flagged_zero_mean(zero_mean);
        f.jet = Some(Arc::new(move |x| d.jet(x)));
        f
    }
}
