//! Domains star-shaped with respect to a ball.
//!
//! Four kinds are supported: the axis-aligned rectangle `(-a,a) x (-eps,eps)`,
//! the axis-aligned box `(-a,a) x (-b,b) x (-c,c)`, the ball of radius `r`
//! centred at the origin (2D or 3D), and a 2D polar domain given by radius
//! samples at equally spaced angles (linearly interpolated in the angle).
//!
//! Membership uses the closed set: a point on the boundary is contained.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::Point;

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    Rectangle { a: f64, eps: f64 },
    Box { a: f64, b: f64, c: f64 },
    Ball { r: f64, dim: usize },
    Polar { radii: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct StarDomain {
    pub kind: DomainKind,
    pub dim: usize,
    pub star_center: Point,
    pub star_radius: f64,
    pub diameter: f64,
    pub volume: f64,
}

/// Nodes and positive weights of a quadrature over a domain.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl StarDomain {
    pub fn rectangle(a: f64, eps: f64) -> Result<Self> {
        positive("a", a)?;
        positive("eps", eps)?;
        if eps > a {
            return Err(Error::InvalidParameter(format!("rectangle needs eps <= a (a={a}, eps={eps})")));
        }
        Ok(Self {
            kind: DomainKind::Rectangle { a, eps },
            dim: 2,
            star_center: [0.0; 3],
            star_radius: eps,
            diameter: 2.0 * (a * a + eps * eps).sqrt(),
            volume: 4.0 * a * eps,
        })
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.5, 0.5).expect("valid rectangle")
    }

    pub fn cuboid(a: f64, b: f64, c: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        positive("c", c)?;
        Ok(Self {
            kind: DomainKind::Box { a, b, c },
            dim: 3,
            star_center: [0.0; 3],
            star_radius: a.min(b).min(c),
            diameter: 2.0 * (a * a + b * b + c * c).sqrt(),
            volume: 8.0 * a * b * c,
        })
    }

    pub fn ball(r: f64, dim: usize) -> Result<Self> {
        positive("r", r)?;
        let volume = match dim {
            2 => PI * r * r,
            3 => 4.0 / 3.0 * PI * r * r * r,
            d => return Err(Error::UnsupportedDimension(d)),
        };
        Ok(Self {
            kind: DomainKind::Ball { r, dim },
            dim,
            star_center: [0.0; 3],
            star_radius: r,
            diameter: 2.0 * r,
            volume,
        })
    }

    /// Polar domain around the origin from radius samples at angles `2 pi i / N`.
    /// The star ball is centred at the origin with the largest radius that passes
    /// the sampled star check.
    pub fn polar(radii: Vec<f64>) -> Result<Self> {
        if radii.len() < 3 {
            return Err(Error::InvalidParameter("polar profile needs at least 3 samples".into()));
        }
        for &r in &radii {
            positive("polar radius", r)?;
        }
        let n = radii.len();
        let dphi = 2.0 * PI / n as f64;
        let volume: f64 = (0..n)
            .map(|i| {
                let (r0, r1) = (radii[i], radii[(i + 1) % n]);
                0.5 * dphi * (r0 * r0 + r0 * r1 + r1 * r1) / 3.0
            })
            .sum();
        let mut domain = Self {
            kind: DomainKind::Polar { radii },
            dim: 2,
            star_center: [0.0; 3],
            star_radius: 0.0,
            diameter: 0.0,
            volume,
        };
        let boundary: Vec<Point> = domain.boundary_samples(720).into_iter().map(|(x, _)| x).collect();
        let mut diam: f64 = 0.0;
        for (i, p) in boundary.iter().enumerate() {
            for q in &boundary[i + 1..] {
                diam = diam.max(dist(p, q, 2));
            }
        }
        domain.diameter = diam;

        let rmin = domain.profile_min();
        let mut best = 0.0;
        for k in (1..=20).rev() {
            let cand = rmin * k as f64 / 20.0 * 0.999;
            if domain.star_check_with(cand).is_ok() {
                best = cand;
                break;
            }
        }
        if best == 0.0 {
            return Err(Error::NotStarShaped("no admissible star ball around the origin".into()));
        }
        let (mut lo, mut hi) = (best, (best + rmin / 20.0).min(rmin * 0.999));
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if domain.star_check_with(mid).is_ok() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        domain.star_radius = lo;
        Ok(domain)
    }

    fn profile_min(&self) -> f64 {
        match &self.kind {
            DomainKind::Polar { radii } => radii.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => self.star_radius,
        }
    }

    /// Interpolated polar radius and its angular derivative.
    fn profile(&self, phi: f64) -> (f64, f64) {
        let DomainKind::Polar { radii } = &self.kind else {
            unreachable!("profile on non-polar domain")
        };
        let n = radii.len();
        let dphi = 2.0 * PI / n as f64;
        let t = phi.rem_euclid(2.0 * PI) / dphi;
        let i = (t.floor() as usize).min(n - 1);
        let frac = t - i as f64;
        let (r0, r1) = (radii[i], radii[(i + 1) % n]);
        (r0 + (r1 - r0) * frac, (r1 - r0) / dphi)
    }

    pub fn contains(&self, x: &Point) -> bool {
        match &self.kind {
            DomainKind::Rectangle { a, eps } => x[0].abs() <= *a && x[1].abs() <= *eps,
            DomainKind::Box { a, b, c } => x[0].abs() <= *a && x[1].abs() <= *b && x[2].abs() <= *c,
            DomainKind::Ball { r, dim } => norm(x, *dim) <= *r,
            DomainKind::Polar { .. } => {
                let rr = (x[0] * x[0] + x[1] * x[1]).sqrt();
                rr <= self.profile(x[1].atan2(x[0])).0
            }
        }
    }

    /// Axis-aligned half-widths of a bounding box centred at the origin.
    pub fn half_widths(&self) -> [f64; 3] {
        match &self.kind {
            DomainKind::Rectangle { a, eps } => [*a, *eps, 0.0],
            DomainKind::Box { a, b, c } => [*a, *b, *c],
            DomainKind::Ball { r, dim } => {
                if *dim == 2 {
                    [*r, *r, 0.0]
                } else {
                    [*r; 3]
                }
            }
            DomainKind::Polar { radii } => {
                let m = radii.iter().cloned().fold(0.0, f64::max);
                [m, m, 0.0]
            }
        }
    }

    pub fn is_tensor(&self) -> bool {
        matches!(self.kind, DomainKind::Rectangle { .. } | DomainKind::Box { .. })
    }

    /// Distance from an interior point `x` along the unit direction `d` to the
    /// first boundary crossing, with the outward unit normal there.
    pub fn exit(&self, x: &Point, d: &Point) -> (f64, Point) {
        let n = self.dim;
        match &self.kind {
            DomainKind::Rectangle { .. } | DomainKind::Box { .. } => {
                let hw = self.half_widths();
                let mut best = f64::INFINITY;
                let mut normal = [0.0; 3];
                for i in 0..n {
                    if d[i] > 0.0 {
                        let t = (hw[i] - x[i]) / d[i];
                        if t < best {
                            best = t;
                            normal = [0.0; 3];
                            normal[i] = 1.0;
                        }
                    } else if d[i] < 0.0 {
                        let t = (-hw[i] - x[i]) / d[i];
                        if t < best {
                            best = t;
                            normal = [0.0; 3];
                            normal[i] = -1.0;
                        }
                    }
                }
                (best.max(0.0), normal)
            }
            DomainKind::Ball { r, .. } => {
                let xd = dot(x, d, n);
                let xx = dot(x, x, n);
                let t = -xd + (xd * xd - xx + r * r).max(0.0).sqrt();
                let mut normal = [0.0; 3];
                for i in 0..n {
                    normal[i] = (x[i] + t * d[i]) / r;
                }
                (t.max(0.0), normal)
            }
            DomainKind::Polar { .. } => {
                let step = self.diameter / 256.0;
                let mut lo = 0.0;
                let mut hi = step;
                while self.contains(&axpy(x, hi, d)) {
                    lo = hi;
                    hi += step;
                    if hi > 4.0 * self.diameter {
                        break;
                    }
                }
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.contains(&axpy(x, mid, d)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t = 0.5 * (lo + hi);
                let p = axpy(x, t, d);
                (t, self.polar_normal(p[1].atan2(p[0])))
            }
        }
    }

    fn polar_normal(&self, phi: f64) -> Point {
        let (r, dr) = self.profile(phi);
        let (s, c) = phi.sin_cos();
        let nx = r * c + dr * s;
        let ny = r * s - dr * c;
        let l = (nx * nx + ny * ny).sqrt();
        [nx / l, ny / l, 0.0]
    }

    /// Corner points of the boundary: polygon vertices in 2D, profile knots for
    /// polar domains. Empty for smooth or 3D domains.
    pub fn corners(&self) -> Vec<Point> {
        match &self.kind {
            DomainKind::Rectangle { a, eps } => vec![
                [*a, *eps, 0.0],
                [-*a, *eps, 0.0],
                [-*a, -*eps, 0.0],
                [*a, -*eps, 0.0],
            ],
            DomainKind::Polar { radii } => {
                let n = radii.len();
                radii
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let (s, c) = (2.0 * PI * i as f64 / n as f64).sin_cos();
                        [r * c, r * s, 0.0]
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// `count` boundary points (2D: equally spaced by arc length or angle,
    /// avoiding corners; 3D: a spiral/face lattice) with outward normals.
    pub fn boundary_samples(&self, count: usize) -> Vec<(Point, Point)> {
        match &self.kind {
            DomainKind::Rectangle { a, eps } => {
                let perim = 4.0 * (a + eps);
                (0..count)
                    .map(|i| {
                        let mut s = perim * (i as f64 + 0.5) / count as f64;
                        let edges = [
                            (2.0 * eps, [*a, -*eps], [0.0, 1.0], [1.0, 0.0]),
                            (2.0 * a, [*a, *eps], [-1.0, 0.0], [0.0, 1.0]),
                            (2.0 * eps, [-*a, *eps], [0.0, -1.0], [-1.0, 0.0]),
                            (2.0 * a, [-*a, -*eps], [1.0, 0.0], [0.0, -1.0]),
                        ];
                        for (len, start, dir, normal) in edges {
                            if s <= len {
                                return (
                                    [start[0] + s * dir[0], start[1] + s * dir[1], 0.0],
                                    [normal[0], normal[1], 0.0],
                                );
                            }
                            s -= len;
                        }
                        unreachable!("arc length beyond perimeter")
                    })
                    .collect()
            }
            DomainKind::Ball { r, dim: 2 } => (0..count)
                .map(|i| {
                    let (s, c) = (2.0 * PI * (i as f64 + 0.5) / count as f64).sin_cos();
                    ([r * c, r * s, 0.0], [c, s, 0.0])
                })
                .collect(),
            DomainKind::Polar { .. } => (0..count)
                .map(|i| {
                    let phi = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                    let (r, _) = self.profile(phi);
                    let (s, c) = phi.sin_cos();
                    ([r * c, r * s, 0.0], self.polar_normal(phi))
                })
                .collect(),
            DomainKind::Ball { .. } | DomainKind::Box { .. } => {
                // Fibonacci sphere directions projected to the boundary.
                let golden = PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                        let rr = (1.0 - z * z).sqrt();
                        let (s, c) = (golden * i as f64).sin_cos();
                        let d = [rr * c, rr * s, z];
                        let (t, n) = self.exit(&[0.0; 3], &d);
                        ([t * d[0], t * d[1], t * d[2]], n)
                    })
                    .collect()
            }
        }
    }

    /// Tensor Gauss-Legendre for rectangles/boxes, polar Gauss for balls and
    /// polar domains.
    pub fn quadrature(&self, resolution: usize) -> Result<QuadratureRule> {
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!("quadrature resolution must be >= 2, got {resolution}")));
        }
        let g = gauss_legendre(resolution);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        match &self.kind {
            DomainKind::Rectangle { a, eps } => {
                for (x, wx) in g.mapped(-a, *a) {
                    for (y, wy) in g.mapped(-eps, *eps) {
                        nodes.push([x, y, 0.0]);
                        weights.push(wx * wy);
                    }
                }
            }
            DomainKind::Box { a, b, c } => {
                for (x, wx) in g.mapped(-a, *a) {
                    for (y, wy) in g.mapped(-b, *b) {
                        for (z, wz) in g.mapped(-c, *c) {
                            nodes.push([x, y, z]);
                            weights.push(wx * wy * wz);
                        }
                    }
                }
            }
            DomainKind::Ball { r, dim: 2 } => {
                let na = 4 * resolution;
                let dphi = 2.0 * PI / na as f64;
                for k in 0..na {
                    let (s, c) = ((k as f64 + 0.5) * dphi).sin_cos();
                    for (rr, wr) in g.mapped(0.0, *r) {
                        nodes.push([rr * c, rr * s, 0.0]);
                        weights.push(wr * rr * dphi);
                    }
                }
            }
            DomainKind::Ball { r, .. } => {
                let na = 4 * resolution;
                let dphi = 2.0 * PI / na as f64;
                for (ct, wt) in g.mapped(-1.0, 1.0) {
                    let st = (1.0 - ct * ct).sqrt();
                    for k in 0..na {
                        let (s, c) = ((k as f64 + 0.5) * dphi).sin_cos();
                        for (rr, wr) in g.mapped(0.0, *r) {
                            nodes.push([rr * st * c, rr * st * s, rr * ct]);
                            weights.push(wr * wt * dphi * rr * rr);
                        }
                    }
                }
            }
            DomainKind::Polar { radii } => {
                let n = radii.len();
                let dphi = 2.0 * PI / n as f64;
                let ga = gauss_legendre(resolution.max(2));
                for i in 0..n {
                    for (phi, wphi) in ga.mapped(i as f64 * dphi, (i + 1) as f64 * dphi) {
                        let (rmax, _) = self.profile(phi);
                        let (s, c) = phi.sin_cos();
                        for (rr, wr) in g.mapped(0.0, rmax) {
                            nodes.push([rr * c, rr * s, 0.0]);
                            weights.push(wr * rr * wphi);
                        }
                    }
                }
            }
        }
        Ok(QuadratureRule { nodes, weights, order: resolution })
    }

    /// Check the star-shapedness invariants for the declared ball.
    pub fn star_check(&self) -> Result<()> {
        self.star_check_with(self.star_radius)?;
        if self.diameter + 1e-12 < 2.0 * self.star_radius {
            return Err(Error::NotStarShaped("diameter smaller than star-ball diameter".into()));
        }
        Ok(())
    }

    fn star_check_with(&self, rho: f64) -> Result<()> {
        let c = self.star_center;
        let n = self.dim;
        // the ball itself, on a sphere sample
        let sphere = sphere_sample(256, n);
        for d in &sphere {
            let p = axpy(&c, rho * (1.0 - 1e-12), d);
            if !self.contains(&p) {
                return Err(Error::NotStarShaped(format!("star ball point {p:?} outside domain")));
            }
        }
        // segments from 64 ball points to 64 boundary points
        let ball_pts: Vec<Point> = sphere_sample(64, n)
            .iter()
            .enumerate()
            .map(|(i, d)| axpy(&c, rho * (0.25 + 0.75 * ((i % 4) as f64 + 1.0) / 4.0) * (1.0 - 1e-9), d))
            .collect();
        let boundary: Vec<Point> = self
            .boundary_samples(64)
            .into_iter()
            .map(|(x, nrm)| axpy(&x, -1e-9 * self.half_widths()[0], &nrm))
            .collect();
        for y in &ball_pts {
            for x in &boundary {
                for k in 1..32 {
                    let t = k as f64 / 32.0;
                    let mut p = [0.0; 3];
                    for i in 0..n {
                        p[i] = y[i] + t * (x[i] - y[i]);
                    }
                    if !self.contains(&p) {
                        return Err(Error::NotStarShaped(format!(
                            "segment from {y:?} to {x:?} leaves the domain"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Short human-readable descriptor used in reports.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            DomainKind::Rectangle { a, eps } => format!("rectangle(a={a},eps={eps})"),
            DomainKind::Box { a, b, c } => format!("box(a={a},b={b},c={c})"),
            DomainKind::Ball { r, dim } => format!("ball(r={r},dim={dim})"),
            DomainKind::Polar { radii } => format!("polar({} samples)", radii.len()),
        }
    }
}

fn sphere_sample(count: usize, dim: usize) -> Vec<Point> {
    if dim == 2 {
        (0..count)
            .map(|i| {
                let (s, c) = (2.0 * PI * i as f64 / count as f64).sin_cos();
                [c, s, 0.0]
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                let rr = (1.0 - z * z).sqrt();
                let (s, c) = (golden * i as f64).sin_cos();
                [rr * c, rr * s, z]
            })
            .collect()
    }
}

#[inline]
pub(crate) fn dot(a: &Point, b: &Point, n: usize) -> f64 {
    (0..n).map(|i| a[i] * b[i]).sum()
}

#[inline]
pub(crate) fn norm(a: &Point, n: usize) -> f64 {
    dot(a, a, n).sqrt()
}

#[inline]
pub(crate) fn dist(a: &Point, b: &Point, n: usize) -> f64 {
    (0..n).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn axpy(x: &Point, t: f64, d: &Point) -> Point {
    [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_geometry() {
        let d = StarDomain::rectangle(1.0, 0.25).unwrap();
        assert!((d.volume - 1.0).abs() < 1e-15);
        assert_eq!(d.star_radius, 0.25);
        assert!((d.diameter - 2.0 * 1.0625f64.sqrt()).abs() < 1e-15);
        let d2 = StarDomain::rectangle(2.0, 0.1).unwrap();
        assert!((d2.volume - 0.8).abs() < 1e-15);
        assert!(StarDomain::rectangle(0.1, 1.0).is_err());
        assert!(StarDomain::rectangle(-1.0, 0.1).is_err());
    }

    #[test]
    fn ball_geometry() {
        let d = StarDomain::ball(1.0, 2).unwrap();
        assert!((d.volume - PI).abs() < 1e-15);
        assert_eq!((d.star_radius, d.diameter), (1.0, 2.0));
    }

    #[test]
    fn membership() {
        let d = StarDomain::rectangle(1.0, 0.25).unwrap();
        assert!(d.contains(&[0.0, 0.0, 0.0]));
        assert!(!d.contains(&[0.0, 0.3, 0.0]));
        let b = StarDomain::ball(1.0, 2).unwrap();
        assert!(b.contains(&[1.0, 0.0, 0.0]));
        assert!(!b.contains(&[1.0 + 1e-12, 0.0, 0.0]));
    }

    #[test]
    fn quadrature_weights() {
        let d = StarDomain::rectangle(1.0, 1.0).unwrap();
        let q = d.quadrature(8).unwrap();
        assert!((q.total_weight() - 4.0).abs() < 1e-14);
        let b = StarDomain::ball(1.0, 2).unwrap();
        let q = b.quadrature(32).unwrap();
        assert!((q.total_weight() - PI).abs() < 1e-8);
        let b3 = StarDomain::ball(0.7, 3).unwrap();
        let q = b3.quadrature(12).unwrap();
        assert!((q.total_weight() / b3.volume - 1.0).abs() < 1e-8);
        assert!(d.quadrature(1).is_err());
    }

    #[test]
    fn second_moment_of_thin_rectangle() {
        let d = StarDomain::rectangle(1.0, 0.25).unwrap();
        let q = d.quadrature(6).unwrap();
        assert!((q.integrate(|x| x[0] * x[0]) - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn star_checks_pass_for_builtin_kinds() {
        StarDomain::rectangle(1.0, 0.25).unwrap().star_check().unwrap();
        StarDomain::ball(1.0, 2).unwrap().star_check().unwrap();
        StarDomain::cuboid(1.0, 0.5, 0.5).unwrap().star_check().unwrap();
    }

    #[test]
    fn polar_circle_recovers_ball() {
        let d = StarDomain::polar(vec![1.0; 64]).unwrap();
        // polygon-like interpolation of the circle: volume slightly below pi
        assert!((d.volume - PI).abs() < 1e-2);
        assert!(d.star_radius > 0.95 && d.star_radius < 1.0);
        let q = d.quadrature(8).unwrap();
        assert!((q.total_weight() / d.volume - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polar_non_star_rejected() {
        // a thin spike makes small star balls only; a deep notch at every other sample
        // makes the origin-ball check fail outright
        let radii: Vec<f64> = (0..40).map(|i| if i % 2 == 0 { 1.0 } else { 0.02 }).collect();
        let r = StarDomain::polar(radii);
        if let Ok(d) = r {
            assert!(d.star_radius < 0.03);
        }
    }

    #[test]
    fn exit_distances() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let (t, n) = d.exit(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]);
        assert!((t - 1.0).abs() < 1e-15);
        assert_eq!(n, [1.0, 0.0, 0.0]);
        let b = StarDomain::ball(2.0, 2).unwrap();
        let (t, n) = b.exit(&[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]);
        assert!((t - 3.0).abs() < 1e-14);
        assert!((n[0] + 1.0).abs() < 1e-14);
        let p = StarDomain::polar(vec![1.0; 400]).unwrap();
        let (t, _) = p.exit(&[0.0; 3], &[0.0, 1.0, 0.0]);
        assert!((t - 1.0).abs() < 1e-4);
    }
}
