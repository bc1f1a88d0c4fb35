//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use bogolab::bogovskii::{kernel_eval, KernelSpec};
use bogolab::discrete::{biharmonic_solve, poisson_solve, GridField};
use bogolab::quad::gauss_legendre;
use bogolab::{Mollifier, StarDomain};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub type Point = [f64; 3];

/// `G(x, y)` by the composite trapezoid rule on the t-form
/// `(x - y) int_0^1 omega(y + (x - y)/t) t^{-n-1} dt`.
pub fn kernel_trapezoid(m: &Mollifier, x: &Point, y: &Point, panels: usize) -> Point {
    let n = m.dim;
    let d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let h = 1.0 / panels as f64;
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let p = [y[0] + d[0] / t, y[1] + d[1] / t, y[2] + d[2] / t];
        m.eval(&p) * t.powi(-(n as i32) - 1)
    };
    let mut s = 0.5 * (g(0.0) + g(1.0));
    for i in 1..panels {
        s += g(i as f64 * h);
    }
    let v = s * h;
    [d[0] * v, d[1] * v, d[2] * v]
}

/// `u(x) = int G(x, y) f(y) dy` over a centred rectangle by the midpoint rule
/// on `nx x ny` cells; cells near `x` are split recursively.
pub fn apply_cartesian<F: Fn(&Point) -> f64>(
    m: &Mollifier,
    d: &StarDomain,
    f: F,
    x: &Point,
    nx: usize,
    ny: usize,
) -> [f64; 2] {
    let half = d.half_widths();
    let hx = 2.0 * half[0] / nx as f64;
    let hy = 2.0 * half[1] / ny as f64;
    let k = KernelSpec::plain(*m);
    let mut total = [0.0; 2];
    fn cell<F: Fn(&Point) -> f64>(
        k: &KernelSpec,
        f: &F,
        x: &Point,
        c: [f64; 2],
        size: [f64; 2],
        depth: usize,
        acc: &mut [f64; 2],
    ) {
        let dist = ((c[0] - x[0]).powi(2) + (c[1] - x[1]).powi(2)).sqrt();
        let diag = (size[0] * size[0] + size[1] * size[1]).sqrt();
        if dist < 1.5 * diag && depth < 14 {
            let q = [size[0] / 2.0, size[1] / 2.0];
            for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
                cell(k, f, x, [c[0] + sx * q[0] / 2.0, c[1] + sy * q[1] / 2.0], q, depth + 1, acc);
            }
            return;
        }
        let y = [c[0], c[1], 0.0];
        if let Ok(g) = kernel_eval(k, x, &y) {
            let w = size[0] * size[1] * f(&y);
            acc[0] += g[0] * w;
            acc[1] += g[1] * w;
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            let c = [-half[0] + (i as f64 + 0.5) * hx, -half[1] + (j as f64 + 0.5) * hy];
            cell(&k, &f, x, c, [hx, hy], 0, &mut total);
        }
    }
    total
}

/// `omega^(xi)` at `xi = (k / (2 L), 0)` from a zero-padded `size^2` FFT of
/// samples on `[-L, L)^2`.
pub fn fft_transform(m: &Mollifier, half_width: f64, size: usize, k: usize) -> Complex64 {
    let h = 2.0 * half_width / size as f64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    // sum over rows first: only the zero frequency along the second axis is needed
    let mut line = vec![Complex64::new(0.0, 0.0); size];
    for (i, v) in line.iter_mut().enumerate() {
        let x = -half_width + i as f64 * h;
        let mut s = 0.0;
        for j in 0..size {
            let y = -half_width + j as f64 * h;
            s += m.eval(&[x, y, 0.0]);
        }
        *v = Complex64::new(s * h * h, 0.0);
    }
    fft.process(&mut line);
    // grid starts at -L: shift theorem
    let xi = k as f64 / (2.0 * half_width);
    line[k] * Complex64::from_polar(1.0, 2.0 * PI * half_width * xi)
}

/// `2 pi |xi_j| int_0^T |omega^(t xi)| dt` by the trapezoid rule, with the
/// transform taken from the radial quadrature of the bump itself.
pub fn line_integral_trapezoid<T: Fn(f64) -> f64>(transform_abs: T, pref: f64, t_max: f64, panels: usize) -> f64 {
    let h = t_max / panels as f64;
    let mut s = 0.5 * (transform_abs(0.0) + transform_abs(t_max));
    for i in 1..panels {
        s += transform_abs(i as f64 * h);
    }
    pref * s * h
}

/// Maximum nodal error of the Poisson solve for `w = cos(pi x) cos(pi y)` on the unit square.
pub fn poisson_manufactured_error(cells: usize) -> f64 {
    let d = StarDomain::unit_square();
    let h = 1.0 / cells as f64;
    let exact = |x: &Point| (PI * x[0]).cos() * (PI * x[1]).cos();
    let g = GridField::scalar(&d, h, |x| 2.0 * PI * PI * exact(x)).unwrap();
    let w = poisson_solve(&g).unwrap().field;
    (0..w.grid.node_count()).map(|i| (w.values[i] - exact(&w.grid.point(i))).abs()).fold(0.0, f64::max)
}

fn plate_factor(s: f64) -> [f64; 3] {
    // p = (x (1 - x))^2 with x = s + 1/2; returns p, p'', p''''
    let x = s + 0.5;
    [x * x * (1.0 - x).powi(2), 2.0 - 12.0 * x + 12.0 * x * x, 24.0]
}

/// Maximum nodal error of the clamped biharmonic solve for `w = (x(1-x) y(1-y))^2`.
pub fn biharmonic_manufactured_error(cells: usize) -> f64 {
    let d = StarDomain::unit_square();
    let h = 1.0 / cells as f64;
    let g = GridField::scalar(&d, h, |x| {
        let (p, q) = (plate_factor(x[0]), plate_factor(x[1]));
        p[2] * q[0] + 2.0 * p[1] * q[1] + p[0] * q[2]
    })
    .unwrap();
    let w = biharmonic_solve(&g).unwrap().field;
    (0..w.grid.node_count())
        .map(|i| {
            let x = w.grid.point(i);
            (w.values[i] - plate_factor(x[0])[0] * plate_factor(x[1])[0]).abs()
        })
        .fold(0.0, f64::max)
}

/// `int w` for `-Delta w = 1` on the unit square by the double sine series.
pub fn sine_series_mean() -> f64 {
    let mut s = 0.0;
    for j in (1..4000).step_by(2) {
        for k in (1..4000).step_by(2) {
            let (jf, kf) = (j as f64, k as f64);
            s += 1.0 / (jf * jf * kf * kf * (jf * jf + kf * kf));
        }
    }
    64.0 / PI.powi(6) * s
}

/// Nodes and weights `(x, w P(x))` of the projection `P(x) = int omega(x, y) dy`
/// of a planar mollifier centred at the origin, trapezoid in `x`.
pub fn projected_samples(m: &Mollifier, nx: usize) -> Vec<(f64, f64)> {
    let r = m.rho;
    let h = 2.0 * r / nx as f64;
    // 16-point Gauss on 8 panels across each chord
    let g = gauss_legendre(16);
    (1..nx)
        .map(|i| {
            let x = -r + i as f64 * h;
            let c = (r * r - x * x).max(0.0).sqrt();
            let mut p = 0.0;
            for panel in 0..8 {
                let a = -c + 2.0 * c * panel as f64 / 8.0;
                let b = a + 2.0 * c / 8.0;
                p += g.integrate(a, b, |y| m.eval(&[x, y, 0.0]));
            }
            (x, h * p)
        })
        .collect()
}

/// `|omega^((t, 0))|` from projected samples.
pub fn projected_transform_abs(samples: &[(f64, f64)], t: f64) -> f64 {
    samples.iter().map(|(x, w)| w * (2.0 * PI * t * x).cos()).sum::<f64>().abs()
}
