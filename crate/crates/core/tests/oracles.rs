mod common;

use std::f64::consts::PI;

use bogolab::bogovskii::{kernel_eval, Bogovskii, KernelSpec};
use bogolab::discrete::{neg_norm_h1, poincare_constant, GridField};
use bogolab::fourier::{fourier_transform, lhs_line_integral, PhiOption};
use bogolab::{MultiIndex, Mollifier, Separable, StarDomain};

use common::*;

#[test]
fn kernel_matches_dense_trapezoid() {
    let m = Mollifier::new([0.0; 3], 0.2, 2).unwrap();
    let x = [0.05, 0.0, 0.0];
    let y = [-0.4, 0.0, 0.0];
    let g = kernel_eval(&KernelSpec::plain(m), &x, &y).unwrap();
    let o = kernel_trapezoid(&m, &x, &y, 1_000_000);
    assert!((g[0] - o[0]).abs() <= 1e-7, "{} vs {}", g[0], o[0]);
    assert!((g[1] - o[1]).abs() <= 1e-7);
}

#[test]
fn kernel_off_axis_matches_trapezoid() {
    let m = Mollifier::new([0.1, -0.05, 0.0], 0.3, 2).unwrap();
    let x = [0.35, 0.2, 0.0];
    let y = [-0.3, -0.25, 0.0];
    let g = kernel_eval(&KernelSpec::plain(m), &x, &y).unwrap();
    let o = kernel_trapezoid(&m, &x, &y, 1_000_000);
    for i in 0..2 {
        assert!((g[i] - o[i]).abs() <= 1e-7, "{i}: {} vs {}", g[i], o[i]);
    }
}

#[test]
fn apply_matches_dense_cartesian() {
    let d = StarDomain::rectangle(1.0, 0.5).unwrap();
    let bog = Bogovskii::on_star_ball(&d).unwrap();
    let f = Separable::coordinate(2, 0).into_field("x1", true);
    let x = [0.3, 0.1, 0.0];
    let u = bog.apply(&f, &x).unwrap();
    let o = apply_cartesian(&bog.mollifier, &d, |y| y[0], &x, 800, 400);
    for i in 0..2 {
        assert!((u[i] - o[i]).abs() <= 1e-4, "{i}: {} vs {}", u[i], o[i]);
    }
}

#[test]
fn transform_matches_fft_grid() {
    let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
    let direct = fourier_transform(&m, &MultiIndex::zero(2), &[1.0, 0.0]).unwrap().direct;
    // L = 4 puts xi = 1 on bin 8
    let fft = fft_transform(&m, 4.0, 1024, 8);
    assert!((direct - fft).norm() <= 1e-6, "{direct} vs {fft}");
}

#[test]
fn line_integral_matches_trapezoid() {
    let m = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
    let v = lhs_line_integral(&m, PhiOption::Plain, &MultiIndex::zero(2), 0, &[1.0, 0.0]);
    let samples = projected_samples(&m, 4000);
    let o = line_integral_trapezoid(|t| projected_transform_abs(&samples, t), 2.0 * PI, 40.0, 100_000);
    assert!((v.value - o).abs() <= 1e-6, "{} vs {o}", v.value);
}

#[test]
fn poisson_second_order() {
    let e32 = poisson_manufactured_error(32);
    let e64 = poisson_manufactured_error(64);
    assert!(e64 <= 1e-3, "{e64}");
    let rate = (e32 / e64).log2();
    assert!((rate - 2.0).abs() < 0.2, "rate {rate}");
}

#[test]
fn biharmonic_second_order() {
    let e16 = biharmonic_manufactured_error(16);
    let e32 = biharmonic_manufactured_error(32);
    let e64 = biharmonic_manufactured_error(64);
    assert!(e64 <= 5e-3, "{e64}");
    let rate = (e32 / e64).log2();
    assert!(rate > 1.8, "rates {} {rate}", (e16 / e32).log2());
}

#[test]
fn constant_load_matches_sine_series() {
    let d = StarDomain::unit_square();
    let g = GridField::scalar(&d, 1.0 / 64.0, |_| 1.0).unwrap();
    let exact = sine_series_mean().sqrt();
    let v = neg_norm_h1(&g).unwrap();
    assert!((v - exact).abs() / exact < 2e-3, "{v} vs {exact}");
}

#[test]
fn poincare_on_rectangle_matches_separable() {
    let d = StarDomain::rectangle(1.0, 0.25).unwrap();
    let p = poincare_constant(&d, 1.0 / 64.0).unwrap();
    let lambda = PI * PI * (1.0 / 4.0 + 1.0 / 0.25);
    let exact = 1.0 / (d.diameter * lambda.sqrt());
    assert!((p.constant - exact).abs() < 1e-3, "{} vs {exact}", p.constant);
}
