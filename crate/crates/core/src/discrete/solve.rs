//! Dirichlet Poisson and clamped biharmonic solves, negative norms, Poincare constant.

use rayon::prelude::*;
use serde::Serialize;

use super::{dot, Grid, GridField};
use crate::domain::StarDomain;
use crate::error::{Error, Result};

/// Convergence record of an iterative solve.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Certificate {
    pub solver: &'static str,
    pub iterations: usize,
    pub residual: f64,
}

impl Certificate {
    /// Worst of two certificates.
    pub fn merge(self, other: Certificate) -> Certificate {
        Certificate {
            solver: self.solver,
            iterations: self.iterations.max(other.iterations),
            residual: self.residual.max(other.residual),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solve {
    pub field: GridField,
    pub certificates: Vec<Certificate>,
}

const POISSON_TOL: f64 = 1e-10;
const BIHARMONIC_TOL: f64 = 1e-9;

/// Preconditioned conjugate gradients on vectors whose boundary entries stay zero.
pub(crate) fn pcg<A>(
    solver: &'static str,
    apply: A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Certificate)>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, Certificate { solver, iterations: 0, residual: 0.0 }));
    }
    let precond = |r: &[f64], z: &mut [f64]| match inv_diag {
        Some(d) => z.par_iter_mut().zip(r.par_iter().zip(d.par_iter())).for_each(|(z, (r, d))| *z = r * d),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(p.par_iter()).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(r, q)| *r -= alpha * q);
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok((x, Certificate { solver, iterations: it, residual: res }));
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(p, z)| *p = z + beta * *p);
    }
    let res = dot(&r, &r).sqrt() / bnorm;
    Err(Error::NotConverged { solver, iterations: max_iter, residual: res })
}

/// Run `f(idx, coords)` for every node, writing one output per node, in parallel rows.
fn for_nodes<F>(g: &Grid, out: &mut [f64], f: F)
where
    F: Fn(usize, [usize; 3]) -> f64 + Sync,
{
    let s0 = g.strides()[0];
    out.par_chunks_mut(s0).enumerate().for_each(|(i0, row)| {
        for (k, o) in row.iter_mut().enumerate() {
            let idx = i0 * s0 + k;
            *o = f(idx, g.coords(idx));
        }
    });
}

/// `-Delta_h` on interior nodes (5 or 7 points), zero on the boundary.
pub(crate) fn neg_laplacian(g: &Grid, w: &[f64], y: &mut [f64]) {
    let s = g.strides();
    let inv: Vec<f64> = (0..g.dim).map(|a| 1.0 / (g.spacing[a] * g.spacing[a])).collect();
    for_nodes(g, y, |idx, c| {
        if !g.is_interior(&c) {
            return 0.0;
        }
        let mut v = 0.0;
        for a in 0..g.dim {
            v += (2.0 * w[idx] - w[idx + s[a]] - w[idx - s[a]]) * inv[a];
        }
        v
    });
}

/// `Delta_h w` at every node, with the clamped ghost `w_{-1} = w_1` across the boundary.
fn ghost_laplacian(g: &Grid, w: &[f64], y: &mut [f64]) {
    let s = g.strides();
    for_nodes(g, y, |idx, c| {
        let mut v = 0.0;
        for a in 0..g.dim {
            let (lo, hi) = if c[a] == 0 {
                (w[idx + s[a]], w[idx + s[a]])
            } else if c[a] == g.cells[a] {
                (w[idx - s[a]], w[idx - s[a]])
            } else {
                (w[idx - s[a]], w[idx + s[a]])
            };
            v += (lo - 2.0 * w[idx] + hi) / (g.spacing[a] * g.spacing[a]);
        }
        v
    });
}

/// 13-point (2D) clamped `Delta_h^2` on interior nodes.
pub(crate) fn bilaplacian(g: &Grid, w: &[f64], y: &mut [f64]) {
    let mut lap = vec![0.0; w.len()];
    ghost_laplacian(g, w, &mut lap);
    let s = g.strides();
    for_nodes(g, y, |idx, c| {
        if !g.is_interior(&c) {
            return 0.0;
        }
        let mut v = 0.0;
        for a in 0..g.dim {
            v += (lap[idx - s[a]] - 2.0 * lap[idx] + lap[idx + s[a]]) / (g.spacing[a] * g.spacing[a]);
        }
        v
    });
}

fn bilaplacian_inv_diag(g: &Grid) -> Vec<f64> {
    let mut d = vec![0.0; g.node_count()];
    for_nodes(g, &mut d, |_, c| {
        if !g.is_interior(&c) {
            return 0.0;
        }
        let mut v = 0.0;
        for a in 0..g.dim {
            let h4 = g.spacing[a].powi(4);
            let ghost = (c[a] == 1) as u8 + (c[a] + 1 == g.cells[a]) as u8;
            v += (6.0 + ghost as f64) / h4;
            for b in a + 1..g.dim {
                v += 8.0 / (g.spacing[a] * g.spacing[a] * g.spacing[b] * g.spacing[b]);
            }
        }
        1.0 / v
    });
    d
}

fn interior_rhs(g: &Grid, data: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; g.node_count()];
    for_nodes(g, &mut b, |idx, c| if g.is_interior(&c) { data[idx] } else { 0.0 });
    b
}

fn max_iter(g: &Grid, factor: usize) -> usize {
    let n: usize = g.cells[..g.dim].iter().max().copied().unwrap_or(2);
    factor * n.pow(2).max(100)
}

fn poisson_component(g: &Grid, data: &[f64]) -> Result<(Vec<f64>, Certificate)> {
    let b = interior_rhs(g, data);
    pcg("poisson cg", |x, y| neg_laplacian(g, x, y), None, &b, POISSON_TOL, max_iter(g, 20))
}

fn biharmonic_component(g: &Grid, data: &[f64], inv_diag: &[f64]) -> Result<(Vec<f64>, Certificate)> {
    let b = interior_rhs(g, data);
    pcg("biharmonic pcg", |x, y| bilaplacian(g, x, y), Some(inv_diag), &b, BIHARMONIC_TOL, max_iter(g, 400))
}

/// `-Delta w = g`, `w = 0` on the boundary, componentwise.
pub fn poisson_solve(g: &GridField) -> Result<Solve> {
    let mut field = g.like(g.components)?;
    let mut certificates = Vec::new();
    for c in 0..g.components {
        let (w, cert) = poisson_component(&g.grid, &g.component(c))?;
        field.set_component(c, &w);
        certificates.push(cert);
    }
    Ok(Solve { field, certificates })
}

/// `Delta^2 w = g`, `w = dw/dn = 0` on the boundary, componentwise.
pub fn biharmonic_solve(g: &GridField) -> Result<Solve> {
    let inv_diag = bilaplacian_inv_diag(&g.grid);
    let mut field = g.like(g.components)?;
    let mut certificates = Vec::new();
    for c in 0..g.components {
        let (w, cert) = biharmonic_component(&g.grid, &g.component(c), &inv_diag)?;
        field.set_component(c, &w);
        certificates.push(cert);
    }
    Ok(Solve { field, certificates })
}

/// Forward-difference Dirichlet energy `|w|_1^2` of one component.
fn h1_energy(g: &Grid, w: &[f64]) -> f64 {
    let s = g.strides();
    let vol = g.cell_volume();
    let mut e = vec![0.0; w.len()];
    for_nodes(g, &mut e, |idx, c| {
        let mut v = 0.0;
        for a in 0..g.dim {
            if c[a] < g.cells[a] {
                let d = (w[idx + s[a]] - w[idx]) / g.spacing[a];
                v += d * d;
            }
        }
        v
    });
    vol * e.iter().sum::<f64>()
}

/// Full Hessian energy `|w|_2^2` with the clamped ghost layer; mixed terms counted twice.
fn h2_energy(g: &Grid, w: &[f64]) -> f64 {
    let s = g.strides();
    let vol = g.cell_volume();
    let mut e = vec![0.0; w.len()];
    for_nodes(g, &mut e, |idx, c| {
        let mut v = 0.0;
        for a in 0..g.dim {
            let (lo, hi) = if c[a] == 0 {
                (w[idx + s[a]], w[idx + s[a]])
            } else if c[a] == g.cells[a] {
                (w[idx - s[a]], w[idx - s[a]])
            } else {
                (w[idx - s[a]], w[idx + s[a]])
            };
            let d2 = (lo - 2.0 * w[idx] + hi) / (g.spacing[a] * g.spacing[a]);
            v += g.weight(idx) / vol * d2 * d2;
            for b in a + 1..g.dim {
                if c[a] < g.cells[a] && c[b] < g.cells[b] {
                    let m = (w[idx + s[a] + s[b]] - w[idx + s[a]] - w[idx + s[b]] + w[idx])
                        / (g.spacing[a] * g.spacing[b]);
                    v += 2.0 * m * m;
                }
            }
        }
        v
    });
    vol * e.iter().sum::<f64>()
}

/// `||g||_{-1} = |w|_1` with `w` the Dirichlet Poisson solution, componentwise.
pub fn neg_norm_h1(g: &GridField) -> Result<f64> {
    Ok(neg_norm_h1_certified(g)?.0)
}

pub fn neg_norm_h1_certified(g: &GridField) -> Result<(f64, Certificate)> {
    let solved = poisson_solve(g)?;
    let mut total = 0.0;
    for c in 0..g.components {
        total += h1_energy(&g.grid, &solved.field.component(c));
    }
    Ok((total.sqrt(), worst(&solved.certificates, "poisson cg")))
}

/// `||g||_{-2} = |w|_2` with `w` the clamped biharmonic solution, componentwise.
pub fn neg_norm_h2(g: &GridField) -> Result<f64> {
    Ok(neg_norm_h2_certified(g)?.0)
}

pub fn neg_norm_h2_certified(g: &GridField) -> Result<(f64, Certificate)> {
    let solved = biharmonic_solve(g)?;
    let mut total = 0.0;
    for c in 0..g.components {
        total += h2_energy(&g.grid, &solved.field.component(c));
    }
    Ok((total.sqrt(), worst(&solved.certificates, "biharmonic pcg")))
}

fn worst(certs: &[Certificate], solver: &'static str) -> Certificate {
    certs
        .iter()
        .copied()
        .fold(Certificate { solver, iterations: 0, residual: 0.0 }, Certificate::merge)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Poincare {
    pub constant: f64,
    pub lambda1: f64,
    pub diameter: f64,
    pub iterations: usize,
}

/// `C_P = 1/(R sqrt(lambda_1))` with `lambda_1` from inverse iteration on `-Delta_h`.
pub fn poincare_constant(d: &StarDomain, h: f64) -> Result<Poincare> {
    let g = Grid::for_domain(d, h)?;
    let n = g.node_count();
    let mut x = vec![0.0; n];
    for (idx, v) in x.iter_mut().enumerate() {
        let c = g.coords(idx);
        if g.is_interior(&c) {
            *v = 1.0;
        }
    }
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    let cap = 20_000;
    for it in 1..=cap {
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let (y, _) = pcg("poincare inverse iteration", |p, q| neg_laplacian(&g, p, q), None, &x, 1e-12, max_iter(&g, 20))?;
        x = y;
        neg_laplacian(&g, &x, &mut ax);
        let next = dot(&x, &ax) / dot(&x, &x);
        if (next - lambda).abs() <= 1e-13 * next {
            return Ok(Poincare { constant: 1.0 / (d.diameter * next.sqrt()), lambda1: next, diameter: d.diameter, iterations: it });
        }
        lambda = next;
    }
    Err(Error::NotConverged { solver: "poincare inverse iteration", iterations: cap, residual: f64::NAN })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> StarDomain {
        StarDomain::unit_square()
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = GridField::zeros(&square(), 1.0 / 16.0, 1).unwrap();
        assert_eq!(poisson_solve(&g).unwrap().field.max_abs(), 0.0);
        assert_eq!(neg_norm_h1(&g).unwrap(), 0.0);
        assert_eq!(neg_norm_h2(&g).unwrap(), 0.0);
    }

    #[test]
    fn poisson_sine_eigenfunction() {
        let s = |x: &[f64; 3]| (PI * (x[0] + 0.5)).sin() * (PI * (x[1] + 0.5)).sin();
        let g = GridField::scalar(&square(), 1.0 / 64.0, |x| 2.0 * PI * PI * s(x)).unwrap();
        let w = poisson_solve(&g).unwrap();
        let err = (0..g.grid.node_count())
            .map(|i| (w.field.values[i] - s(&g.grid.point(i))).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-3, "{err}");
        assert!(w.certificates[0].residual <= 1e-10);
    }

    #[test]
    fn poisson_is_linear() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let a = GridField::scalar(&d, 1.0 / 16.0, |x| x[0] * x[1] + 1.0).unwrap();
        let b = GridField::scalar(&d, 1.0 / 16.0, |x| (3.0 * x[0]).cos()).unwrap();
        let mut ab = a.clone();
        for (v, w) in ab.values.iter_mut().zip(&b.values) {
            *v = 2.0 * *v - 3.0 * w;
        }
        let (wa, wb, wab) = (poisson_solve(&a).unwrap(), poisson_solve(&b).unwrap(), poisson_solve(&ab).unwrap());
        let scale = wab.field.max_abs();
        for i in 0..wa.field.values.len() {
            let lin = 2.0 * wa.field.values[i] - 3.0 * wb.field.values[i];
            assert!((lin - wab.field.values[i]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn energy_matches_pairing() {
        // |w|_1^2 = (g, w) and |w|_2^2 = (g, w) on interior nodes
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let g = GridField::scalar(&d, 1.0 / 16.0, |x| 1.0 + x[0] - x[1] * x[1]).unwrap();
        let vol = g.grid.cell_volume();
        let w1 = poisson_solve(&g).unwrap().field;
        let pair1 = vol * dot(&interior_rhs(&g.grid, &g.values), &w1.values);
        assert!((neg_norm_h1(&g).unwrap().powi(2) - pair1).abs() < 1e-8 * pair1);
        let w2 = biharmonic_solve(&g).unwrap().field;
        let pair2 = vol * dot(&interior_rhs(&g.grid, &g.values), &w2.values);
        assert!((neg_norm_h2(&g).unwrap().powi(2) - pair2).abs() < 1e-7 * pair2);
    }

    #[test]
    fn biharmonic_operator_is_symmetric() {
        let d = StarDomain::cuboid(1.0, 0.75, 0.5).unwrap();
        let g = Grid::for_domain(&d, 0.25).unwrap();
        let n = g.node_count();
        let mk = |seed: f64| -> Vec<f64> {
            (0..n)
                .map(|i| if g.is_interior(&g.coords(i)) { (seed * i as f64).sin() } else { 0.0 })
                .collect()
        };
        let (u, v) = (mk(1.3), mk(0.7));
        let (mut au, mut av) = (vec![0.0; n], vec![0.0; n]);
        bilaplacian(&g, &u, &mut au);
        bilaplacian(&g, &v, &mut av);
        let (a, b) = (dot(&v, &au), dot(&u, &av));
        assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        let inv = bilaplacian_inv_diag(&g);
        for i in 0..n {
            if g.is_interior(&g.coords(i)) {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let mut ae = vec![0.0; n];
                bilaplacian(&g, &e, &mut ae);
                assert!((ae[i] * inv[i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poincare_on_unit_square() {
        let p = poincare_constant(&square(), 1.0 / 64.0).unwrap();
        assert!((p.constant - 1.0 / (2.0 * PI)).abs() <= 1e-3, "{}", p.constant);
    }
}
