//! Inf-sup constant of the divergence on a staggered (MAC) grid.
//!
//! Velocities live on cell faces with the normal component, pressures at cell
//! centres. `beta0^2` is the smallest eigenvalue of `B A^{-1} B^T` on zero-mean
//! pressures, found by Lanczos with full reorthogonalisation after deflating the
//! constant mode. `A` is the vector Laplacian, plus the identity for the full norm.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::dot;
use super::solve::{pcg, Certificate};
use crate::domain::{DomainKind, StarDomain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InfSupVariant {
    /// `||u||_1^2 = ||u||_0^2 + |u|_1^2`
    FullNorm,
    /// `|u|_1` only
    Seminorm,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfSupEstimate {
    pub variant: InfSupVariant,
    pub beta: f64,
    pub lanczos_steps: usize,
    pub ritz_residual: f64,
    pub checkerboard: f64,
    pub inner: Certificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct InfSup {
    pub cells: Vec<usize>,
    pub full: InfSupEstimate,
    pub semi: InfSupEstimate,
}

impl InfSup {
    /// Value for the full `H^1` norm.
    pub fn beta0(&self) -> f64 {
        self.full.beta
    }
}

struct Mac {
    dim: usize,
    n: [usize; 3],
    h: [f64; 3],
}

impl Mac {
    fn pressures(&self) -> usize {
        self.n.iter().product()
    }

    fn vshape(&self, a: usize) -> [usize; 3] {
        let mut m = self.n;
        m[a] += 1;
        m
    }

    fn vlen(&self, a: usize) -> usize {
        self.vshape(a).iter().product()
    }

    fn idx(shape: &[usize; 3], c: &[usize; 3]) -> usize {
        (c[0] * shape[1] + c[1]) * shape[2] + c[2]
    }

    fn coords(shape: &[usize; 3], i: usize) -> [usize; 3] {
        [i / (shape[1] * shape[2]), (i / shape[2]) % shape[1], i % shape[2]]
    }

    fn apply_a(&self, a: usize, sigma: f64, u: &[f64], y: &mut [f64]) {
        use rayon::prelude::*;
        let shape = self.vshape(a);
        y.par_iter_mut().enumerate().for_each(|(i, out)| {
            let f = Self::coords(&shape, i);
            if f[a] == 0 || f[a] == self.n[a] {
                *out = 0.0;
                return;
            }
            let mut v = sigma * u[i];
            for b in 0..self.dim {
                let mut lo_c = f;
                let mut hi_c = f;
                lo_c[b] = lo_c[b].wrapping_sub(1);
                hi_c[b] += 1;
                let (lo, hi) = if b == a {
                    (u[Self::idx(&shape, &lo_c)], u[Self::idx(&shape, &hi_c)])
                } else {
                    // wall half a cell away: ghost value -u
                    let lo = if f[b] == 0 { -u[i] } else { u[Self::idx(&shape, &lo_c)] };
                    let hi = if f[b] + 1 == self.n[b] { -u[i] } else { u[Self::idx(&shape, &hi_c)] };
                    (lo, hi)
                };
                v += (2.0 * u[i] - lo - hi) / (self.h[b] * self.h[b]);
            }
            *out = v;
        });
    }

    fn div(&self, u: &[Vec<f64>]) -> Vec<f64> {
        let ps = self.n;
        (0..self.pressures())
            .map(|i| {
                let c = Self::coords(&ps, i);
                (0..self.dim)
                    .map(|a| {
                        let shape = self.vshape(a);
                        let mut hi = c;
                        hi[a] += 1;
                        (u[a][Self::idx(&shape, &hi)] - u[a][Self::idx(&shape, &c)]) / self.h[a]
                    })
                    .sum()
            })
            .collect()
    }

    /// Adjoint of `div`: `(p(f - e_a) - p(f)) / h_a` on interior faces.
    fn div_adjoint(&self, p: &[f64], a: usize) -> Vec<f64> {
        let shape = self.vshape(a);
        (0..self.vlen(a))
            .map(|i| {
                let f = Self::coords(&shape, i);
                if f[a] == 0 || f[a] == self.n[a] {
                    return 0.0;
                }
                let mut lo = f;
                lo[a] -= 1;
                (p[Self::idx(&self.n, &lo)] - p[Self::idx(&self.n, &f)]) / self.h[a]
            })
            .collect()
    }

    fn schur(&self, sigma: f64, p: &[f64], cert: &mut Certificate) -> Result<Vec<f64>> {
        let mut u = Vec::with_capacity(self.dim);
        let cap = 50 * self.n.iter().max().copied().unwrap_or(2).pow(2).max(100);
        for a in 0..self.dim {
            let b = self.div_adjoint(p, a);
            let (x, c) = pcg("mac velocity cg", |v, y| self.apply_a(a, sigma, v, y), None, &b, 1e-12, cap)?;
            *cert = cert.merge(c);
            u.push(x);
        }
        let mut s = self.div(&u);
        deflate(&mut s);
        Ok(s)
    }
}

fn deflate(p: &mut [f64]) {
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter_mut().for_each(|v| *v -= mean);
}

/// Fraction of energy in the local `(-1)^{i+j(+k)}` mode over 2x2(x2) blocks.
fn checkerboard_fraction(mac: &Mac, p: &[f64]) -> f64 {
    let blocks: Vec<usize> = (0..3).map(|a| if a < mac.dim { mac.n[a] / 2 } else { 1 }).collect();
    let corners = 1usize << mac.dim;
    let mut mode = 0.0;
    for b0 in 0..blocks[0] {
        for b1 in 0..blocks[1] {
            for b2 in 0..blocks[2] {
                let mut s = 0.0;
                for k in 0..corners {
                    let off = [k & 1, (k >> 1) & 1, (k >> 2) & 1];
                    let c = [2 * b0 + off[0], 2 * b1 + off[1], if mac.dim == 3 { 2 * b2 + off[2] } else { 0 }];
                    let sign = if (off[0] + off[1] + off[2]) % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * p[Mac::idx(&mac.n, &c)];
                }
                mode += s * s / corners as f64;
            }
        }
    }
    let total: f64 = p.iter().map(|v| v * v).sum();
    if total == 0.0 {
        0.0
    } else {
        mode / total
    }
}

fn lanczos_min(mac: &Mac, variant: InfSupVariant) -> Result<InfSupEstimate> {
    let sigma = match variant {
        InfSupVariant::FullNorm => 1.0,
        InfSupVariant::Seminorm => 0.0,
    };
    let np = mac.pressures();
    let max_steps = (np - 1).min(if mac.dim == 2 { 800 } else { 300 });
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut q: Vec<f64> = (0..np).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate(&mut q);
    let nq = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= nq);
    let mut basis = vec![q];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut inner = Certificate { solver: "mac velocity cg", iterations: 0, residual: 0.0 };
    loop {
        let k = basis.len() - 1;
        let mut w = mac.schur(sigma, &basis[k], &mut inner)?;
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        deflate(&mut w);
        let b = dot(&w, &w).sqrt();
        let steps = alpha.len();
        // Krylov space exhausted
        let exhausted = b <= 1e-10 * alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if steps % 10 == 0 || steps >= max_steps || exhausted {
            let mut t = DMatrix::zeros(steps, steps);
            for i in 0..steps {
                t[(i, i)] = alpha[i];
                if i + 1 < steps {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
            let y = eig.eigenvectors.column(imin);
            let ritz_residual = b * y[steps - 1].abs();
            if ritz_residual <= 1e-8 || exhausted || steps >= max_steps {
                if ritz_residual > 1e-5 {
                    return Err(Error::NotConverged { solver: "mac lanczos", iterations: steps, residual: ritz_residual });
                }
                let mut x = vec![0.0; np];
                for (i, v) in basis.iter().enumerate() {
                    x.iter_mut().zip(v).for_each(|(s, t)| *s += y[i] * t);
                }
                let checkerboard = checkerboard_fraction(mac, &x);
                if checkerboard > 0.5 {
                    return Err(Error::SpuriousMode(checkerboard));
                }
                return Ok(InfSupEstimate {
                    variant,
                    beta: theta.max(0.0).sqrt(),
                    lanczos_steps: steps,
                    ritz_residual,
                    checkerboard,
                    inner,
                });
            }
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

/// `beta0` on a rectangle or box with MAC spacing close to `h`, both norm variants.
pub fn infsup_beta0(d: &StarDomain, h: f64) -> Result<InfSup> {
    if !matches!(d.kind, DomainKind::Rectangle { .. } | DomainKind::Box { .. }) {
        return Err(Error::NotTensorDomain);
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
    }
    let half = d.half_widths();
    let mut mac = Mac { dim: d.dim, n: [1; 3], h: [1.0; 3] };
    for a in 0..d.dim {
        mac.n[a] = ((2.0 * half[a] / h).round() as usize).max(2);
        mac.h[a] = 2.0 * half[a] / mac.n[a] as f64;
    }
    let full = lanczos_min(&mac, InfSupVariant::FullNorm)?;
    let semi = lanczos_min(&mac, InfSupVariant::Seminorm)?;
    Ok(InfSup { cells: mac.n[..d.dim].to_vec(), full, semi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mac(n: [usize; 3], dim: usize) -> Mac {
        Mac { dim, n, h: [0.3, 0.2, 0.25] }
    }

    #[test]
    fn divergence_adjoint() {
        let m = mac([4, 3, 1], 2);
        let u: Vec<Vec<f64>> = (0..2)
            .map(|a| {
                let shape = m.vshape(a);
                (0..m.vlen(a))
                    .map(|i| {
                        let f = Mac::coords(&shape, i);
                        if f[a] == 0 || f[a] == m.n[a] {
                            0.0
                        } else {
                            (i as f64 * 0.37).sin()
                        }
                    })
                    .collect()
            })
            .collect();
        let p: Vec<f64> = (0..m.pressures()).map(|i| (i as f64 * 1.1).cos()).collect();
        let lhs = dot(&m.div(&u), &p);
        let rhs: f64 = (0..2).map(|a| dot(&u[a], &m.div_adjoint(&p, a))).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn velocity_operator_is_symmetric() {
        let m = mac([3, 4, 2], 3);
        for a in 0..3 {
            let len = m.vlen(a);
            let shape = m.vshape(a);
            let mk = |s: f64| -> Vec<f64> {
                (0..len)
                    .map(|i| {
                        let f = Mac::coords(&shape, i);
                        if f[a] == 0 || f[a] == m.n[a] {
                            0.0
                        } else {
                            (s * i as f64).sin()
                        }
                    })
                    .collect()
            };
            let (u, v) = (mk(0.9), mk(0.4));
            let (mut au, mut av) = (vec![0.0; len], vec![0.0; len]);
            m.apply_a(a, 1.0, &u, &mut au);
            m.apply_a(a, 1.0, &v, &mut av);
            assert!((dot(&au, &v) - dot(&av, &u)).abs() < 1e-10);
        }
    }

    #[test]
    fn checkerboard_detector() {
        let m = mac([4, 4, 1], 2);
        let cb: Vec<f64> = (0..16).map(|i| if (i / 4 + i % 4) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!((checkerboard_fraction(&m, &cb) - 1.0).abs() < 1e-12);
        let smooth: Vec<f64> = (0..16).map(|i| (i / 4) as f64).collect();
        assert!(checkerboard_fraction(&m, &smooth) < 1e-12);
    }

    #[test]
    fn seminorm_variant_is_dilation_invariant() {
        let a = infsup_beta0(&StarDomain::rectangle(0.5, 0.5).unwrap(), 1.0 / 8.0).unwrap();
        let b = infsup_beta0(&StarDomain::rectangle(1.0, 1.0).unwrap(), 2.0 / 8.0).unwrap();
        assert!((a.semi.beta - b.semi.beta).abs() < 1e-6);
        assert!(b.full.beta < a.full.beta);
        assert!(a.full.beta <= a.semi.beta);
    }
}
