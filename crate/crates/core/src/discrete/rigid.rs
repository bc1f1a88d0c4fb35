//! Rigid body motions and the L2 projection onto them.

use nalgebra::{DMatrix, DVector};

use super::GridField;
use crate::error::{Error, Result};
use crate::Point;

/// Translations `e_a` and rotations `(x_b - c_b) e_a - (x_a - c_a) e_b`, `a < b`.
#[derive(Debug, Clone)]
pub struct RMBasis {
    pub dim: usize,
    pub center: Point,
    pub gram: DMatrix<f64>,
    /// Basis fields sampled on the grid, node-major with components fastest.
    samples: Vec<Vec<f64>>,
}

impl RMBasis {
    pub fn len(dim: usize) -> usize {
        if dim == 2 {
            3
        } else {
            6
        }
    }

    pub fn eval(dim: usize, center: &Point, k: usize, x: &Point, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if k < dim {
            out[k] = 1.0;
            return;
        }
        let pairs: &[(usize, usize)] = if dim == 2 { &[(0, 1)] } else { &[(0, 1), (0, 2), (1, 2)] };
        let (a, b) = pairs[k - dim];
        out[a] = x[b] - center[b];
        out[b] = -(x[a] - center[a]);
    }

    /// Basis on the grid of `like`, with trapezoid Gram matrix.
    pub fn on_grid(like: &GridField) -> Result<Self> {
        let dim = like.grid.dim;
        let center = like.domain.star_center;
        let m = Self::len(dim);
        let mut samples = Vec::with_capacity(m);
        for k in 0..m {
            let mut f = like.like(dim)?;
            f.fill(|x, v| Self::eval(dim, &center, k, x, v));
            samples.push(f.values);
        }
        let mut gram = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = weighted_dot(like, &samples[i], &samples[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(Self { dim, center, gram, samples })
    }
}

fn weighted_dot(like: &GridField, a: &[f64], b: &[f64]) -> f64 {
    let k = like.grid.dim;
    (0..like.grid.node_count())
        .map(|i| {
            let s: f64 = (0..k).map(|c| a[i * k + c] * b[i * k + c]).sum();
            like.grid.weight(i) * s
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub coefficients: Vec<f64>,
    pub residual: GridField,
    pub residual_norm: f64,
}

/// L2 projection of a vector field onto rigid body motions.
pub fn project_rm(v: &GridField) -> Result<Projection> {
    if v.components != v.grid.dim {
        return Err(Error::InvalidParameter(format!("expected a vector field, got {} components", v.components)));
    }
    let basis = RMBasis::on_grid(v)?;
    let rhs = DVector::from_iterator(basis.samples.len(), basis.samples.iter().map(|s| weighted_dot(v, s, &v.values)));
    let chol = basis.gram.clone().cholesky().ok_or(Error::SingularGram)?;
    let coef = chol.solve(&rhs);
    let mut residual = v.clone();
    for (k, s) in basis.samples.iter().enumerate() {
        residual.values.iter_mut().zip(s).for_each(|(r, b)| *r -= coef[k] * b);
    }
    let residual_norm = residual.l2_norm();
    Ok(Projection { coefficients: coef.iter().copied().collect(), residual, residual_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::StarDomain;

    #[test]
    fn rotation_is_reproduced() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let v = GridField::from_fn(&d, 0.1, 2, |x, o| {
            o[0] = x[1] + 0.3;
            o[1] = -x[0];
        })
        .unwrap();
        let p = project_rm(&v).unwrap();
        assert!(p.residual_norm < 1e-12);
    }

    #[test]
    fn dilation_is_orthogonal() {
        let d = StarDomain::unit_square();
        let v = GridField::from_fn(&d, 1.0 / 32.0, 2, |x, o| {
            o[0] = x[0];
            o[1] = x[1];
        })
        .unwrap();
        let p = project_rm(&v).unwrap();
        assert!(p.coefficients.iter().all(|c| c.abs() < 1e-12));
        assert!((p.residual_norm - v.l2_norm()).abs() < 1e-12);
        let again = project_rm(&p.residual).unwrap();
        assert!(again.coefficients.iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn gram_blocks_decouple_on_symmetric_box() {
        let d = StarDomain::cuboid(1.0, 0.5, 0.25).unwrap();
        let v = GridField::zeros(&d, 0.125, 3).unwrap();
        let b = RMBasis::on_grid(&v).unwrap();
        let scale = b.gram.amax();
        for t in 0..3 {
            for r in 3..6 {
                assert!(b.gram[(t, r)].abs() <= 1e-10 * scale);
            }
        }
        assert!(b.gram.clone().cholesky().is_some());
    }
}
