//! Discrete calculus on uniform node grids over rectangles and boxes.
//!
//! Grid fields store node values with the component index fastest. The flat
//! binary dump is
//!
//! ```text
//! magic  b"BGLF"           4 bytes
//! version u32 = 1
//! dim    u32
//! nodes  u64 x dim         node count per axis
//! h      f64 x dim         spacing per axis
//! comps  u32
//! payload f64 x (prod(nodes) * comps), row-major over [nodes..., comps]
//! ```
//!
//! All integers and floats are little-endian. The grid is centred at the origin.

mod infsup;
mod rigid;
mod solve;

pub use infsup::{infsup_beta0, InfSup, InfSupVariant};
pub use rigid::{project_rm, Projection, RMBasis};
pub use solve::{
    biharmonic_solve, neg_norm_h1, neg_norm_h1_certified, neg_norm_h2, neg_norm_h2_certified, poincare_constant,
    poisson_solve, Certificate, Poincare, Solve,
};

use std::io::{Read, Write};

use serde::Serialize;

use crate::domain::{DomainKind, StarDomain};
use crate::error::{Error, Result};
use crate::Point;

const MAGIC: &[u8; 4] = b"BGLF";

/// Uniform node lattice; axes beyond `dim` have a single node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub dim: usize,
    pub cells: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Grid {
    /// Grid over a rectangle or box with spacing close to `h` on every axis.
    pub fn for_domain(domain: &StarDomain, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {h}")));
        }
        let half = tensor_half_widths(domain)?;
        let mut cells = [0usize; 3];
        for a in 0..domain.dim {
            cells[a] = ((2.0 * half[a] / h).round() as usize).max(2);
        }
        Self::with_cells(domain, &cells[..domain.dim])
    }

    pub fn with_cells(domain: &StarDomain, cells: &[usize]) -> Result<Self> {
        let half = tensor_half_widths(domain)?;
        if cells.len() != domain.dim || cells.iter().any(|&c| c < 2) {
            return Err(Error::InvalidParameter(format!("need {} cell counts of at least 2", domain.dim)));
        }
        let mut g = Grid { dim: domain.dim, cells: [0; 3], spacing: [1.0; 3], origin: [0.0; 3] };
        for a in 0..domain.dim {
            g.cells[a] = cells[a];
            g.spacing[a] = 2.0 * half[a] / cells[a] as f64;
            g.origin[a] = -half[a];
        }
        Ok(g)
    }

    pub fn nodes(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis] + 1
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        (0..3).map(|a| self.nodes(a)).product()
    }

    pub fn strides(&self) -> [usize; 3] {
        [self.nodes(1) * self.nodes(2), self.nodes(2), 1]
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let s = self.strides();
        [idx / s[0], (idx % s[0]) / s[1], idx % s[1]]
    }

    pub fn point(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.origin[a] + c[a] as f64 * self.spacing[a];
        }
        x
    }

    pub fn is_interior(&self, c: &[usize; 3]) -> bool {
        (0..self.dim).all(|a| c[a] > 0 && c[a] < self.cells[a])
    }

    /// Trapezoid weight of a node.
    pub fn weight(&self, idx: usize) -> f64 {
        let c = self.coords(idx);
        (0..self.dim)
            .map(|a| {
                let edge = c[a] == 0 || c[a] == self.cells[a];
                if edge {
                    0.5 * self.spacing[a]
                } else {
                    self.spacing[a]
                }
            })
            .product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }
}

fn tensor_half_widths(domain: &StarDomain) -> Result<[f64; 3]> {
    match domain.kind {
        DomainKind::Rectangle { .. } | DomainKind::Box { .. } => Ok(domain.half_widths()),
        _ => Err(Error::NotTensorDomain),
    }
}

/// Node values of a scalar, vector or matrix field on a rectangle or box.
#[derive(Debug, Clone)]
pub struct GridField {
    pub domain: StarDomain,
    pub grid: Grid,
    pub components: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(domain: &StarDomain, h: f64, components: usize) -> Result<Self> {
        let grid = Grid::for_domain(domain, h)?;
        Self::on_grid(domain, grid, components)
    }

    pub fn on_grid(domain: &StarDomain, grid: Grid, components: usize) -> Result<Self> {
        let n = domain.dim;
        if components != 1 && components != n && components != n * n {
            return Err(Error::InvalidParameter(format!("{components} components on a {n}D grid")));
        }
        let values = vec![0.0; grid.node_count() * components];
        Ok(Self { domain: domain.clone(), grid, components, values })
    }

    /// Sample `f` at every node; `f` writes all components of one node.
    pub fn from_fn<F>(domain: &StarDomain, h: f64, components: usize, f: F) -> Result<Self>
    where
        F: Fn(&Point, &mut [f64]),
    {
        let mut out = Self::zeros(domain, h, components)?;
        out.fill(f);
        Ok(out)
    }

    pub fn scalar<F: Fn(&Point) -> f64>(domain: &StarDomain, h: f64, f: F) -> Result<Self> {
        Self::from_fn(domain, h, 1, |x, v| v[0] = f(x))
    }

    pub fn fill<F: Fn(&Point, &mut [f64])>(&mut self, f: F) {
        let k = self.components;
        for idx in 0..self.grid.node_count() {
            let x = self.grid.point(idx);
            f(&x, &mut self.values[idx * k..(idx + 1) * k]);
        }
    }

    pub fn like(&self, components: usize) -> Result<Self> {
        Self::on_grid(&self.domain, self.grid.clone(), components)
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.grid.dim).map(|a| self.grid.nodes(a)).collect()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.grid.spacing[..self.grid.dim].to_vec()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.components).copied().collect()
    }

    pub fn set_component(&mut self, c: usize, data: &[f64]) {
        let k = self.components;
        for (i, v) in data.iter().enumerate() {
            self.values[i * k + c] = *v;
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Trapezoid integral of one component.
    pub fn integral(&self, c: usize) -> f64 {
        let k = self.components;
        (0..self.grid.node_count()).map(|i| self.grid.weight(i) * self.values[i * k + c]).sum()
    }

    /// Trapezoid L2 norm summed over components.
    pub fn l2_norm(&self) -> f64 {
        let k = self.components;
        (0..self.grid.node_count())
            .map(|i| self.grid.weight(i) * self.values[i * k..(i + 1) * k].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        for a in 0..self.grid.dim {
            w.write_all(&(self.grid.nodes(a) as u64).to_le_bytes())?;
        }
        for a in 0..self.grid.dim {
            w.write_all(&self.grid.spacing[a].to_le_bytes())?;
        }
        w.write_all(&(self.components as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::Format(format!("unknown version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        if dim != 2 && dim != 3 {
            return Err(Error::Format(format!("dimension {dim}")));
        }
        let mut nodes = [1usize; 3];
        for n in nodes.iter_mut().take(dim) {
            *n = read_u64(&mut r)? as usize;
            if *n < 3 {
                return Err(Error::Format("fewer than 3 nodes on an axis".into()));
            }
        }
        let mut h = [1.0; 3];
        for s in h.iter_mut().take(dim) {
            *s = f64::from_le_bytes(read_array(&mut r)?);
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::Format(format!("spacing {s}")));
            }
        }
        let components = read_u32(&mut r)? as usize;
        let half: Vec<f64> = (0..dim).map(|a| 0.5 * (nodes[a] - 1) as f64 * h[a]).collect();
        let domain = if dim == 2 {
            StarDomain::rectangle(half[0], half[1])
        } else {
            StarDomain::cuboid(half[0], half[1], half[2])
        }
        .map_err(|e| Error::Format(e.to_string()))?;
        let cells: Vec<usize> = (0..dim).map(|a| nodes[a] - 1).collect();
        let grid = Grid::with_cells(&domain, &cells)?;
        let mut out = Self::on_grid(&domain, grid, components).map_err(|e| Error::Format(e.to_string()))?;
        for v in out.values.iter_mut() {
            *v = f64::from_le_bytes(read_array(&mut r)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(out)
    }

    /// CSV with one row per node: coordinates then components.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let axes = ["x1", "x2", "x3"];
        let mut head: Vec<String> = axes[..self.grid.dim].iter().map(|s| s.to_string()).collect();
        head.extend((0..self.components).map(|c| format!("c{c}")));
        writeln!(w, "{}", head.join(","))?;
        let k = self.components;
        for idx in 0..self.grid.node_count() {
            let x = self.grid.point(idx);
            let mut row: Vec<String> = x[..self.grid.dim].iter().map(|v| format!("{v:e}")).collect();
            row.extend(self.values[idx * k..(idx + 1) * k].iter().map(|v| format!("{v:e}")));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|_| Error::Format("truncated file".into()))?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

/// Deterministic dot product: fixed chunking, sequential combination.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    let parts: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum())
        .collect();
    parts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let d = StarDomain::rectangle(1.0, 0.5).unwrap();
        let f = GridField::from_fn(&d, 0.25, 2, |x, v| {
            v[0] = x[0];
            v[1] = x[1] * x[0];
        })
        .unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 16 + 16 + 4 + 8 * f.values.len());
        let g = GridField::read_binary(buf.as_slice()).unwrap();
        assert_eq!(g.shape(), vec![9, 5]);
        assert_eq!(g.values, f.values);
        assert!(GridField::read_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn trapezoid_weights_sum_to_area() {
        let d = StarDomain::cuboid(1.0, 0.5, 0.25).unwrap();
        let g = Grid::for_domain(&d, 0.125).unwrap();
        let s: f64 = (0..g.node_count()).map(|i| g.weight(i)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_ball() {
        let d = StarDomain::ball(1.0, 2).unwrap();
        assert!(matches!(Grid::for_domain(&d, 0.1), Err(Error::NotTensorDomain)));
    }
}
