//! Babuska-Aziz constant scans and span maximisation.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::bogovskii::{Bogovskii, Level, UJet};
use crate::discrete::{poisson_solve, GridField};
use crate::domain::StarDomain;
use crate::error::{Error, Result};
use crate::report::{loglog_slope, Check, ConstantsReport};

use super::candidates::{candidates, legendre_products, CandidateSet};

/// Candidates whose relative divergence residual exceeds this are dropped.
pub const DIV_GATE: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct CandidateResult {
    pub name: String,
    pub f_norm0: f64,
    pub f_seminorm1: f64,
    pub u_seminorm1: f64,
    pub u_seminorm2: Option<f64>,
    pub div_residual: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DomainScan {
    pub domain: String,
    pub rho: f64,
    pub diameter: f64,
    pub candidates: Vec<CandidateResult>,
    /// Largest single-candidate `|u|_1 / ||f||_0`.
    pub c_ba0_single: f64,
    /// Largest `|u|_1 / ||f||_0` over the linear span of the accepted candidates.
    pub c_ba0: f64,
    /// Nonnegative least-squares pair for `|u|_2 <= C^A ||f||_0 + C^B |f|_1`.
    pub c_a: Option<f64>,
    pub c_b: Option<f64>,
    /// Largest ratio `|u|_2 / (C^A ||f||_0 + C^B |f|_1)` over the accepted candidates.
    pub fit_envelope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaScan {
    pub order: u8,
    pub set: String,
    pub resolution: usize,
    pub domains: Vec<DomainScan>,
    pub report: ConstantsReport,
}

/// `max x^T a x / x^T b x` over directions where `b` is not negligible.
pub fn max_rayleigh(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = b.nrows();
    if n == 0 || a.nrows() != n {
        return Err(Error::InvalidParameter("rayleigh quotient needs matching nonempty matrices".into()));
    }
    let sym = |m: &DMatrix<f64>| (m + m.transpose()) * 0.5;
    let eb = SymmetricEigen::new(sym(b));
    let top = eb.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::SingularGram);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eb.eigenvalues[i] > 1e-10 * top).collect();
    let mut w = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / eb.eigenvalues[i].sqrt();
        for r in 0..n {
            w[(r, c)] = eb.eigenvectors[(r, i)] * s;
        }
    }
    let reduced = sym(&(w.transpose() * sym(a) * &w));
    Ok(SymmetricEigen::new(reduced).eigenvalues.iter().cloned().fold(f64::MIN, f64::max))
}

/// Nonnegative least squares for `y_i ~ p a_i + q b_i` with rows weighted by `1/y_i`.
pub fn nnls2(a: &[f64], b: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let rows: Vec<(f64, f64)> = a.iter().zip(b).zip(y).map(|((a, b), y)| (a / y, b / y)).collect();
    if rows.is_empty() {
        return None;
    }
    let cost = |p: f64, q: f64| rows.iter().map(|(a, b)| (1.0 - p * a - q * b).powi(2)).sum::<f64>();
    let (saa, sbb, sab) = rows.iter().fold((0.0, 0.0, 0.0), |s, (a, b)| (s.0 + a * a, s.1 + b * b, s.2 + a * b));
    let (sa, sb) = rows.iter().fold((0.0, 0.0), |s, (a, b)| (s.0 + a, s.1 + b));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut consider = |p: f64, q: f64| {
        if p >= 0.0 && q >= 0.0 && p.is_finite() && q.is_finite() {
            let c = cost(p, q);
            if best.is_none_or(|b| c < b.2) {
                best = Some((p, q, c));
            }
        }
    };
    let det = saa * sbb - sab * sab;
    if det.abs() > 1e-14 * saa * sbb {
        consider((sa * sbb - sb * sab) / det, (sb * saa - sa * sab) / det);
    }
    if saa > 0.0 {
        consider(sa / saa, 0.0);
    }
    if sbb > 0.0 {
        consider(0.0, sb / sbb);
    }
    best.map(|(p, q, _)| (p, q))
}

fn gram<F: Fn(usize, usize) -> f64 + Sync>(n: usize, entry: F) -> DMatrix<f64> {
    let vals: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if j < i { 0.0 } else { entry(i, j) }
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            m[(i, j)] = vals[i * n + j];
            m[(j, i)] = vals[i * n + j];
        }
    }
    m
}

fn grad_dot(a: &UJet, b: &UJet, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a.grad[i][j] * b.grad[i][j];
        }
    }
    s
}

fn scan_domain(order: u8, d: &StarDomain, set: CandidateSet, resolution: usize) -> Result<(DomainScan, Vec<String>)> {
    let quad = d.quadrature(resolution)?;
    let bog = Bogovskii::on_star_ball(d)?;
    let level = if order == 0 { Level::Gradient } else { Level::Hessian };
    let n = d.dim;
    let cands = candidates(d, set, &quad)?;
    let mut warnings = Vec::new();
    let mut results = Vec::new();
    let mut accepted_jets: Vec<Vec<UJet>> = Vec::new();
    let mut accepted_values: Vec<Vec<f64>> = Vec::new();
    for c in &cands {
        let spec = c.field.clone().into_field(c.name.clone(), true);
        let (norms, jets) = bog.evaluate(&spec, &quad, level)?;
        let accepted = norms.div_residual_rel <= DIV_GATE;
        if !accepted {
            warnings.push(format!(
                "{}: candidate {} excluded, div residual {:e} above gate {:e}",
                d.descriptor(),
                c.name,
                norms.div_residual_rel,
                DIV_GATE
            ));
        } else {
            accepted_values.push(quad.nodes.iter().map(|x| c.field.value(x)).collect());
            accepted_jets.push(jets);
        }
        results.push(CandidateResult {
            name: c.name.clone(),
            f_norm0: norms.f_norm0,
            f_seminorm1: norms.f_seminorm1,
            u_seminorm1: norms.seminorm1,
            u_seminorm2: norms.seminorm2,
            div_residual: norms.div_residual_rel,
            accepted,
        });
    }
    let good: Vec<&CandidateResult> = results.iter().filter(|r| r.accepted).collect();
    if good.is_empty() {
        return Err(Error::InvalidParameter(format!("every candidate on {} failed the divergence gate", d.descriptor())));
    }
    let c_ba0_single = good.iter().map(|r| r.u_seminorm1 / r.f_norm0).fold(0.0, f64::max);
    let k = accepted_jets.len();
    let w = &quad.weights;
    let num = gram(k, |i, j| {
        accepted_jets[i].iter().zip(&accepted_jets[j]).zip(w).map(|((a, b), w)| w * grad_dot(a, b, n)).sum()
    });
    let den = gram(k, |i, j| {
        accepted_values[i].iter().zip(&accepted_values[j]).zip(w).map(|((a, b), w)| w * a * b).sum()
    });
    let c_ba0 = max_rayleigh(&num, &den)?.sqrt().max(c_ba0_single);

    let (mut c_a, mut c_b, mut envelope) = (None, None, None);
    if order == 1 {
        let a: Vec<f64> = good.iter().map(|r| r.f_norm0).collect();
        let b: Vec<f64> = good.iter().map(|r| r.f_seminorm1).collect();
        let y: Vec<f64> = good.iter().map(|r| r.u_seminorm2.unwrap_or(0.0)).collect();
        if let Some((p, q)) = nnls2(&a, &b, &y) {
            let env = a.iter().zip(&b).zip(&y).map(|((a, b), y)| y / (p * a + q * b)).fold(0.0, f64::max);
            c_a = Some(p);
            c_b = Some(q);
            envelope = Some(env);
        }
    }
    Ok((
        DomainScan {
            domain: d.descriptor(),
            rho: d.star_radius,
            diameter: d.diameter,
            candidates: results,
            c_ba0_single,
            c_ba0,
            c_a,
            c_b,
            fit_envelope: envelope,
        },
        warnings,
    ))
}

/// Scan a family of domains; order 0 measures `C_BA,0`, order 1 the pair `(C^A, C^B)`.
pub fn ba_scan(order: u8, family: &[StarDomain], set: CandidateSet, resolution: usize) -> Result<BaScan> {
    if order > 1 {
        return Err(Error::InvalidParameter(format!("scan order must be 0 or 1, got {order}")));
    }
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty domain family".into()));
    }
    let names: Vec<String> = family.iter().map(|d| d.descriptor()).collect();
    let mut report = ConstantsReport::new(format!("ba-scan-order{order}"), names.join(";"));
    report.resolutions.push(format!("quadrature {resolution}"));
    let res = format!("quadrature {resolution}");
    let set_name = set.to_string();
    let mut domains = Vec::new();
    for d in family {
        let (scan, warnings) = scan_domain(order, d, set, resolution)?;
        report.warnings.extend(warnings);
        for c in &scan.candidates {
            report.measure(&scan.domain, &c.name, "f_norm0", c.f_norm0);
            report.measure(&scan.domain, &c.name, "f_seminorm1", c.f_seminorm1);
            report.measure(&scan.domain, &c.name, "u_seminorm1", c.u_seminorm1);
            if let Some(s) = c.u_seminorm2 {
                report.measure(&scan.domain, &c.name, "u_seminorm2", s);
            }
            report.measure(&scan.domain, &c.name, "div_residual", c.div_residual);
            report.measure(&scan.domain, &c.name, "accepted", if c.accepted { 1.0 } else { 0.0 });
        }
        report.measure(&scan.domain, "geometry", "rho", scan.rho);
        report.measure(&scan.domain, "geometry", "diameter", scan.diameter);
        report.measure(&scan.domain, "span", "C_BA0_single", scan.c_ba0_single);
        report.constant("C_BA0", scan.c_ba0, &scan.domain, &set_name, &res);
        if let (Some(a), Some(b), Some(e)) = (scan.c_a, scan.c_b, scan.fit_envelope) {
            report.constant("C_A", a, &scan.domain, &set_name, &res);
            report.constant("C_B", b, &scan.domain, &set_name, &res);
            report.measure(&scan.domain, "fit", "envelope", e);
        }
        domains.push(scan);
    }

    let inv_rho: Vec<f64> = domains.iter().map(|s| 1.0 / s.rho).collect();
    let r_over_rho: Vec<f64> = domains.iter().map(|s| s.diameter / s.rho).collect();
    let mut series: Vec<(&str, Vec<f64>)> = vec![("C_BA0", domains.iter().map(|s| s.c_ba0).collect())];
    if order == 1 {
        series.push(("C_A", domains.iter().map(|s| s.c_a.unwrap_or(f64::NAN)).collect()));
        series.push(("C_B", domains.iter().map(|s| s.c_b.unwrap_or(f64::NAN)).collect()));
    }
    for (abscissa, x) in [("1/rho", &inv_rho), ("R/rho", &r_over_rho)] {
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(0.0, f64::max);
        if hi > lo * (1.0 + 1e-9) {
            if x.len() >= 4 {
                for (q, y) in &series {
                    report.slopes.push(loglog_slope(q, abscissa, x, y));
                }
            }
        } else {
            for (q, y) in &series {
                let ylo = y.iter().cloned().fold(f64::INFINITY, f64::min);
                let yhi = y.iter().cloned().fold(0.0, f64::max);
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                report.check(Check::at_most(
                    format!("{q} spread at constant {abscissa}"),
                    (yhi - ylo) / mean,
                    0.3,
                ));
            }
        }
    }
    Ok(BaScan { order, set: set_name, resolution, domains, report })
}

/// `C_NL,0 = max ||f||_0 / ||grad f||_{-1}` over the span of Legendre products
/// of total degree `1..=max_degree`, with discrete means removed; also returns
/// the best single product.
pub fn c_nl0(d: &StarDomain, h: f64, max_degree: usize) -> Result<(f64, f64)> {
    let n = d.dim;
    let basis = legendre_products(d, 1, max_degree);
    let fields: Vec<(GridField, GridField)> = basis
        .iter()
        .map(|c| {
            let mut f = GridField::scalar(d, h, |x| c.field.value(x))?;
            let mean = f.integral(0) / d.volume;
            f.values.iter_mut().for_each(|v| *v -= mean);
            let g = GridField::from_fn(d, h, n, |x, out| {
                let (_, grad, _) = c.field.jet(x);
                out.copy_from_slice(&grad[..n]);
            })?;
            Ok((f, g))
        })
        .collect::<Result<_>>()?;
    let riesz: Vec<GridField> = fields.iter().map(|(_, g)| Ok(poisson_solve(g)?.field)).collect::<Result<_>>()?;
    let weights: Vec<f64> = (0..fields[0].0.grid.node_count()).map(|i| fields[0].0.grid.weight(i)).collect();
    let pair = |a: &GridField, b: &GridField| -> f64 {
        let k = a.components;
        a.values.iter().zip(&b.values).enumerate().map(|(i, (x, y))| weights[i / k] * x * y).sum()
    };
    let m = basis.len();
    let num = gram(m, |i, j| pair(&fields[i].0, &fields[j].0));
    let den = gram(m, |i, j| 0.5 * (pair(&fields[i].1, &riesz[j]) + pair(&fields[j].1, &riesz[i])));
    let single = (0..m).map(|i| (num[(i, i)] / den[(i, i)]).sqrt()).fold(0.0, f64::max);
    Ok((max_rayleigh(&num, &den)?.sqrt().max(single), single))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_of_diagonal_pair() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 8.0, 3.0]));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0]));
        assert!((max_rayleigh(&a, &b).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_drops_null_directions() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((max_rayleigh(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_recovers_exact_pair() {
        let a = [1.0, 2.0, 0.5, 3.0];
        let b = [2.0, 1.0, 4.0, 0.5];
        let y: Vec<f64> = a.iter().zip(&b).map(|(a, b)| 1.5 * a + 0.25 * b).collect();
        let (p, q) = nnls2(&a, &b, &y).unwrap();
        assert!((p - 1.5).abs() < 1e-12 && (q - 0.25).abs() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_coefficient() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0];
        let (p, q) = nnls2(&a, &b, &y).unwrap();
        assert!(p > 0.0 && q >= 0.0);
        let y2 = [3.0, 2.0, 1.0];
        let (p2, q2) = nnls2(&a, &b, &y2).unwrap();
        assert!(p2 >= 0.0 && q2 >= 0.0);
    }
}
