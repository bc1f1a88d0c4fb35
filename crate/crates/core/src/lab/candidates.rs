//! Candidate right-hand sides.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::domain::{DomainKind, QuadratureRule, StarDomain};
use crate::error::{Error, Result};
use crate::field::{Factor, Separable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSet {
    /// Zero-meaned Legendre products of degree 1 to 3 and `sin(pi x1/(2a)) x2/b`.
    Plain,
    /// The same functions times the domain bubble, shifted by a multiple of the
    /// bubble to zero mean; they vanish on the boundary.
    Bubble,
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateSet::Plain => "plain",
            CandidateSet::Bubble => "bubble",
        })
    }
}

impl FromStr for CandidateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(CandidateSet::Plain),
            "bubble" => Ok(CandidateSet::Bubble),
            other => Err(Error::InvalidParameter(format!("unknown candidate set '{other}' (plain, bubble)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub field: Separable,
}

/// Function vanishing on the boundary: product of side bubbles, or `1 - |x|^2/r^2`.
pub fn bubble(d: &StarDomain) -> Result<Separable> {
    let n = d.dim;
    match d.kind {
        DomainKind::Rectangle { .. } | DomainKind::Box { .. } => {
            let h = d.half_widths();
            Ok(Separable::product(n, (0..n).map(|a| Factor::bubble(h[a])).collect()))
        }
        DomainKind::Ball { r, .. } => {
            let mut s = Separable::constant(n, 1.0);
            for a in 0..n {
                let mut f = vec![Factor::one(); n];
                f[a] = Factor::poly(vec![0.0, 0.0, 1.0]);
                s = s.plus(-1.0 / (r * r), &Separable::product(n, f));
            }
            Ok(s)
        }
        DomainKind::Polar { .. } => Err(Error::InvalidParameter("no bubble function for polar domains".into())),
    }
}

fn exponents(dim: usize, lo: usize, hi: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for total in lo..=hi {
        for i in (0..=total).rev() {
            if dim == 2 {
                out.push([i, total - i, 0]);
            } else {
                for j in (0..=total - i).rev() {
                    out.push([i, j, total - i - j]);
                }
            }
        }
    }
    out
}

/// Legendre products `P_i(x1/h1) P_j(x2/h2) ...` with total degree in `lo..=hi`.
pub(crate) fn legendre_products(d: &StarDomain, lo: usize, hi: usize) -> Vec<Candidate> {
    let n = d.dim;
    let h = d.half_widths();
    exponents(n, lo, hi)
        .into_iter()
        .map(|e| {
            let name = format!("L{}", e[..n].iter().map(|k| k.to_string()).collect::<String>());
            let field = Separable::product(n, (0..n).map(|a| Factor::legendre(e[a], h[a])).collect());
            Candidate { name, field }
        })
        .collect()
}

/// The candidate family on `d`; zero means are taken with `quad`.
pub fn candidates(d: &StarDomain, set: CandidateSet, quad: &QuadratureRule) -> Result<Vec<Candidate>> {
    let n = d.dim;
    let h = d.half_widths();
    let mut raw = legendre_products(d, 1, 3);
    let mut f = vec![Factor::one(); n];
    f[0] = Factor::sine(PI / (2.0 * h[0]), 0.0);
    f[1] = Factor::poly(vec![0.0, 1.0 / h[1]]);
    raw.push(Candidate { name: "sin_x2".into(), field: Separable::product(n, f) });
    match set {
        CandidateSet::Plain => Ok(raw
            .into_iter()
            .map(|c| Candidate { name: c.name, field: c.field.zero_meaned(quad) })
            .collect()),
        CandidateSet::Bubble => {
            let b = bubble(d)?;
            let mass = b.integrate(quad);
            raw.into_iter()
                .map(|c| {
                    let bp = b.times(&c.field)?;
                    let shift = bp.integrate(quad) / mass;
                    Ok(Candidate { name: format!("b*{}", c.name), field: bp.plus(-shift, &b) })
                })
                .collect()
        }
    }
}

/// `x1`, `x1 x2`, `sin(pi x1/a) x2`, zero-meaned with `quad`.
pub fn manufactured(d: &StarDomain, quad: &QuadratureRule) -> Vec<Candidate> {
    let n = d.dim;
    let a = d.half_widths()[0];
    let x1 = Separable::coordinate(n, 0);
    let x1x2 = x1.times(&Separable::coordinate(n, 1)).expect("polynomial product");
    let mut f = vec![Factor::one(); n];
    f[0] = Factor::sine(PI / a, 0.0);
    f[1] = Factor::poly(vec![0.0, 1.0]);
    let s = Separable::product(n, f);
    [("x1", x1), ("x1x2", x1x2), ("sin_x2", s)]
        .into_iter()
        .map(|(name, field)| Candidate { name: name.into(), field: field.zero_meaned(quad) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidate_counts_and_means() {
        let d = StarDomain::rectangle(1.0, 0.25).unwrap();
        let q = d.quadrature(16).unwrap();
        for set in [CandidateSet::Plain, CandidateSet::Bubble] {
            let c = candidates(&d, set, &q).unwrap();
            assert_eq!(c.len(), 10);
            for cand in &c {
                assert!(cand.field.integrate(&q).abs() < 1e-13, "{}", cand.name);
            }
        }
        let d3 = StarDomain::cuboid(1.0, 0.5, 0.5).unwrap();
        let q3 = d3.quadrature(8).unwrap();
        assert_eq!(candidates(&d3, CandidateSet::Plain, &q3).unwrap().len(), 20);
    }

    #[test]
    fn bubble_candidates_vanish_on_boundary() {
        let d = StarDomain::ball(1.0, 2).unwrap();
        let q = d.quadrature(16).unwrap();
        for c in candidates(&d, CandidateSet::Bubble, &q).unwrap() {
            for (x, _) in d.boundary_samples(16) {
                assert!(c.field.value(&x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn set_names_round_trip() {
        for s in [CandidateSet::Plain, CandidateSet::Bubble] {
            assert_eq!(s.to_string().parse::<CandidateSet>().unwrap(), s);
        }
        assert!("smooth".parse::<CandidateSet>().is_err());
    }
}
