//! Experiments that confront measured constants with the inequalities relating them.
//!
//! Every constant produced here is a maximum over a finite candidate family
//! (or its linear span) and is labelled as an empirical lower estimate.

mod candidates;
mod experiments;
mod scan;

pub use candidates::{bubble, candidates, manufactured, Candidate, CandidateSet};
pub use experiments::{
    counterexample_report, exact_norms, fourier_report, identity_checks, infsup_report, measured_constants,
    nl_symmetric_check, poincare_report, relations_check, solve_field, solve_report, symmetric_ratio, ChainTerms, MeasuredConstants,
};
pub use scan::{ba_scan, c_nl0, max_rayleigh, nnls2, BaScan, CandidateResult, DomainScan, DIV_GATE};
