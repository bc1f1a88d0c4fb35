//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail
//! the process; set `BOGOLAB_ACCEPTANCE_STRICT=1` to make every failure fatal.
//! A known failure that starts passing is reported so the list can be pruned.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use bogolab::bogovskii::{kernel_eval, Bogovskii, KernelSpec};
use bogolab::discrete::{neg_norm_h1, poincare_constant, GridField};
use bogolab::fourier::{lhs_line_integral, fourier_transform, PhiOption};
use bogolab::lab::{self, CandidateSet};
use bogolab::report::{Check, ConstantsReport};
use bogolab::{Mollifier, MultiIndex, Separable, StarDomain};

use common::*;

const KNOWN_FAILURES: &[u32] = &[4];

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Outcome;

fn failed(r: &ConstantsReport) -> Vec<String> {
    r.checks.iter().filter(|c| !c.pass).map(describe).collect()
}

fn describe(c: &Check) -> String {
    format!("{} = {:.4e} (lower {:?}, upper {:?})", c.name, c.value, c.lower, c.upper)
}

fn from_report(r: &ConstantsReport, summary: String) -> Outcome {
    let bad = failed(r);
    if bad.is_empty() {
        Outcome { pass: true, detail: summary }
    } else {
        Outcome { pass: false, detail: format!("{summary}; violated: {}", bad.join("; ")) }
    }
}

fn max_measure(r: &ConstantsReport, section: &str, quantity: &str) -> f64 {
    r.measurements
        .iter()
        .filter(|m| m.section.ends_with(section) && m.quantity == quantity)
        .map(|m| m.value)
        .fold(0.0, f64::max)
}

fn solve_domains() -> Vec<StarDomain> {
    vec![StarDomain::rectangle(1.0, 0.5).unwrap(), StarDomain::ball(1.0, 2).unwrap()]
}

fn solve_reports() -> &'static Vec<ConstantsReport> {
    static CELL: std::sync::OnceLock<Vec<ConstantsReport>> = std::sync::OnceLock::new();
    CELL.get_or_init(|| solve_domains().iter().map(|d| lab::solve_report(d, 24).unwrap()).collect())
}

fn c1_divergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in solve_reports() {
        let bad: Vec<String> =
            r.checks.iter().filter(|c| c.name.starts_with("div residual") && !c.pass).map(describe).collect();
        pass &= bad.is_empty();
        parts.push(format!(
            "{}: max residual {:.2e}, refined {:.2e}",
            r.domain,
            max_measure(r, "divergence", "residual"),
            max_measure(r, "divergence", "residual_refined")
        ));
        parts.extend(bad);
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c2_boundary() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for r in solve_reports() {
        let checks: Vec<&Check> = r.checks.iter().filter(|c| c.name.starts_with("boundary")).collect();
        let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
        pass &= !checks.is_empty() && checks.iter().all(|c| c.pass);
        parts.push(format!("{}: worst boundary/interior {:.2e} over {} checks", r.domain, worst, checks.len()));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn c3_exact_norms() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, eps) in [(1.0, 0.25), (1.0, 0.125), (2.0, 0.125)] {
        for (_, q, exact) in lab::exact_norms(a, eps, 24).unwrap() {
            worst = worst.max((q - exact).abs() / exact.abs());
        }
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max relative error {worst:.2e} (bound 1e-10)") }
}

fn c4_chain() -> Outcome {
    let r = lab::counterexample_report(1.0, 0.125, 24).unwrap();
    let names = ["chain t1 vs t2", "chain t1 vs t3", "chain t2 vs t3"];
    let gaps: Vec<String> =
        names.iter().map(|n| format!("{n} {:.3}", r.find_check(n).unwrap().value)).collect();
    let pass = names.iter().all(|n| r.find_check(n).unwrap().pass);
    let edge = r.find_check("chain t2 vs t3 + edge term").unwrap();
    let detail = format!(
        "{}; with the x2 = +-eps edge term restored: {:.3}; t3 drops a boundary term that is nonzero because x1 does not vanish on the boundary",
        gaps.join(", "),
        edge.value
    );
    Outcome { pass, detail }
}

fn c5_slopes() -> Outcome {
    let family: Vec<StarDomain> =
        [0.5, 0.25, 0.125, 0.0625].iter().map(|&e| StarDomain::rectangle(1.0, e).unwrap()).collect();
    let zero = lab::ba_scan(0, &family, CandidateSet::Plain, 24).unwrap();
    let one = lab::ba_scan(1, &family, CandidateSet::Bubble, 24).unwrap();
    let slope = |r: &ConstantsReport, q: &str| {
        r.slopes.iter().find(|s| s.quantity == q && s.abscissa == "1/rho").map(|s| s.slope).unwrap_or(f64::NAN)
    };
    let ba0 = slope(&zero.report, "C_BA0").min(slope(&one.report, "C_BA0"));
    let ca = slope(&one.report, "C_A");
    let cb = slope(&one.report, "C_B");
    let pass = ba0 >= 0.8 && (1.4..=2.6).contains(&ca) && (0.5..=1.5).contains(&cb);
    Outcome {
        pass,
        detail: format!("slopes vs 1/eps: C_A {ca:.3} in [1.4, 2.6], C_B {cb:.3} in [0.5, 1.5], C_BA0 {ba0:.3} >= 0.8"),
    }
}

fn c6_fourier() -> Outcome {
    let r = lab::fourier_report(32, &[0.5, 1.0, 2.0]).unwrap();
    let m = r.find_check("min margin").unwrap().value;
    let n = r.find("summary", "cases", "count").unwrap();
    from_report(&r, format!("{n} cases, min margin {m:.3e} (bound -1e-5)"))
}

fn c7_identities() -> Outcome {
    let r = lab::identity_checks(7).unwrap();
    let fd = r.find_check("curl-grad identity by finite differences").unwrap().value;
    let exact = r.find_check("curl-grad identity max coefficient").unwrap().value;
    from_report(&r, format!("exact coefficient residual {exact:e}, finite differences {fd:.2e}"))
}

fn measured() -> &'static lab::MeasuredConstants {
    static CELL: std::sync::OnceLock<lab::MeasuredConstants> = std::sync::OnceLock::new();
    CELL.get_or_init(|| lab::measured_constants(&StarDomain::unit_square(), 1.0 / 64.0, 24).unwrap())
}

fn relations() -> &'static ConstantsReport {
    static CELL: std::sync::OnceLock<ConstantsReport> = std::sync::OnceLock::new();
    CELL.get_or_init(|| lab::relations_check(measured(), &StarDomain::unit_square(), 20, 7).unwrap())
}

fn c8_products() -> Outcome {
    let m = measured();
    let a = m.c_ba0 * m.beta_full;
    let b = m.c_nl0 * m.beta_full;
    Outcome {
        pass: a >= 0.9 && (0.85..=1.15).contains(&b),
        detail: format!("C_BA0 beta0 = {a:.4} (>= 0.9), C_NL0 beta0 = {b:.4} (in [0.85, 1.15]) at h = 1/64"),
    }
}

fn c9_first_order() -> Outcome {
    let c = relations().find_check("||f||_-1 / ((C_A C_P R + C_B) ||grad f||_-2)").unwrap();
    Outcome { pass: c.pass, detail: format!("worst ratio {:.4} over 20 fields (bound 1.1)", c.value) }
}

fn c10_symmetric() -> Outcome {
    let d = StarDomain::unit_square();
    let m = measured();
    let mut values = Vec::new();
    let mut pass = true;
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let r = lab::nl_symmetric_check(&d, h, 20, 7, m).unwrap();
        pass &= r.passed();
        values.push(r.find_constant("C*_NL0").unwrap());
    }
    let spread = (values[0] - values[1]).abs() / values[0].max(values[1]);
    pass &= spread <= 0.05;
    Outcome {
        pass,
        detail: format!(
            "C* = {:.4} (h=1/32), {:.4} (h=1/64), spread {:.2}%; bound {:.3}",
            values[0],
            values[1],
            100.0 * spread,
            m.symmetric_bound()
        ),
    }
}

fn c11_oracles() -> Outcome {
    let mut rows: Vec<(String, f64, f64)> = Vec::new();

    let m = Mollifier::new([0.0; 3], 0.2, 2).unwrap();
    let (x, y) = ([0.05, 0.0, 0.0], [-0.4, 0.0, 0.0]);
    let g = kernel_eval(&KernelSpec::plain(m), &x, &y).unwrap();
    let o = kernel_trapezoid(&m, &x, &y, 1_000_000);
    rows.push(("kernel vs trapezoid".into(), (g[0] - o[0]).abs().max((g[1] - o[1]).abs()), 1e-7));

    let d = StarDomain::rectangle(1.0, 0.5).unwrap();
    let bog = Bogovskii::on_star_ball(&d).unwrap();
    let f = Separable::coordinate(2, 0).into_field("x1", true);
    let x = [0.3, 0.1, 0.0];
    let u = bog.apply(&f, &x).unwrap();
    let o = apply_cartesian(&bog.mollifier, &d, |y| y[0], &x, 800, 400);
    rows.push(("apply vs 800x400 Cartesian".into(), (u[0] - o[0]).abs().max((u[1] - o[1]).abs()), 1e-4));

    rows.push(("Poisson manufactured h=1/64".into(), poisson_manufactured_error(64), 1e-3));
    rows.push(("biharmonic manufactured h=1/64".into(), biharmonic_manufactured_error(64), 5e-3));

    let m1 = Mollifier::new([0.0; 3], 1.0, 2).unwrap();
    let direct = fourier_transform(&m1, &MultiIndex::zero(2), &[1.0, 0.0]).unwrap().direct;
    rows.push(("transform vs 1024^2 FFT".into(), (direct - fft_transform(&m1, 4.0, 1024, 8)).norm(), 1e-6));

    let v = lhs_line_integral(&m1, PhiOption::Plain, &MultiIndex::zero(2), 0, &[1.0, 0.0]);
    let samples = projected_samples(&m1, 4000);
    let t = line_integral_trapezoid(|t| projected_transform_abs(&samples, t), 2.0 * PI, 40.0, 100_000);
    rows.push(("line integral vs 1e5-panel trapezoid".into(), (v.value - t).abs(), 1e-6));

    let sq = StarDomain::unit_square();
    let one = GridField::scalar(&sq, 1.0 / 64.0, |_| 1.0).unwrap();
    let exact = sine_series_mean().sqrt();
    rows.push(("||1||_-1 vs sine series (relative)".into(), (neg_norm_h1(&one).unwrap() - exact).abs() / exact, 2e-3));

    let rect = StarDomain::rectangle(1.0, 0.25).unwrap();
    let p = poincare_constant(&rect, 1.0 / 64.0).unwrap();
    let lam = PI * PI * (1.0 / 4.0 + 1.0 / 0.25);
    rows.push(("Poincare vs separable".into(), (p.constant - 1.0 / (rect.diameter * lam.sqrt())).abs(), 1e-3));

    let pass = rows.iter().all(|(_, e, b)| *e <= *b);
    let detail = rows.iter().map(|(n, e, b)| format!("{n} {e:.2e} (<= {b:e})")).collect::<Vec<_>>().join("; ");
    Outcome { pass, detail }
}

fn deterministic_outputs() -> Vec<(String, String)> {
    let sq = StarDomain::unit_square();
    let family = [StarDomain::rectangle(1.0, 0.5).unwrap(), StarDomain::rectangle(1.0, 0.25).unwrap()];
    let m = lab::measured_constants(&sq, 1.0 / 16.0, 12).unwrap();
    vec![
        ("identities".into(), lab::identity_checks(7).unwrap().csv_string()),
        ("counterexample".into(), lab::counterexample_report(1.0, 0.25, 12).unwrap().csv_string()),
        ("ba-scan".into(), lab::ba_scan(1, &family, CandidateSet::Bubble, 12).unwrap().report.csv_string()),
        ("relations".into(), lab::relations_check(&m, &sq, 20, 7).unwrap().csv_string()),
        ("nl-symmetric".into(), lab::nl_symmetric_check(&sq, 1.0 / 16.0, 20, 7, &m).unwrap().csv_string()),
        ("fourier".into(), lab::fourier_report(8, &[0.5, 1.0]).unwrap().csv_string()),
        ("infsup".into(), lab::infsup_report(&sq, &[1.0 / 8.0, 1.0 / 16.0]).unwrap().csv_string()),
    ]
}

fn c12_determinism() -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(deterministic_outputs)
    };
    let a = run(1);
    let b = run(3);
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let bytes: usize = a.iter().map(|(_, c)| c.len()).sum();
    Outcome {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            format!("{} experiments, {bytes} CSV bytes identical with 1 and 3 threads", a.len())
        } else {
            format!("differ between 1 and 3 threads: {}", differing.join(", "))
        },
    }
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with("--")).collect();
    let strict = std::env::var("BOGOLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u32, &str, Criterion); 12] = [
        (1, "divergence residual and refinement", c1_divergence),
        (2, "boundary decay", c2_boundary),
        (3, "exact norms", c3_exact_norms),
        (4, "chain terms agree pairwise", c4_chain),
        (5, "slopes against 1/eps", c5_slopes),
        (6, "Fourier margins", c6_fourier),
        (7, "curl-gradient identity", c7_identities),
        (8, "inf-sup products", c8_products),
        (9, "first-order negative-norm inequality", c9_first_order),
        (10, "symmetric-gradient inequality", c10_symmetric),
        (11, "independent oracles", c11_oracles),
        (12, "thread-count independence", c12_determinism),
    ];
    let mut fatal = 0;
    for (id, name, f) in criteria {
        if !args.is_empty() && !args.iter().any(|a| name.contains(a.as_str()) || a == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known failure)",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag}: {name} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass && (strict || !known) {
            fatal += 1;
        }
    }
    if fatal > 0 {
        println!("{fatal} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
