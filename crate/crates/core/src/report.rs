//! Experiment reports: named measurements, constants, slopes and pass/fail checks.
//!
//! The CSV form has the frozen header
//! `section,label,quantity,value,lower,upper,pass`; measurement rows leave the
//! last three columns empty. Floats use the shortest round-trip representation.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Label attached to every constant obtained by maximising over candidates.
pub const LOWER_ESTIMATE: &str = "empirical lower estimate";

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Measurement {
    pub section: String,
    pub label: String,
    pub quantity: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct NamedConstant {
    pub name: String,
    pub value: f64,
    pub domain: String,
    pub candidate_set: String,
    pub resolution: String,
    pub estimate: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Slope {
    pub quantity: String,
    pub abscissa: String,
    pub slope: f64,
    pub half_width: f64,
    pub points: usize,
}

/// `lower <= value <= upper`; either bound may be absent.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let pass = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Self { name: name.into(), value, lower, upper, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Self::new(name, value, None, Some(upper))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Self::new(name, value, Some(lower), None)
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Default)]
pub struct ConstantsReport {
    pub experiment: String,
    pub domain: String,
    pub resolutions: Vec<String>,
    pub constants: Vec<NamedConstant>,
    pub slopes: Vec<Slope>,
    pub measurements: Vec<Measurement>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ConstantsReport {
    pub fn new(experiment: impl Into<String>, domain: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), domain: domain.into(), ..Default::default() }
    }

    pub fn measure(&mut self, section: &str, label: &str, quantity: &str, value: f64) {
        self.measurements.push(Measurement {
            section: section.into(),
            label: label.into(),
            quantity: quantity.into(),
            value,
        });
    }

    pub fn constant(&mut self, name: &str, value: f64, domain: &str, candidate_set: &str, resolution: &str) {
        self.constants.push(NamedConstant {
            name: name.into(),
            value,
            domain: domain.into(),
            candidate_set: candidate_set.into(),
            resolution: resolution.into(),
            estimate: LOWER_ESTIMATE.into(),
        });
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn find(&self, section: &str, label: &str, quantity: &str) -> Option<f64> {
        self.measurements
            .iter()
            .find(|m| m.section == section && m.label == label && m.quantity == quantity)
            .map(|m| m.value)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn find_constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn merge(&mut self, prefix: &str, other: ConstantsReport) {
        for mut m in other.measurements {
            m.section = format!("{prefix}.{}", m.section);
            self.measurements.push(m);
        }
        self.constants.extend(other.constants);
        self.slopes.extend(other.slopes);
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
        self.warnings.extend(other.warnings);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "section,label,quantity,value,lower,upper,pass")?;
        writeln!(w, "meta,{},experiment,,,,", esc(&self.experiment))?;
        writeln!(w, "meta,{},domain,,,,", esc(&self.domain))?;
        for r in &self.resolutions {
            writeln!(w, "meta,{},resolution,,,,", esc(r))?;
        }
        for c in &self.constants {
            let q = format!("{}|{}|{}|{}", c.domain, c.candidate_set, c.resolution, c.estimate);
            writeln!(w, "constant,{},{},{},,,", esc(&c.name), esc(&q), num(c.value))?;
        }
        for s in &self.slopes {
            let label = esc(&format!("{} vs {}", s.quantity, s.abscissa));
            writeln!(w, "slope,{label},slope,{},,,", num(s.slope))?;
            writeln!(w, "slope,{label},half_width,{},,,", num(s.half_width))?;
            writeln!(w, "slope,{label},points,{},,,", s.points)?;
        }
        for m in &self.measurements {
            writeln!(w, "{},{},{},{},,,", esc(&m.section), esc(&m.label), esc(&m.quantity), num(m.value))?;
        }
        for c in &self.checks {
            writeln!(
                w,
                "check,{},bound,{},{},{},{}",
                esc(&c.name),
                num(c.value),
                c.lower.map(num).unwrap_or_default(),
                c.upper.map(num).unwrap_or_default(),
                c.pass
            )?;
        }
        for m in &self.warnings {
            writeln!(w, "warning,{},,,,,", esc(m))?;
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn esc(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Least-squares slope of `log y` against `log x` with a 95% half-width.
pub fn loglog_slope(quantity: &str, abscissa: &str, x: &[f64], y: &[f64]) -> Slope {
    let n = x.len();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let half_width = if n > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
        t_quantile(n - 2) * (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Slope { quantity: quantity.into(), abscissa: abscissa.into(), slope, half_width, points: n }
}

/// Two-sided 95% Student t quantile.
fn t_quantile(df: usize) -> f64 {
    const T: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];
    if df == 0 {
        f64::INFINITY
    } else if df <= 10 {
        T[df - 1]
    } else {
        1.96 + 2.4 / df as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let s = loglog_slope("c", "1/rho", &x, &y);
        assert!((s.slope - 1.7).abs() < 1e-12);
        assert!(s.half_width < 1e-10);
    }

    #[test]
    fn csv_is_stable_and_escaped() {
        let mut r = ConstantsReport::new("demo", "rect");
        r.measure("a,b", "x", "q", 0.1);
        r.check(Check::at_most("c", 1.0, 2.0));
        let s = r.csv_string();
        assert_eq!(
            s,
            "section,label,quantity,value,lower,upper,pass\nmeta,demo,experiment,,,,\nmeta,rect,domain,,,,\n\"a,b\",x,q,1e-1,,,\ncheck,c,bound,1e0,,2e0,true\n"
        );
        assert!(r.passed());
    }
}
