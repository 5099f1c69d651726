//! Hypothesis tests used for confound analysis and feature ranking.

mod special;

pub use special::{beta_inc, chi2_cdf, chi2_sf, f_cdf, f_sf, gamma_p, gamma_q, ln_gamma};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df1: f64,
    /// Zero when the test has a single degrees-of-freedom parameter.
    pub df2: f64,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl TestResult {
    fn new(statistic: f64, df1: f64, df2: f64, p: f64) -> Self {
        TestResult {
            statistic,
            df1,
            df2,
            p: p.clamp(0.0, 1.0),
            warning: None,
        }
    }
}

fn f_test(ss_between: f64, ss_within: f64, n: usize, g: usize) -> Result<TestResult> {
    let df1 = (g - 1) as f64;
    let df2 = (n - g) as f64;
    // Sums of squares below round-off of the data scale count as zero.
    let between_zero = ss_between <= 0.0;
    let within_zero = ss_within <= 0.0;
    if between_zero {
        return Ok(TestResult::new(0.0, df1, df2, 1.0));
    }
    if within_zero {
        return Ok(TestResult::new(f64::INFINITY, df1, df2, 0.0));
    }
    let f = (ss_between / df1) / (ss_within / df2);
    Ok(TestResult::new(f, df1, df2, f_sf(f, df1, df2)?))
}

/// One-way ANOVA over raw observations.
///
/// Zero within-group variance with distinct group means gives `F = +∞, p = 0`;
/// all-identical values give `F = 0, p = 1`.
pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<TestResult> {
    let g = groups.len();
    if g < 2 {
        return Err(Error::invalid("ANOVA needs at least two groups"));
    }
    if groups.iter().any(|x| x.as_ref().is_empty()) {
        return Err(Error::invalid("ANOVA group is empty"));
    }
    let n: usize = groups.iter().map(|x| x.as_ref().len()).sum();
    if n <= g {
        return Err(Error::invalid("ANOVA needs more observations than groups"));
    }
    if groups
        .iter()
        .flat_map(|x| x.as_ref())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite("ANOVA observation"));
    }
    let grand = groups.iter().flat_map(|x| x.as_ref()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    let mut scale = 0.0f64;
    for group in groups {
        let x = group.as_ref();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        ss_between += x.len() as f64 * (mean - grand).powi(2);
        ss_within += x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        scale = scale.max(x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    }
    let tol = (scale * f64::EPSILON).powi(2) * n as f64 * 16.0;
    let ss_between = if ss_between <= tol { 0.0 } else { ss_between };
    let ss_within = if ss_within <= tol { 0.0 } else { ss_within };
    f_test(ss_between, ss_within, n, g)
}

/// One-way ANOVA from per-group sizes, means and sample standard deviations.
pub fn one_way_anova_summary(ns: &[usize], means: &[f64], sds: &[f64]) -> Result<TestResult> {
    let g = ns.len();
    if means.len() != g || sds.len() != g {
        return Err(Error::invalid("summary vectors must have equal length"));
    }
    if g < 2 {
        return Err(Error::invalid("ANOVA needs at least two groups"));
    }
    if ns.iter().any(|&n| n < 2) {
        return Err(Error::invalid("summary ANOVA needs n >= 2 per group"));
    }
    if means.iter().chain(sds).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("summary statistic"));
    }
    let n: usize = ns.iter().sum();
    let grand = ns
        .iter()
        .zip(means)
        .map(|(&k, m)| k as f64 * m)
        .sum::<f64>()
        / n as f64;
    let ss_between: f64 = ns
        .iter()
        .zip(means)
        .map(|(&k, m)| k as f64 * (m - grand).powi(2))
        .sum();
    let ss_within: f64 = ns
        .iter()
        .zip(sds)
        .map(|(&k, s)| (k as f64 - 1.0) * s * s)
        .sum();
    f_test(ss_between, ss_within, n, g)
}

/// Pearson chi-squared test of independence (no continuity correction).
///
/// A warning is attached when any expected count is below 5.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<TestResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateTable(format!(
            "need a rectangular table of at least 2x2, got {r} rows"
        )));
    }
    let row_tot: Vec<f64> = table
        .iter()
        .map(|row| row.iter().sum::<u64>() as f64)
        .collect();
    let col_tot: Vec<f64> = (0..c)
        .map(|j| table.iter().map(|row| row[j]).sum::<u64>() as f64)
        .collect();
    if let Some(i) = row_tot.iter().position(|&t| t == 0.0) {
        return Err(Error::DegenerateTable(format!("row {i} is all zero")));
    }
    if let Some(j) = col_tot.iter().position(|&t| t == 0.0) {
        return Err(Error::DegenerateTable(format!("column {j} is all zero")));
    }
    let total: f64 = row_tot.iter().sum();
    let mut stat = 0.0;
    let mut low = false;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_tot[i] * col_tot[j] / total;
            low |= e < 5.0;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as f64;
    let mut res = TestResult::new(stat, df, 0.0, chi2_sf(stat, df)?);
    if low {
        res.warning = Some("expected count below 5 in at least one cell".into());
    }
    Ok(res)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid(
            "pearson_r needs equal-length vectors of length >= 2",
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
