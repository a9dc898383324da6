//! Student-t distribution and the one-sided paired t-test.
//!
//! The paired test uses differences `d_j = m0_j - m1_j` (negative-class
//! metric minus positive-class metric) and the lower-tail alternative
//! `mean(d) < 0`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricReport};

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-15;
const TINY: f64 = 1e-300;

// Lanczos, g = 7, n = 9
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Stirling remainder `ln Γ(x) - [(x - ½) ln x - x + ½ ln 2π]`, x >= 10.
fn stirling_correction(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0
                + r2 * (-1.0 / 1680.0
                    + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360_360.0 + r2 * (1.0 / 156.0)))))))
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x >= 10.0 {
        return (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_correction(x);
    }
    if x < 0.5 {
        // reflection keeps the series in its accurate range
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    HALF_LN_2PI + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `ln B(a, b)`, with the large-argument difference `ln Γ(big) - ln Γ(big +
/// small)` expanded analytically to avoid cancellation.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, big) = if a < b { (a, b) } else { (b, a) };
    if big < 10.0 {
        return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    }
    let sum = big + small;
    let diff = -(big - 0.5) * (small / big).ln_1p() - small * sum.ln()
        + small
        + stirling_correction(big)
        - stirling_correction(sum);
    ln_gamma(small) + diff
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let clamp = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`. Takes `1 - x` separately so
/// callers can supply it without cancellation.
fn reg_inc_beta(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, one_minus_x) / b
    }
}

/// Lower-tail probability `P(T_df <= t)` of Student's t distribution.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    if t.is_nan() || df.is_nan() || df <= 0.0 {
        return f64::NAN;
    }
    if t == 0.0 {
        return 0.5;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let t2 = t * t;
    // x = df / (df + t²), 1 - x = t² / (df + t²)
    let ln_x = -(t2 / df).ln_1p();
    let x = ln_x.exp();
    let one_minus_x = if t2 < df { -ln_x.exp_m1() } else { t2 / (df + t2) };
    let tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, x, one_minus_x);
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Outcome of a one-sided (lower-tail) paired t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub n: usize,
    pub t_stat: f64,
    pub df: usize,
    pub p_one_sided: f64,
    pub mean_diff: f64,
    pub sd_diff: f64,
}

/// Paired t-test of `H_a: mean(m0 - m1) < 0`.
pub fn paired_t_test(m0: &[f64], m1: &[f64]) -> Result<PairedTestResult> {
    if m0.len() != m1.len() {
        return Err(Error::LengthMismatch(format!(
            "paired samples of lengths {} and {}",
            m0.len(),
            m1.len()
        )));
    }
    let n = m0.len();
    if n < 2 {
        return Err(Error::TooFewPairs(n));
    }
    if m0.iter().chain(m1).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "paired sample".into(),
        });
    }
    let d: Vec<f64> = m0.iter().zip(m1).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sd <= 4.0 * f64::EPSILON * scale {
        return Err(Error::DegenerateVariance);
    }
    let t = mean / (sd / nf.sqrt());
    let df = n - 1;
    Ok(PairedTestResult {
        n,
        t_stat: t,
        df,
        p_one_sided: t_cdf(t, df as f64),
        mean_diff: mean,
        sd_diff: sd,
    })
}

/// Runs the paired test across datasets on `(M_0, M_1)` of `metric` at `k`.
pub fn hypothesis_test(reports: &[MetricReport], metric: Metric, k: usize) -> Result<PairedTestResult> {
    let mut m0 = Vec::with_capacity(reports.len());
    let mut m1 = Vec::with_capacity(reports.len());
    for r in reports {
        m0.push(r.value(metric, 0, k)?);
        m1.push(r.value(metric, 1, k)?);
    }
    paired_t_test(&m0, &m1)
}

/// Hop bound used as a JSON object key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HopKey(pub usize);

impl fmt::Display for HopKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for HopKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HopKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map(HopKey).map_err(serde::de::Error::custom)
    }
}

/// `{"ANCD": {"1": {...}, ...}, "ANCC": {...}}`.
pub type TTestTable = BTreeMap<Metric, BTreeMap<HopKey, PairedTestResult>>;

/// Tests every `(metric, k)` pair.
pub fn hypothesis_table(reports: &[MetricReport], metrics: &[Metric], ks: &[usize]) -> Result<TTestTable> {
    let mut table = TTestTable::new();
    for &m in metrics {
        for &k in ks {
            let r = hypothesis_test(reports, m, k)?;
            table.entry(m).or_default().insert(HopKey(k), r);
        }
    }
    Ok(table)
}
