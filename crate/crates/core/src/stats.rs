//! Population statistics, the total-error variance expansion, and
//! fixed-width histograms.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation (divides by `n`).
    pub std: f64,
}

pub fn mean(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::EmptySample("mean of an empty sample".into()));
    }
    Ok(x.iter().sum::<f64>() / x.len() as f64)
}

pub fn basic_stats(x: &[f64]) -> Result<SampleStats> {
    let m = mean(x)?;
    let var = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64;
    Ok(SampleStats {
        n: x.len(),
        mean: m,
        std: var.sqrt(),
    })
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::EmptySample("paired sample is empty".into()));
    }
    Ok(())
}

/// Population covariance.
pub fn covariance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x)?, mean(y)?);
    Ok(x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.len() as f64)
}

/// Pearson correlation; `None` when either sample is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    let c = covariance(x, y)?;
    let (sx, sy) = (basic_stats(x)?.std, basic_stats(y)?.std);
    if sx == 0.0 || sy == 0.0 {
        return Ok(None);
    }
    Ok(Some((c / (sx * sy)).clamp(-1.0, 1.0)))
}

/// Terms of `σ²_rg = σ²_bg + σ²_br + σ²_ε + 2Cov(bg,br) − 2Cov(bg,ε) − 2Cov(br,ε)`
/// with `ε = ‖R_bg‖ + ‖R_br‖ − ‖R_rg‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub n: usize,
    pub var_rg: f64,
    pub var_bg: f64,
    pub var_br: f64,
    pub var_eps: f64,
    pub cov_bg_br: f64,
    pub cov_bg_eps: f64,
    pub cov_br_eps: f64,
    /// `σ²_bg + σ²_br`.
    pub approximation: f64,
    /// `|approximation − σ²_rg| / σ²_rg`, absent when `σ²_rg = 0`.
    pub approximation_rel_error: Option<f64>,
    /// Left side minus the expanded right side.
    pub residual: f64,
}

impl DecompositionReport {
    pub fn expanded(&self) -> f64 {
        self.var_bg + self.var_br + self.var_eps + 2.0 * self.cov_bg_br
            - 2.0 * self.cov_bg_eps
            - 2.0 * self.cov_br_eps
    }
}

pub fn variance_decomposition(bg: &[f64], br: &[f64], rg: &[f64]) -> Result<DecompositionReport> {
    check_pair(bg, br)?;
    check_pair(bg, rg)?;
    let eps: Vec<f64> = bg
        .iter()
        .zip(br)
        .zip(rg)
        .map(|((a, b), c)| a + b - c)
        .collect();
    let var = |x: &[f64]| covariance(x, x);
    let mut r = DecompositionReport {
        n: bg.len(),
        var_rg: var(rg)?,
        var_bg: var(bg)?,
        var_br: var(br)?,
        var_eps: var(&eps)?,
        cov_bg_br: covariance(bg, br)?,
        cov_bg_eps: covariance(bg, &eps)?,
        cov_br_eps: covariance(br, &eps)?,
        approximation: 0.0,
        approximation_rel_error: None,
        residual: 0.0,
    };
    r.approximation = r.var_bg + r.var_br;
    r.approximation_rel_error =
        (r.var_rg > 0.0).then(|| (r.approximation - r.var_rg).abs() / r.var_rg);
    r.residual = r.var_rg - r.expanded();
    Ok(r)
}

/// Counts in `[lo + i·w, lo + (i+1)·w)`; `lo` is the largest multiple of
/// `w` not above the sample minimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub lo: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.counts.len()).map(|i| {
            let a = self.lo + i as f64 * self.bin_width;
            (a, a + self.bin_width)
        })
    }
}

pub fn histogram(x: &[f64], bin_width: f64) -> Result<Histogram> {
    crate::error::require_positive("bin_width", bin_width)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "histogram",
            "sample contains non-finite values",
        ));
    }
    if x.is_empty() {
        return Ok(Histogram {
            bin_width,
            lo: 0.0,
            counts: vec![],
        });
    }
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    let n = (((max - lo) / bin_width).floor() as usize) + 1;
    let mut counts = vec![0; n];
    for &v in x {
        let i = (((v - lo) / bin_width).floor() as usize).min(n - 1);
        counts[i] += 1;
    }
    Ok(Histogram {
        bin_width,
        lo,
        counts,
    })
}
