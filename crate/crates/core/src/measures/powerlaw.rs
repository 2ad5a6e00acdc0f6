use crate::error::{Error, Result};

/// Continuous power-law fit with the `d_min - 1/2` continuity correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub d_min: usize,
    pub sample_size: usize,
    pub log_likelihood: f64,
}

fn retained_log_sum(degrees: &[usize], d_min: usize) -> (usize, f64) {
    let x_min = d_min as f64 - 0.5;
    degrees
        .iter()
        .filter(|&&d| d >= d_min)
        .fold((0, 0.0), |(m, s), &d| (m + 1, s + (d as f64 / x_min).ln()))
}

/// `α = 1 + m / Σ ln(d_i / (d_min - 1/2))` over degrees `≥ d_min`.
pub fn powerlaw_alpha_mle(degrees: &[usize], d_min: usize) -> Result<PowerLawFit> {
    if d_min < 1 {
        return Err(Error::Degenerate("d_min must be at least 1".into()));
    }
    let (m, log_sum) = retained_log_sum(degrees, d_min);
    if m == 0 {
        return Err(Error::Degenerate(format!("no degree is >= d_min = {d_min}")));
    }
    if log_sum <= 0.0 {
        return Err(Error::Degenerate("log-sum of retained degrees is zero".into()));
    }
    let alpha = 1.0 + m as f64 / log_sum;
    Ok(PowerLawFit {
        alpha,
        d_min,
        sample_size: m,
        log_likelihood: log_likelihood(degrees, d_min, alpha),
    })
}

/// Log-likelihood of the degrees `≥ d_min` under density
/// `(α-1)/x_min · (x/x_min)^{-α}`, `x_min = d_min - 1/2`.
pub fn log_likelihood(degrees: &[usize], d_min: usize, alpha: f64) -> f64 {
    let x_min = d_min as f64 - 0.5;
    let (m, log_sum) = retained_log_sum(degrees, d_min);
    let m = m as f64;
    m * (alpha - 1.0).ln() - m * x_min.ln() - alpha * log_sum
}
