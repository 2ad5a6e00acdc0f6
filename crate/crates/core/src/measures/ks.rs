use crate::error::{Error, Result};

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `D = sup |F_x - F_y|` over the pooled sample points, with right-continuous
/// empirical CDFs, plus the asymptotic Kolmogorov p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptySample(format!(
            "KS test needs two non-empty samples (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let d = ks_statistic_sorted(&xs, &ys);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, x.len(), y.len()),
    })
}

pub(crate) fn ks_statistic_sorted(xs: &[f64], ys: &[f64]) -> f64 {
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    d
}

/// `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)` with
/// `λ = (√n_e + 0.12 + 0.11/√n_e) D`.
pub fn ks_p_value(d: f64, nx: usize, ny: usize) -> f64 {
    let ne = (nx * ny) as f64 / (nx + ny) as f64;
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    kolmogorov_q(lambda)
}

pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sign = 2.0;
    let mut sum = 0.0;
    let mut prev_term = 0.0f64;
    for j in 1..=100 {
        let jf = j as f64;
        let term = sign * (a2 * jf * jf).exp();
        sum += term;
        if term.abs() <= 1e-10 * prev_term.abs() || term.abs() <= 1e-16 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        prev_term = term;
    }
    // no convergence: λ is tiny, the distribution mass is all above it
    1.0
}
