//! Statistical noticeability measures: two-sample KS tests on per-node
//! statistics and the power-law likelihood-ratio test on degrees.

mod ks;
mod powerlaw;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ks::{kolmogorov_q, ks_p_value, ks_two_sample, KsResult};
pub use powerlaw::{log_likelihood, powerlaw_alpha_mle, PowerLawFit};

use crate::error::{Error, Result};
use crate::graph::{AttackPair, Graph};
use crate::stats;

pub const SIGNIFICANCE: f64 = 0.05;
pub const DEFAULT_D_MIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureKind {
    #[serde(rename = "degree_ks")]
    DegreeKs,
    #[serde(rename = "clscoef_ks")]
    ClsCoefKs,
    #[serde(rename = "degree_lr")]
    DegreeLr,
    #[serde(rename = "homophily_ks")]
    HomophKs,
    #[serde(rename = "hidenseek")]
    HideNSeek,
}

impl MeasureKind {
    pub const STATISTICAL: [MeasureKind; 4] = [
        MeasureKind::DegreeKs,
        MeasureKind::ClsCoefKs,
        MeasureKind::DegreeLr,
        MeasureKind::HomophKs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::DegreeKs => "degree_ks",
            MeasureKind::ClsCoefKs => "clscoef_ks",
            MeasureKind::DegreeLr => "degree_lr",
            MeasureKind::HomophKs => "homophily_ks",
            MeasureKind::HideNSeek => "hidenseek",
        }
    }

    pub fn is_statistical(self) -> bool {
        self != MeasureKind::HideNSeek
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "degree_ks" => MeasureKind::DegreeKs,
            "clscoef_ks" => MeasureKind::ClsCoefKs,
            "degree_lr" => MeasureKind::DegreeLr,
            "homophily_ks" => MeasureKind::HomophKs,
            "hidenseek" => MeasureKind::HideNSeek,
            other => return Err(Error::Usage(format!("unknown measure `{other}`"))),
        })
    }
}

/// Outcome of one noticeability evaluation. `statistic` is `None` when the
/// measure is undefined for the input (e.g. an AUROC with a single class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoticeabilityReport {
    pub measure: MeasureKind,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub noticeable: Option<bool>,
}

impl NoticeabilityReport {
    fn from_test(measure: MeasureKind, statistic: f64, p_value: f64) -> Self {
        NoticeabilityReport {
            measure,
            statistic: Some(statistic),
            p_value: Some(p_value),
            threshold: SIGNIFICANCE,
            noticeable: Some(p_value < SIGNIFICANCE),
        }
    }

    /// The scalar an adaptive attacker minimizes; undefined reports count as 0.
    pub fn value(&self) -> f64 {
        self.statistic.unwrap_or(0.0)
    }
}

/// Per-node statistic compared by the KS measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatistic {
    Degree,
    Clustering,
    Homophily,
}

impl NodeStatistic {
    pub fn compute(self, g: &Graph) -> Vec<f64> {
        match self {
            NodeStatistic::Degree => stats::degrees(g).into_iter().map(|d| d as f64).collect(),
            NodeStatistic::Clustering => stats::clustering_coefficients(g),
            NodeStatistic::Homophily => stats::node_homophily(g),
        }
    }

    pub fn at(self, g: &Graph, i: usize) -> f64 {
        match self {
            NodeStatistic::Degree => g.degree(i) as f64,
            NodeStatistic::Clustering => stats::clustering_at(g, i),
            NodeStatistic::Homophily => stats::homophily_at(g, i),
        }
    }

    pub fn for_measure(kind: MeasureKind) -> Option<Self> {
        match kind {
            MeasureKind::DegreeKs => Some(NodeStatistic::Degree),
            MeasureKind::ClsCoefKs => Some(NodeStatistic::Clustering),
            MeasureKind::HomophKs => Some(NodeStatistic::Homophily),
            _ => None,
        }
    }
}

/// Likelihood-ratio statistic for "one power law" versus "one per graph".
pub fn lr_statistic(deg: &[usize], deg_hat: &[usize], d_min: usize) -> Result<f64> {
    let fit_a = powerlaw_alpha_mle(deg, d_min)?;
    let fit_b = powerlaw_alpha_mle(deg_hat, d_min)?;
    let pooled: Vec<usize> = deg.iter().chain(deg_hat).copied().collect();
    let fit_pooled = powerlaw_alpha_mle(&pooled, d_min)?;
    let lambda = 2.0 * (fit_a.log_likelihood + fit_b.log_likelihood - fit_pooled.log_likelihood);
    Ok(lambda.max(0.0))
}

/// Upper tail of χ² with one degree of freedom.
pub fn chi2_1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::erf::erfc((x / 2.0).sqrt()).clamp(0.0, 1.0)
}

pub fn lr_degree_test(g: &Graph, g_hat: &Graph, d_min: usize) -> Result<NoticeabilityReport> {
    let lambda = lr_statistic(&stats::degrees(g), &stats::degrees(g_hat), d_min)?;
    Ok(lr_report(lambda))
}

pub(crate) fn lr_report(lambda: f64) -> NoticeabilityReport {
    NoticeabilityReport::from_test(MeasureKind::DegreeLr, lambda, chi2_1_sf(lambda))
}

pub(crate) fn ks_report(kind: MeasureKind, x: &[f64], y: &[f64]) -> Result<NoticeabilityReport> {
    let r = ks_two_sample(x, y)?;
    Ok(NoticeabilityReport::from_test(kind, r.statistic, r.p_value))
}

/// One of the four statistical measures on `pair`.
pub fn statistical_measure(kind: MeasureKind, pair: &AttackPair) -> Result<NoticeabilityReport> {
    let (g, h) = (&pair.original, &pair.attacked);
    match kind {
        MeasureKind::DegreeLr => lr_degree_test(g, h, DEFAULT_D_MIN),
        MeasureKind::HideNSeek => Err(Error::Usage(
            "hidenseek is not a statistical measure".into(),
        )),
        _ => {
            let stat = NodeStatistic::for_measure(kind).expect("KS measure");
            if stat == NodeStatistic::Homophily && !g.has_features() {
                return Err(Error::Shape("homophily needs node features".into()));
            }
            ks_report(kind, &stat.compute(g), &stat.compute(h))
        }
    }
}
