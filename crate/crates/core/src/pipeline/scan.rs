//! Guarded curvature scans over coordinate-pair slices.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{check_regular, slice_k, CurvatureConfig, SliceChart};
use crate::error::{QigError, Result};
use crate::geometry::PetzField;
use crate::hea::entropy_from_concurrence;
use crate::linops::eigh_hermitian2;
use crate::support::TauRule;

use super::stats::pearson;
use super::{field_for, FieldOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub pairs: Vec<(usize, usize)>,
    /// Points per axis for curvature-surface grids.
    pub grid: usize,
    /// Half-width of the surface grids in slice coordinates.
    pub span: f64,
    /// Explicit centres; when absent `n_centers` are drawn from `[0, 2 pi)^4`.
    pub centers: Option<Vec<Vec<f64>>>,
    pub n_centers: usize,
    pub seed: u64,
    pub gamma_min: f64,
    pub brioschi_min: f64,
    pub brioschi_h: f64,
    pub tau: TauRule,
    pub metric: String,
    pub metric_scale: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            pairs: vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            grid: 100,
            span: 0.5,
            centers: None,
            n_centers: 250,
            seed: 42,
            gamma_min: 1e-8,
            brioschi_min: 1e-12,
            brioschi_h: 2e-4,
            tau: TauRule::Default,
            metric: "sld".into(),
            metric_scale: 1.0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 3 {
            return Err(QigError::Config("grid must be at least 3".into()));
        }
        if !(self.gamma_min > 0.0 && self.brioschi_min > 0.0 && self.brioschi_h > 0.0 && self.metric_scale > 0.0) {
            return Err(QigError::Config("guards, step and scale must be positive".into()));
        }
        if self.pairs.iter().any(|&(i, j)| i == j || i > 3 || j > 3) {
            return Err(QigError::Config("pairs must be distinct indices in 0..4".into()));
        }
        if let Some(c) = &self.centers {
            if c.iter().any(|t| t.len() != 4) {
                return Err(QigError::Config("centres must have four parameters".into()));
            }
        }
        Ok(())
    }

    pub fn curvature(&self) -> CurvatureConfig {
        CurvatureConfig {
            metric_scale: self.metric_scale,
            tau: self.tau,
            gamma_min: self.gamma_min,
            brioschi_eta: self.brioschi_min,
            brioschi_h: self.brioschi_h,
            ..CurvatureConfig::default()
        }
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        match &self.centers {
            Some(c) => c.clone(),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let tau = std::f64::consts::TAU;
                (0..self.n_centers)
                    .map(|_| (0..4).map(|_| rng.random_range(0.0..tau)).collect())
                    .collect()
            }
        }
    }
}

fn pair_label(p: (usize, usize)) -> String {
    format!("t{}-t{}", p.0, p.1)
}

/// One accepted slice point; columns follow the published sample table, then
/// provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub pair: String,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub lambda_max: f64,
    pub s_bits: f64,
    pub k: f64,
    pub r: f64,
    pub c: f64,
    /// User diagnostic column; empty by default.
    pub phi: Option<f64>,
    pub h: f64,
    /// `|K(h) - K(h/2)|`, the step sensitivity of `K`.
    pub k_step_change: f64,
    pub brioschi_ratio: f64,
    pub gap: f64,
    pub rank: usize,
    pub rho_lambda_max: f64,
    pub metric_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Gap,
    Brioschi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedPoint {
    pub pair: String,
    pub theta: Vec<f64>,
    pub cause: Rejection,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub pair: String,
    pub attempted: usize,
    pub valid: usize,
    pub gap_rejected: usize,
    pub brioschi_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub counts: Vec<PairCounts>,
    pub attempted: usize,
    pub valid: usize,
    pub gap_rejected: usize,
    pub brioschi_rejected: usize,
    /// Means of `lambda_max, S, K, |r|, C`.
    pub means: Option<[f64; 5]>,
    /// Pearson matrix over `K, S, |r|, C`.
    pub correlation: [[Option<f64>; 4]; 4],
    pub k_positive: usize,
    pub k_negative: usize,
}

impl ScanSummary {
    pub fn corr(&self, a: usize, b: usize) -> Option<f64> {
        self.correlation[a][b]
    }
}

pub const CORR_LABELS: [&str; 4] = ["K", "S", "|r|", "C"];

#[derive(Debug, Clone, PartialEq)]
pub enum ScanOutcome {
    Valid(ScanRow),
    Rejected(RejectedPoint),
}

/// Curvature and state data at one slice centre.
pub fn scan_point(field: &PetzField, chart: &SliceChart, pair: (usize, usize), cfg: &ScanConfig) -> ScanOutcome {
    let ccfg = cfg.curvature();
    let theta = chart.center.clone();
    let reject = |cause, e: QigError| {
        ScanOutcome::Rejected(RejectedPoint {
            pair: pair_label(pair),
            theta: theta.clone(),
            cause,
            detail: e.to_string(),
        })
    };
    let rank = match check_regular(field, &theta, &ccfg) {
        Ok(r) => r,
        Err(e) => return reject(Rejection::Gap, e),
    };
    let k = match slice_k(field, chart, &ccfg) {
        Ok(k) => k,
        Err(e @ QigError::Brioschi { .. }) => return reject(Rejection::Brioschi, e),
        Err(e) => return reject(Rejection::Gap, e),
    };
    let half = CurvatureConfig {
        brioschi_h: 0.5 * ccfg.brioschi_h,
        ..ccfg.clone()
    };
    let k_step_change = slice_k(field, chart, &half).map_or(f64::INFINITY, |k2| (k - k2).abs());
    let (f, jet) = match (field.fisher(&theta), field.reduced(&theta)) {
        (Ok(f), Ok(j)) => (f, j),
        (Err(e), _) | (_, Err(e)) => return reject(Rejection::Gap, e),
    };
    let split = crate::support::split_with_rule(&f, ccfg.tau);
    let form = crate::curvature::slice_first_form(field, chart, &ccfg, 0.0, 0.0).map(|f| f.guard_ratio());
    let st = jet.state();
    let c = st.concurrence().min(1.0);
    let (lam, _) = eigh_hermitian2(&jet.rho);
    ScanOutcome::Valid(ScanRow {
        pair: pair_label(pair),
        t0: theta[0],
        t1: theta[1],
        t2: theta[2],
        t3: theta[3],
        lambda_max: split.lambda_max(),
        s_bits: entropy_from_concurrence(c),
        k,
        r: st.radius(),
        c,
        phi: None,
        h: ccfg.brioschi_h,
        k_step_change,
        brioschi_ratio: form.unwrap_or(f64::NAN),
        gap: split.gap,
        rank,
        rho_lambda_max: lam[0],
        metric_scale: ccfg.metric_scale,
    })
}

/// Seeded scan over every centre and pair; output order is centre-major, then pair.
pub fn slice_scan(cfg: &ScanConfig, opts: &FieldOptions) -> Result<(Vec<ScanRow>, Vec<RejectedPoint>, ScanSummary)> {
    cfg.validate()?;
    let field = field_for(&cfg.metric, opts)?;
    let tasks: Vec<(Vec<f64>, (usize, usize))> = cfg
        .centers()
        .into_iter()
        .flat_map(|c| cfg.pairs.iter().map(move |&p| (c.clone(), p)))
        .collect();
    let outcomes: Vec<ScanOutcome> = tasks
        .par_iter()
        .map(|(c, p)| match SliceChart::diagonal(c.clone(), p.0, p.1) {
            Ok(chart) => scan_point(&field, &chart, *p, cfg),
            Err(e) => ScanOutcome::Rejected(RejectedPoint {
                pair: pair_label(*p),
                theta: c.clone(),
                cause: Rejection::Gap,
                detail: e.to_string(),
            }),
        })
        .collect();
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for o in outcomes {
        match o {
            ScanOutcome::Valid(r) => rows.push(r),
            ScanOutcome::Rejected(r) => rejected.push(r),
        }
    }
    let summary = summarize(&cfg.pairs, &rows, &rejected);
    Ok((rows, rejected, summary))
}

pub fn summarize(pairs: &[(usize, usize)], rows: &[ScanRow], rejected: &[RejectedPoint]) -> ScanSummary {
    let counts: Vec<PairCounts> = pairs
        .iter()
        .map(|&p| {
            let label = pair_label(p);
            let valid = rows.iter().filter(|r| r.pair == label).count();
            let gap = rejected.iter().filter(|r| r.pair == label && r.cause == Rejection::Gap).count();
            let bri = rejected.iter().filter(|r| r.pair == label && r.cause == Rejection::Brioschi).count();
            PairCounts {
                pair: label,
                attempted: valid + gap + bri,
                valid,
                gap_rejected: gap,
                brioschi_rejected: bri,
            }
        })
        .collect();
    let cols: [Vec<f64>; 4] = [
        rows.iter().map(|r| r.k).collect(),
        rows.iter().map(|r| r.s_bits).collect(),
        rows.iter().map(|r| r.r).collect(),
        rows.iter().map(|r| r.c).collect(),
    ];
    let mut correlation = [[None; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            correlation[a][b] = pearson(&cols[a], &cols[b]);
        }
    }
    let n = rows.len() as f64;
    let means = (!rows.is_empty()).then(|| {
        [
            rows.iter().map(|r| r.lambda_max).sum::<f64>() / n,
            cols[1].iter().sum::<f64>() / n,
            cols[0].iter().sum::<f64>() / n,
            cols[2].iter().sum::<f64>() / n,
            cols[3].iter().sum::<f64>() / n,
        ]
    });
    ScanSummary {
        attempted: counts.iter().map(|c| c.attempted).sum(),
        valid: rows.len(),
        gap_rejected: counts.iter().map(|c| c.gap_rejected).sum(),
        brioschi_rejected: counts.iter().map(|c| c.brioschi_rejected).sum(),
        counts,
        means,
        correlation,
        k_positive: rows.iter().filter(|r| r.k > 0.0).count(),
        k_negative: rows.iter().filter(|r| r.k < 0.0).count(),
    }
}

pub fn write_rows_csv<W: Write>(rows: &[ScanRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// `K(x, y)` on an `n x n` grid of `[-span, span]^2` around the slice centre.
pub fn slice_grid(field: &PetzField, chart: &SliceChart, n: usize, span: f64, cfg: &CurvatureConfig) -> Vec<(f64, f64, Option<f64>)> {
    let coords: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    let pts: Vec<(f64, f64)> = coords.iter().flat_map(|&x| coords.iter().map(move |&y| (x, y))).collect();
    pts.par_iter()
        .map(|&(x, y)| {
            let c = chart.recentred(chart.point(x, y));
            (x, y, slice_k(field, &c, cfg).ok())
        })
        .collect()
}

/// Whitespace-separated `x y K` triples with a blank line between `x` rows;
/// rejected points are written as `NaN`.
pub fn write_gnuplot_grid<W: Write>(grid: &[(f64, f64, Option<f64>)], mut w: W) -> Result<()> {
    let mut last_x = None;
    for &(x, y, k) in grid {
        if last_x.is_some_and(|lx| lx != x) {
            writeln!(w)?;
        }
        last_x = Some(x);
        match k {
            Some(k) => writeln!(w, "{x:.6} {y:.6} {k:.10e}")?,
            None => writeln!(w, "{x:.6} {y:.6} NaN")?,
        }
    }
    Ok(())
}
