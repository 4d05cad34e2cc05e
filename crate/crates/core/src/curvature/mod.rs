//! Curvature of the support-projected Petz geometry: scalar curvature on the
//! active support, Gaussian curvature of two-dimensional slices, the Gauss
//! correction between them, step selection and the KSKD comparison formula.

pub mod brioschi;
pub mod riemann;
pub mod slice;

use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::geometry::PetzField;
use crate::support::{RegularityFlags, TauRule};

pub use brioschi::{brioschi_guard, brioschi_k, divergence_form_k, FirstFundamentalForm};
pub use riemann::{curvature_at, intrinsic_scalar_curvature, CurvatureTensors, FrozenChart, MetricChart};
pub use slice::{
    chart_directions, check_regular, e_orth_gauge, gauss_correction, leading_plane, slice_first_form,
    slice_k, slice_metric, GaussReport, SliceChart, SliceEmbedding,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurvatureConfig {
    /// Constant factor applied to the tensor before any curvature is taken.
    pub metric_scale: f64,
    pub tau: TauRule,
    pub gamma_min: f64,
    pub brioschi_eta: f64,
    pub brioschi_h: f64,
    /// Fixed step for the scalar curvature; adaptive when absent.
    pub h: Option<f64>,
    pub h_candidates: Vec<f64>,
    /// Bound on `|R_h - R_2h|` for an admissible step.
    pub noise_cap: f64,
    /// Minimum eigenvalue of `U^T P(theta) U` inside a frozen chart.
    pub min_conditioning: f64,
    /// Ridge `lambda` in `F + lambda I`.
    pub shrinkage: f64,
    /// Restrict to the active support; `false` uses `F` on all parameters.
    pub projected: bool,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        Self {
            metric_scale: 1.0,
            tau: TauRule::Default,
            gamma_min: 1e-8,
            brioschi_eta: 1e-10,
            brioschi_h: 2e-4,
            h: None,
            h_candidates: vec![1e-2, 1e-3, 1e-4, 1e-5],
            noise_cap: 1e-3,
            min_conditioning: 0.5,
            shrinkage: 0.0,
            projected: true,
        }
    }
}

impl CurvatureConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(QigError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("metric_scale", self.metric_scale)?;
        pos("gamma_min", self.gamma_min)?;
        pos("brioschi_eta", self.brioschi_eta)?;
        pos("brioschi_h", self.brioschi_h)?;
        pos("noise_cap", self.noise_cap)?;
        if let Some(h) = self.h {
            pos("h", h)?;
        }
        if self.h.is_none() && self.h_candidates.is_empty() {
            return Err(QigError::Config("h_candidates is empty".into()));
        }
        for &h in &self.h_candidates {
            pos("h_candidates", h)?;
        }
        if self.shrinkage < 0.0 {
            return Err(QigError::Config("shrinkage must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.min_conditioning) {
            return Err(QigError::Config("min_conditioning must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// `R_KSKD(C) = 2 (6 C^2 - 5) / (C^2 - 1)` on `[0, 1)`.
pub fn kskd(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(QigError::Domain(format!("concurrence {c} < 0")));
    }
    if c >= 1.0 {
        return Err(QigError::KskdPole(c));
    }
    let c2 = c * c;
    Ok(2.0 * (6.0 * c2 - 5.0) / (c2 - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCandidate {
    pub h: f64,
    pub r_h: Option<f64>,
    /// `|R_{h/2} - R_h|`.
    pub score: Option<f64>,
    /// `|R_h - R_{2h}|`.
    pub noise: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSelection {
    pub h_star: f64,
    pub r: f64,
    pub candidates: Vec<StepCandidate>,
}

/// Choose `h* in argmin |R_{h/2} - R_h|` among candidates with
/// `|R_h - R_{2h}| <= xi`. Exact ties go to the smallest `h`.
pub fn adaptive_h<F>(mut eval: F, candidates: &[f64], xi: f64) -> Result<StepSelection>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut cache: Vec<(f64, Option<f64>)> = Vec::new();
    let mut get = |h: f64| -> Option<f64> {
        if let Some(&(_, v)) = cache.iter().find(|(k, _)| *k == h) {
            return v;
        }
        let v = eval(h).ok().filter(|x| x.is_finite());
        cache.push((h, v));
        v
    };
    let mut out = Vec::with_capacity(candidates.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for &h in candidates {
        let r_h = get(h);
        let r_half = get(h / 2.0);
        let r_double = get(2.0 * h);
        let score = r_h.zip(r_half).map(|(a, b)| (b - a).abs());
        let noise = r_h.zip(r_double).map(|(a, b)| (a - b).abs());
        let accepted = matches!((score, noise), (Some(_), Some(n)) if n <= xi);
        if accepted {
            let s = score.unwrap_or(f64::INFINITY);
            let better = match best {
                None => true,
                Some((bs, bh, _)) => s < bs || (s == bs && h < bh),
            };
            if better {
                best = Some((s, h, r_h.unwrap_or(f64::NAN)));
            }
        }
        out.push(StepCandidate {
            h,
            r_h,
            score,
            noise,
            accepted,
        });
    }
    let (_, h_star, r) = best.ok_or(QigError::NoStableStep)?;
    Ok(StepSelection {
        h_star,
        r,
        candidates: out,
    })
}

/// All curvature quantities at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub theta: Vec<f64>,
    pub metric: String,
    pub k_slice: f64,
    pub xi: f64,
    pub k_ambient: f64,
    pub k_sectional: f64,
    pub r: f64,
    pub rank: usize,
    pub flags: RegularityFlags,
    pub h_star: f64,
    pub slice: SliceChart,
    pub embedding: SliceEmbedding,
    pub gap: f64,
    pub tau_used: f64,
    pub brioschi_ratio: f64,
    pub metric_scale: f64,
    pub steps: Vec<StepCandidate>,
}

/// Scalar curvature on the active support with the configured step rule.
pub fn scalar_curvature(field: &PetzField, theta: &[f64], cfg: &CurvatureConfig) -> Result<(f64, f64, Vec<StepCandidate>)> {
    let (chart, _) = FrozenChart::at(field, theta, cfg)?;
    let w0 = vec![0.0; chart.dim()];
    match cfg.h {
        Some(h) => Ok((curvature_at(&chart, &w0, h)?.scalar, h, Vec::new())),
        None => {
            let s = adaptive_h(|h| Ok(curvature_at(&chart, &w0, h)?.scalar), &cfg.h_candidates, cfg.noise_cap)?;
            Ok((s.r, s.h_star, s.candidates))
        }
    }
}

/// Full report at `theta`; the slice defaults to the leading active plane and is
/// embedded geodesically.
pub fn curvature_report(
    field: &PetzField,
    theta: &[f64],
    slice: Option<&SliceChart>,
    cfg: &CurvatureConfig,
) -> Result<CurvatureReport> {
    cfg.validate()?;
    let (chart, split) = FrozenChart::at(field, theta, cfg)?;
    let w0 = vec![0.0; chart.dim()];
    let (r, h_star, steps) = match cfg.h {
        Some(h) => (curvature_at(&chart, &w0, h)?.scalar, h, Vec::new()),
        None => {
            let s = adaptive_h(|h| Ok(curvature_at(&chart, &w0, h)?.scalar), &cfg.h_candidates, cfg.noise_cap)?;
            (s.r, s.h_star, s.candidates)
        }
    };
    let tensors = curvature_at(&chart, &w0, h_star)?;
    let plane = match slice {
        Some(s) => s.recentred(theta.to_vec()),
        None => leading_plane(field, theta, cfg)?,
    };
    let (a, b) = chart_directions(&chart, &plane);
    let embedding = SliceEmbedding::Geodesic;
    let gauss = gauss_correction(&chart, &tensors, a, b, embedding, cfg)?;
    let form = slice_first_form(field, &plane, cfg, 0.0, 0.0)?;
    Ok(CurvatureReport {
        theta: theta.to_vec(),
        metric: field.metric.label().to_string(),
        k_slice: gauss.k_slice,
        xi: gauss.xi,
        k_ambient: gauss.k_ambient,
        k_sectional: gauss.k_sectional,
        r,
        rank: split.rank,
        flags: split.flags(cfg.gamma_min, form.guard_ratio() >= cfg.brioschi_eta),
        h_star,
        slice: plane,
        embedding,
        gap: split.gap,
        tau_used: split.tau_used,
        brioschi_ratio: form.guard_ratio(),
        metric_scale: cfg.metric_scale,
        steps,
    })
}
