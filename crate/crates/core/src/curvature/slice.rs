//! Two-dimensional slices through parameter space, their first fundamental form,
//! the Gauss correction relative to the ambient support geometry, and the
//! entanglement-orthogonal gauge.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::geometry::PetzField;
use crate::support::{projected_metric, split_spectrum, split_with_rule};

use super::brioschi::{brioschi_guard, brioschi_k, FirstFundamentalForm};
use super::riemann::{CurvatureTensors, FrozenChart, MetricChart};
use super::CurvatureConfig;

/// `(u, v) -> theta0 + u e_u + v e_v` with orthonormal `e_u`, `e_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceChart {
    pub center: Vec<f64>,
    pub e_u: Vec<f64>,
    pub e_v: Vec<f64>,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SliceChart {
    /// Gram-Schmidt on `(a, b)`.
    pub fn new(center: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != center.len() || b.len() != center.len() {
            return Err(QigError::ParamCount {
                expected: center.len(),
                got: a.len().min(b.len()),
            });
        }
        let na = dotv(&a, &a).sqrt();
        if na == 0.0 {
            return Err(QigError::Domain("zero slice direction".into()));
        }
        let e_u: Vec<f64> = a.iter().map(|x| x / na).collect();
        let p = dotv(&e_u, &b);
        let w: Vec<f64> = b.iter().zip(&e_u).map(|(y, x)| y - p * x).collect();
        let nw = dotv(&w, &w).sqrt();
        if nw < 1e-12 * dotv(&b, &b).sqrt().max(1.0) {
            return Err(QigError::Domain("slice directions are parallel".into()));
        }
        let e_v = w.iter().map(|x| x / nw).collect();
        Ok(Self { center, e_u, e_v })
    }

    /// Rotated coordinates `x = (t_i + t_j)/sqrt2`, `y = (t_i - t_j)/sqrt2`.
    pub fn diagonal(center: Vec<f64>, i: usize, j: usize) -> Result<Self> {
        let m = center.len();
        if i >= m || j >= m || i == j {
            return Err(QigError::Domain(format!("bad slice pair ({i}, {j})")));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        a[i] = s;
        a[j] = s;
        b[i] = s;
        b[j] = -s;
        Ok(Self { center, e_u: a, e_v: b })
    }

    /// Coordinate plane `(t_i, t_j)`.
    pub fn coordinate(center: Vec<f64>, i: usize, j: usize) -> Result<Self> {
        let m = center.len();
        if i >= m || j >= m || i == j {
            return Err(QigError::Domain(format!("bad slice pair ({i}, {j})")));
        }
        let mut a = vec![0.0; m];
        let mut b = vec![0.0; m];
        a[i] = 1.0;
        b[j] = 1.0;
        Ok(Self { center, e_u: a, e_v: b })
    }

    pub fn point(&self, u: f64, v: f64) -> Vec<f64> {
        (0..self.center.len())
            .map(|k| self.center[k] + u * self.e_u[k] + v * self.e_v[k])
            .collect()
    }

    /// In-plane rotation by `phi`.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let e_u = (0..self.e_u.len()).map(|k| c * self.e_u[k] + s * self.e_v[k]).collect();
        let e_v = (0..self.e_u.len()).map(|k| -s * self.e_u[k] + c * self.e_v[k]).collect();
        Self {
            center: self.center.clone(),
            e_u,
            e_v,
        }
    }

    pub fn recentred(&self, center: Vec<f64>) -> Self {
        Self {
            center,
            e_u: self.e_u.clone(),
            e_v: self.e_v.clone(),
        }
    }
}

/// Metric used on slices: `scale * P F P` (or `scale * F` when unprojected).
pub fn slice_metric(field: &PetzField, theta: &[f64], cfg: &CurvatureConfig) -> Result<DMatrix<f64>> {
    let f = field.fisher(theta)?;
    let f = if cfg.shrinkage > 0.0 {
        let n = f.nrows();
        f + DMatrix::identity(n, n) * cfg.shrinkage
    } else {
        f
    };
    let g = if cfg.projected {
        projected_metric(&f, &split_with_rule(&f, cfg.tau))
    } else {
        f
    };
    Ok(g * cfg.metric_scale)
}

/// `(E, F, G)` of the slice at `(u, v)`.
pub fn slice_first_form(
    field: &PetzField,
    chart: &SliceChart,
    cfg: &CurvatureConfig,
    u: f64,
    v: f64,
) -> Result<FirstFundamentalForm> {
    let g = slice_metric(field, &chart.point(u, v), cfg)?;
    let a = DVector::from_column_slice(&chart.e_u);
    let b = DVector::from_column_slice(&chart.e_v);
    Ok(FirstFundamentalForm::new(
        (a.transpose() * &g * &a)[0],
        (a.transpose() * &g * &b)[0],
        (b.transpose() * &g * &b)[0],
    ))
}

/// Regularity of the support split at the slice centre.
pub fn check_regular(field: &PetzField, theta: &[f64], cfg: &CurvatureConfig) -> Result<usize> {
    let f = field.fisher(theta)?;
    let s = split_with_rule(&f, cfg.tau);
    if s.irregular {
        return Err(QigError::IrregularSplit);
    }
    if s.rank < 2 {
        return Err(QigError::NoTwoPlane(s.rank));
    }
    if s.rank < s.eigen.dim() && s.gap < cfg.gamma_min {
        return Err(QigError::GapGuard {
            gap: s.gap,
            min: cfg.gamma_min,
        });
    }
    Ok(s.rank)
}

/// Gaussian curvature of a linear slice at its centre with all guards.
pub fn slice_k(field: &PetzField, chart: &SliceChart, cfg: &CurvatureConfig) -> Result<f64> {
    check_regular(field, &chart.center, cfg)?;
    brioschi_guard(&slice_first_form(field, chart, cfg, 0.0, 0.0)?, cfg.brioschi_eta)?;
    brioschi_k(
        |u, v| slice_first_form(field, chart, cfg, u, v),
        0.0,
        0.0,
        cfg.brioschi_h,
        cfg.brioschi_eta,
    )
}

/// Rotate the slice so `e_u` follows the in-plane gradient of concurrence and
/// `C_v = 0`. Returns the rotated chart and the angle used.
pub fn e_orth_gauge(field: &PetzField, chart: &SliceChart) -> Result<(SliceChart, f64)> {
    let j = field.reduced(&chart.center)?;
    let grad: Vec<f64> = (0..j.n_params()).map(|k| j.dconcurrence(k)).collect();
    let cu = dotv(&grad, &chart.e_u);
    let cv = dotv(&grad, &chart.e_v);
    let scale = dotv(&grad, &grad).sqrt().max(1.0);
    if !(cu.hypot(cv) > 1e-12 * scale) {
        return Err(QigError::GaugeUndefined);
    }
    let phi = if cu == 0.0 {
        std::f64::consts::FRAC_PI_2 * cv.signum()
    } else {
        (cv / cu).atan()
    };
    Ok((chart.rotated(phi), phi))
}

/// How the slice is embedded into the frozen chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceEmbedding {
    /// `w = u a + v b`.
    Linear,
    /// `w = x - Gamma(x, x) / 2`, `x = u a + v b`: totally geodesic at the base point.
    Geodesic,
}

/// Slice `(u, v) -> w(u, v)` through the origin of a frozen chart.
pub struct ChartSlice<'c, 'a> {
    pub chart: &'c FrozenChart<'a>,
    pub tensors: &'c CurvatureTensors,
    pub a: DVector<f64>,
    pub b: DVector<f64>,
    pub embedding: SliceEmbedding,
}

impl ChartSlice<'_, '_> {
    /// `w`, `w_u`, `w_v`.
    pub fn embed(&self, u: f64, v: f64) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let x = &self.a * u + &self.b * v;
        match self.embedding {
            SliceEmbedding::Linear => (x, self.a.clone(), self.b.clone()),
            SliceEmbedding::Geodesic => {
                let t = self.tensors;
                let w = &x - t.gamma(&x, &x) * 0.5;
                let wu = &self.a - t.gamma(&self.a, &x);
                let wv = &self.b - t.gamma(&self.b, &x);
                (w, wu, wv)
            }
        }
    }

    pub fn form(&self, u: f64, v: f64) -> Result<FirstFundamentalForm> {
        let (w, wu, wv) = self.embed(u, v);
        let g = self.chart.metric(w.as_slice())?;
        Ok(FirstFundamentalForm::new(
            (wu.transpose() * &g * &wu)[0],
            (wu.transpose() * &g * &wv)[0],
            (wv.transpose() * &g * &wv)[0],
        ))
    }

    /// Second derivatives `w_uu`, `w_uv`, `w_vv` at the origin.
    fn second(&self) -> [DVector<f64>; 3] {
        match self.embedding {
            SliceEmbedding::Linear => {
                let z = DVector::zeros(self.a.len());
                [z.clone(), z.clone(), z]
            }
            SliceEmbedding::Geodesic => {
                let t = self.tensors;
                [
                    -t.gamma(&self.a, &self.a),
                    -t.gamma(&self.a, &self.b),
                    -t.gamma(&self.b, &self.b),
                ]
            }
        }
    }
}

/// Slice and ambient curvature at the base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussReport {
    pub k_slice: f64,
    pub xi: f64,
    pub k_ambient: f64,
    /// Sectional curvature of the tangent plane from the Riemann tensor.
    pub k_sectional: f64,
}

/// Gauss correction of the slice spanned by chart directions `a`, `b`.
pub fn gauss_correction(
    chart: &FrozenChart<'_>,
    tensors: &CurvatureTensors,
    a: DVector<f64>,
    b: DVector<f64>,
    embedding: SliceEmbedding,
    cfg: &CurvatureConfig,
) -> Result<GaussReport> {
    let s = ChartSlice {
        chart,
        tensors,
        a,
        b,
        embedding,
    };
    let k_slice = brioschi_k(|u, v| s.form(u, v), 0.0, 0.0, cfg.brioschi_h, cfg.brioschi_eta)?;
    let g = &tensors.g;
    let ip = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * g * y)[0];
    // covariant second derivatives along the slice at the origin
    let [wuu, wuv, wvv] = s.second();
    let (a, b) = (&s.a, &s.b);
    let nab = [
        wuu + tensors.gamma(a, a),
        wuv + tensors.gamma(a, b),
        wvv + tensors.gamma(b, b),
    ];
    // normal projection: orthogonal complement of span{a, b}
    let t = DMatrix::from_columns(&[a.clone(), b.clone()]);
    let gram = t.transpose() * g * &t;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| QigError::Domain("degenerate slice tangent".into()))?;
    let normal = |x: &DVector<f64>| x - &t * (&gram_inv * (t.transpose() * g * x));
    let [baa, bab, bbb] = [normal(&nab[0]), normal(&nab[1]), normal(&nab[2])];
    // orthonormal frame E1 = a/|a|, E2 = (b - <b,E1>E1)/|.|
    let na = ip(a, a).sqrt();
    let c = ip(a, b) / na;
    let nb = (ip(b, b) - c * c).sqrt();
    // E1 = a / na, E2 = (b - (c / na) a) / nb
    let (k1, k2) = (1.0 / na, 1.0 / nb);
    let m = c / na;
    let b11 = &baa * (k1 * k1);
    let b12 = (&bab - &baa * m) * (k1 * k2);
    let b22 = (&bbb - &bab * (2.0 * m) + &baa * (m * m)) * (k2 * k2);
    let xi = ip(&b11, &b22) - ip(&b12, &b12);
    Ok(GaussReport {
        k_slice,
        xi,
        k_ambient: k_slice - xi,
        k_sectional: tensors.sectional(&s.a, &s.b),
    })
}

/// Express a parameter-space slice in frozen-chart directions.
pub fn chart_directions(chart: &FrozenChart<'_>, slice: &SliceChart) -> (DVector<f64>, DVector<f64>) {
    let u = &chart.frame;
    (
        u.transpose() * DVector::from_column_slice(&slice.e_u),
        u.transpose() * DVector::from_column_slice(&slice.e_v),
    )
}

/// Plane of the two leading active eigenvectors of `F(theta0)`.
pub fn leading_plane(field: &PetzField, theta0: &[f64], cfg: &CurvatureConfig) -> Result<SliceChart> {
    let f = field.fisher(theta0)?;
    let s = split_spectrum(&f, cfg.tau.threshold(f.amax()));
    if s.rank < 2 {
        return Err(QigError::NoTwoPlane(s.rank));
    }
    let v = &s.eigen.vectors;
    SliceChart::new(
        theta0.to_vec(),
        v.column(0).iter().copied().collect(),
        v.column(1).iter().copied().collect(),
    )
}
