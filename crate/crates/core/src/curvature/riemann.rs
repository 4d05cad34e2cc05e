//! Christoffel symbols, Riemann, Ricci and scalar curvature of a metric given in a
//! chart, and the frozen active-frame chart on the support of a Petz tensor.

use nalgebra::{DMatrix, DVector};

use crate::error::{QigError, Result};
use crate::geometry::PetzField;
use crate::linops::{eigh_sym, SymMatrix};
use crate::support::{
    projected_metric, projected_metric_derivative, split_spectrum, split_with_rule, SupportSplit,
};

use super::CurvatureConfig;

/// A Riemannian metric in local coordinates with exact first derivatives.
pub trait MetricChart {
    fn dim(&self) -> usize;
    fn metric(&self, w: &[f64]) -> Result<SymMatrix>;
    /// `G(w)` and `d G / d w_k` for each `k`.
    fn metric_with_derivative(&self, w: &[f64]) -> Result<(SymMatrix, Vec<SymMatrix>)>;
}

/// Curvature data at one point of a chart. Indices are `[rho][mu][nu]` for
/// `Gamma^rho_{mu nu}` and `[rho][sigma][mu][nu]` for `R^rho_{sigma mu nu}`.
#[derive(Debug, Clone)]
pub struct CurvatureTensors {
    pub g: SymMatrix,
    pub ginv: SymMatrix,
    pub dg: Vec<SymMatrix>,
    pub christoffel: Vec<Vec<Vec<f64>>>,
    pub riemann: Vec<Vec<Vec<Vec<f64>>>>,
    pub ricci: SymMatrix,
    pub scalar: f64,
}

impl CurvatureTensors {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `Gamma(x, y)^rho = Gamma^rho_{mu nu} x^mu y^nu`.
    pub fn gamma(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(n, |rho, _| {
            let mut s = 0.0;
            for mu in 0..n {
                for nu in 0..n {
                    s += self.christoffel[rho][mu][nu] * x[mu] * y[nu];
                }
            }
            s
        })
    }

    /// `R(X, Y, Y, X) = <R(X, Y) Y, X>`.
    pub fn riemann_xyyx(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for rho in 0..n {
            let mut v = 0.0;
            for sigma in 0..n {
                for mu in 0..n {
                    for nu in 0..n {
                        v += self.riemann[rho][sigma][mu][nu] * y[sigma] * x[mu] * y[nu];
                    }
                }
            }
            for alpha in 0..n {
                s += self.g[(alpha, rho)] * x[alpha] * v;
            }
        }
        s
    }

    /// Sectional curvature of `span{x, y}`.
    pub fn sectional(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let xx = (x.transpose() * &self.g * x)[0];
        let yy = (y.transpose() * &self.g * y)[0];
        let xy = (x.transpose() * &self.g * y)[0];
        self.riemann_xyyx(x, y) / (xx * yy - xy * xy)
    }
}

fn inverse(g: &SymMatrix) -> Result<SymMatrix> {
    let e = eigh_sym(g);
    let n = g.nrows();
    let lmin = e.values[n - 1];
    if !(lmin > 0.0) {
        return Err(QigError::RankDeficient(lmin));
    }
    let mut inv = DMatrix::zeros(n, n);
    for k in 0..n {
        let v = e.vectors.column(k);
        inv += (v * v.transpose()) / e.values[k];
    }
    Ok(inv)
}

fn christoffel_from(ginv: &SymMatrix, dg: &[SymMatrix]) -> Vec<Vec<Vec<f64>>> {
    let n = ginv.nrows();
    let mut gam = vec![vec![vec![0.0; n]; n]; n];
    for rho in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut s = 0.0;
                for sigma in 0..n {
                    s += ginv[(rho, sigma)]
                        * (dg[mu][(sigma, nu)] + dg[nu][(sigma, mu)] - dg[sigma][(mu, nu)]);
                }
                gam[rho][mu][nu] = 0.5 * s;
                gam[rho][nu][mu] = 0.5 * s;
            }
        }
    }
    gam
}

/// All curvature tensors at `w0`; second metric derivatives are centred
/// differences of the exact first derivatives with step `h`.
pub fn curvature_at(chart: &dyn MetricChart, w0: &[f64], h: f64) -> Result<CurvatureTensors> {
    let n = chart.dim();
    if n < 2 {
        return Err(QigError::NoTwoPlane(n));
    }
    let (g, dg) = chart.metric_with_derivative(w0)?;
    let ginv = inverse(&g)?;
    // ddg[lambda][mu] = d_lambda d_mu G
    let mut ddg = Vec::with_capacity(n);
    for lam in 0..n {
        let mut wp = w0.to_vec();
        let mut wm = w0.to_vec();
        wp[lam] += h;
        wm[lam] -= h;
        let (_, dp) = chart.metric_with_derivative(&wp)?;
        let (_, dm) = chart.metric_with_derivative(&wm)?;
        let row: Vec<SymMatrix> = (0..n).map(|mu| (&dp[mu] - &dm[mu]) / (2.0 * h)).collect();
        ddg.push(row);
    }
    // symmetrise mixed partials
    for a in 0..n {
        for b in a + 1..n {
            let s = 0.5 * (&ddg[a][b] + &ddg[b][a]);
            ddg[a][b] = s.clone();
            ddg[b][a] = s;
        }
    }
    let gam = christoffel_from(&ginv, &dg);
    // d_lambda Gamma^rho_{mu nu}
    let mut dgam = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for lam in 0..n {
        let dginv = -(&ginv * &dg[lam] * &ginv);
        for rho in 0..n {
            for mu in 0..n {
                for nu in mu..n {
                    let mut s = 0.0;
                    for sigma in 0..n {
                        let lower = dg[mu][(sigma, nu)] + dg[nu][(sigma, mu)] - dg[sigma][(mu, nu)];
                        let dlower = ddg[lam][mu][(sigma, nu)] + ddg[lam][nu][(sigma, mu)]
                            - ddg[lam][sigma][(mu, nu)];
                        s += dginv[(rho, sigma)] * lower + ginv[(rho, sigma)] * dlower;
                    }
                    dgam[lam][rho][mu][nu] = 0.5 * s;
                    dgam[lam][rho][nu][mu] = 0.5 * s;
                }
            }
        }
    }
    let mut riem = vec![vec![vec![vec![0.0; n]; n]; n]; n];
    for rho in 0..n {
        for sigma in 0..n {
            for mu in 0..n {
                for nu in 0..n {
                    let mut v = dgam[mu][rho][nu][sigma] - dgam[nu][rho][mu][sigma];
                    for l in 0..n {
                        v += gam[rho][mu][l] * gam[l][nu][sigma] - gam[rho][nu][l] * gam[l][mu][sigma];
                    }
                    riem[rho][sigma][mu][nu] = v;
                }
            }
        }
    }
    let mut ricci: SymMatrix = DMatrix::zeros(n, n);
    for sigma in 0..n {
        for nu in 0..n {
            ricci[(sigma, nu)] = (0..n).map(|rho| riem[rho][sigma][rho][nu]).sum();
        }
    }
    let ricci: SymMatrix = 0.5 * (&ricci + ricci.transpose());
    let scalar = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| ginv[(a, b)] * ricci[(a, b)])
        .sum();
    Ok(CurvatureTensors {
        g,
        ginv,
        dg,
        christoffel: gam,
        riemann: riem,
        ricci,
        scalar,
    })
}

/// Coordinates `w -> theta0 + U w` on a frozen frame `U` (m x r), carrying
/// `G(w) = scale U^T g(theta0 + U w) U` with `g = P F P`.
pub struct FrozenChart<'a> {
    pub field: &'a PetzField,
    pub theta0: Vec<f64>,
    pub frame: DMatrix<f64>,
    pub cfg: CurvatureConfig,
    /// Threshold frozen at the base point, so the split is continuous in `w`.
    pub tau: f64,
}

impl<'a> FrozenChart<'a> {
    /// Chart on the active frame of `F(theta0)`.
    pub fn at(field: &'a PetzField, theta0: &[f64], cfg: &CurvatureConfig) -> Result<(Self, SupportSplit)> {
        let f = field.fisher(theta0)?;
        let split = split_with_rule(&f, cfg.tau);
        let frame = if cfg.projected {
            if split.rank < 2 {
                return Err(QigError::NoTwoPlane(split.rank));
            }
            if split.irregular {
                return Err(QigError::IrregularSplit);
            }
            if split.rank < split.eigen.dim() && split.gap < cfg.gamma_min {
                return Err(QigError::GapGuard {
                    gap: split.gap,
                    min: cfg.gamma_min,
                });
            }
            split.ua()
        } else {
            split.eigen.vectors.clone()
        };
        let tau = split.tau_used;
        Ok((
            Self {
                field,
                theta0: theta0.to_vec(),
                frame,
                cfg: cfg.clone(),
                tau,
            },
            split,
        ))
    }

    pub fn theta(&self, w: &[f64]) -> Vec<f64> {
        let off = &self.frame * DVector::from_column_slice(w);
        self.theta0.iter().zip(off.iter()).map(|(a, b)| a + b).collect()
    }

    fn split_checked(&self, f: &SymMatrix) -> Result<SupportSplit> {
        let split = split_spectrum(f, self.tau);
        let c = eigh_sym(&(self.frame.transpose() * &split.projector * &self.frame));
        let cond = c.values[c.values.len() - 1];
        if cond < self.cfg.min_conditioning {
            return Err(QigError::ChartDegenerate(cond));
        }
        Ok(split)
    }

    fn with_shrink(&self, f: SymMatrix, split: &SupportSplit) -> SymMatrix {
        if self.cfg.shrinkage > 0.0 {
            let n = f.nrows();
            let _ = split;
            f + DMatrix::identity(n, n) * self.cfg.shrinkage
        } else {
            f
        }
    }
}

impl MetricChart for FrozenChart<'_> {
    fn dim(&self) -> usize {
        self.frame.ncols()
    }

    fn metric(&self, w: &[f64]) -> Result<SymMatrix> {
        let f = self.field.fisher(&self.theta(w))?;
        let g = if self.cfg.projected {
            let split = self.split_checked(&f)?;
            let f = self.with_shrink(f, &split);
            projected_metric(&f, &split)
        } else {
            f
        };
        Ok(self.frame.transpose() * g * &self.frame * self.cfg.metric_scale)
    }

    fn metric_with_derivative(&self, w: &[f64]) -> Result<(SymMatrix, Vec<SymMatrix>)> {
        let (f, df) = self.field.fisher_with_derivative(&self.theta(w))?;
        let u = &self.frame;
        let s = self.cfg.metric_scale;
        let (g, dg): (SymMatrix, Vec<SymMatrix>) = if self.cfg.projected {
            let split = self.split_checked(&f)?;
            let f = self.with_shrink(f, &split);
            let dg = df
                .iter()
                .map(|d| projected_metric_derivative(&f, d, &split, self.cfg.gamma_min))
                .collect::<Result<Vec<_>>>()?;
            (projected_metric(&f, &split), dg)
        } else {
            (f, df)
        };
        let big_g = u.transpose() * &g * u * s;
        let m = u.nrows();
        let dgw = (0..u.ncols())
            .map(|k| {
                let mut acc = DMatrix::zeros(m, m);
                for j in 0..m {
                    acc += &dg[j] * u[(j, k)];
                }
                u.transpose() * acc * u * s
            })
            .collect();
        Ok((big_g, dgw))
    }
}

/// Scalar curvature on the active support at `theta0` with fixed step `h`.
pub fn intrinsic_scalar_curvature(
    field: &PetzField,
    theta0: &[f64],
    cfg: &CurvatureConfig,
    h: f64,
) -> Result<(f64, usize)> {
    let (chart, split) = FrozenChart::at(field, theta0, cfg)?;
    let t = curvature_at(&chart, &vec![0.0; chart.dim()], h)?;
    Ok((t.scalar, split.rank))
}

#[cfg(test)]
pub(crate) mod test_charts {
    use super::*;

    /// Metric given by a closure; derivatives by a fine centred difference.
    pub struct ClosureChart<F: Fn(&[f64]) -> SymMatrix> {
        pub n: usize,
        pub f: F,
    }

    impl<F: Fn(&[f64]) -> SymMatrix> MetricChart for ClosureChart<F> {
        fn dim(&self) -> usize {
            self.n
        }
        fn metric(&self, w: &[f64]) -> Result<SymMatrix> {
            Ok((self.f)(w))
        }
        fn metric_with_derivative(&self, w: &[f64]) -> Result<(SymMatrix, Vec<SymMatrix>)> {
            let h = 1e-5;
            let d = (0..self.n)
                .map(|k| crate::linops::central_diff(|p: &[f64]| (self.f)(p), w, k, h))
                .collect();
            Ok(((self.f)(w), d))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_charts::ClosureChart;
    use super::*;
    use crate::hea::{CircuitSpec, Entangler, THETA_STAR};
    use crate::geometry::ReducedModel;
    use crate::petz::OperatorMonotoneSpec;

    fn diag(v: &[f64]) -> SymMatrix {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn flat_sphere_and_hyperbolic_planes() {
        let flat = ClosureChart { n: 2, f: |_: &[f64]| diag(&[1.0, 1.0]) };
        assert!(curvature_at(&flat, &[0.3, 0.2], 1e-3).unwrap().scalar.abs() < 1e-12);
        let sphere = ClosureChart { n: 2, f: |w: &[f64]| diag(&[1.0, w[0].sin().powi(2)]) };
        let t = curvature_at(&sphere, &[1.0, 0.0], 1e-3).unwrap();
        assert!((t.scalar - 2.0).abs() < 1e-5, "{}", t.scalar);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert!((t.sectional(&e1, &e2) - 1.0).abs() < 1e-5);
        let hyp = ClosureChart { n: 2, f: |w: &[f64]| diag(&[1.0, 1.0]) / (w[1] * w[1]) };
        let t = curvature_at(&hyp, &[0.0, 1.0], 1e-4).unwrap();
        assert!((t.scalar + 2.0).abs() < 1e-5, "{}", t.scalar);
    }

    #[test]
    fn three_sphere_scalar_is_six() {
        let s3 = ClosureChart {
            n: 3,
            f: |w: &[f64]| {
                let q = 1.0 + w.iter().map(|x| x * x).sum::<f64>();
                DMatrix::identity(3, 3) * (4.0 / (q * q))
            },
        };
        let t = curvature_at(&s3, &[0.2, -0.1, 0.3], 1e-3).unwrap();
        assert!((t.scalar - 6.0).abs() < 1e-5, "{}", t.scalar);
        let scaled = ClosureChart {
            n: 3,
            f: |w: &[f64]| {
                let q = 1.0 + w.iter().map(|x| x * x).sum::<f64>();
                DMatrix::identity(3, 3) * (1.0 / (q * q))
            },
        };
        let t = curvature_at(&scaled, &[0.2, -0.1, 0.3], 1e-3).unwrap();
        assert!((t.scalar - 24.0).abs() < 1e-4);
    }

    #[test]
    fn frozen_chart_derivative_matches_fd() {
        let field = PetzField::new(
            OperatorMonotoneSpec::bkm(),
            ReducedModel::circuit(CircuitSpec::new(2, vec![Entangler::Zz]).unwrap()).unwrap(),
        );
        let theta: Vec<f64> = (0..field.n_params()).map(|k| 0.3 + 0.4 * k as f64).collect();
        let cfg = CurvatureConfig::default();
        let (chart, split) = FrozenChart::at(&field, &theta, &cfg).unwrap();
        assert_eq!(split.rank, 3);
        let w = vec![0.01, -0.02, 0.015];
        let (_, d) = chart.metric_with_derivative(&w).unwrap();
        for k in 0..3 {
            let fd = crate::linops::central_diff(|p: &[f64]| chart.metric(p).unwrap(), &w, k, 1e-5);
            assert!((&d[k] - fd).amax() < 1e-7);
        }
    }

    #[test]
    fn theta_star_rank_two_chart() {
        let field = PetzField::sld_hea();
        let (r, rank) = intrinsic_scalar_curvature(&field, &THETA_STAR, &CurvatureConfig::default(), 1e-4).unwrap();
        assert_eq!(rank, 2);
        assert!((r - 2.0).abs() < 1e-6, "{r}");
    }
}
