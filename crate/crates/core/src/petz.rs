//! Petz monotone metrics on a single qubit.
//!
//! A metric is selected by an operator-monotone function `f` with `f(1) = 1` and
//! `f(t) = t f(1/t)`. The Morozova-Chentsov kernel `c_f(a, b) = 1 / (b f(a / b))`
//! weighs eigenbasis transitions; on a qubit the metric collapses to the Bloch form
//! `A_f |dr|^2 + B_f (r . dr)^2`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QigError, Result};
use crate::linops::{eigh_hermitian2, HermitianMatrix2, SymMatrix};

/// Named members of the Petz family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    /// `f(t) = (1 + t) / 2`: SLD / Bures.
    Sld,
    /// `f(t) = ((1 + sqrt t) / 2)^2`: Wigner-Yanase.
    #[serde(rename = "wy")]
    WignerYanase,
    /// `f(t) = (t - 1) / ln t`: Bogoliubov-Kubo-Mori.
    Bkm,
    Custom,
}

type MonotoneFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Operator-monotone function selecting a Petz metric.
#[derive(Clone)]
pub struct OperatorMonotoneSpec {
    name: MetricName,
    custom: Option<MonotoneFn>,
    /// `f''(1)`, used by the small-radius series of `B_f`.
    f2_at_one: f64,
}

impl fmt::Debug for OperatorMonotoneSpec {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("OperatorMonotoneSpec")
            .field("name", &self.name)
            .finish()
    }
}

impl PartialEq for OperatorMonotoneSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && match (&self.custom, &other.custom) {
                (None, None) => true,
                (Some(a), Some(b)) => Arc::ptr_eq(a, b),
                _ => false,
            }
    }
}

const BKM_SERIES_CUTOFF: f64 = 0.5;

impl OperatorMonotoneSpec {
    pub fn sld() -> Self {
        Self::named(MetricName::Sld)
    }

    pub fn wy() -> Self {
        Self::named(MetricName::WignerYanase)
    }

    pub fn bkm() -> Self {
        Self::named(MetricName::Bkm)
    }

    pub fn named(name: MetricName) -> Self {
        let f2_at_one = match name {
            MetricName::Sld => 0.0,
            MetricName::WignerYanase => -0.125,
            MetricName::Bkm => -1.0 / 6.0,
            MetricName::Custom => panic!("use OperatorMonotoneSpec::custom"),
        };
        Self {
            name,
            custom: None,
            f2_at_one,
        }
    }

    /// Parse `"sld"`, `"wy"` or `"bkm"` (case-insensitive).
    pub fn from_name(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sld" | "bures" => Ok(Self::sld()),
            "wy" | "wigner-yanase" => Ok(Self::wy()),
            "bkm" => Ok(Self::bkm()),
            other => Err(QigError::Config(format!("unknown metric '{other}'"))),
        }
    }

    /// Wrap a user-supplied `f`. Rejected if `f(1) != 1` or the symmetry
    /// `f(t) = t f(1/t)` fails by more than 1e-8 on a log grid.
    pub fn custom<F>(f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if (f(1.0) - 1.0).abs() > 1e-8 {
            return Err(QigError::Domain(format!("f(1) = {} != 1", f(1.0))));
        }
        let worst = symmetry_defect(&f);
        if worst > 1e-8 {
            return Err(QigError::Domain(format!(
                "f violates f(t) = t f(1/t) by {worst:e}"
            )));
        }
        let h = 1e-3;
        let f2_at_one = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
        Ok(Self {
            name: MetricName::Custom,
            custom: Some(Arc::new(f)),
            f2_at_one,
        })
    }

    pub fn name(&self) -> MetricName {
        self.name
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            MetricName::Sld => "sld",
            MetricName::WignerYanase => "wy",
            MetricName::Bkm => "bkm",
            MetricName::Custom => "custom",
        }
    }

    /// Evaluate `f(t)` for `t > 0`.
    pub fn f(&self, t: f64) -> f64 {
        let s = t - 1.0;
        match self.name {
            MetricName::Sld => 0.5 * (1.0 + t),
            MetricName::WignerYanase => {
                let h = 0.5 * (1.0 + t.sqrt());
                h * h
            }
            MetricName::Bkm => {
                if s.abs() < 1e-6 {
                    1.0 + s / 2.0 - s * s / 12.0 + s * s * s / 24.0
                } else {
                    s / t.ln()
                }
            }
            MetricName::Custom => {
                let f = self.custom.as_ref().expect("custom spec without f");
                if s.abs() < 1e-6 {
                    // symmetry forces f'(1) = 1/2
                    f(1.0) + 0.5 * s
                } else {
                    f(t)
                }
            }
        }
    }
}

fn symmetry_defect<F: Fn(f64) -> f64>(f: &F) -> f64 {
    (0..=60)
        .map(|k| 10f64.powf(-3.0 + 0.1 * k as f64))
        .map(|t| (f(t) - t * f(1.0 / t)).abs() / f(t).abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Largest relative violation of `f(t) = t f(1/t)` over `t` in `[1e-3, 1e3]`.
pub fn symmetry_check(spec: &OperatorMonotoneSpec) -> f64 {
    symmetry_defect(&|t| spec.f(t))
}

/// Morozova-Chentsov kernel `1 / (b f(a / b))`.
pub fn mc_kernel(spec: &OperatorMonotoneSpec, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(QigError::Domain(format!(
            "kernel arguments must be positive, got ({a}, {b})"
        )));
    }
    Ok(1.0 / (b * spec.f(a / b)))
}

/// Coefficients of the qubit Bloch form at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BlochCoefficients {
    pub a_f: f64,
    pub b_f: f64,
    pub r: f64,
}

impl BlochCoefficients {
    /// Coefficient on the concurrence channel, `B_f (1 - r^2)`.
    pub fn b_tilde(&self) -> f64 {
        self.b_f * (1.0 - self.r * self.r)
    }
}

/// `A_f(r) = c_f(l+, l-) / 2` and `B_f(r) = (1/(1 - r^2) - A_f) / r^2`, `l+- = (1 +- r)/2`.
///
/// `A_f + B_f r^2 = 1 / (1 - r^2)` is the classical Fisher weight of the radius,
/// identical for every `f`.
pub fn bloch_coeffs(spec: &OperatorMonotoneSpec, r: f64) -> Result<BlochCoefficients> {
    if !(0.0..1.0).contains(&r) {
        return Err(QigError::Domain(format!("Bloch radius {r} outside [0, 1)")));
    }
    let r2 = r * r;
    let (a_f, b_f) = match spec.name {
        MetricName::Sld => (1.0, 1.0 / (1.0 - r2)),
        MetricName::WignerYanase => {
            let q = (1.0 - r2).sqrt();
            let a = 2.0 / (1.0 + q);
            let b = (1.0 + 2.0 * q) / (q * q * (1.0 + q) * (1.0 + q));
            (a, b)
        }
        MetricName::Bkm => {
            let a = if r < 1e-8 { 1.0 + r2 / 3.0 } else { r.atanh() / r };
            (a, bkm_b(r))
        }
        MetricName::Custom => {
            let lp = 0.5 * (1.0 + r);
            let lm = 0.5 * (1.0 - r);
            let a = 0.5 * mc_kernel(spec, lp, lm)?;
            let b = if r < 1e-4 {
                1.0 + 2.0 * spec.f2_at_one
            } else {
                (1.0 / (1.0 - r2) - a) / r2
            };
            (a, b)
        }
    };
    Ok(BlochCoefficients { a_f, b_f, r })
}

fn bkm_b(r: f64) -> f64 {
    let r2 = r * r;
    if r < BKM_SERIES_CUTOFF {
        // sum_{k>=1} 2k/(2k+1) r^{2k-2}
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            let term = 2.0 * kf / (2.0 * kf + 1.0) * pow;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            pow *= r2;
        }
        sum
    } else {
        (1.0 / (1.0 - r2) - r.atanh() / r) / r2
    }
}

/// `(A_f'(r) / r, B_f'(r) / r)`; both stay finite as `r -> 0`.
pub fn bloch_coeff_slopes(spec: &OperatorMonotoneSpec, r: f64) -> Result<(f64, f64)> {
    let c = bloch_coeffs(spec, r)?;
    let r2 = r * r;
    let one_m = 1.0 - r2;
    Ok(match spec.name {
        MetricName::Sld => (0.0, 2.0 / (one_m * one_m)),
        MetricName::WignerYanase => {
            let q = one_m.sqrt();
            let a1 = 2.0 / (q * (1.0 + q) * (1.0 + q));
            // dB/dq, then dq/dr = -r/q
            let d = q * q * (1.0 + q) * (1.0 + q);
            let db_dq = 2.0 * q * (1.0 + q) * (q * (1.0 + q) - (1.0 + 2.0 * q).powi(2)) / (d * d);
            (a1, -db_dq / q)
        }
        MetricName::Bkm => {
            let b1 = if r < BKM_SERIES_CUTOFF {
                // sum_{k>=2} 2k/(2k+1) (2k-2) r^{2k-4}
                let mut sum = 0.0;
                let mut pow = 1.0;
                for k in 2..200 {
                    let kf = k as f64;
                    let term = 2.0 * kf / (2.0 * kf + 1.0) * (2.0 * kf - 2.0) * pow;
                    sum += term;
                    if term < 1e-18 * sum {
                        break;
                    }
                    pow *= r2;
                }
                sum
            } else {
                (2.0 / (one_m * one_m) - 3.0 * c.b_f) / r2
            };
            (c.b_f, b1)
        }
        MetricName::Custom => {
            // A, B are even in r; slope/r from a symmetric difference quotient.
            let h = 1e-5;
            if r < 1e-2 {
                let r1 = 1e-2;
                let c1 = bloch_coeffs(spec, r1)?;
                let c0 = bloch_coeffs(spec, 0.0)?;
                (
                    2.0 * (c1.a_f - c0.a_f) / (r1 * r1),
                    2.0 * (c1.b_f - c0.b_f) / (r1 * r1),
                )
            } else {
                let hi = bloch_coeffs(spec, (r + h).min(1.0 - 1e-12))?;
                let lo = bloch_coeffs(spec, r - h)?;
                let w = (r + h).min(1.0 - 1e-12) - (r - h);
                ((hi.a_f - lo.a_f) / w / r, (hi.b_f - lo.b_f) / w / r)
            }
        }
    })
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `F_ij = A_f dr_i . dr_j + B_f (r . dr_i)(r . dr_j)`.
pub fn qfim_bloch(
    spec: &OperatorMonotoneSpec,
    r_vec: &[f64; 3],
    dr: &[[f64; 3]],
) -> Result<SymMatrix> {
    let r = dot3(r_vec, r_vec).sqrt();
    if r >= 1.0 {
        return Err(QigError::BlochBoundary(r));
    }
    let c = bloch_coeffs(spec, r)?;
    let m = dr.len();
    let p: Vec<f64> = dr.iter().map(|d| dot3(r_vec, d)).collect();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        c.a_f * dot3(&dr[i], &dr[j]) + c.b_f * p[i] * p[j]
    }))
}

/// Eigenbasis form `F_ij = Re sum_ab c_f(l_a, l_b) <a|d_i rho|b> conj(<a|d_j rho|b>)`.
pub fn qfim_eigenbasis_oracle(
    spec: &OperatorMonotoneSpec,
    rho: &HermitianMatrix2,
    drho: &[HermitianMatrix2],
) -> Result<SymMatrix> {
    let (lam, vecs) = eigh_hermitian2(rho);
    if lam[1] <= 1e-14 {
        return Err(QigError::RankDeficient(lam[1]));
    }
    let mut kern = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            kern[a][b] = mc_kernel(spec, lam[a], lam[b])?;
        }
    }
    let elems: Vec<[[Complex64; 2]; 2]> = drho
        .iter()
        .map(|d| {
            let mut e = [[Complex64::new(0.0, 0.0); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    e[a][b] = d.sandwich(&vecs[a], &vecs[b]);
                }
            }
            e
        })
        .collect();
    let m = drho.len();
    let mut f = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += kern[a][b] * (elems[i][a][b] * elems[j][a][b].conj()).re;
                }
            }
            f[(i, j)] = s;
            f[(j, i)] = s;
        }
    }
    Ok(f)
}

/// First derivatives of the reduced variables along two slice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceDerivatives {
    pub x_u: f64,
    pub x_v: f64,
    pub z_u: Complex64,
    pub z_v: Complex64,
    pub c_u: f64,
    pub c_v: f64,
}

/// `F = 4 A_f (x_m x_n + Re(z_m conj z_n)) + B~_f C_m C_n` on a 2D slice.
pub fn three_channel(
    spec: &OperatorMonotoneSpec,
    x: f64,
    z: Complex64,
    d: &SliceDerivatives,
) -> Result<SymMatrix> {
    let delta = x * (1.0 - x) - z.norm_sqr();
    if delta <= 0.0 {
        return Err(QigError::PureReduction { delta });
    }
    let c = 2.0 * delta.sqrt();
    let r = (1.0 - c * c).max(0.0).sqrt();
    let k = bloch_coeffs(spec, r)?;
    let bt = k.b_tilde();
    let xs = [d.x_u, d.x_v];
    let zs = [d.z_u, d.z_v];
    let cs = [d.c_u, d.c_v];
    Ok(DMatrix::from_fn(2, 2, |i, j| {
        4.0 * k.a_f * (xs[i] * xs[j] + (zs[i] * zs[j].conj()).re) + bt * cs[i] * cs[j]
    }))
}
