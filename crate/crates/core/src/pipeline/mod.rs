//! Batch drivers: point reports, slice scans, counterexample tables, noise
//! sweeps and bootstrap ablations.

pub mod scan;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{curvature_report, kskd, scalar_curvature, CurvatureConfig, CurvatureReport};
use crate::error::{QigError, Result};
use crate::geometry::{FisherVariant, PetzField, ReducedModel};
use crate::hea::{entropy_eigen, entropy_from_concurrence, state_jet, ClosedFormHea};
use crate::linops::eigh_hermitian2;
use crate::noise::{Channel, DensityMatrix4, Qubit};
use crate::petz::OperatorMonotoneSpec;
use crate::support::{split_with_rule, TauRule};

pub use scan::{slice_grid, slice_scan, write_gnuplot_grid, write_rows_csv, ScanConfig, ScanRow, ScanSummary};
pub use stats::{bootstrap_ci, pearson, ConfidenceInterval};

/// First counterexample point.
pub const THETA_1: [f64; 4] = [0.6, 0.7, 0.8, 0.9];
/// Second counterexample point.
pub const THETA_2: [f64; 4] = [
    std::f64::consts::PI / 5.0,
    std::f64::consts::PI / 6.0,
    std::f64::consts::PI / 7.0,
    std::f64::consts::PI / 5.0,
];

/// Model options shared by the drivers (depth-1 ansatz).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldOptions {
    pub variant: FisherVariant,
    pub channels: Vec<Channel>,
}

pub fn field_for(metric: &str, opts: &FieldOptions) -> Result<PetzField> {
    let model = ReducedModel::hea().with_channels(opts.channels.clone())?;
    Ok(PetzField::new(OperatorMonotoneSpec::from_name(metric)?, model).with_variant(opts.variant))
}

fn check_theta(theta: &[f64]) -> Result<()> {
    if theta.len() != 4 {
        return Err(QigError::ParamCount {
            expected: 4,
            got: theta.len(),
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(QigError::Domain("non-finite parameter".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVerdict {
    /// `sign R != sign kskd(C)`: the closed form is contradicted.
    Contradicts,
    Agrees,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub theta: Vec<f64>,
    pub metric: String,
    pub rho_a: [[f64; 2]; 2],
    pub rho_a_offdiag_im: f64,
    pub rho_eigenvalues: [f64; 2],
    pub delta: f64,
    pub concurrence: f64,
    pub entropy_eigen: f64,
    pub entropy_closed: f64,
    pub fisher: Option<Vec<Vec<f64>>>,
    pub spectrum: Option<Vec<f64>>,
    pub rank: Option<usize>,
    pub gap: Option<f64>,
    pub regular: bool,
    pub curvature: Option<CurvatureReport>,
    pub curvature_error: Option<String>,
    pub kskd: Option<f64>,
    pub kskd_error: Option<String>,
    pub verdict: SignVerdict,
}

/// Everything known at `theta`; guard failures are reported, never raised.
pub fn point_report(theta: &[f64], field: &PetzField, cfg: &CurvatureConfig) -> Result<PointReport> {
    check_theta(theta)?;
    cfg.validate()?;
    let jet = field.reduced(theta)?;
    let st = jet.state();
    let rho = jet.rho;
    let (lam, _) = eigh_hermitian2(&rho);
    let c = st.concurrence().min(1.0);
    let (fisher, spectrum, rank, gap) = match field.fisher(theta) {
        Ok(f) => {
            let s = split_with_rule(&f, cfg.tau);
            let rows = (0..f.nrows()).map(|i| f.row(i).iter().copied().collect()).collect();
            (Some(rows), Some(s.eigen.values.iter().copied().collect()), Some(s.rank), Some(s.gap))
        }
        Err(_) => (None, None, None, None),
    };
    let (curvature, curvature_error) = match curvature_report(field, theta, None, cfg) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (kskd_v, kskd_error) = match kskd(c) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let verdict = match (&curvature, kskd_v) {
        (Some(r), Some(k)) if r.r != 0.0 && k != 0.0 => {
            if r.r.signum() != k.signum() {
                SignVerdict::Contradicts
            } else {
                SignVerdict::Agrees
            }
        }
        _ => SignVerdict::Undetermined,
    };
    let regular = curvature.as_ref().is_some_and(|r| r.flags.gap_ok && r.flags.brioschi_ok);
    Ok(PointReport {
        theta: theta.to_vec(),
        metric: field.metric.label().to_string(),
        rho_a: [[rho.a, rho.b.re], [rho.b.re, rho.d]],
        rho_a_offdiag_im: rho.b.im,
        rho_eigenvalues: lam,
        delta: rho.det(),
        concurrence: c,
        entropy_eigen: entropy_eigen(&rho),
        entropy_closed: entropy_from_concurrence(c),
        fisher,
        spectrum,
        rank,
        gap,
        regular,
        curvature,
        curvature_error,
        kskd: kskd_v,
        kskd_error,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    pub case: String,
    pub theta: Vec<f64>,
    pub r: Option<f64>,
    pub h_star: Option<f64>,
    pub error: Option<String>,
    pub s_bits: f64,
    pub s_closed: f64,
    pub purity_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleTable {
    pub rows: Vec<CounterexampleRow>,
    /// `S(theta_1) > S(theta_2)`.
    pub entropy_ordered: bool,
    /// `R(theta_1) > R(theta_2)`.
    pub curvature_ordered: bool,
    pub non_monotone: bool,
}

/// The two named points followed by `n_random` seeded points of `[0, 2 pi)^4`.
pub fn counterexample_suite(seed: u64, n_random: usize, cfg: &CurvatureConfig) -> Result<CounterexampleTable> {
    let field = PetzField::sld_hea();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = vec![("theta_1".to_string(), THETA_1.to_vec()), ("theta_2".to_string(), THETA_2.to_vec())];
    for k in 0..n_random {
        let t = (0..4).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        cases.push((format!("random_{k}"), t));
    }
    let rows = cases
        .par_iter()
        .map(|(case, t)| counterexample_row(&field, case, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let entropy_ordered = rows[0].s_bits > rows[1].s_bits;
    let curvature_ordered = match (rows[0].r, rows[1].r) {
        (Some(a), Some(b)) => a > b,
        _ => false,
    };
    Ok(CounterexampleTable {
        rows,
        entropy_ordered,
        curvature_ordered,
        non_monotone: entropy_ordered && curvature_ordered,
    })
}

fn counterexample_row(field: &PetzField, case: &str, t: &[f64], cfg: &CurvatureConfig) -> Result<CounterexampleRow> {
    let psi = state_jet(&ClosedFormHea, t, 0)?.psi;
    let dm = DensityMatrix4::from_pure(&psi);
    let (ra, rb) = (dm.reduce_a(), dm.reduce_b());
    let purity = |h: &crate::linops::HermitianMatrix2| h.a * h.a + h.d * h.d + 2.0 * h.b.norm_sqr();
    let (pa, pb) = (purity(&ra), purity(&rb));
    if (pa - pb).abs() > 1e-12 {
        return Err(QigError::Domain(format!("Tr rho_A^2 = {pa} but Tr rho_B^2 = {pb}")));
    }
    let st = field.reduced(t)?.state();
    let s_eig = entropy_eigen(&ra);
    let s_cf = entropy_from_concurrence(st.concurrence().min(1.0));
    if (s_eig - s_cf).abs() > 1e-10 {
        return Err(QigError::Domain(format!("entropy routes disagree: {s_eig} vs {s_cf}")));
    }
    let (r, h_star, error) = match scalar_curvature(field, t, cfg) {
        Ok((r, h, _)) => (Some(r), Some(h), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    Ok(CounterexampleRow {
        case: case.to_string(),
        theta: t.to_vec(),
        r,
        h_star,
        error,
        s_bits: s_eig,
        s_closed: s_cf,
        purity_b: pb,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub label: String,
    pub channel: Option<Channel>,
    pub level: f64,
    pub r: Option<f64>,
    pub h_star: Option<f64>,
    pub rank: Option<usize>,
    pub gap: Option<f64>,
    pub error: Option<String>,
}

/// Depolarizing `p in {0.01, 0.05}` and damping `eta in {0.02, 0.10}` on B, then on A.
pub fn default_noise_channels() -> Vec<Channel> {
    let mut v = vec![Channel::Depolarizing { p: 0.01 }, Channel::Depolarizing { p: 0.05 }];
    for q in [Qubit::B, Qubit::A] {
        for eta in [0.02, 0.10] {
            v.push(Channel::AmplitudeDamping { eta, qubit: q });
        }
    }
    v
}

/// Noiseless `R` (first row) followed by `R` under each channel alone.
pub fn noise_sweep(theta: &[f64], metric: &str, channels: &[Channel], cfg: &CurvatureConfig) -> Result<Vec<NoiseRow>> {
    check_theta(theta)?;
    let mut jobs: Vec<Option<Channel>> = vec![None];
    jobs.extend(channels.iter().copied().map(Some));
    jobs.par_iter()
        .map(|ch| {
            let opts = FieldOptions {
                channels: ch.iter().copied().collect(),
                ..FieldOptions::default()
            };
            let field = field_for(metric, &opts)?;
            let split = field.fisher(theta).map(|f| split_with_rule(&f, cfg.tau));
            let (r, h_star, error) = match scalar_curvature(&field, theta, cfg) {
                Ok((r, h, _)) => (Some(r), Some(h), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            Ok(NoiseRow {
                label: ch.map_or_else(|| "noiseless".to_string(), |c| c.label()),
                channel: *ch,
                level: ch.map_or(0.0, |c| c.level()),
                r,
                h_star,
                rank: split.as_ref().ok().map(|s| s.rank),
                gap: split.as_ref().ok().map(|s| s.gap),
                error,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    /// Jittered evaluation points around the base point.
    pub samples: usize,
    pub sigma: f64,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            samples: 32,
            sigma: 0.01,
            resamples: 1000,
            level: 0.95,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub id: String,
    pub label: String,
    pub ci: Option<ConfidenceInterval>,
    pub n_valid: usize,
    pub n_failed: usize,
    /// Some sample failed or the interval is undefined.
    pub unstable: bool,
    pub first_error: Option<String>,
}

fn ablation_row(
    id: &str,
    label: &str,
    points: &[Vec<f64>],
    field: &PetzField,
    cfg: &CurvatureConfig,
    acfg: &AblationConfig,
) -> Result<AblationRow> {
    let vals: Vec<Result<f64>> = points.par_iter().map(|t| scalar_curvature(field, t, cfg).map(|r| r.0)).collect();
    let ok: Vec<f64> = vals.iter().filter_map(|v| v.as_ref().ok().copied()).filter(|v| v.is_finite()).collect();
    let first_error = vals.iter().find_map(|v| v.as_ref().err().map(|e| e.to_string()));
    let n_failed = points.len() - ok.len();
    let ci = if ok.is_empty() {
        None
    } else {
        Some(bootstrap_ci(&ok, acfg.resamples, acfg.level, acfg.seed)?)
    };
    Ok(AblationRow {
        id: id.into(),
        label: label.into(),
        unstable: n_failed > 0 || ci.is_none(),
        ci,
        n_valid: ok.len(),
        n_failed,
        first_error,
    })
}

/// Baseline and variants A1 to A4, each a bootstrap CI of mean `R` over the
/// same seeded jitter cloud `theta + sigma N(0, 1)`.
pub fn ablation_suite(theta: &[f64], cfg: &CurvatureConfig, acfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    check_theta(theta)?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(acfg.seed);
    let points: Vec<Vec<f64>> = (0..acfg.samples)
        .map(|_| {
            theta
                .iter()
                .map(|t| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    t + acfg.sigma * z
                })
                .collect()
        })
        .collect();
    let field = PetzField::sld_hea();
    let partial = PetzField::sld_hea().with_variant(FisherVariant::Partial);
    let with = |f: &dyn Fn(&mut CurvatureConfig)| {
        let mut c = cfg.clone();
        f(&mut c);
        c
    };
    let variants: Vec<(&str, &str, &PetzField, CurvatureConfig)> = vec![
        ("baseline", "g = PFP, default tau, adaptive h", &field, cfg.clone()),
        ("A1", "unprojected F", &field, with(&|c| c.projected = false)),
        ("A2", "tau = 1e-10", &field, with(&|c| c.tau = TauRule::Fixed { tau: 1e-10 })),
        ("A2", "tau = 1e-14", &field, with(&|c| c.tau = TauRule::Fixed { tau: 1e-14 })),
        ("A3", "h = 1e-3", &field, with(&|c| c.h = Some(1e-3))),
        ("A3", "h = 1e-5", &field, with(&|c| c.h = Some(1e-5))),
        ("A4", "partial F (coherence channel dropped)", &partial, cfg.clone()),
    ];
    variants
        .iter()
        .map(|(id, label, f, c)| ablation_row(id, label, &points, f, c, acfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hea::{THETA_SINGULAR, THETA_STAR};

    #[test]
    fn theta_star_report() {
        let r = point_report(&THETA_STAR, &PetzField::sld_hea(), &CurvatureConfig::default()).unwrap();
        assert!((r.rho_a[0][0] - 0.6275).abs() < 5e-4);
        assert!((r.rho_a[0][1] - 0.4516).abs() < 5e-4);
        assert!((r.concurrence - 0.34).abs() < 0.01);
        assert_eq!(r.rank, Some(2));
        assert!(r.regular);
        assert!((r.entropy_eigen - r.entropy_closed).abs() < 1e-10);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"verdict\""));
    }

    #[test]
    fn singular_and_boundary_reports() {
        let cfg = CurvatureConfig::default();
        let r = point_report(&THETA_SINGULAR, &PetzField::sld_hea(), &cfg).unwrap();
        assert_eq!(r.rank, Some(2));
        assert!((r.concurrence - 1.0).abs() < 1e-12);
        assert!((r.entropy_eigen - 1.0).abs() < 1e-12);
        let z = point_report(&[0.0; 4], &PetzField::sld_hea(), &cfg).unwrap();
        assert_eq!(z.concurrence, 0.0);
        assert!(z.delta.abs() < 1e-15);
        assert!(!z.regular);
        assert!(z.fisher.is_none() && z.curvature_error.is_some());
        assert_eq!(z.verdict, SignVerdict::Undetermined);
        assert!(point_report(&[0.0; 3], &PetzField::sld_hea(), &cfg).is_err());
    }

    #[test]
    fn counterexample_suite_is_seeded() {
        let cfg = CurvatureConfig::default();
        let a = counterexample_suite(42, 3, &cfg).unwrap();
        assert_eq!(a.rows.len(), 5);
        assert_eq!(a, counterexample_suite(42, 3, &cfg).unwrap());
        for row in &a.rows {
            assert!((row.s_bits - row.s_closed).abs() <= 1e-10);
            assert!(row.purity_b > 0.5 - 1e-12 && row.purity_b <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn zero_noise_reproduces_noiseless_curvature() {
        let cfg = CurvatureConfig::default();
        let rows = noise_sweep(&THETA_STAR, "sld", &[Channel::Depolarizing { p: 0.0 }], &cfg).unwrap();
        assert_eq!(rows[0].r, rows[1].r);
        assert_eq!(rows.len(), 2);
        let rows = noise_sweep(&THETA_STAR, "sld", &[Channel::Depolarizing { p: 0.05 }], &cfg).unwrap();
        assert!(rows[1].r.is_some(), "{:?}", rows[1].error);
    }

    #[test]
    fn ablation_rows_are_labelled() {
        let acfg = AblationConfig {
            samples: 6,
            resamples: 200,
            ..AblationConfig::default()
        };
        let rows = ablation_suite(&THETA_STAR, &CurvatureConfig::default(), &acfg).unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(rows[0].id, "baseline");
        assert!(rows[0].ci.is_some() && !rows[0].unstable);
    }
}
