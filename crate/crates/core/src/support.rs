//! Active/inactive spectral split of a PSD tensor, the projector onto its support,
//! the projector derivative and the projected metric `g = P F P`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::linops::{eigh_sym, EigenSplit, SymMatrix};

/// Rule for the spectral threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum TauRule {
    /// `max(1e-12 lambda_max, 1e-15)`.
    Default,
    /// `kappa lambda_max`.
    Kappa { kappa: f64 },
    /// Fixed absolute threshold.
    Fixed { tau: f64 },
}

impl Default for TauRule {
    fn default() -> Self {
        TauRule::Default
    }
}

impl TauRule {
    pub fn threshold(&self, lambda_max: f64) -> f64 {
        let lm = lambda_max.max(0.0);
        match *self {
            TauRule::Default => (1e-12 * lm).max(1e-15),
            TauRule::Kappa { kappa } => kappa * lm,
            TauRule::Fixed { tau } => tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportSplit {
    pub projector: SymMatrix,
    pub rank: usize,
    /// `lambda_r - lambda_{r+1}`; infinite when the split is trivial.
    pub gap: f64,
    pub tau_used: f64,
    pub eigen: EigenSplit,
    /// Some eigenvalue sits on the threshold within rounding.
    pub irregular: bool,
}

impl SupportSplit {
    pub fn ua(&self) -> DMatrix<f64> {
        self.eigen.active_vectors()
    }

    pub fn ub(&self) -> DMatrix<f64> {
        self.eigen.inactive_vectors()
    }

    pub fn lambda_max(&self) -> f64 {
        if self.eigen.dim() == 0 {
            0.0
        } else {
            self.eigen.values[0]
        }
    }

    pub fn flags(&self, gamma_min: f64, brioschi_ok: bool) -> RegularityFlags {
        RegularityFlags {
            gap_ok: self.gap >= gamma_min && !self.irregular,
            brioschi_ok,
            rank: self.rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityFlags {
    pub gap_ok: bool,
    pub brioschi_ok: bool,
    pub rank: usize,
}

/// Split at `tau_spec`: active eigenvalues are those strictly above it.
pub fn split_spectrum(f: &SymMatrix, tau_spec: f64) -> SupportSplit {
    let eig = eigh_sym(f);
    let m = eig.dim();
    let rank = eig.values.iter().filter(|&&l| l > tau_spec).count();
    let scale = eig.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let irregular = eig
        .values
        .iter()
        .any(|&l| (l - tau_spec).abs() <= 2.0 * f64::EPSILON * scale);
    let gap = if rank == 0 || rank == m {
        f64::INFINITY
    } else {
        eig.values[rank - 1] - eig.values[rank]
    };
    let eigen = eig.with_active(rank);
    let ua = eigen.active_vectors();
    let projector = &ua * ua.transpose();
    SupportSplit {
        projector,
        rank,
        gap,
        tau_used: tau_spec,
        eigen,
        irregular,
    }
}

/// Split using a threshold rule.
pub fn split_with_rule(f: &SymMatrix, rule: TauRule) -> SupportSplit {
    let lmax = eigh_sym(f).values.iter().copied().fold(0.0, f64::max);
    split_spectrum(f, rule.threshold(lmax))
}

/// `dP = U_b [H o (U_b^T dF U_a)] U_a^T + transpose`, `H_ba = 1 / (lambda_a - lambda_b)`.
pub fn projector_derivative(
    df: &SymMatrix,
    split: &SupportSplit,
    gamma_min: f64,
) -> Result<SymMatrix> {
    let m = split.eigen.dim();
    let r = split.rank;
    if r == 0 || r == m {
        return Ok(DMatrix::zeros(m, m));
    }
    if split.gap < gamma_min || split.irregular {
        return Err(QigError::GapGuard {
            gap: split.gap,
            min: gamma_min,
        });
    }
    let ua = split.ua();
    let ub = split.ub();
    let mut core = ub.transpose() * df * &ua;
    for b in 0..(m - r) {
        for a in 0..r {
            core[(b, a)] /= split.eigen.values[a] - split.eigen.values[r + b];
        }
    }
    let half = &ub * core * ua.transpose();
    Ok(&half + half.transpose())
}

/// `g = P F P`.
pub fn projected_metric(f: &SymMatrix, split: &SupportSplit) -> SymMatrix {
    let p = &split.projector;
    let g = p * f * p;
    0.5 * (&g + g.transpose())
}

/// `dg = dP F P + P F dP + P dF P`.
pub fn projected_metric_derivative(
    f: &SymMatrix,
    df: &SymMatrix,
    split: &SupportSplit,
    gamma_min: f64,
) -> Result<SymMatrix> {
    let dp = projector_derivative(df, split, gamma_min)?;
    let p = &split.projector;
    let a = &dp * f * p;
    Ok(&a + a.transpose() + p * df * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::op_norm2;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(v: &[f64]) -> SymMatrix {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn split_examples() {
        let s = split_with_rule(&diag(&[4.0, 4.0, 0.0, 0.0]), TauRule::Default);
        assert_eq!(s.rank, 2);
        assert_eq!(s.gap, 4.0);
        assert!((&s.projector - diag(&[1.0, 1.0, 0.0, 0.0])).amax() < 1e-15);
        let s = split_with_rule(&DMatrix::identity(3, 3), TauRule::Default);
        assert_eq!(s.rank, 3);
        assert!(s.gap.is_infinite());
        assert_eq!(s.projector, DMatrix::identity(3, 3));
        let z = split_with_rule(&DMatrix::zeros(4, 4), TauRule::Default);
        assert_eq!(z.rank, 0);
    }

    #[test]
    fn tau_rules() {
        assert_eq!(TauRule::Default.threshold(0.0), 1e-15);
        assert_eq!(TauRule::Default.threshold(5.0), 5e-12);
        assert_eq!(TauRule::Kappa { kappa: 1e-10 }.threshold(2.0), 2e-10);
    }

    #[test]
    fn straddling_eigenvalue_is_irregular() {
        let s = split_spectrum(&diag(&[1.0, 1e-12]), 1e-12);
        assert!(s.irregular);
        assert!(projector_derivative(&diag(&[0.0, 0.0]), &s, 1e-8).is_err());
    }

    #[test]
    fn derivative_examples() {
        let f = diag(&[3.0, 1.0]);
        let s = split_spectrum(&f, 2.0);
        assert_eq!(s.rank, 1);
        let zero = projector_derivative(&DMatrix::zeros(2, 2), &s, 1e-8).unwrap();
        assert_eq!(zero, DMatrix::zeros(2, 2));
        let eps = 0.1;
        let df = DMatrix::from_row_slice(2, 2, &[0.0, eps, eps, 0.0]);
        let dp = projector_derivative(&df, &s, 1e-8).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, eps / 2.0, eps / 2.0, 0.0]);
        assert!((dp - want).amax() < 1e-15);
    }

    #[test]
    fn gap_guard() {
        let f = diag(&[1.0, 1.0 - 1e-10, 0.0]);
        let s = split_spectrum(&f, 0.99999999995);
        assert_eq!(s.rank, 1);
        assert!(matches!(
            projector_derivative(&diag(&[0.0, 0.0, 0.0]), &s, 1e-8),
            Err(QigError::GapGuard { .. })
        ));
    }

    fn random_psd(rng: &mut ChaCha8Rng, m: usize, spectrum: &[f64]) -> SymMatrix {
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        let q = a.qr().q();
        &q * diag(spectrum) * q.transpose()
    }

    #[test]
    fn derivative_matches_fd_and_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let f0 = random_psd(&mut rng, 4, &[3.0, 1.5, 0.0, 0.0]);
            let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let df = 0.5 * (&b + b.transpose());
            let path = |s: f64| &f0 + &df * s;
            let split = split_spectrum(&f0, 0.5);
            let dp = projector_derivative(&df, &split, 1e-8).unwrap();
            let h = 1e-5;
            let pp = split_spectrum(&path(h), 0.5).projector;
            let pm = split_spectrum(&path(-h), 0.5).projector;
            let fd = (pp - pm) / (2.0 * h);
            assert!((&dp - fd).amax() < 1e-6);
            assert!(op_norm2(&dp) <= 2.0 / split.gap * op_norm2(&df) + 1e-12);
            // dg
            let dg = projected_metric_derivative(&f0, &df, &split, 1e-8).unwrap();
            let gp = projected_metric(&path(h), &split_spectrum(&path(h), 0.5));
            let gm = projected_metric(&path(-h), &split_spectrum(&path(-h), 0.5));
            assert!((dg - (gp - gm) / (2.0 * h)).amax() < 1e-6);
        }
    }

    #[test]
    fn projector_is_idempotent_and_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut worst_c: f64 = 0.0;
        for _ in 0..100 {
            let f = random_psd(&mut rng, 4, &[5.0, 2.0, 1e-17, 0.0]);
            let s = split_with_rule(&f, TauRule::Default);
            let p = &s.projector;
            assert!((p * p - p).amax() < 1e-12);
            assert!((p - p.transpose()).amax() < 1e-15);
            assert!((p.trace() - s.rank as f64).abs() < 1e-12);
            let b = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let delta = 0.5 * (&b + b.transpose()) * (1e-12 * f.norm() / b.norm());
            let s2 = split_spectrum(&(&f + &delta), s.tau_used);
            let c = op_norm2(&(&s2.projector - p)) * s.gap / op_norm2(&delta);
            worst_c = worst_c.max(c);
        }
        assert!(worst_c <= 10.0, "{worst_c}");
    }

    #[test]
    fn full_rank_projection_is_identity() {
        let f = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let s = split_with_rule(&f, TauRule::Default);
        assert!((projected_metric(&f, &s) - &f).amax() < 1e-14);
        let g = projected_metric(&diag(&[4.0, 4.0, 0.0, 0.0]), &split_with_rule(&diag(&[4.0, 4.0, 0.0, 0.0]), TauRule::Default));
        assert_eq!(g, diag(&[4.0, 4.0, 0.0, 0.0]));
    }
}
