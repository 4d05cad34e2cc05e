//! Petz tensor fields on parameter space: the pullback of a Petz metric through
//! `theta -> rho_A(theta)`, with exact first derivatives.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::hea::{reduced_jet, state_jet, CircuitSpec, ClosedFormHea, ReducedJet, StateModel};
use crate::linops::SymMatrix;
use crate::noise::{noisy_reduced_jet, Channel};
use crate::petz::{bloch_coeff_slopes, bloch_coeffs, OperatorMonotoneSpec};

/// Which channels of the Bloch form enter the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FisherVariant {
    #[default]
    Full,
    /// Drops the coherence (`z`) channel: `4 A_f x_m x_n + B~_f C_m C_n`.
    Partial,
}

/// A circuit followed by an optional chain of channels, reduced to qubit A.
#[derive(Clone)]
pub struct ReducedModel {
    model: Arc<dyn StateModel>,
    channels: Vec<Channel>,
}

impl std::fmt::Debug for ReducedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedModel")
            .field("n_params", &self.model.n_params())
            .field("channels", &self.channels)
            .finish()
    }
}

impl ReducedModel {
    pub fn new(model: Arc<dyn StateModel>) -> Self {
        Self {
            model,
            channels: Vec::new(),
        }
    }

    /// The closed-form depth-1 ansatz.
    pub fn hea() -> Self {
        Self::new(Arc::new(ClosedFormHea))
    }

    pub fn circuit(spec: CircuitSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self::new(Arc::new(spec)))
    }

    pub fn with_channels(mut self, channels: Vec<Channel>) -> Result<Self> {
        for c in &channels {
            c.validate()?;
        }
        self.channels = channels;
        Ok(self)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn state_model(&self) -> &dyn StateModel {
        self.model.as_ref()
    }

    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    pub fn jet(&self, theta: &[f64], order: u8) -> Result<ReducedJet> {
        let j = state_jet(self.model.as_ref(), theta, order)?;
        // zero-level channels are the identity map
        if self.channels.iter().all(|c| c.level() == 0.0) {
            Ok(reduced_jet(&j))
        } else {
            noisy_reduced_jet(&j, &self.channels)
        }
    }
}

/// Petz tensor `F^(f)(theta)` of a reduced model.
#[derive(Debug, Clone)]
pub struct PetzField {
    pub metric: OperatorMonotoneSpec,
    pub model: ReducedModel,
    pub variant: FisherVariant,
    /// Reductions with `det rho_A` below this are treated as pure.
    pub delta_min: f64,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl PetzField {
    pub fn new(metric: OperatorMonotoneSpec, model: ReducedModel) -> Self {
        Self {
            metric,
            model,
            variant: FisherVariant::Full,
            delta_min: 1e-12,
        }
    }

    pub fn sld_hea() -> Self {
        Self::new(OperatorMonotoneSpec::sld(), ReducedModel::hea())
    }

    pub fn with_variant(mut self, v: FisherVariant) -> Self {
        self.variant = v;
        self
    }

    pub fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn checked_jet(&self, theta: &[f64], order: u8) -> Result<ReducedJet> {
        let j = self.model.jet(theta, order)?;
        let delta = j.rho.det();
        if delta < self.delta_min {
            return Err(QigError::PureReduction { delta });
        }
        Ok(j)
    }

    fn inner(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        match self.variant {
            FisherVariant::Full => dot(a, b),
            FisherVariant::Partial => a[2] * b[2],
        }
    }

    fn assemble(&self, r: &[f64; 3], s: &[[f64; 3]]) -> Result<SymMatrix> {
        let rad = dot(r, r).sqrt();
        if rad >= 1.0 {
            return Err(QigError::BlochBoundary(rad));
        }
        let c = bloch_coeffs(&self.metric, rad)?;
        let p: Vec<f64> = s.iter().map(|si| dot(r, si)).collect();
        let m = s.len();
        Ok(DMatrix::from_fn(m, m, |i, j| {
            c.a_f * self.inner(&s[i], &s[j]) + c.b_f * p[i] * p[j]
        }))
    }

    /// `F(theta)`.
    pub fn fisher(&self, theta: &[f64]) -> Result<SymMatrix> {
        let j = self.checked_jet(theta, 1)?;
        self.assemble(&j.bloch(), &j.dbloch())
    }

    /// Reduced jet with first derivatives (for reporting).
    pub fn reduced(&self, theta: &[f64]) -> Result<ReducedJet> {
        self.model.jet(theta, 1)
    }

    /// `F(theta)` and `d_k F(theta)` for every parameter `k`.
    pub fn fisher_with_derivative(&self, theta: &[f64]) -> Result<(SymMatrix, Vec<SymMatrix>)> {
        let j = self.checked_jet(theta, 2)?;
        let r = j.bloch();
        let s = j.dbloch();
        let s2 = j.d2bloch();
        let f = self.assemble(&r, &s)?;
        let rad = dot(&r, &r).sqrt();
        let c = bloch_coeffs(&self.metric, rad)?;
        let (a1, b1) = bloch_coeff_slopes(&self.metric, rad)?;
        let m = s.len();
        let p: Vec<f64> = s.iter().map(|si| dot(&r, si)).collect();
        let dfs = (0..m)
            .map(|k| {
                // d_k p_i = s_k . s_i + r . s_ik
                let dp: Vec<f64> = (0..m).map(|i| dot(&s[k], &s[i]) + dot(&r, &s2[i][k])).collect();
                DMatrix::from_fn(m, m, |i, jj| {
                    a1 * p[k] * self.inner(&s[i], &s[jj])
                        + c.a_f * (self.inner(&s2[i][k], &s[jj]) + self.inner(&s[i], &s2[jj][k]))
                        + b1 * p[k] * p[i] * p[jj]
                        + c.b_f * (dp[i] * p[jj] + p[i] * dp[jj])
                })
            })
            .collect();
        Ok((f, dfs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hea::{Entangler, THETA_STAR};
    use crate::linops::central_diff;
    use crate::noise::Qubit;
    use crate::petz::qfim_eigenbasis_oracle;
    use crate::sldcore::sld_qfim_from_tangents;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fields() -> Vec<PetzField> {
        let mut out = Vec::new();
        for metric in [OperatorMonotoneSpec::sld(), OperatorMonotoneSpec::wy(), OperatorMonotoneSpec::bkm()] {
            out.push(PetzField::new(metric.clone(), ReducedModel::hea()));
            out.push(PetzField::new(
                metric.clone(),
                ReducedModel::circuit(CircuitSpec::new(2, vec![Entangler::Zz, Entangler::Xx]).unwrap()).unwrap(),
            ));
            out.push(PetzField::new(
                metric.clone(),
                ReducedModel::hea()
                    .with_channels(vec![
                        Channel::Depolarizing { p: 0.05 },
                        Channel::AmplitudeDamping { eta: 0.1, qubit: Qubit::A },
                    ])
                    .unwrap(),
            ));
            out.push(PetzField::new(metric, ReducedModel::hea()).with_variant(FisherVariant::Partial));
        }
        out
    }

    #[test]
    fn derivative_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for field in fields() {
            let m = field.n_params();
            let mut done = 0;
            while done < 10 {
                let t: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
                let Ok((f, df)) = field.fisher_with_derivative(&t) else { continue };
                if field.model.jet(&t, 1).unwrap().rho.det() < 1e-3 {
                    continue;
                }
                done += 1;
                for k in 0..m {
                    let fd = central_diff(|p: &[f64]| field.fisher(p).unwrap(), &t, k, 1e-5);
                    let err = (&df[k] - fd).amax();
                    assert!(err < 1e-6 * (1.0 + f.amax()), "{:?} k={k} err={err}", field.metric);
                }
            }
        }
    }

    #[test]
    fn matches_oracle_on_circuits_with_entanglers() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for field in fields().into_iter().filter(|f| f.variant == FisherVariant::Full) {
            let m = field.n_params();
            for _ in 0..20 {
                let t: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..3.0)).collect();
                let j = field.model.jet(&t, 1).unwrap();
                if j.rho.det() < 1e-6 {
                    continue;
                }
                let a = field.fisher(&t).unwrap();
                let b = qfim_eigenbasis_oracle(&field.metric, &j.rho, &j.d1).unwrap();
                assert!((&a - &b).amax() < 1e-10 * (1.0 + a.amax()));
            }
        }
    }

    #[test]
    fn sld_route_at_theta_star() {
        let field = PetzField::sld_hea();
        let a = field.fisher(&THETA_STAR).unwrap();
        let j = field.reduced(&THETA_STAR).unwrap();
        let b = sld_qfim_from_tangents(&j.rho, &j.d1, 1e-14).unwrap();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn pure_reduction_is_rejected() {
        let field = PetzField::sld_hea();
        assert!(matches!(field.fisher(&[0.0; 4]), Err(QigError::PureReduction { .. })));
    }
}
