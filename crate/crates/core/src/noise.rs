//! Two-qubit channels applied to the full state before reduction.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::hea::{ReducedJet, StateJet, StateVector};
use crate::linops::HermitianMatrix2;

pub type CMatrix4 = Matrix4<Complex64>;

/// Hermitian, unit-trace, PSD 4x4 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix4(pub CMatrix4);

impl DensityMatrix4 {
    pub fn from_pure(psi: &StateVector) -> Self {
        Self(outer(psi, psi))
    }

    pub fn maximally_mixed() -> Self {
        Self(CMatrix4::identity() * Complex64::new(0.25, 0.0))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigen().eigenvalues.min()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).camax()
    }

    /// Reduction to qubit A.
    pub fn reduce_a(&self) -> HermitianMatrix2 {
        partial_trace_b(&self.0)
    }

    /// Reduction to qubit B.
    pub fn reduce_b(&self) -> HermitianMatrix2 {
        partial_trace_a(&self.0)
    }
}

/// `|phi><chi|`.
pub fn outer(phi: &StateVector, chi: &StateVector) -> CMatrix4 {
    CMatrix4::from_fn(|i, j| phi[i] * chi[j].conj())
}

pub fn partial_trace_b(m: &CMatrix4) -> HermitianMatrix2 {
    let e = |i: usize, j: usize| m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)];
    HermitianMatrix2::new(e(0, 0).re, 0.5 * (e(0, 1) + e(1, 0).conj()), e(1, 1).re)
}

pub fn partial_trace_a(m: &CMatrix4) -> HermitianMatrix2 {
    let e = |i: usize, j: usize| m[(i, j)] + m[(2 + i, 2 + j)];
    HermitianMatrix2::new(e(0, 0).re, 0.5 * (e(0, 1) + e(1, 0).conj()), e(1, 1).re)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QigError::Domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// `(1 - p) rho + p Tr(rho) I / 4`; linear, so it also acts on derivatives.
pub fn depolarize_linear(rho: &CMatrix4, p: f64) -> CMatrix4 {
    rho * Complex64::new(1.0 - p, 0.0) + CMatrix4::identity() * (rho.trace() * (p / 4.0))
}

pub fn depolarize(rho: &DensityMatrix4, p: f64) -> Result<DensityMatrix4> {
    check_unit("p", p)?;
    Ok(DensityMatrix4(depolarize_linear(&rho.0, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    A,
    B,
}

fn kron_on(k: [[f64; 2]; 2], which: Qubit) -> CMatrix4 {
    CMatrix4::from_fn(|r, c| {
        let (ra, rb, ca, cb) = (r / 2, r % 2, c / 2, c % 2);
        let v = match which {
            Qubit::A => {
                if rb == cb {
                    k[ra][ca]
                } else {
                    0.0
                }
            }
            Qubit::B => {
                if ra == ca {
                    k[rb][cb]
                } else {
                    0.0
                }
            }
        };
        Complex64::new(v, 0.0)
    })
}

pub fn amp_damp_linear(rho: &CMatrix4, eta: f64, which: Qubit) -> CMatrix4 {
    let e0 = kron_on([[1.0, 0.0], [0.0, (1.0 - eta).sqrt()]], which);
    let e1 = kron_on([[0.0, eta.sqrt()], [0.0, 0.0]], which);
    e0 * rho * e0.adjoint() + e1 * rho * e1.adjoint()
}

/// Amplitude damping with Kraus operators `[[1,0],[0,sqrt(1-eta)]]`, `[[0,sqrt eta],[0,0]]`.
pub fn amp_damp_on_qubit(rho: &DensityMatrix4, eta: f64, which: Qubit) -> Result<DensityMatrix4> {
    check_unit("eta", eta)?;
    Ok(DensityMatrix4(amp_damp_linear(&rho.0, eta, which)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "channel", rename_all = "snake_case")]
pub enum Channel {
    Depolarizing { p: f64 },
    AmplitudeDamping { eta: f64, qubit: Qubit },
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Channel::Depolarizing { p } => check_unit("p", p),
            Channel::AmplitudeDamping { eta, .. } => check_unit("eta", eta),
        }
    }

    pub fn apply_linear(&self, m: &CMatrix4) -> CMatrix4 {
        match *self {
            Channel::Depolarizing { p } => depolarize_linear(m, p),
            Channel::AmplitudeDamping { eta, qubit } => amp_damp_linear(m, eta, qubit),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Channel::Depolarizing { p } => format!("depolarizing p={p}"),
            Channel::AmplitudeDamping { eta, qubit } => {
                format!("amplitude_damping eta={eta} qubit={qubit:?}")
            }
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            Channel::Depolarizing { p } => p,
            Channel::AmplitudeDamping { eta, .. } => eta,
        }
    }
}

/// Reduced jet of the noisy state: derivatives commute with the linear channels.
pub fn noisy_reduced_jet(j: &StateJet, channels: &[Channel]) -> Result<ReducedJet> {
    for c in channels {
        c.validate()?;
    }
    let chain = |m: CMatrix4| channels.iter().fold(m, |acc, c| c.apply_linear(&acc));
    let m = j.d1.len();
    let rho = partial_trace_b(&chain(outer(&j.psi, &j.psi)));
    let d1: Vec<_> = (0..m)
        .map(|k| {
            let o = outer(&j.d1[k], &j.psi);
            partial_trace_b(&chain(o + o.adjoint()))
        })
        .collect();
    let mut d2 = Vec::new();
    if !j.d2.is_empty() {
        d2 = vec![vec![HermitianMatrix2::default(); m]; m];
        for k in 0..m {
            for l in k..m {
                let a = outer(&j.d2[k][l], &j.psi);
                let b = outer(&j.d1[k], &j.d1[l]);
                let v = partial_trace_b(&chain(a + a.adjoint() + b + b.adjoint()));
                d2[k][l] = v;
                d2[l][k] = v;
            }
        }
    }
    Ok(ReducedJet { rho, d1, d2 })
}
