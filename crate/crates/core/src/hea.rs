//! Two-qubit hardware-efficient ansatz.
//!
//! Qubit A is the first tensor factor, so the amplitude index is `2a + b`. Every
//! parameter enters through a gate `exp(-i t G)` with `G^2 = I` (`RY(2t)`, `ZZ` and
//! `XX` entanglers), which makes `psi(theta + pi/2 e_k)` the exact partial
//! derivative along `t_k`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::linops::{eigh_hermitian2, HermitianMatrix2, SymMatrix};

pub type StateVector = [Complex64; 4];

/// Depth-1 parameters `(t0, t1, t2, t3)`.
pub type HeaParams = [f64; 4];

/// Well-conditioned reference point.
pub const THETA_STAR: HeaParams = [1.755, 1.720, 5.417, 4.126];
/// Maximally entangled point where `rho_A = I/2`.
pub const THETA_SINGULAR: HeaParams = [
    std::f64::consts::FRAC_PI_4,
    0.0,
    std::f64::consts::FRAC_PI_4,
    0.0,
];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Real amplitudes on `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitudes {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Amplitudes {
    pub fn to_state(&self) -> StateVector {
        [c(self.a), c(self.b), c(self.c), c(self.d)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }
}

/// Closed-form amplitudes of the depth-1 ansatz, `phi+- = t1 +- t3`.
pub fn amplitudes(t: &HeaParams) -> Amplitudes {
    let (s0, c0) = t[0].sin_cos();
    let (s2, c2) = t[2].sin_cos();
    let (sp, cp) = (t[1] + t[3]).sin_cos();
    let (sm, cm) = (t[1] - t[3]).sin_cos();
    Amplitudes {
        a: c0 * c2 * cp - s0 * s2 * sm,
        b: c0 * c2 * sp - s0 * s2 * cm,
        c: c0 * s2 * cp + s0 * c2 * sm,
        d: s0 * c2 * cm + c0 * s2 * sp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    /// `exp(-i alpha Z(x)Z)`
    Zz,
    /// `exp(-i beta X(x)X)`
    Xx,
}

/// Layered circuit: an `RY(x)RY` layer followed by `depth` blocks of
/// `CNOT -> entanglers -> RY(x)RY`.
///
/// Parameters are layer-major, `[A_0, B_0, A_1, B_1, ..., A_L, B_L]`, followed by
/// the entangler angles block by block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub depth: usize,
    #[serde(default)]
    pub entanglers: Vec<Entangler>,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub const MAX_DEPTH: usize = 12;

impl CircuitSpec {
    pub fn new(depth: usize, entanglers: Vec<Entangler>) -> Result<Self> {
        let s = Self {
            depth,
            entanglers,
            seed: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// The four-parameter ansatz with the closed form above.
    pub fn hea() -> Self {
        Self {
            depth: 1,
            entanglers: Vec::new(),
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(QigError::Config(format!(
                "depth {} outside 1..={MAX_DEPTH}",
                self.depth
            )));
        }
        Ok(())
    }

    pub fn n_rotation_params(&self) -> usize {
        2 * (self.depth + 1)
    }

    pub fn n_params(&self) -> usize {
        self.n_rotation_params() + self.depth * self.entanglers.len()
    }

    /// Parameter indices belonging to rotation layer `layer` (0..=depth).
    pub fn layer_indices(&self, layer: usize) -> Vec<usize> {
        let mut v = vec![2 * layer, 2 * layer + 1];
        if layer >= 1 {
            let ne = self.entanglers.len();
            let base = self.n_rotation_params() + (layer - 1) * ne;
            v.extend(base..base + ne);
        }
        v
    }

    pub fn has_real_amplitudes(&self) -> bool {
        self.entanglers.is_empty()
    }
}

fn ry(psi: &mut StateVector, on_a: bool, t: f64) {
    let (s, co) = t.sin_cos();
    let pairs: [(usize, usize); 2] = if on_a { [(0, 2), (1, 3)] } else { [(0, 1), (2, 3)] };
    for (i, j) in pairs {
        let (u, v) = (psi[i], psi[j]);
        psi[i] = u * co - v * s;
        psi[j] = u * s + v * co;
    }
}

fn cnot(psi: &mut StateVector) {
    psi.swap(2, 3);
}

fn entangle(psi: &mut StateVector, kind: Entangler, angle: f64) {
    let (s, co) = angle.sin_cos();
    match kind {
        Entangler::Zz => {
            let ph = Complex64::new(co, -s);
            psi[0] *= ph;
            psi[3] *= ph;
            psi[1] *= ph.conj();
            psi[2] *= ph.conj();
        }
        Entangler::Xx => {
            let old = *psi;
            let mi = Complex64::new(0.0, -s);
            for i in 0..4 {
                psi[i] = old[i] * co + mi * old[3 - i];
            }
        }
    }
}

/// Gate-by-gate statevector of the circuit applied to `|00>`.
pub fn statevector_oracle(spec: &CircuitSpec, params: &[f64]) -> Result<StateVector> {
    spec.validate()?;
    if params.len() != spec.n_params() {
        return Err(QigError::ParamCount {
            expected: spec.n_params(),
            got: params.len(),
        });
    }
    let mut psi = [c(1.0), ZERO, ZERO, ZERO];
    ry(&mut psi, true, params[0]);
    ry(&mut psi, false, params[1]);
    let ne = spec.entanglers.len();
    let ent_base = spec.n_rotation_params();
    for layer in 1..=spec.depth {
        cnot(&mut psi);
        for (e, kind) in spec.entanglers.iter().enumerate() {
            entangle(&mut psi, *kind, params[ent_base + (layer - 1) * ne + e]);
        }
        ry(&mut psi, true, params[2 * layer]);
        ry(&mut psi, false, params[2 * layer + 1]);
    }
    Ok(psi)
}

/// Anything that maps parameters to a two-qubit pure state whose generators square to one.
pub trait StateModel: Send + Sync {
    fn n_params(&self) -> usize;
    fn state(&self, params: &[f64]) -> Result<StateVector>;
}

/// Depth-1 ansatz evaluated through the closed form.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormHea;

impl StateModel for ClosedFormHea {
    fn n_params(&self) -> usize {
        4
    }

    fn state(&self, params: &[f64]) -> Result<StateVector> {
        let t: HeaParams = params.try_into().map_err(|_| QigError::ParamCount {
            expected: 4,
            got: params.len(),
        })?;
        Ok(amplitudes(&t).to_state())
    }
}

impl StateModel for CircuitSpec {
    fn n_params(&self) -> usize {
        CircuitSpec::n_params(self)
    }

    fn state(&self, params: &[f64]) -> Result<StateVector> {
        statevector_oracle(self, params)
    }
}

/// Statevector with exact first and (optionally) second parameter derivatives.
#[derive(Debug, Clone)]
pub struct StateJet {
    pub psi: StateVector,
    pub d1: Vec<StateVector>,
    /// Empty unless second order was requested.
    pub d2: Vec<Vec<StateVector>>,
}

fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(k, s) in moves {
        q[k] += s;
    }
    q
}

/// Exact derivatives via `d_k psi = psi(theta + pi/2 e_k)`; `d_k^2 psi = -psi`.
pub fn state_jet(model: &dyn StateModel, params: &[f64], order: u8) -> Result<StateJet> {
    let m = model.n_params();
    if params.len() != m {
        return Err(QigError::ParamCount {
            expected: m,
            got: params.len(),
        });
    }
    let psi = model.state(params)?;
    let d1 = (0..m)
        .map(|k| model.state(&shifted(params, &[(k, FRAC_PI_2)])))
        .collect::<Result<Vec<_>>>()?;
    let mut d2 = Vec::new();
    if order >= 2 {
        d2 = vec![vec![[ZERO; 4]; m]; m];
        for k in 0..m {
            d2[k][k] = psi.map(|a| -a);
            for l in k + 1..m {
                let v = model.state(&shifted(params, &[(k, FRAC_PI_2), (l, FRAC_PI_2)]))?;
                d2[k][l] = v;
                d2[l][k] = v;
            }
        }
    }
    Ok(StateJet { psi, d1, d2 })
}

/// `sum_b phi_{2i+b} conj(chi_{2j+b})`, the partial trace over B of `|phi><chi|`.
fn trace_b_outer(phi: &StateVector, chi: &StateVector) -> [[Complex64; 2]; 2] {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = phi[2 * i] * chi[2 * j].conj() + phi[2 * i + 1] * chi[2 * j + 1].conj();
        }
    }
    m
}

fn herm_sym(m1: [[Complex64; 2]; 2], m2: [[Complex64; 2]; 2]) -> HermitianMatrix2 {
    HermitianMatrix2::new(
        (m1[0][0] + m2[0][0]).re,
        m1[0][1] + m2[0][1],
        (m1[1][1] + m2[1][1]).re,
    )
}

/// One-qubit reduction with derivatives, stored as the true partial trace `rho_A`.
#[derive(Debug, Clone)]
pub struct ReducedJet {
    pub rho: HermitianMatrix2,
    pub d1: Vec<HermitianMatrix2>,
    pub d2: Vec<Vec<HermitianMatrix2>>,
}

/// Bloch vector in the `(x, z)` convention: `r = (2 Re z, -2 Im z, 2x - 1)`, `z = -rho_01`.
pub fn bloch_of(h: &HermitianMatrix2) -> [f64; 3] {
    [-2.0 * h.b.re, 2.0 * h.b.im, h.a - h.d]
}

impl ReducedJet {
    pub fn n_params(&self) -> usize {
        self.d1.len()
    }

    pub fn has_second_order(&self) -> bool {
        !self.d2.is_empty()
    }

    pub fn state(&self) -> ReducedQubitState {
        ReducedQubitState {
            x: self.rho.a,
            z: -self.rho.b,
        }
    }

    pub fn dx(&self, k: usize) -> f64 {
        self.d1[k].a
    }

    pub fn dz(&self, k: usize) -> Complex64 {
        -self.d1[k].b
    }

    /// `C_k = -(r . d_k r) / C`.
    pub fn dconcurrence(&self, k: usize) -> f64 {
        let r = bloch_of(&self.rho);
        let dr = bloch_of(&self.d1[k]);
        let cc = self.state().concurrence();
        -(r[0] * dr[0] + r[1] * dr[1] + r[2] * dr[2]) / cc
    }

    pub fn bloch(&self) -> [f64; 3] {
        bloch_of(&self.rho)
    }

    pub fn dbloch(&self) -> Vec<[f64; 3]> {
        self.d1.iter().map(bloch_of).collect()
    }

    pub fn d2bloch(&self) -> Vec<Vec<[f64; 3]>> {
        self.d2
            .iter()
            .map(|row| row.iter().map(bloch_of).collect())
            .collect()
    }

    /// Apply an affine map `rho -> L(rho) + c` whose linear part is `lin`.
    pub fn map_linear<F: Fn(&HermitianMatrix2) -> HermitianMatrix2>(
        &self,
        value: HermitianMatrix2,
        lin: F,
    ) -> Self {
        Self {
            rho: value,
            d1: self.d1.iter().map(&lin).collect(),
            d2: self
                .d2
                .iter()
                .map(|row| row.iter().map(&lin).collect())
                .collect(),
        }
    }
}

/// Reduced jet of a pure-state jet.
pub fn reduced_jet(j: &StateJet) -> ReducedJet {
    let m = j.d1.len();
    let rho = {
        let t = trace_b_outer(&j.psi, &j.psi);
        HermitianMatrix2::new(t[0][0].re, t[0][1], t[1][1].re)
    };
    let d1: Vec<_> = (0..m)
        .map(|k| herm_sym(trace_b_outer(&j.d1[k], &j.psi), trace_b_outer(&j.psi, &j.d1[k])))
        .collect();
    let mut d2 = Vec::new();
    if !j.d2.is_empty() {
        d2 = vec![vec![HermitianMatrix2::default(); m]; m];
        for k in 0..m {
            for l in k..m {
                let a = herm_sym(
                    trace_b_outer(&j.d2[k][l], &j.psi),
                    trace_b_outer(&j.psi, &j.d2[k][l]),
                );
                let b = herm_sym(
                    trace_b_outer(&j.d1[k], &j.d1[l]),
                    trace_b_outer(&j.d1[l], &j.d1[k]),
                );
                d2[k][l] = a + b;
                d2[l][k] = a + b;
            }
        }
    }
    ReducedJet { rho, d1, d2 }
}

/// Reduced state `rho_A` in `(x, z)` coordinates with `z = -rho_01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedQubitState {
    pub x: f64,
    pub z: Complex64,
}

impl ReducedQubitState {
    pub fn delta(&self) -> f64 {
        self.x * (1.0 - self.x) - self.z.norm_sqr()
    }

    pub fn concurrence(&self) -> f64 {
        2.0 * self.delta().max(0.0).sqrt()
    }

    pub fn r_vec(&self) -> [f64; 3] {
        [2.0 * self.z.re, -2.0 * self.z.im, 2.0 * self.x - 1.0]
    }

    pub fn radius(&self) -> f64 {
        let r = self.r_vec();
        (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
    }

    /// The partial trace over B, `[[x, -z], [-conj z, 1 - x]]`.
    pub fn rho(&self) -> HermitianMatrix2 {
        HermitianMatrix2::new(self.x, -self.z, 1.0 - self.x)
    }

    pub fn purity(&self) -> f64 {
        let r = self.radius();
        0.5 * (1.0 + r * r)
    }
}

pub fn state_norm(psi: &StateVector) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Reduce a normalised two-qubit state to qubit A.
pub fn reduce(psi: &StateVector) -> Result<ReducedQubitState> {
    let dev = (state_norm(psi) - 1.0).abs();
    if dev > 1e-10 {
        return Err(QigError::NotNormalized(dev));
    }
    let x = psi[0].norm_sqr() + psi[1].norm_sqr();
    let z = -(psi[0] * psi[2].conj() + psi[1] * psi[3].conj());
    Ok(ReducedQubitState { x, z })
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Entanglement entropy in bits from the concurrence.
pub fn entropy_from_concurrence(cc: f64) -> f64 {
    let q = (1.0 - cc * cc).max(0.0).sqrt();
    let lp = 0.5 * (1.0 + q);
    let lm = 0.5 * (1.0 - q);
    (-xlog2x(lp) - xlog2x(lm)).clamp(0.0, 1.0)
}

/// von Neumann entropy in bits from the eigenvalues of `rho`.
pub fn entropy_eigen(rho: &HermitianMatrix2) -> f64 {
    let (lam, _) = eigh_hermitian2(rho);
    (-xlog2x(lam[0].max(0.0)) - xlog2x(lam[1].max(0.0))).max(0.0)
}

/// `(C, S)` with `S` in bits.
pub fn concurrence_entropy(s: &ReducedQubitState) -> (f64, f64) {
    let cc = s.concurrence().min(1.0);
    (cc, entropy_from_concurrence(cc))
}

/// Analytic derivatives of the depth-1 reduced variables up to `order`.
pub fn bloch_derivatives(t: &HeaParams, order: u8) -> ReducedJet {
    let j = state_jet(&ClosedFormHea, t, order).expect("four parameters");
    reduced_jet(&j)
}

/// Quantum geometric tensor from a state and its first derivatives:
/// real part is the pure-state QFIM, imaginary part the Berry curvature.
pub fn qgt_from_jet(psi: &StateVector, d1: &[StateVector]) -> (SymMatrix, DMatrix<f64>) {
    let m = d1.len();
    let ip = |a: &StateVector, b: &StateVector| -> Complex64 {
        (0..4).map(|i| a[i].conj() * b[i]).sum()
    };
    let conn: Vec<Complex64> = d1.iter().map(|d| ip(d, psi)).collect();
    let mut re = DMatrix::zeros(m, m);
    let mut im = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let q = ip(&d1[i], &d1[j]) - conn[i] * conn[j].conj();
            re[(i, j)] = q.re;
            im[(i, j)] = q.im;
        }
    }
    (0.5 * (&re + re.transpose()), im)
}

/// `F_ij = Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]`.
pub fn pure_state_qfim(model: &dyn StateModel, params: &[f64]) -> Result<SymMatrix> {
    let j = state_jet(model, params, 1)?;
    Ok(qgt_from_jet(&j.psi, &j.d1).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{central_diff, eigh_sym};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_theta(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn amplitude_examples() {
        let a = amplitudes(&[0.0; 4]);
        assert_eq!((a.a, a.b, a.c, a.d), (1.0, 0.0, 0.0, 0.0));
        let a = amplitudes(&THETA_SINGULAR);
        for (got, want) in [(a.a, 0.5), (a.b, -0.5), (a.c, 0.5), (a.d, 0.5)] {
            assert_abs_diff_eq!(got, want, epsilon = 1e-15);
        }
        let s = reduce(&a.to_state()).unwrap();
        assert_abs_diff_eq!(s.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.z.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn theta_star_reduction() {
        let s = reduce(&amplitudes(&THETA_STAR).to_state()).unwrap();
        let rho = s.rho();
        assert!((rho.a - 0.6275).abs() < 5e-4);
        assert!((rho.b.re - 0.4516).abs() < 5e-4);
        assert!(rho.b.im.abs() < 1e-14);
        assert!((rho.d - 0.3725).abs() < 5e-4);
        // z carries the opposite sign of the off-diagonal
        assert!(s.z.re < 0.0);
        assert!((s.concurrence() - 0.34).abs() < 0.01);
    }

    #[test]
    fn closed_form_matches_gate_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = CircuitSpec::hea();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let t = rand_theta(&mut rng, 4);
            let a = amplitudes(&[t[0], t[1], t[2], t[3]]);
            assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
            let o = statevector_oracle(&spec, &t).unwrap();
            for (x, y) in a.to_state().iter().zip(o.iter()) {
                worst = worst.max((x - y).norm());
            }
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn oracle_param_count() {
        let spec = CircuitSpec::new(2, vec![Entangler::Zz]).unwrap();
        assert_eq!(spec.n_params(), 8);
        assert!(matches!(
            statevector_oracle(&spec, &[0.0; 4]),
            Err(QigError::ParamCount { expected: 8, got: 4 })
        ));
        assert!(CircuitSpec::new(0, vec![]).is_err());
        assert!(CircuitSpec::new(13, vec![]).is_err());
        assert_eq!(spec.layer_indices(0), vec![0, 1]);
        assert_eq!(spec.layer_indices(2), vec![4, 5, 7]);
    }

    #[test]
    fn entanglers_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = CircuitSpec::new(3, vec![Entangler::Zz, Entangler::Xx]).unwrap();
        for _ in 0..100 {
            let t = rand_theta(&mut rng, spec.n_params());
            let psi = statevector_oracle(&spec, &t).unwrap();
            assert!((state_norm(&psi) - 1.0).abs() < 1e-12);
        }
        let mut psi = [c(0.5), c(0.5), c(0.5), c(0.5)];
        entangle(&mut psi, Entangler::Zz, 0.3);
        assert_abs_diff_eq!((psi[0] - Complex64::from_polar(0.5, -0.3)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((psi[1] - Complex64::from_polar(0.5, 0.3)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn reduce_examples() {
        let s = reduce(&[c(1.0), ZERO, ZERO, ZERO]).unwrap();
        assert_eq!((s.x, s.concurrence()), (1.0, 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = reduce(&[c(h), ZERO, ZERO, c(h)]).unwrap();
        assert_abs_diff_eq!(s.x, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.concurrence(), 1.0, epsilon = 1e-12);
        assert!(matches!(reduce(&[c(1.1), ZERO, ZERO, ZERO]), Err(QigError::NotNormalized(_))));
    }

    #[test]
    fn radius_and_concurrence_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = CircuitSpec::new(2, vec![Entangler::Xx]).unwrap();
        for _ in 0..200 {
            let t = rand_theta(&mut rng, spec.n_params());
            let s = reduce(&statevector_oracle(&spec, &t).unwrap()).unwrap();
            let r = s.radius();
            assert!((r * r + s.concurrence().powi(2) - 1.0).abs() < 1e-12);
            let d = s.delta();
            assert!((-1e-15..=0.25 + 1e-15).contains(&d));
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_from_concurrence(0.0), 0.0);
        assert_abs_diff_eq!(entropy_from_concurrence(1.0), 1.0, epsilon = 1e-15);
        let s = reduce(&amplitudes(&THETA_SINGULAR).to_state()).unwrap();
        let (cc, ent) = concurrence_entropy(&s);
        assert_abs_diff_eq!(cc, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ent, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let t = rand_theta(&mut rng, 4);
            let s = reduce(&amplitudes(&[t[0], t[1], t[2], t[3]]).to_state()).unwrap();
            let (_, a) = concurrence_entropy(&s);
            let b = entropy_eigen(&s.rho());
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let t = rand_theta(&mut rng, 4);
            let th = [t[0], t[1], t[2], t[3]];
            let jet = bloch_derivatives(&th, 2);
            let field = |p: &[f64]| {
                let s = reduce(&amplitudes(&[p[0], p[1], p[2], p[3]]).to_state()).unwrap();
                DMatrix::from_row_slice(1, 3, &[s.x, s.z.re, s.z.im])
            };
            for k in 0..4 {
                let fd = central_diff(field, &t, k, h);
                worst = worst.max((fd[0] - jet.dx(k)).abs());
                worst = worst.max((fd[1] - jet.dz(k).re).abs());
                worst = worst.max((fd[2] - jet.dz(k).im).abs());
                let dfield = |p: &[f64]| {
                    let j = bloch_derivatives(&[p[0], p[1], p[2], p[3]], 1);
                    DMatrix::from_row_slice(1, 3, &[j.dx(k), j.dz(k).re, j.dz(k).im])
                };
                for l in 0..4 {
                    let fd2 = central_diff(dfield, &t, l, h);
                    worst = worst.max((fd2[0] - jet.d2[k][l].a).abs());
                    worst = worst.max((fd2[1] + jet.d2[k][l].b.re).abs());
                }
            }
        }
        assert!(worst <= 1e-7, "{worst}");
    }

    #[test]
    fn on_shell_identity_at_singular_point_and_random_points() {
        let mut pts: Vec<HeaParams> = vec![THETA_SINGULAR, THETA_STAR];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let t = rand_theta(&mut rng, 4);
            pts.push([t[0], t[1], t[2], t[3]]);
        }
        for t in pts {
            let j = bloch_derivatives(&t, 1);
            let s = j.state();
            for k in 0..4 {
                // C C_i = d(Delta)*2 = 2(1-2x)x_i - 4 Re(conj z z_i)
                let rhs = 2.0 * (1.0 - 2.0 * s.x) * j.dx(k) - 4.0 * (s.z.conj() * j.dz(k)).re;
                let r = j.bloch();
                let dr = j.dbloch()[k];
                let lhs = -(r[0] * dr[0] + r[1] * dr[1] + r[2] * dr[2]);
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn half_period_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let t = rand_theta(&mut rng, 4);
            let th = [t[0], t[1], t[2], t[3]];
            let s0 = reduce(&amplitudes(&th).to_state()).unwrap();
            for k in 0..4 {
                let mut u = th;
                u[k] += PI;
                let s1 = reduce(&amplitudes(&u).to_state()).unwrap();
                assert!((s0.x - s1.x).abs() < 1e-12);
                assert!((s0.z.norm() - s1.z.norm()).abs() < 1e-12);
                assert!((s0.concurrence() - s1.concurrence()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pure_qfim_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hea = CircuitSpec::hea();
        for _ in 0..100 {
            let t = rand_theta(&mut rng, 4);
            let j = state_jet(&hea, &t, 1).unwrap();
            let (re, im) = qgt_from_jet(&j.psi, &j.d1);
            assert!(im.norm() < 1e-12);
            let ev = eigh_sym(&re).values;
            assert!(ev[3] >= -1e-12);
        }
        let spec = CircuitSpec::new(2, vec![Entangler::Zz]).unwrap();
        for _ in 0..50 {
            let t = rand_theta(&mut rng, spec.n_params());
            let f = pure_state_qfim(&spec, &t).unwrap();
            let v: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = nalgebra::DVector::from_vec(v);
            assert!((v.transpose() * &f * &v)[0] >= -1e-12);
        }
    }

    #[test]
    fn pure_qfim_is_gauge_invariant() {
        let t = [0.3, -0.8, 1.1, 0.4];
        let j = state_jet(&ClosedFormHea, &t, 1).unwrap();
        let phi = 0.7 * t[0] - 1.3 * t[2] * t[3];
        let grad_phi = [0.7, 0.0, -1.3 * t[3], -1.3 * t[2]];
        let e = Complex64::from_polar(1.0, phi);
        let psi = j.psi.map(|a| a * e);
        let d1: Vec<StateVector> = (0..4)
            .map(|k| [0, 1, 2, 3].map(|i| e * (j.d1[k][i] + Complex64::new(0.0, grad_phi[k]) * j.psi[i])))
            .collect();
        let f0 = qgt_from_jet(&j.psi, &j.d1).0;
        let f1 = qgt_from_jet(&psi, &d1).0;
        assert!((f0 - f1).norm() < 1e-12);
    }
}
