//! Small dense kernels: closed-form 2x2 Hermitian eigendecomposition, real
//! symmetric eigendecomposition with a deterministic sign convention, the
//! support-restricted pseudoinverse and centred finite-difference stencils.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QigError, Result};

/// Real symmetric m x m matrix (metric tensors, projectors).
pub type SymMatrix = DMatrix<f64>;

/// 2x2 Hermitian matrix `[[a, b], [conj(b), d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermitianMatrix2 {
    pub a: f64,
    pub b: Complex64,
    pub d: f64,
}

impl HermitianMatrix2 {
    pub fn new(a: f64, b: Complex64, d: f64) -> Self {
        Self { a, b, d }
    }

    pub fn identity() -> Self {
        Self::new(1.0, Complex64::new(0.0, 0.0), 1.0)
    }

    pub fn pauli_x() -> Self {
        Self::new(0.0, Complex64::new(1.0, 0.0), 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.d * s)
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.a, 0.0), self.b],
            [self.b.conj(), Complex64::new(self.d, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b.norm_sqr()
    }

    /// `<u|H|v>` for column vectors `u`, `v`.
    pub fn sandwich(&self, u: &[Complex64; 2], v: &[Complex64; 2]) -> Complex64 {
        let e = self.entries();
        let hv = [e[0][0] * v[0] + e[0][1] * v[1], e[1][0] * v[0] + e[1][1] * v[1]];
        u[0].conj() * hv[0] + u[1].conj() * hv[1]
    }
}

impl Add for HermitianMatrix2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b, self.d + o.d)
    }
}

impl Sub for HermitianMatrix2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b, self.d - o.d)
    }
}

impl Neg for HermitianMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul<f64> for HermitianMatrix2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Product of two 2x2 complex matrices.
pub fn matmul2(x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Eigenvalues (descending) and orthonormal eigenvectors of a 2x2 Hermitian matrix.
///
/// Each eigenvector is phased so that its largest-magnitude component is real and positive.
pub fn eigh_hermitian2(h: &HermitianMatrix2) -> ([f64; 2], [[Complex64; 2]; 2]) {
    let mean = 0.5 * (h.a + h.d);
    let half_diff = 0.5 * (h.a - h.d);
    let rad = (half_diff * half_diff + h.b.norm_sqr()).sqrt();
    let lam = [mean + rad, mean - rad];
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    if h.b.norm() <= 1e-300 {
        let vecs = if h.a >= h.d {
            [[one, zero], [zero, one]]
        } else {
            [[zero, one], [one, zero]]
        };
        return (lam, vecs);
    }

    // (H - λ) v = 0. Pick the row with the larger pivot for stability.
    let mut vecs = [[zero; 2]; 2];
    for (k, &l) in lam.iter().enumerate() {
        let r0 = (h.a - l).abs() + h.b.norm();
        let r1 = (h.d - l).abs() + h.b.norm();
        let v = if r0 >= r1 {
            // (a - l) v0 + b v1 = 0  ->  v = (b, l - a)
            [h.b, Complex64::new(l - h.a, 0.0)]
        } else {
            // conj(b) v0 + (d - l) v1 = 0  ->  v = (l - d, conj(b))
            [Complex64::new(l - h.d, 0.0), h.b.conj()]
        };
        vecs[k] = phase_fix(normalize2(v));
    }
    (lam, vecs)
}

fn normalize2(v: [Complex64; 2]) -> [Complex64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn phase_fix(v: [Complex64; 2]) -> [Complex64; 2] {
    let big = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let ph = big / big.norm();
    [v[0] / ph, v[1] / ph]
}

/// Full spectral decomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSplit {
    /// Eigenvalues in descending order.
    pub values: DVector<f64>,
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
    /// Number of leading eigenpairs treated as active.
    pub active_count: usize,
}

impl EigenSplit {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn active_vectors(&self) -> DMatrix<f64> {
        self.vectors.columns(0, self.active_count).into_owned()
    }

    pub fn inactive_vectors(&self) -> DMatrix<f64> {
        let m = self.dim();
        self.vectors
            .columns(self.active_count, m - self.active_count)
            .into_owned()
    }

    pub fn with_active(mut self, active_count: usize) -> Self {
        self.active_count = active_count.min(self.dim());
        self
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// `active_count` is left at zero; callers decide the split.
pub fn eigh_sym(m: &SymMatrix) -> EigenSplit {
    let n = m.nrows();
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        values[k] = eig.eigenvalues[i];
        let mut col = eig.eigenvectors.column(i).into_owned();
        let mut lead = 0;
        for r in 1..n {
            if col[r].abs() > col[lead].abs() + 1e-14 {
                lead = r;
            }
        }
        if col[lead] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }
    EigenSplit {
        values,
        vectors,
        active_count: 0,
    }
}

/// `sum_{a active} (lambda_a + ridge)^-1 v_a v_a^T`; inactive directions map to zero.
pub fn pinv_on_support(m: &SymMatrix, split: &EigenSplit, ridge: f64) -> Result<SymMatrix> {
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(QigError::Domain(format!("ridge must be nonnegative, got {ridge}")));
    }
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..split.active_count {
        let lam = split.values[a] + ridge;
        if lam <= 0.0 {
            return Err(QigError::NonpositiveActive(lam));
        }
        let v = split.vectors.column(a);
        out += (v * v.transpose()) / lam;
    }
    Ok(out)
}

/// Spectral norm of a symmetric matrix.
pub fn sym_norm2(m: &SymMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let e = SymmetricEigen::new(0.5 * (m + m.transpose()));
    e.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Spectral norm of a general matrix.
pub fn op_norm2(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0f64, |a, v| a.max(*v))
}

fn shifted(theta: &[f64], i: usize, s: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[i] += s;
    t
}

/// `(phi(theta + h e_i) - phi(theta - h e_i)) / 2h`.
pub fn central_diff<T, F>(phi: F, theta: &[f64], i: usize, h: f64) -> T
where
    F: Fn(&[f64]) -> T,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    (phi(&shifted(theta, i, h)) - phi(&shifted(theta, i, -h))) * (0.5 / h)
}

/// Centred second derivative along `e_i`.
pub fn central_second<F>(phi: F, theta: &[f64], i: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    (phi(&shifted(theta, i, h)) - 2.0 * phi(theta) + phi(&shifted(theta, i, -h))) / (h * h)
}

/// Four-point stencil for the mixed partial along `e_i`, `e_j`.
pub fn central_mixed<F>(phi: F, theta: &[f64], i: usize, j: usize, h: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if i == j {
        return central_second(phi, theta, i, h);
    }
    let pp = phi(&shifted(&shifted(theta, i, h), j, h));
    let pm = phi(&shifted(&shifted(theta, i, h), j, -h));
    let mp = phi(&shifted(&shifted(theta, i, -h), j, h));
    let mm = phi(&shifted(&shifted(theta, i, -h), j, -h));
    (pp - pm - mp + mm) / (4.0 * h * h)
}

/// One-dimensional centred difference.
pub fn central_diff_1d<F: Fn(f64) -> f64>(phi: F, x: f64, h: f64) -> f64 {
    (phi(x + h) - phi(x - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian2_examples() {
        let (l, _) = eigh_hermitian2(&HermitianMatrix2::identity().scale(0.5));
        assert_eq!(l, [0.5, 0.5]);
        let (l, v) = eigh_hermitian2(&HermitianMatrix2::pauli_x());
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(l[1], -1.0, epsilon = 1e-15);
        assert!(v[0][0].re > 0.0);
        // θ★ reduced state
        let rho = HermitianMatrix2::new(0.6275, Complex64::new(0.4516, 0.0), 0.3725);
        let (l, _) = eigh_hermitian2(&rho);
        assert!((l[0] - 0.9693).abs() < 5e-4 && (l[1] - 0.0307).abs() < 5e-4);
    }

    #[test]
    fn hermitian2_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let h = HermitianMatrix2::new(
                rng.random_range(-1.0..1.0),
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-1.0..1.0),
            );
            let (l, v) = eigh_hermitian2(&h);
            assert!(l[0] >= l[1]);
            let e = h.entries();
            for i in 0..2 {
                for j in 0..2 {
                    let rec = v[0][i] * v[0][j].conj() * l[0] + v[1][i] * v[1][j].conj() * l[1];
                    assert!((rec - e[i][j]).norm() < 1e-13);
                }
            }
            let ov = v[0][0].conj() * v[1][0] + v[0][1].conj() * v[1][1];
            assert!(ov.norm() < 1e-13);
        }
    }

    #[test]
    fn eigh_sym_examples() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.0, 4.0, 0.0]));
        let s = eigh_sym(&d);
        assert_eq!(s.values.as_slice(), &[4.0, 4.0, 0.0, 0.0]);
        let z = eigh_sym(&DMatrix::zeros(4, 4));
        assert!(z.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn eigh_sym_residual_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=6 {
            for _ in 0..30 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let m = &a + a.transpose();
                let s = eigh_sym(&m);
                let rec = &s.vectors * DMatrix::from_diagonal(&s.values) * s.vectors.transpose();
                assert!((rec - &m).norm() <= 1e-12 * m.norm().max(1.0));
                let vtv = s.vectors.transpose() * &s.vectors;
                assert!((vtv - DMatrix::<f64>::identity(n, n)).norm() < 1e-12);
                for k in 1..n {
                    assert!(s.values[k - 1] >= s.values[k]);
                }
            }
        }
    }

    #[test]
    fn pinv_examples() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let s = eigh_sym(&m).with_active(1);
        let p = pinv_on_support(&m, &s, 0.0).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(1, 1)], 0.0, epsilon = 1e-15);
        let p = pinv_on_support(&m, &s, 1.0).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        let id = DMatrix::<f64>::identity(3, 3);
        let s = eigh_sym(&id).with_active(3);
        assert_eq!(pinv_on_support(&id, &s, 0.0).unwrap(), id);
    }

    #[test]
    fn pinv_rejects_nonpositive() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let s = eigh_sym(&m).with_active(2);
        assert!(matches!(
            pinv_on_support(&m, &s, 0.0),
            Err(QigError::NonpositiveActive(_))
        ));
    }

    #[test]
    fn pinv_times_matrix_is_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let m = &b * b.transpose();
        let s = eigh_sym(&m).with_active(2);
        let p = pinv_on_support(&m, &s, 0.0).unwrap();
        let ua = s.active_vectors();
        let proj = &ua * ua.transpose();
        assert!((&p * &m - &proj).norm() < 1e-10);
    }

    #[test]
    fn central_differences() {
        let sq = |t: &[f64]| t[0] * t[0];
        assert_abs_diff_eq!(central_diff(sq, &[1.0], 0, 1e-4), 2.0, epsilon = 1e-8);
        let sn = |t: &[f64]| t[0].sin();
        let e1 = (central_diff(sn, &[0.0], 0, 1e-2) - 1.0).abs();
        let e2 = (central_diff(sn, &[0.0], 0, 5e-3) - 1.0).abs();
        assert!(e1 < 1e-4);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
        let cube = |t: &[f64]| t[0].powi(3);
        assert_abs_diff_eq!(central_second(cube, &[1.0], 0, 1e-3), 6.0, epsilon = 1e-6);
        let mixed = |t: &[f64]| t[0] * t[0] * t[1];
        assert_abs_diff_eq!(central_mixed(mixed, &[1.0, 2.0], 0, 1, 1e-3), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn central_diff_of_matrix_field() {
        let f = |t: &[f64]| DMatrix::from_row_slice(2, 2, &[t[0], t[0] * t[0], 0.0, 1.0]);
        let d = central_diff(f, &[3.0], 0, 1e-4);
        assert_abs_diff_eq!(d[(0, 1)], 6.0, epsilon = 1e-8);
    }
}
