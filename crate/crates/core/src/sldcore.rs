//! Closed-form symmetric logarithmic derivative of a qubit state.
//!
//! For `rho = [[x, z], [conj z, 1 - x]]` and a tangent `(dx, dz)` the SLD
//! `L = [[p, l], [conj l, q]]` solving `d rho = (rho L + L rho) / 2` has
//! `l = 2 dz - z (p + q)` and a symmetric 2x2 system for `(p, q)` with determinant
//! `Delta = x(1 - x) - |z|^2`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QigError, Result};
use crate::linops::{matmul2, HermitianMatrix2, SymMatrix};

/// `L = [[x_i, a_i + i b_i], [a_i - i b_i, y_i]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldOperator {
    pub x_i: f64,
    pub y_i: f64,
    pub a_i: f64,
    pub b_i: f64,
}

impl SldOperator {
    pub fn to_matrix(&self) -> HermitianMatrix2 {
        HermitianMatrix2::new(self.x_i, Complex64::new(self.a_i, self.b_i), self.y_i)
    }

    /// `x_i + y_i`, equal to `2 C_i / C` on a pure two-qubit reduction.
    pub fn trace(&self) -> f64 {
        self.x_i + self.y_i
    }
}

/// State `(x, z)` and tangent `(dx, dz)` of `rho = [[x, z], [conj z, 1 - x]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldInputs {
    pub x: f64,
    pub z: Complex64,
    pub dx: f64,
    pub dz: Complex64,
}

impl SldInputs {
    pub fn from_matrices(rho: &HermitianMatrix2, drho: &HermitianMatrix2) -> Self {
        Self {
            x: rho.a,
            z: rho.b,
            dx: drho.a,
            dz: drho.b,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.z.norm_sqr()
    }

    pub fn beta(&self) -> f64 {
        2.0 * (self.dz * self.z.conj()).re
    }

    pub fn delta(&self) -> f64 {
        self.x * (1.0 - self.x) - self.alpha()
    }

    pub fn rho(&self) -> HermitianMatrix2 {
        HermitianMatrix2::new(self.x, self.z, 1.0 - self.x)
    }

    pub fn drho(&self) -> HermitianMatrix2 {
        HermitianMatrix2::new(self.dx, self.dz, -self.dx)
    }
}

const PIVOT_TOL: f64 = 1e-15;

/// Solve the symmetric 2x2 system by a pivoted LDL^T factorisation.
fn ldl_solve2(m: [[f64; 2]; 2], rhs: [f64; 2]) -> Result<[f64; 2]> {
    let swap = m[1][1].abs() > m[0][0].abs();
    let (a, b, d, r0, r1) = if swap {
        (m[1][1], m[0][1], m[0][0], rhs[1], rhs[0])
    } else {
        (m[0][0], m[0][1], m[1][1], rhs[0], rhs[1])
    };
    if a.abs() < PIVOT_TOL {
        return Err(QigError::Domain("SLD system pivot underflow".into()));
    }
    let l = b / a;
    let d2 = d - l * b;
    if d2.abs() < PIVOT_TOL {
        return Err(QigError::Domain("SLD system pivot underflow".into()));
    }
    // L y = r, D w = y, L^T s = w
    let y1 = r1 - l * r0;
    let w0 = r0 / a;
    let w1 = y1 / d2;
    let s1 = w1;
    let s0 = w0 - l * s1;
    Ok(if swap { [s1, s0] } else { [s0, s1] })
}

/// SLD for one tangent; fails with the boundary error when `Delta < tau`.
pub fn sld_closed_form(input: &SldInputs, tau: f64) -> Result<SldOperator> {
    let delta = input.delta();
    if delta < tau {
        return Err(QigError::BoundaryStratum { delta, tau });
    }
    let alpha = input.alpha();
    let beta = input.beta();
    let x = input.x;
    let m = [[x - alpha, -alpha], [-alpha, 1.0 - x - alpha]];
    let [p, q] = ldl_solve2(m, [input.dx - beta, -input.dx - beta])?;
    let s = p + q;
    Ok(SldOperator {
        x_i: p,
        y_i: q,
        a_i: 2.0 * input.dz.re - input.z.re * s,
        b_i: 2.0 * input.dz.im - input.z.im * s,
    })
}

/// `|| d rho - (rho L + L rho) / 2 ||_F`.
pub fn lyapunov_residual(input: &SldInputs, l: &SldOperator) -> f64 {
    let rho = input.rho().entries();
    let lm = l.to_matrix().entries();
    let d = input.drho().entries();
    let a = matmul2(&rho, &lm);
    let b = matmul2(&lm, &rho);
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += (d[i][j] - 0.5 * (a[i][j] + b[i][j])).norm_sqr();
        }
    }
    s.sqrt()
}

/// `F_ij = Tr[rho (L_i L_j + L_j L_i)] / 2`.
pub fn sld_qfim(rho: &HermitianMatrix2, sld: &[SldOperator]) -> SymMatrix {
    let m = sld.len();
    let r = rho.entries();
    let mats: Vec<_> = sld.iter().map(|l| l.to_matrix().entries()).collect();
    let mut f = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let p = matmul2(&r, &matmul2(&mats[i], &mats[j]));
            let v = (p[0][0] + p[1][1]).re;
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    f
}

/// SLD QFIM of `rho` over the tangents `drho`.
pub fn sld_qfim_from_tangents(
    rho: &HermitianMatrix2,
    drho: &[HermitianMatrix2],
    tau: f64,
) -> Result<SymMatrix> {
    let ops = drho
        .iter()
        .map(|d| sld_closed_form(&SldInputs::from_matrices(rho, d), tau))
        .collect::<Result<Vec<_>>>()?;
    Ok(sld_qfim(rho, &ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hea::{bloch_derivatives, HeaParams, THETA_SINGULAR, THETA_STAR};
    use crate::petz::{qfim_eigenbasis_oracle, OperatorMonotoneSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sld_f(t: &HeaParams) -> SymMatrix {
        let j = bloch_derivatives(t, 1);
        sld_qfim_from_tangents(&j.rho, &j.d1, 1e-14).unwrap()
    }

    #[test]
    fn maximally_mixed_diagonal_tangent() {
        let eps = 0.01;
        let inp = SldInputs {
            x: 0.5,
            z: Complex64::new(0.0, 0.0),
            dx: eps,
            dz: Complex64::new(0.0, 0.0),
        };
        let l = sld_closed_form(&inp, 1e-12).unwrap();
        assert_abs_diff_eq!(l.x_i, 2.0 * eps, epsilon = 1e-15);
        assert_abs_diff_eq!(l.y_i, -2.0 * eps, epsilon = 1e-15);
        assert!(lyapunov_residual(&inp, &l) <= 1e-14);
    }

    #[test]
    fn boundary_is_reported() {
        let inp = SldInputs {
            x: 1.0,
            z: Complex64::new(0.0, 0.0),
            dx: 0.0,
            dz: Complex64::new(0.1, 0.0),
        };
        assert!(matches!(
            sld_closed_form(&inp, 1e-12),
            Err(QigError::BoundaryStratum { .. })
        ));
    }

    #[test]
    fn residual_and_trace_identity_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut n = 0;
        while n < 100 {
            let t: HeaParams = [0; 4].map(|_| rng.random_range(0.0..std::f64::consts::PI));
            let j = bloch_derivatives(&t, 1);
            let st = j.state();
            if st.delta() < 1e-4 {
                continue;
            }
            n += 1;
            for k in 0..4 {
                let inp = SldInputs::from_matrices(&j.rho, &j.d1[k]);
                let l = sld_closed_form(&inp, 1e-12).unwrap();
                assert!(lyapunov_residual(&inp, &l) <= 1e-12);
                let want = 2.0 * j.dconcurrence(k) / st.concurrence();
                assert!((l.trace() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn theta_star_matrix() {
        let f = sld_f(&THETA_STAR);
        let printed = [
            [4.000, 0.0, -1.174, 0.0],
            [0.0, 0.521, -1.287, 0.0],
            [-1.174, -1.287, 3.524, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((f[(i, j)] - printed[i][j]).abs() < 5e-3, "({i},{j}) {}", f[(i, j)]);
            }
        }
    }

    #[test]
    fn singular_point_is_diag_4400() {
        let f = sld_f(&THETA_SINGULAR);
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 4.0, 0.0, 0.0]));
        assert!((f - want).amax() < 1e-12);
    }

    #[test]
    fn agrees_with_eigenbasis_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let sld = OperatorMonotoneSpec::sld();
        for _ in 0..200 {
            let t: HeaParams = [0; 4].map(|_| rng.random_range(0.0..std::f64::consts::PI));
            let j = bloch_derivatives(&t, 1);
            if j.state().delta() < 1e-6 {
                continue;
            }
            let a = sld_qfim_from_tangents(&j.rho, &j.d1, 1e-14).unwrap();
            let b = qfim_eigenbasis_oracle(&sld, &j.rho, &j.d1).unwrap();
            assert!((&a - &b).amax() < 1e-10 * (1.0 + a.amax()));
        }
    }

    #[test]
    fn ldl_matches_cramer() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let x: f64 = rng.random_range(0.05..0.95);
            let zr = rng.random_range(-0.2..0.2);
            let zi = rng.random_range(-0.2..0.2);
            let inp = SldInputs {
                x,
                z: Complex64::new(zr, zi),
                dx: rng.random_range(-1.0..1.0),
                dz: Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            };
            if inp.delta() <= 1e-3 {
                continue;
            }
            let l = sld_closed_form(&inp, 1e-12).unwrap();
            let (a, b, d) = (inp.alpha(), inp.beta(), inp.delta());
            let xi = (b * (x - 1.0) - inp.dx * (2.0 * a + x - 1.0)) / d;
            let yi = ((2.0 * a - x) * inp.dx - b * x) / d;
            assert!((l.x_i - xi).abs() < 1e-10 && (l.y_i - yi).abs() < 1e-10);
        }
    }
}
