//! Gaussian curvature of a surface from its first fundamental form by the
//! Brioschi determinant formula, with all derivatives by centred differences.
//! The two-term divergence form
//! `K = -1/(2W) [ d_u((G_u - F_v)/W) + d_v((E_v - F_u)/W) ]`, `W = sqrt(EG - F^2)`,
//! is also provided; it is exact only where the chart is orthogonal.

use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};

/// `ds^2 = E du^2 + 2F du dv + G dv^2` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstFundamentalForm {
    pub e: f64,
    pub f: f64,
    pub g: f64,
}

impl FirstFundamentalForm {
    pub fn new(e: f64, f: f64, g: f64) -> Self {
        Self { e, f, g }
    }

    pub fn discriminant(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// `|EG - F^2| / max(E, G, 1)`.
    pub fn guard_ratio(&self) -> f64 {
        self.discriminant().abs() / self.e.max(self.g).max(1.0)
    }
}

/// Whether the form passes the degeneracy guard at threshold `eta`.
pub fn brioschi_guard(form: &FirstFundamentalForm, eta: f64) -> Result<()> {
    let q = form.guard_ratio();
    if !(q >= eta) || form.e <= 0.0 || form.g <= 0.0 || form.discriminant() <= 0.0 {
        return Err(QigError::Brioschi { value: q, min: eta });
    }
    Ok(())
}

fn guarded<F>(form: &F, eta: f64) -> impl Fn(f64, f64) -> Result<FirstFundamentalForm> + '_
where
    F: Fn(f64, f64) -> Result<FirstFundamentalForm>,
{
    move |u, v| {
        let f = form(u, v)?;
        brioschi_guard(&f, eta)?;
        Ok(f)
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Brioschi `K(u, v)` with step `h`; the guard is enforced at every stencil point.
pub fn brioschi_k<F>(form: F, u: f64, v: f64, h: f64, eta: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<FirstFundamentalForm>,
{
    let at = guarded(&form, eta);
    let c = at(u, v)?;
    let (up, um, vp, vm) = (at(u + h, v)?, at(u - h, v)?, at(u, v + h)?, at(u, v - h)?);
    let (pp, pm, mp, mm) = (at(u + h, v + h)?, at(u + h, v - h)?, at(u - h, v + h)?, at(u - h, v - h)?);
    let d1 = |p: f64, m: f64| (p - m) / (2.0 * h);
    let d2 = |p: f64, z: f64, m: f64| (p - 2.0 * z + m) / (h * h);
    let dm = |a: f64, b: f64, c: f64, d: f64| (a - b - c + d) / (4.0 * h * h);
    let (e, f, g) = (c.e, c.f, c.g);
    let (eu, ev) = (d1(up.e, um.e), d1(vp.e, vm.e));
    let (fu, fv) = (d1(up.f, um.f), d1(vp.f, vm.f));
    let (gu, gv) = (d1(up.g, um.g), d1(vp.g, vm.g));
    let evv = d2(vp.e, e, vm.e);
    let guu = d2(up.g, g, um.g);
    let fuv = dm(pp.f, pm.f, mp.f, mm.f);
    let a = det3([
        [-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev],
        [fv - 0.5 * gu, e, f],
        [0.5 * gv, f, g],
    ]);
    let b = det3([[0.0, 0.5 * ev, 0.5 * gu], [0.5 * ev, e, f], [0.5 * gu, f, g]]);
    let w2 = c.discriminant();
    Ok((a - b) / (w2 * w2))
}

/// Two-term divergence form of `K(u, v)`; reduces to Brioschi when `F = 0`.
pub fn divergence_form_k<F>(form: F, u: f64, v: f64, h: f64, eta: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<FirstFundamentalForm>,
{
    let at = guarded(&form, eta);
    let w0 = at(u, v)?.discriminant().sqrt();
    // P = (G_u - F_v) / W and Q = (E_v - F_u) / W
    let p = |u: f64, v: f64| -> Result<f64> {
        let (up, um, vp, vm) = (at(u + h, v)?, at(u - h, v)?, at(u, v + h)?, at(u, v - h)?);
        let w = at(u, v)?.discriminant().sqrt();
        Ok(((up.g - um.g) - (vp.f - vm.f)) / (2.0 * h * w))
    };
    let q = |u: f64, v: f64| -> Result<f64> {
        let (up, um, vp, vm) = (at(u + h, v)?, at(u - h, v)?, at(u, v + h)?, at(u, v - h)?);
        let w = at(u, v)?.discriminant().sqrt();
        Ok(((vp.e - vm.e) - (up.f - um.f)) / (2.0 * h * w))
    };
    let dp = (p(u + h, v)? - p(u - h, v)?) / (2.0 * h);
    let dq = (q(u, v + h)? - q(u, v - h)?) / (2.0 * h);
    Ok(-(dp + dq) / (2.0 * w0))
}
