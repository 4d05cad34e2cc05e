//! Variational ground-state search on two qubits: Pauli-sum Hamiltonians,
//! parameter-shift gradients, Euclidean descent and the support-projected
//! Petz natural gradient.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QigError, Result};
use crate::geometry::{FisherVariant, PetzField, ReducedModel};
use crate::hea::{pure_state_qfim, CircuitSpec, StateModel, StateVector};
use crate::linops::{eigh_sym, SymMatrix};
use crate::noise::CMatrix4;
use crate::petz::OperatorMonotoneSpec;
use crate::support::{split_with_rule, SupportSplit, TauRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    /// Two characters from `IXYZ`; the first acts on qubit A.
    pub ops: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSumHamiltonian {
    pub terms: Vec<PauliTerm>,
}

fn pauli(c: char) -> Result<[[Complex64; 2]; 2]> {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0));
    Ok(match c {
        'I' => [[l, o], [o, l]],
        'X' => [[o, l], [l, o]],
        'Y' => [[o, -i], [i, o]],
        'Z' => [[l, o], [o, -l]],
        _ => return Err(QigError::Config(format!("unknown Pauli '{c}'"))),
    })
}

impl PauliSumHamiltonian {
    pub fn new(terms: Vec<(f64, &str)>) -> Result<Self> {
        let h = Self {
            terms: terms
                .into_iter()
                .map(|(coeff, ops)| PauliTerm {
                    coeff,
                    ops: ops.to_string(),
                })
                .collect(),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(QigError::Config("Hamiltonian has no terms".into()));
        }
        for t in &self.terms {
            if t.ops.chars().count() != 2 {
                return Err(QigError::Config(format!("Pauli string '{}' must have length 2", t.ops)));
            }
            for c in t.ops.chars() {
                pauli(c)?;
            }
            if !t.coeff.is_finite() {
                return Err(QigError::Config("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Dense matrix in the basis `|ab>`, index `2a + b`.
    pub fn dense(&self) -> Result<CMatrix4> {
        self.validate()?;
        let mut m = CMatrix4::zeros();
        for t in &self.terms {
            let mut cs = t.ops.chars();
            let pa = pauli(cs.next().unwrap_or('I'))?;
            let pb = pauli(cs.next().unwrap_or('I'))?;
            for r in 0..4 {
                for c in 0..4 {
                    m[(r, c)] += pa[r / 2][c / 2] * pb[r % 2][c % 2] * t.coeff;
                }
            }
        }
        Ok(m)
    }

    /// `ZZ + 0.5 (XI + IX) + 0.3 ZI`: a transverse-field Ising pair with a
    /// longitudinal bias. Not taken from any published experiment.
    pub fn toy() -> Self {
        Self::new(vec![(1.0, "ZZ"), (0.5, "XI"), (0.5, "IX"), (0.3, "ZI")]).expect("valid")
    }

    /// Two-qubit reduced H2 in STO-3G near equilibrium.
    pub fn h2() -> Self {
        Self::new(vec![
            (-1.0523732, "II"),
            (0.39793742, "IZ"),
            (-0.39793742, "ZI"),
            (-0.0112801, "ZZ"),
            (0.18093119, "XX"),
        ])
        .expect("valid")
    }
}

/// Smallest eigenvalue and a ground vector of the dense Hamiltonian.
pub fn exact_ground(h: &PauliSumHamiltonian) -> Result<(f64, StateVector)> {
    let m = h.dense()?;
    let e = m.symmetric_eigen();
    let (k, &ev) = e
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| QigError::Domain("empty spectrum".into()))?;
    let v = e.eigenvectors.column(k);
    Ok((ev, [v[0], v[1], v[2], v[3]]))
}

pub fn expectation(m: &CMatrix4, psi: &StateVector) -> f64 {
    let mut s = Complex64::new(0.0, 0.0);
    for r in 0..4 {
        for c in 0..4 {
            s += psi[r].conj() * m[(r, c)] * psi[c];
        }
    }
    s.re
}

/// `E(theta) = <psi|H|psi>`.
pub fn energy(model: &dyn StateModel, params: &[f64], h: &CMatrix4) -> Result<f64> {
    Ok(expectation(h, &model.state(params)?))
}

/// Energy and parameter-shift gradient `dE/dt_k = E(t + pi/4 e_k) - E(t - pi/4 e_k)`,
/// exact for gates `exp(-i t P)` with `P^2 = 1`.
pub fn energy_and_gradient(model: &dyn StateModel, params: &[f64], h: &CMatrix4) -> Result<(f64, Vec<f64>)> {
    let e = energy(model, params, h)?;
    let q = std::f64::consts::FRAC_PI_4;
    let mut p = params.to_vec();
    let mut g = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        p[k] = params[k] + q;
        let ep = energy(model, &p, h)?;
        p[k] = params[k] - q;
        let em = energy(model, &p, h)?;
        p[k] = params[k];
        g.push(ep - em);
    }
    Ok((e, g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Euclidean,
    Natgrad,
}

/// Tensor used to precondition the natural gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Petz tensor of the one-qubit reduction.
    #[default]
    ReducedPetz,
    /// QFIM of the full two-qubit pure state.
    PureState,
    /// `F = I`.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Armijo {
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for Armijo {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub eta: f64,
    pub ridge: f64,
    /// Active eigenvalues move toward their mean by this fraction.
    pub shrinkage: f64,
    /// Cap on `sqrt(step^T F step)`.
    pub gnorm_cap: Option<f64>,
    /// Cap on the Euclidean step length.
    pub tr_radius: Option<f64>,
    pub armijo: Option<Armijo>,
    pub partial_fisher: bool,
    pub ema_decay: f64,
    pub seed: u64,
    pub metric: String,
    pub preconditioner: Preconditioner,
    pub tau: TauRule,
    /// Unfreeze one more rotation layer every this many iterations.
    pub grow_every: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Natgrad,
            eta: 0.1,
            ridge: 1e-3,
            shrinkage: 0.0,
            gnorm_cap: None,
            tr_radius: None,
            armijo: Some(Armijo::default()),
            partial_fisher: false,
            ema_decay: 0.0,
            seed: 42,
            metric: "sld".into(),
            preconditioner: Preconditioner::ReducedPetz,
            tau: TauRule::Default,
            grow_every: None,
        }
    }
}

impl OptimizerConfig {
    pub fn euclidean(eta: f64) -> Self {
        Self {
            method: Method::Euclidean,
            eta,
            ..Self::default()
        }
    }

    pub fn natgrad(eta: f64) -> Self {
        Self {
            method: Method::Natgrad,
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QigError::Config(m.to_string()));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.ridge >= 0.0) {
            return bad("ridge must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.shrinkage) {
            return bad("shrinkage must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return bad("ema_decay must lie in [0, 1)");
        }
        if self.gnorm_cap.is_some_and(|c| !(c > 0.0)) || self.tr_radius.is_some_and(|c| !(c > 0.0)) {
            return bad("caps must be positive");
        }
        if let Some(a) = self.armijo {
            if !(a.c1 > 0.0 && a.c1 < 1.0) || !(a.backtrack > 0.0 && a.backtrack < 1.0) {
                return bad("armijo needs c1 and backtrack in (0, 1)");
            }
        }
        if self.grow_every == Some(0) {
            return bad("grow_every must be positive");
        }
        OperatorMonotoneSpec::from_name(&self.metric)?;
        Ok(())
    }
}

/// Descent direction before line search, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub step: Vec<f64>,
    /// `sqrt(g^T F^+ g)` on the support.
    pub grad_gnorm: f64,
    pub fallback: bool,
}

fn clip(step: &mut [f64], f: Option<&SymMatrix>, cfg: &OptimizerConfig) {
    if let (Some(cap), Some(f)) = (cfg.gnorm_cap, f) {
        let s = DVector::from_column_slice(step);
        let n = (s.transpose() * f * &s)[0].max(0.0).sqrt();
        if n > cap {
            step.iter_mut().for_each(|x| *x *= cap / n);
        }
    }
    if let Some(r) = cfg.tr_radius {
        let n = step.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > r {
            step.iter_mut().for_each(|x| *x *= r / n);
        }
    }
}

/// `-eta Pi (F + ridge I)^+ Pi g` with shrinkage, then the g-norm cap and trust region.
pub fn natgrad_step(grad: &[f64], f: &SymMatrix, split: &SupportSplit, cfg: &OptimizerConfig) -> StepOutcome {
    if split.rank == 0 {
        let mut step: Vec<f64> = grad.iter().map(|g| -cfg.eta * g).collect();
        clip(&mut step, None, cfg);
        return StepOutcome {
            step,
            grad_gnorm: 0.0,
            fallback: true,
        };
    }
    let g = DVector::from_column_slice(grad);
    let p = &split.projector;
    let r = split.rank;
    let vals: Vec<f64> = split.eigen.values.iter().take(r).copied().collect();
    let mean = vals.iter().sum::<f64>() / r as f64;
    let pg = p * &g;
    let mut v = DVector::zeros(grad.len());
    let mut gn = 0.0;
    for a in 0..r {
        let u = split.eigen.vectors.column(a);
        let lam = (1.0 - cfg.shrinkage) * vals[a] + cfg.shrinkage * mean + cfg.ridge;
        let c = u.dot(&pg);
        v += u * (c / lam);
        gn += c * c / lam;
    }
    let v = p * v;
    let mut step: Vec<f64> = v.iter().map(|x| -cfg.eta * x).collect();
    clip(&mut step, Some(f), cfg);
    StepOutcome {
        step,
        grad_gnorm: gn.sqrt(),
        fallback: false,
    }
}

/// Euclidean step `-eta g` with the same caps (the g-norm uses `F = I`).
pub fn euclidean_step(grad: &[f64], cfg: &OptimizerConfig) -> StepOutcome {
    let mut step: Vec<f64> = grad.iter().map(|g| -cfg.eta * g).collect();
    let n = grad.len();
    clip(&mut step, Some(&DMatrix::identity(n, n)), cfg);
    StepOutcome {
        step,
        grad_gnorm: grad.iter().map(|x| x * x).sum::<f64>().sqrt(),
        fallback: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub energy: f64,
    pub error: f64,
    pub grad_norm: f64,
    pub grad_gnorm: f64,
    pub rank: usize,
    pub gap: f64,
    pub projector_drift: f64,
    pub step_norm: f64,
    pub accepted: bool,
    pub backtracks: usize,
    pub fallback: bool,
    pub active_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeTrace {
    pub e_star: f64,
    pub rows: Vec<TraceRow>,
    pub final_energy: f64,
    pub final_params: Vec<f64>,
    pub warnings: Vec<String>,
}

impl VqeTrace {
    pub fn energies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy).collect()
    }

    pub fn final_error(&self) -> f64 {
        self.final_energy - self.e_star
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMetrics {
    pub auc: f64,
    pub hit95: Option<usize>,
}

/// Trapezoidal area of `max(E_k - E*, 0)` and the first iteration reaching 95%
/// of the possible descent.
pub fn metrics(energies: &[f64], e_star: f64) -> Result<TraceMetrics> {
    if energies.is_empty() {
        return Err(QigError::Domain("empty trace".into()));
    }
    let err: Vec<f64> = energies.iter().map(|e| (e - e_star).max(0.0)).collect();
    let auc = err.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    let e0 = energies[0];
    let total = e0 - e_star;
    let tol = 1e-12 * total.abs().max(1e-300);
    let hit95 = energies.iter().position(|e| e0 - e >= 0.95 * total - tol);
    Ok(TraceMetrics { auc, hit95 })
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub circuit: CircuitSpec,
    pub hamiltonian: PauliSumHamiltonian,
    pub optimizer: OptimizerConfig,
    pub max_iters: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Initial parameters; drawn uniformly from `[0, pi)` with the seed when absent.
    #[serde(default)]
    pub init: Option<Vec<f64>>,
}

impl RunConfig {
    /// Depth-4 circuit on the toy Hamiltonian, 400 iterations.
    pub fn toy(method: Method, eta: f64) -> Self {
        let optimizer = match method {
            Method::Euclidean => OptimizerConfig::euclidean(eta),
            Method::Natgrad => OptimizerConfig::natgrad(eta),
        };
        Self {
            circuit: CircuitSpec { depth: 4, entanglers: Vec::new(), seed: None },
            hamiltonian: PauliSumHamiltonian::toy(),
            optimizer,
            max_iters: 400,
            seed: Some(42),
            init: None,
        }
    }

    /// Depth-6 circuit on H2, 800 iterations.
    pub fn h2(method: Method, eta: f64) -> Self {
        Self {
            circuit: CircuitSpec { depth: 6, entanglers: Vec::new(), seed: None },
            hamiltonian: PauliSumHamiltonian::h2(),
            max_iters: 800,
            ..Self::toy(method, eta)
        }
    }

    pub fn initial_params(&self) -> Result<Vec<f64>> {
        let m = self.circuit.n_params();
        match &self.init {
            Some(p) if p.len() != m => Err(QigError::ParamCount { expected: m, got: p.len() }),
            Some(p) => Ok(p.clone()),
            None => {
                let seed = self.seed.unwrap_or(self.optimizer.seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..m).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect())
            }
        }
    }
}

struct Preconditioning {
    field: PetzField,
    spec: CircuitSpec,
    kind: Preconditioner,
}

impl Preconditioning {
    fn tensor(&self, theta: &[f64]) -> Result<SymMatrix> {
        match self.kind {
            Preconditioner::ReducedPetz => self.field.fisher(theta),
            Preconditioner::PureState => pure_state_qfim(&self.spec, theta),
            Preconditioner::Identity => {
                let n = theta.len();
                Ok(DMatrix::identity(n, n))
            }
        }
    }
}

fn active_mask(spec: &CircuitSpec, cfg: &OptimizerConfig, iter: usize) -> Vec<bool> {
    let m = spec.n_params();
    match cfg.grow_every {
        None => vec![true; m],
        Some(n) => {
            let layers = (1 + iter / n).min(spec.depth + 1);
            let mut mask = vec![false; m];
            for l in 0..layers {
                for k in spec.layer_indices(l) {
                    mask[k] = true;
                }
            }
            mask
        }
    }
}

fn masked(f: &SymMatrix, mask: &[bool]) -> SymMatrix {
    DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| if mask[i] && mask[j] { f[(i, j)] } else { 0.0 })
}

/// Run the optimiser; deterministic for a given configuration.
pub fn run(rc: &RunConfig) -> Result<VqeTrace> {
    rc.circuit.validate()?;
    rc.optimizer.validate()?;
    let cfg = &rc.optimizer;
    let h = rc.hamiltonian.dense()?;
    let (e_star, _) = exact_ground(&rc.hamiltonian)?;
    let spec = rc.circuit.clone();
    let model: Arc<dyn StateModel> = Arc::new(spec.clone());
    let variant = if cfg.partial_fisher { FisherVariant::Partial } else { FisherVariant::Full };
    let pre = Preconditioning {
        field: PetzField::new(OperatorMonotoneSpec::from_name(&cfg.metric)?, ReducedModel::new(model.clone()))
            .with_variant(variant),
        spec: spec.clone(),
        kind: cfg.preconditioner,
    };
    let mut theta = rc.initial_params()?;
    let mut rows = Vec::with_capacity(rc.max_iters);
    let mut warnings = Vec::new();
    let mut f_bar: Option<SymMatrix> = None;
    let mut p_prev: Option<SymMatrix> = None;
    let (mut e, mut g) = energy_and_gradient(model.as_ref(), &theta, &h)?;
    for iter in 0..rc.max_iters {
        let mask = active_mask(&spec, cfg, iter);
        let gm: Vec<f64> = g.iter().zip(&mask).map(|(x, &on)| if on { *x } else { 0.0 }).collect();
        let grad_norm = gm.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (out, rank, gap, drift) = match cfg.method {
            Method::Euclidean => (euclidean_step(&gm, cfg), gm.len(), f64::INFINITY, 0.0),
            Method::Natgrad => match pre.tensor(&theta) {
                Ok(f) => {
                    let f = masked(&f, &mask);
                    let fb = match &f_bar {
                        Some(prev) if cfg.ema_decay > 0.0 => f * (1.0 - cfg.ema_decay) + prev * cfg.ema_decay,
                        _ => f,
                    };
                    let split = split_with_rule(&fb, cfg.tau);
                    let drift = p_prev.as_ref().map_or(0.0, |p| (&split.projector - p).norm());
                    let out = natgrad_step(&gm, &fb, &split, cfg);
                    if out.fallback {
                        warnings.push(format!("iter {iter}: zero active rank, Euclidean step"));
                    }
                    let (rank, gap) = (split.rank, split.gap);
                    p_prev = Some(split.projector.clone());
                    f_bar = Some(fb);
                    (out, rank, gap, drift)
                }
                Err(err) => {
                    warnings.push(format!("iter {iter}: {err}; Euclidean step"));
                    let mut o = euclidean_step(&gm, cfg);
                    o.fallback = true;
                    (o, 0, 0.0, 0.0)
                }
            },
        };
        let step = out.step;
        let slope: f64 = gm.iter().zip(&step).map(|(a, b)| a * b).sum();
        let trial = |t: f64| -> Vec<f64> { theta.iter().zip(&step).map(|(x, s)| x + t * s).collect() };
        let mut accepted = true;
        let mut backtracks = 0;
        let mut t = 1.0;
        let mut next = trial(t);
        if let Some(a) = cfg.armijo {
            accepted = false;
            loop {
                let en = energy(model.as_ref(), &next, &h)?;
                if en <= e + a.c1 * t * slope {
                    accepted = true;
                    break;
                }
                if backtracks == a.max_backtracks {
                    break;
                }
                backtracks += 1;
                t *= a.backtrack;
                next = trial(t);
            }
        }
        let step_norm = if accepted { t * step.iter().map(|x| x * x).sum::<f64>().sqrt() } else { 0.0 };
        rows.push(TraceRow {
            iter,
            energy: e,
            error: e - e_star,
            grad_norm,
            grad_gnorm: out.grad_gnorm,
            rank,
            gap,
            projector_drift: drift,
            step_norm,
            accepted,
            backtracks,
            fallback: out.fallback,
            active_params: mask.iter().filter(|&&b| b).count(),
        });
        if accepted {
            theta = next;
            (e, g) = energy_and_gradient(model.as_ref(), &theta, &h)?;
        }
        if !e.is_finite() {
            warnings.push(format!("iter {iter}: non-finite energy, stopping"));
            break;
        }
    }
    Ok(VqeTrace {
        e_star,
        rows,
        final_energy: e,
        final_params: theta,
        warnings,
    })
}

/// Symmetric-eigen residual used to cross-check the ground energy.
pub fn ground_residual(h: &PauliSumHamiltonian, e: f64, v: &StateVector) -> Result<f64> {
    let m = h.dense()?;
    let mut r = 0.0f64;
    for i in 0..4 {
        let mut s = -v[i] * e;
        for j in 0..4 {
            s += m[(i, j)] * v[j];
        }
        r = r.max(s.norm());
    }
    Ok(r)
}

/// Ground energy via the real `8 x 8` embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn exact_ground_real_embedding(h: &PauliSumHamiltonian) -> Result<f64> {
    let m = h.dense()?;
    let big = DMatrix::from_fn(8, 8, |r, c| {
        let z = m[(r % 4, c % 4)];
        match (r / 4, c / 4) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let e = eigh_sym(&big);
    Ok(e.values[7])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hea::ClosedFormHea;
    use crate::linops::central_diff_1d;
    use crate::support::split_spectrum;

    fn diag(v: &[f64]) -> SymMatrix {
        DMatrix::from_diagonal(&DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn ground_energies() {
        let zz = PauliSumHamiltonian::new(vec![(1.0, "ZZ")]).unwrap();
        assert!((exact_ground(&zz).unwrap().0 + 1.0).abs() < 1e-14);
        let xi = PauliSumHamiltonian::new(vec![(1.0, "XI")]).unwrap();
        assert!((exact_ground(&xi).unwrap().0 + 1.0).abs() < 1e-14);
        for h in [PauliSumHamiltonian::h2(), PauliSumHamiltonian::toy()] {
            let (e, v) = exact_ground(&h).unwrap();
            assert!((e - exact_ground_real_embedding(&h).unwrap()).abs() < 1e-12);
            assert!(ground_residual(&h, e, &v).unwrap() < 1e-12);
        }
        let (e, _) = exact_ground(&PauliSumHamiltonian::h2()).unwrap();
        assert!((e + 1.8572749770714285).abs() < 1e-9);
    }

    #[test]
    fn dense_is_hermitian_and_matches_terms() {
        let h = PauliSumHamiltonian::new(vec![(0.7, "XY"), (-0.2, "ZI"), (0.4, "YY")]).unwrap();
        let m = h.dense().unwrap();
        assert!((m - m.adjoint()).camax() < 1e-15);
        // XY on |00> -> i |11>
        assert!((m[(3, 0)] - Complex64::new(0.0, 0.7) - Complex64::new(-0.4, 0.0)).norm() < 1e-15);
        assert!(PauliSumHamiltonian::new(vec![(1.0, "XQ")]).is_err());
        assert!(PauliSumHamiltonian::new(vec![(1.0, "XYZ")]).is_err());
    }

    #[test]
    fn identity_hamiltonian_has_zero_gradient() {
        let h = PauliSumHamiltonian::new(vec![(1.0, "II")]).unwrap().dense().unwrap();
        let (e, g) = energy_and_gradient(&ClosedFormHea, &[0.3, 1.1, -0.4, 2.0], &h).unwrap();
        assert!((e - 1.0).abs() < 1e-14);
        assert!(g.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn parameter_shift_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let spec = CircuitSpec::new(3, vec![crate::hea::Entangler::Zz, crate::hea::Entangler::Xx]).unwrap();
        let h = PauliSumHamiltonian::new(vec![(0.7, "XY"), (-0.2, "ZI"), (0.4, "YY"), (0.3, "ZX")])
            .unwrap()
            .dense()
            .unwrap();
        for _ in 0..20 {
            let t: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (_, g) = energy_and_gradient(&spec, &t, &h).unwrap();
            for k in 0..t.len() {
                let fd = central_diff_1d(
                    |s: f64| {
                        let mut p = t.clone();
                        p[k] = s;
                        energy(&spec, &p, &h).unwrap()
                    },
                    t[k],
                    1e-5,
                );
                assert!((g[k] - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn step_examples() {
        let cfg = OptimizerConfig { ridge: 0.0, eta: 1.0, ..OptimizerConfig::default() };
        let f = DMatrix::identity(2, 2);
        let s = natgrad_step(&[0.3, -0.7], &f, &split_with_rule(&f, cfg.tau), &cfg);
        assert_eq!(s.step, vec![-0.3, 0.7]);
        let f = diag(&[4.0, 0.0]);
        let s = natgrad_step(&[4.0, 3.0], &f, &split_spectrum(&f, 1e-12), &cfg);
        assert!((s.step[0] + 1.0).abs() < 1e-15 && s.step[1] == 0.0);
        let ridge = OptimizerConfig { ridge: 1.0, ..cfg.clone() };
        let s = natgrad_step(&[4.0, 3.0], &f, &split_spectrum(&f, 1e-12), &ridge);
        assert!((s.step[0] + 0.8).abs() < 1e-15 && s.step[1] == 0.0);
        let z = DMatrix::zeros(2, 2);
        assert!(natgrad_step(&[1.0, 1.0], &z, &split_spectrum(&z, 1e-12), &cfg).fallback);
    }

    #[test]
    fn natgrad_descends_and_stays_on_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..200 {
            let a = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
            let q = a.qr().q();
            let f = &q * diag(&[3.0, 1.0, 0.0, 0.0]) * q.transpose();
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cfg = OptimizerConfig {
                shrinkage: rng.random_range(0.0..1.0),
                ridge: rng.random_range(0.0..0.1),
                eta: 0.5,
                gnorm_cap: Some(0.3),
                tr_radius: Some(0.2),
                ..OptimizerConfig::default()
            };
            let split = split_with_rule(&f, cfg.tau);
            let s = natgrad_step(&g, &f, &split, &cfg);
            let slope: f64 = g.iter().zip(&s.step).map(|(a, b)| a * b).sum();
            assert!(slope <= 0.0);
            let sv = DVector::from_vec(s.step);
            let off = &sv - &split.projector * &sv;
            assert!(off.amax() <= 1e-12);
            assert!(sv.norm() <= 0.2 + 1e-15);
        }
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&[1.0; 5], 1.0).unwrap();
        assert_eq!(m.auc, 0.0);
        assert_eq!(m.hit95, Some(0));
        let n = 40;
        let lin: Vec<f64> = (0..=n).map(|k| -1.0 + (1.0 - k as f64 / n as f64) * 2.0).collect();
        assert_eq!(metrics(&lin, -1.0).unwrap().hit95, Some((0.95 * n as f64).ceil() as usize));
        let lower: Vec<f64> = lin.iter().map(|e| e - 0.01).collect();
        assert!(metrics(&lower, -1.02).unwrap().auc < metrics(&lin, -1.02).unwrap().auc);
        assert!(metrics(&[], 0.0).is_err());
    }

    #[test]
    fn identity_preconditioner_is_euclidean_bitwise() {
        let mut a = RunConfig::toy(Method::Euclidean, 0.1);
        a.max_iters = 50;
        let mut b = a.clone();
        b.optimizer.method = Method::Natgrad;
        b.optimizer.preconditioner = Preconditioner::Identity;
        b.optimizer.ridge = 0.0;
        let (ta, tb) = (run(&a).unwrap(), run(&b).unwrap());
        assert_eq!(ta.final_params, tb.final_params);
        assert_eq!(ta.energies(), tb.energies());
    }

    #[test]
    fn armijo_trace_is_monotone_and_runs_are_deterministic() {
        let mut rc = RunConfig::toy(Method::Natgrad, 0.5);
        rc.max_iters = 60;
        let t = run(&rc).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[1].energy <= w[0].energy);
        }
        assert_eq!(t, run(&rc).unwrap());
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 61);
    }

    #[test]
    fn layerwise_growth_freezes_deep_layers() {
        let mut rc = RunConfig::toy(Method::Euclidean, 0.1);
        rc.max_iters = 12;
        rc.optimizer.grow_every = Some(5);
        let t = run(&rc).unwrap();
        assert_eq!(t.rows[0].active_params, 2);
        assert_eq!(t.rows[5].active_params, 4);
        assert_eq!(t.rows[11].active_params, 6);
    }

    #[test]
    fn config_json_round_trip() {
        let rc = RunConfig::h2(Method::Natgrad, 0.1);
        let s = serde_json::to_string_pretty(&rc).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rc);
        let bad = OptimizerConfig { ema_decay: 1.0, ..OptimizerConfig::default() };
        assert!(bad.validate().is_err());
    }
}
