//! Haar twirls over one subsystem of `t` copies, and the purification
//! channel that maps `σ^{⊗t}` to twirled copies of a purification of `σ`.
//!
//! Inputs live on `(A ⊗ B)^{⊗t}` in the natural copy order
//! `A0, B0, A1, B1, …`. The exact twirl uses
//!
//! ```text
//! E_U[(I⊗U)^{⊗t} X (I⊗U†)^{⊗t}] = Σ_{σ,τ} W[σ,τ] · Tr_B[(I ⊗ P_σ†) X] ⊗ P_τ
//! ```
//!
//! where `W` is the inverse of the Gram matrix `G[σ,τ] = Tr(P_σ† P_τ)`.
//! When `d < t` the permutation operators are linearly dependent and `G` is
//! singular; the twirl is still the Hilbert-Schmidt projection onto their
//! span, so the Moore-Penrose pseudo-inverse takes the place of `G⁻¹`.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock};

use nalgebra::DMatrix;
use parking_lot::RwLock;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    canonical_purification, haar_unitary, random_density, schmidt_purification, trace_distance, Apply, CMatrix,
    DensityMatrix, PureState, RegisterLayout, Tensor, C64, DIMENSION_CAP,
};
use crate::rng::Stream;

pub const MAX_COPIES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwirlConfig {
    pub t: usize,
    /// dim(A)
    pub n: usize,
    /// dim(B)
    pub m: usize,
    pub epsilon: f64,
}

impl TwirlConfig {
    pub fn new(t: usize, n: usize, m: usize) -> Result<Self> {
        let cfg = TwirlConfig { t, n, m, epsilon: 1e-9 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.t > MAX_COPIES {
            return Err(Error::TwirlConfig(format!("t = {} outside 1..={MAX_COPIES}", self.t)));
        }
        if self.n < 2 || self.m < 2 {
            return Err(Error::TwirlConfig("register dimensions must be at least 2".into()));
        }
        let dim = (self.n * self.m).checked_pow(self.t as u32).unwrap_or(usize::MAX);
        if dim > DIMENSION_CAP {
            return Err(Error::DimensionCap { requested: dim, cap: DIMENSION_CAP });
        }
        // Also rejects NaN.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.epsilon > 0.0) {
            return Err(Error::TwirlConfig("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `A0, B0, A1, B1, …`
    pub fn layout(&self) -> RegisterLayout {
        let regs = (0..self.t).flat_map(|i| [(format!("A{i}"), self.n), (format!("B{i}"), self.m)]).collect();
        RegisterLayout::new(regs).expect("validated config")
    }

    fn check_layout(&self, layout: &RegisterLayout) -> Result<()> {
        let dims: Vec<usize> = layout.registers().iter().map(|r| r.1).collect();
        let expected: Vec<usize> = (0..self.t).flat_map(|_| [self.n, self.m]).collect();
        if dims != expected {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }
}

/// All permutations of `0..t`, identity first. `p[i]` is the image of `i`.
pub fn permutations(t: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; t], &mut out);
    out
}

pub fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&i| p[i]).collect()
}

pub fn inverse(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

pub fn cycle_count(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for start in 0..p.len() {
        if !seen[start] {
            cycles += 1;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = p[i];
            }
        }
    }
    cycles
}

/// Permutation of tensor factors: `P_π |b_0 … b_{t-1}⟩ = |b'⟩` with
/// `b'_{π(i)} = b_i`, so that `P_π P_τ = P_{π∘τ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermOperator {
    perm: Vec<usize>,
    d: usize,
}

impl PermOperator {
    pub fn new(perm: Vec<usize>, d: usize) -> Self {
        PermOperator { perm, d }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Image of basis index `b` (row-major over the `t` factors).
    pub fn map_index(&self, b: usize) -> usize {
        let t = self.perm.len();
        let mut digits = vec![0; t];
        let mut rest = b;
        for i in (0..t).rev() {
            digits[i] = rest % self.d;
            rest /= self.d;
        }
        let mut out = vec![0; t];
        for i in 0..t {
            out[self.perm[i]] = digits[i];
        }
        out.iter().fold(0, |acc, &x| acc * self.d + x)
    }

    pub fn matrix(&self) -> CMatrix {
        let dim = self.d.pow(self.perm.len() as u32);
        let mut m = CMatrix::zeros(dim, dim);
        for b in 0..dim {
            m[(self.map_index(b), b)] = C64::from(1.0);
        }
        m
    }
}

/// `G[σ,τ] = d^{#cycles(σ⁻¹τ)}`, indexed by [`permutations`] order.
pub fn gram_matrix(t: usize, d: usize) -> Result<DMatrix<f64>> {
    if t == 0 || t > MAX_COPIES || d < 2 {
        return Err(Error::TwirlConfig(format!("gram matrix needs 1 ≤ t ≤ {MAX_COPIES}, d ≥ 2")));
    }
    let perms = permutations(t);
    Ok(DMatrix::from_fn(perms.len(), perms.len(), |i, j| {
        (d as f64).powi(cycle_count(&compose(&inverse(&perms[i]), &perms[j])) as i32)
    }))
}

#[derive(Clone, Debug)]
pub struct WeingartenTable {
    pub t: usize,
    pub d: usize,
    perms: Vec<Vec<usize>>,
    /// Full (pseudo-)inverse Gram matrix; `w[(σ,τ)] = Wg(σ⁻¹τ)`.
    w: DMatrix<f64>,
}

impl WeingartenTable {
    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `Wg(π, d)`.
    pub fn value(&self, perm: &[usize]) -> f64 {
        let j = self.perms.iter().position(|p| p == perm).expect("permutation of the right size");
        self.w[(0, j)]
    }
}

type WeingartenCache = RwLock<HashMap<(usize, usize), Arc<WeingartenTable>>>;

pub fn weingarten(t: usize, d: usize) -> Result<Arc<WeingartenTable>> {
    static CACHE: LazyLock<WeingartenCache> =
        LazyLock::new(|| RwLock::new(HashMap::new()));
    if let Some(hit) = CACHE.read().get(&(t, d)) {
        return Ok(hit.clone());
    }
    let g = gram_matrix(t, d)?;
    let w = if d >= t {
        g.clone().try_inverse().ok_or(Error::SingularGram { t, d })?
    } else {
        g.clone().pseudo_inverse(1e-9).map_err(|_| Error::SingularGram { t, d })?
    };
    let residual = (&g * &w * &g - &g).abs().max();
    if residual > 1e-10 * g.abs().max() {
        return Err(Error::SingularGram { t, d });
    }
    let table = Arc::new(WeingartenTable { t, d, perms: permutations(t), w });
    CACHE.write().insert((t, d), table.clone());
    Ok(table)
}

/// Index bookkeeping between the interleaved layout and the `(A-part, B-part)` split.
struct CopySplit {
    /// `full[a * mb + b]`
    full: Vec<usize>,
    na: usize,
    mb: usize,
}

impl CopySplit {
    fn new(cfg: &TwirlConfig) -> Self {
        let na = cfg.n.pow(cfg.t as u32);
        let mb = cfg.m.pow(cfg.t as u32);
        let mut full = vec![0; na * mb];
        for a in 0..na {
            for b in 0..mb {
                let mut idx = 0;
                for i in 0..cfg.t {
                    let shift = (cfg.t - 1 - i) as u32;
                    let ai = (a / cfg.n.pow(shift)) % cfg.n;
                    let bi = (b / cfg.m.pow(shift)) % cfg.m;
                    idx = (idx * cfg.n + ai) * cfg.m + bi;
                }
                full[a * mb + b] = idx;
            }
        }
        CopySplit { full, na, mb }
    }

    fn at(&self, a: usize, b: usize) -> usize {
        self.full[a * self.mb + b]
    }
}

/// Exact Haar average of `(I_A ⊗ U_B)^{⊗t} X (I_A ⊗ U_B†)^{⊗t}`.
pub fn exact_twirl_b(x: &DensityMatrix, cfg: &TwirlConfig) -> Result<DensityMatrix> {
    cfg.validate()?;
    cfg.check_layout(x.layout())?;
    let table = weingarten(cfg.t, cfg.m)?;
    let split = CopySplit::new(cfg);
    let (na, mb) = (split.na, split.mb);
    let ops: Vec<Vec<usize>> = table
        .perms()
        .iter()
        .map(|p| {
            let op = PermOperator::new(p.clone(), cfg.m);
            (0..mb).map(|b| op.map_index(b)).collect()
        })
        .collect();
    let xm = x.matrix();
    // Y_σ[a,a'] = Σ_b X[(a, P_σ b), (a', b)]
    let ys: Vec<CMatrix> = ops
        .iter()
        .map(|pmap| {
            CMatrix::from_fn(na, na, |a, a2| {
                (0..mb).map(|b| xm[(split.at(a, pmap[b]), split.at(a2, b))]).sum()
            })
        })
        .collect();
    let mut out = CMatrix::zeros(x.dim(), x.dim());
    for (tau, pmap) in ops.iter().enumerate() {
        let mut z = CMatrix::zeros(na, na);
        for (sigma, y) in ys.iter().enumerate() {
            let w = table.matrix()[(sigma, tau)];
            if w != 0.0 {
                z += y * C64::from(w);
            }
        }
        // P_τ[b, b'] = 1 iff b = P_τ b'
        for a in 0..na {
            for a2 in 0..na {
                let v = z[(a, a2)];
                for b2 in 0..mb {
                    out[(split.at(a, pmap[b2]), split.at(a2, b2))] += v;
                }
            }
        }
    }
    DensityMatrix::new_unchecked(x.layout().clone(), out)
}

/// Sampled twirl together with the per-entry standard error of the mean.
#[derive(Clone, Debug)]
pub struct McTwirl {
    pub mean: DensityMatrix,
    /// Standard errors of the real and imaginary parts.
    pub stderr_re: DMatrix<f64>,
    pub stderr_im: DMatrix<f64>,
    pub samples: usize,
}

struct McAccumulator {
    sum: CMatrix,
    sq_re: DMatrix<f64>,
    sq_im: DMatrix<f64>,
}

impl McAccumulator {
    fn new(dim: usize) -> Self {
        McAccumulator { sum: CMatrix::zeros(dim, dim), sq_re: DMatrix::zeros(dim, dim), sq_im: DMatrix::zeros(dim, dim) }
    }

    fn add(&mut self, ym: &CMatrix) {
        self.sum += ym;
        for (k, z) in ym.iter().enumerate() {
            self.sq_re[k] += z.re * z.re;
            self.sq_im[k] += z.im * z.im;
        }
    }

    fn finish(self, layout: RegisterLayout, samples: usize) -> Result<McTwirl> {
        let n = samples as f64;
        let dim = self.sum.nrows();
        let mean = self.sum / C64::from(n);
        let se = |sq: &DMatrix<f64>, part: fn(&C64) -> f64| {
            DMatrix::from_fn(dim, dim, |i, j| {
                let mu = part(&mean[(i, j)]);
                let var = (sq[(i, j)] / n - mu * mu).max(0.0);
                (var / n).sqrt()
            })
        };
        let stderr_re = se(&self.sq_re, |z| z.re);
        let stderr_im = se(&self.sq_im, |z| z.im);
        Ok(McTwirl { mean: DensityMatrix::new_unchecked(layout, mean)?, stderr_re, stderr_im, samples })
    }
}

fn b_names(layout: &RegisterLayout, cfg: &TwirlConfig) -> Vec<String> {
    (0..cfg.t).map(|i| layout.registers()[2 * i + 1].0.clone()).collect()
}

pub fn mc_twirl_b<R: Rng + ?Sized>(
    x: &DensityMatrix,
    cfg: &TwirlConfig,
    samples: usize,
    rng: &mut R,
) -> Result<McTwirl> {
    cfg.validate()?;
    cfg.check_layout(x.layout())?;
    if samples == 0 {
        return Err(Error::TwirlConfig("at least one sample required".into()));
    }
    let b_names = b_names(x.layout(), cfg);
    let mut acc = McAccumulator::new(x.dim());
    for _ in 0..samples {
        let u = haar_unitary(cfg.m, rng);
        let mut y = x.clone();
        for b in &b_names {
            y = y.apply(&u, &[b.as_str()])?;
        }
        acc.add(y.matrix());
    }
    acc.finish(x.layout().clone(), samples)
}

/// `mc_twirl_b` for a pure input: rotates the state vector and accumulates
/// its projector, which is much cheaper than conjugating the density matrix.
/// Draws the same unitaries from `rng` as `mc_twirl_b`.
pub fn mc_twirl_b_pure<R: Rng + ?Sized>(
    psi: &PureState,
    cfg: &TwirlConfig,
    samples: usize,
    rng: &mut R,
) -> Result<McTwirl> {
    cfg.validate()?;
    cfg.check_layout(psi.layout())?;
    if samples == 0 {
        return Err(Error::TwirlConfig("at least one sample required".into()));
    }
    let b_names = b_names(psi.layout(), cfg);
    let mut acc = McAccumulator::new(psi.dim());
    for _ in 0..samples {
        let u = haar_unitary(cfg.m, rng);
        let mut y = psi.clone();
        for b in &b_names {
            y = y.apply(&u, &[b.as_str()])?;
        }
        let v = y.amplitudes();
        acc.add(&(v * v.adjoint()));
    }
    acc.finish(psi.layout().clone(), samples)
}

/// `|φ⟩^{⊗t}` laid out as `A0, B0, A1, B1, …` for a pure state on `(A, B)`.
pub fn pure_copies(phi: &PureState, cfg: &TwirlConfig) -> Result<PureState> {
    if phi.layout().len() != 2 {
        return Err(Error::LayoutMismatch);
    }
    let mut acc: Option<PureState> = None;
    for i in 0..cfg.t {
        let first = phi.layout().registers()[0].0.clone();
        let layout = phi.layout().renamed(|n| if n == first { format!("A{i}") } else { format!("B{i}") })?;
        let copy = phi.clone().with_layout(layout)?;
        acc = Some(match acc {
            None => copy,
            Some(prev) => prev.tensor(&copy)?,
        });
    }
    let state = acc.ok_or_else(|| Error::TwirlConfig("t must be positive".into()))?;
    cfg.check_layout(state.layout())?;
    Ok(state)
}

/// `|φ⟩⟨φ|^{⊗t}`, see [`pure_copies`].
pub fn copies(phi: &PureState, cfg: &TwirlConfig) -> Result<DensityMatrix> {
    Ok(pure_copies(phi, cfg)?.to_density())
}

/// The purification channel: twirled copies of a purification of `σ`.
/// Depends only on `σ`; uses the canonical purification when `M = N`.
pub fn sim_t(sigma: &DensityMatrix, cfg: &TwirlConfig) -> Result<DensityMatrix> {
    cfg.validate()?;
    if sigma.dim() != cfg.n || sigma.layout().len() != 1 {
        return Err(Error::DimensionMismatch { expected: cfg.n, got: sigma.dim() });
    }
    let phi = if cfg.m == cfg.n {
        canonical_purification(sigma)?
    } else {
        schmidt_purification(sigma, "purifier", cfg.m)?
    };
    exact_twirl_b(&copies(&phi, cfg)?, cfg)
}

/// A purification of `σ` on `(A, B)` with `dim B = m`, rotated by a Haar
/// unitary on `B` so that it is a uniformly random one.
pub fn random_purification<R: Rng + ?Sized>(sigma: &DensityMatrix, m: usize, rng: &mut R) -> Result<PureState> {
    let phi = schmidt_purification(sigma, "B", m)?;
    phi.apply(&haar_unitary(m, rng), &["B"])
}

/// Outcome of checking the purification channel on random inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureChannelReport {
    pub t: usize,
    pub n: usize,
    pub m: usize,
    pub pairs: usize,
    /// Largest trace distance between the twirled copies of a random
    /// purification and `sim_t(σ)`.
    pub max_sim_distance: f64,
    pub mc_pairs: usize,
    pub mc_samples: usize,
    /// Largest trace distance between exact and sampled twirls.
    pub max_mc_distance: f64,
}

/// Draws `pairs` random `(σ, purification)` pairs and compares the exact
/// twirl of the purification's copies with `sim_t(σ)`; the first `mc_pairs`
/// are also twirled by sampling.
pub fn check_pure_channel(cfg: &TwirlConfig, pairs: usize, mc_pairs: usize, mc_samples: usize, rng: &mut Stream) -> Result<PureChannelReport> {
    cfg.validate()?;
    if pairs == 0 || mc_pairs > pairs {
        return Err(Error::TwirlConfig(format!("need 1 ≤ pairs and mc_pairs ≤ pairs, got {pairs} and {mc_pairs}")));
    }
    let mut inputs = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let sigma = random_density(RegisterLayout::single("A", cfg.n)?, rng);
        let phi = random_purification(&sigma, cfg.m, rng)?;
        inputs.push((sigma, phi, rng.fork()));
    }
    let results = inputs
        .into_par_iter()
        .enumerate()
        .map(|(i, (sigma, phi, mut r))| {
            let exact = exact_twirl_b(&copies(&phi, cfg)?, cfg)?;
            let sim = trace_distance(&exact, &sim_t(&sigma, cfg)?)?;
            let mc = if i < mc_pairs {
                trace_distance(&exact, &mc_twirl_b_pure(&pure_copies(&phi, cfg)?, cfg, mc_samples, &mut r)?.mean)?
            } else {
                0.0
            };
            Ok((sim, mc))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PureChannelReport {
        t: cfg.t,
        n: cfg.n,
        m: cfg.m,
        pairs,
        max_sim_distance: results.iter().map(|r| r.0).fold(0.0, f64::max),
        mc_pairs,
        mc_samples,
        max_mc_distance: results.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}
