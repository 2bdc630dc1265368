use std::collections::BTreeMap;

use rand::Rng;

use super::ops::{partial_trace, trace_norm_hermitian, Apply, Tensor};
use super::{CMatrix, CVector, DensityMatrix, PureState, RegisterLayout, UnitaryOp, C64, STATE_TOL};
use crate::bits::Bits;
use crate::error::{Error, Result};

/// Quantum registers held as a product of pure factors.
///
/// Registers that have never interacted live in separate factors, so a
/// memory holding many small ciphertexts stays cheap even when its total
/// dimension is astronomically large. Gates merge the factors they touch;
/// measurements remove the measured register and renormalize.
#[derive(Clone, Debug, Default)]
pub struct QuantumMemory {
    factors: Vec<PureState>,
}

impl QuantumMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_state(state: PureState) -> Self {
        QuantumMemory { factors: vec![state] }
    }

    /// Adds a factor; its register names must be new.
    pub fn insert(&mut self, state: PureState) -> Result<()> {
        for n in state.layout().names() {
            if self.contains(n) {
                return Err(Error::Layout(format!("register `{n}` already present")));
            }
        }
        if state.dim() > 1 {
            self.factors.push(state);
        }
        Ok(())
    }

    /// Fresh qubit register prepared in `|bit⟩`.
    pub fn prepare_qubit(&mut self, name: &str, bit: bool) -> Result<()> {
        self.insert(PureState::basis(RegisterLayout::qubits(&[name])?, &[bit as usize])?)
    }

    pub fn absorb(&mut self, other: QuantumMemory) -> Result<()> {
        for f in other.factors {
            self.insert(f)?;
        }
        Ok(())
    }

    pub fn names(&self) -> Vec<String> {
        self.factors.iter().flat_map(|f| f.layout().names().map(String::from).collect::<Vec<_>>()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factors.iter().any(|f| f.layout().contains(name))
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn local_dim(&self, name: &str) -> Result<usize> {
        self.factor_of(name).and_then(|i| self.factors[i].layout().local_dim(name))
    }

    fn factor_of(&self, name: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.layout().contains(name))
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// Merges every factor touching `names` into one; returns its index.
    fn merge(&mut self, names: &[&str]) -> Result<usize> {
        let mut idx: Vec<usize> = names.iter().map(|n| self.factor_of(n)).collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            return Err(Error::Precondition("no registers given".into()));
        }
        let mut merged = self.factors[idx[0]].clone();
        for &i in &idx[1..] {
            merged = merged.tensor(&self.factors[i])?;
        }
        for &i in idx.iter().rev() {
            self.factors.swap_remove(i);
        }
        self.factors.push(merged);
        Ok(self.factors.len() - 1)
    }

    pub fn apply(&mut self, u: &UnitaryOp, targets: &[&str]) -> Result<()> {
        let i = self.merge(targets)?;
        self.factors[i] = self.factors[i].apply(u, targets)?;
        Ok(())
    }

    /// Measures qubit registers in the computational basis, consuming them.
    pub fn measure<R: Rng + ?Sized>(&mut self, targets: &[&str], rng: &mut R) -> Result<Bits> {
        let mut out = Bits::default();
        for t in targets {
            let i = self.factor_of(t)?;
            let (probs, _) = marginal(&self.factors[i], t)?;
            if probs.len() != 2 {
                return Err(Error::Precondition(format!("register `{t}` is not a qubit")));
            }
            let bit = rng.random::<f64>() < probs[1];
            self.collapse(i, t, bit as usize)?;
            out.push(bit);
        }
        Ok(out)
    }

    /// Measures a register of any dimension in its computational basis,
    /// consuming it.
    pub fn measure_digit<R: Rng + ?Sized>(&mut self, name: &str, rng: &mut R) -> Result<usize> {
        let i = self.factor_of(name)?;
        let (probs, _) = marginal(&self.factors[i], name)?;
        let mut u = rng.random::<f64>();
        let mut value = probs.len() - 1;
        for (v, p) in probs.iter().enumerate() {
            if u < *p {
                value = v;
                break;
            }
            u -= p;
        }
        while probs[value] <= 0.0 && value > 0 {
            value -= 1;
        }
        self.collapse(i, name, value)?;
        Ok(value)
    }

    /// Removes register `name` from factor `i` after projecting it onto `value`.
    fn collapse(&mut self, i: usize, name: &str, value: usize) -> Result<()> {
        let rest = project(&self.factors[i], name, value)?;
        let n = rest.norm_sqr();
        if n <= 1e-300 {
            return Err(Error::ZeroNormBranch);
        }
        let (layout, amps) = rest.into_parts();
        if layout.is_empty() {
            self.factors.swap_remove(i);
        } else {
            self.factors[i] = PureState::new_unchecked(layout, amps / C64::from(n.sqrt()))?;
        }
        Ok(())
    }

    /// Exact joint distribution of measuring `targets` (not consumed), keyed
    /// by outcome digits (one bit per qubit register).
    pub fn outcome_distribution(&self, targets: &[&str]) -> Result<BTreeMap<Bits, f64>> {
        let mut by_factor: BTreeMap<usize, Vec<(usize, &str)>> = BTreeMap::new();
        for (k, t) in targets.iter().enumerate() {
            if self.local_dim(t)? != 2 {
                return Err(Error::Precondition(format!("register `{t}` is not a qubit")));
            }
            by_factor.entry(self.factor_of(t)?).or_default().push((k, t));
        }
        let mut joint: Vec<(Vec<(usize, bool)>, f64)> = vec![(Vec::new(), 1.0)];
        for (i, group) in by_factor {
            let names: Vec<&str> = group.iter().map(|(_, n)| *n).collect();
            let local = joint_marginal(&self.factors[i], &names)?;
            let mut next = Vec::new();
            for (assign, p) in &joint {
                for (bits, q) in &local {
                    if *q == 0.0 {
                        continue;
                    }
                    let mut a = assign.clone();
                    a.extend(group.iter().map(|(k, _)| *k).zip(bits.iter()));
                    next.push((a, p * q));
                }
            }
            joint = next;
        }
        let mut out = BTreeMap::new();
        for (assign, p) in joint {
            let mut bits = Bits::zeros(targets.len());
            for (k, b) in assign {
                bits.set(k, b);
            }
            *out.entry(bits).or_insert(0.0) += p;
        }
        Ok(out)
    }

    /// Reduced density matrix on `names`, in the given order.
    pub fn reduced(&self, names: &[&str]) -> Result<DensityMatrix> {
        let mut tmp = self.clone();
        let i = tmp.merge(names)?;
        let red = partial_trace(&tmp.factors[i].to_density(), names)?;
        reorder(red, names)
    }

    /// Classical-quantum state from measuring `measured` and keeping `keep`.
    pub fn cq_state(&self, measured: &[&str], keep: &[&str]) -> Result<CqState> {
        let mut all: Vec<&str> = measured.to_vec();
        all.extend_from_slice(keep);
        let mut tmp = self.clone();
        let mut cq = CqState::default();
        if keep.is_empty() {
            for (bits, p) in self.outcome_distribution(measured)? {
                cq.add(bits, DensityMatrix::new_unchecked(RegisterLayout::empty(), CMatrix::from_element(1, 1, C64::from(p)))?)?;
            }
            return Ok(cq);
        }
        let i = tmp.merge(&all)?;
        let state = tmp.factors[i].clone();
        for x in 0..(1usize << measured.len()) {
            let bits = Bits::from_u64(x as u64, measured.len());
            let mut branch = state.clone();
            for (k, m) in measured.iter().enumerate() {
                branch = project(&branch, m, bits.get(k) as usize)?;
            }
            if branch.norm_sqr() < 1e-18 {
                continue;
            }
            let red = reorder(partial_trace(&branch.to_density(), keep)?, keep)?;
            cq.add(bits, red)?;
        }
        Ok(cq)
    }

    pub fn rename(&mut self, old: &str, new: &str) -> Result<()> {
        if self.contains(new) {
            return Err(Error::Layout(format!("register `{new}` already present")));
        }
        let i = self.factor_of(old)?;
        let layout = self.factors[i].layout().renamed(|n| if n == old { new.to_string() } else { n.to_string() })?;
        let f = std::mem::replace(&mut self.factors[i], PureState::new_unchecked(RegisterLayout::empty(), CVector::from_element(1, C64::from(1.0)))?);
        self.factors[i] = f.with_layout(layout)?;
        Ok(())
    }

    /// Applies `f` to every register name.
    pub fn rename_all(&mut self, f: impl Fn(&str) -> String) -> Result<()> {
        let mut out = QuantumMemory::new();
        for factor in std::mem::take(&mut self.factors) {
            let layout = factor.layout().renamed(&f)?;
            out.insert(factor.with_layout(layout)?)?;
        }
        *self = out;
        Ok(())
    }

    /// Moves the factors holding `names` into a new memory. Fails if any of
    /// those factors also holds a register outside `names`.
    pub fn split_off(&mut self, names: &[&str]) -> Result<QuantumMemory> {
        let mut idx: Vec<usize> = names.iter().map(|n| self.factor_of(n)).collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        for &i in &idx {
            if let Some(extra) = self.factors[i].layout().names().find(|n| !names.contains(n)) {
                return Err(Error::Precondition(format!("register `{extra}` is entangled with the split")));
            }
        }
        let mut out = QuantumMemory::new();
        for &i in idx.iter().rev() {
            out.factors.push(self.factors.swap_remove(i));
        }
        Ok(out)
    }

    pub fn check(&self) -> Result<()> {
        self.factors.iter().try_for_each(|f| f.check())
    }
}

/// Unnormalized state with register `name` projected onto `value` and removed.
fn project(state: &PureState, name: &str, value: usize) -> Result<PureState> {
    let layout = state.layout();
    let pos = layout.position(name)?;
    let rest_regs: Vec<(String, usize)> = layout
        .registers()
        .iter()
        .enumerate()
        .filter(|(p, _)| *p != pos)
        .map(|(_, r)| r.clone())
        .collect();
    let rest = RegisterLayout::new(rest_regs)?;
    let mut amps = CVector::zeros(rest.dim());
    for i in 0..layout.dim() {
        let mut d = layout.digits(i);
        if d[pos] == value {
            d.remove(pos);
            amps[rest.index_of(&d)] = state.amplitudes()[i];
        }
    }
    PureState::new_unchecked(rest, amps)
}

fn marginal(state: &PureState, name: &str) -> Result<(Vec<f64>, usize)> {
    let layout = state.layout();
    let pos = layout.position(name)?;
    let d = layout.registers()[pos].1;
    let mut probs = vec![0.0; d];
    let total = state.norm_sqr();
    for i in 0..layout.dim() {
        probs[layout.digits(i)[pos]] += state.amplitudes()[i].norm_sqr() / total;
    }
    Ok((probs, pos))
}

fn joint_marginal(state: &PureState, names: &[&str]) -> Result<Vec<(Bits, f64)>> {
    let layout = state.layout();
    let pos: Vec<usize> = names.iter().map(|n| layout.position(n)).collect::<Result<_>>()?;
    let total = state.norm_sqr();
    let mut probs = vec![0.0; 1 << names.len()];
    for i in 0..layout.dim() {
        let d = layout.digits(i);
        let key = pos.iter().fold(0usize, |acc, &p| (acc << 1) | d[p]);
        probs[key] += state.amplitudes()[i].norm_sqr() / total;
    }
    Ok(probs
        .into_iter()
        .enumerate()
        .map(|(k, p)| (Bits::from_u64(k as u64, names.len()), p))
        .collect())
}

/// Permutes a density matrix's registers into `order`.
fn reorder(rho: DensityMatrix, order: &[&str]) -> Result<DensityMatrix> {
    let src = rho.layout().clone();
    if src.names().eq(order.iter().copied()) {
        return Ok(rho);
    }
    let regs: Vec<(String, usize)> =
        order.iter().map(|n| src.local_dim(n).map(|d| (n.to_string(), d))).collect::<Result<_>>()?;
    let dst = RegisterLayout::new(regs)?;
    let pos: Vec<usize> = order.iter().map(|n| src.position(n)).collect::<Result<_>>()?;
    let perm: Vec<usize> = (0..dst.dim())
        .map(|j| {
            let dd = dst.digits(j);
            let mut sd = vec![0; pos.len()];
            for (k, &p) in pos.iter().enumerate() {
                sd[p] = dd[k];
            }
            src.index_of(&sd)
        })
        .collect();
    let m = rho.matrix();
    let out = CMatrix::from_fn(dst.dim(), dst.dim(), |i, j| m[(perm[i], perm[j])]);
    DensityMatrix::new_unchecked(dst, out)
}

/// A classical-quantum state `Σ_x |x⟩⟨x| ⊗ ρ_x` with unnormalized branches.
#[derive(Clone, Debug, Default)]
pub struct CqState {
    branches: BTreeMap<Bits, DensityMatrix>,
}

impl CqState {
    pub fn add(&mut self, x: Bits, rho: DensityMatrix) -> Result<()> {
        match self.branches.get_mut(&x) {
            Some(existing) => *existing = existing.add(&rho)?,
            None => {
                self.branches.insert(x, rho);
            }
        }
        Ok(())
    }

    pub fn branches(&self) -> &BTreeMap<Bits, DensityMatrix> {
        &self.branches
    }

    pub fn total_trace(&self) -> f64 {
        self.branches.values().map(|r| r.trace().re).sum()
    }

    pub fn scale(&self, factor: f64) -> CqState {
        CqState { branches: self.branches.iter().map(|(k, v)| (k.clone(), v.scale(factor))).collect() }
    }

    /// Mixes `other` in with weight `w` (self keeps weight 1).
    pub fn accumulate(&mut self, other: &CqState, w: f64) -> Result<()> {
        for (k, v) in &other.branches {
            self.add(k.clone(), v.scale(w))?;
        }
        Ok(())
    }

    /// `½ Σ_x ‖ρ_x − τ_x‖₁`, a missing branch counting as zero.
    pub fn trace_distance(&self, other: &CqState) -> Result<f64> {
        let mut keys: Vec<&Bits> = self.branches.keys().chain(other.branches.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut total = 0.0;
        for k in keys {
            let diff = match (self.branches.get(k), other.branches.get(k)) {
                (Some(a), Some(b)) => {
                    if a.layout() != b.layout() {
                        return Err(Error::LayoutMismatch);
                    }
                    a.matrix() - b.matrix()
                }
                (Some(a), None) => a.matrix().clone(),
                (None, Some(b)) => -b.matrix(),
                (None, None) => unreachable!(),
            };
            total += trace_norm_hermitian(&diff);
        }
        Ok(total / 2.0)
    }

    pub fn check(&self) -> Result<()> {
        if (self.total_trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::Invariant(format!("cq-state trace {}", self.total_trace())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{haar_unitary, ALGEBRA_TOL};
    use crate::rng::Stream;

    fn bell(a: &str, b: &str) -> PureState {
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let z = C64::from(0.0);
        PureState::new(RegisterLayout::qubits(&[a, b]).unwrap(), CVector::from_vec(vec![s, z, z, s])).unwrap()
    }

    #[test]
    fn independent_factors_stay_separate() {
        let mut mem = QuantumMemory::new();
        for i in 0..40 {
            mem.prepare_qubit(&format!("q{i}"), i % 3 == 0).unwrap();
        }
        assert_eq!(mem.factor_count(), 40);
        mem.apply(&UnitaryOp::h(), &["q1"]).unwrap();
        mem.apply(&UnitaryOp::cnot(), &["q1", "q2"]).unwrap();
        assert_eq!(mem.factor_count(), 39);
        let dist = mem.outcome_distribution(&["q0", "q1", "q2"]).unwrap();
        assert_eq!(dist.len(), 2);
        assert!((dist[&Bits::parse("100").unwrap()] - 0.5).abs() < ALGEBRA_TOL);
        assert!((dist[&Bits::parse("111").unwrap()] - 0.5).abs() < ALGEBRA_TOL);
        assert!(mem.prepare_qubit("q0", false).is_err());
    }

    #[test]
    fn measurement_correlations_and_consumption() {
        let mut rng = Stream::new(21);
        for _ in 0..20 {
            let mut mem = QuantumMemory::from_state(bell("a", "b"));
            let x = mem.measure(&["a"], &mut rng).unwrap();
            assert!(!mem.contains("a"));
            let y = mem.measure(&["b"], &mut rng).unwrap();
            assert_eq!(x, y);
            assert!(mem.is_empty());
        }
    }

    #[test]
    fn reduced_state_matches_dense_oracle() {
        let mut rng = Stream::new(22);
        let mut mem = QuantumMemory::new();
        for n in ["a", "b", "c"] {
            mem.prepare_qubit(n, false).unwrap();
        }
        let u = haar_unitary(4, &mut rng);
        let v = haar_unitary(4, &mut rng);
        mem.apply(&u, &["a", "c"]).unwrap();
        mem.apply(&v, &["c", "b"]).unwrap();

        let mut dense = PureState::basis(RegisterLayout::qubits(&["a", "b", "c"]).unwrap(), &[0, 0, 0]).unwrap();
        dense = dense.apply(&u, &["a", "c"]).unwrap().apply(&v, &["c", "b"]).unwrap();
        let expected = partial_trace(&dense.to_density(), &["a", "c"]).unwrap();
        let got = mem.reduced(&["a", "c"]).unwrap();
        assert!((got.matrix() - expected.matrix()).iter().all(|z| z.norm() < 1e-10));
        let swapped = mem.reduced(&["c", "a"]).unwrap();
        assert_eq!(swapped.layout().names().collect::<Vec<_>>(), vec!["c", "a"]);
        assert!((swapped.matrix()[(1, 2)] - expected.matrix()[(2, 1)]).norm() < 1e-10);
    }

    #[test]
    fn cq_state_of_bell_pair() {
        let mem = QuantumMemory::from_state(bell("a", "b"));
        let cq = mem.cq_state(&["a"], &["b"]).unwrap();
        cq.check().unwrap();
        assert_eq!(cq.branches().len(), 2);
        let k1 = &cq.branches()[&Bits::parse("1").unwrap()];
        assert!((k1.matrix()[(1, 1)].re - 0.5).abs() < ALGEBRA_TOL);

        let mut plus = QuantumMemory::new();
        plus.prepare_qubit("a", false).unwrap();
        plus.apply(&UnitaryOp::h(), &["a"]).unwrap();
        plus.prepare_qubit("b", false).unwrap();
        let other = plus.cq_state(&["a"], &["b"]).unwrap();
        // Same outcome marginal, but the kept qubit is |0⟩ regardless.
        assert!((cq.trace_distance(&other).unwrap() - 0.5).abs() < ALGEBRA_TOL);
        assert!(cq.trace_distance(&cq).unwrap() < ALGEBRA_TOL);
    }

    #[test]
    fn rename_and_split() {
        let mut mem = QuantumMemory::from_state(bell("a", "b"));
        mem.prepare_qubit("c", true).unwrap();
        mem.rename("a", "x").unwrap();
        assert!(mem.contains("x") && !mem.contains("a"));
        assert!(mem.split_off(&["x"]).is_err());
        let c = mem.split_off(&["c"]).unwrap();
        assert!(c.contains("c") && !mem.contains("c"));
        mem.rename_all(|n| format!("copy.{n}")).unwrap();
        assert!(mem.contains("copy.x") && mem.contains("copy.b"));
    }
}
