use rand::Rng;

use super::{
    CMatrix, CVector, DensityMatrix, PureState, RegisterLayout, UnitaryOp, C64, STATE_TOL, ZERO,
};
use crate::bits::Bits;
use crate::error::{Error, Result};

/// Kronecker product with concatenated layouts.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        PureState::new_unchecked(layout, self.amplitudes().kronecker(other.amplitudes()))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let layout = self.layout().concat(other.layout())?;
        DensityMatrix::new_unchecked(layout, self.matrix().kronecker(other.matrix()))
    }
}

impl Tensor for UnitaryOp {
    fn tensor(&self, other: &Self) -> Result<Self> {
        let dim = self.dim() * other.dim();
        if dim > super::DIMENSION_CAP {
            return Err(Error::DimensionCap { requested: dim, cap: super::DIMENSION_CAP });
        }
        Ok(UnitaryOp::new_unchecked(self.matrix().kronecker(other.matrix())))
    }
}

/// Decomposition of a layout's basis indices into (rest, target) parts.
struct Split {
    target_of: Vec<usize>,
    rest_of: Vec<usize>,
    /// `full[rest * target_dim + target]`
    full: Vec<usize>,
    target_dim: usize,
    rest_dim: usize,
}

impl Split {
    fn new(layout: &RegisterLayout, targets: &[&str]) -> Result<Split> {
        let positions = targets.iter().map(|t| layout.position(t)).collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::Layout(format!("register `{}` targeted twice", targets[i])));
            }
        }
        let regs = layout.registers();
        let target_dims: Vec<usize> = positions.iter().map(|&p| regs[p].1).collect();
        let rest_positions: Vec<usize> = (0..regs.len()).filter(|p| !positions.contains(p)).collect();
        let rest_dims: Vec<usize> = rest_positions.iter().map(|&p| regs[p].1).collect();
        let target_dim: usize = target_dims.iter().product();
        let rest_dim: usize = rest_dims.iter().product();
        let dim = layout.dim();
        let mut target_of = vec![0; dim];
        let mut rest_of = vec![0; dim];
        let mut full = vec![0; dim];
        for i in 0..dim {
            let digits = layout.digits(i);
            let t = positions.iter().zip(&target_dims).fold(0, |acc, (&p, &d)| acc * d + digits[p]);
            let r = rest_positions.iter().zip(&rest_dims).fold(0, |acc, (&p, &d)| acc * d + digits[p]);
            target_of[i] = t;
            rest_of[i] = r;
            full[r * target_dim + t] = i;
        }
        Ok(Split { target_of, rest_of, full, target_dim, rest_dim })
    }
}

/// Reduced state on the registers named in `keep`, in layout order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    for k in keep {
        layout.position(k)?;
    }
    let kept_regs: Vec<(String, usize)> = layout
        .registers()
        .iter()
        .filter(|(n, _)| keep.contains(&n.as_str()))
        .cloned()
        .collect();
    let kept_names: Vec<&str> = kept_regs.iter().map(|(n, _)| n.as_str()).collect();
    let split = Split::new(layout, &kept_names)?;
    let kd = split.target_dim;
    let m = rho.matrix();
    let mut out = CMatrix::zeros(kd, kd);
    for r in 0..split.rest_dim {
        for k1 in 0..kd {
            let i = split.full[r * kd + k1];
            for k2 in 0..kd {
                let j = split.full[r * kd + k2];
                out[(k1, k2)] += m[(i, j)];
            }
        }
    }
    DensityMatrix::new_unchecked(RegisterLayout::new(kept_regs)?, out)
}

/// Embeds `u` on `targets` (identity elsewhere) and applies it.
pub trait Apply: Sized {
    fn apply(&self, u: &UnitaryOp, targets: &[&str]) -> Result<Self>;
}

fn apply_left(layout: &RegisterLayout, u: &CMatrix, targets: &[&str], cols: &CMatrix) -> Result<CMatrix> {
    let split = Split::new(layout, targets)?;
    if u.nrows() != split.target_dim {
        return Err(Error::DimensionMismatch { expected: split.target_dim, got: u.nrows() });
    }
    let td = split.target_dim;
    let mut out = CMatrix::zeros(cols.nrows(), cols.ncols());
    for c in 0..cols.ncols() {
        for i in 0..cols.nrows() {
            let (r, t) = (split.rest_of[i], split.target_of[i]);
            let base = r * td;
            let mut acc = ZERO;
            for t2 in 0..td {
                let coeff = u[(t, t2)];
                if coeff != ZERO {
                    acc += coeff * cols[(split.full[base + t2], c)];
                }
            }
            out[(i, c)] = acc;
        }
    }
    Ok(out)
}

impl Apply for PureState {
    fn apply(&self, u: &UnitaryOp, targets: &[&str]) -> Result<Self> {
        let col = CMatrix::from_column_slice(self.dim(), 1, self.amplitudes().as_slice());
        let out = apply_left(self.layout(), u.matrix(), targets, &col)?;
        PureState::new_unchecked(self.layout().clone(), CVector::from_column_slice(out.as_slice()))
    }
}

impl Apply for DensityMatrix {
    fn apply(&self, u: &UnitaryOp, targets: &[&str]) -> Result<Self> {
        let left = apply_left(self.layout(), u.matrix(), targets, self.matrix())?;
        let both = apply_left(self.layout(), u.matrix(), targets, &left.adjoint())?.adjoint();
        DensityMatrix::new_unchecked(self.layout().clone(), both)
    }
}

/// Measures the named qubit registers in the computational basis, in order.
pub fn measure_computational<R: Rng + ?Sized>(
    state: &PureState,
    targets: &[&str],
    rng: &mut R,
) -> Result<(Bits, PureState)> {
    let layout = state.layout().clone();
    let mut amps = state.amplitudes().clone();
    let mut outcome = Bits::default();
    for t in targets {
        let pos = layout.position(t)?;
        if layout.registers()[pos].1 != 2 {
            return Err(Error::Precondition(format!("register `{t}` is not a qubit")));
        }
        let digit = |i: usize| layout.digits(i)[pos];
        let p1: f64 = (0..amps.len()).filter(|&i| digit(i) == 1).map(|i| amps[i].norm_sqr()).sum();
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let bit = rng.random::<f64>() * total < p1;
        let p = if bit { p1 } else { total - p1 };
        if p <= 1e-300 {
            return Err(Error::ZeroNormBranch);
        }
        let scale = C64::from(1.0 / p.sqrt());
        for i in 0..amps.len() {
            amps[i] = if (digit(i) == 1) == bit { amps[i] * scale } else { ZERO };
        }
        outcome.push(bit);
    }
    Ok((outcome, PureState::new_unchecked(layout, amps)?))
}

fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * C64::from(0.5);
    let eig = herm.symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m);
    if let Some(&min) = vals.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -STATE_TOL {
            return Err(Error::Invariant(format!("operator is not PSD (eigenvalue {min:e})")));
        }
    }
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::from(v.max(0.0).sqrt())),
    ));
    Ok(&vecs * d * vecs.adjoint())
}

fn purifier_layout(layout: &RegisterLayout) -> Result<RegisterLayout> {
    layout.renamed(|n| format!("{n}.pur"))
}

/// `(√σ ⊗ I) Σ_i |i⟩|i⟩`, with the purifying registers named `<name>.pur`.
pub fn canonical_purification(sigma: &DensityMatrix) -> Result<PureState> {
    sigma.check()?;
    let root = psd_sqrt(sigma.matrix())?;
    let d = sigma.dim();
    let layout = sigma.layout().concat(&purifier_layout(sigma.layout())?)?;
    let mut amps = CVector::zeros(d * d);
    for a in 0..d {
        for i in 0..d {
            amps[a * d + i] = root[(a, i)];
        }
    }
    PureState::new(layout, amps)
}

/// `Σ_j √λ_j |e_j⟩|j⟩` with a single purifying register `b_name` of
/// dimension `m`; requires `m ≥ rank(σ)`.
pub fn schmidt_purification(sigma: &DensityMatrix, b_name: &str, m: usize) -> Result<PureState> {
    sigma.check()?;
    let (vals, vecs) = hermitian_eigen(sigma.matrix());
    let mut support: Vec<usize> = (0..vals.len()).filter(|&j| vals[j] > 1e-12).collect();
    support.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    if support.len() > m {
        return Err(Error::RankTooLarge { m, rank: support.len() });
    }
    let layout = sigma.layout().concat(&RegisterLayout::single(b_name, m)?)?;
    let d = sigma.dim();
    let mut amps = CVector::zeros(d * m);
    for (slot, &j) in support.iter().enumerate() {
        let w = vals[j].sqrt();
        for a in 0..d {
            amps[a * m + slot] = vecs[(a, j)] * w;
        }
    }
    let norm = amps.norm();
    PureState::new(layout, amps / C64::from(norm))
}

/// `½‖ρ − τ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, tau: &DensityMatrix) -> Result<f64> {
    if rho.layout() != tau.layout() {
        return Err(Error::LayoutMismatch);
    }
    Ok(trace_norm_hermitian(&(rho.matrix() - tau.matrix())) / 2.0)
}

pub(crate) fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).sum()
}

/// Uhlmann fidelity `(Tr √(√ρ τ √ρ))²`.
pub fn fidelity(rho: &DensityMatrix, tau: &DensityMatrix) -> Result<f64> {
    if rho.layout() != tau.layout() {
        return Err(Error::LayoutMismatch);
    }
    let root = psd_sqrt(rho.matrix())?;
    let inner = &root * tau.matrix() * &root;
    let (vals, _) = hermitian_eigen(&inner);
    let s: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((s * s).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{haar_unitary, ALGEBRA_TOL, ONE};
    use crate::rng::Stream;
    use rand_distr::{Distribution, StandardNormal};

    fn qubits(names: &[&str]) -> RegisterLayout {
        RegisterLayout::qubits(names).unwrap()
    }

    fn random_state(layout: RegisterLayout, rng: &mut Stream) -> PureState {
        let v = CVector::from_fn(layout.dim(), |_, _| {
            C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        });
        let n = v.norm();
        PureState::new(layout, v / C64::from(n)).unwrap()
    }

    fn random_density(layout: RegisterLayout, rng: &mut Stream) -> DensityMatrix {
        let d = layout.dim();
        let g = CMatrix::from_fn(d, d, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        let m = &g * g.adjoint();
        let tr = m.trace();
        DensityMatrix::new(layout, m / tr).unwrap()
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn tensor_identities_and_basis_states() {
        let i2 = UnitaryOp::identity(2);
        assert_eq!(i2.tensor(&i2).unwrap(), UnitaryOp::identity(4));
        let k0 = PureState::basis(qubits(&["a"]), &[0]).unwrap();
        let k1 = PureState::basis(qubits(&["b"]), &[1]).unwrap();
        let k01 = k0.tensor(&k1).unwrap();
        assert_eq!(k01.amplitudes()[1], ONE);
        assert!((k01.norm_sqr() - 1.0).abs() < ALGEBRA_TOL);
    }

    #[test]
    fn tensor_matches_index_formula() {
        let mut rng = Stream::new(1);
        let a = random_density(RegisterLayout::single("a", 2).unwrap(), &mut rng);
        let b = random_density(RegisterLayout::single("b", 3).unwrap(), &mut rng);
        let ab = a.tensor(&b).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                for k in 0..2 {
                    for l in 0..3 {
                        let expected = a.matrix()[(i, k)] * b.matrix()[(j, l)];
                        assert!((ab.matrix()[(i * 3 + j, k * 3 + l)] - expected).norm() < ALGEBRA_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let ket = PureState::basis(qubits(&["a", "b"]), &[0, 1]).unwrap();
        let red = partial_trace(&ket.to_density(), &["a"]).unwrap();
        assert_eq!(red.matrix(), PureState::basis(qubits(&["a"]), &[0]).unwrap().to_density().matrix());

        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let bell = PureState::new(qubits(&["a", "b"]), CVector::from_vec(vec![s, ZERO, ZERO, s])).unwrap();
        let red = partial_trace(&bell.to_density(), &["a"]).unwrap();
        assert!(max_diff(red.matrix(), &(CMatrix::identity(2, 2) * C64::from(0.5))) < ALGEBRA_TOL);
        assert!(partial_trace(&bell.to_density(), &["zz"]).is_err());
    }

    #[test]
    fn partial_trace_matches_double_sum_oracle() {
        let mut rng = Stream::new(2);
        let layout = RegisterLayout::new(vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 2)]).unwrap();
        let psi = random_state(layout, &mut rng);
        let rho = psi.to_density();
        // keep {a, c}: out[(a,c),(a',c')] = Σ_b ψ[a,b,c] ψ*[a',b,c']
        let amp = |a: usize, b: usize, c: usize| psi.amplitudes()[a * 4 + b * 2 + c];
        let red = partial_trace(&rho, &["c", "a"]).unwrap();
        assert_eq!(red.layout().names().collect::<Vec<_>>(), vec!["a", "c"]);
        for a in 0..3 {
            for c in 0..2 {
                for a2 in 0..3 {
                    for c2 in 0..2 {
                        let mut s = ZERO;
                        for b in 0..2 {
                            s += amp(a, b, c) * amp(a2, b, c2).conj();
                        }
                        assert!((red.matrix()[(a * 2 + c, a2 * 2 + c2)] - s).norm() < ALGEBRA_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn apply_single_qubit_gates() {
        let k0 = PureState::basis(qubits(&["q"]), &[0]).unwrap();
        let k1 = k0.apply(&UnitaryOp::x(), &["q"]).unwrap();
        assert_eq!(k1, PureState::basis(qubits(&["q"]), &[1]).unwrap());
        let plus = k0.apply(&UnitaryOp::h(), &["q"]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((plus.amplitudes()[0].re - s).abs() < ALGEBRA_TOL);
        assert!((plus.amplitudes()[1].re - s).abs() < ALGEBRA_TOL);
        assert!(k0.apply(&UnitaryOp::cnot(), &["q"]).is_err());
    }

    #[test]
    fn apply_on_b_matches_explicit_tensor() {
        let mut rng = Stream::new(3);
        let layout = RegisterLayout::new(vec![("a".into(), 2), ("b".into(), 3)]).unwrap();
        let rho = random_density(layout, &mut rng);
        let u = haar_unitary(3, &mut rng);
        let full = UnitaryOp::identity(2).tensor(&u).unwrap();
        let expected = full.matrix() * rho.matrix() * full.matrix().adjoint();
        let got = rho.apply(&u, &["b"]).unwrap();
        assert!(max_diff(got.matrix(), &expected) < ALGEBRA_TOL);
        assert!((got.trace().re - 1.0).abs() < STATE_TOL);
        assert!(got.hermiticity_error() < STATE_TOL);
    }

    #[test]
    fn apply_respects_target_order() {
        let mut rng = Stream::new(4);
        let psi = random_state(qubits(&["a", "b"]), &mut rng);
        let swapped = psi.apply(&UnitaryOp::cnot(), &["b", "a"]).unwrap();
        // CNOT with control b, target a: |a b⟩ -> |a⊕b, b⟩
        let amp = psi.amplitudes();
        let expected = [amp[0], amp[3], amp[2], amp[1]];
        for (got, want) in swapped.amplitudes().iter().zip(expected) {
            assert!((got - want).norm() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn measurement_examples() {
        let mut rng = Stream::new(5);
        let k1 = PureState::basis(qubits(&["q"]), &[1]).unwrap();
        for _ in 0..20 {
            let (o, _) = measure_computational(&k1, &["q"], &mut rng).unwrap();
            assert!(o.get(0));
        }
        let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        let bell = PureState::new(qubits(&["a", "b"]), CVector::from_vec(vec![s, ZERO, ZERO, s])).unwrap();
        for _ in 0..20 {
            let (o, post) = measure_computational(&bell, &["a"], &mut rng).unwrap();
            let b = o.get(0) as usize;
            assert_eq!(post, PureState::basis(qubits(&["a", "b"]), &[b, b]).unwrap());
        }
    }

    #[test]
    fn plus_state_statistics_within_three_sigma() {
        let mut rng = Stream::new(6);
        let plus = PureState::basis(qubits(&["q"]), &[0]).unwrap().apply(&UnitaryOp::h(), &["q"]).unwrap();
        let n = 10_000;
        let zeros = (0..n)
            .filter(|_| !measure_computational(&plus, &["q"], &mut rng).unwrap().0.get(0))
            .count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((zeros as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn canonical_purification_examples() {
        let k0 = PureState::basis(qubits(&["a"]), &[0]).unwrap().to_density();
        let p = canonical_purification(&k0).unwrap();
        assert!((p.amplitudes()[0] - ONE).norm() < ALGEBRA_TOL);

        let mixed = DensityMatrix::maximally_mixed(qubits(&["a"]));
        let p = canonical_purification(&mixed).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.amplitudes()[0].re - s).abs() < ALGEBRA_TOL && (p.amplitudes()[3].re - s).abs() < ALGEBRA_TOL);

        let mut rng = Stream::new(7);
        let sigma = random_density(RegisterLayout::single("a", 3).unwrap(), &mut rng);
        let p = canonical_purification(&sigma).unwrap();
        let back = partial_trace(&p.to_density(), &["a"]).unwrap();
        assert!(max_diff(back.matrix(), sigma.matrix()) < STATE_TOL);

        let not_psd = DensityMatrix::new_unchecked(
            qubits(&["a"]),
            CMatrix::from_row_slice(2, 2, &[C64::from(1.5), ZERO, ZERO, C64::from(-0.5)]),
        )
        .unwrap();
        assert!(canonical_purification(&not_psd).is_err());
    }

    #[test]
    fn schmidt_purification_respects_rank() {
        let mut rng = Stream::new(8);
        let sigma = random_density(RegisterLayout::single("a", 3).unwrap(), &mut rng);
        assert!(matches!(schmidt_purification(&sigma, "b", 2), Err(Error::RankTooLarge { .. })));
        let p = schmidt_purification(&sigma, "b", 4).unwrap();
        let back = partial_trace(&p.to_density(), &["a"]).unwrap();
        assert!(max_diff(back.matrix(), sigma.matrix()) < STATE_TOL);
    }

    #[test]
    fn distances() {
        let mut rng = Stream::new(9);
        let rho = random_density(qubits(&["a", "b"]), &mut rng);
        assert!(trace_distance(&rho, &rho).unwrap() < ALGEBRA_TOL);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);

        let k0 = PureState::basis(qubits(&["q"]), &[0]).unwrap();
        let k1 = PureState::basis(qubits(&["q"]), &[1]).unwrap();
        assert!((trace_distance(&k0.to_density(), &k1.to_density()).unwrap() - 1.0).abs() < ALGEBRA_TOL);
        assert!(fidelity(&k0.to_density(), &k1.to_density()).unwrap() < ALGEBRA_TOL);

        let plus = k0.apply(&UnitaryOp::h(), &["q"]).unwrap();
        let eig = trace_distance(&k0.to_density(), &plus.to_density()).unwrap();
        let closed = (1.0 - k0.inner(&plus).norm_sqr()).sqrt();
        assert!((eig - closed).abs() < ALGEBRA_TOL);

        let other = random_density(qubits(&["x", "y"]), &mut rng);
        assert_eq!(trace_distance(&rho, &other), Err(Error::LayoutMismatch));
    }
}
