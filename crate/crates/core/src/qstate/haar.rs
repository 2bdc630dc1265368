use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CMatrix, DensityMatrix, RegisterLayout, UnitaryOp, C64};

/// Haar-random `d × d` unitary: QR of a complex Ginibre matrix, with the
/// phases of `diag(R)` folded back into `Q` so the law is exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitaryOp {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    UnitaryOp::new_unchecked(q)
}

/// Random full-rank density matrix `GG† / Tr(GG†)` for a complex Ginibre `G`.
pub fn random_density<R: Rng + ?Sized>(layout: RegisterLayout, rng: &mut R) -> DensityMatrix {
    let d = layout.dim();
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new_unchecked(layout, m / tr).expect("square matrix matching its layout")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::ALGEBRA_TOL;
    use crate::rng::Stream;

    #[test]
    fn dimension_one_is_a_phase() {
        let mut rng = Stream::new(11);
        for _ in 0..10 {
            let u = haar_unitary(1, &mut rng);
            assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < ALGEBRA_TOL);
        }
    }

    #[test]
    fn samples_are_unitary() {
        for seed in 0..100 {
            let mut rng = Stream::new(seed);
            let u = haar_unitary(4, &mut rng);
            assert!(u.unitarity_error() < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn first_entry_second_moment() {
        // For d = 2, |U_00|² is uniform on [0, 1].
        let mut rng = Stream::new(12);
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|_| haar_unitary(2, &mut rng).matrix()[(0, 0)].norm_sqr()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let sigma = (1.0 / 12.0 / n as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn phases_are_uniform() {
        // Without the phase correction the diagonal of Q is biased toward the
        // positive real axis; check E[U_00] ≈ 0.
        let mut rng = Stream::new(13);
        let n = 20_000;
        let mean: C64 = (0..n).map(|_| haar_unitary(2, &mut rng).matrix()[(0, 0)]).sum::<C64>() / n as f64;
        let sigma = (0.5 / n as f64).sqrt();
        assert!(mean.norm() < 4.0 * sigma, "mean {mean}");
    }
}
