//! Seeded randomness helpers: a fixed-algorithm generator and Haar-random
//! unitaries via QR of complex Gaussian matrices.

use crate::{c, CMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

/// The crate-wide deterministic generator. All sampling goes through this
/// type so identical seeds give identical runs.
pub type SeededRng = rand::rngs::StdRng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

fn gaussian_c(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-distributed n x n unitary: Gram-Schmidt on a Ginibre matrix, with
/// positive-diagonal R so the distribution is exactly Haar.
pub fn haar_random_unitary(n: usize, rng: &mut impl Rng) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| gaussian_c(rng));
    let mut q = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = z.column(j).clone_owned();
        for k in 0..j {
            let qk = q.column(k);
            let overlap = qk.dotc(&col);
            col -= qk * overlap;
        }
        let norm = col.norm();
        q.set_column(j, &(col / c(norm)));
    }
    q
}

pub fn haar_random_u2(rng: &mut impl Rng) -> CMatrix {
    haar_random_unitary(2, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(7);
        for n in [2usize, 3, 5] {
            let u = haar_random_unitary(n, &mut rng);
            let resid = (&u * u.adjoint() - CMatrix::identity(n, n))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(resid < 1e-12, "n = {}, residual {}", n, resid);
        }
    }

    #[test]
    fn same_seed_same_unitary() {
        let a = haar_random_u2(&mut rng_from_seed(42));
        let b = haar_random_u2(&mut rng_from_seed(42));
        assert_eq!(a, b);
        let c2 = haar_random_u2(&mut rng_from_seed(43));
        assert!((a - c2).iter().map(|z| z.norm()).fold(0.0, f64::max) > 1e-3);
    }
}
