//! Operator algebra for finite local Hilbert spaces: truncated boson modes,
//! two-level atoms, and composite lattices of such sites.
//!
//! Basis ordering is fixed crate-wide: within a site the atom index is slow
//! and the photon index fast, `index = atom * (n_max + 1) + n`; in composite
//! spaces site 0 is the slowest tensor factor.

use crate::error::{Error, Result};
use crate::tolerances;
use crate::{c, ci, CMatrix};

/// One atom-cavity site: a two-level atom and a photon mode truncated at
/// `n_max` excitations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSpace {
    pub n_max: usize,
}

impl LocalSpace {
    pub fn new(n_max: usize) -> Self {
        LocalSpace { n_max }
    }

    /// Total site dimension, 2 (n_max + 1).
    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    /// Basis index of |atom, n>; atom 0 is |g>, atom 1 is |e>.
    pub fn index(&self, atom: usize, n: usize) -> usize {
        debug_assert!(atom < 2 && n <= self.n_max);
        atom * (self.n_max + 1) + n
    }
}

/// A dense operator together with the site-dimension list it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub matrix: CMatrix,
    pub site_dims: Vec<usize>,
}

impl Operator {
    /// Wraps a matrix, checking that it is square and matches the site list.
    pub fn new(matrix: CMatrix, site_dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParameter(format!(
                "operator matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let expected: usize = site_dims.iter().product();
        if matrix.nrows() != expected {
            return Err(Error::InvalidParameter(format!(
                "operator dimension {} does not match product of site dimensions {}",
                matrix.nrows(),
                expected
            )));
        }
        Ok(Operator { matrix, site_dims })
    }

    /// Wraps a square matrix as a single-site operator.
    pub fn from_square(matrix: CMatrix) -> Result<Self> {
        let n = matrix.nrows();
        Operator::new(matrix, vec![n])
    }

    pub fn identity(site_dims: Vec<usize>) -> Self {
        let d: usize = site_dims.iter().product();
        Operator {
            matrix: CMatrix::identity(d, d),
            site_dims,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Max-norm of M - M^dagger.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..=i {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Errors unless the operator is Hermitian within the crate tolerance.
    pub fn require_hermitian(&self) -> Result<()> {
        let r = self.hermiticity_residual();
        if r > tolerances::HERMITICITY {
            return Err(Error::InvalidParameter(format!(
                "operator is not Hermitian, residual {:.3e}",
                r
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint(),
            site_dims: self.site_dims.clone(),
        }
    }
}

/// Kronecker product with the left factor slowest, matching the crate's
/// site-ordering convention.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Annihilation and creation operators on a photon mode truncated at `n_max`.
///
/// <n-1| a |n> = sqrt(n). The truncated commutator [a, a^dagger] equals the
/// identity except for the (n_max, n_max) entry, which is -n_max.
pub fn fock_ladder(n_max: usize) -> Result<(Operator, Operator)> {
    if n_max < 1 {
        return Err(Error::InvalidParameter(format!(
            "photon cutoff n_max must be at least 1, got {}",
            n_max
        )));
    }
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..=n_max {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let adag = a.adjoint();
    Ok((Operator::new(a, vec![d])?, Operator::new(adag, vec![d])?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliLabel {
    X,
    Y,
    Z,
    /// |1><0|, raises the occupation label.
    Plus,
    /// |0><1|, lowers the occupation label.
    Minus,
}

/// Standard 2x2 Pauli matrices in the occupation-label basis (|0>, |1>),
/// where sigma_z |0> = +|0>.
pub fn pauli(label: PauliLabel) -> Operator {
    let m = match label {
        PauliLabel::X => CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
        PauliLabel::Y => {
            CMatrix::from_row_slice(2, 2, &[c(0.0), ci(0.0, -1.0), ci(0.0, 1.0), c(0.0)])
        }
        PauliLabel::Z => CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
        PauliLabel::Plus => CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(1.0), c(0.0)]),
        PauliLabel::Minus => CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]),
    };
    Operator {
        matrix: m,
        site_dims: vec![2],
    }
}

/// Tensors `op` (acting on one site) with identities on every other site.
pub fn embed(op: &Operator, site: usize, site_dims: &[usize]) -> Result<Operator> {
    if site >= site_dims.len() {
        return Err(Error::InvalidParameter(format!(
            "site index {} out of range for {} sites",
            site,
            site_dims.len()
        )));
    }
    if op.dim() != site_dims[site] {
        return Err(Error::InvalidParameter(format!(
            "operator dimension {} does not match site dimension {}",
            op.dim(),
            site_dims[site]
        )));
    }
    let left: usize = site_dims[..site].iter().product();
    let right: usize = site_dims[site + 1..].iter().product();
    let mut m = kron(&CMatrix::identity(left, left), &op.matrix);
    m = kron(&m, &CMatrix::identity(right, right));
    Operator::new(m, site_dims.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maxdiff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn ladder_two_level() {
        let (a, adag) = fock_ladder(1).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert_eq!(a.matrix, want, "n_max=1 annihilator is [[0,1],[0,0]]");
        assert_eq!(adag.matrix, a.matrix.adjoint());
    }

    #[test]
    fn ladder_matrix_elements() {
        let (a, _) = fock_ladder(3).unwrap();
        assert!(
            (a.matrix[(2, 3)].re - 3.0f64.sqrt()).abs() < 1e-15,
            "<2|a|3> = sqrt(3)"
        );
    }

    #[test]
    fn number_operator_spectrum() {
        for n_max in 1..=4 {
            let (a, adag) = fock_ladder(n_max).unwrap();
            let num = &adag.matrix * &a.matrix;
            for n in 0..=n_max {
                assert!(
                    (num[(n, n)].re - n as f64).abs() < 1e-15,
                    "a^dagger a is diag(0..n_max)"
                );
            }
        }
    }

    #[test]
    fn truncated_commutator_matrix() {
        let n_max = 3;
        let (a, adag) = fock_ladder(n_max).unwrap();
        let comm = &a.matrix * &adag.matrix - &adag.matrix * &a.matrix;
        let mut want = CMatrix::identity(n_max + 1, n_max + 1);
        want[(n_max, n_max)] = c(-(n_max as f64));
        assert!(
            maxdiff(&comm, &want) < 1e-14,
            "[a, a^dagger] has the truncation artifact"
        );
    }

    #[test]
    fn ladder_rejects_zero_cutoff() {
        assert!(matches!(fock_ladder(0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn pauli_z_convention() {
        let z = pauli(PauliLabel::Z);
        assert_eq!(z.matrix[(0, 0)], c(1.0));
        assert_eq!(z.matrix[(1, 1)], c(-1.0));
    }

    #[test]
    fn pauli_algebra() {
        let x = pauli(PauliLabel::X).matrix;
        let y = pauli(PauliLabel::Y).matrix;
        let z = pauli(PauliLabel::Z).matrix;
        let comm = &x * &y - &y * &x;
        assert!(maxdiff(&comm, &(z * ci(0.0, 2.0))) < 1e-15, "[X, Y] = 2iZ");
    }

    #[test]
    fn pauli_plus_raises() {
        let p = pauli(PauliLabel::Plus).matrix;
        // column 0 is the image of |0>: must be |1>
        assert_eq!(p[(1, 0)], c(1.0));
        assert_eq!(p[(0, 0)], c(0.0));
        let m = pauli(PauliLabel::Minus).matrix;
        let cmpl = &p * &m + &m * &p;
        assert!(
            maxdiff(&cmpl, &CMatrix::identity(2, 2)) < 1e-15,
            "completeness"
        );
    }

    #[test]
    fn embed_identity_and_disjoint_commutation() {
        let dims = [2usize, 2];
        let idm = Operator::identity(vec![2]);
        let full = embed(&idm, 1, &dims).unwrap();
        assert!(maxdiff(&full.matrix, &CMatrix::identity(4, 4)) < 1e-15);

        let z0 = embed(&pauli(PauliLabel::Z), 0, &dims).unwrap();
        let want = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(1.0),
            c(1.0),
            c(-1.0),
            c(-1.0),
        ]));
        assert!(
            maxdiff(&z0.matrix, &want) < 1e-15,
            "site 0 is the slow index"
        );

        let x1 = embed(&pauli(PauliLabel::X), 1, &dims).unwrap();
        assert!(
            maxdiff(&(&z0.matrix * &x1.matrix), &(&x1.matrix * &z0.matrix)) < 1e-15,
            "disjoint embeddings commute"
        );
    }

    #[test]
    fn embed_dimension_mismatch() {
        let op = Operator::identity(vec![3]);
        assert!(matches!(
            embed(&op, 0, &[2, 2]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn embed_preserves_hermiticity() {
        let y = pauli(PauliLabel::Y);
        let e = embed(&y, 1, &[2, 2, 2]).unwrap();
        assert!(e.hermiticity_residual() < 1e-15);
    }

    #[test]
    fn local_space_indexing() {
        let s = LocalSpace::new(2);
        assert_eq!(s.dim(), 6);
        assert_eq!(s.index(0, 0), 0);
        assert_eq!(s.index(0, 2), 2);
        assert_eq!(s.index(1, 0), 3);
        assert_eq!(s.index(1, 2), 5);
    }
}
