//! Time evolution at desk scale: exact unitary propagation by
//! eigendecomposition, a fixed-step Lindblad integrator with step-halving
//! convergence control, and a block-diagonal Liouvillian exponential for
//! graded (excitation-conserving) open systems.

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::tolerances;
use crate::{c, CMatrix, CVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: CVector,
}

impl QuantumState {
    /// Wraps a vector, requiring unit norm within tolerance.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if (n - 1.0).abs() > tolerances::STATE_NORM {
            return Err(Error::InvalidParameter(format!(
                "state norm {} is not 1 within {:.0e}",
                n,
                tolerances::STATE_NORM
            )));
        }
        Ok(QuantumState { amplitudes })
    }

    /// Rescales a vector to unit norm; zero vectors are rejected.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n < tolerances::BRANCH_FLOOR {
            return Err(Error::DegenerateBranch(
                "cannot normalize a (near-)zero vector".into(),
            ));
        }
        Ok(QuantumState {
            amplitudes: v / c(n),
        })
    }

    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidParameter(format!(
                "basis index {} out of range for dimension {}",
                index, dim
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = c(1.0);
        Ok(QuantumState { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// <self|other>.
    pub fn overlap(&self, other: &QuantumState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Trace-one positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix, checking hermiticity and unit trace (cheap checks
    /// only; use `validate_full` for the positivity test).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = DensityMatrix { matrix };
        rho.check_hermiticity_and_trace()?;
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// tr(M rho).
    pub fn expectation(&self, m: &CMatrix) -> Complex64 {
        (m * &self.matrix).trace()
    }

    fn check_hermiticity_and_trace(&self) -> Result<()> {
        let herm = Operator {
            matrix: self.matrix.clone(),
            site_dims: vec![self.dim()],
        }
        .hermiticity_residual();
        if herm > tolerances::DM_HERMITICITY {
            return Err(Error::NumericalFailure(format!(
                "density matrix hermiticity residual {:.3e}",
                herm
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tolerances::DM_TRACE || tr.im.abs() > tolerances::DM_TRACE {
            return Err(Error::NumericalFailure(format!(
                "density matrix trace {} is not 1",
                tr
            )));
        }
        Ok(())
    }

    /// Hermiticity, trace, and eigenvalue floor.
    pub fn validate_full(&self) -> Result<()> {
        self.check_hermiticity_and_trace()?;
        let sym = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        let eig = nalgebra::SymmetricEigen::new(sym);
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < tolerances::DM_EIGENVALUE_FLOOR {
            return Err(Error::NumericalFailure(format!(
                "density matrix eigenvalue {:.3e} below floor",
                min
            )));
        }
        Ok(())
    }
}

/// Dense complex matrix product through the blocked gemm kernel; noticeably
/// faster than the naive product for dimensions in the hundreds.
pub fn zmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (m, k) = (a.nrows(), a.ncols());
    let n = b.ncols();
    assert_eq!(k, b.nrows(), "inner dimensions must agree");
    let mut out = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_slice().as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_slice().as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            out.as_mut_slice().as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

/// Native two-qubit gate duration t* = pi / (2 sqrt(2) A).
pub fn gate_time(a_coeff: f64) -> Result<f64> {
    if a_coeff <= 0.0 || !a_coeff.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "coupling must be positive and finite, got {}",
            a_coeff
        )));
    }
    Ok(PI / (2.0 * 2f64.sqrt() * a_coeff))
}

/// exp(-i H t) for Hermitian H, via eigendecomposition.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut phases = CMatrix::zeros(n, n);
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        phases[(i, i)] = Complex64::from_polar(1.0, -e * t);
    }
    let v = &eig.eigenvectors;
    zmul(&zmul(v, &phases), &v.adjoint())
}

/// exp(-i H t) |psi>, exact at working precision.
pub fn evolve_unitary(h: &Operator, psi: &QuantumState, t: f64) -> Result<QuantumState> {
    h.require_hermitian()?;
    if h.dim() != psi.dim() {
        return Err(Error::InvalidParameter(format!(
            "dimension mismatch: H is {}, state is {}",
            h.dim(),
            psi.dim()
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(h.matrix.clone());
    let coeffs = eig.eigenvectors.adjoint() * &psi.amplitudes;
    let mut rotated = CVector::zeros(psi.dim());
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        rotated[i] = coeffs[i] * Complex64::from_polar(1.0, -e * t);
    }
    let out = &eig.eigenvectors * rotated;
    QuantumState::new(out)
}

fn one_norm(m: &CMatrix) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        if s > best {
            best = s;
        }
    }
    best
}

/// Matrix exponential by degree-13 Pade approximation with scaling and
/// squaring. Works for general (non-Hermitian) matrices such as Liouvillians.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParameter(
            "expm requires a square matrix".into(),
        ));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NumericalFailure(
            "expm input has non-finite norm".into(),
        ));
    }
    let s: u32 = if norm <= THETA_13 {
        0
    } else {
        (norm / THETA_13).log2().ceil() as u32
    };
    let scaled = a * c(1.0 / 2f64.powi(s as i32));
    let id = CMatrix::identity(n, n);
    let a2 = zmul(&scaled, &scaled);
    let a4 = zmul(&a2, &a2);
    let a6 = zmul(&a2, &a4);
    let u_inner = &a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]);
    let u = zmul(
        &scaled,
        &(zmul(&a6, &u_inner) + &a6 * c(B[7]) + &a4 * c(B[5]) + &a2 * c(B[3]) + &id * c(B[1])),
    );
    let v_inner = &a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]);
    let v = zmul(&a6, &v_inner) + &a6 * c(B[6]) + &a4 * c(B[4]) + &a2 * c(B[2]) + &id * c(B[0]);
    let lu = nalgebra::LU::new(&v - &u);
    let mut r = lu
        .solve(&(&v + &u))
        .ok_or_else(|| Error::NumericalFailure("Pade denominator is singular".into()))?;
    for _ in 0..s {
        r = zmul(&r, &r);
    }
    Ok(r)
}

/// 1/2 tr |rho - sigma| for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = (a - b + (a - b).adjoint()) * c(0.5);
    let eig = nalgebra::SymmetricEigen::new(diff);
    0.5 * eig.eigenvalues.iter().map(|e| e.abs()).sum::<f64>()
}

fn lindblad_rhs(h: &CMatrix, collapse: &[(f64, CMatrix, CMatrix)], rho: &CMatrix) -> CMatrix {
    let hr = h * rho;
    let mut out = (&hr - hr.adjoint()) * Complex64::new(0.0, -1.0);
    for (rate, l, ldl) in collapse {
        let lr = l * rho;
        out += (&lr * l.adjoint()) * c(*rate);
        let anti = ldl * rho + rho * ldl;
        out -= anti * c(0.5 * rate);
    }
    out
}

fn rk4_run(
    h: &CMatrix,
    collapse: &[(f64, CMatrix, CMatrix)],
    rho0: &CMatrix,
    t: f64,
    steps: usize,
) -> CMatrix {
    let dt = t / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = lindblad_rhs(h, collapse, &rho);
        let k2 = lindblad_rhs(h, collapse, &(&rho + &k1 * c(dt / 2.0)));
        let k3 = lindblad_rhs(h, collapse, &(&rho + &k2 * c(dt / 2.0)));
        let k4 = lindblad_rhs(h, collapse, &(&rho + &k3 * c(dt)));
        rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(dt / 6.0);
    }
    rho
}

/// Fixed-step 4th-order integration of the Lindblad master equation
/// d rho/dt = -i[H, rho] + sum_j r_j (L rho L^dag - {L^dag L, rho}/2),
/// with the step halved until two successive refinements agree to 1e-6 in
/// trace distance.
pub fn evolve_lindblad(
    h: &Operator,
    collapse_ops: &[(f64, Operator)],
    rho0: &DensityMatrix,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    h.require_hermitian()?;
    if h.dim() != rho0.dim() {
        return Err(Error::InvalidParameter(
            "Hamiltonian and state dimensions differ".into(),
        ));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    if dt <= 0.0 || !dt.is_finite() || dt > t {
        return Err(Error::InvalidParameter(format!(
            "step dt = {} must satisfy 0 < dt <= t = {}",
            dt, t
        )));
    }
    for (rate, l) in collapse_ops {
        if *rate < 0.0 || rate.is_nan() {
            return Err(Error::InvalidParameter(
                "collapse rates must be >= 0".into(),
            ));
        }
        if l.dim() != h.dim() {
            return Err(Error::InvalidParameter(
                "collapse operator dimension mismatch".into(),
            ));
        }
    }
    let prepared: Vec<(f64, CMatrix, CMatrix)> = collapse_ops
        .iter()
        .map(|(r, l)| (*r, l.matrix.clone(), l.matrix.adjoint() * &l.matrix))
        .collect();

    let mut steps = (t / dt).ceil() as usize;
    let mut prev = rk4_run(&h.matrix, &prepared, &rho0.matrix, t, steps);
    for _ in 0..tolerances::LINDBLAD_MAX_HALVINGS {
        steps *= 2;
        let fine = rk4_run(&h.matrix, &prepared, &rho0.matrix, t, steps);
        if trace_distance(&prev, &fine) <= tolerances::LINDBLAD_CONVERGENCE {
            let rho = DensityMatrix::new(fine)?;
            rho.validate_full()?;
            return Ok(rho);
        }
        prev = fine;
    }
    Err(Error::NumericalFailure(format!(
        "Lindblad step refinement did not converge after {} halvings",
        tolerances::LINDBLAD_MAX_HALVINGS
    )))
}

/// Exact-in-time Lindblad propagator exp(L t) for systems whose Hamiltonian
/// conserves a grading (e.g. total excitation number) and whose collapse
/// operators shift it uniformly. The Liouvillian then block-diagonalizes over
/// the grade difference between row and column indices, keeping the dense
/// exponential affordable.
pub struct LindbladPropagator {
    dim: usize,
    blocks: Vec<(Vec<usize>, CMatrix)>,
}

impl LindbladPropagator {
    pub fn new(h: &CMatrix, collapse: &[(f64, CMatrix)], grades: &[i64], t: f64) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n || grades.len() != n {
            return Err(Error::InvalidParameter(
                "Hamiltonian and grading sizes differ".into(),
            ));
        }
        for r in 0..n {
            for cc in 0..n {
                if h[(r, cc)].norm() > 0.0 && grades[r] != grades[cc] {
                    return Err(Error::InvalidParameter(
                        "Hamiltonian mixes grading sectors".into(),
                    ));
                }
            }
        }
        for (_, l) in collapse {
            if l.nrows() != n || l.ncols() != n {
                return Err(Error::InvalidParameter(
                    "collapse operator dimension mismatch".into(),
                ));
            }
            let mut shift: Option<i64> = None;
            for r in 0..n {
                for cc in 0..n {
                    if l[(r, cc)].norm() > 0.0 {
                        let d = grades[r] - grades[cc];
                        match shift {
                            None => shift = Some(d),
                            Some(s) if s != d => {
                                return Err(Error::InvalidParameter(
                                    "collapse operator does not shift the grading uniformly".into(),
                                ))
                            }
                            _ => {}
                        }
                    }
                }
            }
        }

        let prepared: Vec<(f64, &CMatrix, CMatrix)> = collapse
            .iter()
            .map(|(r, l)| (*r, l, l.adjoint() * l))
            .collect();

        // group vectorized indices v = c n + r (column-major) by grade difference
        let mut groups: std::collections::BTreeMap<i64, Vec<usize>> =
            std::collections::BTreeMap::new();
        for col in 0..n {
            for row in 0..n {
                groups
                    .entry(grades[row] - grades[col])
                    .or_default()
                    .push(col * n + row);
            }
        }

        let mut blocks = Vec::with_capacity(groups.len());
        for (_, vs) in groups {
            let b = vs.len();
            let mut m = CMatrix::zeros(b, b);
            for (bj, &vin) in vs.iter().enumerate() {
                let (cp, rp) = (vin / n, vin % n);
                for (bi, &vout) in vs.iter().enumerate() {
                    let (cc, r) = (vout / n, vout % n);
                    let mut val = Complex64::new(0.0, 0.0);
                    if cc == cp {
                        val -= Complex64::new(0.0, 1.0) * h[(r, rp)];
                        for (rate, _, ldl) in &prepared {
                            val -= ldl[(r, rp)] * c(0.5 * rate);
                        }
                    }
                    if r == rp {
                        val += Complex64::new(0.0, 1.0) * h[(cp, cc)];
                        for (rate, _, ldl) in &prepared {
                            val -= ldl[(cp, cc)] * c(0.5 * rate);
                        }
                    }
                    for (rate, l, _) in &prepared {
                        val += l[(r, rp)] * l[(cc, cp)].conj() * c(*rate);
                    }
                    m[(bi, bj)] = val;
                }
            }
            let e = expm(&(m * c(t)))?;
            blocks.push((vs, e));
        }
        Ok(LindbladPropagator { dim: n, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// rho(t) = exp(L t) rho, applied blockwise.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let n = self.dim;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(Error::InvalidParameter(
                "density matrix dimension mismatch".into(),
            ));
        }
        let mut out = CMatrix::zeros(n, n);
        for (vs, m) in &self.blocks {
            let mut x = CVector::zeros(vs.len());
            for (i, &v) in vs.iter().enumerate() {
                x[i] = rho[(v % n, v / n)];
            }
            let y = m * x;
            for (i, &v) in vs.iter().enumerate() {
                out[(v % n, v / n)] = y[i];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jch_model::{
        build_sector_collapse_ops, build_sector_hamiltonian, Sector, SectorBasis, SystemParams,
    };
    use crate::operators::{fock_ladder, pauli, PauliLabel};
    use approx::assert_abs_diff_eq;

    fn maxdiff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn gate_time_examples() {
        assert_abs_diff_eq!(gate_time(1.0).unwrap(), 1.110721, epsilon = 1e-6);
        assert_abs_diff_eq!(gate_time(0.5).unwrap(), 2.221441, epsilon = 1e-6);
        assert!(gate_time(-1.0).is_err());
        assert!(gate_time(0.0).is_err());
    }

    #[test]
    fn zmul_matches_native() {
        let a = CMatrix::from_fn(7, 5, |i, j| Complex64::new(i as f64 - 2.0, j as f64 * 0.3));
        let b = CMatrix::from_fn(5, 6, |i, j| Complex64::new(0.1 * j as f64, -(i as f64)));
        assert!(maxdiff(&zmul(&a, &b), &(&a * &b)) < 1e-12);
    }

    #[test]
    fn unitary_evolution_basics() {
        let h = Operator::from_square(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.3), c(0.0), c(0.0), c(-0.7)],
        ))
        .unwrap();
        let psi = QuantumState::normalized(CVector::from_vec(vec![c(1.0), c(1.0)])).unwrap();
        let same = evolve_unitary(&h, &psi, 0.0).unwrap();
        assert!((same.overlap(&psi).norm() - 1.0).abs() < 1e-14);

        let t = 1.3;
        let out = evolve_unitary(&h, &psi, t).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((out.amplitudes[0] - Complex64::from_polar(s, -0.3 * t)).norm() < 1e-12);
        assert!((out.amplitudes[1] - Complex64::from_polar(s, 0.7 * t)).norm() < 1e-12);
    }

    #[test]
    fn unitary_group_property() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.2),
                Complex64::new(0.1, 0.4),
                c(0.0),
                Complex64::new(0.1, -0.4),
                c(-0.5),
                Complex64::new(0.0, 0.2),
                c(0.0),
                Complex64::new(0.0, -0.2),
                c(0.9),
            ],
        );
        let h = Operator::from_square(m).unwrap();
        let psi = QuantumState::basis_state(3, 1).unwrap();
        let a = evolve_unitary(&h, &evolve_unitary(&h, &psi, 0.7).unwrap(), 0.6).unwrap();
        let b = evolve_unitary(&h, &psi, 1.3).unwrap();
        assert!((a.amplitudes - b.amplitudes).norm() < 1e-12);
    }

    #[test]
    fn unitary_rejects_non_hermitian() {
        let h = Operator::from_square(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0), c(1.0), c(0.0), c(0.0)],
        ))
        .unwrap();
        let psi = QuantumState::basis_state(2, 0).unwrap();
        assert!(evolve_unitary(&h, &psi, 1.0).is_err());
    }

    #[test]
    fn expm_rotation() {
        let x = pauli(PauliLabel::X).matrix;
        for theta in [0.7, 50.0] {
            let e = expm(&(&x * Complex64::new(0.0, -theta))).unwrap();
            let want = CMatrix::from_row_slice(
                2,
                2,
                &[
                    c(theta.cos()),
                    Complex64::new(0.0, -theta.sin()),
                    Complex64::new(0.0, -theta.sin()),
                    c(theta.cos()),
                ],
            );
            assert!(maxdiff(&e, &want) < 1e-12, "theta = {}", theta);
        }
    }

    #[test]
    fn expm_zero_and_inverse() {
        let z = CMatrix::zeros(3, 3);
        assert!(maxdiff(&expm(&z).unwrap(), &CMatrix::identity(3, 3)) < 1e-14);
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.1, 0.3),
                c(1.2),
                c(-0.4),
                Complex64::new(-0.2, 0.5),
            ],
        );
        let prod = zmul(&expm(&m).unwrap(), &expm(&(-&m)).unwrap());
        assert!(maxdiff(&prod, &CMatrix::identity(2, 2)) < 1e-12);
    }

    #[test]
    fn expm_matches_unitary_propagator() {
        let p = SystemParams {
            n_sites: 2,
            n_max: 2,
            a_hop: 0.2,
            ..Default::default()
        };
        let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        let h = build_sector_hamiltonian(&p, &basis).unwrap();
        let t = 2.1;
        let via_pade = expm(&(&h * Complex64::new(0.0, -t))).unwrap();
        let via_eig = unitary_propagator(&h, t);
        assert!(maxdiff(&via_pade, &via_eig) < 1e-10);
    }

    #[test]
    fn damped_cavity_closed_form() {
        let kappa = 0.37;
        let (a, adag) = fock_ladder(1).unwrap();
        let num = &adag.matrix * &a.matrix;
        let h = Operator::from_square(CMatrix::zeros(2, 2)).unwrap();
        let rho0 = QuantumState::basis_state(2, 1).unwrap().density_matrix();
        for t in [0.5, 1.0, 2.0] {
            let rho = evolve_lindblad(&h, &[(kappa, a.clone())], &rho0, t, 0.05).unwrap();
            let n_mean = rho.expectation(&num).re;
            assert_abs_diff_eq!(n_mean, (-kappa * t).exp(), epsilon = 1e-6);
        }
    }

    #[test]
    fn damped_atom_closed_form() {
        let gamma = 0.8;
        let sm = pauli(PauliLabel::Minus);
        let h = Operator::from_square(CMatrix::zeros(2, 2)).unwrap();
        // atom basis here: index 1 = excited (occupation label)
        let rho0 = QuantumState::basis_state(2, 1).unwrap().density_matrix();
        let t = 1.3;
        let rho = evolve_lindblad(&h, &[(gamma, sm)], &rho0, t, 0.05).unwrap();
        assert_abs_diff_eq!(rho.matrix[(1, 1)].re, (-gamma * t).exp(), epsilon = 1e-6);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn lindblad_closed_system_matches_unitary() {
        let p = SystemParams {
            n_sites: 1,
            n_max: 1,
            g: 1.0,
            a_hop: 0.0,
            ..Default::default()
        };
        let h = crate::jch_model::jc_site_hamiltonian(&p).unwrap();
        let psi = QuantumState::normalized(CVector::from_vec(vec![c(0.0), c(1.0), c(1.0), c(0.0)]))
            .unwrap();
        let t = 0.9;
        let rho = evolve_lindblad(&h, &[], &psi.density_matrix(), t, 0.02).unwrap();
        let want = evolve_unitary(&h, &psi, t).unwrap().density_matrix();
        assert!(maxdiff(&rho.matrix, &want.matrix) < 1e-8);
    }

    #[test]
    fn lindblad_rejects_bad_steps() {
        let h = Operator::from_square(CMatrix::zeros(2, 2)).unwrap();
        let rho0 = QuantumState::basis_state(2, 0).unwrap().density_matrix();
        assert!(evolve_lindblad(&h, &[], &rho0, 1.0, 0.0).is_err());
        assert!(evolve_lindblad(&h, &[], &rho0, 1.0, 2.0).is_err());
        let same = evolve_lindblad(&h, &[], &rho0, 0.0, 0.1).unwrap();
        assert!(maxdiff(&same.matrix, &rho0.matrix) == 0.0);
    }

    #[test]
    fn graded_propagator_matches_rk4() {
        let p = SystemParams {
            n_sites: 1,
            n_max: 1,
            g: 1.0,
            a_hop: 0.0,
            kappa: 0.05,
            gamma: 0.02,
            ..Default::default()
        };
        let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        let h = build_sector_hamiltonian(&p, &basis).unwrap();
        let collapse = build_sector_collapse_ops(&p, &basis).unwrap();
        let grades: Vec<i64> = (0..basis.dim())
            .map(|i| basis.excitation(i) as i64)
            .collect();
        let t = 0.7;
        let prop = LindbladPropagator::new(&h, &collapse, &grades, t).unwrap();

        // superposition of |g,0> and |e,0> within the sector basis
        let i0 = basis.index_of(&[0]).unwrap();
        let ie0 = basis.index_of(&[2]).unwrap();
        let mut v = CVector::zeros(basis.dim());
        v[i0] = c(1.0 / 2f64.sqrt());
        v[ie0] = c(1.0 / 2f64.sqrt());
        let rho0 = QuantumState::new(v).unwrap().density_matrix();

        let got = prop.apply(&rho0.matrix).unwrap();

        let h_op = Operator::from_square(h.clone()).unwrap();
        let ops: Vec<(f64, Operator)> = collapse
            .iter()
            .map(|(r, l)| (*r, Operator::from_square(l.clone()).unwrap()))
            .collect();
        let want = evolve_lindblad(&h_op, &ops, &rho0, t, 0.01).unwrap();
        assert!(maxdiff(&got, &want.matrix) < 1e-6);
        assert_abs_diff_eq!(got.trace().re, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn graded_propagator_zero_rates_is_unitary() {
        let p = SystemParams {
            n_sites: 2,
            n_max: 2,
            g: 1.0,
            a_hop: 0.1,
            ..Default::default()
        };
        let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        let h = build_sector_hamiltonian(&p, &basis).unwrap();
        let grades: Vec<i64> = (0..basis.dim())
            .map(|i| basis.excitation(i) as i64)
            .collect();
        let t = 1.7;
        let prop = LindbladPropagator::new(&h, &[], &grades, t).unwrap();
        let psi = QuantumState::basis_state(basis.dim(), basis.dim() / 2).unwrap();
        let got = prop.apply(&psi.density_matrix().matrix).unwrap();
        let u = unitary_propagator(&h, t);
        let want = zmul(&zmul(&u, &psi.density_matrix().matrix), &u.adjoint());
        assert!(maxdiff(&got, &want) < 1e-9);
    }

    #[test]
    fn graded_propagator_rejects_bad_grading() {
        let p = SystemParams {
            n_sites: 1,
            n_max: 1,
            g: 1.0,
            a_hop: 0.0,
            ..Default::default()
        };
        let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        let h = build_sector_hamiltonian(&p, &basis).unwrap();
        let grades = vec![0i64; basis.dim() - 1];
        assert!(LindbladPropagator::new(&h, &[], &grades, 1.0).is_err());
        // wrong grades: H couples |g,1> and |e,0>, give them different grades
        let bad: Vec<i64> = (0..basis.dim() as i64).collect();
        assert!(LindbladPropagator::new(&h, &[], &bad, 1.0).is_err());
    }

    #[test]
    fn trace_distance_extremes() {
        let r0 = QuantumState::basis_state(2, 0).unwrap().density_matrix();
        let r1 = QuantumState::basis_state(2, 1).unwrap().density_matrix();
        assert_abs_diff_eq!(trace_distance(&r0.matrix, &r1.matrix), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_distance(&r0.matrix, &r0.matrix), 0.0, epsilon = 1e-15);
    }
}
