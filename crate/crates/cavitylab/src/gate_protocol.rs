//! The mediated two-qubit gate: three polariton qubits evolve under the XY
//! interaction for t* = pi/(2 sqrt(2) A), the middle (mediator) qubit is
//! measured, and the extremal qubits are left with SWAP.(Z Z).CP on outcome 0
//! or -SWAP.CP on outcome 1. This module provides the ideal-level gate, the
//! measurement, and end-to-end fidelity reports on the full lattice model,
//! closed or dissipative.

use crate::dynamics::{gate_time, unitary_propagator, LindbladPropagator, QuantumState};
use crate::error::{Error, Result};
use crate::jch_model::{
    build_jch_hamiltonian_with_cap, build_sector_collapse_ops, build_sector_hamiltonian, Boundary,
    Sector, SectorBasis, SystemParams,
};
use crate::polariton::{
    build_polariton_map_with_cap, effective_xy_hamiltonian, fit_effective_coupling,
    lower_polariton_energy, physical_gate_time,
};
use crate::random::rng_from_seed;
use crate::tolerances;
use crate::{c, CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateLabel {
    /// Outcome 0: SWAP.(Z tensor Z).CP.
    SwapZZCP,
    /// Outcome 1: SWAP.CP, carrying global phase -1.
    SwapCP,
}

/// End-to-end result of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolReport {
    pub outcome: u8,
    /// Unnormalized weight of the reported branch (the two branch weights sum
    /// to 1 - leakage).
    pub outcome_probability: f64,
    /// Average gate fidelity of the reconstructed extremal-qubit map against
    /// the ideal gate for this outcome.
    pub two_qubit_fidelity: f64,
    /// Population of the given input that left the polariton qubit subspace.
    pub leakage: f64,
    pub elapsed_model_time: f64,
}

/// The achieved two-qubit map, either a (possibly non-unitary) matrix acting
/// on states or a superoperator acting on column-major vectorized density
/// matrices.
#[derive(Debug, Clone)]
pub enum AchievedMap {
    Unitary(CMatrix),
    Superoperator(CMatrix),
}

fn swap_matrix() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0);
    m[(1, 2)] = c(1.0);
    m[(2, 1)] = c(1.0);
    m[(3, 3)] = c(1.0);
    m
}

fn cp_matrix() -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(1.0), c(1.0), c(-1.0)]))
}

fn zz_matrix() -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(-1.0), c(-1.0), c(1.0)]))
}

/// exp(-i H3 t*) on three qubits, H3 = A (XX + YY) on bonds (0,1) and (1,2).
/// The product A t* is fixed, so the result is independent of A.
pub fn mediated_gate_unitary(a_coeff: f64) -> Result<crate::operators::Operator> {
    let t = gate_time(a_coeff)?;
    let h = effective_xy_hamiltonian(a_coeff, 3, Boundary::Open)?;
    let u = unitary_propagator(&h.matrix, t);
    crate::operators::Operator::new(u, vec![2, 2, 2])
}

/// Ideal extremal-qubit gate for a mediator measurement outcome, with its
/// explicit global phase.
pub fn classify_two_qubit_action(outcome: u8) -> Result<(GateLabel, CMatrix)> {
    match outcome {
        0 => Ok((
            GateLabel::SwapZZCP,
            swap_matrix() * zz_matrix() * cp_matrix(),
        )),
        1 => Ok((GateLabel::SwapCP, swap_matrix() * cp_matrix() * c(-1.0))),
        _ => Err(Error::InvalidParameter(format!(
            "measurement outcome must be 0 or 1, got {}",
            outcome
        ))),
    }
}

fn mediator_bit(index: usize) -> usize {
    (index >> 1) & 1
}

fn project_mediator(psi: &QuantumState, outcome: u8) -> Result<(QuantumState, f64)> {
    if psi.dim() != 8 {
        return Err(Error::InvalidParameter(
            "mediator measurement expects a 3-qubit state".into(),
        ));
    }
    let mut v = psi.amplitudes.clone();
    let mut p = 0.0;
    for i in 0..8 {
        if mediator_bit(i) == outcome as usize {
            p += v[i].norm_sqr();
        } else {
            v[i] = c(0.0);
        }
    }
    if p < tolerances::BRANCH_FLOOR {
        return Err(Error::DegenerateBranch(format!(
            "branch for outcome {} has weight {:.3e}",
            outcome, p
        )));
    }
    Ok((QuantumState::normalized(v)?, p))
}

/// Born-rule measurement of the middle qubit in the sigma^z basis with a
/// seeded generator.
pub fn measure_mediator(psi: &QuantumState, seed: u64) -> Result<(u8, QuantumState, f64)> {
    if psi.dim() != 8 {
        return Err(Error::InvalidParameter(
            "mediator measurement expects a 3-qubit state".into(),
        ));
    }
    let p0: f64 = (0..8)
        .filter(|&i| mediator_bit(i) == 0)
        .map(|i| psi.amplitudes[i].norm_sqr())
        .sum();
    let mut rng = rng_from_seed(seed);
    let u: f64 = rng.gen();
    let outcome = if u < p0 { 0u8 } else { 1u8 };
    let (post, p) = project_mediator(psi, outcome)?;
    Ok((outcome, post, p))
}

/// Post-selected variant: projects onto the requested outcome, failing if
/// that branch is (numerically) empty.
pub fn measure_mediator_forced(psi: &QuantumState, outcome: u8) -> Result<(QuantumState, f64)> {
    if outcome > 1 {
        return Err(Error::InvalidParameter("outcome must be 0 or 1".into()));
    }
    project_mediator(psi, outcome)
}

/// Average gate fidelity F = (|tr(U^dag M)|^2 + d)/(d^2 + d) for matrices,
/// extended to channels via the action on the matrix-unit basis:
/// F_pro = (1/d^2) sum_ij <g_i| C(E_ij) |g_j>, F = (d F_pro + 1)/(d + 1).
pub fn average_gate_fidelity(achieved: &AchievedMap, ideal: &CMatrix) -> Result<f64> {
    let d = ideal.nrows();
    if ideal.ncols() != d {
        return Err(Error::InvalidParameter("ideal gate must be square".into()));
    }
    let unit_res = (ideal.adjoint() * ideal - CMatrix::identity(d, d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if unit_res > tolerances::UNITARITY {
        return Err(Error::InvalidParameter(format!(
            "ideal gate is not unitary, residual {:.3e}",
            unit_res
        )));
    }
    let f = match achieved {
        AchievedMap::Unitary(m) => {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::InvalidParameter(
                    "achieved map dimension mismatch".into(),
                ));
            }
            let tr = (ideal.adjoint() * m).trace();
            (tr.norm_sqr() + d as f64) / ((d * d + d) as f64)
        }
        AchievedMap::Superoperator(s) => {
            if s.nrows() != d * d || s.ncols() != d * d {
                return Err(Error::InvalidParameter(format!(
                    "superoperator must be {0}x{0}",
                    d * d
                )));
            }
            let mut f_pro = 0.0;
            for i in 0..d {
                let gi = ideal.column(i);
                for j in 0..d {
                    let gj = ideal.column(j);
                    // C(E_ij) is column j*d + i of S, un-vectorized
                    let col = s.column(j * d + i);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for cc in 0..d {
                        for r in 0..d {
                            acc += gi[r].conj() * col[cc * d + r] * gj[cc];
                        }
                    }
                    f_pro += acc.re;
                }
            }
            f_pro /= (d * d) as f64;
            (d as f64 * f_pro + 1.0) / (d as f64 + 1.0)
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

fn logical_index(q0: usize, mediator: usize, q2: usize) -> usize {
    (q0 << 2) | (mediator << 1) | q2
}

/// Checks shared by both full-stack paths; returns the gate duration and the
/// per-outcome ideal gates (identity when A = 0, where nothing evolves).
fn protocol_setup(params: &SystemParams) -> Result<(f64, [CMatrix; 2])> {
    params.validate()?;
    if params.n_sites != 3 {
        return Err(Error::InvalidParameter(
            "the mediated gate runs on a chain of exactly 3 sites".into(),
        ));
    }
    if !params.is_resonant() {
        return Err(Error::UnsupportedConfiguration(
            "the protocol requires resonance".into(),
        ));
    }
    if params.a_hop == 0.0 {
        let id = CMatrix::identity(4, 4);
        return Ok((0.0, [id.clone(), id]));
    }
    let coupling = fit_effective_coupling(params)?;
    let t = physical_gate_time(&coupling)?;
    Ok((
        t,
        [
            classify_two_qubit_action(0)?.1,
            classify_two_qubit_action(1)?.1,
        ],
    ))
}

/// Phase-undo diagonal: the XY picture is the interaction picture with
/// respect to the free lower-polariton energy, so each logical component
/// with m excited qubits accumulates exp(-i E_lp m t) that must be removed
/// before comparing with ideal gates.
fn phase_undo_diagonal(params: &SystemParams, t: f64, dim_qubits: usize) -> CVector {
    let e_lp = lower_polariton_energy(params);
    CVector::from_fn(1 << dim_qubits, |l, _| {
        let m = (l as u64).count_ones() as f64;
        Complex64::from_polar(1.0, e_lp * m * t)
    })
}

fn pick_outcome(forced: Option<u8>, p0: f64, p1: f64, seed: u64) -> Result<(u8, f64)> {
    match forced {
        Some(o) => {
            if o > 1 {
                return Err(Error::InvalidParameter(
                    "forced outcome must be 0 or 1".into(),
                ));
            }
            let p = if o == 0 { p0 } else { p1 };
            if p < tolerances::BRANCH_FLOOR {
                return Err(Error::DegenerateBranch(format!(
                    "forced branch {} has weight {:.3e}",
                    o, p
                )));
            }
            Ok((o, p))
        }
        None => {
            let total = p0 + p1;
            if total < tolerances::BRANCH_FLOOR {
                return Err(Error::DegenerateBranch(
                    "all measurement branches are empty".into(),
                ));
            }
            let mut rng = rng_from_seed(seed);
            let u: f64 = rng.gen();
            if u < p0 / total {
                Ok((0, p0))
            } else {
                Ok((1, p1))
            }
        }
    }
}

/// Runs the protocol on the full lattice model. Dispatches to the Lindblad
/// engine when either decay rate is nonzero.
pub fn full_stack_gate(
    params: &SystemParams,
    input: &QuantumState,
    forced_outcome: Option<u8>,
    seed: u64,
) -> Result<ProtocolReport> {
    full_stack_gate_with_cap(
        params,
        input,
        forced_outcome,
        seed,
        tolerances::DEFAULT_DIM_CAP,
    )
}

pub fn full_stack_gate_with_cap(
    params: &SystemParams,
    input: &QuantumState,
    forced_outcome: Option<u8>,
    seed: u64,
    cap: usize,
) -> Result<ProtocolReport> {
    if params.kappa > 0.0 || params.gamma > 0.0 {
        return full_stack_gate_via_lindblad_with_cap(params, input, forced_outcome, seed, cap);
    }
    let (t, ideals) = protocol_setup(params)?;
    if input.dim() != 8 {
        return Err(Error::InvalidParameter(
            "logical input must live on 3 qubits".into(),
        ));
    }
    let map = build_polariton_map_with_cap(params, cap)?;
    let h = build_jch_hamiltonian_with_cap(params, cap)?;
    let u_full = unitary_propagator(&h.matrix, t);

    // W = D V^dag U V: the full protocol collapsed onto the logical register
    let projected = map.isometry.adjoint() * &u_full * &map.isometry;
    let d_undo = phase_undo_diagonal(params, t, 3);
    let mut w = projected;
    for r in 0..8 {
        for cc in 0..8 {
            w[(r, cc)] *= d_undo[r];
        }
    }

    let phi = &w * &input.amplitudes;
    let leakage = (1.0 - phi.norm_squared()).clamp(0.0f64, 1.0);
    let p0: f64 = (0..8)
        .filter(|&i| mediator_bit(i) == 0)
        .map(|i| phi[i].norm_sqr())
        .sum();
    let p1: f64 = (0..8)
        .filter(|&i| mediator_bit(i) == 1)
        .map(|i| phi[i].norm_sqr())
        .sum();
    let (outcome, p_out) = pick_outcome(forced_outcome, p0, p1, seed)?;

    // extremal 4x4 branch map: mediator in |0>, mediator out |outcome>
    let mut k = CMatrix::zeros(4, 4);
    for col in 0..4 {
        let (c0, c1) = (col >> 1, col & 1);
        let in_idx = logical_index(c0, 0, c1);
        for row in 0..4 {
            let (r0, r1) = (row >> 1, row & 1);
            let out_idx = logical_index(r0, outcome as usize, r1);
            k[(row, col)] = w[(out_idx, in_idx)];
        }
    }
    let fidelity = average_gate_fidelity(&AchievedMap::Unitary(k), &ideals[outcome as usize])?;
    Ok(ProtocolReport {
        outcome,
        outcome_probability: p_out,
        two_qubit_fidelity: fidelity,
        leakage,
        elapsed_model_time: t,
    })
}

/// Shared state of the dissipative engine: sector objects, the logical
/// embedding, and the (already exponentiated) Liouvillian propagator.
struct DissipativeEngine {
    t: f64,
    ideals: [CMatrix; 2],
    v_logical: CMatrix,
    d_undo: CVector,
    prop: LindbladPropagator,
}

impl DissipativeEngine {
    fn new(params: &SystemParams, max_exc: usize, cap: usize) -> Result<Self> {
        let (t, ideals) = protocol_setup(params)?;
        let basis = SectorBasis::new(params, Sector::ExcitationAtMost(max_exc))?;
        let dim = basis.dim();
        if dim * dim > cap {
            return Err(Error::ResourceLimit(format!(
                "superoperator dimension {} exceeds cap {}",
                dim * dim,
                cap
            )));
        }
        let h = build_sector_hamiltonian(params, &basis)?;
        let collapse = build_sector_collapse_ops(params, &basis)?;
        let grades: Vec<i64> = (0..dim).map(|i| basis.excitation(i) as i64).collect();
        let prop = LindbladPropagator::new(&h, &collapse, &grades, t)?;

        // logical register embedded in sector coordinates
        let s = 1.0 / 2f64.sqrt();
        let mut v_logical = CMatrix::zeros(dim, 8);
        for l in 0..8usize {
            for i in 0..dim {
                let mut amp = 1.0;
                for site in 0..3 {
                    let (atom, n) = basis.site_state(i, site);
                    let bit = (l >> (2 - site)) & 1;
                    let factor = if bit == 0 {
                        if atom == 0 && n == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else if atom == 0 && n == 1 {
                        s
                    } else if atom == 1 && n == 0 {
                        -s
                    } else {
                        0.0
                    };
                    amp *= factor;
                    if amp == 0.0 {
                        break;
                    }
                }
                if amp != 0.0 {
                    v_logical[(i, l)] = c(amp);
                }
            }
        }
        let d_undo = phase_undo_diagonal(params, t, 3);
        Ok(DissipativeEngine {
            t,
            ideals,
            v_logical,
            d_undo,
            prop,
        })
    }

    /// Propagates a logical density matrix and returns the phase-undone
    /// logical block plus the leaked weight.
    fn evolve_logical(&self, rho_logical: &CMatrix) -> Result<(CMatrix, f64)> {
        let rho0 = &self.v_logical * rho_logical * self.v_logical.adjoint();
        let rho_t = self.prop.apply(&rho0)?;
        let mut x = self.v_logical.adjoint() * rho_t * &self.v_logical;
        let captured = x.trace().re;
        for r in 0..8 {
            for cc in 0..8 {
                x[(r, cc)] *= self.d_undo[r] * self.d_undo[cc].conj();
            }
        }
        Ok((x, captured))
    }

    /// Tomographic reconstruction of the extremal-qubit channel for one
    /// outcome: 16 matrix-unit inputs with the mediator prepared in |0>.
    fn branch_superoperator(&self, outcome: u8) -> Result<CMatrix> {
        let mut s = CMatrix::zeros(16, 16);
        for j in 0..4usize {
            let (j0, j1) = (j >> 1, j & 1);
            let col_j = logical_index(j0, 0, j1);
            for i in 0..4usize {
                let (i0, i1) = (i >> 1, i & 1);
                let row_i = logical_index(i0, 0, i1);
                let mut e = CMatrix::zeros(8, 8);
                e[(row_i, col_j)] = c(1.0);
                let (x, _) = self.evolve_logical(&e)?;
                for r in 0..4usize {
                    let (r0, r1) = (r >> 1, r & 1);
                    let xr = logical_index(r0, outcome as usize, r1);
                    for cc in 0..4usize {
                        let (c0, c1) = (cc >> 1, cc & 1);
                        let xc = logical_index(c0, outcome as usize, c1);
                        s[(cc * 4 + r, j * 4 + i)] = x[(xr, xc)];
                    }
                }
            }
        }
        Ok(s)
    }

    fn branch_weights(&self, x: &CMatrix) -> (f64, f64) {
        let mut p = [0.0f64; 2];
        for i in 0..8 {
            p[mediator_bit(i)] += x[(i, i)].re;
        }
        (p[0].max(0.0), p[1].max(0.0))
    }
}

/// Runs the protocol with Lindblad dynamics in the excitation-sector
/// representation, even when the rates are zero (useful for cross-checks).
pub fn full_stack_gate_via_lindblad(
    params: &SystemParams,
    input: &QuantumState,
    forced_outcome: Option<u8>,
    seed: u64,
) -> Result<ProtocolReport> {
    full_stack_gate_via_lindblad_with_cap(
        params,
        input,
        forced_outcome,
        seed,
        tolerances::DEFAULT_DIM_CAP,
    )
}

pub fn full_stack_gate_via_lindblad_with_cap(
    params: &SystemParams,
    input: &QuantumState,
    forced_outcome: Option<u8>,
    seed: u64,
    cap: usize,
) -> Result<ProtocolReport> {
    if input.dim() != 8 {
        return Err(Error::InvalidParameter(
            "logical input must live on 3 qubits".into(),
        ));
    }
    let input_exc = (0..8)
        .filter(|&l| input.amplitudes[l].norm() > 0.0)
        .map(|l| (l as u32).count_ones() as usize)
        .max()
        .unwrap_or(0);
    let engine = DissipativeEngine::new(params, input_exc.max(2), cap)?;

    let rho_in = &input.amplitudes * input.amplitudes.adjoint();
    let (x, captured) = engine.evolve_logical(&rho_in)?;
    let leakage = (1.0 - captured).clamp(0.0, 1.0);
    let (p0, p1) = engine.branch_weights(&x);
    let (outcome, p_out) = pick_outcome(forced_outcome, p0, p1, seed)?;

    let s = engine.branch_superoperator(outcome)?;
    let fidelity = average_gate_fidelity(
        &AchievedMap::Superoperator(s),
        &engine.ideals[outcome as usize],
    )?;
    Ok(ProtocolReport {
        outcome,
        outcome_probability: p_out,
        two_qubit_fidelity: fidelity,
        leakage,
        elapsed_model_time: engine.t,
    })
}

/// Average gate fidelity of the mediator-`outcome` branch channel alone,
/// without reference to a particular input state. This is what noise sweeps
/// report.
pub fn dissipative_channel_fidelity(params: &SystemParams, outcome: u8) -> Result<f64> {
    dissipative_channel_fidelity_with_cap(params, outcome, tolerances::DEFAULT_DIM_CAP)
}

pub fn dissipative_channel_fidelity_with_cap(
    params: &SystemParams,
    outcome: u8,
    cap: usize,
) -> Result<f64> {
    if outcome > 1 {
        return Err(Error::InvalidParameter("outcome must be 0 or 1".into()));
    }
    let engine = DissipativeEngine::new(params, 2, cap)?;
    let s = engine.branch_superoperator(outcome)?;
    average_gate_fidelity(
        &AchievedMap::Superoperator(s),
        &engine.ideals[outcome as usize],
    )
}

/// Survival probability of a single lower polariton under cavity and atom
/// decay: <1-| rho(t) |1-> for one site prepared in |1->. The analytic
/// estimate is exp(-(kappa + gamma) t / 2).
pub fn polariton_survival(params: &SystemParams, t: f64) -> Result<f64> {
    params.validate()?;
    if !params.is_resonant() {
        return Err(Error::UnsupportedConfiguration(
            "polariton survival requires resonance".into(),
        ));
    }
    let single = SystemParams {
        n_sites: 1,
        boundary: Boundary::Open,
        a_hop: 0.0,
        ..*params
    };
    let basis = SectorBasis::new(&single, Sector::ExcitationAtMost(1))?;
    let h = build_sector_hamiltonian(&single, &basis)?;
    let collapse = build_sector_collapse_ops(&single, &basis)?;
    let grades: Vec<i64> = (0..basis.dim())
        .map(|i| basis.excitation(i) as i64)
        .collect();
    let prop = LindbladPropagator::new(&h, &collapse, &grades, t)?;

    let s = 1.0 / 2f64.sqrt();
    let mut lp = CVector::zeros(basis.dim());
    lp[basis.index_of(&[1]).unwrap()] = c(s);
    lp[basis.index_of(&[(params.n_max + 1) as u8]).unwrap()] = c(-s);
    let rho0 = &lp * lp.adjoint();
    let rho_t = prop.apply(&rho0)?;
    Ok((lp.adjoint() * rho_t * &lp)[(0, 0)].re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn maxdiff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn gate_params(g_over_a: f64) -> SystemParams {
        SystemParams {
            n_sites: 3,
            g: 1.0,
            a_hop: 1.0 / g_over_a,
            n_max: 2,
            ..Default::default()
        }
    }

    #[test]
    fn mediated_gate_identities() {
        let u = mediated_gate_unitary(0.37).unwrap().matrix;
        // (input, output, amplitude)
        let table = [
            (0b000, 0b000, 1.0),
            (0b001, 0b100, -1.0),
            (0b100, 0b001, -1.0),
            (0b101, 0b101, -1.0),
            (0b010, 0b010, -1.0),
            (0b110, 0b011, -1.0),
            (0b011, 0b110, -1.0),
            (0b111, 0b111, 1.0),
        ];
        for (input, output, amp) in table {
            for r in 0..8 {
                let want = if r == output { c(amp) } else { c(0.0) };
                assert!(
                    (u[(r, input)] - want).norm() < 1e-10,
                    "U|{:03b}> component {:03b}",
                    input,
                    r
                );
            }
        }
    }

    #[test]
    fn mediated_gate_independent_of_coupling() {
        let a = mediated_gate_unitary(0.01).unwrap().matrix;
        let b = mediated_gate_unitary(3.7).unwrap().matrix;
        assert!(maxdiff(&a, &b) < 1e-10);
        assert!(mediated_gate_unitary(0.0).is_err());
    }

    #[test]
    fn mediated_gate_block_diagonal_in_mediator() {
        let u = mediated_gate_unitary(1.0).unwrap();
        for r in 0..8 {
            for cc in 0..8 {
                if mediator_bit(r) != mediator_bit(cc) {
                    assert!(u.matrix[(r, cc)].norm() < 1e-12);
                }
            }
        }
        let uni = (u.matrix.adjoint() * &u.matrix - CMatrix::identity(8, 8))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(uni < 1e-12);
    }

    #[test]
    fn mediated_gate_squares_to_identity_on_extremals() {
        let u = mediated_gate_unitary(1.0).unwrap().matrix;
        let u2 = &u * &u;
        // applying the native gate twice (mediator reset between uses is a
        // no-op here since the mediator bit is conserved) restores the
        // extremal qubits up to global phase
        for block in 0..2usize {
            let mut k = CMatrix::zeros(4, 4);
            for row in 0..4 {
                for col in 0..4 {
                    let ri = logical_index(row >> 1, block, row & 1);
                    let ci = logical_index(col >> 1, block, col & 1);
                    k[(row, col)] = u2[(ri, ci)];
                }
            }
            let phase = k[(0, 0)];
            assert!((phase.norm() - 1.0).abs() < 1e-10);
            assert!(maxdiff(&k, &(CMatrix::identity(4, 4) * phase)) < 1e-10);
        }
    }

    #[test]
    fn classification_tables() {
        let (label0, g0) = classify_two_qubit_action(0).unwrap();
        assert_eq!(label0, GateLabel::SwapZZCP);
        let want0 = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
            ],
        );
        assert!(maxdiff(&g0, &want0) < 1e-15);

        let (label1, g1) = classify_two_qubit_action(1).unwrap();
        assert_eq!(label1, GateLabel::SwapCP);
        let want1 = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(-1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0),
            ],
        );
        assert!(maxdiff(&g1, &want1) < 1e-15);
        assert!(classify_two_qubit_action(2).is_err());
    }

    #[test]
    fn zz_correction_unifies_branches() {
        let (_, g0) = classify_two_qubit_action(0).unwrap();
        let (_, g1) = classify_two_qubit_action(1).unwrap();
        let corrected = zz_matrix() * &g0;
        let swap_cp = swap_matrix() * cp_matrix();
        assert!(maxdiff(&corrected, &swap_cp) < 1e-15);
        // g1 equals swap_cp up to its global phase -1
        assert!(maxdiff(&(g1 * c(-1.0)), &swap_cp) < 1e-15);
    }

    #[test]
    fn classification_matches_mediated_unitary_blocks() {
        let u = mediated_gate_unitary(1.0).unwrap().matrix;
        for outcome in 0..2u8 {
            let (_, ideal) = classify_two_qubit_action(outcome).unwrap();
            let mut k = CMatrix::zeros(4, 4);
            for row in 0..4 {
                for col in 0..4 {
                    let ri = logical_index(row >> 1, outcome as usize, row & 1);
                    let ci = logical_index(col >> 1, outcome as usize, col & 1);
                    k[(row, col)] = u[(ri, ci)];
                }
            }
            assert!(
                maxdiff(&k, &ideal) < 1e-10,
                "mediator-{} block must match the classified gate",
                outcome
            );
        }
    }

    #[test]
    fn measurement_deterministic_on_product_zero() {
        let psi = QuantumState::basis_state(8, 0b101).unwrap();
        let (outcome, post, p) = measure_mediator(&psi, 5).unwrap();
        assert_eq!(outcome, 0);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert!((post.overlap(&psi).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measurement_born_probabilities() {
        // mediator in alpha|0> + beta|1>, extremal states arbitrary
        let mut rng = rng_from_seed(11);
        for trial in 0..10 {
            let alpha: f64 = 0.05 + 0.9 * (trial as f64 / 9.0);
            let beta = (1.0 - alpha * alpha).sqrt();
            let e0: usize = rng.gen_range(0..2);
            let e1: usize = rng.gen_range(0..2);
            let mut v = CVector::zeros(8);
            v[logical_index(e0, 0, e1)] = c(alpha);
            v[logical_index(e0, 1, e1)] = Complex64::from_polar(beta, 1.3 * trial as f64);
            let psi = QuantumState::new(v).unwrap();
            let (post0, p0) = measure_mediator_forced(&psi, 0).unwrap();
            assert_abs_diff_eq!(p0, alpha * alpha, epsilon = 1e-12);
            assert_abs_diff_eq!(post0.norm(), 1.0, epsilon = 1e-12);
            let (_, p1) = measure_mediator_forced(&psi, 1).unwrap();
            assert_abs_diff_eq!(p0 + p1, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn measurement_degenerate_branch() {
        let psi = QuantumState::basis_state(8, 0b000).unwrap();
        assert!(matches!(
            measure_mediator_forced(&psi, 1),
            Err(Error::DegenerateBranch(_))
        ));
    }

    #[test]
    fn fidelity_formula_cases() {
        let id = CMatrix::identity(4, 4);
        let f = average_gate_fidelity(&AchievedMap::Unitary(id.clone()), &id).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-14);

        // d = 2 sanity: F(Z vs I) = 1/3
        let z = crate::operators::pauli(crate::operators::PauliLabel::Z).matrix;
        let f = average_gate_fidelity(&AchievedMap::Unitary(z), &CMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(f, 1.0 / 3.0, epsilon = 1e-14);

        // global phase invariance
        let (_, g0) = classify_two_qubit_action(0).unwrap();
        let phased = &g0 * Complex64::from_polar(1.0, 0.83);
        let f = average_gate_fidelity(&AchievedMap::Unitary(phased), &g0).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_superoperator_consistent_with_unitary() {
        let mut rng = rng_from_seed(3);
        let m = crate::random::haar_random_unitary(4, &mut rng);
        let ideal = classify_two_qubit_action(0).unwrap().1;
        // superoperator of rho -> M rho M^dag
        let mut s = CMatrix::zeros(16, 16);
        for i in 0..4 {
            for j in 0..4 {
                let mut e = CMatrix::zeros(4, 4);
                e[(i, j)] = c(1.0);
                let out = &m * e * m.adjoint();
                for r in 0..4 {
                    for cc in 0..4 {
                        s[(cc * 4 + r, j * 4 + i)] = out[(r, cc)];
                    }
                }
            }
        }
        let f_chan = average_gate_fidelity(&AchievedMap::Superoperator(s), &ideal).unwrap();
        let f_unit = average_gate_fidelity(&AchievedMap::Unitary(m), &ideal).unwrap();
        assert_abs_diff_eq!(f_chan, f_unit, epsilon = 1e-12);
    }

    #[test]
    fn full_stack_trivial_at_zero_hopping() {
        let p = SystemParams {
            n_sites: 3,
            a_hop: 0.0,
            ..Default::default()
        };
        let input = QuantumState::basis_state(8, 0b101).unwrap();
        let rep = full_stack_gate(&p, &input, None, 17).unwrap();
        assert_eq!(rep.outcome, 0);
        assert_abs_diff_eq!(rep.two_qubit_fidelity, 1.0, epsilon = 1e-12);
        assert!(rep.leakage < 1e-12);
        assert_eq!(rep.elapsed_model_time, 0.0);
        // outcome 1 is empty here
        assert!(matches!(
            full_stack_gate(&p, &input, Some(1), 17),
            Err(Error::DegenerateBranch(_))
        ));
    }

    #[test]
    fn full_stack_high_fidelity_at_strong_blockade() {
        let p = gate_params(100.0);
        let mut v = CVector::zeros(8);
        // extremal |+>|+> with mediator |0>
        for (e0, e1) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            v[logical_index(e0, 0, e1)] = c(0.5);
        }
        let input = QuantumState::new(v).unwrap();
        let rep = full_stack_gate(&p, &input, Some(0), 0).unwrap();
        assert!(
            rep.two_qubit_fidelity >= 0.99,
            "F = {}",
            rep.two_qubit_fidelity
        );
        assert!(rep.leakage <= 0.01, "leakage = {}", rep.leakage);
        assert!(rep.outcome_probability > 0.99);

        let weaker = full_stack_gate(&gate_params(10.0), &input, Some(0), 0).unwrap();
        assert!(weaker.two_qubit_fidelity < rep.two_qubit_fidelity);
    }

    #[test]
    fn lindblad_zero_rates_matches_unitary_path() {
        let p = gate_params(100.0);
        let input = QuantumState::basis_state(8, 0b100).unwrap();
        let unitary = full_stack_gate(&p, &input, Some(0), 0).unwrap();
        let lind = full_stack_gate_via_lindblad(&p, &input, Some(0), 0).unwrap();
        assert_abs_diff_eq!(
            lind.two_qubit_fidelity,
            unitary.two_qubit_fidelity,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(lind.leakage, unitary.leakage, epsilon = 1e-6);
        assert_abs_diff_eq!(
            lind.outcome_probability,
            unitary.outcome_probability,
            epsilon = 1e-6
        );
    }

    #[test]
    fn dissipation_lowers_fidelity() {
        let clean = dissipative_channel_fidelity(&gate_params(100.0), 0).unwrap();
        let noisy_params = SystemParams {
            kappa: 5e-4,
            gamma: 1e-3,
            ..gate_params(100.0)
        };
        let noisy = dissipative_channel_fidelity(&noisy_params, 0).unwrap();
        assert!(noisy < clean, "noisy {} vs clean {}", noisy, clean);
        assert!(clean > 0.99);
    }

    #[test]
    fn survival_analytic_estimate() {
        let p = SystemParams {
            n_sites: 1,
            g: 1.0,
            a_hop: 0.0,
            n_max: 2,
            kappa: 1e-3,
            gamma: 1e-3,
            ..Default::default()
        };
        let t = 1000.0;
        let s = polariton_survival(&p, t).unwrap();
        let analytic = (-(p.kappa + p.gamma) * t / 2.0).exp();
        // equal rates make the lower polariton an exact eigenmode of the
        // decay, so agreement is much better than the +-0.05 budget
        assert_abs_diff_eq!(s, analytic, epsilon = 1e-8);
    }

    #[test]
    fn survival_unequal_rates_within_budget() {
        let p = SystemParams {
            n_sites: 1,
            g: 1.0,
            a_hop: 0.0,
            n_max: 2,
            kappa: 1.5e-3,
            gamma: 0.5e-3,
            ..Default::default()
        };
        let t = 1000.0;
        let s = polariton_survival(&p, t).unwrap();
        let analytic = (-(p.kappa + p.gamma) * t / 2.0).exp();
        assert!(
            (s - analytic).abs() < 0.05,
            "s = {}, analytic = {}",
            s,
            analytic
        );
    }
}
