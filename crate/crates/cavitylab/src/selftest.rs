//! Built-in verification battery. Each check exercises one advertised
//! guarantee of the library end to end and reports a pass/fail line with
//! the measured numbers; the final check replays the whole battery and
//! compares the rendered reports byte for byte.

use nalgebra::SymmetricEigen;

use crate::compiler::{
    branch_overlap, compile, extract_logical_state, ideal_circuit_unitary, simulate_schedule,
    Circuit, Gate, Layout, OutcomePolicy,
};
use crate::compiler::{controlled_u_phase, decompose_controlled_u, reconstruct_controlled_u};
use crate::dynamics::{evolve_lindblad, QuantumState};
use crate::gate_protocol::{
    classify_two_qubit_action, dissipative_channel_fidelity, full_stack_gate,
    full_stack_gate_via_lindblad, mediated_gate_unitary, polariton_survival,
};
use crate::jch_model::{
    bloch_transform, build_sector_hamiltonian, dispersion, jc_single_site_spectrum, Boundary,
    Sector, SectorBasis, SystemParams,
};
use crate::operators::{fock_ladder, Operator};
use crate::polariton::{fit_effective_coupling, reduction_gate_time, reduction_infidelity};
use crate::random::{haar_random_u2, haar_random_unitary, rng_from_seed};
use crate::{c, ci, CMatrix, CVector, Result};

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

fn report(id: usize, name: &'static str, passed: bool, details: String) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed,
        details,
    }
}

fn failure(id: usize, name: &'static str, err: &crate::Error) -> CriterionReport {
    report(id, name, false, format!("error: {err}"))
}

/// Runs every criterion, then replays the battery with the same seed and
/// checks that the rendered report is byte-identical.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    let first = run_battery(seed);
    let second = run_battery(seed);
    let identical = render_report(&first) == render_report(&second);
    let mut reports = first;
    reports.push(report(
        12,
        "deterministic replay",
        identical,
        if identical {
            "two seeded runs rendered identically".into()
        } else {
            "seeded runs differ".into()
        },
    ));
    reports
}

/// One line per criterion, stable formatting.
pub fn render_report(reports: &[CriterionReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "criterion {:02} {} {}: {}\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.details
        ));
    }
    out
}

fn run_battery(seed: u64) -> Vec<CriterionReport> {
    vec![
        criterion_native_gate_action(),
        criterion_polariton_spectrum(),
        criterion_dispersion(),
        criterion_gate_classification(),
        criterion_effective_coupling(),
        criterion_reduction_scaling(),
        criterion_full_stack_gate(),
        criterion_dissipative_regime(),
        criterion_lindblad_decay(),
        criterion_controlled_u_round_trip(seed),
        criterion_compiler_end_to_end(seed),
    ]
}

/// 1: the mediated gate maps the eight three-qubit basis states exactly as
/// advertised.
fn criterion_native_gate_action() -> CriterionReport {
    const ID: usize = 1;
    const NAME: &str = "native gate basis action";
    let u = match mediated_gate_unitary(1.0) {
        Ok(op) => op.matrix,
        Err(e) => return failure(ID, NAME, &e),
    };
    let table: [(usize, usize, f64); 8] = [
        (0b000, 0b000, 1.0),
        (0b001, 0b100, -1.0),
        (0b100, 0b001, -1.0),
        (0b101, 0b101, -1.0),
        (0b010, 0b010, -1.0),
        (0b110, 0b011, -1.0),
        (0b011, 0b110, -1.0),
        (0b111, 0b111, 1.0),
    ];
    let mut worst = 0.0f64;
    for (input, output, sign) in table {
        for row in 0..8 {
            let expected = if row == output { c(sign) } else { c(0.0) };
            worst = worst.max((u[(row, input)] - expected).norm());
        }
    }
    report(
        ID,
        NAME,
        worst <= 1e-10,
        format!("worst basis-map error {worst:.12e} (tolerance 1e-10)"),
    )
}

/// 2: resonant single-site spectrum shows the n omega_d +/- g sqrt(n)
/// polariton pairs.
fn criterion_polariton_spectrum() -> CriterionReport {
    const ID: usize = 2;
    const NAME: &str = "single-site polariton spectrum";
    let params = SystemParams {
        n_sites: 1,
        omega_d: 1.0,
        omega_0: 1.0,
        g: 0.1,
        a_hop: 0.0,
        n_max: 2,
        ..SystemParams::default()
    };
    let spectrum = match jc_single_site_spectrum(&params) {
        Ok(s) => s,
        Err(e) => return failure(ID, NAME, &e),
    };
    let mut worst = 0.0f64;
    for n in 1..=2u32 {
        for sign in [-1.0, 1.0] {
            let target = n as f64 * params.omega_d + sign * params.g * (n as f64).sqrt();
            let nearest = spectrum
                .iter()
                .map(|(e, _)| (e - target).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    report(
        ID,
        NAME,
        worst <= 1e-10,
        format!("worst eigenvalue error {worst:.12e} (tolerance 1e-10)"),
    )
}

/// 3: decoupled one-photon band reproduces the cosine dispersion; the
/// Bloch transform is unitary.
fn criterion_dispersion() -> CriterionReport {
    const ID: usize = 3;
    const NAME: &str = "one-photon dispersion";
    let params = SystemParams {
        n_sites: 8,
        omega_d: 1.0,
        omega_0: 1.0,
        g: 0.0,
        a_hop: 0.01,
        n_max: 1,
        boundary: Boundary::Periodic,
        ..SystemParams::default()
    };
    let run = || -> Result<(f64, f64)> {
        let basis = SectorBasis::new(&params, Sector::OnePhotonAtomsGround)?;
        let h = build_sector_hamiltonian(&params, &basis)?;
        let mut eigen: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        let mut targets: Vec<f64> = (0..params.n_sites)
            .map(|k| dispersion(k, &params))
            .collect::<Result<_>>()?;
        eigen.sort_by(f64::total_cmp);
        targets.sort_by(f64::total_cmp);
        let band = eigen
            .iter()
            .zip(&targets)
            .map(|(e, t)| (e - t).abs())
            .fold(0.0, f64::max);

        let u = bloch_transform(params.n_sites)?.matrix;
        let gram = u.adjoint() * &u;
        let mut residual = 0.0f64;
        for r in 0..params.n_sites {
            for col in 0..params.n_sites {
                let expected = if r == col { c(1.0) } else { c(0.0) };
                residual = residual.max((gram[(r, col)] - expected).norm());
            }
        }
        Ok((band, residual))
    };
    match run() {
        Ok((band, residual)) => report(
            ID,
            NAME,
            band <= 1e-10 && residual <= 1e-12,
            format!(
                "band error {band:.12e} (tolerance 1e-10), Bloch unitarity residual \
                 {residual:.12e} (tolerance 1e-12)"
            ),
        ),
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 4: measurement outcomes 0/1 act as SWAP.(ZxZ).CP and -SWAP.CP on the
/// outer pair, and both equal SWAP.CP after the conditional correction.
fn criterion_gate_classification() -> CriterionReport {
    const ID: usize = 4;
    const NAME: &str = "mediator outcome classification";
    let idx = |q0: usize, mediator: usize, q2: usize| (q0 << 2) | (mediator << 1) | q2;
    let run = || -> Result<f64> {
        let u = mediated_gate_unitary(1.0)?.matrix;
        let mut worst = 0.0f64;
        let mut corrected = [CMatrix::zeros(4, 4), CMatrix::zeros(4, 4)];
        for outcome in 0..=1u8 {
            let (_, expected) = classify_two_qubit_action(outcome)?;
            let mut block = CMatrix::zeros(4, 4);
            for row in 0..4 {
                for col in 0..4 {
                    block[(row, col)] = u[(
                        idx(row >> 1, outcome as usize, row & 1),
                        idx(col >> 1, outcome as usize, col & 1),
                    )];
                }
            }
            for row in 0..4 {
                for col in 0..4 {
                    worst = worst.max((block[(row, col)] - expected[(row, col)]).norm());
                }
            }
            corrected[outcome as usize] = block;
        }
        // conditional Z on both outer qubits for outcome 0
        let zz = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), -c(1.0), -c(1.0), c(1.0)]));
        corrected[0] = &zz * &corrected[0];
        let swap_cp = CMatrix::from_row_slice(
            4,
            4,
            &[
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(0.0),
                c(0.0),
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(0.0),
                -c(1.0),
            ],
        );
        for block in &corrected {
            // align the global phase before comparing
            let phase = (swap_cp.adjoint() * block).trace();
            let align = phase / c(phase.norm());
            for row in 0..4 {
                for col in 0..4 {
                    worst = worst.max((block[(row, col)] / align - swap_cp[(row, col)]).norm());
                }
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(worst) => report(
            ID,
            NAME,
            worst <= 1e-10,
            format!("worst block error {worst:.12e} (tolerance 1e-10)"),
        ),
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 5: the fitted polariton hopping obeys t_eff = A/2 at g/A = 100.
fn criterion_effective_coupling() -> CriterionReport {
    const ID: usize = 5;
    const NAME: &str = "effective coupling fit";
    let params = SystemParams::default();
    match fit_effective_coupling(&params) {
        Ok(coupling) => {
            let ratio = coupling.t_eff / params.a_hop;
            report(
                ID,
                NAME,
                (0.495..=0.505).contains(&ratio),
                format!("t_eff/A = {ratio:.12e} (window [0.495, 0.505])"),
            )
        }
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 6: reduction infidelity falls roughly as (A/g)^2 between g/A = 10 and
/// g/A = 100.
fn criterion_reduction_scaling() -> CriterionReport {
    const ID: usize = 6;
    const NAME: &str = "reduction infidelity scaling";
    let run = |a_hop: f64| -> Result<f64> {
        let params = SystemParams {
            a_hop,
            ..SystemParams::default()
        };
        let initial = QuantumState::basis_state(8, 4)?; // |100>
        let t = reduction_gate_time(&params)?;
        Ok(reduction_infidelity(&params, t, &initial)?.infidelity)
    };
    match (run(0.1), run(0.01)) {
        (Ok(coarse), Ok(fine)) => {
            let ratio = coarse / fine;
            report(
                ID,
                NAME,
                (25.0..=400.0).contains(&ratio),
                format!(
                    "infidelity {coarse:.12e} at g/A=10, {fine:.12e} at g/A=100, ratio \
                     {ratio:.12e} (window [25, 400])"
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => failure(ID, NAME, &e),
    }
}

fn plus_mediator_plus() -> Result<QuantumState> {
    let mut amps = CVector::zeros(8);
    for index in [0usize, 1, 4, 5] {
        amps[index] = c(0.5);
    }
    QuantumState::new(amps)
}

/// 7: the closed-system protocol at g/A = 100 delivers the heralded gate
/// with high fidelity and small leakage.
fn criterion_full_stack_gate() -> CriterionReport {
    const ID: usize = 7;
    const NAME: &str = "full-stack gate";
    let params = SystemParams::default();
    let run = || -> Result<crate::gate_protocol::ProtocolReport> {
        full_stack_gate(&params, &plus_mediator_plus()?, Some(0), 0)
    };
    match run() {
        Ok(r) => report(
            ID,
            NAME,
            r.two_qubit_fidelity >= 0.99 && r.leakage <= 0.01,
            format!(
                "fidelity {:.12e} (>= 0.99), leakage {:.12e} (<= 0.01)",
                r.two_qubit_fidelity, r.leakage
            ),
        ),
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 8: dissipative regime at the advertised ratios g/kappa = g/gamma = 1e3,
/// g/A = 1e2: zero-rate channel matches the unitary protocol, fidelity is
/// monotone under a kappa sweep, and single-polariton survival at t = 10/A
/// matches e^{-(kappa+gamma)t/2}.
fn criterion_dissipative_regime() -> CriterionReport {
    const ID: usize = 8;
    const NAME: &str = "dissipative regime";
    let run = || -> Result<(f64, Vec<f64>, bool, f64, f64)> {
        let params = SystemParams::default();
        let input = plus_mediator_plus()?;
        let unitary = full_stack_gate(&params, &input, Some(0), 0)?;
        let channel = full_stack_gate_via_lindblad(&params, &input, Some(0), 0)?;
        let zero_rate_gap = (unitary.two_qubit_fidelity - channel.two_qubit_fidelity)
            .abs()
            .max((unitary.leakage - channel.leakage).abs());

        let gamma = 1e-3;
        let mut sweep = Vec::new();
        for step in 0..5 {
            let kappa = 2.5e-4 * step as f64;
            let params = SystemParams {
                kappa,
                gamma,
                ..SystemParams::default()
            };
            sweep.push(dissipative_channel_fidelity(&params, 0)?);
        }
        let monotone = sweep.windows(2).all(|w| w[1] <= w[0] + 1e-9);

        let decay_params = SystemParams {
            kappa: 1e-3,
            gamma: 1e-3,
            ..SystemParams::default()
        };
        let t = 10.0 / decay_params.a_hop;
        let survival = polariton_survival(&decay_params, t)?;
        let analytic = (-(decay_params.kappa + decay_params.gamma) * t / 2.0).exp();
        Ok((zero_rate_gap, sweep, monotone, survival, analytic))
    };
    match run() {
        Ok((gap, sweep, monotone, survival, analytic)) => {
            let survival_ok = (survival - analytic).abs() <= 0.05;
            let sweep_str = sweep
                .iter()
                .map(|f| format!("{f:.12e}"))
                .collect::<Vec<_>>()
                .join(", ");
            report(
                ID,
                NAME,
                gap <= 1e-6 && monotone && survival_ok,
                format!(
                    "zero-rate gap {gap:.12e} (<= 1e-6); kappa-sweep fidelities [{sweep_str}] \
                     monotone={monotone}; survival {survival:.12e} vs analytic {analytic:.12e} \
                     (within 0.05)"
                ),
            )
        }
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 9: master-equation integration reproduces exponential cavity decay and
/// keeps the state physical.
fn criterion_lindblad_decay() -> CriterionReport {
    const ID: usize = 9;
    const NAME: &str = "damped cavity decay";
    let run = || -> Result<(f64, f64, f64)> {
        let n_max = 3;
        let (lower, raise) = fock_ladder(n_max)?;
        let number = Operator::new(&raise.matrix * &lower.matrix, vec![n_max + 1])?;
        let h = Operator::new(number.matrix.clone(), vec![n_max + 1])?;
        let kappa = 0.2;
        let t = 2.0;
        let rho0 = QuantumState::basis_state(n_max + 1, 1)?.density_matrix();
        let rho = evolve_lindblad(&h, &[(kappa, lower)], &rho0, t, 0.05)?;
        let occupancy = rho.expectation(&number.matrix).re;
        let expected = (-kappa * t).exp();
        let trace_residual = (rho.trace() - c(1.0)).norm();
        let matrix = &rho.matrix;
        let mut herm = 0.0f64;
        for r in 0..rho.dim() {
            for col in 0..rho.dim() {
                herm = herm.max((matrix[(r, col)] - matrix[(col, r)].conj()).norm());
            }
        }
        Ok(((occupancy - expected).abs(), trace_residual, herm))
    };
    match run() {
        Ok((decay_err, trace_residual, herm)) => report(
            ID,
            NAME,
            decay_err <= 1e-6 && trace_residual <= 1e-8 && herm <= 1e-10,
            format!(
                "occupancy error {decay_err:.12e} (<= 1e-6), trace residual \
                 {trace_residual:.12e}, hermiticity residual {herm:.12e}"
            ),
        ),
        Err(e) => failure(ID, NAME, &e),
    }
}

/// 10: controlled-U decomposition round-trips 100 seeded Haar unitaries.
fn criterion_controlled_u_round_trip(seed: u64) -> CriterionReport {
    const ID: usize = 10;
    const NAME: &str = "controlled-U decomposition";
    let mut rng = rng_from_seed(seed ^ 0xA5A5_5A5A);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u = haar_random_u2(&mut rng);
        let (a, b) = match decompose_controlled_u(&u) {
            Ok(pair) => pair,
            Err(e) => return failure(ID, NAME, &e),
        };
        let theta = controlled_u_phase(&u, &a, &b);
        let m = reconstruct_controlled_u(&a, &b) * ci(theta.cos(), theta.sin());
        for r in 0..2 {
            for col in 0..2 {
                worst = worst.max((m[(r, col)] - u[(r, col)]).norm());
            }
        }
    }
    report(
        ID,
        NAME,
        worst <= 1e-8,
        format!("worst reconstruction error {worst:.12e} over 100 unitaries (tolerance 1e-8)"),
    )
}

/// 11: twenty seeded random circuits compile, simulate over all retained
/// branches, and match the ideal circuit on a random input state.
fn criterion_compiler_end_to_end(seed: u64) -> CriterionReport {
    const ID: usize = 11;
    const NAME: &str = "compiler end to end";
    let mut rng = rng_from_seed(seed ^ 0x0F0F_F0F0);
    let num_qubits = 4;
    let layout = Layout::for_qubits(num_qubits);
    let run = |rng: &mut crate::random::SeededRng| -> Result<(f64, usize)> {
        let mut worst = 1.0f64;
        let mut branches_seen = 0usize;
        for _ in 0..20 {
            use rand::Rng;
            let mut gates = Vec::new();
            for _ in 0..5 {
                if rng.gen_bool(0.5) {
                    gates.push(Gate::SingleQubit {
                        target: rng.gen_range(0..num_qubits),
                        u: haar_random_u2(rng),
                    });
                } else {
                    let a = rng.gen_range(0..num_qubits);
                    let mut b = rng.gen_range(0..num_qubits);
                    while b == a {
                        b = rng.gen_range(0..num_qubits);
                    }
                    gates.push(Gate::Cz { a, b });
                }
            }
            let control = rng.gen_range(0..num_qubits);
            let mut target = rng.gen_range(0..num_qubits);
            while target == control {
                target = rng.gen_range(0..num_qubits);
            }
            let position = rng.gen_range(0..=gates.len());
            gates.insert(
                position,
                Gate::ControlledU {
                    control,
                    target,
                    u: haar_random_u2(rng),
                },
            );
            let circuit = Circuit::new(num_qubits, gates)?;

            let dim = 1 << num_qubits;
            let column = haar_random_unitary(dim, rng).column(0).into_owned();
            let initial = QuantumState::new(column)?;
            let ideal = ideal_circuit_unitary(&circuit)?;
            let target_state = QuantumState::normalized(&ideal * &initial.amplitudes)?;

            let schedule = compile(&circuit, layout)?;
            let branches = simulate_schedule(&schedule, &initial, &OutcomePolicy::Exhaustive)?;
            for branch in &branches {
                branches_seen += 1;
                let (logical, _) = extract_logical_state(&branch.state, &branch.frame, &layout)?;
                worst = worst.min(branch_overlap(&logical, &target_state)?);
            }
        }
        Ok((worst, branches_seen))
    };
    match run(&mut rng) {
        Ok((worst, branches)) => report(
            ID,
            NAME,
            worst >= 1.0 - 1e-8,
            format!(
                "worst branch overlap {worst:.12} over 20 circuits, {branches} branches \
                 (threshold 1 - 1e-8)"
            ),
        ),
        Err(e) => failure(ID, NAME, &e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_rendering_is_stable() {
        let reports = vec![report(3, "sample", true, "value 1.000000000000e0".into())];
        assert_eq!(
            render_report(&reports),
            "criterion 03 PASS sample: value 1.000000000000e0\n"
        );
    }
}
