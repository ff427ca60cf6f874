use std::collections::BTreeMap;

use nalgebra::DMatrix;

use cavitylab::compiler::{
    branch_overlap, compile, extract_logical_state, ideal_circuit_unitary, parse_circuit,
    parse_schedule, serialize_schedule, simulate_schedule, simulate_schedule_with_cap, Layout,
    OutcomePolicy,
};
use cavitylab::dynamics::QuantumState;
use cavitylab::gate_protocol::{
    dissipative_channel_fidelity, dissipative_channel_fidelity_with_cap, full_stack_gate,
    full_stack_gate_with_cap,
};
use cavitylab::jch_model::{dispersion, jc_single_site_spectrum};
use cavitylab::polariton::{
    reduction_gate_time, reduction_infidelity, reduction_infidelity_with_cap,
};
use cavitylab::selftest::{render_report, run_all};
use cavitylab::{Error, Result};

use crate::config::{
    self, GateConfig, NoiseSweepConfig, ParamsOnlyConfig, ReduceConfig, SimulateConfig,
};
use crate::output::{emit, Cell, Table};
use crate::{Cli, Command};

pub fn run(cli: &Cli) -> Result<i32> {
    match cli.command {
        Command::Dispersion => run_dispersion(cli),
        Command::Spectrum => run_spectrum(cli),
        Command::Reduce => run_reduce(cli),
        Command::Gate => run_gate(cli),
        Command::NoiseSweep => run_noise_sweep(cli),
        Command::Compile => run_compile(cli),
        Command::Simulate => run_simulate(cli),
        Command::Presets => run_presets(cli),
        Command::Selftest => run_selftest(cli),
    }
}

fn finish(cli: &Cli, table: Table) -> Result<i32> {
    emit(&cli.out, &table.render(cli.format)?)?;
    Ok(0)
}

fn run_dispersion(cli: &Cli) -> Result<i32> {
    let cfg: ParamsOnlyConfig = config::load(&cli.config)?;
    let params = cfg.params.resolve()?;
    let n = params.n_sites;

    // cross-check: the photon hopping matrix must carry the same band
    let mut hop = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        hop[(i, i)] = params.omega_d;
    }
    for (i, j) in params.bonds() {
        hop[(i, j)] += params.a_hop;
        hop[(j, i)] += params.a_hop;
    }
    let mut eigen: Vec<f64> = hop.symmetric_eigenvalues().iter().copied().collect();
    eigen.sort_by(f64::total_cmp);

    let band: Vec<f64> = (0..n)
        .map(|k| dispersion(k, &params))
        .collect::<Result<_>>()?;
    let mut sorted = band.clone();
    sorted.sort_by(f64::total_cmp);
    let crosscheck = eigen
        .iter()
        .zip(&sorted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let mut table = Table::new(vec![
        "n_sites",
        "omega_d",
        "a_hop",
        "k",
        "omega",
        "hopping_crosscheck",
    ]);
    for (k, omega) in band.iter().enumerate() {
        table.push(vec![
            Cell::U(n as u64),
            Cell::F(params.omega_d),
            Cell::F(params.a_hop),
            Cell::U(k as u64),
            Cell::F(*omega),
            Cell::F(crosscheck),
        ]);
    }
    finish(cli, table)
}

fn run_spectrum(cli: &Cli) -> Result<i32> {
    let mut cfg: ParamsOnlyConfig = config::load(&cli.config)?;
    cfg.params.n_sites.get_or_insert(1);
    let params = cfg.params.resolve()?;
    let mut sectors: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (energy, n) in jc_single_site_spectrum(&params)? {
        sectors.entry(n).or_default().push(energy);
    }
    let detuning_half = (params.omega_0 - params.omega_d) / 2.0;

    let mut table = Table::new(vec![
        "omega_d", "omega_0", "g", "n", "branch", "energy", "analytic", "error",
    ]);
    for (n, mut energies) in sectors {
        energies.sort_by(f64::total_cmp);
        let (branches, analytic): (Vec<&str>, Vec<f64>) = if n == 0 {
            (vec!["ground"], vec![0.0])
        } else if energies.len() == 1 {
            // photon cutoff leaves |e, n_max> without a partner
            (
                vec!["truncated"],
                vec![params.omega_0 + (n - 1) as f64 * params.omega_d],
            )
        } else {
            let mean = n as f64 * params.omega_d + detuning_half;
            let split = (n as f64 * params.g * params.g + detuning_half * detuning_half).sqrt();
            (vec!["-", "+"], vec![mean - split, mean + split])
        };
        for ((energy, branch), target) in energies.iter().zip(branches).zip(analytic) {
            table.push(vec![
                Cell::F(params.omega_d),
                Cell::F(params.omega_0),
                Cell::F(params.g),
                Cell::U(n as u64),
                Cell::S(branch.into()),
                Cell::F(*energy),
                Cell::F(target),
                Cell::F((energy - target).abs()),
            ]);
        }
    }
    finish(cli, table)
}

fn run_reduce(cli: &Cli) -> Result<i32> {
    let cfg: ReduceConfig = config::load(&cli.config)?;
    if cfg.params.g_over_a.is_some() || cfg.params.absolute.is_some() {
        return Err(Error::InvalidParameter(
            "reduce sets g/A from g_over_a_values; leave params.g_over_a and params.absolute unset"
                .into(),
        ));
    }
    let mut table = Table::new(vec![
        "n_sites",
        "n_max",
        "initial",
        "g_over_a",
        "t_eff_over_a",
        "gate_time",
        "infidelity",
        "leakage",
    ]);
    for &ratio in &cfg.g_over_a_values {
        let mut point = cfg.params.clone();
        point.g_over_a = Some(ratio);
        let params = point.resolve()?;
        let bits = match &cfg.initial {
            Some(s) => s.clone(),
            None => format!("1{}", "0".repeat(params.n_sites - 1)),
        };
        let index = config::parse_bitstring(&bits, params.n_sites)?;
        let initial = QuantumState::basis_state(1usize << params.n_sites, index)?;
        let t = reduction_gate_time(&params)?;
        let report = match cli.cap_dim {
            Some(cap) => reduction_infidelity_with_cap(&params, t, &initial, cap)?,
            None => reduction_infidelity(&params, t, &initial)?,
        };
        table.push(vec![
            Cell::U(params.n_sites as u64),
            Cell::U(params.n_max as u64),
            Cell::S(bits),
            Cell::F(ratio),
            Cell::F(report.t_eff / params.a_hop),
            Cell::F(t),
            Cell::F(report.infidelity),
            Cell::F(report.leakage),
        ]);
    }
    finish(cli, table)
}

fn run_gate(cli: &Cli) -> Result<i32> {
    let cfg: GateConfig = config::load(&cli.config)?;
    let params = cfg.params.resolve()?;
    let input = config::parse_site_state(&cfg.initial)?;
    let forced = match &cli.force_outcome {
        None => None,
        Some(s) => {
            let bits = config::parse_outcome_bits(s)?;
            if bits.len() != 1 {
                return Err(Error::InvalidParameter(
                    "gate takes a single forced outcome bit".into(),
                ));
            }
            Some(bits[0])
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let report = match cli.cap_dim {
        Some(cap) => full_stack_gate_with_cap(&params, &input, forced, seed, cap)?,
        None => full_stack_gate(&params, &input, forced, seed)?,
    };
    let method = if params.kappa > 0.0 || params.gamma > 0.0 {
        "lindblad"
    } else {
        "unitary"
    };

    let mut table = Table::new(vec![
        "g",
        "a_hop",
        "kappa",
        "gamma",
        "n_max",
        "initial",
        "seed",
        "method",
        "outcome",
        "outcome_probability",
        "two_qubit_fidelity",
        "leakage",
        "elapsed_model_time",
    ]);
    table.push(vec![
        Cell::F(params.g),
        Cell::F(params.a_hop),
        Cell::F(params.kappa),
        Cell::F(params.gamma),
        Cell::U(params.n_max as u64),
        Cell::S(cfg.initial.clone()),
        Cell::U(seed),
        Cell::S(method.into()),
        Cell::U(report.outcome as u64),
        Cell::F(report.outcome_probability),
        Cell::F(report.two_qubit_fidelity),
        Cell::F(report.leakage),
        Cell::F(report.elapsed_model_time),
    ]);
    finish(cli, table)
}

fn run_noise_sweep(cli: &Cli) -> Result<i32> {
    let cfg: NoiseSweepConfig = config::load(&cli.config)?;
    if cfg.outcome > 1 {
        return Err(Error::InvalidParameter("outcome must be 0 or 1".into()));
    }
    let rates_in_params = cfg.params.kappa_over_a.is_some()
        || cfg.params.gamma_over_a.is_some()
        || cfg
            .params
            .absolute
            .map(|a| a.kappa != 0.0 || a.gamma != 0.0)
            .unwrap_or(false);
    if rates_in_params {
        return Err(Error::InvalidParameter(
            "noise-sweep sets kappa and gamma from the sweep lists; leave them out of params"
                .into(),
        ));
    }
    let mut table = Table::new(vec!["g", "a_hop", "kappa", "gamma", "outcome", "fidelity"]);
    for &gamma_ratio in &cfg.gamma_over_a_values {
        for &kappa_ratio in &cfg.kappa_over_a_values {
            let mut params = cfg.params.resolve()?;
            params.kappa = kappa_ratio * params.a_hop;
            params.gamma = gamma_ratio * params.a_hop;
            params.validate()?;
            let fidelity = match cli.cap_dim {
                Some(cap) => dissipative_channel_fidelity_with_cap(&params, cfg.outcome, cap)?,
                None => dissipative_channel_fidelity(&params, cfg.outcome)?,
            };
            table.push(vec![
                Cell::F(params.g),
                Cell::F(params.a_hop),
                Cell::F(params.kappa),
                Cell::F(params.gamma),
                Cell::U(cfg.outcome as u64),
                Cell::F(fidelity),
            ]);
        }
    }
    finish(cli, table)
}

fn run_compile(cli: &Cli) -> Result<i32> {
    let path = cli.config.as_ref().ok_or_else(|| {
        Error::InvalidParameter("compile requires --config <circuit text file>".into())
    })?;
    let circuit = parse_circuit(&config::read_text(path)?)?;
    let schedule = compile(&circuit, Layout::for_qubits(circuit.num_qubits))?;
    emit(&cli.out, &serialize_schedule(&schedule))?;
    Ok(0)
}

fn run_simulate(cli: &Cli) -> Result<i32> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("simulate requires --config <json file>".into()))?;
    let cfg: SimulateConfig = config::load_required(path)?;
    let schedule = parse_schedule(&config::read_text(&cfg.schedule)?)?;
    let layout = schedule.layout;
    let num_comp = layout.num_comp;
    let index = config::parse_bitstring(&cfg.initial, num_comp)?;
    let initial = QuantumState::basis_state(1usize << num_comp, index)?;

    let policy = if let Some(s) = &cli.force_outcome {
        OutcomePolicy::Forced(config::parse_outcome_bits(s)?)
    } else if let Some(seed) = cli.seed {
        OutcomePolicy::Sample { seed }
    } else {
        OutcomePolicy::Exhaustive
    };

    let ideal = match &cfg.circuit {
        None => None,
        Some(circuit_path) => {
            let circuit = parse_circuit(&config::read_text(circuit_path)?)?;
            if circuit.num_qubits != num_comp {
                return Err(Error::InvalidParameter(format!(
                    "circuit has {} qubits but the schedule hosts {num_comp}",
                    circuit.num_qubits
                )));
            }
            let u = ideal_circuit_unitary(&circuit)?;
            Some(QuantumState::normalized(&u * &initial.amplitudes)?)
        }
    };

    let branches = match cli.cap_dim {
        Some(cap) => simulate_schedule_with_cap(&schedule, &initial, &policy, cap)?,
        None => simulate_schedule(&schedule, &initial, &policy)?,
    };

    let mut columns = vec![
        "branch",
        "outcomes",
        "probability",
        "permutation",
        "captured",
        "state",
    ];
    if ideal.is_some() {
        columns.push("overlap");
    }
    let mut table = Table::new(columns);
    for (i, branch) in branches.iter().enumerate() {
        let outcomes: String = branch.outcomes.iter().map(|b| b.to_string()).collect();
        let permutation = branch
            .frame
            .permutation
            .iter()
            .map(|site| site.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let (logical, captured) = extract_logical_state(&branch.state, &branch.frame, &layout)?;
        let state = logical
            .amplitudes
            .iter()
            .map(|a| format!("{:.12e}{:+.12e}i", a.re, a.im))
            .collect::<Vec<_>>()
            .join(";");
        let mut row = vec![
            Cell::U(i as u64),
            Cell::S(outcomes),
            Cell::F(branch.probability),
            Cell::S(permutation),
            Cell::F(captured),
            Cell::S(state),
        ];
        if let Some(target) = &ideal {
            row.push(Cell::F(branch_overlap(&logical, target)?));
        }
        table.push(row);
    }
    finish(cli, table)
}

fn run_presets(cli: &Cli) -> Result<i32> {
    let mut table = Table::new(vec![
        "name",
        "g_over_a",
        "omega_d_over_a",
        "omega_0_over_a",
        "kappa_over_a",
        "gamma_over_a",
        "window_over_inv_a",
        "note",
    ]);
    let rows: [(&str, f64, f64, f64, &str); 3] = [
        (
            "toroidal-microcavity",
            100.0,
            1e6,
            0.1,
            "coherence window 10/A is about 10 ns here",
        ),
        (
            "pbg-defect",
            10.0,
            1e6,
            0.01,
            "photonic band gap defect cavities; deep blockade regime",
        ),
        (
            "stripline",
            100.0,
            1e6,
            0.1,
            "microwave stripline resonators; window 10/A is about 100 ns",
        ),
    ];
    for (name, g_over_a, omega_over_a, rate_over_a, note) in rows {
        table.push(vec![
            Cell::S(name.into()),
            Cell::F(g_over_a),
            Cell::F(omega_over_a),
            Cell::F(omega_over_a),
            Cell::F(rate_over_a),
            Cell::F(rate_over_a),
            Cell::F(10.0),
            Cell::S(note.into()),
        ]);
    }
    finish(cli, table)
}

fn run_selftest(cli: &Cli) -> Result<i32> {
    let reports = run_all(cli.seed.unwrap_or(0));
    emit(&cli.out, &render_report(&reports))?;
    Ok(if reports.iter().all(|r| r.passed) {
        0
    } else {
        2
    })
}
