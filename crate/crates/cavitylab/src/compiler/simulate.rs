//! Ideal-gate simulation of native schedules, with the mediator register
//! kept explicit so measurement branching is exact.
//!
//! The register holds one qubit per physical site, site 0 as the most
//! significant bit. XY ops apply the ideal mediated-gate unitary on their
//! triple; measurements project, reset the mediator to |0> and branch
//! according to the outcome policy.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;

use crate::dynamics::QuantumState;
use crate::error::{Error, Result};
use crate::gate_protocol::mediated_gate_unitary;
use crate::operators::{embed, Operator};
use crate::random::{rng_from_seed, SeededRng};
use crate::tolerances::{BRANCH_FLOOR, BRANCH_PRUNE, DEFAULT_DIM_CAP};
use crate::{c, CMatrix, CVector};

use super::{Circuit, Frame, Gate, Layout, NativeOp, NativeSchedule};

/// How measurement outcomes are chosen during simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomePolicy {
    /// Born sampling with a reproducible generator.
    Sample { seed: u64 },
    /// Follow a fixed outcome sequence, one bit per measurement.
    Forced(Vec<u8>),
    /// Enumerate all branches above the pruning threshold, in outcome-
    /// lexicographic order.
    Exhaustive,
}

/// One retained measurement branch: outcome sequence, its probability,
/// the full-register state and the frame carrying the outcome log.
#[derive(Debug, Clone)]
pub struct BranchResult {
    pub outcomes: Vec<u8>,
    pub probability: f64,
    pub state: QuantumState,
    pub frame: Frame,
}

pub fn simulate_schedule(
    schedule: &NativeSchedule,
    initial: &QuantumState,
    policy: &OutcomePolicy,
) -> Result<Vec<BranchResult>> {
    simulate_schedule_with_cap(schedule, initial, policy, DEFAULT_DIM_CAP)
}

/// Simulates from a logical product embedding: logical qubit q starts at
/// computational site 2q with every mediator in |0>.
pub fn simulate_schedule_with_cap(
    schedule: &NativeSchedule,
    initial: &QuantumState,
    policy: &OutcomePolicy,
    cap: usize,
) -> Result<Vec<BranchResult>> {
    let layout = schedule.layout;
    let expected = 1usize << layout.num_comp;
    if initial.dim() != expected {
        return Err(Error::InvalidParameter(format!(
            "initial state dimension {} does not match {} computational sites",
            initial.dim(),
            layout.num_comp
        )));
    }
    check_register(&layout, cap)?;
    let num_sites = layout.num_sites();
    let mut amps = CVector::zeros(1 << num_sites);
    for i in 0..expected {
        let mut j = 0usize;
        for q in 0..layout.num_comp {
            if (i >> (layout.num_comp - 1 - q)) & 1 == 1 {
                j |= 1 << (num_sites - 1 - layout.comp_site(q));
            }
        }
        amps[j] = initial.amplitudes[i];
    }
    let frame = Frame::identity(layout.num_comp, &layout)?;
    run(schedule, amps, &frame, policy)
}

/// Continues a simulation: the initial state is a full-register state and
/// the frame records where each logical qubit currently lives.
pub fn simulate_schedule_continue(
    schedule: &NativeSchedule,
    initial: &QuantumState,
    frame: &Frame,
    policy: &OutcomePolicy,
) -> Result<Vec<BranchResult>> {
    let layout = schedule.layout;
    check_register(&layout, DEFAULT_DIM_CAP)?;
    if initial.dim() != 1usize << layout.num_sites() {
        return Err(Error::InvalidParameter(format!(
            "register state dimension {} does not match {} sites",
            initial.dim(),
            layout.num_sites()
        )));
    }
    frame.check(&layout)?;
    run(schedule, initial.amplitudes.clone(), frame, policy)
}

fn check_register(layout: &Layout, cap: usize) -> Result<()> {
    let num_sites = layout.num_sites();
    if num_sites >= usize::BITS as usize {
        return Err(Error::ResourceLimit(format!(
            "{num_sites} sites exceed the addressable register"
        )));
    }
    let dim = 1usize << num_sites;
    if dim > cap {
        return Err(Error::ResourceLimit(format!(
            "register dimension {dim} exceeds cap {cap}"
        )));
    }
    Ok(())
}

struct Runner<'a> {
    ops: &'a [NativeOp],
    num_sites: usize,
    u3: CMatrix,
    policy: &'a OutcomePolicy,
    rng: Option<SeededRng>,
    results: Vec<BranchResult>,
}

struct Branch {
    amps: CVector,
    probability: f64,
    perm: Vec<usize>,
    outcomes: Vec<u8>,
    log: Vec<(usize, u8)>,
    by_id: HashMap<usize, u8>,
}

fn run(
    schedule: &NativeSchedule,
    amps: CVector,
    frame: &Frame,
    policy: &OutcomePolicy,
) -> Result<Vec<BranchResult>> {
    schedule.validate()?;
    if let OutcomePolicy::Forced(bits) = policy {
        let wanted = schedule.num_measurements();
        if bits.len() != wanted {
            return Err(Error::InvalidParameter(format!(
                "forced outcome sequence has {} bits, schedule has {wanted} measurements",
                bits.len()
            )));
        }
        if let Some(bad) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidParameter(format!(
                "forced outcome {bad} is not a bit"
            )));
        }
    }
    let mut runner = Runner {
        ops: &schedule.ops,
        num_sites: schedule.layout.num_sites(),
        u3: mediated_gate_unitary(1.0)?.matrix,
        policy,
        rng: match policy {
            OutcomePolicy::Sample { seed } => Some(rng_from_seed(*seed)),
            _ => None,
        },
        results: Vec::new(),
    };
    let branch = Branch {
        amps,
        probability: 1.0,
        perm: frame.permutation.clone(),
        outcomes: Vec::new(),
        log: Vec::new(),
        by_id: HashMap::new(),
    };
    runner.explore(0, branch)?;
    Ok(runner.results)
}

impl Runner<'_> {
    fn explore(&mut self, from: usize, mut branch: Branch) -> Result<()> {
        let mut i = from;
        while i < self.ops.len() {
            match &self.ops[i] {
                NativeOp::LocalRotation { site, u } => {
                    self.apply_single(&mut branch.amps, *site, u);
                }
                NativeOp::XyEvolve { left, right, .. } => {
                    self.apply_triple(&mut branch.amps, *left);
                    let (sl, sr) = (*left, *right);
                    for site in branch.perm.iter_mut() {
                        if *site == sl {
                            *site = sr;
                        } else if *site == sr {
                            *site = sl;
                        }
                    }
                }
                NativeOp::ConditionalZ { site, id } => {
                    if branch.by_id[id] == 0 {
                        self.apply_z(&mut branch.amps, *site);
                    }
                }
                NativeOp::MeasureMediator { site, id } => {
                    return self.branch_on_measurement(i, branch, *site, *id);
                }
            }
            i += 1;
        }

        let state = QuantumState::normalized(branch.amps)?;
        self.results.push(BranchResult {
            outcomes: branch.outcomes,
            probability: branch.probability,
            state,
            frame: Frame {
                permutation: branch.perm,
                outcome_log: branch.log,
            },
        });
        Ok(())
    }

    fn branch_on_measurement(
        &mut self,
        op_index: usize,
        branch: Branch,
        site: usize,
        id: usize,
    ) -> Result<()> {
        let pos = self.num_sites - 1 - site;
        let mask = 1usize << pos;
        let mut p = [0.0f64; 2];
        for idx in 0..branch.amps.len() {
            p[((idx & mask) != 0) as usize] += branch.amps[idx].norm_sqr();
        }

        match self.policy {
            OutcomePolicy::Exhaustive => {
                for outcome in [0u8, 1u8] {
                    let weight = p[outcome as usize];
                    if branch.probability * weight <= BRANCH_PRUNE {
                        continue;
                    }
                    let next = self.project(&branch, mask, outcome, weight, id);
                    self.explore(op_index + 1, next)?;
                }
                Ok(())
            }
            OutcomePolicy::Forced(bits) => {
                let outcome = bits[branch.outcomes.len()];
                let weight = p[outcome as usize];
                if weight < BRANCH_FLOOR {
                    return Err(Error::DegenerateBranch(format!(
                        "forced outcome {outcome} at measurement {id} has probability {weight:.3e}"
                    )));
                }
                let next = self.project(&branch, mask, outcome, weight, id);
                self.explore(op_index + 1, next)
            }
            OutcomePolicy::Sample { .. } => {
                let u: f64 = self.rng.as_mut().expect("sampling rng").gen();
                let outcome = u8::from(u >= p[0] / (p[0] + p[1]));
                let weight = p[outcome as usize];
                let next = self.project(&branch, mask, outcome, weight, id);
                self.explore(op_index + 1, next)
            }
        }
    }

    /// Projects onto the outcome, resets the mediator to |0> and rescales
    /// to unit norm; the branch weight is tracked separately.
    fn project(&self, branch: &Branch, mask: usize, outcome: u8, weight: f64, id: usize) -> Branch {
        let mut amps = branch.amps.clone();
        let scale = c(1.0 / weight.sqrt());
        if outcome == 1 {
            for idx in 0..amps.len() {
                if idx & mask != 0 {
                    amps[idx & !mask] = amps[idx] * scale;
                    amps[idx] = Complex64::new(0.0, 0.0);
                }
            }
        } else {
            for idx in 0..amps.len() {
                if idx & mask != 0 {
                    amps[idx] = Complex64::new(0.0, 0.0);
                } else {
                    amps[idx] *= scale;
                }
            }
        }
        let mut outcomes = branch.outcomes.clone();
        outcomes.push(outcome);
        let mut log = branch.log.clone();
        log.push((id, outcome));
        let mut by_id = branch.by_id.clone();
        by_id.insert(id, outcome);
        Branch {
            amps,
            probability: branch.probability * weight,
            perm: branch.perm.clone(),
            outcomes,
            log,
            by_id,
        }
    }

    fn apply_single(&self, amps: &mut CVector, site: usize, u: &CMatrix) {
        let pos = self.num_sites - 1 - site;
        let mask = 1usize << pos;
        for idx in 0..amps.len() {
            if idx & mask == 0 {
                let a0 = amps[idx];
                let a1 = amps[idx | mask];
                amps[idx] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
                amps[idx | mask] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
            }
        }
    }

    fn apply_z(&self, amps: &mut CVector, site: usize) {
        let mask = 1usize << (self.num_sites - 1 - site);
        for idx in 0..amps.len() {
            if idx & mask != 0 {
                amps[idx] = -amps[idx];
            }
        }
    }

    /// Applies the ideal 8-dimensional native unitary on the contiguous
    /// triple starting at `left`.
    fn apply_triple(&self, amps: &mut CVector, left: usize) {
        let low = self.num_sites - 1 - (left + 2);
        let step = 1usize << low;
        let block = step << 3;
        let mut v = [Complex64::new(0.0, 0.0); 8];
        for hi in 0..(amps.len() / block) {
            for lo in 0..step {
                let base = hi * block + lo;
                for (r, slot) in v.iter_mut().enumerate() {
                    *slot = amps[base + r * step];
                }
                for r in 0..8 {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, amp) in v.iter().enumerate() {
                        acc += self.u3[(r, k)] * amp;
                    }
                    amps[base + r * step] = acc;
                }
            }
        }
    }
}

/// Reads the logical state off a register state: logical qubit q is the
/// qubit at frame.permutation[q], every other site must hold |0>. Returns
/// the normalized logical state and the captured weight.
pub fn extract_logical_state(
    state: &QuantumState,
    frame: &Frame,
    layout: &Layout,
) -> Result<(QuantumState, f64)> {
    frame.check(layout)?;
    let num_sites = layout.num_sites();
    if state.dim() != 1usize << num_sites {
        return Err(Error::InvalidParameter(format!(
            "register state dimension {} does not match {} sites",
            state.dim(),
            num_sites
        )));
    }
    let n = frame.num_qubits();
    let mut logical = CVector::zeros(1 << n);
    for i in 0..(1usize << n) {
        let mut j = 0usize;
        for (q, site) in frame.permutation.iter().enumerate() {
            if (i >> (n - 1 - q)) & 1 == 1 {
                j |= 1 << (num_sites - 1 - site);
            }
        }
        logical[i] = state.amplitudes[j];
    }
    let captured = logical.norm_squared();
    if captured < BRANCH_FLOOR {
        return Err(Error::DegenerateBranch(format!(
            "logical subspace holds weight {captured:.3e}"
        )));
    }
    let scale = c(1.0 / captured.sqrt());
    Ok((QuantumState::normalized(logical * scale)?, captured))
}

/// |<a|b>|^2.
pub fn branch_overlap(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter(format!(
            "state dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.overlap(b).norm_sqr())
}

/// Dense unitary of the logical circuit, qubit 0 as the most significant
/// bit.
pub fn ideal_circuit_unitary(circuit: &Circuit) -> Result<CMatrix> {
    circuit.validate()?;
    let n = circuit.num_qubits;
    if n >= usize::BITS as usize || (1usize << n) > DEFAULT_DIM_CAP {
        return Err(Error::ResourceLimit(format!(
            "circuit on {n} qubits exceeds the dense unitary cap"
        )));
    }
    let dim = 1usize << n;
    let site_dims = vec![2usize; n];
    let mut total = CMatrix::identity(dim, dim);
    for gate in &circuit.gates {
        let full = match gate {
            Gate::SingleQubit { target, u } => {
                let op = Operator::new(u.clone(), vec![2])?;
                embed(&op, *target, &site_dims)?.matrix
            }
            Gate::Cz { a, b } => {
                let mut m = CMatrix::identity(dim, dim);
                for idx in 0..dim {
                    let bit_a = (idx >> (n - 1 - a)) & 1;
                    let bit_b = (idx >> (n - 1 - b)) & 1;
                    if bit_a == 1 && bit_b == 1 {
                        m[(idx, idx)] = -c(1.0);
                    }
                }
                m
            }
            Gate::ControlledU { control, target, u } => {
                let p0 = Operator::new(
                    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]),
                    vec![2],
                )?;
                let p1 = Operator::new(
                    CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]),
                    vec![2],
                )?;
                let u_op = Operator::new(u.clone(), vec![2])?;
                embed(&p0, *control, &site_dims)?.matrix
                    + embed(&p1, *control, &site_dims)?.matrix
                        * embed(&u_op, *target, &site_dims)?.matrix
            }
        };
        total = full * total;
    }
    Ok(total)
}
