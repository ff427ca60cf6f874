//! Compiler from logical circuits to the native mediated-gate schedule.
//!
//! The physical chain alternates computational sites (even indices) with
//! mediator sites (odd indices). The only two-qubit primitive is the XY
//! evolution on a contiguous (computational, mediator, computational)
//! triple for the fixed gate time, followed by a mediator measurement.
//! With the mediator prepared in |0>, outcome 0 realizes SWAP.(ZxZ).CP on
//! the outer pair and outcome 1 realizes -SWAP.CP; a conditional Z pair on
//! outcome 0 makes every branch SWAP.CP up to global phase. The SWAP half
//! is never undone physically: it is absorbed into a permutation frame
//! that later gates consult for addressing.

mod decompose;
mod format;
mod lower;
mod simulate;

pub use decompose::{controlled_u_phase, decompose_controlled_u, reconstruct_controlled_u};
pub use format::{parse_circuit, parse_schedule, serialize_circuit, serialize_schedule};
pub use lower::{compile, compile_with_frame};
pub use simulate::{
    branch_overlap, extract_logical_state, ideal_circuit_unitary, simulate_schedule,
    simulate_schedule_continue, simulate_schedule_with_cap, BranchResult, OutcomePolicy,
};

use crate::error::{Error, Result};
use crate::tolerances::UNITARITY;
use crate::{c, ci, CMatrix};

/// A logical gate. Qubit 0 is the most significant bit of basis indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    SingleQubit {
        target: usize,
        u: CMatrix,
    },
    Cz {
        a: usize,
        b: usize,
    },
    ControlledU {
        control: usize,
        target: usize,
        u: CMatrix,
    },
}

/// An ordered list of logical gates on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let circuit = Circuit { num_qubits, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, gate) in self.gates.iter().enumerate() {
            let check_index = |q: usize, role: &str| -> Result<()> {
                if q >= self.num_qubits {
                    return Err(Error::InvalidParameter(format!(
                        "gate {i}: {role} index {q} out of range for {} qubits",
                        self.num_qubits
                    )));
                }
                Ok(())
            };
            match gate {
                Gate::SingleQubit { target, u } => {
                    check_index(*target, "target")?;
                    check_unitary_2x2(u, i)?;
                }
                Gate::Cz { a, b } => {
                    check_index(*a, "first")?;
                    check_index(*b, "second")?;
                    if a == b {
                        return Err(Error::InvalidParameter(format!(
                            "gate {i}: CZ operands must be distinct, got {a}"
                        )));
                    }
                }
                Gate::ControlledU { control, target, u } => {
                    check_index(*control, "control")?;
                    check_index(*target, "target")?;
                    if control == target {
                        return Err(Error::InvalidParameter(format!(
                            "gate {i}: controlled-U control and target must differ, got {control}"
                        )));
                    }
                    check_unitary_2x2(u, i)?;
                }
            }
        }
        Ok(())
    }

    /// Concatenates two circuits over the same qubit count.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::InvalidParameter(format!(
                "cannot concatenate circuits on {} and {} qubits",
                self.num_qubits, other.num_qubits
            )));
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Circuit::new(self.num_qubits, gates)
    }
}

fn check_unitary_2x2(u: &CMatrix, gate_index: usize) -> Result<()> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::InvalidParameter(format!(
            "gate {gate_index}: expected a 2x2 matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let residual = unitarity_residual(u);
    if residual > UNITARITY {
        return Err(Error::InvalidParameter(format!(
            "gate {gate_index}: matrix is not unitary, residual {residual:.3e}"
        )));
    }
    Ok(())
}

pub(crate) fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..n {
        for col in 0..n {
            let expected = if r == col { c(1.0) } else { c(0.0) };
            worst = worst.max((gram[(r, col)] - expected).norm());
        }
    }
    worst
}

/// Chain layout: `num_comp` computational sites at even physical indices,
/// mediators between them at odd indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub num_comp: usize,
}

impl Layout {
    /// Smallest layout able to host a circuit on `num_qubits` qubits.
    pub fn for_qubits(num_qubits: usize) -> Layout {
        Layout {
            num_comp: num_qubits.max(1),
        }
    }

    pub fn num_sites(&self) -> usize {
        2 * self.num_comp - 1
    }

    pub fn comp_site(&self, slot: usize) -> usize {
        2 * slot
    }

    /// Mediator between computational slots `slot` and `slot + 1`.
    pub fn mediator_site(&self, slot: usize) -> usize {
        2 * slot + 1
    }

    fn check(&self) -> Result<()> {
        if self.num_comp == 0 {
            return Err(Error::InvalidParameter(
                "layout needs at least one computational site".into(),
            ));
        }
        Ok(())
    }
}

/// One native instruction on the physical chain.
#[derive(Debug, Clone, PartialEq)]
pub enum NativeOp {
    /// XY evolution for the fixed gate time on a contiguous triple.
    XyEvolve {
        left: usize,
        mediator: usize,
        right: usize,
    },
    /// Projective Z measurement of a mediator, which is then reset to |0>.
    MeasureMediator {
        site: usize,
        id: usize,
    },
    LocalRotation {
        site: usize,
        u: CMatrix,
    },
    /// Z on `site` when measurement `id` returned 0.
    ConditionalZ {
        site: usize,
        id: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NativeSchedule {
    pub layout: Layout,
    pub ops: Vec<NativeOp>,
}

impl NativeSchedule {
    pub fn new(layout: Layout, ops: Vec<NativeOp>) -> Result<Self> {
        let schedule = NativeSchedule { layout, ops };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn num_measurements(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, NativeOp::MeasureMediator { .. }))
            .count()
    }

    /// Same ops hosted on a wider chain.
    pub fn widened(&self, num_comp: usize) -> Result<NativeSchedule> {
        if num_comp < self.layout.num_comp {
            return Err(Error::InvalidParameter(format!(
                "cannot shrink layout from {} to {num_comp} computational sites",
                self.layout.num_comp
            )));
        }
        NativeSchedule::new(Layout { num_comp }, self.ops.clone())
    }

    /// Checks site ranges, triple contiguity, measurement pairing and
    /// conditional references.
    pub fn validate(&self) -> Result<()> {
        self.layout.check()?;
        let num_sites = self.layout.num_sites();
        let mut armed = vec![false; num_sites];
        let mut seen_ids = std::collections::HashSet::new();
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                NativeOp::XyEvolve {
                    left,
                    mediator,
                    right,
                } => {
                    if *mediator != left + 1 || *right != left + 2 || left % 2 != 0 {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: XY triple ({left},{mediator},{right}) is not a contiguous \
                             computational-mediator-computational triple"
                        )));
                    }
                    if *right >= num_sites {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: XY triple ends at site {right}, chain has {num_sites} sites"
                        )));
                    }
                    armed[*mediator] = true;
                }
                NativeOp::MeasureMediator { site, id } => {
                    if *site >= num_sites || site % 2 == 0 {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: measurement site {site} is not a mediator site"
                        )));
                    }
                    if !armed[*site] {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: mediator {site} measured without a preceding XY evolution"
                        )));
                    }
                    armed[*site] = false;
                    if !seen_ids.insert(*id) {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: duplicate measurement id {id}"
                        )));
                    }
                }
                NativeOp::LocalRotation { site, u } => {
                    if *site >= num_sites {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: rotation site {site} out of range"
                        )));
                    }
                    check_unitary_2x2(u, i)?;
                }
                NativeOp::ConditionalZ { site, id } => {
                    if *site >= num_sites {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: conditional site {site} out of range"
                        )));
                    }
                    if !seen_ids.contains(id) {
                        return Err(Error::InvalidParameter(format!(
                            "op {i}: conditional references unknown measurement id {id}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Folds the per-native SWAP absorption over the schedule.
    pub fn final_frame(&self, from: &Frame) -> Result<Frame> {
        from.check(&self.layout)?;
        let mut frame = from.clone();
        for op in &self.ops {
            if let NativeOp::XyEvolve { left, right, .. } = op {
                frame.swap_sites(*left, *right);
            }
        }
        Ok(frame)
    }
}

/// Classical bookkeeping carried alongside a schedule: where each logical
/// qubit currently lives, and which measurement outcomes were observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    /// Logical qubit index -> physical computational site.
    pub permutation: Vec<usize>,
    pub outcome_log: Vec<(usize, u8)>,
}

impl Frame {
    pub fn identity(num_qubits: usize, layout: &Layout) -> Result<Frame> {
        layout.check()?;
        if num_qubits > layout.num_comp {
            return Err(Error::InvalidParameter(format!(
                "{num_qubits} logical qubits do not fit {} computational sites",
                layout.num_comp
            )));
        }
        Ok(Frame {
            permutation: (0..num_qubits).map(|q| layout.comp_site(q)).collect(),
            outcome_log: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.permutation.len()
    }

    /// Permutation entries must be distinct computational sites in range.
    pub fn check(&self, layout: &Layout) -> Result<()> {
        layout.check()?;
        let mut seen = vec![false; layout.num_sites()];
        for (q, site) in self.permutation.iter().enumerate() {
            if *site >= layout.num_sites() || site % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "frame maps qubit {q} to {site}, not a computational site"
                )));
            }
            if seen[*site] {
                return Err(Error::InvalidParameter(format!(
                    "frame maps two qubits to site {site}"
                )));
            }
            seen[*site] = true;
        }
        Ok(())
    }

    pub(crate) fn swap_sites(&mut self, site_a: usize, site_b: usize) {
        for site in self.permutation.iter_mut() {
            if *site == site_a {
                *site = site_b;
            } else if *site == site_b {
                *site = site_a;
            }
        }
    }
}

pub fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), -c(s)])
}

pub fn s_gate() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), ci(0.0, 1.0)])
}

pub fn rx(theta: f64) -> CMatrix {
    let (sin, cos) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(cos), ci(0.0, -sin), ci(0.0, -sin), c(cos)])
}

/// diag(1, e^{i theta}).
pub fn phase_gate(theta: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(1.0), c(0.0), c(0.0), ci(theta.cos(), theta.sin())],
    )
}
