//! Lowering logical gates to native schedule ops.
//!
//! Adjacent CZ is one native application: the conditional Z pair turns
//! both outcome branches into SWAP.CP, the SWAP moves into the frame and
//! what remains on the operands is exactly CZ. Distant operands are first
//! brought together with a pure-SWAP macro (a native application followed
//! by a CZ macro that cancels its CP part), so shuttling applies no gate
//! at all to bystanders; the payload native then contributes the CZ and
//! one frame transposition of the operands.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::CMatrix;

use super::decompose::{controlled_u_phase, decompose_controlled_u};
use super::{
    hadamard, phase_gate, rx, s_gate, Circuit, Frame, Gate, Layout, NativeOp, NativeSchedule,
};

/// Lowers a circuit starting from the identity frame.
pub fn compile(circuit: &Circuit, layout: Layout) -> Result<NativeSchedule> {
    let frame = Frame::identity(circuit.num_qubits, &layout)?;
    let (schedule, _) = compile_with_frame(circuit, layout, &frame)?;
    Ok(schedule)
}

/// Lowers a circuit whose qubits already sit at the positions recorded in
/// `frame`, returning the schedule and the final frame. Measurement ids
/// are local to the returned schedule.
pub fn compile_with_frame(
    circuit: &Circuit,
    layout: Layout,
    frame: &Frame,
) -> Result<(NativeSchedule, Frame)> {
    circuit.validate()?;
    if layout.num_comp < circuit.num_qubits {
        return Err(Error::InvalidParameter(format!(
            "layout with {} computational sites cannot host {} qubits",
            layout.num_comp, circuit.num_qubits
        )));
    }
    frame.check(&layout)?;
    if frame.num_qubits() != circuit.num_qubits {
        return Err(Error::InvalidParameter(format!(
            "frame tracks {} qubits, circuit has {}",
            frame.num_qubits(),
            circuit.num_qubits
        )));
    }

    let mut lowerer = Lowerer::new(layout, frame);
    for gate in &circuit.gates {
        lowerer.lower_gate(gate)?;
    }
    lowerer.finish()
}

struct Lowerer {
    layout: Layout,
    /// logical qubit -> computational slot
    slot_of: Vec<usize>,
    /// computational slot -> logical qubit
    occupant: Vec<Option<usize>>,
    ops: Vec<NativeOp>,
    next_meas: usize,
}

impl Lowerer {
    fn new(layout: Layout, frame: &Frame) -> Lowerer {
        let slot_of: Vec<usize> = frame.permutation.iter().map(|site| site / 2).collect();
        let mut occupant = vec![None; layout.num_comp];
        for (q, slot) in slot_of.iter().enumerate() {
            occupant[*slot] = Some(q);
        }
        Lowerer {
            layout,
            slot_of,
            occupant,
            ops: Vec::new(),
            next_meas: 0,
        }
    }

    fn lower_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::SingleQubit { target, u } => {
                self.rot_on_qubit(*target, u.clone());
                Ok(())
            }
            Gate::Cz { a, b } => {
                self.lower_cz(*a, *b);
                Ok(())
            }
            Gate::ControlledU { control, target, u } => self.lower_cu(*control, *target, u),
        }
    }

    fn rot(&mut self, site: usize, u: CMatrix) {
        self.ops.push(NativeOp::LocalRotation { site, u });
    }

    fn rot_on_qubit(&mut self, qubit: usize, u: CMatrix) {
        let site = self.layout.comp_site(self.slot_of[qubit]);
        self.rot(site, u);
    }

    /// One native application on slots (slot, slot + 1): XY evolution,
    /// mediator measurement, conditional Z pair, frame swap.
    fn native(&mut self, slot: usize) {
        let left = self.layout.comp_site(slot);
        let mediator = self.layout.mediator_site(slot);
        let right = self.layout.comp_site(slot + 1);
        let id = self.next_meas;
        self.next_meas += 1;
        self.ops.push(NativeOp::XyEvolve {
            left,
            mediator,
            right,
        });
        self.ops
            .push(NativeOp::MeasureMediator { site: mediator, id });
        self.ops.push(NativeOp::ConditionalZ { site: left, id });
        self.ops.push(NativeOp::ConditionalZ { site: right, id });

        let qa = self.occupant[slot];
        let qb = self.occupant[slot + 1];
        self.occupant[slot] = qb;
        self.occupant[slot + 1] = qa;
        if let Some(q) = qb {
            self.slot_of[q] = slot;
        }
        if let Some(q) = qa {
            self.slot_of[q] = slot + 1;
        }
    }

    /// CZ between the occupants of (slot, slot + 1) with no net frame
    /// change: (S x S)(I x H) F (Rx(-pi/2) x I) F (I x H) = e^{i pi/4} CZ,
    /// with F the corrected native gate on the pair.
    fn cz_macro(&mut self, slot: usize) {
        let left = self.layout.comp_site(slot);
        let right = self.layout.comp_site(slot + 1);
        self.rot(right, hadamard());
        self.native(slot);
        self.rot(left, rx(-FRAC_PI_2));
        self.native(slot);
        self.rot(right, hadamard());
        self.rot(left, s_gate());
        self.rot(right, s_gate());
    }

    /// Pure exchange of the occupants of (slot, slot + 1): the native CP
    /// is cancelled by the CZ macro, leaving only the frame transposition.
    fn swap_macro(&mut self, slot: usize) {
        self.native(slot);
        self.cz_macro(slot);
    }

    fn lower_cz(&mut self, a: usize, b: usize) {
        let sa = self.slot_of[a].min(self.slot_of[b]);
        let sb = self.slot_of[a].max(self.slot_of[b]);
        if sb == sa + 1 {
            self.native(sa);
            return;
        }
        // bring the lower operand next to the upper one without touching
        // bystanders, apply the payload, and walk the displaced operand
        // back down the same corridor
        for k in sa..sb - 1 {
            self.swap_macro(k);
        }
        self.native(sb - 1);
        for k in (sa..sb - 1).rev() {
            self.swap_macro(k);
        }
    }

    fn lower_cu(&mut self, control: usize, target: usize, u: &CMatrix) -> Result<()> {
        let (a_mat, b_mat) = decompose_controlled_u(u)?;
        let theta = controlled_u_phase(u, &a_mat, &b_mat);
        let phase_fix = phase_gate(theta);

        if is_identity(&a_mat) && is_identity(&b_mat) {
            // U proportional to the identity: only the control picks up a
            // phase
            if !is_identity(&phase_fix) {
                self.rot_on_qubit(control, phase_fix);
            }
            return Ok(());
        }

        if !is_identity(&a_mat) {
            self.rot_on_qubit(target, a_mat.clone());
        }
        self.lower_cz(control, target);
        self.rot_on_qubit(target, b_mat.clone());
        self.lower_cz(control, target);
        let closing = a_mat.adjoint() * b_mat.adjoint();
        if !is_identity(&closing) {
            self.rot_on_qubit(target, closing);
        }
        if !is_identity(&phase_fix) {
            self.rot_on_qubit(control, phase_fix);
        }
        Ok(())
    }

    fn finish(self) -> Result<(NativeSchedule, Frame)> {
        let frame = Frame {
            permutation: self
                .slot_of
                .iter()
                .map(|slot| self.layout.comp_site(*slot))
                .collect(),
            outcome_log: Vec::new(),
        };
        let schedule = NativeSchedule::new(self.layout, self.ops)?;
        Ok((schedule, frame))
    }
}

fn is_identity(u: &CMatrix) -> bool {
    let id = CMatrix::identity(2, 2);
    (0..2)
        .flat_map(|r| (0..2).map(move |col| (r, col)))
        .all(|(r, col)| (u[(r, col)] - id[(r, col)]).norm() <= 1e-12)
}
