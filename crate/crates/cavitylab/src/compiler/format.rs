//! Line-oriented text formats for circuits and schedules. One instruction
//! per line, `#` starts a comment, indices are 0-based. Matrices are given
//! as eight floats: row-major real/imaginary pairs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

use super::{Circuit, Gate, Layout, NativeOp, NativeSchedule};

fn parse_err(line_no: usize, msg: impl Into<String>) -> Error {
    Error::Parse(format!("line {line_no}: {}", msg.into()))
}

fn parse_index(token: &str, line_no: usize, role: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|_| parse_err(line_no, format!("{role} index `{token}` is not an integer")))
}

fn parse_matrix(tokens: &[&str], line_no: usize) -> Result<CMatrix> {
    let mut values = [0.0f64; 8];
    for (slot, token) in values.iter_mut().zip(tokens) {
        *slot = token
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, format!("`{token}` is not a number")))?;
    }
    Ok(CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(values[0], values[1]),
            Complex64::new(values[2], values[3]),
            Complex64::new(values[4], values[5]),
            Complex64::new(values[6], values[7]),
        ],
    ))
}

fn matrix_fields(u: &CMatrix) -> String {
    let mut out = String::new();
    for r in 0..2 {
        for col in 0..2 {
            let z = u[(r, col)];
            out.push_str(&format!(" {} {}", z.re, z.im));
        }
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            None
        } else {
            Some((i + 1, stripped))
        }
    })
}

/// Parses the circuit format: `SQ <target> <8 floats>`, `CZ <a> <b>`,
/// `CU <control> <target> <8 floats>`. The qubit count is one past the
/// highest index mentioned.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut gates = Vec::new();
    let mut max_index = None::<usize>;
    for (line_no, line) in content_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let mut bump = |q: usize| {
            max_index = Some(max_index.map_or(q, |m| m.max(q)));
        };
        match tokens[0] {
            "SQ" => {
                if tokens.len() != 10 {
                    return Err(parse_err(line_no, "SQ takes a target and 8 floats"));
                }
                let target = parse_index(tokens[1], line_no, "target")?;
                bump(target);
                gates.push(Gate::SingleQubit {
                    target,
                    u: parse_matrix(&tokens[2..], line_no)?,
                });
            }
            "CZ" => {
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, "CZ takes two qubit indices"));
                }
                let a = parse_index(tokens[1], line_no, "first")?;
                let b = parse_index(tokens[2], line_no, "second")?;
                bump(a);
                bump(b);
                gates.push(Gate::Cz { a, b });
            }
            "CU" => {
                if tokens.len() != 11 {
                    return Err(parse_err(line_no, "CU takes control, target and 8 floats"));
                }
                let control = parse_index(tokens[1], line_no, "control")?;
                let target = parse_index(tokens[2], line_no, "target")?;
                bump(control);
                bump(target);
                gates.push(Gate::ControlledU {
                    control,
                    target,
                    u: parse_matrix(&tokens[3..], line_no)?,
                });
            }
            other => {
                return Err(parse_err(line_no, format!("unknown instruction `{other}`")));
            }
        }
    }
    Circuit::new(max_index.map_or(0, |m| m + 1), gates)
}

pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    for gate in &circuit.gates {
        match gate {
            Gate::SingleQubit { target, u } => {
                out.push_str(&format!("SQ {target}{}\n", matrix_fields(u)));
            }
            Gate::Cz { a, b } => {
                out.push_str(&format!("CZ {a} {b}\n"));
            }
            Gate::ControlledU { control, target, u } => {
                out.push_str(&format!("CU {control} {target}{}\n", matrix_fields(u)));
            }
        }
    }
    out
}

/// Parses the schedule format: `XY <s1> <s2> <s3>`, `MEAS <site> <id>`,
/// `ROT <site> <8 floats>`, `CONDZ <site> <meas-id>`. The layout is the
/// smallest chain containing every referenced site.
pub fn parse_schedule(text: &str) -> Result<NativeSchedule> {
    let mut ops = Vec::new();
    let mut min_comp = 1usize;
    for (line_no, line) in content_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        // a chain with num_comp computational sites has sites 0..2*num_comp-1
        let mut cover = |site: usize| {
            min_comp = min_comp.max(site / 2 + 1 + site % 2);
        };
        match tokens[0] {
            "XY" => {
                if tokens.len() != 4 {
                    return Err(parse_err(line_no, "XY takes three site indices"));
                }
                let left = parse_index(tokens[1], line_no, "left")?;
                let mediator = parse_index(tokens[2], line_no, "mediator")?;
                let right = parse_index(tokens[3], line_no, "right")?;
                cover(left);
                cover(mediator);
                cover(right);
                ops.push(NativeOp::XyEvolve {
                    left,
                    mediator,
                    right,
                });
            }
            "MEAS" => {
                if tokens.len() != 3 {
                    return Err(parse_err(line_no, "MEAS takes a site and an id"));
                }
                let site = parse_index(tokens[1], line_no, "site")?;
                let id = parse_index(tokens[2], line_no, "measurement")?;
                cover(site);
                ops.push(NativeOp::MeasureMediator { site, id });
            }
            "ROT" => {
                if tokens.len() != 10 {
                    return Err(parse_err(line_no, "ROT takes a site and 8 floats"));
                }
                let site = parse_index(tokens[1], line_no, "site")?;
                cover(site);
                ops.push(NativeOp::LocalRotation {
                    site,
                    u: parse_matrix(&tokens[2..], line_no)?,
                });
            }
            "CONDZ" => {
                if tokens.len() != 3 {
                    return Err(parse_err(
                        line_no,
                        "CONDZ takes a site and a measurement id",
                    ));
                }
                let site = parse_index(tokens[1], line_no, "site")?;
                let id = parse_index(tokens[2], line_no, "measurement")?;
                cover(site);
                ops.push(NativeOp::ConditionalZ { site, id });
            }
            other => {
                return Err(parse_err(line_no, format!("unknown instruction `{other}`")));
            }
        }
    }
    NativeSchedule::new(Layout { num_comp: min_comp }, ops)
}

pub fn serialize_schedule(schedule: &NativeSchedule) -> String {
    let mut out = String::new();
    for op in &schedule.ops {
        match op {
            NativeOp::XyEvolve {
                left,
                mediator,
                right,
            } => {
                out.push_str(&format!("XY {left} {mediator} {right}\n"));
            }
            NativeOp::MeasureMediator { site, id } => {
                out.push_str(&format!("MEAS {site} {id}\n"));
            }
            NativeOp::LocalRotation { site, u } => {
                out.push_str(&format!("ROT {site}{}\n", matrix_fields(u)));
            }
            NativeOp::ConditionalZ { site, id } => {
                out.push_str(&format!("CONDZ {site} {id}\n"));
            }
        }
    }
    out
}
