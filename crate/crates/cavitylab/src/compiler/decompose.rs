//! Controlled-U synthesis: U = A† B† Z B Z A up to a global phase, so a
//! controlled-U needs only two CZ gates and single-qubit rotations.

use crate::error::{Error, Result};
use crate::tolerances::UNITARITY;
use crate::{c, ci, CMatrix};

use super::unitarity_residual;

/// SU(2) rotation by `theta` about the Bloch axis `axis` (not necessarily
/// normalized on input): cos(theta/2) I - i sin(theta/2) (n.sigma).
pub(crate) fn su2_rotation(axis: [f64; 3], theta: f64) -> CMatrix {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let (sin, cos) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[
            ci(cos, -sin * n[2]),
            ci(-sin * n[1], -sin * n[0]),
            ci(sin * n[1], -sin * n[0]),
            ci(cos, sin * n[2]),
        ],
    )
}

fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// Splits a 2x2 unitary U into rotations (A, B) with A† B† Z B Z A = U up
/// to a global phase.
///
/// The phase is stripped so the remainder V is in SU(2); V is a rotation
/// by phi about some axis m. B = Ry(phi/2) makes B† Z B Z a rotation by
/// -phi about the y axis, and conjugating by the rotation A that carries
/// -m onto y turns that into the rotation by phi about m.
pub fn decompose_controlled_u(u: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::InvalidParameter(format!(
            "expected a 2x2 unitary, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let residual = unitarity_residual(u);
    if residual > UNITARITY {
        return Err(Error::InvalidParameter(format!(
            "matrix is not unitary, residual {residual:.3e}"
        )));
    }

    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let root = det.sqrt();
    let v = u.map(|z| z / root);

    let cos_half = ((v[(0, 0)] + v[(1, 1)]).re / 2.0).clamp(-1.0, 1.0);
    let phi = 2.0 * cos_half.acos();
    let s = (phi / 2.0).sin();
    if s.abs() < 1e-9 {
        return Ok((identity2(), identity2()));
    }

    let m = [-v[(0, 1)].im / s, -v[(0, 1)].re / s, -v[(0, 0)].im / s];
    let norm = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    let src = [-m[0] / norm, -m[1] / norm, -m[2] / norm];

    let b = su2_rotation([0.0, 1.0, 0.0], phi / 2.0);

    // rotate src onto the y axis
    let cross = [-src[2], 0.0, src[0]];
    let cross_norm = (cross[0] * cross[0] + cross[2] * cross[2]).sqrt();
    let dot = src[1];
    let a = if cross_norm < 1e-12 {
        if dot > 0.0 {
            identity2()
        } else {
            su2_rotation([1.0, 0.0, 0.0], std::f64::consts::PI)
        }
    } else {
        su2_rotation(cross, dot.clamp(-1.0, 1.0).acos())
    };

    Ok((a, b))
}

/// A† B† Z B Z A, the unitary realized by the two-CZ sandwich when the
/// control is set.
pub fn reconstruct_controlled_u(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let z = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), -c(1.0)]);
    a.adjoint() * b.adjoint() * &z * b * &z * a
}

/// Residual global phase theta with e^{i theta} (A† B† Z B Z A) = U,
/// recovered as arg tr(M† U).
pub fn controlled_u_phase(u: &CMatrix, a: &CMatrix, b: &CMatrix) -> f64 {
    let m = reconstruct_controlled_u(a, b);
    (m.adjoint() * u).trace().arg()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_random_u2, rng_from_seed};

    fn reconstruction_error(u: &CMatrix) -> f64 {
        let (a, b) = decompose_controlled_u(u).unwrap();
        let theta = controlled_u_phase(u, &a, &b);
        let m = reconstruct_controlled_u(&a, &b) * ci(theta.cos(), theta.sin());
        (0..2)
            .flat_map(|r| (0..2).map(move |col| (r, col)))
            .map(|(r, col)| (m[(r, col)] - u[(r, col)]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_gives_trivial_rotations() {
        let (a, b) = decompose_controlled_u(&CMatrix::identity(2, 2)).unwrap();
        assert_eq!(a, CMatrix::identity(2, 2));
        assert_eq!(b, CMatrix::identity(2, 2));
    }

    #[test]
    fn y_rotation_example() {
        // U = e^{i pi Y / 4} = Ry(-pi/2): A = I, B = Ry(pi/4)
        let u = su2_rotation([0.0, 1.0, 0.0], -std::f64::consts::FRAC_PI_2);
        let (a, b) = decompose_controlled_u(&u).unwrap();
        let expected_b = su2_rotation([0.0, 1.0, 0.0], std::f64::consts::FRAC_PI_4);
        for r in 0..2 {
            for col in 0..2 {
                assert!((a[(r, col)] - CMatrix::identity(2, 2)[(r, col)]).norm() < 1e-12);
                assert!((b[(r, col)] - expected_b[(r, col)]).norm() < 1e-12);
            }
        }
        assert!(reconstruction_error(&u) < 1e-12);
    }

    #[test]
    fn named_gate_edge_cases() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), -c(1.0)]);
        let s = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), ci(0.0, 1.0)]);
        let phase = CMatrix::identity(2, 2) * ci(0.7f64.cos(), 0.7f64.sin());
        for u in [x, z, s, phase] {
            assert!(reconstruction_error(&u) < 1e-10);
        }
    }

    #[test]
    fn haar_random_round_trip() {
        let mut rng = rng_from_seed(1009);
        for _ in 0..100 {
            let u = haar_random_u2(&mut rng);
            assert!(reconstruction_error(&u) < 1e-8);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(2.0)]);
        assert!(matches!(
            decompose_controlled_u(&bad),
            Err(Error::InvalidParameter(_))
        ));
    }
}
