//! Polariton qubits: the |n+-> basis of a single atom-cavity site, the
//! isometry from the logical qubit register onto the lower-polariton
//! subspace of the lattice, the effective XY model, and numerical checks of
//! how faithful that reduction is.
//!
//! Logical encoding per site: |0> = |g, 0>, |1> = |1-> = (|g,1> - |e,0>)/sqrt(2).

use crate::dynamics::{evolve_unitary, gate_time, QuantumState};
use crate::error::{Error, Result};
use crate::jch_model::{
    build_jch_hamiltonian_with_cap, build_sector_hamiltonian, chain_bonds, Boundary, Sector,
    SectorBasis, SystemParams,
};
use crate::operators::{embed, pauli, Operator, PauliLabel};
use crate::tolerances;
use crate::{c, CMatrix, CVector};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolaritonSign {
    Plus,
    Minus,
}

/// |n+-> = (|g,n> +- |e,n-1>)/sqrt(2) on one site (dimension 2 (n_max + 1)).
pub fn polariton_state(n: usize, sign: PolaritonSign, n_max: usize) -> Result<CVector> {
    if n < 1 || n > n_max {
        return Err(Error::InvalidParameter(format!(
            "polariton index n = {} out of range 1..={}",
            n, n_max
        )));
    }
    let nph = n_max + 1;
    let mut v = CVector::zeros(2 * nph);
    let s = 1.0 / 2f64.sqrt();
    v[n] = c(s);
    v[nph + n - 1] = match sign {
        PolaritonSign::Plus => c(s),
        PolaritonSign::Minus => c(-s),
    };
    Ok(v)
}

/// Lower-polariton energy of the n = 1 manifold at resonance, omega_d - g.
/// In the rotating frame this is simply -g.
pub fn lower_polariton_energy(params: &SystemParams) -> f64 {
    params.omega_d - params.g
}

/// Isometry from the 2^N logical register into the full lattice space.
#[derive(Debug, Clone)]
pub struct PolaritonMap {
    pub params: SystemParams,
    /// full_dim x 2^N matrix; column l is the product state encoding the
    /// logical basis state l (qubit 0 = site 0 = most significant bit).
    pub isometry: CMatrix,
}

impl PolaritonMap {
    pub fn logical_dim(&self) -> usize {
        self.isometry.ncols()
    }

    pub fn full_dim(&self) -> usize {
        self.isometry.nrows()
    }

    /// V |logical>.
    pub fn embed_state(&self, logical: &CVector) -> CVector {
        &self.isometry * logical
    }

    /// V^dagger |full>; the result is unnormalized, its lost norm is leakage.
    pub fn project_state(&self, full: &CVector) -> CVector {
        self.isometry.adjoint() * full
    }

    pub fn isometry_residual(&self) -> f64 {
        let gram = self.isometry.adjoint() * &self.isometry;
        let n = gram.nrows();
        (gram - CMatrix::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn build_polariton_map(params: &SystemParams) -> Result<PolaritonMap> {
    build_polariton_map_with_cap(params, tolerances::DEFAULT_DIM_CAP)
}

pub fn build_polariton_map_with_cap(params: &SystemParams, cap: usize) -> Result<PolaritonMap> {
    params.validate()?;
    if !params.is_resonant() {
        return Err(Error::UnsupportedConfiguration(
            "polariton qubits require resonance (omega_0 = omega_d); detuned weights are not +-1/sqrt(2)"
                .into(),
        ));
    }
    let full_dim = params
        .full_dim()
        .ok_or_else(|| Error::ResourceLimit("full dimension overflows usize".into()))?;
    if full_dim > cap {
        return Err(Error::ResourceLimit(format!(
            "full dimension {} exceeds cap {}",
            full_dim, cap
        )));
    }
    let n = params.n_sites;
    let nph = params.n_max + 1;
    let mut zero_site = CVector::zeros(2 * nph);
    zero_site[0] = c(1.0);
    let one_site = polariton_state(1, PolaritonSign::Minus, params.n_max)?;

    let logical_dim = 1usize << n;
    let mut v = CMatrix::zeros(full_dim, logical_dim);
    for l in 0..logical_dim {
        let mut col = CVector::from_element(1, c(1.0));
        for site in 0..n {
            let bit = (l >> (n - 1 - site)) & 1;
            let site_vec = if bit == 0 { &zero_site } else { &one_site };
            col = kron_vec(&col, site_vec);
        }
        v.set_column(l, &col);
    }
    Ok(PolaritonMap {
        params: *params,
        isometry: v,
    })
}

fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let mut out = CVector::zeros(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// H = J sum_bonds (sigma^x sigma^x + sigma^y sigma^y) on 2^N.
pub fn effective_xy_hamiltonian(j: f64, n: usize, boundary: Boundary) -> Result<Operator> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "XY model needs at least two qubits".into(),
        ));
    }
    let dim = 1usize
        .checked_shl(n as u32)
        .filter(|&d| d <= tolerances::DEFAULT_DIM_CAP)
        .ok_or_else(|| Error::ResourceLimit(format!("2^{} exceeds the dimension cap", n)))?;
    let dims = vec![2usize; n];
    let x = pauli(PauliLabel::X);
    let y = pauli(PauliLabel::Y);
    let mut h = CMatrix::zeros(dim, dim);
    for (k, l) in chain_bonds(n, boundary) {
        let xx = &embed(&x, k, &dims)?.matrix * &embed(&x, l, &dims)?.matrix;
        let yy = &embed(&y, k, &dims)?.matrix * &embed(&y, l, &dims)?.matrix;
        h += (xx + yy) * c(j);
    }
    Operator::new(h, dims)
}

/// Fitted hopping coefficient of the lower-polariton band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCoupling {
    /// Coefficient of sum (sigma+ sigma- + sigma- sigma+) in the fitted model.
    pub t_eff: f64,
    /// Coefficient of sum (sigma^x sigma^x + sigma^y sigma^y); exactly t_eff / 2.
    pub j_xy: f64,
}

/// Extracts t_eff from the symmetric/antisymmetric splitting of the
/// one-excitation sector of a two-site chain: t_eff = |E_anti - E_sym| / 2,
/// with eigenvectors identified by overlap with the two lower-polariton
/// combinations.
pub fn fit_effective_coupling(params: &SystemParams) -> Result<EffectiveCoupling> {
    params.validate()?;
    if !params.is_resonant() {
        return Err(Error::UnsupportedConfiguration(
            "effective-coupling fit requires resonance".into(),
        ));
    }
    if params.n_max < 2 {
        return Err(Error::InvalidParameter(
            "effective-coupling fit requires n_max >= 2".into(),
        ));
    }
    if params.a_hop == 0.0 {
        return Ok(EffectiveCoupling {
            t_eff: 0.0,
            j_xy: 0.0,
        });
    }
    // the fit itself always runs on an open two-site chain
    let two = SystemParams {
        n_sites: 2,
        boundary: Boundary::Open,
        kappa: 0.0,
        gamma: 0.0,
        ..*params
    };
    let basis = SectorBasis::new(&two, Sector::ExcitationExactly(1))?;
    let h = build_sector_hamiltonian(&two, &basis)?;
    let eig = nalgebra::SymmetricEigen::new(h);

    let s = 1.0 / 2f64.sqrt();
    // |1->|g0> and |g0>|1-> in sector coordinates
    let mut lp_left = CVector::zeros(basis.dim());
    lp_left[basis.index_of(&[1, 0]).unwrap()] = c(s);
    lp_left[basis.index_of(&[(params.n_max + 1) as u8, 0]).unwrap()] = c(-s);
    let mut lp_right = CVector::zeros(basis.dim());
    lp_right[basis.index_of(&[0, 1]).unwrap()] = c(s);
    lp_right[basis.index_of(&[0, (params.n_max + 1) as u8]).unwrap()] = c(-s);
    let sym = (&lp_left + &lp_right) * c(s);
    let anti = (&lp_left - &lp_right) * c(s);

    let identify = |target: &CVector| -> Result<f64> {
        let mut best = (0.0f64, 0usize);
        for j in 0..basis.dim() {
            let ov = eig.eigenvectors.column(j).dotc(target).norm_sqr();
            if ov > best.0 {
                best = (ov, j);
            }
        }
        if best.0 + 1e-12 < tolerances::FIT_OVERLAP_MIN {
            return Err(Error::FitFailure(format!(
                "lower-polariton combination overlaps at most {:.3} with any eigenvector",
                best.0
            )));
        }
        Ok(eig.eigenvalues[best.1])
    };
    let e_sym = identify(&sym)?;
    let e_anti = identify(&anti)?;
    let t_eff = 0.5 * (e_anti - e_sym).abs();
    Ok(EffectiveCoupling {
        t_eff,
        j_xy: t_eff / 2.0,
    })
}

/// Physical duration of the native two-qubit gate, pi / (sqrt(2) t_eff);
/// equals gate_time(j_xy) in the XY normalization.
pub fn physical_gate_time(coupling: &EffectiveCoupling) -> Result<f64> {
    if coupling.t_eff == 0.0 {
        return Err(Error::InvalidParameter(
            "gate time diverges at zero effective coupling".into(),
        ));
    }
    gate_time(coupling.j_xy)
}

/// How far the full lattice evolution strays from the effective XY model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionReport {
    /// 1 - |<psi_eff | P psi_full>|^2 / ||P psi_full||^2.
    pub infidelity: f64,
    /// 1 - ||P psi_full||^2: population outside the polariton qubit subspace.
    pub leakage: f64,
    pub t_eff: f64,
}

/// Evolves a logical state under both the full lattice model and the fitted
/// XY model for time `t` and compares, after removing the single-site
/// lower-polariton phase (the XY model lives in the interaction picture
/// with respect to the free polariton energy).
pub fn reduction_infidelity(
    params: &SystemParams,
    t: f64,
    initial_logical: &QuantumState,
) -> Result<ReductionReport> {
    reduction_infidelity_with_cap(params, t, initial_logical, tolerances::DEFAULT_DIM_CAP)
}

pub fn reduction_infidelity_with_cap(
    params: &SystemParams,
    t: f64,
    initial_logical: &QuantumState,
    cap: usize,
) -> Result<ReductionReport> {
    params.validate()?;
    let map = build_polariton_map_with_cap(params, cap)?;
    if initial_logical.dim() != map.logical_dim() {
        return Err(Error::InvalidParameter(format!(
            "logical state dimension {} does not match 2^{}",
            initial_logical.dim(),
            params.n_sites
        )));
    }
    let coupling = fit_effective_coupling(params)?;

    let h_full = build_jch_hamiltonian_with_cap(params, cap)?;
    let psi_full0 = QuantumState::new(map.embed_state(&initial_logical.amplitudes))?;
    let psi_full = evolve_unitary(&h_full, &psi_full0, t)?;
    let mut projected = map.project_state(&psi_full.amplitudes);
    let captured = projected.norm_squared();
    let leakage = (1.0 - captured).clamp(0.0f64, 1.0);

    // undo the free polariton phase exp(-i E_lp m t) per logical component
    let e_lp = lower_polariton_energy(params);
    for l in 0..projected.len() {
        let m = (l as u64).count_ones() as f64;
        projected[l] *= Complex64::from_polar(1.0, e_lp * m * t);
    }

    let psi_eff = if coupling.j_xy == 0.0 {
        initial_logical.clone()
    } else {
        let h_eff = effective_xy_hamiltonian(coupling.j_xy, params.n_sites, params.boundary)?;
        evolve_unitary(&h_eff, initial_logical, t)?
    };
    let overlap = psi_eff.amplitudes.dotc(&projected).norm_sqr();
    let fidelity = if captured > 0.0 {
        overlap / captured
    } else {
        0.0
    };
    Ok(ReductionReport {
        infidelity: (1.0 - fidelity).clamp(0.0, 1.0),
        leakage,
        t_eff: coupling.t_eff,
    })
}

/// Default duration used by reduction sweeps: one native gate time at the
/// fitted coupling.
pub fn reduction_gate_time(params: &SystemParams) -> Result<f64> {
    let coupling = fit_effective_coupling(params)?;
    if coupling.t_eff == 0.0 {
        return Err(Error::InvalidParameter(
            "gate time diverges at zero hopping".into(),
        ));
    }
    Ok(PI / (2f64.sqrt() * coupling.t_eff))
}
