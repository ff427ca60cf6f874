//! Jaynes-Cummings-Hubbard lattice construction: system parameters, the
//! coupled-cavity dispersion and Bloch transform, full-space Hamiltonians,
//! and excitation-sector restricted builders for larger chains.

use crate::error::{Error, Result};
use crate::operators::{embed, fock_ladder, kron, pauli, Operator, PauliLabel};
use crate::tolerances;
use crate::{c, CMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Physical parameters of the cavity chain.
///
/// Frequencies may be given absolutely (both positive) or in the resonant
/// rotating frame (`omega_d = omega_0 = 0`), where only `g`, `a_hop`, `kappa`
/// and `gamma` set time scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Number of cavities N.
    pub n_sites: usize,
    /// Cavity frequency.
    pub omega_d: f64,
    /// Atomic transition frequency.
    pub omega_0: f64,
    /// Atom-photon coupling.
    pub g: f64,
    /// Photon hopping amplitude between neighboring cavities.
    pub a_hop: f64,
    /// Photon cutoff per site.
    pub n_max: usize,
    /// Cavity decay rate.
    pub kappa: f64,
    /// Atom decay rate.
    pub gamma: f64,
    pub boundary: Boundary,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            n_sites: 3,
            omega_d: 0.0,
            omega_0: 0.0,
            g: 1.0,
            a_hop: 0.01,
            n_max: 2,
            kappa: 0.0,
            gamma: 0.0,
            boundary: Boundary::Open,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 1 {
            return Err(Error::InvalidParameter("n_sites must be >= 1".into()));
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be >= 1".into()));
        }
        for (name, v) in [
            ("omega_d", self.omega_d),
            ("omega_0", self.omega_0),
            ("g", self.g),
            ("a_hop", self.a_hop),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{} must be finite", name)));
            }
        }
        if self.g < 0.0 || self.a_hop < 0.0 || self.kappa < 0.0 || self.gamma < 0.0 {
            return Err(Error::InvalidParameter(
                "g, a_hop, kappa, gamma must be non-negative".into(),
            ));
        }
        let rotating = self.omega_d == 0.0 && self.omega_0 == 0.0;
        let absolute = self.omega_d > 0.0 && self.omega_0 > 0.0;
        if !rotating && !absolute {
            return Err(Error::InvalidParameter(
                "omega_d and omega_0 must both be zero (rotating frame) or both positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        self.omega_d == self.omega_0
    }

    /// Dimension of one site, 2 (n_max + 1).
    pub fn site_dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn site_dims(&self) -> Vec<usize> {
        vec![self.site_dim(); self.n_sites]
    }

    /// Full lattice dimension, or None on overflow.
    pub fn full_dim(&self) -> Option<usize> {
        self.site_dim()
            .checked_pow(u32::try_from(self.n_sites).ok()?)
    }

    /// Nearest-neighbor bonds as ordered site pairs (k, k+1).
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        chain_bonds(self.n_sites, self.boundary)
    }
}

/// Nearest-neighbor bonds of a chain. Periodic chains include the
/// wrap-around bond; for N = 2 this doubles the (0,1) coupling, matching the
/// dispersion relation, and N = 1 periodic has no bonds at all.
pub fn chain_bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    match boundary {
        Boundary::Open => (0..n_sites.saturating_sub(1)).map(|k| (k, k + 1)).collect(),
        Boundary::Periodic => {
            if n_sites < 2 {
                Vec::new()
            } else {
                (0..n_sites).map(|k| (k, (k + 1) % n_sites)).collect()
            }
        }
    }
}

/// Coupled-cavity dispersion omega(k) = omega_d + 2 A cos(2 pi k / N).
pub fn dispersion(k: usize, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    if params.boundary != Boundary::Periodic {
        return Err(Error::UnsupportedConfiguration(
            "dispersion is defined for periodic chains only".into(),
        ));
    }
    if k >= params.n_sites {
        return Err(Error::InvalidParameter(format!(
            "mode index {} out of range for N = {}",
            k, params.n_sites
        )));
    }
    let phase = 2.0 * PI * k as f64 / params.n_sites as f64;
    Ok(params.omega_d + 2.0 * params.a_hop * phase.cos())
}

/// Discrete Fourier matrix U[k][m] = exp(-2 pi i k m / N) / sqrt(N)
/// connecting localized and traveling photon modes.
pub fn bloch_transform(n: usize) -> Result<Operator> {
    if n < 1 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut u = CMatrix::zeros(n, n);
    for k in 0..n {
        for m in 0..n {
            let phase = -2.0 * PI * (k * m) as f64 / n as f64;
            u[(k, m)] = Complex64::from_polar(norm, phase);
        }
    }
    Operator::new(u, vec![n])
}

/// One-photon-sector hopping matrix (atoms ground, g = 0): N x N with
/// omega_d on the diagonal and a_hop on each bond. Basis index = photon site.
pub fn one_photon_hopping_matrix(params: &SystemParams) -> CMatrix {
    let n = params.n_sites;
    let mut h = CMatrix::from_diagonal_element(n, n, c(params.omega_d));
    for (k, l) in params.bonds() {
        h[(k, l)] += c(params.a_hop);
        h[(l, k)] += c(params.a_hop);
    }
    h
}

/// Single-site JC Hamiltonian on the atom (slow) x photon (fast) space:
/// omega_d a^dagger a + omega_0 |e><e| + g (a^dagger sigma- + a sigma+).
pub fn jc_site_hamiltonian(params: &SystemParams) -> Result<Operator> {
    let (a, adag) = fock_ladder(params.n_max)?;
    let nph = params.n_max + 1;
    let id2 = CMatrix::identity(2, 2);
    let num = &adag.matrix * &a.matrix;
    let mut ee = CMatrix::zeros(2, 2);
    ee[(1, 1)] = c(1.0);
    let sm = pauli(PauliLabel::Minus).matrix;
    let sp = pauli(PauliLabel::Plus).matrix;

    let mut h = kron(&id2, &num) * c(params.omega_d);
    h += kron(&ee, &CMatrix::identity(nph, nph)) * c(params.omega_0);
    h += (kron(&sm, &adag.matrix) + kron(&sp, &a.matrix)) * c(params.g);
    Operator::new(h, vec![2 * nph])
}

/// Full JCH Hamiltonian on (2 (n_max + 1))^N, with the crate default
/// dimension cap.
pub fn build_jch_hamiltonian(params: &SystemParams) -> Result<Operator> {
    build_jch_hamiltonian_with_cap(params, tolerances::DEFAULT_DIM_CAP)
}

pub fn build_jch_hamiltonian_with_cap(params: &SystemParams, cap: usize) -> Result<Operator> {
    params.validate()?;
    let dim = params.full_dim().ok_or_else(|| {
        Error::ResourceLimit(format!(
            "full dimension overflows for N = {}, n_max = {}",
            params.n_sites, params.n_max
        ))
    })?;
    if dim > cap {
        return Err(Error::ResourceLimit(format!(
            "full dimension {} exceeds cap {}",
            dim, cap
        )));
    }
    let dims = params.site_dims();
    let site_h = jc_site_hamiltonian(params)?;
    let (a, adag) = fock_ladder(params.n_max)?;
    let id2 = CMatrix::identity(2, 2);
    let a_site = Operator::new(kron(&id2, &a.matrix), vec![params.site_dim()])?;
    let adag_site = Operator::new(kron(&id2, &adag.matrix), vec![params.site_dim()])?;

    let mut h = CMatrix::zeros(dim, dim);
    for k in 0..params.n_sites {
        h += &embed(&site_h, k, &dims)?.matrix;
    }
    for (k, l) in params.bonds() {
        let hop = &embed(&adag_site, k, &dims)?.matrix * &embed(&a_site, l, &dims)?.matrix;
        h += (&hop + hop.adjoint()) * c(params.a_hop);
    }
    let op = Operator::new(h, dims)?;
    op.require_hermitian()?;
    Ok(op)
}

/// Total-excitation operator N_exc = sum_k (a^dagger a + |e><e|)_k.
pub fn total_excitation_operator(params: &SystemParams) -> Result<Operator> {
    let dims = params.site_dims();
    let nph = params.n_max + 1;
    let mut local = CMatrix::zeros(params.site_dim(), params.site_dim());
    let space = crate::operators::LocalSpace::new(params.n_max);
    for atom in 0..2 {
        for n in 0..nph {
            let i = space.index(atom, n);
            local[(i, i)] = c((atom + n) as f64);
        }
    }
    let local = Operator::new(local, vec![params.site_dim()])?;
    let dim: usize = dims.iter().product();
    let mut m = CMatrix::zeros(dim, dim);
    for k in 0..params.n_sites {
        m += &embed(&local, k, &dims)?.matrix;
    }
    Operator::new(m, dims)
}

/// Single-site resonant-or-detuned JC spectrum as (energy, excitation number),
/// sorted by energy.
pub fn jc_single_site_spectrum(params: &SystemParams) -> Result<Vec<(f64, usize)>> {
    if params.n_sites != 1 {
        return Err(Error::InvalidParameter(
            "single-site spectrum requires N = 1".into(),
        ));
    }
    params.validate()?;
    let h = jc_site_hamiltonian(params)?;
    let eig = nalgebra::SymmetricEigen::new(h.matrix.clone());
    let space = crate::operators::LocalSpace::new(params.n_max);
    let mut out: Vec<(f64, usize)> = Vec::with_capacity(h.dim());
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(j);
        let mut exc = 0.0;
        for atom in 0..2 {
            for n in 0..=params.n_max {
                let i = space.index(atom, n);
                exc += v[i].norm_sqr() * (atom + n) as f64;
            }
        }
        out.push((e, exc.round() as usize));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// Collapse-operator list for the full lattice: (kappa, a_k) and
/// (gamma, sigma-_k) per site, zero-rate entries omitted. The rate multiplies
/// the whole dissipator, i.e. L = a with prefactor kappa.
pub fn standard_collapse_ops(params: &SystemParams) -> Result<Vec<(f64, Operator)>> {
    params.validate()?;
    let dims = params.site_dims();
    let (a, _) = fock_ladder(params.n_max)?;
    let id2 = CMatrix::identity(2, 2);
    let nph = params.n_max + 1;
    let a_site = Operator::new(kron(&id2, &a.matrix), vec![params.site_dim()])?;
    let sm_site = Operator::new(
        kron(
            &pauli(PauliLabel::Minus).matrix,
            &CMatrix::identity(nph, nph),
        ),
        vec![params.site_dim()],
    )?;
    let mut ops = Vec::new();
    for k in 0..params.n_sites {
        if params.kappa > 0.0 {
            ops.push((params.kappa, embed(&a_site, k, &dims)?));
        }
        if params.gamma > 0.0 {
            ops.push((params.gamma, embed(&sm_site, k, &dims)?));
        }
    }
    Ok(ops)
}

/// Excitation sectors for restricted builders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Total excitation number exactly m.
    ExcitationExactly(usize),
    /// Total excitation number at most m; invariant under lowering operators.
    ExcitationAtMost(usize),
    /// All atoms in |g> with exactly one photon; the lattice's photonic band.
    OnePhotonAtomsGround,
}

/// An ordered basis for an excitation sector. States are stored as per-site
/// local indices (atom * (n_max + 1) + n), site 0 first, sorted
/// lexicographically, which coincides with ascending full-space index.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub n_max: usize,
    pub sector: Sector,
    states: Vec<Vec<u8>>,
}

impl SectorBasis {
    pub fn new(params: &SystemParams, sector: Sector) -> Result<Self> {
        params.validate()?;
        let nph = params.n_max + 1;
        let site_dim = 2 * nph;
        let exc_of = |local: u8| -> usize {
            let local = local as usize;
            local / nph + local % nph
        };
        let max_exc = match sector {
            Sector::ExcitationExactly(m) | Sector::ExcitationAtMost(m) => m,
            Sector::OnePhotonAtomsGround => 1,
        };
        let mut states = Vec::new();
        let mut cur = vec![0u8; params.n_sites];
        // depth-first enumeration in lexicographic order
        #[allow(clippy::too_many_arguments)]
        fn rec(
            site: usize,
            exc_so_far: usize,
            cur: &mut Vec<u8>,
            states: &mut Vec<Vec<u8>>,
            site_dim: usize,
            nph: usize,
            max_exc: usize,
            sector: &Sector,
            exc_of: &dyn Fn(u8) -> usize,
        ) {
            if site == cur.len() {
                let keep = match sector {
                    Sector::ExcitationExactly(m) => exc_so_far == *m,
                    Sector::ExcitationAtMost(m) => exc_so_far <= *m,
                    Sector::OnePhotonAtomsGround => {
                        exc_so_far == 1 && cur.iter().all(|&l| (l as usize) < nph)
                    }
                };
                if keep {
                    states.push(cur.clone());
                }
                return;
            }
            for local in 0..site_dim as u8 {
                let e = exc_of(local);
                if exc_so_far + e > max_exc {
                    continue;
                }
                cur[site] = local;
                rec(
                    site + 1,
                    exc_so_far + e,
                    cur,
                    states,
                    site_dim,
                    nph,
                    max_exc,
                    sector,
                    exc_of,
                );
            }
            cur[site] = 0;
        }
        rec(
            0,
            0,
            &mut cur,
            &mut states,
            site_dim,
            nph,
            max_exc,
            &sector,
            &exc_of,
        );
        if states.is_empty() {
            return Err(Error::InvalidParameter(
                "sector contains no basis states".into(),
            ));
        }
        Ok(SectorBasis {
            n_sites: params.n_sites,
            n_max: params.n_max,
            sector,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    /// Index of a state given per-site local indices, if in the sector.
    pub fn index_of(&self, locals: &[u8]) -> Option<usize> {
        self.states
            .binary_search_by(|s| s.as_slice().cmp(locals))
            .ok()
    }

    /// (atom, n) decomposition of the local index at `site` in state `i`.
    pub fn site_state(&self, i: usize, site: usize) -> (usize, usize) {
        let nph = self.n_max + 1;
        let l = self.states[i][site] as usize;
        (l / nph, l % nph)
    }

    /// Total excitation of basis state `i`.
    pub fn excitation(&self, i: usize) -> usize {
        (0..self.n_sites)
            .map(|k| {
                let (atom, n) = self.site_state(i, k);
                atom + n
            })
            .sum()
    }

    /// Full-space index of basis state `i` (site 0 slowest), if representable.
    pub fn full_index(&self, i: usize) -> Option<usize> {
        let d = 2 * (self.n_max + 1);
        let mut idx: usize = 0;
        for &l in &self.states[i] {
            idx = idx.checked_mul(d)?.checked_add(l as usize)?;
        }
        Some(idx)
    }
}

/// JCH Hamiltonian restricted to a sector, built from direct matrix elements
/// (never by composing sector-truncated factors). Moves whose target leaves
/// the basis are dropped, so the result is the compression P H P^dagger; for
/// excitation sectors this is the exact invariant block.
pub fn build_sector_hamiltonian(params: &SystemParams, basis: &SectorBasis) -> Result<CMatrix> {
    params.validate()?;
    if basis.n_sites != params.n_sites || basis.n_max != params.n_max {
        return Err(Error::InvalidParameter(
            "sector basis does not match system parameters".into(),
        ));
    }
    let nph = params.n_max + 1;
    let dim = basis.dim();
    let mut h = CMatrix::zeros(dim, dim);

    let bonds = params.bonds();
    let mut scratch: Vec<u8> = vec![0; params.n_sites];
    for col in 0..dim {
        let state = &basis.states()[col];
        // diagonal: omega_d sum n_k + omega_0 sum atoms
        let mut diag = 0.0;
        for &l in state.iter() {
            let l = l as usize;
            diag += params.omega_d * (l % nph) as f64 + params.omega_0 * (l / nph) as f64;
        }
        h[(col, col)] += c(diag);

        let push = |h: &mut CMatrix, target: &[u8], amp: f64| {
            if let Some(row) = basis.index_of(target) {
                h[(row, col)] += c(amp);
            }
        };

        for k in 0..params.n_sites {
            let l = state[k] as usize;
            let (atom, n) = (l / nph, l % nph);
            // g a^dagger sigma-: |e, n> -> |g, n+1>
            if atom == 1 && n + 1 < nph {
                scratch.copy_from_slice(state);
                scratch[k] = (n + 1) as u8;
                push(&mut h, &scratch, params.g * ((n + 1) as f64).sqrt());
            }
            // g a sigma+: |g, n> -> |e, n-1>
            if atom == 0 && n >= 1 {
                scratch.copy_from_slice(state);
                scratch[k] = (nph + n - 1) as u8;
                push(&mut h, &scratch, params.g * (n as f64).sqrt());
            }
        }
        for &(k, l) in &bonds {
            for (src, dst) in [(k, l), (l, k)] {
                let ls = state[src] as usize;
                let ld = state[dst] as usize;
                let (n_src, n_dst) = (ls % nph, ld % nph);
                // A a^dagger_dst a_src: move one photon src -> dst
                if n_src >= 1 && n_dst + 1 < nph {
                    scratch.copy_from_slice(state);
                    scratch[src] = (ls - 1) as u8;
                    scratch[dst] = (ld + 1) as u8;
                    let amp = params.a_hop * ((n_src as f64) * (n_dst + 1) as f64).sqrt();
                    push(&mut h, &scratch, amp);
                }
            }
        }
    }
    Ok(h)
}

/// Collapse operators restricted to an `ExcitationAtMost` sector (which is
/// invariant under lowering), as (rate, matrix) pairs matching
/// `standard_collapse_ops`.
pub fn build_sector_collapse_ops(
    params: &SystemParams,
    basis: &SectorBasis,
) -> Result<Vec<(f64, CMatrix)>> {
    params.validate()?;
    if !matches!(basis.sector, Sector::ExcitationAtMost(_)) {
        return Err(Error::UnsupportedConfiguration(
            "sector collapse operators require an excitation-at-most basis".into(),
        ));
    }
    let nph = params.n_max + 1;
    let dim = basis.dim();
    let mut ops = Vec::new();
    let mut scratch: Vec<u8> = vec![0; params.n_sites];
    for k in 0..params.n_sites {
        if params.kappa > 0.0 {
            let mut a_k = CMatrix::zeros(dim, dim);
            for col in 0..dim {
                let state = &basis.states()[col];
                let l = state[k] as usize;
                let n = l % nph;
                if n >= 1 {
                    scratch.copy_from_slice(state);
                    scratch[k] = (l - 1) as u8;
                    if let Some(row) = basis.index_of(&scratch) {
                        a_k[(row, col)] = c((n as f64).sqrt());
                    }
                }
            }
            ops.push((params.kappa, a_k));
        }
        if params.gamma > 0.0 {
            let mut sm_k = CMatrix::zeros(dim, dim);
            for col in 0..dim {
                let state = &basis.states()[col];
                let l = state[k] as usize;
                if l / nph == 1 {
                    scratch.copy_from_slice(state);
                    scratch[k] = (l - nph) as u8;
                    if let Some(row) = basis.index_of(&scratch) {
                        sm_k[(row, col)] = c(1.0);
                    }
                }
            }
            ops.push((params.gamma, sm_k));
        }
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn maxdiff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn sorted_eigs(h: &CMatrix) -> Vec<f64> {
        let mut e: Vec<f64> = nalgebra::SymmetricEigen::new(h.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn ring8() -> SystemParams {
        SystemParams {
            n_sites: 8,
            omega_d: 1.0,
            omega_0: 1.0,
            a_hop: 0.01,
            g: 0.0,
            n_max: 1,
            boundary: Boundary::Periodic,
            ..Default::default()
        }
    }

    #[test]
    fn dispersion_examples() {
        let p = ring8();
        assert_abs_diff_eq!(dispersion(2, &p).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dispersion(0, &p).unwrap(), 1.02, epsilon = 1e-14);
        assert_abs_diff_eq!(dispersion(4, &p).unwrap(), 0.98, epsilon = 1e-14);
        assert!(matches!(dispersion(8, &p), Err(Error::InvalidParameter(_))));
        let open = SystemParams {
            boundary: Boundary::Open,
            ..p
        };
        assert!(matches!(
            dispersion(0, &open),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn dispersion_matches_hopping_spectrum() {
        let p = ring8();
        let mut want: Vec<f64> = (0..8).map(|k| dispersion(k, &p).unwrap()).collect();
        want.sort_by(f64::total_cmp);
        let got = sorted_eigs(&one_photon_hopping_matrix(&p));
        for (a, b) in got.iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn bloch_small_cases() {
        let u1 = bloch_transform(1).unwrap();
        assert_eq!(u1.matrix[(0, 0)], c(1.0));
        let u2 = bloch_transform(2).unwrap().matrix;
        let s = 1.0 / 2f64.sqrt();
        let want = CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]);
        assert!(maxdiff(&u2, &want) < 1e-15);
        assert!(matches!(
            bloch_transform(0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn bloch_diagonalizes_hopping() {
        let p = SystemParams {
            n_sites: 4,
            omega_d: 1.0,
            omega_0: 1.0,
            a_hop: 0.05,
            g: 0.0,
            n_max: 1,
            boundary: Boundary::Periodic,
            ..Default::default()
        };
        let u = bloch_transform(4).unwrap().matrix;
        let h = one_photon_hopping_matrix(&p);
        let d = &u * h * u.adjoint();
        let want = [1.1, 1.0, 0.9, 1.0];
        for k in 0..4 {
            assert_abs_diff_eq!(d[(k, k)].re, want[k], epsilon = 1e-12);
            for m in 0..4 {
                if m != k {
                    assert!(d[(k, m)].norm() < 1e-12, "off-diagonal must vanish");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn bloch_unitary_up_to_64(n in 1usize..=64) {
            let u = bloch_transform(n).unwrap().matrix;
            let resid = maxdiff(&(&u * u.adjoint()), &CMatrix::identity(n, n));
            prop_assert!(resid < 1e-12);
        }
    }

    #[test]
    fn jch_detuned_decoupled_spectrum() {
        let p = SystemParams {
            n_sites: 1,
            omega_d: 1.0,
            omega_0: 0.9,
            g: 0.0,
            a_hop: 0.0,
            n_max: 1,
            ..Default::default()
        };
        let h = build_jch_hamiltonian(&p).unwrap();
        let got = sorted_eigs(&h.matrix);
        for (a, b) in got.iter().zip(&[0.0, 0.9, 1.0, 1.9]) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn jch_resonant_polariton_splitting() {
        let p = SystemParams {
            n_sites: 1,
            omega_d: 1.0,
            omega_0: 1.0,
            g: 0.1,
            a_hop: 0.0,
            n_max: 1,
            ..Default::default()
        };
        let eigs = sorted_eigs(&build_jch_hamiltonian(&p).unwrap().matrix);
        assert!(eigs.iter().any(|e| (e - 0.9).abs() < 1e-12));
        assert!(eigs.iter().any(|e| (e - 1.1).abs() < 1e-12));
    }

    #[test]
    fn jch_commutes_with_total_excitation() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let p = SystemParams {
                n_sites: 2,
                omega_d: 1.3,
                omega_0: 0.8,
                g: 0.7,
                a_hop: 0.21,
                n_max: 2,
                boundary,
                ..Default::default()
            };
            let h = build_jch_hamiltonian(&p).unwrap();
            let nexc = total_excitation_operator(&p).unwrap();
            let comm = &h.matrix * &nexc.matrix - &nexc.matrix * &h.matrix;
            assert!(comm.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
            assert!(h.hermiticity_residual() < 1e-12);
        }
    }

    #[test]
    fn jch_dimension_cap() {
        let p = SystemParams {
            n_sites: 8,
            n_max: 2,
            ..Default::default()
        };
        assert!(matches!(
            build_jch_hamiltonian(&p),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn single_site_spectrum_examples() {
        let p = SystemParams {
            n_sites: 1,
            omega_d: 1.0,
            omega_0: 1.0,
            g: 0.1,
            a_hop: 0.0,
            n_max: 2,
            ..Default::default()
        };
        let spec = jc_single_site_spectrum(&p).unwrap();
        let energies: Vec<f64> = spec.iter().map(|x| x.0).collect();
        for want in [0.9, 1.1, 2.0 - 0.1 * 2f64.sqrt(), 2.0 + 0.1 * 2f64.sqrt()] {
            assert!(
                energies.iter().any(|e| (e - want).abs() < 1e-10),
                "missing polariton level {}",
                want
            );
        }
        // n = 1 levels carry excitation number 1, n = 2 levels carry 2
        for (e, exc) in &spec {
            if (e - 0.9).abs() < 1e-10 || (e - 1.1).abs() < 1e-10 {
                assert_eq!(*exc, 1);
            }
            if (e - (2.0 - 0.1 * 2f64.sqrt())).abs() < 1e-10 {
                assert_eq!(*exc, 2);
            }
        }
    }

    #[test]
    fn single_site_spectrum_no_coupling() {
        let p = SystemParams {
            n_sites: 1,
            omega_d: 1.0,
            omega_0: 1.0,
            g: 0.0,
            a_hop: 0.0,
            n_max: 2,
            ..Default::default()
        };
        let spec = jc_single_site_spectrum(&p).unwrap();
        // all splittings vanish: levels are n omega_d (+ omega_0 for excited atom)
        for (e, _) in &spec {
            assert!(
                (e - e.round()).abs() < 1e-12,
                "g = 0 spectrum must be integer multiples, got {}",
                e
            );
        }
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::default().validate().is_ok());
        let bad = SystemParams {
            n_sites: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemParams {
            n_max: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemParams {
            g: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SystemParams {
            omega_d: 1.0,
            omega_0: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err(), "mixed zero/positive frequencies");
    }

    #[test]
    fn sector_basis_counts() {
        let p = SystemParams {
            n_sites: 3,
            n_max: 2,
            ..Default::default()
        };
        // exc <= 2 over 3 JC sites: 1 + 6 + 18 = 25 states
        let b = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        assert_eq!(b.dim(), 25);
        let b1 = SectorBasis::new(&p, Sector::ExcitationExactly(1)).unwrap();
        assert_eq!(b1.dim(), 6);
        let bp = SectorBasis::new(&p, Sector::OnePhotonAtomsGround).unwrap();
        assert_eq!(bp.dim(), 3);
        for i in 0..b.dim() {
            assert!(b.excitation(i) <= 2);
            assert_eq!(b.index_of(&b.states()[i].clone()), Some(i));
        }
    }

    #[test]
    fn sector_matches_full_hamiltonian_block() {
        for (n_sites, boundary) in [
            (2, Boundary::Open),
            (3, Boundary::Open),
            (3, Boundary::Periodic),
        ] {
            let p = SystemParams {
                n_sites,
                g: 1.0,
                a_hop: 0.17,
                n_max: 2,
                boundary,
                ..Default::default()
            };
            let full = build_jch_hamiltonian(&p).unwrap();
            let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
            let hs = build_sector_hamiltonian(&p, &basis).unwrap();
            let mut want = CMatrix::zeros(basis.dim(), basis.dim());
            for i in 0..basis.dim() {
                for j in 0..basis.dim() {
                    want[(i, j)] =
                        full.matrix[(basis.full_index(i).unwrap(), basis.full_index(j).unwrap())];
                }
            }
            assert!(
                maxdiff(&hs, &want) < 1e-14,
                "sector builder must reproduce the full-space block exactly"
            );
        }
    }

    #[test]
    fn sector_collapse_ops_match_full_restriction() {
        let p = SystemParams {
            n_sites: 2,
            g: 1.0,
            a_hop: 0.1,
            n_max: 2,
            kappa: 0.003,
            gamma: 0.001,
            ..Default::default()
        };
        let basis = SectorBasis::new(&p, Sector::ExcitationAtMost(2)).unwrap();
        let sector_ops = build_sector_collapse_ops(&p, &basis).unwrap();
        let full_ops = standard_collapse_ops(&p).unwrap();
        assert_eq!(sector_ops.len(), full_ops.len());
        for ((rs, ms), (rf, of)) in sector_ops.iter().zip(&full_ops) {
            assert_eq!(rs, rf);
            let mut want = CMatrix::zeros(basis.dim(), basis.dim());
            for i in 0..basis.dim() {
                for j in 0..basis.dim() {
                    want[(i, j)] =
                        of.matrix[(basis.full_index(i).unwrap(), basis.full_index(j).unwrap())];
                }
            }
            assert!(maxdiff(ms, &want) < 1e-14);
        }
    }

    #[test]
    fn one_photon_sector_matches_dispersion() {
        let p = ring8();
        let basis = SectorBasis::new(&p, Sector::OnePhotonAtomsGround).unwrap();
        assert_eq!(basis.dim(), 8);
        let hs = build_sector_hamiltonian(&p, &basis).unwrap();
        let got = sorted_eigs(&hs);
        let mut want: Vec<f64> = (0..8).map(|k| dispersion(k, &p).unwrap()).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn periodic_two_site_bond_doubles() {
        let p = SystemParams {
            n_sites: 2,
            omega_d: 1.0,
            omega_0: 1.0,
            g: 0.0,
            a_hop: 0.01,
            n_max: 1,
            boundary: Boundary::Periodic,
            ..Default::default()
        };
        // dispersion gives omega_d +/- 2A; the double bond reproduces that
        let got = sorted_eigs(&one_photon_hopping_matrix(&p));
        assert_abs_diff_eq!(got[0], 0.98, epsilon = 1e-12);
        assert_abs_diff_eq!(got[1], 1.02, epsilon = 1e-12);
    }
}
