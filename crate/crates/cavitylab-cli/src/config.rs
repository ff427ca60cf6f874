//! Run configurations. Every config is a single JSON document with unknown
//! keys rejected; physical quantities are ratios to the hopping A (the
//! rotating-frame convention, g pinned to 1) unless an `absolute` block
//! spells all of them out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use cavitylab::dynamics::QuantumState;
use cavitylab::jch_model::{Boundary, SystemParams};
use cavitylab::{c, CVector, Error, Result};

pub fn load<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => load_required(p),
    }
}

pub fn load_required<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub n_sites: Option<usize>,
    pub n_max: Option<usize>,
    pub boundary: Option<Boundary>,
    pub g_over_a: Option<f64>,
    pub omega_d_over_a: Option<f64>,
    pub omega_0_over_a: Option<f64>,
    pub kappa_over_a: Option<f64>,
    pub gamma_over_a: Option<f64>,
    pub absolute: Option<SystemParams>,
}

impl ParamsConfig {
    pub fn resolve(&self) -> Result<SystemParams> {
        let ratios_given = self.g_over_a.is_some()
            || self.omega_d_over_a.is_some()
            || self.omega_0_over_a.is_some()
            || self.kappa_over_a.is_some()
            || self.gamma_over_a.is_some();
        let mut params = match self.absolute {
            Some(absolute) => {
                if ratios_given {
                    return Err(Error::InvalidParameter(
                        "give ratios to A or an absolute block, not both".into(),
                    ));
                }
                absolute
            }
            None => {
                let mut p = SystemParams::default();
                if let Some(ratio) = self.g_over_a {
                    if !ratio.is_finite() || ratio <= 0.0 {
                        return Err(Error::InvalidParameter(
                            "g_over_a must be positive and finite".into(),
                        ));
                    }
                    p.a_hop = p.g / ratio;
                }
                p.omega_d = self.omega_d_over_a.unwrap_or(0.0) * p.a_hop;
                p.omega_0 = self.omega_0_over_a.unwrap_or(0.0) * p.a_hop;
                p.kappa = self.kappa_over_a.unwrap_or(0.0) * p.a_hop;
                p.gamma = self.gamma_over_a.unwrap_or(0.0) * p.a_hop;
                p
            }
        };
        if let Some(n) = self.n_sites {
            params.n_sites = n;
        }
        if let Some(n) = self.n_max {
            params.n_max = n;
        }
        if let Some(b) = self.boundary {
            params.boundary = b;
        }
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsOnlyConfig {
    pub params: ParamsConfig,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceConfig {
    pub params: ParamsConfig,
    /// Sweep values; each row re-resolves the base params at this ratio.
    pub g_over_a_values: Vec<f64>,
    /// Initial logical bitstring, site 0 first; defaults to one excitation
    /// on site 0.
    pub initial: Option<String>,
}

impl Default for ReduceConfig {
    fn default() -> Self {
        ReduceConfig {
            params: ParamsConfig::default(),
            g_over_a_values: vec![10.0, 20.0, 50.0, 100.0],
            initial: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    pub params: ParamsConfig,
    /// Product state over the three sites, characters from {0, 1, +, -}.
    pub initial: String,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            params: ParamsConfig::default(),
            initial: "+0+".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepConfig {
    pub params: ParamsConfig,
    pub kappa_over_a_values: Vec<f64>,
    pub gamma_over_a_values: Vec<f64>,
    /// Heralded branch whose channel fidelity is reported.
    pub outcome: u8,
}

impl Default for NoiseSweepConfig {
    fn default() -> Self {
        NoiseSweepConfig {
            params: ParamsConfig::default(),
            kappa_over_a_values: vec![0.0, 0.025, 0.05, 0.075, 0.1],
            gamma_over_a_values: vec![0.1],
            outcome: 0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Native schedule text file.
    pub schedule: PathBuf,
    /// Initial logical bitstring, qubit 0 first.
    pub initial: String,
    /// Optional logical circuit; when given, each branch is scored against
    /// the ideal circuit output.
    #[serde(default)]
    pub circuit: Option<PathBuf>,
}

/// Basis index of a bitstring with the leftmost character as the most
/// significant bit.
pub fn parse_bitstring(s: &str, expected_len: usize) -> Result<usize> {
    if s.len() != expected_len {
        return Err(Error::InvalidParameter(format!(
            "bitstring '{s}' should have {expected_len} bits"
        )));
    }
    let mut index = 0usize;
    for ch in s.chars() {
        index = (index << 1)
            | match ch {
                '0' => 0,
                '1' => 1,
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "bitstring '{s}' may only contain 0 and 1"
                    )))
                }
            };
    }
    Ok(index)
}

/// Product state over sites from a string like "+0+"; leftmost character is
/// site 0.
pub fn parse_site_state(s: &str) -> Result<QuantumState> {
    if s.is_empty() {
        return Err(Error::InvalidParameter("initial state is empty".into()));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![c(1.0)];
    for ch in s.chars() {
        let site = match ch {
            '0' => [c(1.0), c(0.0)],
            '1' => [c(0.0), c(1.0)],
            '+' => [c(inv_sqrt2), c(inv_sqrt2)],
            '-' => [c(inv_sqrt2), -c(inv_sqrt2)],
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "initial state '{s}' may only contain 0, 1, + and -"
                )))
            }
        };
        let mut next = Vec::with_capacity(amps.len() * 2);
        for a in &amps {
            next.push(a * site[0]);
            next.push(a * site[1]);
        }
        amps = next;
    }
    QuantumState::new(CVector::from_vec(amps))
}

pub fn parse_outcome_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidParameter(format!(
                "forced outcomes '{s}' may only contain 0 and 1"
            ))),
        })
        .collect()
}
