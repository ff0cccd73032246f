//! Lumped-element circuit description.
//!
//! Nodes are numbered from 1; node 0 is ground and is never listed
//! explicitly. Every node carries a capacitance to ground.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units;

/// One two-terminal element between nodes `i` and `j`. A branch may combine
/// a junction, a linear inductor and a capacitor in parallel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub i: usize,
    pub j: usize,
    #[serde(default)]
    pub ej_ghz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_nh: Option<f64>,
    #[serde(default)]
    pub c_ff: f64,
}

impl Branch {
    pub fn junction(i: usize, j: usize, ej_ghz: f64, c_ff: f64) -> Self {
        Branch { i, j, ej_ghz, l_nh: None, c_ff }
    }

    pub fn capacitor(i: usize, j: usize, c_ff: f64) -> Self {
        Branch { i, j, ej_ghz: 0.0, l_nh: None, c_ff }
    }

    pub fn is_junction(&self) -> bool {
        self.ej_ghz > 0.0
    }

    pub fn is_inductive(&self) -> bool {
        self.is_junction() || self.l_nh.is_some()
    }

    /// Linear inductive energy in GHz, zero without an inductor.
    pub fn linear_energy_ghz(&self) -> f64 {
        self.l_nh.map(units::inductive_energy_ghz).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub nodes: usize,
    pub branches: Vec<Branch>,
    pub ground_caps_ff: Vec<f64>,
    #[serde(default)]
    pub flux_phi0: f64,
}

/// Non-fatal remarks produced by validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning(pub String);

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl Netlist {
    pub fn from_json(text: &str) -> Result<Self> {
        let netlist: Netlist = serde_json::from_str(text)?;
        netlist.validate()?;
        Ok(netlist)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes")
    }

    pub fn with_flux(&self, flux_phi0: f64) -> Self {
        Netlist { flux_phi0, ..self.clone() }
    }

    /// Indices into `branches` of the Josephson junctions, in netlist order.
    pub fn junction_indices(&self) -> Vec<usize> {
        (0..self.branches.len()).filter(|&k| self.branches[k].is_junction()).collect()
    }

    pub fn junction_energies(&self) -> Vec<f64> {
        self.branches.iter().filter(|b| b.is_junction()).map(|b| b.ej_ghz).collect()
    }

    /// Checks structural and numerical consistency and returns warnings for
    /// suspicious but legal parameters.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        if self.nodes < 2 {
            return Err(Error::config(format!("netlist needs at least 2 nodes, got {}", self.nodes)));
        }
        if self.ground_caps_ff.len() != self.nodes {
            return Err(Error::config(format!(
                "ground_caps_ff has {} entries for {} nodes",
                self.ground_caps_ff.len(),
                self.nodes
            )));
        }
        for (n, &c) in self.ground_caps_ff.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::config(format!(
                    "capacitance matrix is not positive definite: node {} has ground capacitance {c} fF",
                    n + 1
                )));
            }
        }
        if !self.flux_phi0.is_finite() {
            return Err(Error::config("flux_phi0 must be finite"));
        }
        let mut pairs = BTreeSet::new();
        for (k, b) in self.branches.iter().enumerate() {
            let tag = format!("branch {k} ({}-{})", b.i, b.j);
            if b.i == 0 || b.j == 0 || b.i > self.nodes || b.j > self.nodes {
                return Err(Error::Topology(format!("{tag} references a node outside 1..={}", self.nodes)));
            }
            if b.i == b.j {
                return Err(Error::Topology(format!("{tag} connects a node to itself")));
            }
            if !pairs.insert((b.i.min(b.j), b.i.max(b.j))) {
                return Err(Error::Topology(format!("{tag} duplicates an earlier node pair")));
            }
            if !(b.ej_ghz.is_finite() && b.ej_ghz >= 0.0) {
                return Err(Error::config(format!("{tag}: ej_ghz must be finite and non-negative")));
            }
            if !(b.c_ff.is_finite() && b.c_ff >= 0.0) {
                return Err(Error::config(format!("{tag}: c_ff must be finite and non-negative")));
            }
            if let Some(l) = b.l_nh {
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::config(format!("{tag}: l_nh must be positive")));
                }
            }
        }
        if self.flux_phi0 != 0.0 && self.junction_indices().is_empty() {
            return Err(Error::Topology("external flux requires a junction loop, netlist has no junctions".into()));
        }

        let mut warnings = Vec::new();
        for (k, b) in self.branches.iter().enumerate() {
            if b.is_junction() {
                let c_total = b.c_ff + self.ground_caps_ff[b.i - 1].min(self.ground_caps_ff[b.j - 1]);
                let ratio = b.ej_ghz / units::charging_energy_ghz(c_total);
                if ratio < 20.0 {
                    warnings.push(Warning(format!(
                        "branch {k}: EJ/EC = {ratio:.1} is low; charge dispersion is neglected"
                    )));
                }
            }
        }
        if self.branches.iter().all(|b| !b.is_inductive()) {
            warnings.push(Warning("netlist has no inductive branch; every mode is a zero mode".into()));
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Netlist {
        Netlist {
            nodes: 3,
            branches: vec![
                Branch::junction(1, 2, 10.0, 30.0),
                Branch::junction(2, 3, 10.0, 30.0),
                Branch::junction(3, 1, 10.0, 30.0),
            ],
            ground_caps_ff: vec![0.01; 3],
            flux_phi0: 0.0,
        }
    }

    #[test]
    fn json_keys_round_trip() {
        let n = ring();
        let text = n.to_json();
        for key in ["\"nodes\"", "\"branches\"", "\"ej_ghz\"", "\"c_ff\"", "\"ground_caps_ff\"", "\"flux_phi0\""] {
            assert!(text.contains(key), "{key} missing");
        }
        assert_eq!(Netlist::from_json(&text).unwrap(), n);
    }

    #[test]
    fn rejects_zero_ground_cap_naming_node() {
        let mut n = ring();
        n.ground_caps_ff[1] = 0.0;
        let err = n.validate().unwrap_err().to_string();
        assert!(err.contains("node 2"), "{err}");
    }

    #[test]
    fn rejects_duplicate_pair() {
        let mut n = ring();
        n.branches.push(Branch::capacitor(2, 1, 3.0));
        assert!(matches!(n.validate(), Err(Error::Topology(_))));
    }

    #[test]
    fn flux_without_junctions_is_a_topology_error() {
        let mut n = ring();
        for b in &mut n.branches {
            b.ej_ghz = 0.0;
        }
        n.flux_phi0 = 0.1;
        assert!(matches!(n.validate(), Err(Error::Topology(_))));
    }

    #[test]
    fn parse_error_reports_line() {
        let err = Netlist::from_json("{\n \"nodes\": 3,\n \"branches\": [,]\n}").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
