//! Built-in device netlists.

use crate::error::{Error, Result};
use crate::netlist::{Branch, Netlist};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Netlist,
}

impl Preset {
    pub fn netlist(&self) -> Netlist {
        (self.build)()
    }
}

/// Ground capacitances alternating 0.01 / 0.02 fF.
pub fn alternating_ground_caps(nodes: usize) -> Vec<f64> {
    (0..nodes).map(|k| if k % 2 == 0 { 0.01 } else { 0.02 }).collect()
}

/// Four-node ring trimon: junctions `ej` around the ring, equal
/// nearest-neighbour capacitors `c_nn` and diagonal capacitors `c13`, `c24`.
pub fn trimon(ej: [f64; 4], c_nn: [f64; 4], c13: f64, c24: f64) -> Netlist {
    let ring = [(1, 2), (2, 3), (3, 4), (4, 1)];
    let mut branches: Vec<Branch> =
        ring.iter().enumerate().map(|(k, &(i, j))| Branch::junction(i, j, ej[k], c_nn[k])).collect();
    branches.push(Branch::capacitor(1, 3, c13));
    branches.push(Branch::capacitor(2, 4, c24));
    Netlist { nodes: 4, branches, ground_caps_ff: alternating_ground_caps(4), flux_phi0: 0.0 }
}

fn trimon_symmetric() -> Netlist {
    trimon([9.0; 4], [36.0; 4], 12.0, 24.0)
}

fn trimon_design_table() -> Netlist {
    trimon([8.794, 8.712, 8.042, 7.143], [34.0; 4], 11.2, 19.1)
}

/// Six-fold symmetric ring: every pair of nodes at ring distance d shares
/// the same capacitance.
fn ring6() -> Netlist {
    let n = 6;
    let by_distance = [0.0, 36.0, 12.0, 8.0];
    let mut branches = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let d = (j - i).min(n - (j - i));
            let ej = if d == 1 { 9.0 } else { 0.0 };
            branches.push(Branch { i, j, ej_ghz: ej, l_nh: None, c_ff: by_distance[d] });
        }
    }
    Netlist { nodes: n, branches, ground_caps_ff: vec![0.01; n], flux_phi0: 0.0 }
}

/// The symmetric trimon with node 1 split into nodes 1 and 5 joined by a
/// large capacitor, which removes the flux loop.
fn open_ring() -> Netlist {
    let branches = vec![
        Branch::junction(1, 2, 9.0, 36.0),
        Branch::junction(2, 3, 9.0, 36.0),
        Branch::junction(3, 4, 9.0, 36.0),
        Branch::junction(4, 5, 9.0, 36.0),
        Branch::capacitor(1, 3, 12.0),
        Branch::capacitor(2, 4, 24.0),
        Branch::capacitor(1, 5, 200.0),
    ];
    Netlist { nodes: 5, branches, ground_caps_ff: alternating_ground_caps(5), flux_phi0: 0.0 }
}

/// Unwrapped split ring: a chain of three junctions with weak
/// non-nearest-neighbour capacitors.
fn linear_chain() -> Netlist {
    let branches = vec![
        Branch::junction(1, 2, 9.0, 36.0),
        Branch::junction(2, 3, 9.0, 36.0),
        Branch::junction(3, 4, 9.0, 36.0),
        Branch::capacitor(1, 3, 4.0),
        Branch::capacitor(2, 4, 6.0),
        Branch::capacitor(1, 4, 2.0),
    ];
    Netlist { nodes: 4, branches, ground_caps_ff: alternating_ground_caps(4), flux_phi0: 0.0 }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "trimon-symmetric",
        description: "four-junction ring, EJ 9 GHz, C 36 fF, C13 12 fF, C24 24 fF",
        build: trimon_symmetric,
    },
    Preset {
        name: "trimon-design-table",
        description: "asymmetric trimon, EJ 8.794/8.712/8.042/7.143 GHz, C 34/11.2/19.1 fF",
        build: trimon_design_table,
    },
    Preset { name: "ring6", description: "six-fold symmetric six-junction ring", build: ring6 },
    Preset { name: "open-ring", description: "trimon with one pad split by a 200 fF capacitor", build: open_ring },
    Preset { name: "linear-chain", description: "three junctions in a line, four nodes", build: linear_chain },
];

pub fn preset(name: &str) -> Result<Netlist> {
    PRESETS.iter().find(|p| p.name == name).map(Preset::netlist).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::config(format!("unknown preset '{name}', available: {}", names.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in PRESETS {
            p.netlist().validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
        }
    }
}
