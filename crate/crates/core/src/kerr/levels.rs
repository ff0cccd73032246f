use serde::Serialize;
use std::collections::BTreeMap;

use super::KerrTensor;
use crate::error::{Error, Result};

/// Which frequencies pin the diagonal Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Anchor {
    /// `omega_mu` are the tensor's mode frequencies, used verbatim.
    Bare,
    /// `omega_mu` are shifted by `beta_mu` so that each qubit's transition
    /// with all other modes in the ground state equals its quoted qubit
    /// frequency `omega - J`.
    #[default]
    Qubit,
}

/// One conditional transition of `target` from occupation `lower` to the
/// state with one more quantum in `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub label: String,
    pub target: usize,
    pub lower: Vec<u8>,
    pub frequency_ghz: f64,
}

impl Transition {
    pub fn upper(&self) -> Vec<u8> {
        let mut u = self.lower.clone();
        u[self.target] += 1;
        u
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDiagram {
    pub mode_labels: Vec<String>,
    pub frequencies_ghz: Vec<f64>,
    pub max_occupation: u8,
    #[serde(serialize_with = "serialize_energies")]
    pub energies: BTreeMap<Vec<u8>, f64>,
    /// `N 2^(N-1)` transitions inside the computational subspace.
    pub transitions: Vec<Transition>,
    /// `1 -> 2` transitions of each mode with the other modes in {0, 1}.
    pub leakage_transitions: Vec<Transition>,
}

fn serialize_energies<S: serde::Serializer>(
    map: &BTreeMap<Vec<u8>, f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        m.serialize_entry(&occupation_label(k), v)?;
    }
    m.end()
}

pub fn mode_letter(mu: usize) -> String {
    if mu < 26 {
        ((b'A' + mu as u8) as char).to_string()
    } else {
        format!("M{mu}")
    }
}

pub fn occupation_label(occ: &[u8]) -> String {
    occ.iter().map(|k| k.to_string()).collect()
}

/// `AB0C1`: target letter, then the other modes in cyclic order each with
/// its occupation.
pub fn transition_label(target: usize, lower: &[u8]) -> String {
    let n = lower.len();
    let mut s = mode_letter(target);
    for step in 1..n {
        let mu = (target + step) % n;
        s.push_str(&mode_letter(mu));
        s.push_str(&lower[mu].to_string());
    }
    s
}

impl LevelDiagram {
    pub fn energy(&self, occ: &[u8]) -> Option<f64> {
        self.energies.get(occ).copied()
    }

    pub fn transition(&self, label: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.label == label)
    }

    /// Diagram with `omega` chosen according to `anchor`.
    pub fn anchored(kerr: &KerrTensor, anchor: Anchor, max_occupation: u8, three_body: bool) -> Result<Self> {
        let frequencies: Vec<f64> = match anchor {
            Anchor::Bare => kerr.mode_frequencies_ghz.clone(),
            Anchor::Qubit => (0..kerr.mode_count()).map(|mu| kerr.mode_frequencies_ghz[mu] + kerr.beta[mu]).collect(),
        };
        build_level_diagram_with(kerr, &frequencies, max_occupation, three_body)
    }
}

/// Diagonal Hamiltonian including the three-body term.
pub fn build_level_diagram(kerr: &KerrTensor, frequencies: &[f64], max_occupation: u8) -> Result<LevelDiagram> {
    build_level_diagram_with(kerr, frequencies, max_occupation, true)
}

pub fn diagonal_energy(kerr: &KerrTensor, frequencies: &[f64], occ: &[u8], three_body: bool) -> f64 {
    let m = kerr.mode_count();
    let n: Vec<f64> = occ.iter().map(|&k| k as f64).collect();
    let mut e = 0.0;
    for mu in 0..m {
        e += (frequencies[mu] - kerr.beta[mu]) * n[mu] - kerr.self_kerr[mu] * n[mu] * n[mu];
        for nu in (mu + 1)..m {
            e -= 2.0 * kerr.cross_kerr[mu][nu] * n[mu] * n[nu];
        }
    }
    if three_body {
        for t in &kerr.three_body {
            let [a, b, c] = t.modes;
            e += t.ghz * n[a] * n[b] * n[c];
        }
    }
    e
}

pub fn build_level_diagram_with(
    kerr: &KerrTensor,
    frequencies: &[f64],
    max_occupation: u8,
    three_body: bool,
) -> Result<LevelDiagram> {
    let m = kerr.mode_count();
    if max_occupation < 1 {
        return Err(Error::Domain("max_occupation must be at least 1".into()));
    }
    if frequencies.len() != m {
        return Err(Error::config(format!("{} frequencies given for {m} modes", frequencies.len())));
    }
    let mut energies = BTreeMap::new();
    let levels = max_occupation as usize + 1;
    for index in 0..levels.pow(m as u32) {
        let mut occ = vec![0u8; m];
        let mut rest = index;
        for mu in (0..m).rev() {
            occ[mu] = (rest % levels) as u8;
            rest /= levels;
        }
        let e = diagonal_energy(kerr, frequencies, &occ, three_body);
        energies.insert(occ, e);
    }
    let mut transitions = Vec::new();
    let mut leakage = Vec::new();
    for target in 0..m {
        for controls in 0..(1usize << (m - 1)) {
            let mut lower = vec![0u8; m];
            let mut bit = m - 1;
            for mu in 0..m {
                if mu == target {
                    continue;
                }
                bit -= 1;
                lower[mu] = ((controls >> bit) & 1) as u8;
            }
            let e_lo = diagonal_energy(kerr, frequencies, &lower, three_body);
            let mut upper = lower.clone();
            upper[target] = 1;
            let e_up = diagonal_energy(kerr, frequencies, &upper, three_body);
            transitions.push(Transition {
                label: transition_label(target, &lower),
                target,
                lower: lower.clone(),
                frequency_ghz: e_up - e_lo,
            });
            let mut top = upper.clone();
            top[target] = 2;
            let e_top = diagonal_energy(kerr, frequencies, &top, three_body);
            leakage.push(Transition {
                label: format!("{}:1-2", transition_label(target, &upper)),
                target,
                lower: upper,
                frequency_ghz: e_top - e_up,
            });
        }
    }
    Ok(LevelDiagram {
        mode_labels: (0..m).map(mode_letter).collect(),
        frequencies_ghz: frequencies.to_vec(),
        max_occupation,
        energies,
        transitions,
        leakage_transitions: leakage,
    })
}
