//! Nonlinear expansion of the Josephson potential and Kerr extraction.
//!
//! The potential is expanded in normal-mode coordinates, each coordinate
//! is replaced by `zpf (a + a^dag)`, and the energy-conserving part is
//! mapped onto the diagonal Hamiltonian
//!
//! ```text
//! H/h = sum (w - beta) n - sum J n^2 - sum 2 J_mn n_m n_n + sum J_mnz n_m n_n n_z
//! ```

mod levels;
pub mod polynomial;
mod sweep;

pub use levels::{
    build_level_diagram, diagonal_energy, mode_letter, occupation_label, transition_label, Anchor, LevelDiagram,
    Transition,
};
pub use sweep::{flux_sweep, labeled_kerr, sweep_csv, SweepPoint, SWEEP_HEADER};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::circuit::{solve_dc_phases, ModeSolution};
use crate::error::{Error, Result};
use crate::netlist::Netlist;
use crate::units;
use polynomial::{add_linear_power, diagonal_moment, factorial, Polynomial};

/// One junction seen from the mode coordinates: its phase drop is
/// `delta + sum_mu coupling[mu] * Phi_mu`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JunctionCoupling {
    pub branch: usize,
    pub ej_ghz: f64,
    pub delta: f64,
    pub coupling: Vec<f64>,
}

/// Taylor expansion of the potential about its minimum, in rad/ns per power
/// of reduced mode flux; degrees 2 through `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialExpansion {
    pub order: usize,
    pub frequencies_ghz: Vec<f64>,
    pub zero_point: Vec<f64>,
    pub junctions: Vec<JunctionCoupling>,
    pub terms: Polynomial,
}

impl PotentialExpansion {
    pub fn mode_count(&self) -> usize {
        self.frequencies_ghz.len()
    }

    /// Full junction potential at mode coordinates `phi`, without the
    /// linear inductors; the finite-difference reference for `terms`.
    pub fn junction_potential(&self, phi: &[f64]) -> f64 {
        self.junctions
            .iter()
            .map(|j| {
                let x: f64 = j.coupling.iter().zip(phi).map(|(c, p)| c * p).sum();
                -units::angular(j.ej_ghz) * (x + j.delta).cos()
            })
            .sum()
    }
}

pub fn expand_potential(netlist: &Netlist, modes: &ModeSolution, order: usize) -> Result<PotentialExpansion> {
    if order % 2 == 1 || !(4..=8).contains(&order) {
        return Err(Error::Domain(format!("expansion order must be 4, 6 or 8, got {order}")));
    }
    if modes.vectors.nrows() != netlist.nodes {
        return Err(Error::config("mode solution does not match the netlist node count"));
    }
    let dc = solve_dc_phases(netlist)?;
    let m = modes.mode_count();
    let mut terms = Polynomial::new(m);
    let mut junctions = Vec::new();
    for (k, b) in netlist.branches.iter().enumerate() {
        if !b.is_inductive() {
            continue;
        }
        let coupling: Vec<f64> = (0..m).map(|mu| modes.vectors[(b.i - 1, mu)] - modes.vectors[(b.j - 1, mu)]).collect();
        let el = units::angular(b.linear_energy_ghz());
        if el > 0.0 {
            add_linear_power(&mut terms, &coupling, 2, 0.5 * el);
        }
        if b.is_junction() {
            let ej = units::angular(b.ej_ghz);
            let delta = dc.branch[k];
            // -EJ cos(x + delta) = -EJ sum_k Re(e^{i delta} i^k) x^k / k!
            for p in 2..=order {
                let re = match p % 4 {
                    0 => delta.cos(),
                    1 => -delta.sin(),
                    2 => -delta.cos(),
                    _ => delta.sin(),
                };
                add_linear_power(&mut terms, &coupling, p, -ej * re / factorial(p));
            }
            junctions.push(JunctionCoupling { branch: k, ej_ghz: b.ej_ghz, delta, coupling });
        }
    }
    terms.terms.retain(|_, c| *c != 0.0);
    Ok(PotentialExpansion {
        order,
        frequencies_ghz: modes.frequencies_ghz.clone(),
        zero_point: modes.zero_point_fluxes(),
        junctions,
        terms,
    })
}

/// How the Fock-state energies behind the Kerr coefficients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KerrOptions {
    /// Highest power of the potential kept.
    pub order: usize,
    /// Rayleigh-Schrodinger order in the nonlinear potential. Order 1 keeps
    /// only the energy-conserving terms; higher orders add the virtual
    /// transitions driven by the remaining terms.
    pub perturbation: u8,
}

impl Default for KerrOptions {
    fn default() -> Self {
        KerrOptions { order: 4, perturbation: 1 }
    }
}

impl KerrOptions {
    /// Every correction of relative size (EC/EJ)^(1/2) beyond the quartic
    /// energy-conserving terms: sixth order, second-order perturbation.
    pub fn sixth() -> Self {
        KerrOptions { order: 6, perturbation: 2 }
    }

    /// Eighth order with fourth-order perturbation: every correction
    /// through (EC/EJ)^(3/2) relative to the quartic terms at zero flux
    /// plus the leading part of the next order.
    pub fn dressed() -> Self {
        KerrOptions { order: 8, perturbation: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeBody {
    pub modes: [usize; 3],
    pub ghz: f64,
}

/// Coefficient of `(a+a^dag)_mu (a+a^dag)_nu (a+a^dag)_zeta`: the cubic
/// potential coefficient times the three zero-point fluxes, in GHz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeWave {
    pub modes: [usize; 3],
    pub ghz: f64,
}

/// Kerr coefficients in GHz. Mode order follows the mode solution used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KerrTensor {
    /// `omega_mu` entering the diagonal Hamiltonian; the linear mode
    /// frequencies unless the extraction was dressed.
    pub mode_frequencies_ghz: Vec<f64>,
    pub linear_frequencies_ghz: Vec<f64>,
    pub self_kerr: Vec<f64>,
    /// Symmetric with zero diagonal.
    pub cross_kerr: Vec<Vec<f64>>,
    pub three_body: Vec<ThreeBody>,
    pub three_wave: Vec<ThreeWave>,
    pub beta: Vec<f64>,
    pub options: KerrOptions,
    pub warnings: Vec<String>,
}

impl KerrTensor {
    pub fn mode_count(&self) -> usize {
        self.self_kerr.len()
    }

    pub fn cross(&self, mu: usize, nu: usize) -> f64 {
        self.cross_kerr[mu][nu]
    }

    pub fn three_body_term(&self, modes: [usize; 3]) -> f64 {
        let mut key = modes;
        key.sort_unstable();
        self.three_body.iter().find(|t| t.modes == key).map(|t| t.ghz).unwrap_or(0.0)
    }

    pub fn xi(&self, modes: [usize; 3]) -> f64 {
        let mut key = modes;
        key.sort_unstable();
        self.three_wave.iter().find(|t| t.modes == key).map(|t| t.ghz).unwrap_or(0.0)
    }

    pub fn anharmonicity(&self, mu: usize) -> f64 {
        -2.0 * self.self_kerr[mu]
    }

    /// `omega - J`: the frequency quoted for a qubit in isolation.
    pub fn qubit_frequencies(&self) -> Vec<f64> {
        (0..self.mode_count()).map(|mu| self.mode_frequencies_ghz[mu] - self.self_kerr[mu]).collect()
    }

    /// `omega - 2J - sum J_mn`: the 0 -> 1 transition of the diagonal
    /// Hamiltonian with every other mode in its ground state.
    pub fn ground_transitions(&self) -> Vec<f64> {
        (0..self.mode_count()).map(|mu| self.mode_frequencies_ghz[mu] - self.beta[mu] - self.self_kerr[mu]).collect()
    }

    /// Reorders modes: new mode `k` is old mode `order[k]`.
    pub fn reordered(&self, order: &[usize]) -> KerrTensor {
        let pos: HashMap<usize, usize> = order.iter().enumerate().map(|(k, &o)| (o, k)).collect();
        let remap = |modes: [usize; 3]| {
            let mut m = modes.map(|x| pos[&x]);
            m.sort_unstable();
            m
        };
        KerrTensor {
            mode_frequencies_ghz: order.iter().map(|&o| self.mode_frequencies_ghz[o]).collect(),
            linear_frequencies_ghz: order.iter().map(|&o| self.linear_frequencies_ghz[o]).collect(),
            self_kerr: order.iter().map(|&o| self.self_kerr[o]).collect(),
            cross_kerr: order.iter().map(|&a| order.iter().map(|&b| self.cross_kerr[a][b]).collect()).collect(),
            three_body: self.three_body.iter().map(|t| ThreeBody { modes: remap(t.modes), ghz: t.ghz }).collect(),
            three_wave: self.three_wave.iter().map(|t| ThreeWave { modes: remap(t.modes), ghz: t.ghz }).collect(),
            beta: order.iter().map(|&o| self.beta[o]).collect(),
            options: self.options,
            warnings: self.warnings.clone(),
        }
    }
}

/// Energy-conserving part of the expansion as a polynomial in occupation
/// numbers, in rad/ns, excluding the harmonic terms.
pub fn rwa_polynomial(expansion: &PotentialExpansion, max_degree: usize) -> Polynomial {
    let m = expansion.mode_count();
    let mut out = Polynomial::new(m);
    let moments: Vec<Vec<f64>> = (0..=max_degree / 2).map(diagonal_moment).collect();
    for (e, &c) in &expansion.terms.terms {
        let degree: usize = e.iter().map(|&x| x as usize).sum();
        if degree <= 2 || degree > max_degree || e.iter().any(|&x| x % 2 == 1) {
            continue;
        }
        let scale = c * e.iter().zip(&expansion.zero_point).map(|(&k, &z)| z.powi(k as i32)).product::<f64>();
        // Product of single-mode diagonal moments.
        let mut partial: Vec<(Vec<u8>, f64)> = vec![(vec![], scale)];
        for &k in e {
            let moment = &moments[k as usize / 2];
            let mut next = Vec::with_capacity(partial.len() * moment.len());
            for (exp, val) in &partial {
                for (p, &mc) in moment.iter().enumerate() {
                    let mut ex = exp.clone();
                    ex.push(p as u8);
                    next.push((ex, val * mc));
                }
            }
            partial = next;
        }
        for (ex, val) in partial {
            out.add(ex, val);
        }
    }
    out
}

/// `(a + a^dag)^k |n>` as dense amplitudes over occupations `0..=n+k`.
fn ladder_power(k: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + k + 1];
    v[n] = 1.0;
    for _ in 0..k {
        let mut w = vec![0.0; v.len()];
        for (m, &a) in v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            if m > 0 {
                w[m - 1] += a * (m as f64).sqrt();
            }
            if m + 1 < w.len() {
                w[m + 1] += a * ((m + 1) as f64).sqrt();
            }
        }
        v = w;
    }
    v
}

/// Multiplicative hash for packed occupation keys.
#[derive(Default, Clone, Copy)]
struct PackedHasher(u64);

impl std::hash::Hasher for PackedHasher {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0.rotate_left(8) ^ b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        }
    }
    fn write_u64(&mut self, x: u64) {
        self.0 = (x ^ (x >> 29)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        self.0 ^= self.0 >> 32;
    }
}

type PackedMap = HashMap<u64, f64, std::hash::BuildHasherDefault<PackedHasher>>;

/// Occupations packed one byte per mode; at most 8 modes.
fn pack(occ: &[u8]) -> u64 {
    occ.iter().enumerate().fold(0u64, |k, (mu, &n)| k | (n as u64) << (8 * mu))
}

fn unpack(key: u64, m: usize) -> Vec<u8> {
    (0..m).map(|mu| (key >> (8 * mu)) as u8).collect()
}

/// Nonlinear part of the expansion (degree >= 3) as an operator on Fock
/// states, each coordinate replaced by `zpf (a + a^dag)`.
struct FockOperator {
    modes: usize,
    terms: Vec<(Vec<u8>, f64)>,
    /// `ladder[k][n]`: nonzero `(m, <m|X^k|n>)`.
    ladder: Vec<Vec<Vec<(u8, f64)>>>,
}

impl FockOperator {
    fn new(expansion: &PotentialExpansion) -> Self {
        let terms = expansion
            .terms
            .terms
            .iter()
            .filter(|(e, _)| e.iter().map(|&x| x as usize).sum::<usize>() >= 3)
            .map(|(e, &c)| {
                let z: f64 = e.iter().zip(&expansion.zero_point).map(|(&k, &z)| z.powi(k as i32)).product();
                (e.clone(), c * z)
            })
            .collect();
        let ladder = (0..=expansion.order).map(|_| Vec::new()).collect();
        FockOperator { modes: expansion.mode_count(), terms, ladder }
    }

    fn column(&mut self, k: usize, n: usize) -> &[(u8, f64)] {
        while self.ladder[k].len() <= n {
            let n0 = self.ladder[k].len();
            let dense = ladder_power(k, n0);
            let sparse = dense.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(m, &a)| (m as u8, a)).collect();
            self.ladder[k].push(sparse);
        }
        &self.ladder[k][n]
    }

    fn apply(&mut self, state: &PackedMap) -> PackedMap {
        let m = self.modes;
        let mut out = PackedMap::default();
        let terms = std::mem::take(&mut self.terms);
        let mut columns: Vec<Vec<(u8, f64)>> = vec![Vec::new(); m];
        for (&key, &amp) in state {
            let occ = unpack(key, m);
            for (e, c) in &terms {
                for mu in 0..m {
                    columns[mu] = self.column(e[mu] as usize, occ[mu] as usize).to_vec();
                }
                fn walk(columns: &[Vec<(u8, f64)>], mu: usize, key: u64, value: f64, out: &mut PackedMap) {
                    if mu == columns.len() {
                        *out.entry(key).or_insert(0.0) += value;
                        return;
                    }
                    for &(occ, a) in &columns[mu] {
                        walk(columns, mu + 1, key | (occ as u64) << (8 * mu), value * a, out);
                    }
                }
                walk(&columns, 0, 0, amp * c, &mut out);
            }
        }
        self.terms = terms;
        out
    }
}

/// Rayleigh-Schrodinger corrections of orders 2 through `order` for Fock
/// state `n`, in rad/ns, by the recursion
/// `psi_k = R (V psi_{k-1} - sum_j E_j psi_{k-j})`, `E_k = <n|V|psi_{k-1}>`.
fn perturbative_shift(op: &mut FockOperator, omega: &[f64], n: &[u8], order: u8) -> Result<f64> {
    let m = n.len();
    let e0 = |key: u64| (0..m).map(|mu| ((key >> (8 * mu)) & 0xff) as f64 * omega[mu]).sum::<f64>();
    let home = pack(n);
    let en = e0(home);
    let mut reference = PackedMap::default();
    reference.insert(home, 1.0);
    let mut psi: Vec<PackedMap> = vec![reference];
    let mut energies: Vec<f64> = vec![0.0];
    for k in 1..=order as usize {
        let v_psi = op.apply(&psi[k - 1]);
        energies.push(v_psi.get(&home).copied().unwrap_or(0.0));
        if k == order as usize {
            break;
        }
        let mut next = v_psi;
        next.remove(&home);
        for j in 1..=k {
            let e = energies[j];
            for (&key, &c) in &psi[k - j] {
                if key != home {
                    *next.entry(key).or_insert(0.0) -= e * c;
                }
            }
        }
        let mut resolved = PackedMap::default();
        resolved.reserve(next.len());
        for (key, a) in next {
            if a.abs() < 1e-13 {
                continue;
            }
            let gap = en - e0(key);
            if gap.abs() < 1e-9 || (k == 1 && (a / gap).abs() > 0.3) {
                return Err(Error::Resonance(format!(
                    "state {:?} mixes with {:?} (matrix element {:.3e}, detuning {:.3e} rad/ns); modes are too close for perturbative dressing",
                    n,
                    unpack(key, m),
                    a,
                    gap
                )));
            }
            resolved.insert(key, a / gap);
        }
        psi.push(resolved);
    }
    Ok(energies[2..].iter().sum())
}

/// Occupation vector with the listed modes excited once (`twice` adds a
/// second quantum to its mode).
fn occupation(m: usize, excited: &[usize]) -> Vec<u8> {
    let mut o = vec![0u8; m];
    for &k in excited {
        o[k] += 1;
    }
    o
}

pub fn extract_kerr(expansion: &PotentialExpansion, options: KerrOptions) -> Result<KerrTensor> {
    if options.order < 4 || options.order % 2 == 1 || options.order > expansion.order {
        return Err(Error::Domain(format!(
            "extraction order {} needs an even expansion order between 4 and {}",
            options.order, expansion.order
        )));
    }
    if !(1..=6).contains(&options.perturbation) {
        return Err(Error::Domain(format!("perturbation order must be between 1 and 6, got {}", options.perturbation)));
    }
    let truncated;
    let expansion = if expansion.order > options.order {
        let mut t = expansion.clone();
        t.order = options.order;
        t.terms.terms.retain(|e, _| e.iter().map(|&x| x as usize).sum::<usize>() <= options.order);
        truncated = t;
        &truncated
    } else {
        expansion
    };
    if options.perturbation > 1 && expansion.mode_count() > 8 {
        return Err(Error::Domain("perturbative dressing supports at most 8 modes".into()));
    }
    let mut op = FockOperator::new(expansion);
    let m = expansion.mode_count();
    let omega: Vec<f64> = expansion.frequencies_ghz.iter().map(|&f| units::angular(f)).collect();
    let rwa = rwa_polynomial(expansion, options.order);
    let mut cache: HashMap<Vec<u8>, f64> = HashMap::new();
    let mut energy = |occ: Vec<u8>| -> Result<f64> {
        if let Some(&e) = cache.get(&occ) {
            return Ok(e);
        }
        let x: Vec<f64> = occ.iter().map(|&k| k as f64).collect();
        let mut e = occ.iter().zip(&omega).map(|(&k, &w)| k as f64 * w).sum::<f64>() + rwa.evaluate(&x);
        if options.perturbation > 1 {
            e += perturbative_shift(&mut op, &omega, &occ, options.perturbation)?;
        }
        cache.insert(occ, e);
        Ok(e)
    };
    let e0 = energy(occupation(m, &[]))?;
    let mut single = vec![0.0; m];
    let mut self_kerr = vec![0.0; m];
    for mu in 0..m {
        single[mu] = energy(occupation(m, &[mu]))? - e0;
        let double = energy(occupation(m, &[mu, mu]))? - e0;
        self_kerr[mu] = -(double - 2.0 * single[mu]) / 2.0;
    }
    let mut pair = vec![vec![0.0; m]; m];
    let mut cross = vec![vec![0.0; m]; m];
    for mu in 0..m {
        for nu in (mu + 1)..m {
            pair[mu][nu] = energy(occupation(m, &[mu, nu]))? - e0;
            pair[nu][mu] = pair[mu][nu];
            let j = -(pair[mu][nu] - single[mu] - single[nu]) / 2.0;
            cross[mu][nu] = j;
            cross[nu][mu] = j;
        }
    }
    let mut three_body = Vec::new();
    for a in 0..m {
        for b in (a + 1)..m {
            for c in (b + 1)..m {
                let triple = energy(occupation(m, &[a, b, c]))? - e0;
                let value = triple - pair[a][b] - pair[b][c] - pair[a][c] + single[a] + single[b] + single[c];
                three_body.push(ThreeBody { modes: [a, b, c], ghz: units::ghz(value) });
            }
        }
    }
    let self_kerr: Vec<f64> = self_kerr.into_iter().map(units::ghz).collect();
    let cross_kerr: Vec<Vec<f64>> = cross.into_iter().map(|r| r.into_iter().map(units::ghz).collect()).collect();
    let beta: Vec<f64> = (0..m).map(|mu| self_kerr[mu] + cross_kerr[mu].iter().sum::<f64>()).collect();
    let mode_frequencies_ghz: Vec<f64> = if options.perturbation > 1 || options.order > 4 {
        (0..m).map(|mu| units::ghz(single[mu]) + self_kerr[mu] + beta[mu]).collect()
    } else {
        expansion.frequencies_ghz.clone()
    };
    let mut three_wave = Vec::new();
    for (e, &c) in expansion.terms.degree(3) {
        let mut modes = Vec::with_capacity(3);
        for (mu, &k) in e.iter().enumerate() {
            modes.extend(std::iter::repeat(mu).take(k as usize));
        }
        let z: f64 = modes.iter().map(|&mu| expansion.zero_point[mu]).product();
        if (c * z).abs() > 1e-15 {
            three_wave.push(ThreeWave { modes: [modes[0], modes[1], modes[2]], ghz: units::ghz(c * z) });
        }
    }
    let mut warnings = Vec::new();
    for mu in 0..m {
        let ratio = self_kerr[mu] / expansion.frequencies_ghz[mu];
        if ratio > 0.05 {
            warnings.push(format!(
                "mode {mu}: self-Kerr is {:.1}% of the mode frequency; weak-anharmonicity expansion is unreliable",
                100.0 * ratio
            ));
        }
    }
    Ok(KerrTensor {
        mode_frequencies_ghz,
        linear_frequencies_ghz: expansion.frequencies_ghz.clone(),
        self_kerr,
        cross_kerr,
        three_body,
        three_wave,
        beta,
        options,
        warnings,
    })
}

/// Expansion and extraction in one step, at the order the options need.
pub fn kerr_for(netlist: &Netlist, modes: &ModeSolution, options: KerrOptions) -> Result<KerrTensor> {
    let expansion = expand_potential(netlist, modes, options.order)?;
    extract_kerr(&expansion, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::analyze_modes;
    use crate::presets;

    #[test]
    fn ladder_power_matches_moments() {
        for n in 0..4 {
            let v = ladder_power(4, n);
            let expected = 6.0 * (n * n) as f64 + 6.0 * n as f64 + 3.0;
            // <n|X^4|n> = |X^2|n>|^2
            let x2 = ladder_power(2, n);
            assert!((x2.iter().map(|a| a * a).sum::<f64>() - expected).abs() < 1e-12);
            assert!((v[n] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn order_must_be_even_in_range() {
        let n = presets::preset("trimon-symmetric").unwrap();
        let (_, modes) = analyze_modes(&n).unwrap();
        for bad in [3, 5, 2, 10] {
            assert!(matches!(expand_potential(&n, &modes, bad), Err(Error::Domain(_))));
        }
    }
}
